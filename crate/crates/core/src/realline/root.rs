use crate::error::{Error, Result};

/// Root of a continuous nondecreasing `g` on `[lo, hi]` with
/// `g(lo) ≤ 0 ≤ g(hi)`, to `|g| ≤ tol` or bracket width `≤ tol`.
pub fn find_root_monotone<G>(g: G, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    find_root_monotone_with(g, lo, hi, tol, tol)
}

/// Illinois-modified regula falsi with a bisection fallback whenever the
/// secant step fails to halve the bracket.
pub fn find_root_monotone_with<G>(g: G, lo: f64, hi: f64, x_tol: f64, f_tol: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let (mut ga, mut gb) = (g(a)?, g(b)?);
    if ga > 0.0 || gb < 0.0 {
        return Err(Error::InvalidBracket { lo, hi, g_lo: ga, g_hi: gb });
    }
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    let mut side = 0i8;
    let mut width = b - a;
    for _ in 0..400 {
        if b - a <= x_tol {
            break;
        }
        let secant = (a * gb - b * ga) / (gb - ga);
        let mid = 0.5 * (a + b);
        let c = if secant > a && secant < b { secant } else { mid };
        let gc = g(c)?;
        if gc.abs() <= f_tol {
            return Ok(c);
        }
        if gc < 0.0 {
            a = c;
            ga = gc;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            gb = gc;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
        // force a bisection if the bracket is not shrinking fast enough
        if b - a > 0.5 * width {
            let m = 0.5 * (a + b);
            let gm = g(m)?;
            if gm.abs() <= f_tol {
                return Ok(m);
            }
            if gm < 0.0 {
                a = m;
                ga = gm;
            } else {
                b = m;
                gb = gm;
            }
            side = 0;
        }
        width = b - a;
    }
    Ok(if ga.abs() < gb.abs() { a } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebraic_examples() {
        let r = find_root_monotone(|e| Ok(2.0 * e * e - 2.0), 0.0, 10.0, 1e-13).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let r = find_root_monotone(|e| Ok(e - 3.0), 0.0, 10.0, 1e-13).unwrap();
        assert!((r - 3.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_bracket() {
        let e = find_root_monotone(|e| Ok(e + 1.0), 0.0, 10.0, 1e-10);
        assert!(matches!(e, Err(Error::InvalidBracket { .. })));
    }

    #[test]
    fn refining_tolerance_keeps_the_root() {
        let g = |e: f64| Ok(e.powi(5) + e - 7.0);
        let r1 = find_root_monotone(g, 0.0, 3.0, 1e-8).unwrap();
        let r2 = find_root_monotone(g, 0.0, 3.0, 1e-9).unwrap();
        assert!((r1 - r2).abs() <= 1e-8);
    }

    #[test]
    fn flat_then_steep() {
        // nearly flat on most of the bracket, steep near the root
        let g = |e: f64| Ok((50.0 * (e - 9.0)).tanh());
        let r = find_root_monotone(g, 0.0, 10.0, 1e-12).unwrap();
        assert!((r - 9.0).abs() < 1e-11);
    }
}
