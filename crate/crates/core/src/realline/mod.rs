//! Real functions on the line and the numerical substrate shared by every
//! other module: adaptive quadrature, improper integrals with divergence
//! grading, monotone root finding and expanding-grid suprema.

pub mod expr;
pub mod grid;
pub mod quad;
pub mod root;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
pub use expr::Expr;
pub use grid::{grade_vanishing, inf_on_expanding_grid, sup_on_expanding_grid, GridConfig, SupResult, Trend};
pub use quad::{
    integrate, integrate_improper, integrate_tail, integrate_with_breaks, verify_mean_identity, Direction, IntegralResult,
    QuadratureConfig, Side, Verdict,
};
pub use root::{find_root_monotone, find_root_monotone_with};

/// Anything that can be evaluated pointwise on the real line.
pub trait ScalarFn: Send + Sync {
    fn eval(&self, x: f64) -> Result<f64>;
}

impl<F> ScalarFn for F
where
    F: Fn(f64) -> Result<f64> + Send + Sync,
{
    fn eval(&self, x: f64) -> Result<f64> {
        self(x)
    }
}

pub type SharedFn = Arc<dyn ScalarFn>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Positivity {
    Nonnegative,
    StrictlyPositive,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parity {
    Even,
    Odd,
    #[default]
    None,
}

/// A parsed expression in `x` together with declared (and checkable)
/// sign and symmetry metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct RealFunction {
    expr: Expr,
    positivity: Positivity,
    parity: Parity,
}

pub fn parse_function(text: &str) -> Result<RealFunction> {
    Ok(RealFunction::new(expr::parse_expr(text)?))
}

impl RealFunction {
    pub fn new(expr: Expr) -> Self {
        Self { expr, positivity: Positivity::Unknown, parity: Parity::None }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Expr::Num(c))
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_function(text)
    }

    pub fn with_positivity(mut self, p: Positivity) -> Self {
        self.positivity = p;
        self
    }

    pub fn with_parity(mut self, p: Parity) -> Self {
        self.parity = p;
        self
    }

    pub fn positivity(&self) -> Positivity {
        self.positivity
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Finite value or a domain error; never NaN or infinity.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = self.expr.eval_raw(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain { x })
        }
    }

    pub fn derivative(&self) -> RealFunction {
        RealFunction::new(self.expr.derivative())
    }

    /// Spot-checks the declared positivity and parity at `probes`.
    pub fn check_claims(&self, probes: &[f64], tol: f64) -> Result<()> {
        for &x in probes {
            let fx = self.eval(x)?;
            match self.positivity {
                Positivity::Nonnegative if fx < 0.0 => {
                    return Err(Error::Precondition(format!(
                        "`{self}` declared nonnegative but f({x}) = {fx}"
                    )))
                }
                Positivity::StrictlyPositive if fx <= 0.0 => {
                    return Err(Error::Precondition(format!(
                        "`{self}` declared strictly positive but f({x}) = {fx}"
                    )))
                }
                _ => {}
            }
            let sign = match self.parity {
                Parity::Even => 1.0,
                Parity::Odd => -1.0,
                Parity::None => continue,
            };
            let fm = self.eval(-x)?;
            if (fx - sign * fm).abs() > tol * (1.0 + fx.abs()) {
                return Err(Error::Precondition(format!(
                    "`{self}` declared {:?} but f({x}) = {fx}, f({}) = {fm}",
                    self.parity, -x
                )));
            }
        }
        Ok(())
    }
}

impl ScalarFn for RealFunction {
    fn eval(&self, x: f64) -> Result<f64> {
        RealFunction::eval(self, x)
    }
}

impl fmt::Display for RealFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

/// Default probe abscissae for claim checks.
pub fn claim_probes() -> Vec<f64> {
    let mut v = vec![0.0, 0.25, 0.5, 1.0, 1.5, 2.5];
    let mut r = 4.0;
    while r <= 512.0 {
        v.push(r);
        v.push(r * 1.37);
        r *= 2.0;
    }
    v
}
