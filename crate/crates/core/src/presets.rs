//! Bundled problem presets.

use std::f64::consts::PI;

use crate::error::Result;
use crate::fss::FssConfig;
use crate::localscale::Potential;
use crate::realline::{Parity, Positivity, RealFunction};

pub const EXAMPLE6_Q1: &str = "1/sqrt(1+x^2)";
pub const EXAMPLE6_Q2: &str = "cos(exp(abs(x)))/sqrt(1+x^2)";
pub const EXAMPLE6_Q: &str = "1/sqrt(1+x^2) + cos(exp(abs(x)))/sqrt(1+x^2)";
pub const EXAMPLE6_MU: &str = "1/(sqrt(1+x^2)*log(2+x^2))";
pub const EXAMPLE6_THETA: &str = "1/log(2+x^2)";

/// Default radius beyond which the oscillating part `cos(e^|x|)/√(1+x²)` is
/// dropped.
///
/// Double precision cannot resolve `cos(e^x)` far out (at `x = 30` one
/// period is about `6e-13` wide), so the oscillating part is replaced by
/// zero past a zero of `cos(e^c)` near `x = 6`, which keeps `q`
/// continuous. Its integral over any interval beyond `c` is at most
/// [`oscillation_envelope`]`(c)`.
pub fn example6_cutoff() -> f64 {
    oscillation_cutoff_near(6.0)
}

/// The largest zero `c = ln((k + ½)π)` of `cos(e^c)` not exceeding `near`.
pub fn oscillation_cutoff_near(near: f64) -> f64 {
    let k = (near.exp() / PI - 0.5).floor().max(0.0);
    ((k + 0.5) * PI).ln()
}

/// Bound on `|∫_α^β cos(e^t)/√(1+t²) dt|` over `c ≤ α < β`, from the
/// second mean value theorem: `2 e^{-c}/√(1+c²)`.
pub fn oscillation_envelope(c: f64) -> f64 {
    2.0 * (-c).exp() / (1.0 + c * c).sqrt()
}

#[derive(Debug, Clone)]
pub struct Example6 {
    pub q1: RealFunction,
    pub q2: RealFunction,
    pub mu: RealFunction,
    pub theta: RealFunction,
    pub cutoff: f64,
}

impl Example6 {
    pub fn new() -> Result<Self> {
        Self::with_cutoff(example6_cutoff())
    }

    pub fn with_cutoff(cutoff: f64) -> Result<Self> {
        let even = |s: &str, pos| -> Result<RealFunction> {
            Ok(RealFunction::parse(s)?.with_parity(Parity::Even).with_positivity(pos))
        };
        Ok(Self {
            q1: even(EXAMPLE6_Q1, Positivity::StrictlyPositive)?,
            q2: even(EXAMPLE6_Q2, Positivity::Unknown)?,
            mu: even(EXAMPLE6_MU, Positivity::StrictlyPositive)?,
            theta: even(EXAMPLE6_THETA, Positivity::StrictlyPositive)?,
            cutoff,
        })
    }

    /// Grid for the fundamental system: `cos(e^x)` near the cutoff has a
    /// period of about `0.0156`, so the step is chosen to give ~30 nodes per
    /// period.
    pub fn fss_config(&self) -> FssConfig {
        FssConfig { step: 5e-4, ..FssConfig::default() }
    }

    pub fn potential(&self) -> Potential {
        Potential::split(self.q1.clone(), self.q2.clone()).with_oscillation_cutoff(self.cutoff)
    }
}
