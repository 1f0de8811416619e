//! Problem data for the stationary transaction-cost equation and the
//! transformation that turns it into a semilinear two-point problem.
//!
//! The quadratic equation
//!
//! ```text
//! x^3 V''(x)^2 + p(x) x^2 V''(x) + q(x) (x V'(x) - V(x)) = 0
//! ```
//!
//! is solved through the equivalent semilinear form `V'' + h(x, V, V') = 0`
//! with
//!
//! ```text
//! h(x, y, z) = (p(x) x^2 - sqrt(p(x)^2 x^4 + 4 x^3 q(x) |x z - y|)) / (2 x^3),
//! ```
//!
//! which is nonpositive for nonnegative coefficients, so solutions of the
//! semilinear form are convex.

use alloc::vec::Vec;
use core::fmt;

use crate::expr::{CoefficientExpr, EvalError};
use crate::funcbc::BoundaryConditionPair;
use crate::math;

/// Default number of points for certification-style grids.
pub const DEFAULT_CERT_POINTS: usize = 4097;

/// Relative offset used when sampling coefficients one-sided around a node.
const SIDE_SAMPLE_REL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    BadInterval { c: f64, d: f64 },
    NegativeCoefficient { name: &'static str, x: f64, value: f64 },
    OutOfDomain { x: f64, c: f64, d: f64 },
    BadMarketParams { detail: &'static str },
    Eval(EvalError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::BadInterval { c, d } => {
                write!(f, "interval must satisfy 0 < c < d, got [{c}, {d}]")
            }
            ModelError::NegativeCoefficient { name, x, value } => {
                write!(f, "coefficient {name}({x}) = {value} is negative")
            }
            ModelError::OutOfDomain { x, c, d } => write!(f, "x = {x} outside [{c}, {d}]"),
            ModelError::BadMarketParams { detail } => write!(f, "invalid market parameters: {detail}"),
            ModelError::Eval(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ModelError {}

/// Interval, coefficients and boundary conditions of one problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub c: f64,
    pub d: f64,
    pub p: CoefficientExpr,
    pub q: CoefficientExpr,
    pub bc: BoundaryConditionPair,
}

impl ProblemSpec {
    pub fn new(
        c: f64,
        d: f64,
        p: CoefficientExpr,
        q: CoefficientExpr,
        bc: BoundaryConditionPair,
    ) -> Result<ProblemSpec, ModelError> {
        if !(c.is_finite() && d.is_finite() && 0.0 < c && c < d) {
            return Err(ModelError::BadInterval { c, d });
        }
        Ok(ProblemSpec { c, d, p, q, bc })
    }

    /// Reject problems whose coefficients go negative (or fail to evaluate)
    /// anywhere on a `grid_n`-point certification grid.
    pub fn validate_coefficients(&self, grid_n: usize) -> Result<(), ModelError> {
        let xs = crate::grid::uniform_grid(self.c, self.d, grid_n.max(16) - 1);
        for &x in &xs {
            let pv = self.p.eval(x).map_err(ModelError::Eval)?;
            if pv < 0.0 {
                return Err(ModelError::NegativeCoefficient { name: "p", x, value: pv });
            }
            let qv = self.q.eval(x).map_err(ModelError::Eval)?;
            if qv < 0.0 {
                return Err(ModelError::NegativeCoefficient { name: "q", x, value: qv });
            }
        }
        Ok(())
    }

    /// Evaluate the semilinear nonlinearity at `(x, y, z)` with domain checks.
    pub fn eval_h(&self, x: f64, y: f64, z: f64) -> Result<f64, ModelError> {
        if x < self.c || x > self.d {
            return Err(ModelError::OutOfDomain { x, c: self.c, d: self.d });
        }
        let p = self.p.eval(x).map_err(ModelError::Eval)?;
        let q = self.q.eval(x).map_err(ModelError::Eval)?;
        if p < 0.0 {
            return Err(ModelError::NegativeCoefficient { name: "p", x, value: p });
        }
        if q < 0.0 {
            return Err(ModelError::NegativeCoefficient { name: "q", x, value: q });
        }
        Ok(h_term(p, q, x, y, z))
    }
}

/// Market constants for the constant-coefficient problem.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MarketParams {
    /// Adjusted volatility.
    pub sigma_tilde: f64,
    /// Volatility of the stock returns.
    pub sigma: f64,
    /// Interest short rate.
    pub r: f64,
    /// Transaction-cost parameter.
    pub b: f64,
}

/// Constant coefficients `p = sigma_tilde^2 / (2 b sigma^2)` and
/// `q = r / (b sigma^2)`.
pub fn coefficients_from_market(
    m: &MarketParams,
) -> Result<(CoefficientExpr, CoefficientExpr), ModelError> {
    if m.b == 0.0 || m.sigma == 0.0 {
        return Err(ModelError::BadMarketParams {
            detail: "b and sigma must be nonzero",
        });
    }
    if !(m.b > 0.0 && m.sigma > 0.0) {
        return Err(ModelError::BadMarketParams {
            detail: "b and sigma must be positive",
        });
    }
    let p = m.sigma_tilde * m.sigma_tilde / (2.0 * m.b * m.sigma * m.sigma);
    let q = m.r / (m.b * m.sigma * m.sigma);
    Ok((CoefficientExpr::constant(p), CoefficientExpr::constant(q)))
}

/// The semilinear nonlinearity for given coefficient values.
///
/// Evaluated in the cancellation-free form
/// `-2 q |x z - y| / (p x^2 + sqrt(p^2 x^4 + 4 x^3 q |x z - y|))`,
/// which is algebraically identical to the radical form and guarantees a
/// nonpositive result.
#[inline]
pub fn h_term(p: f64, q: f64, x: f64, y: f64, z: f64) -> f64 {
    let w = math::abs(x * z - y);
    let qw = q * w;
    if qw == 0.0 {
        return 0.0;
    }
    let px2 = p * x * x;
    let rad = px2 * px2 + 4.0 * x * x * x * qw;
    -2.0 * qw / (px2 + math::sqrt(rad))
}

/// Nagumo-type growth bound `|h(x, y, z)| <= a_hat + b_hat * sqrt(|z|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NagumoBounds {
    pub a_hat: f64,
    pub b_hat: f64,
    /// The anchor used in place of `sqrt(|y|)` inside `a_hat`.
    pub y_anchor: f64,
    /// True when the anchor is the plain right-endpoint value of the upper
    /// bracket rather than the safe bracket-wide bound.
    pub used_literal_beta_d: bool,
}

/// Growth bounds with the literal anchor `beta_d`:
/// `a_hat = max p(x)/x + sqrt(q(x)/x^3) * beta_d`, `b_hat = max sqrt(q(x))/x`.
///
/// Maxima are grid maxima over `grid_n` points (coefficients may be
/// discontinuous, so no symbolic optimization is attempted).
pub fn nagumo_bounds(
    spec: &ProblemSpec,
    beta_d: f64,
    grid_n: usize,
) -> Result<NagumoBounds, ModelError> {
    nagumo_bounds_with_anchor(spec, beta_d, beta_d, true, grid_n)
}

/// Growth bounds with an explicit `y`-anchor; used by bracket-aware callers
/// that substitute `max(beta_d, sqrt(sup |bracket|))` when the literal
/// endpoint value would not dominate `sqrt(|y|)` over the bracket.
pub fn nagumo_bounds_with_anchor(
    spec: &ProblemSpec,
    beta_d: f64,
    y_anchor: f64,
    used_literal_beta_d: bool,
    grid_n: usize,
) -> Result<NagumoBounds, ModelError> {
    let _ = beta_d;
    let xs = crate::grid::uniform_grid(spec.c, spec.d, grid_n.max(16) - 1);
    let mut a_hat = 0.0f64;
    let mut b_hat = 0.0f64;
    for &x in &xs {
        let p = spec.p.eval(x).map_err(ModelError::Eval)?;
        let q = spec.q.eval(x).map_err(ModelError::Eval)?;
        if p < 0.0 {
            return Err(ModelError::NegativeCoefficient { name: "p", x, value: p });
        }
        if q < 0.0 {
            return Err(ModelError::NegativeCoefficient { name: "q", x, value: q });
        }
        a_hat = math::max(a_hat, p / x + math::sqrt(q / (x * x * x)) * y_anchor);
        b_hat = math::max(b_hat, math::sqrt(q) / x);
    }
    Ok(NagumoBounds {
        a_hat,
        b_hat,
        y_anchor,
        used_literal_beta_d,
    })
}

impl NagumoBounds {
    /// A priori bound on `|V'|` for bracketed solutions:
    /// the extreme chord slope plus `integral of (a_hat + b_hat sqrt(s))`
    /// over the interval.
    pub fn derivative_bound(
        &self,
        c: f64,
        d: f64,
        alpha_c: f64,
        alpha_d: f64,
        beta_c: f64,
        beta_d: f64,
    ) -> f64 {
        let slope = math::max(
            math::abs(beta_d - alpha_c),
            math::abs(beta_c - alpha_d),
        ) / (d - c);
        let integral = self.a_hat * (d - c)
            + self.b_hat * (2.0 / 3.0) * (math::pow(d, 1.5) - math::pow(c, 1.5));
        slope + integral
    }
}

/// Coefficient values sampled just left and right of every grid node.
///
/// The discrete operator evaluates the nonlinearity as the mean of the two
/// one-sided values; at nodes where the coefficients are continuous the two
/// sides agree to within the sampling offset, while at a jump node the mean
/// keeps the scheme second-order accurate. `jump[i]` records nodes where the
/// sides genuinely differ, so pointwise checks of the quadratic form (which
/// is not defined at a coefficient discontinuity) can skip them.
#[derive(Debug, Clone)]
pub struct SampledCoefficients {
    pub xs: Vec<f64>,
    pub p_lo: Vec<f64>,
    pub p_hi: Vec<f64>,
    pub q_lo: Vec<f64>,
    pub q_hi: Vec<f64>,
    pub jump: Vec<bool>,
}

impl SampledCoefficients {
    pub fn sample(spec: &ProblemSpec, xs: &[f64]) -> Result<SampledCoefficients, ModelError> {
        let n = xs.len();
        let mut out = SampledCoefficients {
            xs: xs.to_vec(),
            p_lo: Vec::with_capacity(n),
            p_hi: Vec::with_capacity(n),
            q_lo: Vec::with_capacity(n),
            q_hi: Vec::with_capacity(n),
            jump: Vec::with_capacity(n),
        };
        for &x in xs {
            let delta = SIDE_SAMPLE_REL * (1.0 + math::abs(x));
            let x_lo = math::max(x - delta, spec.c);
            let x_hi = math::min(x + delta, spec.d);
            let p_lo = spec.p.eval(x_lo).map_err(ModelError::Eval)?;
            let p_hi = spec.p.eval(x_hi).map_err(ModelError::Eval)?;
            let q_lo = spec.q.eval(x_lo).map_err(ModelError::Eval)?;
            let q_hi = spec.q.eval(x_hi).map_err(ModelError::Eval)?;
            for (name, v, at) in [
                ("p", p_lo, x_lo),
                ("p", p_hi, x_hi),
                ("q", q_lo, x_lo),
                ("q", q_hi, x_hi),
            ] {
                if v < 0.0 {
                    return Err(ModelError::NegativeCoefficient { name, x: at, value: v });
                }
            }
            let jump = math::abs(p_hi - p_lo) > 1e-6 * (1.0 + math::max(math::abs(p_lo), math::abs(p_hi)))
                || math::abs(q_hi - q_lo)
                    > 1e-6 * (1.0 + math::max(math::abs(q_lo), math::abs(q_hi)));
            out.p_lo.push(p_lo);
            out.p_hi.push(p_hi);
            out.q_lo.push(q_lo);
            out.q_hi.push(q_hi);
            out.jump.push(jump);
        }
        Ok(out)
    }

    /// Side-averaged nonlinearity at node `i`.
    #[inline]
    pub fn h_at(&self, i: usize, y: f64, z: f64) -> f64 {
        let x = self.xs[i];
        0.5 * (h_term(self.p_lo[i], self.q_lo[i], x, y, z)
            + h_term(self.p_hi[i], self.q_hi[i], x, y, z))
    }
}
