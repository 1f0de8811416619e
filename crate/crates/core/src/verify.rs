//! Independent checks on candidate solutions.
//!
//! Every derivative used here is recomputed from the nodal values, so the
//! verdicts do not inherit anything from the solver's internal state. The
//! quadratic form and its branch structure are checked against the literal
//! nodal coefficient values; nodes where a coefficient jumps are excluded
//! from those two pointwise checks (the equation only holds up to sets of
//! measure zero, and no single nodal coefficient value represents a jump),
//! and the report lists the excluded locations.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::bracket::BracketPair;
use crate::dirichlet::semilinear_residual;
use crate::funcbc::FuncBcError;
use crate::grid::{derivatives_from_values, GridError, GridFunction};
use crate::math;
use crate::model::{ModelError, ProblemSpec, SampledCoefficients};

#[derive(Debug, Clone, PartialEq)]
pub enum VerifyError {
    Model(ModelError),
    Grid(GridError),
    FuncBc(FuncBcError),
}

impl fmt::Display for VerifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyError::Model(e) => write!(f, "{e}"),
            VerifyError::Grid(e) => write!(f, "{e}"),
            VerifyError::FuncBc(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for VerifyError {}

/// Thresholds for [`full_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CheckConfig {
    /// Residual/convexity tolerance (matches the solver's `res_tol`).
    pub res_tol: f64,
    /// Boundary-functional residual tolerance.
    pub bc_tol: f64,
    /// Bracket containment tolerance (relative to `1 + |V|`).
    pub bracket_tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            res_tol: 1e-8,
            bc_tol: 1e-6,
            bracket_tol: 1e-9,
        }
    }
}

/// Verdict of one named check.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    /// Worst observed value in the check's own metric (see each check's
    /// description in the module docs / report schema).
    pub worst: f64,
    pub worst_x: f64,
    pub threshold: f64,
    pub checked_nodes: usize,
}

/// Aggregated verification verdicts for one candidate solution.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SolutionReport {
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
    /// Grid locations excluded from the quadratic/branch pointwise checks
    /// because a coefficient jumps there.
    pub excluded_jump_nodes: Vec<f64>,
}

impl SolutionReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Pointwise residual of the quadratic form
/// `x^3 (V'')^2 + p x^2 V'' + q (x V' - V)` with literal nodal coefficients
/// and derivatives recomputed from the values. Endpoints are reported as 0.
pub fn quadratic_residual(spec: &ProblemSpec, v: &GridFunction) -> Result<Vec<f64>, ModelError> {
    let (d1, d2) = derivatives_from_values(v.values(), v.step());
    let n = v.n();
    let mut out = vec![0.0; n + 1];
    for i in 1..n {
        let x = v.xs()[i];
        let p = spec.p.eval(x).map_err(ModelError::Eval)?;
        let q = spec.q.eval(x).map_err(ModelError::Eval)?;
        out[i] = x * x * x * d2[i] * d2[i]
            + p * x * x * d2[i]
            + q * (x * d1[i] - v.values()[i]);
    }
    Ok(out)
}

/// Check that the recomputed curvature sits on the convex (plus) branch of
/// the quadratic form at every non-jump interior node, and never fits the
/// concave branch better.
pub fn branch_check(
    spec: &ProblemSpec,
    v: &GridFunction,
    res_tol: f64,
) -> Result<CheckResult, ModelError> {
    let (d1, d2) = derivatives_from_values(v.values(), v.step());
    let coeffs = SampledCoefficients::sample(spec, v.xs())?;
    let n = v.n();
    let tol = 10.0 * res_tol;
    let mut worst = 0.0f64;
    let mut worst_x = v.xs()[0];
    let mut pass = true;
    let mut checked = 0usize;
    for i in 1..n {
        if coeffs.jump[i] {
            continue;
        }
        checked += 1;
        let x = v.xs()[i];
        let p = spec.p.eval(x).map_err(ModelError::Eval)?;
        let q = spec.q.eval(x).map_err(ModelError::Eval)?;
        let w = x * d1[i] - v.values()[i];
        let px2 = p * x * x;
        let mut rad = px2 * px2 - 4.0 * q * x * x * x * w;
        if rad < 0.0 {
            if rad > -1e-9 * (1.0 + px2 * px2) {
                rad = 0.0;
            } else {
                // no real curvature solves the quadratic here
                pass = false;
                worst = f64::INFINITY;
                worst_x = x;
                break;
            }
        }
        let sq = math::sqrt(rad);
        let two_x3 = 2.0 * x * x * x;
        let plus = (-px2 + sq) / two_x3;
        let minus = (-px2 - sq) / two_x3;
        let dev_plus = math::abs(d2[i] - plus);
        let dev_minus = math::abs(d2[i] - minus);
        if dev_plus > worst {
            worst = dev_plus;
            worst_x = x;
        }
        if dev_plus > tol || dev_minus < dev_plus - res_tol {
            pass = false;
            worst_x = x;
        }
    }
    Ok(CheckResult {
        name: "convex_branch",
        pass,
        worst,
        worst_x,
        threshold: tol,
        checked_nodes: checked,
    })
}

/// Run every verification on `v`: semilinear residual, scaled quadratic
/// residual, branch structure, discrete convexity, the sign and monotonicity
/// of `x V' - V`, bracket containment, and both boundary residuals.
pub fn full_check(
    spec: &ProblemSpec,
    bracket: &BracketPair,
    v: &GridFunction,
    cfg: &CheckConfig,
) -> Result<SolutionReport, VerifyError> {
    let n = v.n();
    let xs = v.xs();
    let (d1, d2) = derivatives_from_values(v.values(), v.step());
    let coeffs = SampledCoefficients::sample(spec, xs).map_err(VerifyError::Model)?;
    let excluded: Vec<f64> = (1..n).filter(|&i| coeffs.jump[i]).map(|i| xs[i]).collect();
    let mut checks = Vec::new();

    // 1. residual of the semilinear form (the solved discrete operator)
    {
        let r = semilinear_residual(spec, v).map_err(VerifyError::Model)?;
        let mut worst = 0.0f64;
        let mut worst_x = xs[0];
        for i in 1..n {
            if math::abs(r[i]) > worst {
                worst = math::abs(r[i]);
                worst_x = xs[i];
            }
        }
        checks.push(CheckResult {
            name: "semilinear_residual",
            pass: worst <= cfg.res_tol,
            worst,
            worst_x,
            threshold: cfg.res_tol,
            checked_nodes: n - 1,
        });
    }

    // 2. quadratic-form residual, scaled by the local sensitivity of the
    //    form to curvature (the residual inherits roughly
    //    (p x^2 + 2 x^3 |V''|) times the semilinear residual)
    {
        let r = quadratic_residual(spec, v).map_err(VerifyError::Model)?;
        let mut worst_ratio = 0.0f64;
        let mut worst_x = xs[0];
        let mut checked = 0usize;
        for i in 1..n {
            if coeffs.jump[i] {
                continue;
            }
            checked += 1;
            let x = xs[i];
            let p = spec.p.eval(x).map_err(|e| VerifyError::Model(ModelError::Eval(e)))?;
            let scale = math::max(1.0, p * x * x + 2.0 * x * x * x * math::abs(d2[i]));
            let ratio = math::abs(r[i]) / (cfg.res_tol * scale);
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst_x = x;
            }
        }
        checks.push(CheckResult {
            name: "quadratic_residual_scaled",
            pass: worst_ratio <= 1.0,
            worst: worst_ratio,
            worst_x,
            threshold: 1.0,
            checked_nodes: checked,
        });
    }

    // 3. convex branch fit
    checks.push(branch_check(spec, v, cfg.res_tol).map_err(VerifyError::Model)?);

    // 4. discrete convexity at interior nodes
    {
        let mut worst = f64::INFINITY;
        let mut worst_x = xs[0];
        for i in 1..n {
            if d2[i] < worst {
                worst = d2[i];
                worst_x = xs[i];
            }
        }
        checks.push(CheckResult {
            name: "convexity",
            pass: worst >= -cfg.res_tol,
            worst,
            worst_x,
            threshold: -cfg.res_tol,
            checked_nodes: n - 1,
        });
    }

    // 5. x V' - V <= 0 (scaled) at every node
    {
        let mut worst = f64::NEG_INFINITY;
        let mut worst_x = xs[0];
        for i in 0..=n {
            let m = (xs[i] * d1[i] - v.values()[i]) / (1.0 + math::abs(v.values()[i]));
            if m > worst {
                worst = m;
                worst_x = xs[i];
            }
        }
        checks.push(CheckResult {
            name: "discount_slope_nonpositive",
            pass: worst <= cfg.res_tol,
            worst,
            worst_x,
            threshold: cfg.res_tol,
            checked_nodes: n + 1,
        });
    }

    // 6. x V' - V nondecreasing in x (a convexity consequence)
    {
        let scale = 1.0 + v.values().iter().fold(0.0f64, |m, &x| math::max(m, math::abs(x)));
        let mut worst = f64::INFINITY;
        let mut worst_x = xs[0];
        for i in 0..n {
            let m0 = xs[i] * d1[i] - v.values()[i];
            let m1 = xs[i + 1] * d1[i + 1] - v.values()[i + 1];
            if m1 - m0 < worst {
                worst = m1 - m0;
                worst_x = xs[i];
            }
        }
        checks.push(CheckResult {
            name: "discount_slope_monotone",
            pass: worst >= -10.0 * cfg.res_tol * scale,
            worst,
            worst_x,
            threshold: -10.0 * cfg.res_tol * scale,
            checked_nodes: n,
        });
    }

    // 7. bracket containment
    {
        let mut worst = 0.0f64;
        let mut worst_x = xs[0];
        for i in 0..=n {
            let val = v.values()[i];
            let a = bracket.alpha_at(xs[i]);
            let b = bracket.beta_at(xs[i]);
            let viol = math::max(a - val, val - b) / (1.0 + math::abs(val));
            if viol > worst {
                worst = viol;
                worst_x = xs[i];
            }
        }
        checks.push(CheckResult {
            name: "bracket_containment",
            pass: worst <= cfg.bracket_tol,
            worst,
            worst_x,
            threshold: cfg.bracket_tol,
            checked_nodes: n + 1,
        });
    }

    // 8. boundary residuals
    {
        let b1 = spec
            .bc
            .left
            .eval(v.left_value(), v)
            .map_err(VerifyError::FuncBc)?;
        let b2 = spec
            .bc
            .right
            .eval(v.right_value(), v)
            .map_err(VerifyError::FuncBc)?;
        checks.push(CheckResult {
            name: "bc_left_residual",
            pass: math::abs(b1) <= cfg.bc_tol,
            worst: b1,
            worst_x: spec.c,
            threshold: cfg.bc_tol,
            checked_nodes: 1,
        });
        checks.push(CheckResult {
            name: "bc_right_residual",
            pass: math::abs(b2) <= cfg.bc_tol,
            worst: b2,
            worst_x: spec.d,
            threshold: cfg.bc_tol,
            checked_nodes: 1,
        });
    }

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(SolutionReport {
        checks,
        all_pass,
        excluded_jump_nodes: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::{chord_upper_solution, ray_lower_solution, BracketPair, CERT_TOL};
    use crate::expr::CoefficientExpr;
    use crate::funcbc::BoundaryConditionPair;

    fn spec(p: &str, q: &str, c: f64, d: f64, vc: f64, vd: f64) -> ProblemSpec {
        ProblemSpec::new(
            c,
            d,
            CoefficientExpr::parse(p).unwrap(),
            CoefficientExpr::parse(q).unwrap(),
            BoundaryConditionPair::dirichlet(vc, vd),
        )
        .unwrap()
    }

    #[test]
    fn quadratic_residual_vanishes_on_rays() {
        // V'' = 0 and x V' - V = 0 kill both terms for any coefficients.
        let s = spec("1 + x^3", "floor(x)", 2.0, 6.0, 2.0 * 1.5, 6.0 * 1.5);
        let ray = GridFunction::sample(2.0, 6.0, 64, |x| 1.5 * x).unwrap();
        let r = quadratic_residual(&s, &ray).unwrap();
        let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-7, "worst {worst}");
    }

    #[test]
    fn quadratic_residual_vanishes_for_flat_no_discount() {
        let s = spec("1 + x^3", "0", 1.0, 3.0, 5.0, 5.0);
        let flat = GridFunction::sample(1.0, 3.0, 64, |_| 5.0).unwrap();
        let r = quadratic_residual(&s, &flat).unwrap();
        assert!(r.iter().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn branch_check_passes_on_rays() {
        let s = spec("1 + x^3", "1", 1.0, 3.0, 1.5, 4.5);
        let ray = GridFunction::sample(1.0, 3.0, 64, |x| 1.5 * x).unwrap();
        let c = branch_check(&s, &ray, 1e-8).unwrap();
        assert!(c.pass, "{c:?}");
    }

    #[test]
    fn branch_check_rejects_concave_candidates() {
        let s = spec("1", "1", 1.0, 2.0, -1.0, -4.0);
        let cap = GridFunction::sample(1.0, 2.0, 64, |x| -x * x).unwrap();
        let c = branch_check(&s, &cap, 1e-8).unwrap();
        assert!(!c.pass);
    }

    #[test]
    fn full_check_accepts_exact_ray_solution() {
        let lam = 1.5;
        let s = spec("1 + x^3", "floor(x)", 2.0, 6.0, 2.0 * lam, 6.0 * lam);
        let alpha = ray_lower_solution(&s, 6.0 * lam);
        let beta = chord_upper_solution(&s, 2.0 * lam, 6.0 * lam);
        let bracket = BracketPair::build(alpha, beta, &s, 1025, CERT_TOL).unwrap();
        let ray = GridFunction::sample(2.0, 6.0, 256, |x| lam * x).unwrap();
        let report = full_check(&s, &bracket, &ray, &CheckConfig::default()).unwrap();
        assert!(report.all_pass, "{report:?}");
        // floor(x) jumps at 3, 4, 5 land on this grid
        assert_eq!(report.excluded_jump_nodes.len(), 3);
    }

    #[test]
    fn full_check_flags_the_chord_as_non_solution() {
        // The chord is an upper solution, not a solution: its semilinear
        // residual is strictly negative wherever q > 0 and x b' != b.
        let s = spec("1 + x^3", "floor(x)", 2.0, 6.0, 9.0, 1.0);
        let k = crate::bracket::solve_curvature_k(&s, 9.0, 1.0).unwrap();
        let alpha = crate::bracket::pointwise_max(
            &ray_lower_solution(&s, 1.0),
            &crate::bracket::parabola_lower_solution(&s, 9.0, 1.0, k).unwrap(),
        );
        let beta = chord_upper_solution(&s, 9.0, 1.0);
        let bracket = BracketPair::build(alpha, beta, &s, 1025, CERT_TOL).unwrap();
        let chord = GridFunction::sample(2.0, 6.0, 256, |x| 13.0 - 2.0 * x).unwrap();
        let report = full_check(&s, &bracket, &chord, &CheckConfig::default()).unwrap();
        assert!(!report.all_pass);
        let res = report.check("semilinear_residual").unwrap();
        assert!(!res.pass);
    }
}
