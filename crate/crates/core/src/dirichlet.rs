//! Finite-difference solver for the semilinear Dirichlet problem
//! `V'' + h(x, V, V') = 0`, `V(c) = Vc`, `V(d) = Vd` inside a certified
//! bracket.
//!
//! Discretization is second-order central differences on a uniform grid. The
//! nonlinear system is solved by damped Newton with a tridiagonal
//! finite-difference Jacobian (three-color column probing) and a Picard sweep
//! as fallback when the line search stalls; the nonlinearity is continuous
//! but only Hoelder-1/2 in `(y, z)` where `x z = y`, so the fallback matters
//! near that kink. Coefficients enter through side-averaged samples
//! ([`crate::model::SampledCoefficients`]), which keeps the scheme
//! second-order even when `p` or `q` jumps at a grid node.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::bracket::BracketPair;
use crate::funcbc::unit_f64;
use crate::grid::{GridError, GridFunction};
use crate::math;
use crate::model::{ModelError, ProblemSpec, SampledCoefficients};

/// Which extremal solution a solve targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Extremal {
    Greatest,
    Least,
}

/// Solver parameters shared by the Dirichlet solver and the outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SolverConfig {
    /// Grid intervals.
    pub n: usize,
    /// Absolute tolerance on the discrete residual.
    pub res_tol: f64,
    /// Newton/Picard iteration cap.
    pub max_iter: usize,
    /// Smallest accepted line-search factor before falling back to Picard.
    pub damping_min: f64,
    /// Seed for the probe and spot-check RNG.
    pub seed: u64,
    /// Sup-norm tolerance of the outer fixed-point iteration.
    pub fix_tol: f64,
    /// Outer iteration cap.
    pub max_outer: usize,
    /// Number of random reseeded solves probing solution uniqueness.
    pub probe_seeds: usize,
    /// Tolerance for nodewise bracket containment of the final iterate.
    pub bracket_tol: f64,
    /// Tolerance of the extremal-zero searches.
    pub zero_tol: f64,
    /// Slack allowed in the boundary bracketing inequalities.
    pub bc_slack: f64,
    /// Threshold on final boundary-functional residuals.
    pub bc_check_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n: 2048,
            res_tol: 1e-8,
            max_iter: 200,
            damping_min: 1.0 / (1 << 20) as f64,
            seed: 0x5eed,
            fix_tol: 1e-8,
            max_outer: 100,
            probe_seeds: 3,
            bracket_tol: 1e-9,
            zero_tol: 1e-10,
            bc_slack: 1e-9,
            bc_check_tol: 1e-6,
        }
    }
}

/// Probe verdict from re-solving with randomized admissible seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct UniquenessProbe {
    pub probes: usize,
    pub failures: usize,
    /// Largest sup-norm deviation of a probe solution from the primary one.
    pub max_spread: f64,
    /// All probes converged to the primary solution (within 1e-6).
    pub unique_empirical: bool,
    /// Distinct solutions were found and the nodewise extreme was taken and
    /// re-polished.
    pub combined_from_multiple: bool,
}

/// A converged Dirichlet solve.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution: GridFunction,
    pub iterations: usize,
    pub final_residual: f64,
    pub probe: UniquenessProbe,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    NonConvergence {
        iterations: usize,
        last_residual: f64,
    },
    /// Final unclamped iterate leaves the bracket.
    BracketViolation {
        x: f64,
        value: f64,
        alpha: f64,
        beta: f64,
    },
    /// Endpoint values outside the bracket at `c` or `d`.
    InvalidEndpoints {
        value: f64,
        lo: f64,
        hi: f64,
    },
    Model(ModelError),
    Grid(GridError),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::NonConvergence {
                iterations,
                last_residual,
            } => write!(
                f,
                "solver did not converge after {iterations} iterations (residual {last_residual:e})"
            ),
            SolveError::BracketViolation { x, value, alpha, beta } => write!(
                f,
                "solution leaves the bracket at x = {x}: {value} not in [{alpha}, {beta}]"
            ),
            SolveError::InvalidEndpoints { value, lo, hi } => {
                write!(f, "endpoint value {value} outside bracket range [{lo}, {hi}]")
            }
            SolveError::Model(e) => write!(f, "{e}"),
            SolveError::Grid(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SolveError {}

/// A Dirichlet problem posed inside a certified bracket.
#[derive(Debug, Clone, Copy)]
pub struct DirichletProblem<'a> {
    pub spec: &'a ProblemSpec,
    pub vc: f64,
    pub vd: f64,
    pub bracket: &'a BracketPair,
}

impl<'a> DirichletProblem<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        vc: f64,
        vd: f64,
        bracket: &'a BracketPair,
    ) -> Result<Self, SolveError> {
        for (v, x) in [(vc, spec.c), (vd, spec.d)] {
            let lo = bracket.alpha_at(x);
            let hi = bracket.beta_at(x);
            let slack = 1e-9 * (1.0 + math::abs(v));
            if v < lo - slack || v > hi + slack {
                return Err(SolveError::InvalidEndpoints { value: v, lo, hi });
            }
        }
        Ok(DirichletProblem {
            spec,
            vc,
            vd,
            bracket,
        })
    }
}

/// Discrete residual of a candidate: `r_i = d2_i + h_i(V_i, d1_i)` at interior
/// nodes (endpoints are reported as zero).
pub fn semilinear_residual(
    spec: &ProblemSpec,
    v: &GridFunction,
) -> Result<Vec<f64>, ModelError> {
    let coeffs = SampledCoefficients::sample(spec, v.xs())?;
    let n = v.n();
    let mut out = vec![0.0; n + 1];
    for i in 1..n {
        out[i] = v.d2()[i] + coeffs.h_at(i, v.values()[i], v.d1()[i]);
    }
    Ok(out)
}

struct System {
    xs: Vec<f64>,
    step: f64,
    coeffs: SampledCoefficients,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    pinned: Vec<bool>,
    vc: f64,
    vd: f64,
}

impl System {
    fn build(pb: &DirichletProblem<'_>, n: usize) -> Result<System, SolveError> {
        if n < GridFunction::MIN_INTERVALS {
            return Err(SolveError::Grid(GridError::TooFewNodes { n }));
        }
        let xs = crate::grid::uniform_grid(pb.spec.c, pb.spec.d, n);
        let coeffs = SampledCoefficients::sample(pb.spec, &xs).map_err(SolveError::Model)?;
        let alpha: Vec<f64> = xs.iter().map(|&x| pb.bracket.alpha_at(x)).collect();
        let beta: Vec<f64> = xs.iter().map(|&x| pb.bracket.beta_at(x)).collect();
        let pinned: Vec<bool> = (0..=n)
            .map(|i| {
                i != 0
                    && i != n
                    && beta[i] - alpha[i] <= 1e-13 * (1.0 + math::abs(alpha[i]))
            })
            .collect();
        Ok(System {
            xs,
            step: (pb.spec.d - pb.spec.c) / n as f64,
            coeffs,
            alpha,
            beta,
            pinned,
            vc: pb.vc,
            vd: pb.vd,
        })
    }

    fn n(&self) -> usize {
        self.xs.len() - 1
    }

    fn residual(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let h = self.step;
        let mut out = vec![0.0; n - 1];
        for i in 1..n {
            let d2 = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / (h * h);
            let d1 = (v[i + 1] - v[i - 1]) / (2.0 * h);
            out[i - 1] = d2 + self.coeffs.h_at(i, v[i], d1);
        }
        out
    }

    /// Max residual over free (non-pinned) interior nodes.
    fn norm(&self, f: &[f64]) -> f64 {
        let mut m = 0.0f64;
        for (j, &r) in f.iter().enumerate() {
            if !self.pinned[j + 1] {
                m = math::max(m, math::abs(r));
            }
        }
        m
    }

    fn seed_values(&self, which: Extremal) -> Vec<f64> {
        let base = match which {
            Extremal::Greatest => &self.beta,
            Extremal::Least => &self.alpha,
        };
        self.apply_constraints(base.clone())
    }

    fn mixture_seed(&self, theta: f64) -> Vec<f64> {
        let v = self
            .alpha
            .iter()
            .zip(self.beta.iter())
            .map(|(&a, &b)| a + theta * (b - a))
            .collect();
        self.apply_constraints(v)
    }

    fn apply_constraints(&self, mut v: Vec<f64>) -> Vec<f64> {
        let n = self.n();
        v[0] = self.vc;
        v[n] = self.vd;
        for i in 1..n {
            if self.pinned[i] {
                v[i] = self.alpha[i];
            }
        }
        v
    }

    fn clamp_to_bracket(&self, v: &mut [f64]) {
        let n = self.n();
        for i in 1..n {
            v[i] = math::min(math::max(v[i], self.alpha[i]), self.beta[i]);
        }
    }

    fn bracket_violation(&self, v: &[f64], tol: f64) -> Option<SolveError> {
        for (i, &val) in v.iter().enumerate() {
            let slack = tol * (1.0 + math::abs(val));
            if val < self.alpha[i] - slack || val > self.beta[i] + slack {
                return Some(SolveError::BracketViolation {
                    x: self.xs[i],
                    value: val,
                    alpha: self.alpha[i],
                    beta: self.beta[i],
                });
            }
        }
        None
    }
}

/// Solve tridiagonal `A x = rhs` (Thomas algorithm). `sub[0]` and
/// `sup[len-1]` are ignored.
fn thomas(sub: &[f64], dia: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = dia.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    if dia[0] == 0.0 {
        return None;
    }
    cp[0] = sup[0] / dia[0];
    dp[0] = rhs[0] / dia[0];
    for i in 1..n {
        let m = dia[i] - sub[i] * cp[i - 1];
        if m == 0.0 {
            return None;
        }
        cp[i] = sup[i] / m;
        dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    Some(x)
}

struct NewtonResult {
    v: Vec<f64>,
    iterations: usize,
    residual: f64,
    converged: bool,
}

fn newton(sys: &System, v0: Vec<f64>, cfg: &SolverConfig, clamp: bool, budget: usize) -> NewtonResult {
    let n = sys.n();
    let nun = n - 1;
    let mut v = v0;
    let mut f = sys.residual(&v);
    let mut rn = sys.norm(&f);
    for it in 0..budget {
        if rn <= cfg.res_tol {
            return NewtonResult {
                v,
                iterations: it,
                residual: rn,
                converged: true,
            };
        }
        // Tridiagonal Jacobian by three-color finite differences.
        let mut sub = vec![0.0; nun];
        let mut dia = vec![0.0; nun];
        let mut sup = vec![0.0; nun];
        for color in 0..3 {
            let mut vp = v.clone();
            let mut eps = vec![0.0; nun];
            let mut any = false;
            for j in (color..nun).step_by(3) {
                if sys.pinned[j + 1] {
                    continue;
                }
                eps[j] = 1e-7 * (1.0 + math::abs(v[j + 1]));
                vp[j + 1] += eps[j];
                any = true;
            }
            if !any {
                continue;
            }
            let fp = sys.residual(&vp);
            for j in (color..nun).step_by(3) {
                if sys.pinned[j + 1] {
                    continue;
                }
                dia[j] = (fp[j] - f[j]) / eps[j];
                if j >= 1 {
                    sup[j - 1] = (fp[j - 1] - f[j - 1]) / eps[j];
                }
                if j + 1 < nun {
                    sub[j + 1] = (fp[j + 1] - f[j + 1]) / eps[j];
                }
            }
        }
        for j in 0..nun {
            if sys.pinned[j + 1] {
                dia[j] = 1.0;
                sub[j] = 0.0;
                sup[j] = 0.0;
            }
        }
        // Pinned unknowns must not move: identity row with zero update.
        let rhs: Vec<f64> = f
            .iter()
            .enumerate()
            .map(|(j, r)| if sys.pinned[j + 1] { 0.0 } else { -r })
            .collect();
        let delta = thomas(&sub, &dia, &sup, &rhs);

        let mut advanced = false;
        if let Some(delta) = delta {
            let mut lambda = 1.0;
            while lambda >= cfg.damping_min {
                let mut vt = v.clone();
                for j in 0..nun {
                    vt[j + 1] += lambda * delta[j];
                }
                if clamp {
                    sys.clamp_to_bracket(&mut vt);
                }
                let ft = sys.residual(&vt);
                let rt = sys.norm(&ft);
                if rt < rn {
                    v = vt;
                    f = ft;
                    rn = rt;
                    advanced = true;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if !advanced {
            // Picard sweep: linear Poisson solve with the nonlinearity frozen
            // at the current iterate.
            let h2 = sys.step * sys.step;
            let mut sub = vec![1.0; nun];
            let mut dia = vec![-2.0; nun];
            let mut sup = vec![1.0; nun];
            let mut rhs = vec![0.0; nun];
            for i in 1..n {
                let d1 = (v[i + 1] - v[i - 1]) / (2.0 * sys.step);
                rhs[i - 1] = -sys.coeffs.h_at(i, v[i], d1) * h2;
            }
            rhs[0] -= sys.vc;
            rhs[nun - 1] -= sys.vd;
            for j in 0..nun {
                if sys.pinned[j + 1] {
                    sub[j] = 0.0;
                    sup[j] = 0.0;
                    dia[j] = 1.0;
                    rhs[j] = sys.alpha[j + 1];
                }
            }
            match thomas(&sub, &dia, &sup, &rhs) {
                Some(sol) => {
                    let mut vt = v.clone();
                    vt[1..n].copy_from_slice(&sol);
                    if clamp {
                        sys.clamp_to_bracket(&mut vt);
                    }
                    v = vt;
                    f = sys.residual(&v);
                    rn = sys.norm(&f);
                }
                None => {
                    return NewtonResult {
                        v,
                        iterations: it + 1,
                        residual: rn,
                        converged: false,
                    }
                }
            }
        }
    }
    let converged = rn <= cfg.res_tol;
    NewtonResult {
        v,
        iterations: budget,
        residual: rn,
        converged,
    }
}

/// Solve for the greatest or least solution of the Dirichlet problem.
///
/// The iteration is seeded at the upper bracket for `Greatest` (descending)
/// and at the lower bracket for `Least` (ascending). The returned iterate
/// satisfies the discrete residual tolerance and lies inside the bracket
/// without clamping. Uniqueness inside the bracket is probed empirically by
/// re-solving from randomized admissible seeds; if distinct solutions appear,
/// the nodewise extreme is taken, re-polished and flagged.
pub fn solve_extremal(
    pb: &DirichletProblem<'_>,
    which: Extremal,
    cfg: &SolverConfig,
) -> Result<SolveOutcome, SolveError> {
    let sys = System::build(pb, cfg.n)?;

    let (primary, mut iterations) = solve_with_fallback(&sys, sys.seed_values(which), cfg)?;

    // Uniqueness probe from randomized mixture seeds.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut max_spread = 0.0f64;
    let mut failures = 0usize;
    let mut candidates: Vec<Vec<f64>> = vec![primary.clone()];
    for _ in 0..cfg.probe_seeds {
        let theta = unit_f64(&mut rng);
        let r = newton(&sys, sys.mixture_seed(theta), cfg, false, cfg.max_iter);
        if r.converged && sys.bracket_violation(&r.v, cfg.bracket_tol).is_none() {
            let spread = sup_diff(&r.v, &primary);
            max_spread = math::max(max_spread, spread);
            candidates.push(r.v);
        } else {
            failures += 1;
        }
    }

    let mut combined_from_multiple = false;
    let mut result = primary;
    if max_spread > 1e-6 {
        // Distinct solutions: take the nodewise extreme and re-polish.
        let n = sys.n();
        let mut extreme = candidates[0].clone();
        for cand in &candidates[1..] {
            for i in 0..=n {
                extreme[i] = match which {
                    Extremal::Greatest => math::max(extreme[i], cand[i]),
                    Extremal::Least => math::min(extreme[i], cand[i]),
                };
            }
        }
        let (polished, polish_iters) = solve_with_fallback(&sys, sys.apply_constraints(extreme), cfg)?;
        result = polished;
        iterations += polish_iters;
        combined_from_multiple = true;
    }

    if let Some(err) = sys.bracket_violation(&result, cfg.bracket_tol) {
        return Err(err);
    }
    let f = sys.residual(&result);
    let rn = sys.norm(&f);
    let solution =
        GridFunction::from_values(pb.spec.c, pb.spec.d, result).map_err(SolveError::Grid)?;
    Ok(SolveOutcome {
        solution,
        iterations,
        final_residual: rn,
        probe: UniquenessProbe {
            probes: cfg.probe_seeds,
            failures,
            max_spread,
            unique_empirical: failures == 0 && max_spread <= 1e-6,
            combined_from_multiple,
        },
    })
}

/// Unclamped solve; on failure, retry with clamped iterates and finish with
/// an unclamped polish. Returns the solution and iterations spent.
fn solve_with_fallback(
    sys: &System,
    seed: Vec<f64>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, usize), SolveError> {
    let first = newton(sys, seed.clone(), cfg, false, cfg.max_iter);
    if first.converged && sys.bracket_violation(&first.v, cfg.bracket_tol).is_none() {
        return Ok((first.v, first.iterations));
    }
    let clamped = newton(sys, seed, cfg, true, cfg.max_iter);
    let polish = newton(sys, clamped.v, cfg, false, cfg.max_iter.min(40));
    if polish.converged {
        let total = first.iterations + clamped.iterations + polish.iterations;
        return Ok((polish.v, total));
    }
    Err(SolveError::NonConvergence {
        iterations: cfg.max_iter,
        last_residual: math::min(first.residual, polish.residual),
    })
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        m = math::max(m, math::abs(x - y));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::{
        chord_upper_solution, parabola_lower_solution, pointwise_max, ray_lower_solution,
        solve_curvature_k, BracketPair, CERT_TOL,
    };
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

    fn dirichlet_bracket(s: &ProblemSpec, vc: f64, vd: f64) -> BracketPair {
        let k = solve_curvature_k(s, vc, vd).unwrap();
        let a2 = parabola_lower_solution(s, vc, vd, k).unwrap();
        let alpha = if vd / s.d <= vc / s.c {
            pointwise_max(&ray_lower_solution(s, vd), &a2)
        } else {
            a2
        };
        let beta = chord_upper_solution(s, vc, vd);
        BracketPair::build(alpha, beta, s, 1025, CERT_TOL).unwrap()
    }

    #[test]
    fn proportional_endpoints_return_the_ray_exactly() {
        // Vd/d = Vc/c: the ray is an exact solution and the seed hits it.
        let lam = 1.5;
        let s = spec("1 + x^3", "floor(x)", 1.0, 3.0, lam * 1.0, lam * 3.0);
        let bracket = dirichlet_bracket(&s, lam, 3.0 * lam);
        let pb = DirichletProblem::new(&s, lam, 3.0 * lam, &bracket).unwrap();
        let cfg = SolverConfig {
            n: 256,
            ..SolverConfig::default()
        };
        let out = solve_extremal(&pb, Extremal::Greatest, &cfg).unwrap();
        let mut worst = 0.0f64;
        for (i, &x) in out.solution.xs().iter().enumerate() {
            worst = worst.max((out.solution.values()[i] - lam * x).abs());
        }
        assert!(worst <= 1e-10, "sup error {worst}");
    }

    #[test]
    fn constant_solution_when_q_vanishes() {
        let s = spec("1 + x^3", "0", 1.0, 3.0, 5.0, 5.0);
        let bracket = dirichlet_bracket(&s, 5.0, 5.0);
        let pb = DirichletProblem::new(&s, 5.0, 5.0, &bracket).unwrap();
        let cfg = SolverConfig {
            n: 256,
            ..SolverConfig::default()
        };
        for which in [Extremal::Greatest, Extremal::Least] {
            let out = solve_extremal(&pb, which, &cfg).unwrap();
            let worst = out
                .solution
                .values()
                .iter()
                .map(|v| (v - 5.0).abs())
                .fold(0.0f64, f64::max);
            assert!(worst <= 1e-10, "{which:?} sup error {worst}");
        }
    }

    #[test]
    fn example_problem_solves_inside_bracket() {
        let s = spec("1 + x^3", "floor(x)", 2.0, 6.0, 9.0, 1.0);
        let bracket = dirichlet_bracket(&s, 9.0, 1.0);
        let pb = DirichletProblem::new(&s, 9.0, 1.0, &bracket).unwrap();
        let cfg = SolverConfig {
            n: 256,
            ..SolverConfig::default()
        };
        let out = solve_extremal(&pb, Extremal::Greatest, &cfg).unwrap();
        assert!(out.final_residual <= cfg.res_tol);
        assert!(out.probe.unique_empirical);
        assert!(!out.probe.combined_from_multiple);
        // endpoints exact
        assert_eq!(out.solution.left_value(), 9.0);
        assert_eq!(out.solution.right_value(), 1.0);
        // discrete convexity
        let n = out.solution.n();
        for i in 1..n {
            assert!(out.solution.d2()[i] >= -cfg.res_tol);
        }
        // greatest and least agree here (empirically unique problem)
        let least = solve_extremal(&pb, Extremal::Least, &cfg).unwrap();
        assert!(out.solution.sup_diff(&least.solution).unwrap() <= 1e-6);
    }

    #[test]
    fn residual_vanishes_on_rays_and_flat_no_discount() {
        let s = spec("1 + x^3", "floor(x)", 1.0, 3.0, 1.5, 4.5);
        let ray = GridFunction::sample(1.0, 3.0, 64, |x| 1.5 * x).unwrap();
        let r = semilinear_residual(&s, &ray).unwrap();
        let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-9, "ray residual {worst}");

        let s0 = spec("1 + x^3", "0", 1.0, 3.0, 5.0, 5.0);
        let flat = GridFunction::sample(1.0, 3.0, 64, |_| 5.0).unwrap();
        let r = semilinear_residual(&s0, &flat).unwrap();
        assert!(r.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn chord_residual_is_strictly_negative_where_discounted() {
        // The chord is only an upper solution: residual = h(x, beta, beta') <= 0,
        // strictly negative where q > 0 and x beta' != beta.
        let s = spec("1 + x^3", "floor(x)", 2.0, 6.0, 9.0, 1.0);
        let beta = GridFunction::sample(2.0, 6.0, 64, |x| 13.0 - 2.0 * x).unwrap();
        let r = semilinear_residual(&s, &beta).unwrap();
        for i in 1..64 {
            assert!(r[i] < -1e-3, "at node {i}: {}", r[i]);
        }
    }

    #[test]
    fn fully_pinned_bracket_returns_alpha() {
        // alpha = beta = 0 pins every node; q > 0 is fine because the zero
        // function is an exact solution.
        let s = spec("1 + x^3", "floor(x)", 1.0, 3.0, 0.0, 0.0);
        let bracket = dirichlet_bracket(&s, 0.0, 0.0);
        // ray(0) = 0 and chord = 0: bracket is degenerate everywhere
        let pb = DirichletProblem::new(&s, 0.0, 0.0, &bracket).unwrap();
        let out = solve_extremal(&pb, Extremal::Least, &SolverConfig {
            n: 64,
            ..SolverConfig::default()
        })
        .unwrap();
        assert!(out.solution.values().iter().all(|&v| v.abs() <= 1e-12));
    }

    #[test]
    fn vanishing_p_square_root_regime() {
        // With p = 0 the nonlinearity is -sqrt(q |x z - y| / x^3): no longer
        // Lipschitz where x z = y. The damping/Picard combination still has
        // to reach the residual tolerance.
        let s = spec("0", "5", 1.0, 3.0, 4.0, 1.0);
        let bracket = dirichlet_bracket(&s, 4.0, 1.0);
        let pb = DirichletProblem::new(&s, 4.0, 1.0, &bracket).unwrap();
        let cfg = SolverConfig {
            n: 512,
            ..SolverConfig::default()
        };
        for which in [Extremal::Greatest, Extremal::Least] {
            let out = solve_extremal(&pb, which, &cfg).unwrap();
            assert!(out.final_residual <= cfg.res_tol);
            for i in 1..out.solution.n() {
                assert!(out.solution.d2()[i] >= -cfg.res_tol);
            }
        }
    }

    #[test]
    fn small_left_endpoint_strong_curvature() {
        // x^3 in the denominator amplifies the nonlinearity near a small c.
        let s = spec("1", "2", 0.1, 1.1, 3.0, 0.2);
        let bracket = dirichlet_bracket(&s, 3.0, 0.2);
        let pb = DirichletProblem::new(&s, 3.0, 0.2, &bracket).unwrap();
        let cfg = SolverConfig {
            n: 512,
            ..SolverConfig::default()
        };
        let out = solve_extremal(&pb, Extremal::Greatest, &cfg).unwrap();
        assert!(out.final_residual <= cfg.res_tol);
        assert!(out.probe.unique_empirical);
    }

    #[test]
    fn endpoints_outside_bracket_rejected() {
        let s = spec("1", "1", 2.0, 6.0, 9.0, 1.0);
        let bracket = dirichlet_bracket(&s, 9.0, 1.0);
        assert!(matches!(
            DirichletProblem::new(&s, 100.0, 1.0, &bracket),
            Err(SolveError::InvalidEndpoints { .. })
        ));
    }

    #[test]
    fn nonconvergence_reported() {
        let s = spec("1 + x^3", "floor(x)", 2.0, 6.0, 9.0, 1.0);
        let bracket = dirichlet_bracket(&s, 9.0, 1.0);
        let pb = DirichletProblem::new(&s, 9.0, 1.0, &bracket).unwrap();
        let cfg = SolverConfig {
            n: 256,
            max_iter: 1,
            res_tol: 1e-14,
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve_extremal(&pb, Extremal::Greatest, &cfg),
            Err(SolveError::NonConvergence { .. })
        ));
    }
}
