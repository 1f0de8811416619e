//! Monotone fixed-point iteration for functional boundary conditions.
//!
//! One operator application resolves the endpoint values (greatest or least
//! zeros of the boundary functionals over the bracket's endpoint ranges) and
//! then solves the induced Dirichlet problem. Iterating from the upper
//! bracket produces a descending chain converging to the greatest fixed
//! point; from the lower bracket, an ascending chain to the least one. The
//! chain's monotonicity is checked at every step, since it is what the
//! nonincreasing-functional hypothesis guarantees; a violation aborts the
//! run rather than returning an output without its contract.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::bracket::{
    certify, pointwise_max, ray_lower_solution, BracketError, BracketPair, CertifyError, Side,
};
use crate::dirichlet::{
    solve_extremal, DirichletProblem, Extremal, SolveError, SolverConfig, UniquenessProbe,
};
use crate::funcbc::{boundary_values, verify_h2, BoundaryValues, FuncBcError, ZeroSide};
use crate::grid::{GridError, GridFunction};
use crate::math;
use crate::model::{ModelError, ProblemSpec};

/// Direction of the outer chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Direction {
    DescendingFromBeta,
    AscendingFromAlpha,
}

/// One outer step: resolved endpoint values and the sup-norm move.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TraceStep {
    pub gamma_c: f64,
    pub gamma_d: f64,
    pub delta: f64,
}

/// Record of an outer iteration run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IterationTrace {
    pub direction: Direction,
    pub steps: Vec<TraceStep>,
    pub converged: bool,
    /// Both functionals ignore `gamma`, so a single application suffices.
    pub gamma_independent_shortcut: bool,
    /// Worst movement against the chain's direction observed in any step.
    pub max_monotonicity_violation: f64,
    /// Some endpoint resolution hit a half-open zero set.
    pub right_open_bc: bool,
    /// Some inner solve combined distinct probe solutions.
    pub probe_flagged: bool,
    /// Boundary-functional residuals of the final iterate.
    pub final_bc_left: f64,
    pub final_bc_right: f64,
    /// Endpoint values resolved in the last operator application.
    pub final_values: Option<BoundaryValues>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IterateError {
    /// The supplied iterate leaves the bracket.
    GammaOutsideBracket { x: f64, value: f64 },
    FuncBc(FuncBcError),
    Solve(SolveError),
    /// Outer iteration hit its cap before the chain settled.
    NonConvergence { iterations: usize, last_delta: f64 },
    /// The chain moved against its direction beyond tolerance.
    NonMonotoneTrace { step: usize, violation: f64 },
    /// A converged output failed one of its contract checks.
    FinalCheck {
        what: &'static str,
        value: f64,
        tol: f64,
    },
    Grid(GridError),
    Model(ModelError),
}

impl fmt::Display for IterateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IterateError::GammaOutsideBracket { x, value } => {
                write!(f, "iterate value {value} at x = {x} leaves the bracket")
            }
            IterateError::FuncBc(e) => write!(f, "{e}"),
            IterateError::Solve(e) => write!(f, "{e}"),
            IterateError::NonConvergence {
                iterations,
                last_delta,
            } => write!(
                f,
                "outer iteration did not settle after {iterations} steps (last delta {last_delta:e})"
            ),
            IterateError::NonMonotoneTrace { step, violation } => write!(
                f,
                "chain moved against its direction at step {step} by {violation:e}; the nonincreasing hypothesis or the solver tolerance is suspect"
            ),
            IterateError::FinalCheck { what, value, tol } => {
                write!(f, "converged output failed {what}: {value:e} (tolerance {tol:e})")
            }
            IterateError::Grid(e) => write!(f, "{e}"),
            IterateError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for IterateError {}

/// Result of one operator application.
#[derive(Debug, Clone)]
pub struct OperatorApplication {
    pub solution: GridFunction,
    pub values: BoundaryValues,
    pub probe: UniquenessProbe,
}

fn zero_side(which: Extremal) -> ZeroSide {
    match which {
        Extremal::Greatest => ZeroSide::Greatest,
        Extremal::Least => ZeroSide::Least,
    }
}

/// One application of the solution operator to `gamma`.
///
/// Resolves the endpoint values from the boundary functionals (greatest zeros
/// for the greatest solution, least for the least) and solves the induced
/// Dirichlet problem with the matching seeding.
pub fn apply_operator(
    spec: &ProblemSpec,
    bracket: &BracketPair,
    gamma: &GridFunction,
    which: Extremal,
    cfg: &SolverConfig,
) -> Result<OperatorApplication, IterateError> {
    for (i, &x) in gamma.xs().iter().enumerate() {
        let v = gamma.values()[i];
        let slack = 1e-7 * (1.0 + math::abs(v));
        if v < bracket.alpha_at(x) - slack || v > bracket.beta_at(x) + slack {
            return Err(IterateError::GammaOutsideBracket { x, value: v });
        }
    }
    let values = boundary_values(
        &spec.bc,
        gamma,
        bracket,
        zero_side(which),
        cfg.zero_tol,
        cfg.bc_slack,
    )
    .map_err(IterateError::FuncBc)?;
    let pb = DirichletProblem::new(spec, values.left.y, values.right.y, bracket)
        .map_err(IterateError::Solve)?;
    let out = solve_extremal(&pb, which, cfg).map_err(IterateError::Solve)?;
    Ok(OperatorApplication {
        solution: out.solution,
        values,
        probe: out.probe,
    })
}

/// Monotone iteration from the top (`Greatest`) or bottom (`Least`) of the
/// bracket until the chain moves less than `cfg.fix_tol` in sup norm.
///
/// Verifies the nonincreasing hypothesis on random ordered pairs before
/// starting, keeps the chain monotone within `10 * fix_tol`, and checks the
/// converged iterate's boundary residuals and discrete convexity.
pub fn extremal_fixed_point(
    spec: &ProblemSpec,
    bracket: &BracketPair,
    which: Extremal,
    cfg: &SolverConfig,
) -> Result<(GridFunction, IterationTrace), IterateError> {
    for bf in [&spec.bc.left, &spec.bc.right] {
        bf.validate(spec.c, spec.d, 128)
            .map_err(IterateError::FuncBc)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x4832);
    verify_h2(&spec.bc, bracket, &mut rng, 32, 1e-9).map_err(IterateError::FuncBc)?;

    let (c, d) = (spec.c, spec.d);
    let direction = match which {
        Extremal::Greatest => Direction::DescendingFromBeta,
        Extremal::Least => Direction::AscendingFromAlpha,
    };
    let mut current = match which {
        Extremal::Greatest => GridFunction::sample(c, d, cfg.n, |x| bracket.beta_at(x)),
        Extremal::Least => GridFunction::sample(c, d, cfg.n, |x| bracket.alpha_at(x)),
    }
    .map_err(IterateError::Grid)?;

    let shortcut = spec.bc.gamma_independent();
    let mut trace = IterationTrace {
        direction,
        steps: Vec::new(),
        converged: false,
        gamma_independent_shortcut: shortcut,
        max_monotonicity_violation: 0.0,
        right_open_bc: false,
        probe_flagged: false,
        final_bc_left: 0.0,
        final_bc_right: 0.0,
        final_values: None,
    };

    let mut last_delta = f64::INFINITY;
    for step in 1..=cfg.max_outer {
        let g = apply_operator(spec, bracket, &current, which, cfg)?;
        let delta = g.solution.sup_diff(&current).map_err(IterateError::Grid)?;
        let mut violation = 0.0f64;
        for (new, old) in g.solution.values().iter().zip(current.values().iter()) {
            let against = match direction {
                Direction::DescendingFromBeta => new - old,
                Direction::AscendingFromAlpha => old - new,
            };
            violation = math::max(violation, against);
        }
        // The seed itself is not part of the chain, so the first step is
        // exempt (the very first move away from beta/alpha is the one step
        // allowed to go "against" nothing).
        if step > 1 {
            trace.max_monotonicity_violation =
                math::max(trace.max_monotonicity_violation, violation);
            if violation > 10.0 * cfg.fix_tol {
                return Err(IterateError::NonMonotoneTrace { step, violation });
            }
        }
        trace.right_open_bc |= g.values.left.open_set || g.values.right.open_set;
        trace.probe_flagged |= g.probe.combined_from_multiple;
        trace.steps.push(TraceStep {
            gamma_c: g.values.left.y,
            gamma_d: g.values.right.y,
            delta,
        });
        trace.final_values = Some(g.values);
        current = g.solution;
        last_delta = delta;
        if shortcut || delta < cfg.fix_tol {
            trace.converged = true;
            break;
        }
    }
    if !trace.converged {
        return Err(IterateError::NonConvergence {
            iterations: cfg.max_outer,
            last_delta,
        });
    }

    // Contract checks on the converged iterate.
    let b1 = spec
        .bc
        .left
        .eval(current.left_value(), &current)
        .map_err(IterateError::FuncBc)?;
    let b2 = spec
        .bc
        .right
        .eval(current.right_value(), &current)
        .map_err(IterateError::FuncBc)?;
    trace.final_bc_left = b1;
    trace.final_bc_right = b2;
    for (what, value) in [("left boundary residual", b1), ("right boundary residual", b2)] {
        if math::abs(value) > cfg.bc_check_tol {
            return Err(IterateError::FinalCheck {
                what,
                value,
                tol: cfg.bc_check_tol,
            });
        }
    }
    let n = current.n();
    for i in 1..n {
        if current.d2()[i] < -cfg.res_tol {
            return Err(IterateError::FinalCheck {
                what: "discrete convexity",
                value: current.d2()[i],
                tol: cfg.res_tol,
            });
        }
    }

    Ok((current, trace))
}

/// Why a ray refinement left the bracket unchanged.
#[derive(Debug, Clone)]
pub enum RefineReason {
    /// The ray through the solution's right endpoint is not a lower solution.
    CertificationFailed(CertifyError),
    /// The refined pair could not be rebuilt.
    BuildFailed(BracketError),
    /// The current lower bound already dominates the ray.
    AlreadyDominated,
}

/// Outcome of [`refine_bracket_with_ray`].
#[derive(Debug, Clone)]
pub enum RefineOutcome {
    Refined(Box<BracketPair>),
    Unchanged { reason: RefineReason },
}

/// Try to sharpen the lower bound with the ray `(V(d)/d) x` built from a
/// converged solution's right endpoint value.
pub fn refine_bracket_with_ray(
    spec: &ProblemSpec,
    bracket: &BracketPair,
    solution: &GridFunction,
    grid_n: usize,
    tol: f64,
) -> RefineOutcome {
    let ray = ray_lower_solution(spec, solution.right_value());
    if let Err(e) = certify(&ray, spec, Side::Lower, grid_n, tol) {
        return RefineOutcome::Unchanged {
            reason: RefineReason::CertificationFailed(e),
        };
    }
    let xs = crate::grid::uniform_grid(spec.c, spec.d, grid_n.max(65) - 1);
    let dominated = xs
        .iter()
        .all(|&x| ray.eval(x) <= bracket.alpha_at(x) + 1e-12 * (1.0 + math::abs(ray.eval(x))));
    if dominated {
        return RefineOutcome::Unchanged {
            reason: RefineReason::AlreadyDominated,
        };
    }
    let refined = pointwise_max(&bracket.alpha, &ray);
    match BracketPair::build(refined, bracket.beta.clone(), spec, grid_n, tol) {
        Ok(pair) => RefineOutcome::Refined(Box::new(pair)),
        Err(e) => RefineOutcome::Unchanged {
            reason: RefineReason::BuildFailed(e),
        },
    }
}
