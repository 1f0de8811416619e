//! The JSON run report. Field order is fixed by the struct definitions and
//! no volatile data (timestamps, absolute paths) is embedded, so identical
//! runs serialize byte-identically.

use std::fs;
use std::path::Path;

use serde::Serialize;

use tcbs_core::bracket::{BracketPair, Certificate, PiecewiseSmoothFn};
use tcbs_core::dirichlet::UniquenessProbe;
use tcbs_core::funcbc::BoundaryValues;
use tcbs_core::iterate::IterationTrace;
use tcbs_core::model::NagumoBounds;
use tcbs_core::verify::SolutionReport;

use crate::config::Mode;
use crate::AppError;

#[derive(Serialize)]
pub struct PieceOut {
    pub lo: f64,
    pub hi: f64,
    /// Polynomial coefficients, constant term first.
    pub coeffs: Vec<f64>,
}

pub fn pieces_of(f: &PiecewiseSmoothFn) -> Vec<PieceOut> {
    f.pieces()
        .iter()
        .map(|p| PieceOut {
            lo: p.lo,
            hi: p.hi,
            coeffs: p.poly.coeffs().to_vec(),
        })
        .collect()
}

#[derive(Serialize)]
pub struct BracketOut {
    /// Parabola curvature used in Dirichlet mode (solved or pinned).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Whether the configured curvature satisfies the feasibility inequality.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_feasible: Option<bool>,
    /// Right-hand side of the feasibility inequality at `k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_feasibility_rhs: Option<f64>,
    pub alpha_pieces: Vec<PieceOut>,
    pub beta_pieces: Vec<PieceOut>,
    pub alpha_kinks: Vec<f64>,
    pub alpha_certificate: Certificate,
    pub beta_certificate: Certificate,
    pub nagumo: NagumoBounds,
    /// A priori bound on |V'| over the bracket.
    pub derivative_bound: f64,
}

impl BracketOut {
    pub fn new(
        pair: &BracketPair,
        nagumo: NagumoBounds,
        k: Option<f64>,
        k_feasible: Option<bool>,
        k_rhs: Option<f64>,
    ) -> BracketOut {
        let (c, d) = pair.domain();
        let derivative_bound = nagumo.derivative_bound(
            c,
            d,
            pair.alpha_at(c),
            pair.alpha_at(d),
            pair.beta_at(c),
            pair.beta_at(d),
        );
        BracketOut {
            k,
            k_feasible,
            k_feasibility_rhs: k_rhs,
            alpha_pieces: pieces_of(&pair.alpha),
            beta_pieces: pieces_of(&pair.beta),
            alpha_kinks: pair.alpha.kinks().to_vec(),
            alpha_certificate: pair.alpha_cert.clone(),
            beta_certificate: pair.beta_cert.clone(),
            nagumo,
            derivative_bound,
        }
    }
}

#[derive(Serialize)]
pub struct BoundaryOut {
    pub gamma_c: f64,
    pub gamma_d: f64,
    pub left_open_set: bool,
    pub right_open_set: bool,
}

impl From<&BoundaryValues> for BoundaryOut {
    fn from(v: &BoundaryValues) -> Self {
        BoundaryOut {
            gamma_c: v.left.y,
            gamma_d: v.right.y,
            left_open_set: v.left.open_set,
            right_open_set: v.right.open_set,
        }
    }
}

#[derive(Serialize)]
pub struct TraceSummary {
    pub direction: &'static str,
    pub outer_steps: usize,
    pub converged: bool,
    pub gamma_independent_shortcut: bool,
    pub max_monotonicity_violation: f64,
    pub right_open_bc: bool,
    pub probe_flagged: bool,
    pub final_delta: f64,
    pub final_bc_left: f64,
    pub final_bc_right: f64,
}

impl From<&IterationTrace> for TraceSummary {
    fn from(t: &IterationTrace) -> Self {
        TraceSummary {
            direction: match t.direction {
                tcbs_core::iterate::Direction::DescendingFromBeta => "descending-from-beta",
                tcbs_core::iterate::Direction::AscendingFromAlpha => "ascending-from-alpha",
            },
            outer_steps: t.steps.len(),
            converged: t.converged,
            gamma_independent_shortcut: t.gamma_independent_shortcut,
            max_monotonicity_violation: t.max_monotonicity_violation,
            right_open_bc: t.right_open_bc,
            probe_flagged: t.probe_flagged,
            final_delta: t.steps.last().map(|s| s.delta).unwrap_or(0.0),
            final_bc_left: t.final_bc_left,
            final_bc_right: t.final_bc_right,
        }
    }
}

#[derive(Serialize)]
pub struct RunOut {
    pub which: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSummary>,
    pub final_residual: f64,
    pub probe: UniquenessProbe,
    pub checks: SolutionReport,
    pub solution_file: String,
}

#[derive(Serialize)]
pub struct ProblemOut {
    pub c: f64,
    pub d: f64,
    pub p: String,
    pub q: String,
    pub bc_left: String,
    pub bc_right: String,
}

#[derive(Serialize)]
pub struct Report {
    pub command: &'static str,
    pub mode: Mode,
    pub problem: ProblemOut,
    pub solver_seed: u64,
    pub grid_intervals: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket: Option<BracketOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certification_errors: Option<Vec<String>>,
    pub runs: Vec<RunOut>,
    pub all_pass: bool,
}

pub fn write_report(path: &Path, report: &Report) -> Result<(), AppError> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| AppError::config(format!("report serialization: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

pub fn describe_bc(bf: &tcbs_core::funcbc::BoundaryFunctional) -> String {
    use tcbs_core::funcbc::BcKind;
    match &bf.kind {
        BcKind::Dirichlet { target } => format!("dirichlet(target={target})"),
        BcKind::Integral {
            weight,
            coefficient,
        } => format!("integral(weight={}, coefficient={coefficient})", weight.source()),
        BcKind::MeanFraction { fraction } => format!("mean_fraction({fraction})"),
        BcKind::Multipoint {
            nodes,
            weights,
            target,
        } => format!("multipoint(nodes={nodes:?}, weights={weights:?}, target={target})"),
        BcKind::IntegerPart { target } => format!("integer_part(target={target})"),
        BcKind::Custom { expr, stat_nodes } => {
            format!("custom(expr={}, stat_nodes={stat_nodes:?})", expr.source())
        }
    }
}
