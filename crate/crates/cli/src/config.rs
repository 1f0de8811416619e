//! Run configuration: TOML schema, key=value overrides, and construction of
//! the core problem objects.

use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;

use tcbs_core::dirichlet::SolverConfig;
use tcbs_core::expr::{CoefficientExpr, Expr};
use tcbs_core::funcbc::{BoundaryConditionPair, BoundaryFunctional, Endpoint};
use tcbs_core::model::{coefficients_from_market, MarketParams, ProblemSpec};

use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Dirichlet,
    Functional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WhichSel {
    Greatest,
    Least,
    Both,
}

fn default_which() -> WhichSel {
    WhichSel::Both
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Mode,
    #[serde(default = "default_which")]
    pub which: WhichSel,
    pub problem: ProblemSection,
    pub bc: BcSection,
    #[serde(default)]
    pub bracket: Option<BracketSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub c: f64,
    pub d: f64,
    pub p: Option<String>,
    pub q: Option<String>,
    pub market: Option<MarketSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub sigma_tilde: f64,
    pub sigma: f64,
    pub r: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcSection {
    pub left: BcEntry,
    pub right: BcEntry,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcEntry {
    pub kind: String,
    pub target: Option<f64>,
    pub weight: Option<String>,
    pub coefficient: Option<f64>,
    pub fraction: Option<f64>,
    pub nodes: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub expr: Option<String>,
    pub stat_nodes: Option<Vec<f64>>,
    pub monotone: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketSection {
    /// "ray-const" (functional solves) or "custom" (certification only).
    pub kind: Option<String>,
    /// Dirichlet mode: pin the parabola curvature instead of solving for the
    /// minimal feasible one.
    pub k: Option<f64>,
    /// Functional mode: right-endpoint anchor of the ray lower bound.
    pub vd: Option<f64>,
    /// Functional mode: level of the constant upper bound (defaults to `vd`).
    pub beta_level: Option<f64>,
    /// Custom candidates (expressions of x) for the certify subcommand.
    pub alpha: Option<String>,
    pub beta: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub n: usize,
    pub res_tol: f64,
    pub max_iter: usize,
    pub damping_min: f64,
    pub seed: u64,
    pub fix_tol: f64,
    pub max_outer: usize,
    pub probe_seeds: usize,
    pub bracket_tol: f64,
    pub zero_tol: f64,
    pub bc_slack: f64,
    pub bc_check_tol: f64,
    pub cert_n: usize,
    pub cert_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            n: d.n,
            res_tol: d.res_tol,
            max_iter: d.max_iter,
            damping_min: d.damping_min,
            seed: d.seed,
            fix_tol: d.fix_tol,
            max_outer: d.max_outer,
            probe_seeds: d.probe_seeds,
            bracket_tol: d.bracket_tol,
            zero_tol: d.zero_tol,
            bc_slack: d.bc_slack,
            bc_check_tol: d.bc_check_tol,
            cert_n: tcbs_core::model::DEFAULT_CERT_POINTS,
            cert_tol: tcbs_core::bracket::CERT_TOL,
        }
    }
}

impl SolverSection {
    pub fn to_core(&self) -> SolverConfig {
        SolverConfig {
            n: self.n,
            res_tol: self.res_tol,
            max_iter: self.max_iter,
            damping_min: self.damping_min,
            seed: self.seed,
            fix_tol: self.fix_tol,
            max_outer: self.max_outer,
            probe_seeds: self.probe_seeds,
            bracket_tol: self.bracket_tol,
            zero_tol: self.zero_tol,
            bc_slack: self.bc_slack,
            bc_check_tol: self.bc_check_tol,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub solution: PathBuf,
    pub report: PathBuf,
    pub trace: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            solution: "solution.csv".into(),
            report: "report.json".into(),
            trace: "trace.csv".into(),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Dirichlet => write!(f, "dirichlet"),
            Mode::Functional => write!(f, "functional"),
        }
    }
}

/// Parse the file, apply `--override key=value` entries onto the raw TOML
/// tree, and deserialize.
pub fn load_config(text: &str, overrides: &[String]) -> Result<FileConfig, AppError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e| AppError::config(format!("config parse error: {e}")))?;
    let mut value = toml::Value::Table(table);
    for ov in overrides {
        apply_override(&mut value, ov)?;
    }
    FileConfig::deserialize(value).map_err(|e| AppError::config(format!("config error: {e}")))
}

fn apply_override(root: &mut toml::Value, entry: &str) -> Result<(), AppError> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| AppError::config(format!("override '{entry}' is not KEY=VALUE")))?;
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| AppError::config(format!("override path '{key}' crosses a non-table")))?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let leaf = parts[parts.len() - 1];
    let table = node
        .as_table_mut()
        .ok_or_else(|| AppError::config(format!("override path '{key}' crosses a non-table")))?;
    let parsed = if let Ok(i) = raw.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = raw.parse::<f64>() {
        toml::Value::Float(f)
    } else if let Ok(b) = raw.parse::<bool>() {
        toml::Value::Boolean(b)
    } else {
        toml::Value::String(raw.to_string())
    };
    table.insert(leaf.to_string(), parsed);
    Ok(())
}

impl BcEntry {
    pub fn build(&self, endpoint: Endpoint) -> Result<BoundaryFunctional, AppError> {
        let need = |v: &Option<f64>, what: &str| {
            v.ok_or_else(|| AppError::config(format!("bc kind '{}' needs '{what}'", self.kind)))
        };
        Ok(match self.kind.as_str() {
            "dirichlet" => BoundaryFunctional::dirichlet(endpoint, need(&self.target, "target")?),
            "integral" => {
                let weight = self
                    .weight
                    .as_deref()
                    .ok_or_else(|| AppError::config("bc kind 'integral' needs 'weight'".into()))?;
                let weight = CoefficientExpr::parse(weight)
                    .map_err(|e| AppError::config(format!("bc weight: {e}")))?;
                BoundaryFunctional::integral(
                    endpoint,
                    weight,
                    need(&self.coefficient, "coefficient")?,
                )
            }
            "mean_fraction" => {
                BoundaryFunctional::mean_fraction(endpoint, need(&self.fraction, "fraction")?)
            }
            "multipoint" => {
                let nodes = self.nodes.clone().ok_or_else(|| {
                    AppError::config("bc kind 'multipoint' needs 'nodes'".into())
                })?;
                let weights = self.weights.clone().ok_or_else(|| {
                    AppError::config("bc kind 'multipoint' needs 'weights'".into())
                })?;
                BoundaryFunctional::multipoint(
                    endpoint,
                    nodes,
                    weights,
                    self.target.unwrap_or(0.0),
                )
            }
            "integer_part" => {
                BoundaryFunctional::integer_part(endpoint, need(&self.target, "target")?)
            }
            "custom" => {
                let src = self
                    .expr
                    .as_deref()
                    .ok_or_else(|| AppError::config("bc kind 'custom' needs 'expr'".into()))?;
                let stat_nodes = self.stat_nodes.clone().unwrap_or_default();
                let mut vars: Vec<String> = vec!["y".into(), "mean".into()];
                for i in 0..stat_nodes.len() {
                    vars.push(format!("v{i}"));
                }
                let var_refs: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
                let expr = Expr::parse(src, &var_refs)
                    .map_err(|e| AppError::config(format!("bc expr: {e}")))?;
                let monotone = self.monotone.ok_or_else(|| {
                    AppError::config(
                        "bc kind 'custom' must declare 'monotone' (nonincreasing in gamma)".into(),
                    )
                })?;
                BoundaryFunctional::custom(endpoint, expr, stat_nodes, monotone)
            }
            other => return Err(AppError::config(format!("unknown bc kind '{other}'"))),
        })
    }
}

/// Fully constructed run inputs.
pub struct BuiltConfig {
    pub file: FileConfig,
    pub spec: ProblemSpec,
    pub solver: SolverConfig,
}

pub fn build(file: FileConfig) -> Result<BuiltConfig, AppError> {
    let (p, q) = match (&file.problem.p, &file.problem.q, &file.problem.market) {
        (Some(p), Some(q), None) => (
            CoefficientExpr::parse(p).map_err(|e| AppError::config(format!("p: {e}")))?,
            CoefficientExpr::parse(q).map_err(|e| AppError::config(format!("q: {e}")))?,
        ),
        (None, None, Some(m)) => coefficients_from_market(&MarketParams {
            sigma_tilde: m.sigma_tilde,
            sigma: m.sigma,
            r: m.r,
            b: m.b,
        })
        .map_err(|e| AppError::config(format!("market parameters: {e}")))?,
        _ => {
            return Err(AppError::config(
                "problem needs either both 'p' and 'q' or a 'market' table (not both)".into(),
            ))
        }
    };

    let left = file.bc.left.build(Endpoint::Left)?;
    let right = file.bc.right.build(Endpoint::Right)?;
    let bc = BoundaryConditionPair::new(left, right)
        .map_err(|e| AppError::config(format!("boundary conditions: {e}")))?;

    if file.mode == Mode::Dirichlet && bc.dirichlet_targets().is_none() {
        return Err(AppError::config(
            "mode 'dirichlet' requires both bc kinds to be 'dirichlet'".into(),
        ));
    }

    let spec = ProblemSpec::new(file.problem.c, file.problem.d, p, q, bc)
        .map_err(|e| AppError::config(format!("problem: {e}")))?;
    spec.validate_coefficients(file.solver.cert_n)
        .map_err(|e| AppError::config(format!("coefficients: {e}")))?;

    for bf in [&spec.bc.left, &spec.bc.right] {
        bf.validate(spec.c, spec.d, 128)
            .map_err(|e| AppError::config(format!("boundary conditions: {e}")))?;
    }

    let solver = file.solver.to_core();
    if solver.n < 8 || solver.n % 2 != 0 {
        return Err(AppError::config(format!(
            "solver.n must be an even number of intervals >= 8, got {}",
            solver.n
        )));
    }
    Ok(BuiltConfig {
        spec,
        solver,
        file,
    })
}
