//! Solution and trace CSV formats.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), so values
//! round-trip exactly and identical runs produce byte-identical files.

use std::fs;
use std::path::Path;

use tcbs_core::grid::GridFunction;
use tcbs_core::iterate::IterationTrace;
use tcbs_core::model::ProblemSpec;

use crate::AppError;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Columns: `x,V,V',V'',semilinear_residual,quadratic_residual`.
pub fn write_solution(
    path: &Path,
    spec: &ProblemSpec,
    v: &GridFunction,
) -> Result<(), AppError> {
    let semi = tcbs_core::dirichlet::semilinear_residual(spec, v)
        .map_err(|e| AppError::config(format!("residual evaluation: {e}")))?;
    let quad = tcbs_core::verify::quadratic_residual(spec, v)
        .map_err(|e| AppError::config(format!("residual evaluation: {e}")))?;
    let mut out = String::from("x,V,V',V'',semilinear_residual,quadratic_residual\n");
    for i in 0..=v.n() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt(v.xs()[i]),
            fmt(v.values()[i]),
            fmt(v.d1()[i]),
            fmt(v.d2()[i]),
            fmt(semi[i]),
            fmt(quad[i]),
        ));
    }
    fs::write(path, out).map_err(|e| AppError::io(path, e))
}

/// Columns: `iter,gamma_c,gamma_d,delta`.
pub fn write_trace(path: &Path, trace: &IterationTrace) -> Result<(), AppError> {
    let mut out = String::from("iter,gamma_c,gamma_d,delta\n");
    for (i, s) in trace.steps.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            i + 1,
            fmt(s.gamma_c),
            fmt(s.gamma_d),
            fmt(s.delta)
        ));
    }
    fs::write(path, out).map_err(|e| AppError::io(path, e))
}

/// Read a solution CSV back: only the `x` and `V` columns are used, the
/// derivatives are recomputed by the verifier.
pub fn read_solution(path: &Path, c: f64, d: f64) -> Result<GridFunction, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| AppError::config(format!("{}: empty file", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    let x_idx = cols
        .iter()
        .position(|c| *c == "x")
        .ok_or_else(|| AppError::config(format!("{}: no 'x' column", path.display())))?;
    let v_idx = cols
        .iter()
        .position(|c| *c == "V")
        .ok_or_else(|| AppError::config(format!("{}: no 'V' column", path.display())))?;
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize| -> Result<f64, AppError> {
            fields
                .get(idx)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| {
                    AppError::config(format!(
                        "{}: bad value on data row {}",
                        path.display(),
                        lineno + 1
                    ))
                })
        };
        let _ = parse(x_idx)?;
        values.push(parse(v_idx)?);
    }
    GridFunction::from_values(c, d, values)
        .map_err(|e| AppError::config(format!("{}: {e}", path.display())))
}
