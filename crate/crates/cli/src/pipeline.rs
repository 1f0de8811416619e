//! Orchestration of the solve / certify / verify commands.

use std::path::{Path, PathBuf};

use tcbs_core::bracket::{
    certify_expr, chord_upper_solution, curvature_feasible, curvature_rhs,
    parabola_lower_solution, pointwise_max, ray_lower_solution, solve_curvature_k, BracketPair,
    PiecewiseSmoothFn, Side,
};
use tcbs_core::dirichlet::{solve_extremal, DirichletProblem, Extremal, SolveError};
use tcbs_core::expr::CoefficientExpr;
use tcbs_core::funcbc::FuncBcError;
use tcbs_core::grid::GridFunction;
use tcbs_core::iterate::{extremal_fixed_point, IterateError};
use tcbs_core::verify::{full_check, CheckConfig, SolutionReport};

use crate::config::{BuiltConfig, Mode, WhichSel};
use crate::report::{describe_bc, write_report, BracketOut, BoundaryOut, ProblemOut, Report, RunOut, TraceSummary};
use crate::{csvio, AppError};

fn which_list(sel: WhichSel) -> Vec<Extremal> {
    match sel {
        WhichSel::Greatest => vec![Extremal::Greatest],
        WhichSel::Least => vec![Extremal::Least],
        WhichSel::Both => vec![Extremal::Greatest, Extremal::Least],
    }
}

fn which_name(which: Extremal) -> &'static str {
    match which {
        Extremal::Greatest => "greatest",
        Extremal::Least => "least",
    }
}

/// Output path for one run: unchanged for a single target, suffixed with
/// `.greatest` / `.least` before the extension when both are requested.
fn run_path(base: &Path, which: Extremal, both: bool) -> PathBuf {
    if !both {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = base
        .extension()
        .map(|s| format!(".{}", s.to_string_lossy()))
        .unwrap_or_default();
    base.with_file_name(format!("{stem}.{}{ext}", which_name(which)))
}

fn problem_out(cfg: &BuiltConfig) -> ProblemOut {
    ProblemOut {
        c: cfg.spec.c,
        d: cfg.spec.d,
        p: cfg.spec.p.source().to_string(),
        q: cfg.spec.q.source().to_string(),
        bc_left: describe_bc(&cfg.spec.bc.left),
        bc_right: describe_bc(&cfg.spec.bc.right),
    }
}

struct BuiltBracket {
    pair: BracketPair,
    k: Option<f64>,
    k_feasible: Option<bool>,
    k_rhs: Option<f64>,
}

/// Dirichlet-mode bracket: the chord above, and below the parabola (with the
/// solved or pinned curvature) joined with the ray when the ray is feasible.
fn dirichlet_bracket(cfg: &BuiltConfig) -> Result<BuiltBracket, AppError> {
    let spec = &cfg.spec;
    let (vc, vd) = spec.bc.dirichlet_targets().expect("dirichlet mode");
    let k = match cfg.file.bracket.as_ref().and_then(|b| b.k) {
        Some(k) => k,
        None => solve_curvature_k(spec, vc, vd).map_err(AppError::cert)?,
    };
    let feasible = curvature_feasible(spec, vc, vd, k)
        .map_err(|e| AppError::cert_msg(format!("{e}")))?;
    let rhs = curvature_rhs(spec, vc, vd, k).map_err(|e| AppError::cert_msg(format!("{e}")))?;
    let parabola = parabola_lower_solution(spec, vc, vd, k).map_err(AppError::cert)?;
    let alpha = if vd / spec.d <= vc / spec.c {
        pointwise_max(&ray_lower_solution(spec, vd), &parabola)
    } else {
        parabola
    };
    let beta = chord_upper_solution(spec, vc, vd);
    let pair = BracketPair::build(alpha, beta, spec, cfg.file.solver.cert_n, cfg.file.solver.cert_tol)
        .map_err(AppError::cert)?;
    Ok(BuiltBracket {
        pair,
        k: Some(k),
        k_feasible: Some(feasible),
        k_rhs: Some(rhs),
    })
}

fn functional_bracket(cfg: &BuiltConfig) -> Result<BuiltBracket, AppError> {
    let spec = &cfg.spec;
    let section = cfg
        .file
        .bracket
        .as_ref()
        .ok_or_else(|| AppError::config("functional mode needs a [bracket] section".into()))?;
    match section.kind.as_deref().unwrap_or("ray-const") {
        "ray-const" => {
            let vd = section.vd.ok_or_else(|| {
                AppError::config("[bracket] kind 'ray-const' needs 'vd'".into())
            })?;
            let level = section.beta_level.unwrap_or(vd);
            let alpha = ray_lower_solution(spec, vd);
            let beta = PiecewiseSmoothFn::constant(spec.c, spec.d, level);
            let pair = BracketPair::build(
                alpha,
                beta,
                spec,
                cfg.file.solver.cert_n,
                cfg.file.solver.cert_tol,
            )
            .map_err(AppError::cert)?;
            Ok(BuiltBracket {
                pair,
                k: None,
                k_feasible: None,
                k_rhs: None,
            })
        }
        "custom" => Err(AppError::config(
            "custom brackets are supported by the 'certify' command only".into(),
        )),
        other => Err(AppError::config(format!("unknown bracket kind '{other}'"))),
    }
}

fn build_bracket(cfg: &BuiltConfig) -> Result<BuiltBracket, AppError> {
    match cfg.file.mode {
        Mode::Dirichlet => dirichlet_bracket(cfg),
        Mode::Functional => functional_bracket(cfg),
    }
}

fn check_config(cfg: &BuiltConfig) -> CheckConfig {
    CheckConfig {
        res_tol: cfg.solver.res_tol,
        bc_tol: cfg.solver.bc_check_tol,
        bracket_tol: cfg.solver.bracket_tol,
    }
}

fn map_iterate_error(e: IterateError) -> AppError {
    match e {
        IterateError::FuncBc(
            f @ (FuncBcError::BracketInequality { .. }
            | FuncBcError::MonotoneViolation { .. }
            | FuncBcError::MonotoneNotDeclared
            | FuncBcError::NegativeWeight { .. }),
        ) => AppError::cert_msg(format!("{f}")),
        IterateError::FinalCheck { .. } => AppError::verify_msg(format!("{e}")),
        other => AppError::converge(format!("{other}")),
    }
}

fn verify_and_report(
    cfg: &BuiltConfig,
    bracket: &BracketPair,
    v: &GridFunction,
) -> Result<SolutionReport, AppError> {
    let report = full_check(&cfg.spec, bracket, v, &check_config(cfg))
        .map_err(|e| AppError::config(format!("verification: {e}")))?;
    Ok(report)
}

/// `solve`: bracket construction, solve(s), verification, artifacts.
pub fn run_solve(cfg: &BuiltConfig, out_dir: &Path) -> Result<(), AppError> {
    let built = build_bracket(cfg)?;
    let bracket = &built.pair;
    let nagumo = bracket
        .nagumo(&cfg.spec, cfg.file.solver.cert_n)
        .map_err(|e| AppError::cert_msg(format!("{e}")))?;

    let targets = which_list(cfg.file.which);
    let both = targets.len() == 2;
    let mut runs = Vec::new();
    let mut all_pass = true;

    for which in targets {
        let sol_path = out_dir.join(run_path(&cfg.file.output.solution, which, both));
        let (solution, boundary, trace, final_residual, probe) = match cfg.file.mode {
            Mode::Dirichlet => {
                let (vc, vd) = cfg.spec.bc.dirichlet_targets().expect("dirichlet mode");
                let pb = DirichletProblem::new(&cfg.spec, vc, vd, bracket)
                    .map_err(|e| AppError::cert_msg(format!("{e}")))?;
                let out = solve_extremal(&pb, which, &cfg.solver).map_err(|e| match e {
                    SolveError::NonConvergence { .. } => AppError::converge(format!("{e}")),
                    other => AppError::converge(format!("{other}")),
                })?;
                (out.solution, None, None, out.final_residual, out.probe)
            }
            Mode::Functional => {
                let (v, trace) = extremal_fixed_point(&cfg.spec, bracket, which, &cfg.solver)
                    .map_err(map_iterate_error)?;
                let trace_path = out_dir.join(run_path(&cfg.file.output.trace, which, both));
                csvio::write_trace(&trace_path, &trace)?;
                let residual = tcbs_core::dirichlet::semilinear_residual(&cfg.spec, &v)
                    .map_err(|e| AppError::config(format!("{e}")))?
                    .iter()
                    .fold(0.0f64, |m, r| m.max(r.abs()));
                let boundary = trace.final_values.as_ref().map(BoundaryOut::from);
                let probe = tcbs_core::dirichlet::UniquenessProbe {
                    probes: cfg.solver.probe_seeds,
                    failures: 0,
                    max_spread: 0.0,
                    unique_empirical: !trace.probe_flagged,
                    combined_from_multiple: trace.probe_flagged,
                };
                (v, boundary, Some(TraceSummary::from(&trace)), residual, probe)
            }
        };

        let checks = verify_and_report(cfg, bracket, &solution)?;
        all_pass &= checks.all_pass;
        csvio::write_solution(&sol_path, &cfg.spec, &solution)?;
        runs.push(RunOut {
            which: which_name(which),
            boundary,
            trace,
            final_residual,
            probe,
            checks,
            solution_file: run_path(&cfg.file.output.solution, which, both)
                .to_string_lossy()
                .into_owned(),
        });
    }

    let report = Report {
        command: "solve",
        mode: cfg.file.mode,
        problem: problem_out(cfg),
        solver_seed: cfg.solver.seed,
        grid_intervals: cfg.solver.n,
        bracket: Some(BracketOut::new(
            bracket,
            nagumo,
            built.k,
            built.k_feasible,
            built.k_rhs,
        )),
        certification_errors: None,
        runs,
        all_pass,
    };
    write_report(&out_dir.join(&cfg.file.output.report), &report)?;
    if !all_pass {
        return Err(AppError::verify_msg(
            "one or more verification checks failed (see report)".into(),
        ));
    }
    Ok(())
}

/// `certify`: bracket construction and certification only.
pub fn run_certify(cfg: &BuiltConfig, out_dir: &Path) -> Result<(), AppError> {
    let custom = cfg
        .file
        .bracket
        .as_ref()
        .filter(|b| b.kind.as_deref() == Some("custom"));

    let (bracket_out, errors) = if let Some(section) = custom {
        // Custom candidates are certified through the sampled path.
        let mut errors = Vec::new();
        for (src, side) in [
            (section.alpha.as_deref(), Side::Lower),
            (section.beta.as_deref(), Side::Upper),
        ] {
            let Some(src) = src else {
                errors.push(format!("{side:?}: no candidate expression configured"));
                continue;
            };
            let expr = CoefficientExpr::parse(src)
                .map_err(|e| AppError::config(format!("candidate: {e}")))?;
            if let Err(e) = certify_expr(
                &expr,
                &cfg.spec,
                side,
                cfg.file.solver.cert_n,
                // sampled candidates carry O(h^2) stencil error
                cfg.file.solver.cert_tol.max(1e-6),
            ) {
                errors.push(format!("{side:?} candidate '{src}': {e}"));
            }
        }
        (None, errors)
    } else {
        match build_bracket(cfg) {
            Ok(built) => {
                let nagumo = built
                    .pair
                    .nagumo(&cfg.spec, cfg.file.solver.cert_n)
                    .map_err(|e| AppError::cert_msg(format!("{e}")))?;
                (
                    Some(BracketOut::new(
                        &built.pair,
                        nagumo,
                        built.k,
                        built.k_feasible,
                        built.k_rhs,
                    )),
                    Vec::new(),
                )
            }
            Err(e) if e.code == 2 => (None, vec![e.message.clone()]),
            Err(e) => return Err(e),
        }
    };

    let ok = errors.is_empty();
    let report = Report {
        command: "certify",
        mode: cfg.file.mode,
        problem: problem_out(cfg),
        solver_seed: cfg.solver.seed,
        grid_intervals: cfg.solver.n,
        bracket: bracket_out,
        certification_errors: if ok { None } else { Some(errors) },
        runs: Vec::new(),
        all_pass: ok,
    };
    write_report(&out_dir.join(&cfg.file.output.report), &report)?;
    if !ok {
        return Err(AppError::cert_msg("certification failed (see report)".into()));
    }
    Ok(())
}

/// `verify`: re-check a solution CSV against the configured problem.
pub fn run_verify(cfg: &BuiltConfig, solution_csv: &Path, out_dir: &Path) -> Result<(), AppError> {
    let built = build_bracket(cfg)?;
    let v = csvio::read_solution(solution_csv, cfg.spec.c, cfg.spec.d)?;
    let checks = verify_and_report(cfg, &built.pair, &v)?;
    let all_pass = checks.all_pass;
    let final_residual = tcbs_core::dirichlet::semilinear_residual(&cfg.spec, &v)
        .map_err(|e| AppError::config(format!("{e}")))?
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()));
    let nagumo = built
        .pair
        .nagumo(&cfg.spec, cfg.file.solver.cert_n)
        .map_err(|e| AppError::cert_msg(format!("{e}")))?;
    let report = Report {
        command: "verify",
        mode: cfg.file.mode,
        problem: problem_out(cfg),
        solver_seed: cfg.solver.seed,
        grid_intervals: v.n(),
        bracket: Some(BracketOut::new(
            &built.pair,
            nagumo,
            built.k,
            built.k_feasible,
            built.k_rhs,
        )),
        certification_errors: None,
        runs: vec![RunOut {
            which: "supplied",
            boundary: None,
            trace: None,
            final_residual,
            probe: tcbs_core::dirichlet::UniquenessProbe {
                probes: 0,
                failures: 0,
                max_spread: 0.0,
                unique_empirical: false,
                combined_from_multiple: false,
            },
            checks,
            solution_file: solution_csv.to_string_lossy().into_owned(),
        }],
        all_pass,
    };
    write_report(&out_dir.join(&cfg.file.output.report), &report)?;
    if !all_pass {
        return Err(AppError::verify_msg(
            "verification checks failed (see report)".into(),
        ));
    }
    Ok(())
}
