//! Shared test fixtures: an independent shooting oracle for the semilinear
//! Dirichlet problem and the standard example problems.
//!
//! Everything here deliberately avoids the library's evaluation paths: the
//! nonlinearity is the literal radical formula on `std` float math, and the
//! coefficients are hand-coded closures rather than parsed expressions.

#![allow(dead_code)]

use tcbs_core::bracket::{
    chord_upper_solution, parabola_lower_solution, pointwise_max, ray_lower_solution,
    solve_curvature_k, BracketPair, PiecewiseSmoothFn, CERT_TOL,
};
use tcbs_core::expr::CoefficientExpr;
use tcbs_core::funcbc::{BoundaryConditionPair, BoundaryFunctional, Endpoint};
use tcbs_core::model::ProblemSpec;

pub fn p28(x: f64) -> f64 {
    1.0 + x * x * x
}

pub fn q28(x: f64) -> f64 {
    x.floor()
}

/// The literal radical form of the nonlinearity, on `std` math.
pub fn h_literal(p: f64, q: f64, x: f64, y: f64, z: f64) -> f64 {
    let w = (x * z - y).abs();
    (p * x * x - (p * p * x.powi(4) + 4.0 * x.powi(3) * q * w).sqrt()) / (2.0 * x.powi(3))
}

/// Integrate `V'' = -h(x, V, V')` across one cell with `m` classical RK4
/// substeps. Coefficient lookups are nudged strictly inside the open cell so
/// a discontinuity sitting exactly on a cell boundary never contaminates the
/// stage values of the neighboring cell.
fn rk4_cell(
    p: &impl Fn(f64) -> f64,
    q: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    v0: f64,
    w0: f64,
    m: usize,
) -> (f64, f64) {
    let lo = a + 1e-9 * (1.0 + a.abs());
    let hi = b - 1e-9 * (1.0 + b.abs());
    let f = |x: f64, v: f64, w: f64| -> (f64, f64) {
        let xe = x.clamp(lo, hi);
        (w, -h_literal(p(xe), q(xe), x, v, w))
    };
    let h = (b - a) / m as f64;
    let (mut v, mut w) = (v0, w0);
    let mut x = a;
    for _ in 0..m {
        let (k1v, k1w) = f(x, v, w);
        let (k2v, k2w) = f(x + 0.5 * h, v + 0.5 * h * k1v, w + 0.5 * h * k1w);
        let (k3v, k3w) = f(x + 0.5 * h, v + 0.5 * h * k2v, w + 0.5 * h * k2w);
        let (k4v, k4w) = f(x + h, v + h * k3v, w + h * k3w);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        x += h;
    }
    (v, w)
}

/// Integrate from `c` to `d` with initial slope `s`, recording the value at
/// every node. Each cell is integrated adaptively (substep doubling until the
/// cell result settles below 1e-11).
pub fn integrate_ivp(
    p: &impl Fn(f64) -> f64,
    q: &impl Fn(f64) -> f64,
    nodes: &[f64],
    vc: f64,
    s: f64,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(nodes.len());
    out.push(vc);
    let (mut v, mut w) = (vc, s);
    for cell in nodes.windows(2) {
        let (a, b) = (cell[0], cell[1]);
        let mut m = 2;
        let (mut v1, mut w1) = rk4_cell(p, q, a, b, v, w, m);
        loop {
            let (v2, w2) = rk4_cell(p, q, a, b, v, w, 2 * m);
            if (v2 - v1).abs() + (w2 - w1).abs() <= 1e-11 || m >= 64 {
                v1 = v2;
                w1 = w2;
                break;
            }
            v1 = v2;
            w1 = w2;
            m *= 2;
        }
        v = v1;
        w = w1;
        out.push(v);
    }
    out
}

/// Shooting oracle: bisect on the initial slope until the right endpoint
/// value matches `vd`, then return the node values of the matched trajectory.
pub fn shooting_oracle(
    p: &impl Fn(f64) -> f64,
    q: &impl Fn(f64) -> f64,
    c: f64,
    d: f64,
    vc: f64,
    vd: f64,
    n: usize,
) -> Vec<f64> {
    let nodes: Vec<f64> = (0..=n).map(|i| c + (d - c) * i as f64 / n as f64).collect();
    let end = |s: f64| *integrate_ivp(p, q, &nodes, vc, s).last().unwrap() - vd;
    let (mut lo, mut hi) = (-200.0, 200.0);
    let mut flo = end(lo);
    let fhi = end(hi);
    assert!(
        flo < 0.0 && fhi > 0.0,
        "shooting bracket failed: g({lo}) = {flo}, g({hi}) = {fhi}"
    );
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let fm = end(mid);
        if fm < 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let _ = flo;
    let s = 0.5 * (lo + hi);
    integrate_ivp(p, q, &nodes, vc, s)
}

// ---------------------------------------------------------------------------
// Standard fixtures
// ---------------------------------------------------------------------------

/// `[2, 6]`, `p = 1 + x^3`, `q = floor(x)`, `V(2) = 9`, `V(6) = 1`.
pub fn example28_spec() -> ProblemSpec {
    ProblemSpec::new(
        2.0,
        6.0,
        CoefficientExpr::parse("1 + x^3").unwrap(),
        CoefficientExpr::parse("floor(x)").unwrap(),
        BoundaryConditionPair::dirichlet(9.0, 1.0),
    )
    .unwrap()
}

pub fn example28_bracket(spec: &ProblemSpec) -> BracketPair {
    let k = solve_curvature_k(spec, 9.0, 1.0).unwrap();
    let alpha = pointwise_max(
        &ray_lower_solution(spec, 1.0),
        &parabola_lower_solution(spec, 9.0, 1.0, k).unwrap(),
    );
    let beta = chord_upper_solution(spec, 9.0, 1.0);
    BracketPair::build(alpha, beta, spec, 4097, CERT_TOL).unwrap()
}

/// `[c, d]`, `p = q = 1`, left condition `y = mean(V)/2`, right condition
/// `floor(y) = 4`.
pub fn example36_spec(c: f64, d: f64) -> ProblemSpec {
    let bc = BoundaryConditionPair::new(
        BoundaryFunctional::mean_fraction(Endpoint::Left, 0.5),
        BoundaryFunctional::integer_part(Endpoint::Right, 4.0),
    )
    .unwrap();
    ProblemSpec::new(
        c,
        d,
        CoefficientExpr::parse("1").unwrap(),
        CoefficientExpr::parse("1").unwrap(),
        bc,
    )
    .unwrap()
}

/// Ray-and-constant bracket for the functional example: ray through `(d, vd)`
/// below, the constant `vd` above.
pub fn example36_bracket(spec: &ProblemSpec, vd: f64) -> Result<BracketPair, tcbs_core::bracket::BracketError> {
    let alpha = ray_lower_solution(spec, vd);
    let beta = PiecewiseSmoothFn::constant(spec.c, spec.d, vd);
    BracketPair::build(alpha, beta, spec, 1025, CERT_TOL)
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
