//! Construction and certification of lower/upper solution brackets.
//!
//! Three closed-form candidates are built for Dirichlet data `(Vc, Vd)`:
//!
//! * the ray `(Vd/d) x` through the origin (a lower solution whenever
//!   `Vd/d <= Vc/c`),
//! * a parabola with curvature `k` interpolating both endpoint values,
//!   a lower solution for any feasible `k` (see [`solve_curvature_k`]),
//! * the chord through `(c, Vc)` and `(d, Vd)`, always an upper solution.
//!
//! [`certify`] checks any piecewise-polynomial candidate against the weak
//! definition on a grid: the differential inequality on smooth pieces, the
//! angle direction at kinks, and the boundary inequalities (Dirichlet or
//! functional).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::funcbc::FuncBcError;
use crate::grid::{GridError, GridFunction};
use crate::math;
use crate::model::{self, ModelError, NagumoBounds, ProblemSpec};

/// Relative threshold above which one-sided slopes count as a kink.
const KINK_REL: f64 = 1e-7;

/// Lower bound of the curvature search; returned directly when `q` vanishes.
const K_MIN: f64 = 1e-8;

/// Safety margin added to the bisected minimal curvature.
const K_MARGIN: f64 = 1e-9;

/// Default absolute tolerance for certification residuals.
pub const CERT_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Polynomials and piecewise-smooth candidates
// ---------------------------------------------------------------------------

/// Dense polynomial, `coeffs[i] * x^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Poly {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    pub fn constant(v: f64) -> Poly {
        Poly::new(vec![v])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn deriv(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::constant(0.0);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }

    fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.coeffs.get(i).copied().unwrap_or(0.0)
                - other.coeffs.get(i).copied().unwrap_or(0.0);
        }
        Poly::new(out)
    }
}

/// One smooth piece of a candidate, with cached derivative polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub poly: Poly,
    d1: Poly,
    d2: Poly,
}

impl Piece {
    fn new(lo: f64, hi: f64, poly: Poly) -> Piece {
        let d1 = poly.deriv();
        let d2 = d1.deriv();
        Piece { lo, hi, poly, d1, d2 }
    }
}

/// A candidate lower/upper solution: polynomial pieces tiling `[c, d]` with
/// marked kink locations.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSmoothFn {
    pieces: Vec<Piece>,
    kinks: Vec<f64>,
}

impl PiecewiseSmoothFn {
    pub fn from_poly(c: f64, d: f64, poly: Poly) -> PiecewiseSmoothFn {
        PiecewiseSmoothFn {
            pieces: vec![Piece::new(c, d, poly)],
            kinks: Vec::new(),
        }
    }

    pub fn constant(c: f64, d: f64, v: f64) -> PiecewiseSmoothFn {
        PiecewiseSmoothFn::from_poly(c, d, Poly::constant(v))
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.pieces[0].lo, self.pieces.last().unwrap().hi)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    fn piece_index(&self, x: f64) -> usize {
        // Right-owner rule at internal boundaries; last piece owns `d`.
        for (i, p) in self.pieces.iter().enumerate() {
            if x < p.hi {
                return i;
            }
        }
        self.pieces.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].poly.eval(x)
    }

    pub fn eval_d1(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].d1.eval(x)
    }

    pub fn eval_d2(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].d2.eval(x)
    }

    /// Left and right one-sided slopes at `x0`.
    pub fn one_sided_slopes(&self, x0: f64) -> (f64, f64) {
        let mut left = None;
        let mut right = None;
        for p in &self.pieces {
            if p.lo < x0 && x0 <= p.hi {
                left = Some(p.d1.eval(x0));
            }
            if p.lo <= x0 && x0 < p.hi {
                right = Some(p.d1.eval(x0));
            }
        }
        let l = left.or(right).unwrap();
        let r = right.or(left).unwrap();
        (l, r)
    }

    /// Sample onto `n + 1` uniform nodes.
    pub fn sample(&self, n: usize) -> Result<GridFunction, GridError> {
        let (c, d) = self.domain();
        GridFunction::sample(c, d, n, |x| self.eval(x))
    }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Why a candidate failed certification (or could not be checked).
#[derive(Debug, Clone, PartialEq)]
pub enum CertifyError {
    /// Differential inequality violated at a grid point.
    Residual { x: f64, value: f64, tol: f64 },
    /// A kink bends the wrong way for the requested side.
    KinkAngle { x: f64, left_slope: f64, right_slope: f64 },
    /// A boundary inequality failed.
    Boundary { left: bool, value: f64, tol: f64 },
    Model(ModelError),
    Grid(GridError),
    FuncBc(FuncBcError),
    /// Candidate domain does not match the problem interval.
    DomainMismatch,
}

impl fmt::Display for CertifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertifyError::Residual { x, value, tol } => write!(
                f,
                "differential inequality violated at x = {x}: residual {value} (tolerance {tol})"
            ),
            CertifyError::KinkAngle {
                x,
                left_slope,
                right_slope,
            } => write!(
                f,
                "kink at x = {x} bends the wrong way (slopes {left_slope} -> {right_slope})"
            ),
            CertifyError::Boundary { left, value, tol } => {
                let side = if *left { "left" } else { "right" };
                write!(f, "{side} boundary inequality violated: B = {value} (tolerance {tol})")
            }
            CertifyError::Model(e) => write!(f, "{e}"),
            CertifyError::Grid(e) => write!(f, "{e}"),
            CertifyError::FuncBc(e) => write!(f, "{e}"),
            CertifyError::DomainMismatch => write!(f, "candidate domain does not match problem"),
        }
    }
}

impl core::error::Error for CertifyError {}

#[derive(Debug, Clone, PartialEq)]
pub enum BracketError {
    Certify { lower: bool, source: CertifyError },
    /// `alpha > beta` somewhere on the grid.
    NotOrdered { x: f64, alpha: f64, beta: f64 },
    /// Requested parabola curvature fails the feasibility inequality.
    CurvatureInfeasible { k: f64, rhs: f64 },
    Model(ModelError),
}

impl fmt::Display for BracketError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketError::Certify { lower, source } => {
                let side = if *lower { "lower" } else { "upper" };
                write!(f, "{side} candidate failed certification: {source}")
            }
            BracketError::NotOrdered { x, alpha, beta } => {
                write!(f, "bracket not ordered at x = {x}: alpha = {alpha} > beta = {beta}")
            }
            BracketError::CurvatureInfeasible { k, rhs } => {
                write!(f, "curvature k = {k} fails the feasibility inequality k >= {rhs}")
            }
            BracketError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for BracketError {}

// ---------------------------------------------------------------------------
// The closed-form candidates
// ---------------------------------------------------------------------------

/// The ray `(Vd/d) x`; a lower solution exactly when `Vd/d <= Vc/c`.
pub fn ray_lower_solution(spec: &ProblemSpec, vd: f64) -> PiecewiseSmoothFn {
    PiecewiseSmoothFn::from_poly(spec.c, spec.d, Poly::new(vec![0.0, vd / spec.d]))
}

/// The chord through `(c, Vc)` and `(d, Vd)`; always an upper solution since
/// the nonlinearity is nonpositive.
pub fn chord_upper_solution(spec: &ProblemSpec, vc: f64, vd: f64) -> PiecewiseSmoothFn {
    let slope = (vd - vc) / (spec.d - spec.c);
    let intercept = (spec.d * vc - spec.c * vd) / (spec.d - spec.c);
    PiecewiseSmoothFn::from_poly(spec.c, spec.d, Poly::new(vec![intercept, slope]))
}

/// Right-hand side of the curvature feasibility inequality for a given `k`.
///
/// The inner maximum of the affine-in-`x^2` argument is attained at an
/// endpoint; a coarse grid is scanned as well purely as a safety net.
pub fn curvature_rhs(spec: &ProblemSpec, vc: f64, vd: f64, k: f64) -> Result<f64, ModelError> {
    let q_max = max_q(spec)?;
    if q_max == 0.0 {
        return Ok(0.0);
    }
    let slope = (vd - vc) / (spec.d - spec.c);
    let shift = vc - slope * spec.c;
    let arg = |x: f64| math::abs(0.5 * k * (x * x - spec.c * spec.d) + shift);
    let mut inner = math::max(arg(spec.c), arg(spec.d));
    for i in 0..=64 {
        let x = spec.c + (spec.d - spec.c) * i as f64 / 64.0;
        inner = math::max(inner, arg(x));
    }
    Ok(math::sqrt(q_max / (spec.c * spec.c * spec.c)) * math::sqrt(inner))
}

/// Whether `k` satisfies the curvature feasibility inequality.
pub fn curvature_feasible(spec: &ProblemSpec, vc: f64, vd: f64, k: f64) -> Result<bool, ModelError> {
    let rhs = curvature_rhs(spec, vc, vd, k)?;
    Ok(k + 1e-12 * (1.0 + math::abs(k)) >= rhs)
}

/// Least feasible parabola curvature, found by bisection on
/// `k - rhs(k)` and returned with a small safety margin.
pub fn solve_curvature_k(spec: &ProblemSpec, vc: f64, vd: f64) -> Result<f64, BracketError> {
    let q_max = max_q(spec).map_err(BracketError::Model)?;
    if q_max == 0.0 {
        return Ok(K_MIN);
    }
    let phi = |k: f64| -> Result<f64, ModelError> { Ok(k - curvature_rhs(spec, vc, vd, k)?) };
    let mut lo = K_MIN;
    if phi(lo).map_err(BracketError::Model)? >= 0.0 {
        return Ok(lo);
    }
    let mut hi = 1.0;
    let mut guard = 0;
    while phi(hi).map_err(BracketError::Model)? <= 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 400 {
            // Unreachable for bounded coefficients: k grows linearly while
            // the right-hand side grows like sqrt(k).
            return Ok(hi);
        }
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if phi(mid).map_err(BracketError::Model)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo + K_MARGIN)
}

/// The endpoint-interpolating parabola with curvature `k`; rejects `k` below
/// the feasibility threshold.
pub fn parabola_lower_solution(
    spec: &ProblemSpec,
    vc: f64,
    vd: f64,
    k: f64,
) -> Result<PiecewiseSmoothFn, BracketError> {
    if !curvature_feasible(spec, vc, vd, k).map_err(BracketError::Model)? {
        let rhs = curvature_rhs(spec, vc, vd, k).map_err(BracketError::Model)?;
        return Err(BracketError::CurvatureInfeasible { k, rhs });
    }
    let slope = (vd - vc) / (spec.d - spec.c);
    let a2 = 0.5 * k;
    let a1 = slope - 0.5 * k * (spec.d + spec.c);
    let a0 = 0.5 * k * spec.c * spec.d + vc - slope * spec.c;
    Ok(PiecewiseSmoothFn::from_poly(
        spec.c,
        spec.d,
        Poly::new(vec![a0, a1, a2]),
    ))
}

fn max_q(spec: &ProblemSpec) -> Result<f64, ModelError> {
    let xs = crate::grid::uniform_grid(spec.c, spec.d, model::DEFAULT_CERT_POINTS - 1);
    let mut m = 0.0f64;
    for &x in &xs {
        let q = spec.q.eval(x).map_err(ModelError::Eval)?;
        if q < 0.0 {
            return Err(ModelError::NegativeCoefficient { name: "q", x, value: q });
        }
        m = math::max(m, q);
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Pointwise maximum
// ---------------------------------------------------------------------------

/// Pointwise maximum of two candidates over the same interval.
///
/// Crossing points become kinks; the maximum of two lower solutions bends
/// upward there, which is exactly the admissible angle direction.
pub fn pointwise_max(a: &PiecewiseSmoothFn, b: &PiecewiseSmoothFn) -> PiecewiseSmoothFn {
    let (c, d) = a.domain();
    debug_assert!({
        let (bc, bd) = b.domain();
        math::abs(bc - c) < 1e-12 * (1.0 + math::abs(c))
            && math::abs(bd - d) < 1e-12 * (1.0 + math::abs(d))
    });

    // Merged breakpoints of both piece lists.
    let mut breaks: Vec<f64> = Vec::new();
    for p in a.pieces().iter().chain(b.pieces().iter()) {
        breaks.push(p.lo);
        breaks.push(p.hi);
    }
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    breaks.dedup_by(|x, y| math::abs(*x - *y) <= 1e-14 * (1.0 + math::abs(*y)));

    let mut segments: Vec<(f64, f64, Poly)> = Vec::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let pa = &a.pieces()[a.piece_index(0.5 * (lo + hi))].poly;
        let pb = &b.pieces()[b.piece_index(0.5 * (lo + hi))].poly;
        let mut cuts = vec![lo];
        cuts.extend(roots_in_open_interval(&pa.sub(pb), lo, hi));
        cuts.push(hi);
        for sw in cuts.windows(2) {
            let (slo, shi) = (sw[0], sw[1]);
            if shi <= slo {
                continue;
            }
            let mid = 0.5 * (slo + shi);
            let winner = if pa.eval(mid) >= pb.eval(mid) { pa } else { pb };
            segments.push((slo, shi, winner.clone()));
        }
    }

    // Merge adjacent segments carrying the same polynomial.
    let mut pieces: Vec<Piece> = Vec::new();
    for (lo, hi, poly) in segments {
        if let Some(last) = pieces.last_mut() {
            if last.poly == poly {
                last.hi = hi;
                continue;
            }
        }
        pieces.push(Piece::new(lo, hi, poly));
    }
    pieces.first_mut().unwrap().lo = c;
    pieces.last_mut().unwrap().hi = d;

    let mut out = PiecewiseSmoothFn {
        pieces,
        kinks: Vec::new(),
    };
    let mut kinks = Vec::new();
    for i in 1..out.pieces.len() {
        let x0 = out.pieces[i].lo;
        let l = out.pieces[i - 1].d1.eval(x0);
        let r = out.pieces[i].d1.eval(x0);
        if math::abs(l - r) > KINK_REL * math::max(1.0, math::max(math::abs(l), math::abs(r))) {
            kinks.push(x0);
        }
    }
    out.kinks = kinks;
    out
}

/// Real roots of `poly` strictly inside `(lo, hi)`, sorted.
fn roots_in_open_interval(poly: &Poly, lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let inside = |r: f64| r > lo + 1e-13 * span && r < hi - 1e-13 * span;
    let mut roots: Vec<f64> = Vec::new();
    match poly.degree() {
        0 => {}
        1 => {
            let r = -poly.coeffs()[0] / poly.coeffs()[1];
            if inside(r) {
                roots.push(r);
            }
        }
        2 => {
            let (c0, c1, c2) = (poly.coeffs()[0], poly.coeffs()[1], poly.coeffs()[2]);
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc >= 0.0 {
                let sq = math::sqrt(disc);
                let q = -0.5 * (c1 + if c1 >= 0.0 { sq } else { -sq });
                let r1 = q / c2;
                let r2 = if q != 0.0 { c0 / q } else { r1 };
                for r in [r1, r2] {
                    if r.is_finite() && inside(r) {
                        roots.push(r);
                    }
                }
            }
        }
        _ => {
            // Sampled sign changes refined by bisection; adequate for the
            // low-degree candidates this library constructs.
            let samples = 64;
            let mut prev_x = lo;
            let mut prev_v = poly.eval(lo);
            for i in 1..=samples {
                let x = lo + span * i as f64 / samples as f64;
                let v = poly.eval(x);
                if prev_v * v < 0.0 {
                    let (mut u, mut w) = (prev_x, x);
                    for _ in 0..200 {
                        let m = 0.5 * (u + w);
                        if poly.eval(u) * poly.eval(m) <= 0.0 {
                            w = m;
                        } else {
                            u = m;
                        }
                        if w - u <= 1e-14 * span {
                            break;
                        }
                    }
                    let r = 0.5 * (u + w);
                    if inside(r) {
                        roots.push(r);
                    }
                }
                prev_x = x;
                prev_v = v;
            }
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| math::abs(*x - *y) <= 1e-10 * (1.0 + span));
    roots
}

// ---------------------------------------------------------------------------
// Certification
// ---------------------------------------------------------------------------

/// Which role a candidate is certified for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Side {
    Lower,
    Upper,
}

/// Evidence from one kink check.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KinkCheck {
    pub x: f64,
    pub left_slope: f64,
    pub right_slope: f64,
}

/// Grid-level certification evidence for one candidate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Certificate {
    pub side: Side,
    /// Number of grid points checked.
    pub points: usize,
    /// Extremal signed residual of the differential inequality (minimum for
    /// lower candidates, maximum for upper ones).
    pub worst_residual: f64,
    pub worst_residual_x: f64,
    pub kinks: Vec<KinkCheck>,
    /// Boundary functional values at the candidate's endpoints.
    pub bc_left: f64,
    pub bc_right: f64,
    pub tol: f64,
}

/// Certify `candidate` as a lower or upper solution on a `grid_n`-point grid.
///
/// On smooth pieces the residual `f'' + h(x, f, f')` must stay above `-tol`
/// (lower) or below `+tol` (upper); kinks must bend upward (lower) or
/// downward (upper); and the boundary functionals evaluated on the candidate
/// must be `<= tol` (lower) or `>= -tol` (upper).
pub fn certify(
    candidate: &PiecewiseSmoothFn,
    spec: &ProblemSpec,
    side: Side,
    grid_n: usize,
    tol: f64,
) -> Result<Certificate, CertifyError> {
    let (c, d) = candidate.domain();
    if math::abs(c - spec.c) > 1e-9 * (1.0 + math::abs(spec.c))
        || math::abs(d - spec.d) > 1e-9 * (1.0 + math::abs(spec.d))
    {
        return Err(CertifyError::DomainMismatch);
    }
    let mut points = grid_n.max(65);
    if (points - 1) % 2 != 0 {
        points += 1; // even interval count so functional integrals can use Simpson
    }
    let n = points - 1;
    let xs = crate::grid::uniform_grid(spec.c, spec.d, n);
    let cell = (spec.d - spec.c) / n as f64;

    let mut worst = f64::NAN;
    let mut worst_x = spec.c;
    for &x in &xs {
        if candidate
            .kinks()
            .iter()
            .any(|&k| math::abs(x - k) <= 0.5 * cell)
        {
            continue;
        }
        let pv = spec.p.eval(x).map_err(|e| CertifyError::Model(ModelError::Eval(e)))?;
        let qv = spec.q.eval(x).map_err(|e| CertifyError::Model(ModelError::Eval(e)))?;
        if pv < 0.0 {
            return Err(CertifyError::Model(ModelError::NegativeCoefficient {
                name: "p",
                x,
                value: pv,
            }));
        }
        if qv < 0.0 {
            return Err(CertifyError::Model(ModelError::NegativeCoefficient {
                name: "q",
                x,
                value: qv,
            }));
        }
        let r = candidate.eval_d2(x)
            + model::h_term(pv, qv, x, candidate.eval(x), candidate.eval_d1(x));
        let extremal = match side {
            Side::Lower => worst.is_nan() || r < worst,
            Side::Upper => worst.is_nan() || r > worst,
        };
        if extremal {
            worst = r;
            worst_x = x;
        }
    }
    if worst.is_nan() {
        worst = 0.0;
    }
    let residual_ok = match side {
        Side::Lower => worst >= -tol,
        Side::Upper => worst <= tol,
    };
    if !residual_ok {
        return Err(CertifyError::Residual {
            x: worst_x,
            value: worst,
            tol,
        });
    }

    let mut kink_evidence = Vec::new();
    for &k in candidate.kinks() {
        let (l, r) = candidate.one_sided_slopes(k);
        let ok = match side {
            Side::Lower => l < r,
            Side::Upper => l > r,
        };
        if !ok {
            return Err(CertifyError::KinkAngle {
                x: k,
                left_slope: l,
                right_slope: r,
            });
        }
        kink_evidence.push(KinkCheck {
            x: k,
            left_slope: l,
            right_slope: r,
        });
    }

    let gf = candidate.sample(n).map_err(CertifyError::Grid)?;
    let bc_left = spec
        .bc
        .left
        .eval(candidate.eval(spec.c), &gf)
        .map_err(CertifyError::FuncBc)?;
    let bc_right = spec
        .bc
        .right
        .eval(candidate.eval(spec.d), &gf)
        .map_err(CertifyError::FuncBc)?;
    for (left, value) in [(true, bc_left), (false, bc_right)] {
        let ok = match side {
            Side::Lower => value <= tol,
            Side::Upper => value >= -tol,
        };
        if !ok {
            return Err(CertifyError::Boundary { left, value, tol });
        }
    }

    Ok(Certificate {
        side,
        points,
        worst_residual: worst,
        worst_residual_x: worst_x,
        kinks: kink_evidence,
        bc_left,
        bc_right,
        tol,
    })
}

/// Certify a candidate given as a plain expression of `x`.
///
/// The candidate is sampled and differentiated with second-order stencils, so
/// the residual check carries an `O(h^2)` discretization error; pick `tol`
/// accordingly (1e-6 is a reasonable default at 4097 points). Kinks are not
/// detected on sampled candidates.
pub fn certify_expr(
    candidate: &crate::expr::CoefficientExpr,
    spec: &ProblemSpec,
    side: Side,
    grid_n: usize,
    tol: f64,
) -> Result<Certificate, CertifyError> {
    let mut points = grid_n.max(65);
    if (points - 1) % 2 != 0 {
        points += 1;
    }
    let n = points - 1;
    let xs = crate::grid::uniform_grid(spec.c, spec.d, n);
    let values = candidate
        .eval_on_grid(&xs)
        .map_err(|e| CertifyError::FuncBc(FuncBcError::Eval(e.error)))?;
    let gf = GridFunction::from_values(spec.c, spec.d, values).map_err(CertifyError::Grid)?;

    let mut worst = f64::NAN;
    let mut worst_x = spec.c;
    for i in 1..n {
        let x = xs[i];
        let pv = spec.p.eval(x).map_err(|e| CertifyError::Model(ModelError::Eval(e)))?;
        let qv = spec.q.eval(x).map_err(|e| CertifyError::Model(ModelError::Eval(e)))?;
        let r = gf.d2()[i] + model::h_term(pv, qv, x, gf.values()[i], gf.d1()[i]);
        let extremal = match side {
            Side::Lower => worst.is_nan() || r < worst,
            Side::Upper => worst.is_nan() || r > worst,
        };
        if extremal {
            worst = r;
            worst_x = x;
        }
    }
    if worst.is_nan() {
        worst = 0.0;
    }
    let residual_ok = match side {
        Side::Lower => worst >= -tol,
        Side::Upper => worst <= tol,
    };
    if !residual_ok {
        return Err(CertifyError::Residual {
            x: worst_x,
            value: worst,
            tol,
        });
    }

    let bc_left = spec
        .bc
        .left
        .eval(gf.left_value(), &gf)
        .map_err(CertifyError::FuncBc)?;
    let bc_right = spec
        .bc
        .right
        .eval(gf.right_value(), &gf)
        .map_err(CertifyError::FuncBc)?;
    for (left, value) in [(true, bc_left), (false, bc_right)] {
        let ok = match side {
            Side::Lower => value <= tol,
            Side::Upper => value >= -tol,
        };
        if !ok {
            return Err(CertifyError::Boundary { left, value, tol });
        }
    }

    Ok(Certificate {
        side,
        points,
        worst_residual: worst,
        worst_residual_x: worst_x,
        kinks: Vec::new(),
        bc_left,
        bc_right,
        tol,
    })
}

// ---------------------------------------------------------------------------
// Certified pairs
// ---------------------------------------------------------------------------

/// A certified lower/upper solution pair with `alpha <= beta`.
#[derive(Debug, Clone)]
pub struct BracketPair {
    pub alpha: PiecewiseSmoothFn,
    pub beta: PiecewiseSmoothFn,
    pub alpha_cert: Certificate,
    pub beta_cert: Certificate,
}

impl BracketPair {
    /// Certify both candidates and check the ordering on the grid.
    pub fn build(
        alpha: PiecewiseSmoothFn,
        beta: PiecewiseSmoothFn,
        spec: &ProblemSpec,
        grid_n: usize,
        tol: f64,
    ) -> Result<BracketPair, BracketError> {
        let alpha_cert = certify(&alpha, spec, Side::Lower, grid_n, tol)
            .map_err(|source| BracketError::Certify { lower: true, source })?;
        let beta_cert = certify(&beta, spec, Side::Upper, grid_n, tol)
            .map_err(|source| BracketError::Certify { lower: false, source })?;
        let xs = crate::grid::uniform_grid(spec.c, spec.d, grid_n.max(65) - 1);
        for &x in &xs {
            let (a, b) = (alpha.eval(x), beta.eval(x));
            if a > b + 1e-9 * (1.0 + math::abs(b)) {
                return Err(BracketError::NotOrdered { x, alpha: a, beta: b });
            }
        }
        Ok(BracketPair {
            alpha,
            beta,
            alpha_cert,
            beta_cert,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        self.alpha.domain()
    }

    pub fn alpha_at(&self, x: f64) -> f64 {
        self.alpha.eval(x)
    }

    pub fn beta_at(&self, x: f64) -> f64 {
        self.beta.eval(x)
    }

    /// `sup |y|` over the bracket on a grid.
    pub fn y_abs_sup(&self, grid_n: usize) -> f64 {
        let (c, d) = self.domain();
        let xs = crate::grid::uniform_grid(c, d, grid_n.max(65) - 1);
        let mut m = 0.0f64;
        for &x in &xs {
            m = math::max(m, math::abs(self.alpha.eval(x)));
            m = math::max(m, math::abs(self.beta.eval(x)));
        }
        m
    }

    /// Growth bounds valid over this bracket. The literal right-endpoint
    /// anchor `beta(d)` is kept when it dominates `sqrt(sup |y|)`; otherwise
    /// the safe bracket-wide anchor is substituted and recorded.
    pub fn nagumo(&self, spec: &ProblemSpec, grid_n: usize) -> Result<NagumoBounds, ModelError> {
        let beta_d = self.beta.eval(spec.d);
        let safe = math::sqrt(self.y_abs_sup(grid_n));
        let (anchor, literal) = if beta_d >= safe {
            (beta_d, true)
        } else {
            (safe, false)
        };
        model::nagumo_bounds_with_anchor(spec, beta_d, anchor, literal, grid_n)
    }
}
