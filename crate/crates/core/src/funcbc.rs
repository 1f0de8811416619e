//! Functional boundary conditions `B1(V(c), V) = 0`, `B2(V(d), V) = 0` and the
//! extremal-zero machinery used to resolve them into endpoint values.
//!
//! A [`BoundaryFunctional`] evaluates `B(y, gamma)` where `y` is a candidate
//! endpoint value and `gamma` a candidate solution. Built-in kinds cover
//! Dirichlet targets, weighted-integral and mean-fraction couplings,
//! multipoint sums and integer-part targets; a `custom` kind accepts a parsed
//! expression over `y` and integral statistics of `gamma`.
//!
//! [`extremal_zero`] finds the least or greatest zero of a scalar map that is
//! continuous or has downward jumps only (the regularity every built-in kind
//! satisfies). Zero sets of integer-part functionals are half-open; the
//! greatest zero is then reported just inside the set with the `open_set`
//! flag raised.

use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

use crate::bracket::BracketPair;
use crate::expr::{EvalError, Expr};
use crate::grid::{GridError, GridFunction};
use crate::math;

/// Which endpoint of the interval a functional constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Endpoint {
    Left,
    Right,
}

/// The functional forms accepted for a boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub enum BcKind {
    /// `B(y, gamma) = y - target`.
    Dirichlet { target: f64 },
    /// `B(y, gamma) = y - coefficient * integral(weight(x) * gamma(x))`.
    Integral {
        weight: crate::expr::CoefficientExpr,
        coefficient: f64,
    },
    /// `B(y, gamma) = y - fraction * mean(gamma)`.
    MeanFraction { fraction: f64 },
    /// `B(y, gamma) = y - target - sum_j weights[j] * gamma(nodes[j])`.
    Multipoint {
        nodes: Vec<f64>,
        weights: Vec<f64>,
        target: f64,
    },
    /// `B(y, gamma) = -floor(y) + target`.
    IntegerPart { target: f64 },
    /// An expression over `y`, `mean` (mean of gamma) and `v0..v{k-1}`
    /// (gamma sampled at `stat_nodes`).
    Custom { expr: Expr, stat_nodes: Vec<f64> },
}

/// One boundary functional together with its declared monotonicity.
///
/// `monotone_decl` asserts that `B(y, .)` is nonincreasing in `gamma`; it is
/// implied for the built-in kinds with nonnegative weights and must be
/// declared (and is spot-checked) for custom kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFunctional {
    pub kind: BcKind,
    pub endpoint: Endpoint,
    pub monotone_decl: bool,
}

impl BoundaryFunctional {
    pub fn dirichlet(endpoint: Endpoint, target: f64) -> Self {
        BoundaryFunctional {
            kind: BcKind::Dirichlet { target },
            endpoint,
            monotone_decl: true,
        }
    }

    pub fn integral(
        endpoint: Endpoint,
        weight: crate::expr::CoefficientExpr,
        coefficient: f64,
    ) -> Self {
        BoundaryFunctional {
            kind: BcKind::Integral {
                weight,
                coefficient,
            },
            endpoint,
            monotone_decl: true,
        }
    }

    pub fn mean_fraction(endpoint: Endpoint, fraction: f64) -> Self {
        BoundaryFunctional {
            kind: BcKind::MeanFraction { fraction },
            endpoint,
            monotone_decl: true,
        }
    }

    pub fn multipoint(endpoint: Endpoint, nodes: Vec<f64>, weights: Vec<f64>, target: f64) -> Self {
        BoundaryFunctional {
            kind: BcKind::Multipoint {
                nodes,
                weights,
                target,
            },
            endpoint,
            monotone_decl: true,
        }
    }

    pub fn integer_part(endpoint: Endpoint, target: f64) -> Self {
        BoundaryFunctional {
            kind: BcKind::IntegerPart { target },
            endpoint,
            monotone_decl: true,
        }
    }

    pub fn custom(endpoint: Endpoint, expr: Expr, stat_nodes: Vec<f64>, monotone_decl: bool) -> Self {
        BoundaryFunctional {
            kind: BcKind::Custom { expr, stat_nodes },
            endpoint,
            monotone_decl,
        }
    }

    /// True when `B(y, gamma)` does not actually depend on `gamma`.
    pub fn gamma_independent(&self) -> bool {
        matches!(
            self.kind,
            BcKind::Dirichlet { .. } | BcKind::IntegerPart { .. }
        )
    }

    /// Check the structural requirements that make `monotone_decl` sound for
    /// built-in kinds: nonnegative fractions, coefficients and weights.
    pub fn validate(&self, c: f64, d: f64, grid_n: usize) -> Result<(), FuncBcError> {
        match &self.kind {
            BcKind::MeanFraction { fraction } if *fraction < 0.0 => {
                Err(FuncBcError::NegativeWeight { value: *fraction })
            }
            BcKind::Integral {
                weight,
                coefficient,
            } => {
                if *coefficient < 0.0 {
                    return Err(FuncBcError::NegativeWeight {
                        value: *coefficient,
                    });
                }
                let xs = crate::grid::uniform_grid(c, d, grid_n.max(16));
                for &x in &xs {
                    let w = weight.eval(x).map_err(FuncBcError::Eval)?;
                    if w < 0.0 {
                        return Err(FuncBcError::NegativeWeight { value: w });
                    }
                }
                Ok(())
            }
            BcKind::Multipoint { nodes, weights, .. } => {
                if nodes.len() != weights.len() {
                    return Err(FuncBcError::MultipointShape {
                        nodes: nodes.len(),
                        weights: weights.len(),
                    });
                }
                for &w in weights {
                    if w < 0.0 {
                        return Err(FuncBcError::NegativeWeight { value: w });
                    }
                }
                for &x in nodes {
                    if x < c || x > d {
                        return Err(FuncBcError::NodeOutsideInterval { x, c, d });
                    }
                }
                Ok(())
            }
            BcKind::Custom { .. } if !self.monotone_decl => Err(FuncBcError::MonotoneNotDeclared),
            _ => Ok(()),
        }
    }

    /// Evaluate `B(y, gamma)`.
    pub fn eval(&self, y: f64, gamma: &GridFunction) -> Result<f64, FuncBcError> {
        Ok(self.prepare(gamma)?.eval(y))
    }

    /// Precompute the gamma-dependent part so the map `y -> B(y, gamma)` is
    /// cheap to evaluate repeatedly.
    pub fn prepare(&self, gamma: &GridFunction) -> Result<PreparedBc, FuncBcError> {
        Ok(match &self.kind {
            BcKind::Dirichlet { target } => PreparedBc::AffineShift { shift: *target },
            BcKind::Integral {
                weight,
                coefficient,
            } => {
                let w = weight
                    .eval_on_grid(gamma.xs())
                    .map_err(|e| FuncBcError::Eval(e.error))?;
                PreparedBc::AffineShift {
                    shift: coefficient * gamma.integral_weighted(&w).map_err(FuncBcError::Grid)?,
                }
            }
            BcKind::MeanFraction { fraction } => PreparedBc::AffineShift {
                shift: fraction * gamma.mean().map_err(FuncBcError::Grid)?,
            },
            BcKind::Multipoint {
                nodes,
                weights,
                target,
            } => {
                let mut shift = *target;
                for (x, w) in nodes.iter().zip(weights.iter()) {
                    shift += w * gamma.value_at(*x);
                }
                PreparedBc::AffineShift { shift }
            }
            BcKind::IntegerPart { target } => PreparedBc::FloorForm { target: *target },
            BcKind::Custom { expr, stat_nodes } => {
                let mut env = Vec::with_capacity(2 + stat_nodes.len());
                env.push(0.0); // y slot
                env.push(gamma.mean().map_err(FuncBcError::Grid)?);
                for &x in stat_nodes {
                    env.push(gamma.value_at(x));
                }
                PreparedBc::Custom {
                    expr: expr.clone(),
                    env,
                }
            }
        })
    }
}

/// `y -> B(y, gamma)` with the gamma statistics already folded in.
#[derive(Debug, Clone)]
pub enum PreparedBc {
    AffineShift { shift: f64 },
    FloorForm { target: f64 },
    Custom { expr: Expr, env: Vec<f64> },
}

impl PreparedBc {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            PreparedBc::AffineShift { shift } => y - shift,
            PreparedBc::FloorForm { target } => -math::floor(y) + target,
            PreparedBc::Custom { expr, env } => {
                let mut e: Vec<f64> = env.clone();
                e[0] = y;
                // Domain errors surface as +inf so the zero search treats the
                // point as unusable rather than aborting mid-scan.
                expr.eval(&e).unwrap_or(f64::INFINITY)
            }
        }
    }
}

/// The pair `(B1, B2)` attached to a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditionPair {
    pub left: BoundaryFunctional,
    pub right: BoundaryFunctional,
}

impl BoundaryConditionPair {
    pub fn new(
        left: BoundaryFunctional,
        right: BoundaryFunctional,
    ) -> Result<Self, FuncBcError> {
        if left.endpoint != Endpoint::Left || right.endpoint != Endpoint::Right {
            return Err(FuncBcError::WrongSides);
        }
        Ok(BoundaryConditionPair { left, right })
    }

    pub fn dirichlet(vc: f64, vd: f64) -> Self {
        BoundaryConditionPair {
            left: BoundaryFunctional::dirichlet(Endpoint::Left, vc),
            right: BoundaryFunctional::dirichlet(Endpoint::Right, vd),
        }
    }

    /// Dirichlet targets when both sides are plain Dirichlet conditions.
    pub fn dirichlet_targets(&self) -> Option<(f64, f64)> {
        match (&self.left.kind, &self.right.kind) {
            (BcKind::Dirichlet { target: vc }, BcKind::Dirichlet { target: vd }) => {
                Some((*vc, *vd))
            }
            _ => None,
        }
    }

    pub fn gamma_independent(&self) -> bool {
        self.left.gamma_independent() && self.right.gamma_independent()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FuncBcError {
    WrongSides,
    NegativeWeight { value: f64 },
    MultipointShape { nodes: usize, weights: usize },
    NodeOutsideInterval { x: f64, c: f64, d: f64 },
    MonotoneNotDeclared,
    /// The precondition `B(alpha_end, gamma) <= 0 <= B(beta_end, gamma)` failed.
    BracketInequality {
        endpoint: Endpoint,
        at_alpha: f64,
        at_beta: f64,
    },
    MonotoneViolation {
        endpoint: Endpoint,
        y: f64,
        b_low: f64,
        b_high: f64,
    },
    Zero(ZeroError),
    Grid(GridError),
    Eval(EvalError),
}

impl fmt::Display for FuncBcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuncBcError::WrongSides => write!(f, "boundary functionals attached to wrong endpoints"),
            FuncBcError::NegativeWeight { value } => {
                write!(f, "boundary functional weight {value} is negative")
            }
            FuncBcError::MultipointShape { nodes, weights } => write!(
                f,
                "multipoint condition has {nodes} nodes but {weights} weights"
            ),
            FuncBcError::NodeOutsideInterval { x, c, d } => {
                write!(f, "multipoint node {x} outside [{c}, {d}]")
            }
            FuncBcError::MonotoneNotDeclared => {
                write!(f, "custom boundary functional must declare monotonicity")
            }
            FuncBcError::BracketInequality {
                endpoint,
                at_alpha,
                at_beta,
            } => write!(
                f,
                "bracket inequality failed at {endpoint:?} endpoint: B(alpha)={at_alpha}, B(beta)={at_beta} (need B(alpha) <= 0 <= B(beta))"
            ),
            FuncBcError::MonotoneViolation {
                endpoint,
                y,
                b_low,
                b_high,
            } => write!(
                f,
                "declared monotonicity violated at {endpoint:?}, y={y}: B(y, low)={b_low} < B(y, high)={b_high}"
            ),
            FuncBcError::Zero(e) => write!(f, "{e}"),
            FuncBcError::Grid(e) => write!(f, "{e}"),
            FuncBcError::Eval(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for FuncBcError {}

// ---------------------------------------------------------------------------
// Extremal zeros (generalized Bolzano)
// ---------------------------------------------------------------------------

/// Which extremal zero of a scalar map to locate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroSide {
    Least,
    Greatest,
}

/// Result of an extremal-zero search.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExtremalZero {
    /// Located zero (or near-supremum for half-open zero sets).
    pub y: f64,
    /// `|h(y)|` was negligible at the returned point.
    pub attained: bool,
    /// The zero set is a plateau whose approached edge carries a nonzero
    /// value (e.g. integer-part conditions); `y` sits just inside the set.
    pub open_set: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ZeroError {
    BadInterval { a: f64, b: f64 },
    /// No zero found; carries the bracket values for diagnosis of a violated
    /// `h(a) <= 0 <= h(b)` precondition.
    NoZero { h_a: f64, h_b: f64 },
}

impl fmt::Display for ZeroError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZeroError::BadInterval { a, b } => write!(f, "invalid search interval [{a}, {b}]"),
            ZeroError::NoZero { h_a, h_b } => write!(
                f,
                "no zero found in search interval (h(a)={h_a}, h(b)={h_b}; need h(a) <= 0 <= h(b))"
            ),
        }
    }
}

impl core::error::Error for ZeroError {}

const SCAN_CELLS: usize = 1024;

/// Least or greatest zero of `h` on `[a, b]` to within `tol`.
///
/// `h` must be continuous or have downward jumps only; under the usual
/// bracket `h(a) <= 0 <= h(b)` the extremal zeros exist. A coarse scan
/// isolates the first/last zero plateau or sign change, then bisection
/// refines it. A sign change that never passes through a zero (a jump over
/// zero) is reported with `attained: false`.
pub fn extremal_zero(
    h: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    which: ZeroSide,
    tol: f64,
) -> Result<ExtremalZero, ZeroError> {
    extremal_zero_scanned(h, a, b, which, tol, SCAN_CELLS)
}

/// [`extremal_zero`] with an explicit scan resolution.
pub fn extremal_zero_scanned(
    h: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    which: ZeroSide,
    tol: f64,
    cells: usize,
) -> Result<ExtremalZero, ZeroError> {
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(ZeroError::BadInterval { a, b });
    }
    let ha = h(a);
    if b - a <= tol {
        let scale = 1.0 + math::abs(ha);
        if math::abs(ha) <= 1e-9 * scale {
            return Ok(ExtremalZero {
                y: a,
                attained: true,
                open_set: false,
            });
        }
        return Err(ZeroError::NoZero { h_a: ha, h_b: h(b) });
    }

    let n = cells.max(2);
    let mut ys = Vec::with_capacity(n + 1);
    let mut hs = Vec::with_capacity(n + 1);
    let mut hmax = 0.0f64;
    for i in 0..=n {
        let y = if i == n {
            b
        } else {
            a + (b - a) * i as f64 / n as f64
        };
        let v = h(y);
        hmax = math::max(hmax, math::abs(v));
        ys.push(y);
        hs.push(v);
    }
    let attain_eps = 1e-7 * (1.0 + hmax);

    // Candidate indices: exact-zero samples and strict sign-change cells.
    let is_zero = |v: f64| v == 0.0;
    let mut found: Option<usize> = None; // index of zero sample or left index of sign-change cell
    let mut found_kind_zero = false;
    let ordered: Vec<usize> = match which {
        ZeroSide::Least => (0..=n).collect(),
        ZeroSide::Greatest => (0..=n).rev().collect(),
    };
    for &i in &ordered {
        if is_zero(hs[i]) {
            found = Some(i);
            found_kind_zero = true;
            break;
        }
        // Sign change in the cell on the search side of sample i.
        let cell = match which {
            ZeroSide::Least => {
                if i == 0 {
                    continue;
                }
                i - 1
            }
            ZeroSide::Greatest => {
                if i == n {
                    continue;
                }
                i
            }
        };
        if hs[cell] * hs[cell + 1] < 0.0 {
            found = Some(cell);
            found_kind_zero = false;
            break;
        }
    }

    let Some(idx) = found else {
        return Err(ZeroError::NoZero {
            h_a: hs[0],
            h_b: hs[n],
        });
    };

    if found_kind_zero {
        // Refine the plateau edge on the search side.
        let run = zero_run_len(&hs, idx, which, &is_zero);
        match which {
            ZeroSide::Greatest => {
                if idx == n {
                    return Ok(ExtremalZero {
                        y: b,
                        attained: true,
                        open_set: false,
                    });
                }
                let (lo, moved) = refine_plateau_right(&h, ys[idx], ys[idx + 1], tol, &is_zero);
                Ok(ExtremalZero {
                    y: lo,
                    attained: true,
                    open_set: run > 1 || moved,
                })
            }
            ZeroSide::Least => {
                if idx == 0 {
                    return Ok(ExtremalZero {
                        y: a,
                        attained: true,
                        open_set: false,
                    });
                }
                let (hi, moved) = refine_plateau_left(&h, ys[idx - 1], ys[idx], tol, &is_zero);
                Ok(ExtremalZero {
                    y: hi,
                    attained: true,
                    open_set: run > 1 || moved,
                })
            }
        }
    } else {
        // Bisect a sign change; may discover a plateau mid-way.
        let mut u = ys[idx];
        let mut v = ys[idx + 1];
        let mut hu = hs[idx];
        while v - u > tol {
            let m = 0.5 * (u + v);
            let hm = h(m);
            if is_zero(hm) {
                return Ok(match which {
                    ZeroSide::Greatest => {
                        let (lo, _) = refine_plateau_right(&h, m, v, tol, &is_zero);
                        ExtremalZero {
                            y: lo,
                            attained: true,
                            open_set: lo > m,
                        }
                    }
                    ZeroSide::Least => {
                        let (hi, _) = refine_plateau_left(&h, u, m, tol, &is_zero);
                        ExtremalZero {
                            y: hi,
                            attained: true,
                            open_set: hi < m,
                        }
                    }
                });
            }
            if (hm > 0.0) == (hu > 0.0) {
                u = m;
                hu = hm;
            } else {
                v = m;
            }
        }
        let (hu, hv) = (h(u), h(v));
        let y = if math::abs(hu) <= math::abs(hv) { u } else { v };
        Ok(ExtremalZero {
            y,
            attained: math::abs(h(y)) <= attain_eps,
            open_set: false,
        })
    }
}

fn zero_run_len(hs: &[f64], idx: usize, which: ZeroSide, is_zero: &dyn Fn(f64) -> bool) -> usize {
    let mut run = 1;
    match which {
        ZeroSide::Greatest => {
            let mut j = idx;
            while j > 0 && is_zero(hs[j - 1]) {
                run += 1;
                j -= 1;
            }
        }
        ZeroSide::Least => {
            let mut j = idx;
            while j + 1 < hs.len() && is_zero(hs[j + 1]) {
                run += 1;
                j += 1;
            }
        }
    }
    run
}

/// Right edge of a zero plateau: `h(lo) == 0`, `h(hi) != 0` on entry.
fn refine_plateau_right(
    h: &impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    is_zero: &dyn Fn(f64) -> bool,
) -> (f64, bool) {
    let start = lo;
    while hi - lo > tol {
        let m = 0.5 * (lo + hi);
        if is_zero(h(m)) {
            lo = m;
        } else {
            hi = m;
        }
    }
    (lo, lo > start)
}

fn refine_plateau_left(
    h: &impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    is_zero: &dyn Fn(f64) -> bool,
) -> (f64, bool) {
    let start = hi;
    while hi - lo > tol {
        let m = 0.5 * (lo + hi);
        if is_zero(h(m)) {
            hi = m;
        } else {
            lo = m;
        }
    }
    (hi, hi < start)
}

// ---------------------------------------------------------------------------
// Endpoint resolution for the iteration
// ---------------------------------------------------------------------------

/// Resolved endpoint values for one operator application.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BoundaryValues {
    pub left: ExtremalZero,
    pub right: ExtremalZero,
}

/// Extremal zeros of `y -> B1(y, gamma)` on `[alpha(c), beta(c)]` and of
/// `y -> B2(y, gamma)` on `[alpha(d), beta(d)]`.
///
/// Checks the bracketing inequalities `B(alpha_end, gamma) <= 0 <=
/// B(beta_end, gamma)` first and rejects the problem when they fail.
pub fn boundary_values(
    pair: &BoundaryConditionPair,
    gamma: &GridFunction,
    bracket: &BracketPair,
    which: ZeroSide,
    zero_tol: f64,
    bc_tol: f64,
) -> Result<BoundaryValues, FuncBcError> {
    let (c, d) = gamma.interval();
    let left = endpoint_value(
        &pair.left,
        gamma,
        bracket.alpha_at(c),
        bracket.beta_at(c),
        which,
        zero_tol,
        bc_tol,
    )?;
    let right = endpoint_value(
        &pair.right,
        gamma,
        bracket.alpha_at(d),
        bracket.beta_at(d),
        which,
        zero_tol,
        bc_tol,
    )?;
    Ok(BoundaryValues { left, right })
}

fn endpoint_value(
    bf: &BoundaryFunctional,
    gamma: &GridFunction,
    lo: f64,
    hi: f64,
    which: ZeroSide,
    zero_tol: f64,
    bc_tol: f64,
) -> Result<ExtremalZero, FuncBcError> {
    let prepared = bf.prepare(gamma)?;
    let at_alpha = prepared.eval(lo);
    let at_beta = prepared.eval(hi);
    if at_alpha > bc_tol || at_beta < -bc_tol {
        return Err(FuncBcError::BracketInequality {
            endpoint: bf.endpoint,
            at_alpha,
            at_beta,
        });
    }
    let z = extremal_zero(|y| prepared.eval(y), lo, hi, which, zero_tol)
        .map_err(FuncBcError::Zero)?;
    // Clamp against rounding drift outside the endpoint interval.
    Ok(ExtremalZero {
        y: math::min(math::max(z.y, lo), hi),
        ..z
    })
}

/// Spot-check that both functionals are nonincreasing in `gamma` over the
/// bracket, on `pairs` random ordered pairs.
pub fn verify_h2<R: RngCore>(
    pair: &BoundaryConditionPair,
    bracket: &BracketPair,
    rng: &mut R,
    pairs: usize,
    tol: f64,
) -> Result<(), FuncBcError> {
    if !pair.left.monotone_decl || !pair.right.monotone_decl {
        return Err(FuncBcError::MonotoneNotDeclared);
    }
    let (c, d) = bracket.domain();
    let n = 128;
    let xs = crate::grid::uniform_grid(c, d, n);
    let alpha: Vec<f64> = xs.iter().map(|&x| bracket.alpha_at(x)).collect();
    let beta: Vec<f64> = xs.iter().map(|&x| bracket.beta_at(x)).collect();
    let mut e_lo = f64::INFINITY;
    let mut e_hi = f64::NEG_INFINITY;
    for i in 0..=n {
        e_lo = math::min(e_lo, alpha[i]);
        e_hi = math::max(e_hi, beta[i]);
    }
    for _ in 0..pairs {
        let mut v_lo = Vec::with_capacity(n + 1);
        let mut v_hi = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let (u, v) = (unit_f64(rng), unit_f64(rng));
            let (t_lo, t_hi) = if u <= v { (u, v) } else { (v, u) };
            v_lo.push(alpha[i] + t_lo * (beta[i] - alpha[i]));
            v_hi.push(alpha[i] + t_hi * (beta[i] - alpha[i]));
        }
        let g_lo = GridFunction::from_values(c, d, v_lo).map_err(FuncBcError::Grid)?;
        let g_hi = GridFunction::from_values(c, d, v_hi).map_err(FuncBcError::Grid)?;
        let y = e_lo + unit_f64(rng) * (e_hi - e_lo);
        for bf in [&pair.left, &pair.right] {
            let b_low = bf.eval(y, &g_lo)?;
            let b_high = bf.eval(y, &g_hi)?;
            if b_low < b_high - tol * (1.0 + math::abs(b_low) + math::abs(b_high)) {
                return Err(FuncBcError::MonotoneViolation {
                    endpoint: bf.endpoint,
                    y,
                    b_low,
                    b_high,
                });
            }
        }
    }
    Ok(())
}

/// Uniform f64 in [0, 1) from an RNG's raw output.
pub(crate) fn unit_f64<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;

    fn grid_of(f: impl Fn(f64) -> f64, c: f64, d: f64) -> GridFunction {
        GridFunction::sample(c, d, 128, f).unwrap()
    }

    #[test]
    fn dirichlet_eval() {
        let b = BoundaryFunctional::dirichlet(Endpoint::Left, 9.0);
        let g = grid_of(|x| x, 2.0, 6.0);
        assert_eq!(b.eval(9.0, &g).unwrap(), 0.0);
        assert_eq!(b.eval(7.5, &g).unwrap(), -1.5);
    }

    #[test]
    fn mean_fraction_on_ray() {
        // gamma(x) = (vd/d) x on [c, d]: B(gamma(c), gamma) = (vd/d)(c - (d+c)/4)
        let (c, d, vd) = (1.0, 4.0, 4.5);
        let b = BoundaryFunctional::mean_fraction(Endpoint::Left, 0.5);
        let g = grid_of(|x| vd / d * x, c, d);
        let got = b.eval(vd / d * c, &g).unwrap();
        let want = vd / d * (c - (d + c) / 4.0);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn integer_part_eval() {
        let b = BoundaryFunctional::integer_part(Endpoint::Right, 4.0);
        let g = grid_of(|x| x, 0.0, 1.0);
        assert_eq!(b.eval(4.7, &g).unwrap(), 0.0);
        assert_eq!(b.eval(5.0, &g).unwrap(), -1.0);
    }

    #[test]
    fn integral_kind_matches_mean_fraction() {
        let (c, d) = (1.0, 4.0);
        let w = crate::expr::CoefficientExpr::parse("1").unwrap();
        let bi = BoundaryFunctional::integral(Endpoint::Left, w, 0.5 / (d - c));
        let bm = BoundaryFunctional::mean_fraction(Endpoint::Left, 0.5);
        let g = grid_of(|x| 1.0 + x * x, c, d);
        let (a, b) = (bi.eval(2.0, &g).unwrap(), bm.eval(2.0, &g).unwrap());
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn multipoint_eval() {
        let b = BoundaryFunctional::multipoint(
            Endpoint::Right,
            alloc::vec![1.0, 2.0],
            alloc::vec![0.5, 0.25],
            1.0,
        );
        let g = grid_of(|x| x, 0.0, 4.0);
        // y - 1 - (0.5*1 + 0.25*2) = y - 2
        assert!((b.eval(2.0, &g).unwrap() - 0.0).abs() < 1e-12);
    }

    #[test]
    fn custom_kind_eval() {
        let expr = Expr::parse("y - 0.5 * mean", &["y", "mean"]).unwrap();
        let b = BoundaryFunctional::custom(Endpoint::Left, expr, alloc::vec![], true);
        let g = grid_of(|_| 6.0, 0.0, 2.0);
        assert!((b.eval(3.0, &g).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn extremal_zero_unique_root() {
        let z = extremal_zero(|y| y - 5.0, 0.0, 10.0, ZeroSide::Greatest, 1e-10).unwrap();
        assert!((z.y - 5.0).abs() <= 1e-9);
        assert!(z.attained && !z.open_set);
        let z = extremal_zero(|y| y - 5.0, 0.0, 10.0, ZeroSide::Least, 1e-10).unwrap();
        assert!((z.y - 5.0).abs() <= 1e-9);
    }

    #[test]
    fn extremal_zero_integer_part_plateau() {
        let h = |y: f64| -math::floor(y) + 4.0;
        let g = extremal_zero(h, 0.0, 10.0, ZeroSide::Greatest, 1e-10).unwrap();
        assert!(g.open_set, "zero set [4,5) is right-open");
        assert!(g.attained);
        assert!(g.y < 5.0 && 5.0 - g.y <= 1e-9, "got {}", g.y);
        let l = extremal_zero(h, 0.0, 10.0, ZeroSide::Least, 1e-10).unwrap();
        assert!((l.y - 4.0).abs() <= 1e-9, "got {}", l.y);
        assert!(l.attained);
    }

    #[test]
    fn extremal_zero_identically_zero() {
        let z = extremal_zero(|_| 0.0, 2.0, 3.0, ZeroSide::Least, 1e-10).unwrap();
        assert_eq!(z.y, 2.0);
        let z = extremal_zero(|_| 0.0, 2.0, 3.0, ZeroSide::Greatest, 1e-10).unwrap();
        assert_eq!(z.y, 3.0);
        assert!(!z.open_set);
    }

    #[test]
    fn extremal_zero_degenerate_interval() {
        let z = extremal_zero(|y| -math::floor(y) + 4.0, 4.5, 4.5, ZeroSide::Greatest, 1e-10)
            .unwrap();
        assert_eq!(z.y, 4.5);
        assert!(extremal_zero(|y| y - 1.0, 4.5, 4.5, ZeroSide::Greatest, 1e-10).is_err());
    }

    #[test]
    fn extremal_zero_no_zero_reports_bracket() {
        let e = extremal_zero(|_| 1.0, 0.0, 1.0, ZeroSide::Least, 1e-10).unwrap_err();
        assert!(matches!(e, ZeroError::NoZero { .. }));
    }

    #[test]
    fn extremal_zero_plateau_touching_boundary() {
        // zero set is exactly {5} = b for the least and greatest alike
        let h = |y: f64| math::min(y - 5.0, 0.0);
        let g = extremal_zero(h, 0.0, 5.0, ZeroSide::Greatest, 1e-10).unwrap();
        assert_eq!(g.y, 5.0);
        assert!(g.attained && !g.open_set);
    }

    #[test]
    fn extremal_zero_jump_onto_plateau() {
        // h = 1 below 2, 0 on [2, 3), -1 from 3: a downward jump lands on the
        // plateau; the least zero is its (attained) left edge, the greatest
        // sits just inside the right-open end.
        let h = |y: f64| {
            if y < 2.0 {
                1.0
            } else if y < 3.0 {
                0.0
            } else {
                -1.0
            }
        };
        let l = extremal_zero(h, 0.0, 10.0, ZeroSide::Least, 1e-10).unwrap();
        assert!((l.y - 2.0).abs() <= 1e-9 && l.attained);
        let g = extremal_zero(h, 0.0, 10.0, ZeroSide::Greatest, 1e-10).unwrap();
        assert!(g.y < 3.0 && 3.0 - g.y <= 1e-9);
        assert!(g.attained && g.open_set);
    }

    #[test]
    fn extremal_zero_jump_over_zero_not_attained() {
        // h jumps from +1 straight to -1: the crossing location is reported
        // but no zero is attained there.
        let h = |y: f64| if y < 4.0 { 1.0 } else { -1.0 };
        let g = extremal_zero(h, 0.0, 10.0, ZeroSide::Greatest, 1e-10).unwrap();
        assert!((g.y - 4.0).abs() <= 1e-9);
        assert!(!g.attained);
    }

    #[test]
    fn extremal_zero_multiple_roots_picks_extremes() {
        // Zeros at 1, 2, 3 (sign pattern -, +, -, + via cubic).
        let h = |y: f64| (y - 1.0) * (y - 2.0) * (y - 3.0);
        let l = extremal_zero(h, 0.0, 10.0, ZeroSide::Least, 1e-10).unwrap();
        let g = extremal_zero(h, 0.0, 10.0, ZeroSide::Greatest, 1e-10).unwrap();
        assert!((l.y - 1.0).abs() <= 1e-9);
        assert!((g.y - 3.0).abs() <= 1e-9);
        assert!(l.y <= g.y);
    }

    #[test]
    fn matches_plain_bisection_for_monotone_h() {
        // For continuous strictly monotone h the least and greatest zeros agree.
        let h = |y: f64| math::exp(y / 3.0) - 2.0;
        let l = extremal_zero(h, 0.0, 10.0, ZeroSide::Least, 1e-10).unwrap();
        let g = extremal_zero(h, 0.0, 10.0, ZeroSide::Greatest, 1e-10).unwrap();
        let root = 3.0 * math::ln(2.0);
        assert!((l.y - root).abs() <= 1e-8);
        assert!((g.y - root).abs() <= 1e-8);
    }

    #[test]
    fn boundary_values_examples() {
        use crate::bracket::{BracketPair, PiecewiseSmoothFn};
        use crate::model::ProblemSpec;

        // Dirichlet pair: the zeros are the targets regardless of gamma.
        let pair = BoundaryConditionPair::dirichlet(2.0, 7.0);
        let spec = ProblemSpec::new(
            1.0,
            4.0,
            crate::expr::CoefficientExpr::constant(1.0),
            crate::expr::CoefficientExpr::constant(0.0),
            pair.clone(),
        )
        .unwrap();
        let alpha = PiecewiseSmoothFn::constant(1.0, 4.0, 0.0);
        let beta = PiecewiseSmoothFn::constant(1.0, 4.0, 10.0);
        let bracket = BracketPair::build(alpha, beta, &spec, 129, 1e-9).unwrap();
        for gamma_level in [0.5, 5.0, 9.5] {
            let gamma = GridFunction::sample(1.0, 4.0, 64, |_| gamma_level).unwrap();
            let v = boundary_values(&pair, &gamma, &bracket, ZeroSide::Greatest, 1e-10, 1e-9)
                .unwrap();
            assert!((v.left.y - 2.0).abs() <= 1e-9);
            assert!((v.right.y - 7.0).abs() <= 1e-9);
        }

        // mean_fraction(1/2) with constant gamma = m: zero at m/2.
        let pair = BoundaryConditionPair::new(
            BoundaryFunctional::mean_fraction(Endpoint::Left, 0.5),
            BoundaryFunctional::dirichlet(Endpoint::Right, 7.0),
        )
        .unwrap();
        let gamma = GridFunction::sample(1.0, 4.0, 64, |_| 6.0).unwrap();
        let v =
            boundary_values(&pair, &gamma, &bracket, ZeroSide::Greatest, 1e-10, 1e-9).unwrap();
        assert!((v.left.y - 3.0).abs() <= 1e-9);

        // failed bracketing inequality is rejected with the endpoint values
        let pair = BoundaryConditionPair::dirichlet(-5.0, 7.0);
        let gamma = GridFunction::sample(1.0, 4.0, 64, |_| 5.0).unwrap();
        let err = boundary_values(&pair, &gamma, &bracket, ZeroSide::Greatest, 1e-10, 1e-9)
            .unwrap_err();
        assert!(matches!(
            err,
            FuncBcError::BracketInequality {
                endpoint: Endpoint::Left,
                ..
            }
        ));
    }

    #[test]
    fn boundary_values_monotone_in_gamma() {
        use crate::bracket::{BracketPair, PiecewiseSmoothFn};
        use crate::model::ProblemSpec;

        // Ordered iterates give ordered endpoint values (nonincreasing
        // functionals flip into nondecreasing zeros).
        let pair = BoundaryConditionPair::new(
            BoundaryFunctional::mean_fraction(Endpoint::Left, 0.5),
            BoundaryFunctional::integer_part(Endpoint::Right, 4.0),
        )
        .unwrap();
        let spec = ProblemSpec::new(
            1.0,
            4.0,
            crate::expr::CoefficientExpr::constant(1.0),
            crate::expr::CoefficientExpr::constant(1.0),
            pair.clone(),
        )
        .unwrap();
        let alpha = crate::bracket::ray_lower_solution(&spec, 4.5);
        let beta = PiecewiseSmoothFn::constant(1.0, 4.0, 4.5);
        let bracket = BracketPair::build(alpha, beta, &spec, 129, 1e-9).unwrap();
        let g_lo = GridFunction::sample(1.0, 4.0, 64, |x| 4.5 / 4.0 * x).unwrap();
        let g_mid = GridFunction::sample(1.0, 4.0, 64, |x| 4.5 / 4.0 * x * 0.4 + 4.5 * 0.6)
            .unwrap();
        let g_hi = GridFunction::sample(1.0, 4.0, 64, |_| 4.5).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for g in [&g_lo, &g_mid, &g_hi] {
            let v = boundary_values(&pair, g, &bracket, ZeroSide::Greatest, 1e-10, 1e-9)
                .unwrap();
            assert!(v.left.y >= prev - 1e-12);
            prev = v.left.y;
        }
    }

    #[test]
    fn h2_check_rejects_increasing_functional() {
        use rand_chacha::ChaCha8Rng;
        use rand_core::SeedableRng;
        // B(y, gamma) = y + mean(gamma) is increasing in gamma.
        let expr = Expr::parse("y + mean", &["y", "mean"]).unwrap();
        let bad = BoundaryFunctional::custom(Endpoint::Left, expr, alloc::vec![], true);
        let pair = BoundaryConditionPair::new(
            bad,
            BoundaryFunctional::dirichlet(Endpoint::Right, 1.0),
        )
        .unwrap();
        let spec = crate::model::ProblemSpec::new(
            1.0,
            2.0,
            crate::expr::CoefficientExpr::constant(1.0),
            crate::expr::CoefficientExpr::constant(0.0),
            pair.clone(),
        )
        .unwrap();
        // With q = 0 both constants certify (the nonlinearity vanishes), and
        // B(y, gamma) = y + mean stays within the boundary inequalities for
        // alpha = 0, beta = 1.
        let alpha = crate::bracket::PiecewiseSmoothFn::constant(1.0, 2.0, 0.0);
        let beta = crate::bracket::PiecewiseSmoothFn::constant(1.0, 2.0, 1.0);
        let bracket =
            crate::bracket::BracketPair::build(alpha, beta, &spec, 129, 1e-9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = verify_h2(&pair, &bracket, &mut rng, 32, 1e-9).unwrap_err();
        assert!(matches!(err, FuncBcError::MonotoneViolation { .. }));
    }
}
