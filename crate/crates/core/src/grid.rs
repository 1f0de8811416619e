//! Sampled functions on a uniform grid, with finite-difference derivatives.

use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Errors building or using a [`GridFunction`].
#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    /// Fewer than the minimum number of intervals (8).
    TooFewNodes { n: usize },
    /// Interval is empty or reversed.
    BadInterval { c: f64, d: f64 },
    /// A sampled value is NaN or infinite.
    NonFinite { index: usize },
    /// Simpson integration needs an even number of intervals.
    OddIntervals { n: usize },
    /// Two grids that must match do not.
    Mismatch,
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::TooFewNodes { n } => write!(f, "grid needs at least 8 intervals, got {n}"),
            GridError::BadInterval { c, d } => write!(f, "invalid interval [{c}, {d}]"),
            GridError::NonFinite { index } => write!(f, "non-finite value at node {index}"),
            GridError::OddIntervals { n } => {
                write!(f, "Simpson integration needs an even interval count, got {n}")
            }
            GridError::Mismatch => write!(f, "grid functions live on different grids"),
        }
    }
}

impl core::error::Error for GridError {}

/// First and second finite-difference derivatives of nodal values.
///
/// Interior nodes use central differences; endpoints use second-order
/// one-sided stencils.
pub fn derivatives_from_values(values: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = values.len() - 1;
    let mut d1 = Vec::with_capacity(n + 1);
    let mut d2 = Vec::with_capacity(n + 1);
    d1.push((-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h));
    for i in 1..n {
        d1.push((values[i + 1] - values[i - 1]) / (2.0 * h));
    }
    d1.push((3.0 * values[n] - 4.0 * values[n - 1] + values[n - 2]) / (2.0 * h));

    d2.push((2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / (h * h));
    for i in 1..n {
        d2.push((values[i - 1] - 2.0 * values[i] + values[i + 1]) / (h * h));
    }
    d2.push(
        (2.0 * values[n] - 5.0 * values[n - 1] + 4.0 * values[n - 2] - values[n - 3]) / (h * h),
    );
    (d1, d2)
}

/// A candidate solution sampled on a uniform grid over `[c, d]`.
///
/// Derivative arrays are derived from the values on construction and stay
/// consistent with them.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    c: f64,
    d: f64,
    xs: Vec<f64>,
    values: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl GridFunction {
    /// Minimum number of grid intervals.
    pub const MIN_INTERVALS: usize = 8;

    pub fn from_values(c: f64, d: f64, values: Vec<f64>) -> Result<GridFunction, GridError> {
        if !(c.is_finite() && d.is_finite() && c < d) {
            return Err(GridError::BadInterval { c, d });
        }
        if values.len() < Self::MIN_INTERVALS + 1 {
            return Err(GridError::TooFewNodes {
                n: values.len().saturating_sub(1),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index });
        }
        let n = values.len() - 1;
        let xs = uniform_grid(c, d, n);
        let h = (d - c) / n as f64;
        let (d1, d2) = derivatives_from_values(&values, h);
        Ok(GridFunction {
            c,
            d,
            xs,
            values,
            d1,
            d2,
        })
    }

    pub fn sample(
        c: f64,
        d: f64,
        n: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<GridFunction, GridError> {
        let xs = uniform_grid(c, d, n);
        let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        GridFunction::from_values(c, d, values)
    }

    /// Number of intervals (nodes minus one).
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn step(&self) -> f64 {
        (self.d - self.c) / self.n() as f64
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.c, self.d)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    pub fn left_value(&self) -> f64 {
        self.values[0]
    }

    pub fn right_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Linear interpolation between nodes; clamps `x` to the interval.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.n();
        let t = (x - self.c) / self.step();
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= n as f64 {
            return self.values[n];
        }
        let i = t as usize;
        let frac = t - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    /// Composite Simpson integral over `[c, d]` (even interval count required).
    pub fn integral(&self) -> Result<f64, GridError> {
        simpson(&self.values, self.step())
    }

    /// Simpson integral of `w(x) * f(x)` given weights at the nodes.
    pub fn integral_weighted(&self, w: &[f64]) -> Result<f64, GridError> {
        if w.len() != self.values.len() {
            return Err(GridError::Mismatch);
        }
        let prod: Vec<f64> = self
            .values
            .iter()
            .zip(w.iter())
            .map(|(v, w)| v * w)
            .collect();
        simpson(&prod, self.step())
    }

    pub fn mean(&self) -> Result<f64, GridError> {
        Ok(self.integral()? / (self.d - self.c))
    }

    pub fn sup_diff(&self, other: &GridFunction) -> Result<f64, GridError> {
        if other.values.len() != self.values.len() || other.c != self.c || other.d != self.d {
            return Err(GridError::Mismatch);
        }
        let mut m = 0.0;
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            m = math::max(m, math::abs(a - b));
        }
        Ok(m)
    }
}

/// `n + 1` uniformly spaced nodes with exact endpoints.
pub fn uniform_grid(c: f64, d: f64, n: usize) -> Vec<f64> {
    let mut xs = Vec::with_capacity(n + 1);
    for i in 0..=n {
        xs.push(c + (d - c) * i as f64 / n as f64);
    }
    xs[0] = c;
    xs[n] = d;
    xs
}

fn simpson(values: &[f64], h: f64) -> Result<f64, GridError> {
    let n = values.len() - 1;
    if n % 2 != 0 {
        return Err(GridError::OddIntervals { n });
    }
    let mut acc = values[0] + values[n];
    let mut i = 1;
    while i < n {
        acc += 4.0 * values[i];
        if i + 1 < n {
            acc += 2.0 * values[i + 1];
        }
        i += 2;
    }
    Ok(acc * h / 3.0)
}
