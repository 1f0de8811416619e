//! Solver toolkit for the stationary Black-Scholes equation with transaction
//! costs,
//!
//! ```text
//! x^3 V''(x)^2 + p(x) x^2 V''(x) + q(x) (x V'(x) - V(x)) = 0   on [c, d],
//! ```
//!
//! with Dirichlet or functional boundary conditions. The crate constructs and
//! certifies lower/upper solution brackets, solves the equivalent semilinear
//! Dirichlet problem by damped Newton on a finite-difference grid, and runs a
//! monotone fixed-point iteration that produces the extremal convex solutions
//! under functional boundary conditions. Every output can be re-verified
//! independently through [`verify::full_check`].
//!
//! The crate is `no_std` (with `alloc`); float math comes from `libm`. File
//! formats, configuration and the command-line front end live in the
//! companion `tcbs-cli` crate.
//!
//! ```
//! use tcbs_core::expr::CoefficientExpr;
//! use tcbs_core::funcbc::BoundaryConditionPair;
//! use tcbs_core::model::ProblemSpec;
//! use tcbs_core::bracket::{self, BracketPair};
//! use tcbs_core::dirichlet::{solve_extremal, DirichletProblem, Extremal, SolverConfig};
//!
//! let spec = ProblemSpec::new(
//!     2.0, 6.0,
//!     CoefficientExpr::parse("1 + x^3").unwrap(),
//!     CoefficientExpr::parse("floor(x)").unwrap(),
//!     BoundaryConditionPair::dirichlet(9.0, 1.0),
//! ).unwrap();
//!
//! let k = bracket::solve_curvature_k(&spec, 9.0, 1.0).unwrap();
//! let alpha = bracket::pointwise_max(
//!     &bracket::ray_lower_solution(&spec, 1.0),
//!     &bracket::parabola_lower_solution(&spec, 9.0, 1.0, k).unwrap(),
//! );
//! let beta = bracket::chord_upper_solution(&spec, 9.0, 1.0);
//! let pair = BracketPair::build(alpha, beta, &spec, 1025, bracket::CERT_TOL).unwrap();
//!
//! let pb = DirichletProblem::new(&spec, 9.0, 1.0, &pair).unwrap();
//! let cfg = SolverConfig { n: 512, ..SolverConfig::default() };
//! let out = solve_extremal(&pb, Extremal::Greatest, &cfg).unwrap();
//! assert!(out.final_residual <= cfg.res_tol);
//! ```

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bracket;
pub mod dirichlet;
pub mod expr;
pub mod funcbc;
pub mod grid;
pub mod iterate;
mod math;
pub mod model;
pub mod verify;

pub use bracket::{BracketPair, PiecewiseSmoothFn};
pub use dirichlet::{Extremal, SolverConfig};
pub use expr::CoefficientExpr;
pub use funcbc::BoundaryConditionPair;
pub use grid::GridFunction;
pub use model::ProblemSpec;
