//! Solvers for infinite-dimensional variational problems with pointwise
//! inequality constraints, built on the latent variable proximal point
//! (LVPP) saddle-point reformulation of the Bregman proximal point method.
//!
//! The constraint geometry is encoded in a Legendre function R whose inverse
//! gradient ∇R* maps an unconstrained latent field onto the strict interior
//! of the feasible set. Each outer step solves one smooth nonlinear system
//! with Newton's method; iterates are feasible by construction and the outer
//! iteration count stays bounded under mesh refinement.
//!
//! What's here:
//! - [`entropy`]: the Legendre-function catalog (Shannon, Fermi–Dirac,
//!   Hellinger, Gibbs-simplex softmax) with exact Jacobians and the Bregman
//!   divergence;
//! - [`schedule`]: proximal-parameter update rules;
//! - [`discretize`]: five-point-stencil grids and P1/DG0 assembly on
//!   structured triangulations and intervals;
//! - [`solvers`]: sparse LU and damped Newton;
//! - [`lvpp`]: the outer proximal loop with per-iteration tracing;
//! - [`problems`]: ready-made saddle problems (obstacle, gradient bound,
//!   constraint intersection, eikonal, multiphase flow, thermoforming QVI);
//! - [`equality`]: the ball-penalty treatment of linear equality constraints
//!   and its Lagrange-multiplier limit.

pub mod discretize;
pub mod entropy;
pub mod equality;
pub mod error;
pub mod lvpp;
pub mod problems;
pub mod schedule;
pub mod solvers;

pub use discretize::SparseMatrix;
pub use error::{Error, Result};
