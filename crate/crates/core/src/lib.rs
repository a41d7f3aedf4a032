//! Rank-one Gauss-Newton preconditioning for smooth two-player min-max games.
//!
//! The crate is organised around a joint vector field `v(p)` over the
//! concatenated parameters `p = (x, y)` of both players:
//!
//! * [`vecfield`] builds `v` and its Jacobian from a [`GameOracle`],
//! * [`games`] provides quadratic, bilinear and Dirac-GAN test games,
//! * [`precond`] solves `(λI + vvᵀ) z = v` in linear time,
//! * [`solvers`] runs the preconditioned iteration and the baselines,
//! * [`convergence`] analyses the update map at a stationary point,
//! * [`toygan`] trains small GANs on synthetic targets.

// NaN must fail validation, and dense kernels read best with indices.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod convergence;
pub mod error;
pub mod games;
pub mod precond;
pub mod record;
pub mod solvers;
pub mod toygan;
pub mod vecfield;

pub use error::{Error, Result};
pub use precond::GNConfig;
pub use solvers::{run_solver, SolverConfig, SolverKind, StoppingRule, Trajectory, Verdict};
pub use vecfield::{FieldConvention, GameOracle, JointVector, ParamPoint};
