//! Radially symmetric finite-volume simulation of the parabolic-ODE-parabolic
//! chemotaxis system `u_t = Δu − ∇·(u∇w)`, `v_t = −v + u`, `w_t = Δw − w + v`
//! on a disk, together with its Lyapunov and localized functionals and the
//! diagnostics used to classify long-time behavior.

// `!(x > 0.0)` is used deliberately so that NaN is rejected; index loops
// mirror the stencils they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cutoff;
pub mod diagnostics;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod harness;
pub mod solver;
pub mod tridiag;

pub use cutoff::{Cutoff, CutoffVerification};
pub use error::{Error, Result};
pub use grid::RadialGrid;
pub use solver::{FieldState, Solver, SolverConfig, StepController};
