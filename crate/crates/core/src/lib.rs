//! Energy minimization for heterogeneous cellular networks by joint cell
//! on/off switching, transmit power control and user association.
//!
//! The nonconvex load-coupled problem is replaced by a mixed-binary linear
//! inner approximation: every feasible point of the linear model maps to a
//! feasible network configuration. See [`milp::build_inner_approximation`] for the
//! model and [`solver::branch_and_bound`] for the bundled solver.

pub mod baselines;
pub mod error;
pub mod harness;
pub mod milp;
pub mod netmodel;
pub mod pwl;
pub mod scenarios;
pub mod solver;

pub use error::{Error, Result};
