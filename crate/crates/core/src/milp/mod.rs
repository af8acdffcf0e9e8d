//! Model IR and the linear inner-approximation builder.

pub mod model;
mod problem;

pub use model::{Constraint, COEF_FLOOR, MilpModel, Objective, Sense, VarId, VarKind, Variable};
pub use problem::*;
