//! Bundled LP / branch-and-bound solver plus MPS export and solution
//! import for external solvers.

pub mod bnb;
pub mod lp;
pub mod mps;

pub use bnb::{branch_and_bound, BnbResult, BnbSettings, BnbStatus};
pub use lp::LpSettings;
pub use mps::{export_mps, import_solution, parse_name_map, read_mps, MpsExport};

use crate::error::{Error, Result};
use crate::milp::MilpModel;

/// Absolute row tolerance every reported solution is checked against.
pub const CHECK_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    /// Never produced for models built through [`MilpModel`], whose
    /// variables are all bounded.
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// One value per model variable; empty unless optimal.
    pub values: Vec<f64>,
    pub objective: f64,
}

/// Solve the LP relaxation of `model` (binaries relaxed to [0, 1]).
pub fn solve_lp(model: &MilpModel) -> Result<LpSolution> {
    solve_lp_with(model, LpSettings::default())
}

pub fn solve_lp_with(model: &MilpModel, settings: LpSettings) -> Result<LpSolution> {
    let mut engine = lp::DualSimplex::new(model, settings)?;
    match engine.solve(f64::INFINITY)? {
        lp::Outcome::Optimal => {
            let values = engine.values();
            check_point(model, &values)?;
            Ok(LpSolution {
                status: LpStatus::Optimal,
                objective: model.objective_value(&values),
                values,
            })
        }
        _ => Ok(LpSolution {
            status: LpStatus::Infeasible,
            values: Vec::new(),
            objective: f64::INFINITY,
        }),
    }
}

pub(crate) fn check_point(model: &MilpModel, values: &[f64]) -> Result<()> {
    let (viol, name) = model.max_violation(values);
    if viol > CHECK_TOL {
        return Err(Error::Solver(format!(
            "solution violates {} by {viol:.3e}",
            name.unwrap_or("?")
        )));
    }
    Ok(())
}
