use std::path::Path;

use log::{info, warn};

use crate::baselines::{full_power, max_power_switching, power_scaling_exhaustive, BaselineResult, ScalingSettings};
use crate::error::{Error, Result};
use crate::milp::{build_inner_approximation, extract_solution, MilpModel, VarMap};
use crate::netmodel::{evaluate, GainMatrix, NetworkScenario, SolutionPoint};
use crate::pwl::{build_bound, PwlBound};
use crate::scenarios::build_levels;
use crate::solver::{branch_and_bound, export_mps, BnbStatus};

use super::{generate_instance, ExperimentConfig, Method};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutcomeStatus {
    Feasible,
    Infeasible,
    /// A solver limit was hit before any solution, or the model was routed
    /// to an external solver. Counted as infeasible.
    Unsolved,
}

impl OutcomeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeStatus::Feasible => "feasible",
            OutcomeStatus::Infeasible => "infeasible",
            OutcomeStatus::Unsolved => "unsolved",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub status: OutcomeStatus,
    /// Verified solution; for the full-power reference it is present even
    /// when infeasible.
    pub solution: Option<SolutionPoint>,
    /// Exact energy of `solution`, W·T0.
    pub energy: Option<f64>,
    /// MILP objective (an upper bound on `energy`).
    pub objective: Option<f64>,
    pub active_cells: Option<usize>,
    pub mean_active_load: Option<f64>,
    pub nodes: Option<usize>,
    pub gap: Option<f64>,
}

impl MethodOutcome {
    fn empty(method: Method, status: OutcomeStatus) -> Self {
        MethodOutcome {
            method,
            status,
            solution: None,
            energy: None,
            objective: None,
            active_cells: None,
            mean_active_load: None,
            nodes: None,
            gap: None,
        }
    }

    fn from_solution(method: Method, scenario: &NetworkScenario, gains: &GainMatrix, sol: SolutionPoint) -> Self {
        let ev = evaluate(scenario, gains, &sol);
        let status = if ev.loads.feasible {
            OutcomeStatus::Feasible
        } else {
            OutcomeStatus::Infeasible
        };
        MethodOutcome {
            method,
            status,
            energy: Some(ev.energy.total),
            active_cells: Some(sol.num_active()),
            mean_active_load: ev.loads.mean_active_load(&sol),
            solution: Some(sol),
            objective: None,
            nodes: None,
            gap: None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == OutcomeStatus::Feasible
    }
}

/// Per-instance outcome of one method.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceRecord {
    pub demand: f64,
    pub run: usize,
    pub outcome: MethodOutcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub demand: f64,
    pub method: Method,
    /// Over all runs at this demand.
    pub feasibility_rate: f64,
    /// The means are over runs feasible for every compared method;
    /// `None` when there are none.
    pub mean_energy: Option<f64>,
    pub mean_active_cells: Option<f64>,
    pub mean_active_load: Option<f64>,
    pub instances_counted: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<MetricsRow>,
    pub records: Vec<InstanceRecord>,
}

impl ExperimentConfig {
    pub fn pwl_bound(&self) -> Result<PwlBound> {
        let r = &self.radio;
        build_bound(
            crate::netmodel::db_to_linear(r.gamma_min_db),
            crate::netmodel::db_to_linear(r.gamma_max_db),
            self.epsilon,
        )
    }

    /// Inner-approximation model of one instance, with interference levels
    /// at nominal maximum power.
    pub fn milp_model(
        &self,
        scenario: &NetworkScenario,
        gains: &GainMatrix,
        pwl: &PwlBound,
    ) -> Result<(MilpModel, VarMap)> {
        let nominal: Vec<f64> = scenario.cells.iter().map(|c| c.p_max).collect();
        let levels = build_levels(gains, &nominal, scenario.noise_power, &self.weights)?;
        build_inner_approximation(scenario, gains, pwl, &levels)
    }
}

fn baseline_outcome(
    method: Method,
    scenario: &NetworkScenario,
    gains: &GainMatrix,
    r: BaselineResult,
) -> Result<MethodOutcome> {
    match r.solution {
        Some(sol) => {
            let out = MethodOutcome::from_solution(method, scenario, gains, sol);
            if r.feasible != out.is_feasible() {
                return Err(Error::Solver(format!(
                    "{} feasibility disagrees with the evaluator",
                    method.as_str()
                )));
            }
            Ok(out)
        }
        None => Ok(MethodOutcome::empty(method, OutcomeStatus::Infeasible)),
    }
}

fn solve_milp(
    config: &ExperimentConfig,
    scenario: &NetworkScenario,
    gains: &GainMatrix,
    pwl: &PwlBound,
    tag: &str,
) -> Result<MethodOutcome> {
    let (model, map) = config.milp_model(scenario, gains, pwl)?;
    if model.num_binaries() > config.solver.export_threshold {
        if let Some(dir) = &config.solver.export_dir {
            let dir = Path::new(dir);
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let export = export_mps(&model)?;
            let path = dir.join(format!("{tag}.mps"));
            std::fs::write(&path, &export.text).map_err(|e| Error::io(&path, e))?;
            if !export.name_map.is_empty() {
                let names = dir.join(format!("{tag}.names"));
                std::fs::write(&names, export.name_map_text()).map_err(|e| Error::io(&names, e))?;
            }
        }
        return Ok(MethodOutcome::empty(Method::Milp, OutcomeStatus::Unsolved));
    }
    let result = branch_and_bound(&model, &config.solver.bnb_settings())?;
    let mut out = match (&result.incumbent, result.status) {
        (Some(values), _) => {
            // Any incumbent must realise in the exact model: this is a hard
            // check, not a filter.
            let sol = extract_solution(values, &map, scenario, gains)?;
            let out = MethodOutcome::from_solution(Method::Milp, scenario, gains, sol);
            if !out.is_feasible() {
                return Err(Error::InnerApproximation("extracted solution is infeasible".into()));
            }
            MethodOutcome {
                objective: Some(result.objective),
                gap: Some(result.gap),
                ..out
            }
        }
        (None, BnbStatus::Infeasible) => MethodOutcome::empty(Method::Milp, OutcomeStatus::Infeasible),
        (None, _) => {
            warn!("{tag}: node or time limit reached without a solution");
            MethodOutcome::empty(Method::Milp, OutcomeStatus::Unsolved)
        }
    };
    out.nodes = Some(result.nodes);
    Ok(out)
}

/// Run one method on one instance. `tag` names exported model files.
pub fn solve_instance(
    config: &ExperimentConfig,
    scenario: &NetworkScenario,
    gains: &GainMatrix,
    pwl: &PwlBound,
    method: Method,
    tag: &str,
) -> Result<MethodOutcome> {
    let scaling = ScalingSettings {
        max_sweeps: config.solver.max_sweeps,
        tol: config.solver.scaling_tol,
    };
    Ok(match method {
        Method::Milp => solve_milp(config, scenario, gains, pwl, tag)?,
        Method::MaxPowerSwitching => baseline_outcome(method, scenario, gains, max_power_switching(scenario, gains)?)?,
        Method::PowerScaling => {
            baseline_outcome(method, scenario, gains, power_scaling_exhaustive(scenario, gains, scaling)?)?
        }
        Method::FullPower => baseline_outcome(method, scenario, gains, full_power(scenario, gains)?)?,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Aggregate the records of one demand point, `runs` instances each
/// holding one outcome per configured method in method order.
fn aggregate(demand: f64, methods: &[Method], per_run: &[Vec<MethodOutcome>]) -> Vec<MetricsRow> {
    let common: Vec<&Vec<MethodOutcome>> = per_run
        .iter()
        .filter(|outs| outs.iter().filter(|o| o.method.is_compared()).all(MethodOutcome::is_feasible))
        .collect();
    methods
        .iter()
        .enumerate()
        .map(|(i, &method)| {
            let feasible = per_run.iter().filter(|outs| outs[i].is_feasible()).count();
            MetricsRow {
                demand,
                method,
                feasibility_rate: feasible as f64 / per_run.len() as f64,
                mean_energy: mean(common.iter().filter_map(|outs| outs[i].energy)),
                mean_active_cells: mean(common.iter().filter_map(|outs| outs[i].active_cells.map(|c| c as f64))),
                mean_active_load: mean(common.iter().filter_map(|outs| outs[i].mean_active_load)),
                instances_counted: common.len(),
            }
        })
        .collect()
}

/// Every (demand, run) instance through every configured method. Run `r`
/// uses the same DP layout at every demand.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.validate()?;
    let pwl = config.pwl_bound()?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (d, demand) in config.demand.points().into_iter().enumerate() {
        let mut per_run = Vec::with_capacity(config.runs);
        for run in 0..config.runs {
            let (scenario, gains) = generate_instance(config, config.seed, run as u64, demand)?;
            let tag = format!("d{:03}_r{:04}", d, run);
            let mut outs = Vec::with_capacity(config.methods.len());
            for &method in &config.methods {
                let out = solve_instance(config, &scenario, &gains, &pwl, method, &tag)?;
                records.push(InstanceRecord {
                    demand,
                    run,
                    outcome: out.clone(),
                });
                outs.push(out);
            }
            per_run.push(outs);
        }
        let agg = aggregate(demand, &config.methods, &per_run);
        for row in &agg {
            info!(
                "demand {:.3e} {}: feasible {:.3}, energy {:?}",
                demand,
                row.method.as_str(),
                row.feasibility_rate,
                row.mean_energy
            );
        }
        rows.extend(agg);
    }
    Ok(SweepOutput { rows, records })
}
