//! Reference schemes that enumerate every on/off configuration: fixed
//! maximum power, and per-configuration power scaling.

use crate::error::{Error, Result};
use crate::netmodel::{allocate, evaluate, GainMatrix, NetworkScenario, SolutionPoint};

/// Largest cell count the exhaustive schemes accept.
pub const MAX_CELLS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineResult {
    pub solution: Option<SolutionPoint>,
    /// W·T0; `+inf` when nothing is feasible.
    pub energy: f64,
    pub feasible: bool,
    pub configs_evaluated: usize,
    /// Configurations dropped because the power iteration did not settle.
    pub nonconverged: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingSettings {
    pub max_sweeps: usize,
    /// Watts.
    pub tol: f64,
}

impl Default for ScalingSettings {
    fn default() -> Self {
        ScalingSettings {
            max_sweeps: 100,
            tol: 1e-6,
        }
    }
}

fn check_size(scenario: &NetworkScenario) -> Result<()> {
    if scenario.num_cells() > MAX_CELLS {
        return Err(Error::Config(format!(
            "exhaustive baselines support at most {MAX_CELLS} cells, got {}",
            scenario.num_cells()
        )));
    }
    Ok(())
}

/// Active flags for bit pattern `mask` (bit k = cell k).
fn activity(mask: u32, k_n: usize) -> Vec<bool> {
    (0..k_n).map(|k| mask >> k & 1 == 1).collect()
}

struct Best {
    solution: Option<SolutionPoint>,
    energy: f64,
}

impl Best {
    // Masks arrive in increasing order, so keeping strict improvements
    // breaks ties towards the smallest configuration number.
    fn offer(&mut self, scenario: &NetworkScenario, gains: &GainMatrix, sol: SolutionPoint) {
        let ev = evaluate(scenario, gains, &sol);
        if ev.loads.feasible && ev.energy.total < self.energy {
            self.energy = ev.energy.total;
            self.solution = Some(sol);
        }
    }
}

fn masks(scenario: &NetworkScenario) -> impl Iterator<Item = u32> {
    let first = if scenario.num_dps() > 0 { 1 } else { 0 };
    first..(1u32 << scenario.num_cells())
}

fn biases(scenario: &NetworkScenario) -> Vec<f64> {
    scenario.cells.iter().map(|c| c.bias).collect()
}

/// Every active cell at maximum power; the cheapest feasible
/// configuration wins.
pub fn max_power_switching(scenario: &NetworkScenario, gains: &GainMatrix) -> Result<BaselineResult> {
    check_size(scenario)?;
    let k_n = scenario.num_cells();
    let theta = biases(scenario);
    let mut best = Best {
        solution: None,
        energy: f64::INFINITY,
    };
    let mut evaluated = 0;
    for mask in masks(scenario) {
        evaluated += 1;
        let active = activity(mask, k_n);
        let power: Vec<f64> = (0..k_n)
            .map(|k| if active[k] { scenario.cells[k].p_max } else { 0.0 })
            .collect();
        let serving = allocate(&active, &power, gains, &theta)?;
        best.offer(scenario, gains, SolutionPoint::new(active, power, serving)?);
    }
    Ok(BaselineResult {
        feasible: best.solution.is_some(),
        solution: best.solution,
        energy: best.energy,
        configs_evaluated: evaluated,
        nonconverged: 0,
    })
}

/// Whether cell `k` at power `pk` keeps its DPs above minimum SINR and
/// its load at most one, with the other powers and the allocation fixed.
fn cell_ok(scenario: &NetworkScenario, gains: &GainMatrix, power: &[f64], serving: &[usize], k: usize, pk: f64) -> bool {
    let mut load = 0.0;
    for (m, &s) in serving.iter().enumerate() {
        if s != k {
            continue;
        }
        let interference: f64 = (0..power.len())
            .filter(|&j| j != k)
            .map(|j| power[j] * gains.get(j, m))
            .sum();
        let gamma = pk * gains.get(k, m) / (interference + scenario.noise_power);
        if gamma < scenario.gamma_min {
            return false;
        }
        load += scenario.load_coefficient(m) * (1.0 / (1.0 + gamma).log2()).max(scenario.tau_min());
    }
    load <= 1.0
}

/// Smallest power in `[p_min, p_max]` satisfying [`cell_ok`], projected to
/// the bounds.
fn scale_cell(
    scenario: &NetworkScenario,
    gains: &GainMatrix,
    power: &[f64],
    serving: &[usize],
    k: usize,
    tol: f64,
) -> f64 {
    let c = &scenario.cells[k];
    if cell_ok(scenario, gains, power, serving, k, c.p_min) {
        return c.p_min;
    }
    if !cell_ok(scenario, gains, power, serving, k, c.p_max) {
        return c.p_max;
    }
    let (mut lo, mut hi) = (c.p_min, c.p_max);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if cell_ok(scenario, gains, power, serving, k, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Gauss-Seidel power scaling from maximum power for one configuration.
/// Returns `None` if the sweeps do not settle.
pub fn scale_powers(
    scenario: &NetworkScenario,
    gains: &GainMatrix,
    active: &[bool],
    settings: ScalingSettings,
) -> Result<Option<SolutionPoint>> {
    let k_n = scenario.num_cells();
    let theta = biases(scenario);
    let mut power: Vec<f64> = (0..k_n)
        .map(|k| if active[k] { scenario.cells[k].p_max } else { 0.0 })
        .collect();
    for _ in 0..settings.max_sweeps {
        let serving = allocate(active, &power, gains, &theta)?;
        let mut change = 0.0f64;
        for k in (0..k_n).filter(|&k| active[k]) {
            let p = scale_cell(scenario, gains, &power, &serving, k, settings.tol);
            change = change.max((p - power[k]).abs());
            power[k] = p;
        }
        if change < settings.tol {
            let serving = allocate(active, &power, gains, &theta)?;
            return Ok(Some(SolutionPoint::new(active.to_vec(), power, serving)?));
        }
    }
    Ok(None)
}

/// Power scaling for every on/off configuration; the cheapest feasible
/// result wins.
pub fn power_scaling_exhaustive(
    scenario: &NetworkScenario,
    gains: &GainMatrix,
    settings: ScalingSettings,
) -> Result<BaselineResult> {
    check_size(scenario)?;
    let k_n = scenario.num_cells();
    let mut best = Best {
        solution: None,
        energy: f64::INFINITY,
    };
    let (mut evaluated, mut nonconverged) = (0, 0);
    for mask in masks(scenario) {
        evaluated += 1;
        let active = activity(mask, k_n);
        match scale_powers(scenario, gains, &active, settings)? {
            Some(sol) => best.offer(scenario, gains, sol),
            None => nonconverged += 1,
        }
    }
    Ok(BaselineResult {
        feasible: best.solution.is_some(),
        solution: best.solution,
        energy: best.energy,
        configs_evaluated: evaluated,
        nonconverged,
    })
}

/// All cells on at maximum power with biased allocation.
pub fn full_power(scenario: &NetworkScenario, gains: &GainMatrix) -> Result<BaselineResult> {
    let k_n = scenario.num_cells();
    let active = vec![true; k_n];
    let power: Vec<f64> = scenario.cells.iter().map(|c| c.p_max).collect();
    let serving = allocate(&active, &power, gains, &biases(scenario))?;
    let sol = SolutionPoint::new(active, power, serving)?;
    let ev = evaluate(scenario, gains, &sol);
    Ok(BaselineResult {
        feasible: ev.loads.feasible,
        energy: ev.energy.total,
        solution: Some(sol),
        configs_evaluated: 1,
        nonconverged: 0,
    })
}
