//! Exact downlink system model: channel gains, SINR under full interference,
//! cell load, energy and the biased max-power allocation rule.
//!
//! Everything here works in linear units (W, Hz, bit/s). Conversions from
//! dB/dBm happen once, when a scenario is assembled.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distances below this are clamped before evaluating path loss.
pub const MIN_DISTANCE_M: f64 = 10.0;

/// Relative slack used by the feasibility checker. Solutions coming out of
/// the LP carry floating point residue of order 1e-9; baselines are exact.
pub const FEASIBILITY_TOL: f64 = 1e-6;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellClass {
    Macro,
    Pico,
}

impl CellClass {
    /// Log-distance path loss in dB for a link of `distance_km`.
    ///
    /// Macro: 128.1 + 37.6 log10(d), pico: 140.7 + 36.7 log10(d).
    pub fn path_loss_db(self, distance_km: f64) -> f64 {
        match self {
            CellClass::Macro => 128.1 + 37.6 * distance_km.log10(),
            CellClass::Pico => 140.7 + 36.7 * distance_km.log10(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CellClass::Macro => "macro",
            CellClass::Pico => "pico",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub id: usize,
    pub position: Point,
    /// Watts.
    pub p_min: f64,
    /// Watts.
    pub p_max: f64,
    /// Linear antenna gain of the base station.
    pub antenna_gain: f64,
    /// Linear association bias (range expansion).
    pub bias: f64,
    pub class: CellClass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemandPoint {
    pub id: usize,
    pub position: Point,
    /// Bits per second.
    pub demand: f64,
    pub antenna_gain: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    /// Time constant; energies are reported in units of W·T0.
    pub t0: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            kappa1: 0.5,
            kappa2: 0.5,
            kappa3: 0.0,
            t0: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkScenario {
    pub cells: Vec<Cell>,
    pub demand_points: Vec<DemandPoint>,
    /// Noise power over the full bandwidth, watts.
    pub noise_power: f64,
    /// Hertz.
    pub bandwidth: f64,
    pub bw_efficiency: f64,
    /// Linear SINR.
    pub gamma_min: f64,
    /// Linear SINR.
    pub gamma_max: f64,
    pub energy_params: EnergyParams,
}

impl NetworkScenario {
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_dps(&self) -> usize {
        self.demand_points.len()
    }

    /// Inverse rate at the top modulation-and-coding threshold.
    pub fn tau_min(&self) -> f64 {
        inverse_rate_unclamped(self.gamma_max)
    }

    /// Inverse rate at the minimum usable SINR.
    pub fn tau_max(&self) -> f64 {
        inverse_rate_unclamped(self.gamma_min)
    }

    /// `D_m / (W η)`: load a DP adds per unit of inverse rate.
    pub fn load_coefficient(&self, m: usize) -> f64 {
        self.demand_points[m].demand / (self.bandwidth * self.bw_efficiency)
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.cells {
            if !(c.p_min > 0.0 && c.p_min <= c.p_max && c.p_max.is_finite()) {
                return Err(Error::Config(format!(
                    "cell {}: need 0 < p_min <= p_max, got [{}, {}]",
                    c.id, c.p_min, c.p_max
                )));
            }
            if !(c.antenna_gain > 0.0 && c.bias > 0.0) {
                return Err(Error::Config(format!(
                    "cell {}: antenna gain and bias must be positive",
                    c.id
                )));
            }
        }
        for d in &self.demand_points {
            if !(d.demand > 0.0 && d.demand.is_finite() && d.antenna_gain > 0.0) {
                return Err(Error::Config(format!(
                    "demand point {}: demand and antenna gain must be positive",
                    d.id
                )));
            }
        }
        if !(self.gamma_min > 0.0 && self.gamma_min < self.gamma_max) {
            return Err(Error::Config(format!(
                "need 0 < gamma_min < gamma_max, got {} and {}",
                self.gamma_min, self.gamma_max
            )));
        }
        if !(self.noise_power > 0.0 && self.bandwidth > 0.0) {
            return Err(Error::Config("noise power and bandwidth must be positive".into()));
        }
        if !(self.bw_efficiency > 0.0 && self.bw_efficiency <= 1.0) {
            return Err(Error::Config(format!(
                "bandwidth efficiency must lie in (0, 1], got {}",
                self.bw_efficiency
            )));
        }
        let e = &self.energy_params;
        if e.kappa1 < 0.0 || e.kappa2 < 0.0 || e.kappa3 < 0.0 {
            return Err(Error::Config("energy weights must be non-negative".into()));
        }
        if e.kappa1 + e.kappa2 + e.kappa3 == 0.0 {
            return Err(Error::Config("energy weights must not all be zero".into()));
        }
        Ok(())
    }
}

/// Cell-to-DP attenuation factors, row-major by cell.
#[derive(Clone, Debug, PartialEq)]
pub struct GainMatrix {
    num_cells: usize,
    num_dps: usize,
    g: Vec<f64>,
    /// Links whose distance was clamped to [`MIN_DISTANCE_M`].
    pub warnings: Vec<String>,
}

impl GainMatrix {
    pub fn new(num_cells: usize, num_dps: usize, g: Vec<f64>) -> Result<Self> {
        if g.len() != num_cells * num_dps {
            return Err(Error::Config(format!(
                "gain matrix needs {} entries, got {}",
                num_cells * num_dps,
                g.len()
            )));
        }
        if let Some(bad) = g.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Config(format!("gain entries must be positive and finite, got {bad}")));
        }
        Ok(GainMatrix {
            num_cells,
            num_dps,
            g,
            warnings: Vec::new(),
        })
    }

    #[inline]
    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.g[k * self.num_dps + m]
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_dps(&self) -> usize {
        self.num_dps
    }
}

pub fn compute_gains(scenario: &NetworkScenario) -> GainMatrix {
    let k_n = scenario.num_cells();
    let m_n = scenario.num_dps();
    let mut g = Vec::with_capacity(k_n * m_n);
    let mut warnings = Vec::new();
    for cell in &scenario.cells {
        for dp in &scenario.demand_points {
            let mut d = cell.position.distance(&dp.position);
            if !(d >= MIN_DISTANCE_M) {
                warnings.push(format!(
                    "cell {} / demand point {}: distance {:.3} m clamped to {} m",
                    cell.id, dp.id, d, MIN_DISTANCE_M
                ));
                d = MIN_DISTANCE_M;
            }
            let path_gain = db_to_linear(-cell.class.path_loss_db(d / 1000.0));
            g.push(cell.antenna_gain * path_gain * dp.antenna_gain);
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    GainMatrix {
        num_cells: k_n,
        num_dps: m_n,
        g,
        warnings,
    }
}

/// Cell activity, transmit powers and DP-to-cell allocation.
///
/// The allocation is stored as the serving cell of every DP, so each column
/// of the allocation matrix sums to one by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionPoint {
    pub active: Vec<bool>,
    pub power: Vec<f64>,
    pub serving: Vec<usize>,
}

impl SolutionPoint {
    pub fn new(active: Vec<bool>, power: Vec<f64>, serving: Vec<usize>) -> Result<Self> {
        if active.len() != power.len() {
            return Err(Error::Config("activity and power vectors differ in length".into()));
        }
        if let Some(&k) = serving.iter().find(|&&k| k >= active.len()) {
            return Err(Error::Config(format!("serving cell index {k} out of range")));
        }
        Ok(SolutionPoint {
            active,
            power,
            serving,
        })
    }

    pub fn num_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// `A_{km}`.
    pub fn allocated(&self, k: usize, m: usize) -> bool {
        self.serving[m] == k
    }

    /// Dense K×M allocation matrix.
    pub fn allocation_matrix(&self) -> Vec<Vec<bool>> {
        (0..self.active.len())
            .map(|k| self.serving.iter().map(|&s| s == k).collect())
            .collect()
    }
}

/// A breached constraint of the original problem.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    PowerOutOfBounds { cell: usize, power: f64 },
    PowerWhileInactive { cell: usize, power: f64 },
    ServedByInactive { dp: usize, cell: usize },
    NotStrongestBiased { dp: usize, cell: usize, stronger: usize },
    SinrBelowMinimum { dp: usize, sinr: f64 },
    Overloaded { cell: usize, load: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PowerOutOfBounds { cell, power } => {
                write!(f, "cell {cell}: power {power} W outside [P_min, P_max]")
            }
            Violation::PowerWhileInactive { cell, power } => {
                write!(f, "cell {cell}: inactive but transmits {power} W")
            }
            Violation::ServedByInactive { dp, cell } => {
                write!(f, "demand point {dp}: allocated to inactive cell {cell}")
            }
            Violation::NotStrongestBiased { dp, cell, stronger } => write!(
                f,
                "demand point {dp}: served by {cell} but cell {stronger} has higher biased power"
            ),
            Violation::SinrBelowMinimum { dp, sinr } => {
                write!(f, "demand point {dp}: SINR {sinr} below minimum")
            }
            Violation::Overloaded { cell, load } => write!(f, "cell {cell}: load {load} > 1"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadReport {
    /// Load of every cell.
    pub rho: Vec<f64>,
    /// SINR of every DP on its serving link (`A_{km} = 1`).
    pub sinr: Vec<f64>,
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl LoadReport {
    /// Mean load over active cells, `None` when nothing is active.
    pub fn mean_active_load(&self, solution: &SolutionPoint) -> Option<f64> {
        let active: Vec<f64> = self
            .rho
            .iter()
            .zip(&solution.active)
            .filter(|(_, &a)| a)
            .map(|(r, _)| *r)
            .collect();
        (!active.is_empty()).then(|| active.iter().sum::<f64>() / active.len() as f64)
    }
}

/// SINR of cell `k` serving DP `m`, with every other active cell interfering.
pub fn sinr(solution: &SolutionPoint, gains: &GainMatrix, noise: f64, k: usize, m: usize) -> f64 {
    let interference: f64 = (0..gains.num_cells())
        .filter(|&j| j != k && solution.active[j])
        .map(|j| solution.power[j] * gains.get(j, m))
        .sum();
    solution.power[k] * gains.get(k, m) / (interference + noise)
}

fn inverse_rate_unclamped(gamma: f64) -> f64 {
    1.0 / (1.0 + gamma).log2()
}

/// Clamped inverse rate `max{1/log2(1+γ), τ_min}` with `τ_min = 1/log2(1+γ_max)`.
pub fn inverse_rate(gamma: f64, gamma_max: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("inverse rate needs gamma > 0, got {gamma}")));
    }
    Ok(inverse_rate_unclamped(gamma).max(inverse_rate_unclamped(gamma_max)))
}

/// Exact loads plus a check of every constraint of the original problem.
pub fn cell_loads(solution: &SolutionPoint, scenario: &NetworkScenario, gains: &GainMatrix) -> LoadReport {
    let k_n = scenario.num_cells();
    let m_n = scenario.num_dps();
    let mut rho = vec![0.0; k_n];
    let mut sinr_v = vec![0.0; m_n];
    let mut violations = Vec::new();

    for (k, cell) in scenario.cells.iter().enumerate() {
        let p = solution.power[k];
        if solution.active[k] {
            let lo = cell.p_min * (1.0 - FEASIBILITY_TOL);
            let hi = cell.p_max * (1.0 + FEASIBILITY_TOL);
            if !(p >= lo && p <= hi) {
                violations.push(Violation::PowerOutOfBounds { cell: k, power: p });
            }
        } else if p.abs() > cell.p_min * FEASIBILITY_TOL {
            violations.push(Violation::PowerWhileInactive { cell: k, power: p });
        }
    }

    for m in 0..m_n {
        let s = solution.serving[m];
        if !solution.active[s] {
            violations.push(Violation::ServedByInactive { dp: m, cell: s });
        }
        let served = scenario.cells[s].bias * solution.power[s] * gains.get(s, m);
        // Ties resolve to the lowest index, so only strictly stronger cells break the association rule.
        if let Some(j) = (0..k_n).find(|&j| {
            j != s
                && solution.active[j]
                && scenario.cells[j].bias * solution.power[j] * gains.get(j, m)
                    > served * (1.0 + FEASIBILITY_TOL)
        }) {
            violations.push(Violation::NotStrongestBiased {
                dp: m,
                cell: s,
                stronger: j,
            });
        }
        let gamma = sinr(solution, gains, scenario.noise_power, s, m);
        sinr_v[m] = gamma;
        if gamma < scenario.gamma_min * (1.0 - FEASIBILITY_TOL) {
            violations.push(Violation::SinrBelowMinimum { dp: m, sinr: gamma });
        }
        let tau = if gamma > 0.0 {
            inverse_rate_unclamped(gamma).max(scenario.tau_min())
        } else {
            f64::INFINITY
        };
        rho[s] += scenario.load_coefficient(m) * tau;
    }

    for (k, &r) in rho.iter().enumerate() {
        if r > 1.0 + FEASIBILITY_TOL {
            violations.push(Violation::Overloaded { cell: k, load: r });
        }
    }

    LoadReport {
        rho,
        sinr: sinr_v,
        feasible: violations.is_empty(),
        violations,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    /// Per-cell energy in W·T0.
    pub per_cell: Vec<f64>,
    pub total: f64,
}

/// `E_k = T0 · P_max,k · (κ1 x_k + κ2 p_k / P_max,k + κ3 ρ_k)`.
pub fn energy(solution: &SolutionPoint, loads: &LoadReport, params: &EnergyParams, cells: &[Cell]) -> EnergyReport {
    let per_cell: Vec<f64> = cells
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let x = if solution.active[k] { 1.0 } else { 0.0 };
            params.t0
                * c.p_max
                * (params.kappa1 * x + params.kappa2 * solution.power[k] / c.p_max + params.kappa3 * loads.rho[k])
        })
        .collect();
    let total = per_cell.iter().sum();
    EnergyReport { per_cell, total }
}

/// Serving cell for every DP: the active cell with the largest `θ_k p_k g_km`,
/// lowest index on ties.
pub fn allocate(active: &[bool], power: &[f64], gains: &GainMatrix, biases: &[f64]) -> Result<Vec<usize>> {
    let m_n = gains.num_dps();
    if m_n > 0 && !active.iter().any(|&a| a) {
        return Err(Error::NoActiveCell);
    }
    Ok((0..m_n)
        .map(|m| {
            let mut best = usize::MAX;
            let mut best_val = f64::NEG_INFINITY;
            for k in (0..active.len()).filter(|&k| active[k]) {
                let v = biases[k] * power[k] * gains.get(k, m);
                if v > best_val {
                    best_val = v;
                    best = k;
                }
            }
            best
        })
        .collect())
}

/// Loads and energy of a solution in one call.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub loads: LoadReport,
    pub energy: EnergyReport,
}

pub fn evaluate(scenario: &NetworkScenario, gains: &GainMatrix, solution: &SolutionPoint) -> Evaluation {
    let loads = cell_loads(solution, scenario, gains);
    let energy = energy(solution, &loads, &scenario.energy_params, &scenario.cells);
    Evaluation { loads, energy }
}
