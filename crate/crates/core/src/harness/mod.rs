//! Scenario generation, Monte-Carlo demand sweeps and CSV output.

mod csv;
mod sweep;

pub use csv::{emit_csv, format_g, instances_csv, metrics_csv};
pub use sweep::{run_sweep, solve_instance, InstanceRecord, MethodOutcome, MetricsRow, OutcomeStatus, SweepOutput};

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{
    compute_gains, db_to_linear, dbm_to_watts, Cell, CellClass, DemandPoint, EnergyParams, GainMatrix,
    NetworkScenario, Point,
};
use crate::scenarios::{default_weights, desk_weights, ScenarioWeights};
use crate::solver::BnbSettings;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Milp,
    MaxPowerSwitching,
    PowerScaling,
    FullPower,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Milp, Method::MaxPowerSwitching, Method::PowerScaling, Method::FullPower];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Milp => "milp",
            Method::MaxPowerSwitching => "max_power_switching",
            Method::PowerScaling => "power_scaling",
            Method::FullPower => "full_power",
        }
    }

    /// Whether the method takes part in the common-feasibility filter used
    /// for averages. The full-power reference does not: it is a constant
    /// line, and its frequent infeasibility would empty the comparison set.
    pub fn is_compared(self) -> bool {
        self != Method::FullPower
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Four cells, six DPs, three interference levels: sized for the
    /// bundled solver.
    Desk,
    /// Full eight-cell layout with twenty DPs and seven levels.
    Paper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub class: CellClass,
    pub x: f64,
    pub y: f64,
    pub p_min_dbm: f64,
    pub p_max_dbm: f64,
    pub antenna_gain_db: f64,
    pub bias_db: f64,
}

impl CellSpec {
    fn macro_cell(x: f64, y: f64) -> Self {
        CellSpec {
            class: CellClass::Macro,
            x,
            y,
            p_min_dbm: 36.0,
            p_max_dbm: 46.0,
            antenna_gain_db: 15.0,
            bias_db: 0.0,
        }
    }

    fn pico_cell(x: f64, y: f64) -> Self {
        CellSpec {
            class: CellClass::Pico,
            x,
            y,
            p_min_dbm: 26.0,
            p_max_dbm: 36.0,
            antenna_gain_db: 5.0,
            bias_db: 3.0,
        }
    }
}

/// Radio parameters shared by every cell and DP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioParams {
    pub noise_dbm_per_hz: f64,
    pub bandwidth_hz: f64,
    pub bw_efficiency: f64,
    pub gamma_min_db: f64,
    pub gamma_max_db: f64,
    pub dp_antenna_gain_db: f64,
    /// Side of the square deployment area, metres.
    pub area_m: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            noise_dbm_per_hz: -145.0,
            bandwidth_hz: 20e6,
            bw_efficiency: 0.8,
            gamma_min_db: -10.0,
            gamma_max_db: 20.0,
            dp_antenna_gain_db: 0.0,
            area_m: 1000.0,
        }
    }
}

/// Demand sweep in bit/s, inclusive of `stop` up to rounding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl DemandSweep {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub gap_tol: f64,
    pub node_limit: usize,
    /// Seconds; unset by default so sweeps stay reproducible.
    pub time_limit_s: Option<f64>,
    /// Models with more binaries are not solved in-process; they are
    /// exported (when `export_dir` is set) and recorded as unsolved.
    pub export_threshold: usize,
    pub export_dir: Option<String>,
    pub max_sweeps: usize,
    pub scaling_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gap_tol: 1e-9,
            node_limit: 200_000,
            time_limit_s: None,
            export_threshold: 200,
            export_dir: None,
            max_sweeps: 100,
            scaling_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn bnb_settings(&self) -> BnbSettings {
        BnbSettings {
            gap_tol: self.gap_tol,
            node_limit: self.node_limit,
            time_limit: self.time_limit_s.map(std::time::Duration::from_secs_f64),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cells: Vec<CellSpec>,
    pub dp_count: usize,
    pub demand: DemandSweep,
    pub runs: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub epsilon: f64,
    pub weights: Vec<ScenarioWeights>,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub energy: EnergyParams,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// The eight base stations of the reference layout: four macro cells, then
/// four pico cells.
pub fn reference_cells() -> Vec<CellSpec> {
    vec![
        CellSpec::macro_cell(200.0, 200.0),
        CellSpec::macro_cell(150.0, 850.0),
        CellSpec::macro_cell(800.0, 230.0),
        CellSpec::macro_cell(780.0, 820.0),
        CellSpec::pico_cell(500.0, 700.0),
        CellSpec::pico_cell(520.0, 310.0),
        CellSpec::pico_cell(320.0, 500.0),
        CellSpec::pico_cell(690.0, 490.0),
    ]
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let demand = DemandSweep {
            start: 0.25e6,
            stop: 7.5e6,
            step: 0.25e6,
        };
        match preset {
            Preset::Desk => {
                let all = reference_cells();
                ExperimentConfig {
                    cells: vec![all[0].clone(), all[1].clone(), all[4].clone(), all[5].clone()],
                    dp_count: 6,
                    demand,
                    runs: 200,
                    seed: 1,
                    methods: Method::ALL.to_vec(),
                    epsilon: 0.1,
                    weights: desk_weights(),
                    radio: RadioParams::default(),
                    energy: EnergyParams::default(),
                    solver: SolverConfig::default(),
                }
            }
            Preset::Paper => ExperimentConfig {
                cells: reference_cells(),
                dp_count: 20,
                demand,
                runs: 200,
                seed: 1,
                methods: Method::ALL.to_vec(),
                epsilon: 0.05,
                weights: default_weights(),
                radio: RadioParams::default(),
                energy: EnergyParams::default(),
                solver: SolverConfig::default(),
            },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if !(self.demand.step > 0.0) || !(self.demand.start > 0.0) || self.demand.stop < self.demand.start {
            return Err(Error::Config("demand sweep needs 0 < start <= stop and step > 0".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.cells.is_empty() {
            return Err(Error::Config("at least one cell is required".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        for c in &self.cells {
            if c.p_min_dbm > c.p_max_dbm {
                return Err(Error::Config("cell p_min_dbm exceeds p_max_dbm".into()));
            }
        }
        Ok(())
    }

    /// Scenario for the given DP layout, every DP demanding `demand` bit/s.
    pub fn scenario(&self, dp_positions: &[Point], demand: f64) -> NetworkScenario {
        let r = &self.radio;
        let cells = self
            .cells
            .iter()
            .enumerate()
            .map(|(id, c)| Cell {
                id,
                position: Point::new(c.x, c.y),
                p_min: dbm_to_watts(c.p_min_dbm),
                p_max: dbm_to_watts(c.p_max_dbm),
                antenna_gain: db_to_linear(c.antenna_gain_db),
                bias: db_to_linear(c.bias_db),
                class: c.class,
            })
            .collect();
        let demand_points = dp_positions
            .iter()
            .enumerate()
            .map(|(id, &position)| DemandPoint {
                id,
                position,
                demand,
                antenna_gain: db_to_linear(r.dp_antenna_gain_db),
            })
            .collect();
        NetworkScenario {
            cells,
            demand_points,
            noise_power: dbm_to_watts(r.noise_dbm_per_hz) * r.bandwidth_hz,
            bandwidth: r.bandwidth_hz,
            bw_efficiency: r.bw_efficiency,
            gamma_min: db_to_linear(r.gamma_min_db),
            gamma_max: db_to_linear(r.gamma_max_db),
            energy_params: self.energy,
        }
    }
}

/// DP positions for one run: uniform on the square area, drawn from a
/// ChaCha20 stream selected by `run_index`, independent of demand.
pub fn dp_positions(config: &ExperimentConfig, seed: u64, run_index: u64) -> Vec<Point> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(run_index);
    let side = config.radio.area_m;
    (0..config.dp_count)
        .map(|_| {
            let x = rng.gen_range(0.0..side);
            let y = rng.gen_range(0.0..side);
            Point::new(x, y)
        })
        .collect()
}

pub fn generate_instance(
    config: &ExperimentConfig,
    seed: u64,
    run_index: u64,
    demand: f64,
) -> Result<(NetworkScenario, GainMatrix)> {
    let scenario = config.scenario(&dp_positions(config, seed, run_index), demand);
    scenario.validate()?;
    let gains = compute_gains(&scenario);
    Ok((scenario, gains))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_run_same_layout() {
        let c = ExperimentConfig::preset(Preset::Paper);
        assert_eq!(dp_positions(&c, 5, 0), dp_positions(&c, 5, 0));
        assert_ne!(dp_positions(&c, 5, 0), dp_positions(&c, 5, 1));
        assert_ne!(dp_positions(&c, 5, 0), dp_positions(&c, 6, 0));
        let (s, _) = generate_instance(&c, 5, 0, 1e6).unwrap();
        assert_eq!(s.num_cells(), 8);
        assert_eq!(s.num_dps(), 20);
    }

    #[test]
    fn uniform_positions() {
        let mut c = ExperimentConfig::preset(Preset::Desk);
        c.dp_count = 10_000;
        let pts = dp_positions(&c, 3, 0);
        let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
        let n = pts.len() as f64;
        assert!((mx / n - 500.0).abs() < 10.0 && (my / n - 500.0).abs() < 10.0);
        assert!(pts.iter().all(|p| (0.0..1000.0).contains(&p.x) && (0.0..1000.0).contains(&p.y)));
    }

    #[test]
    fn sweep_points() {
        let c = ExperimentConfig::preset(Preset::Desk);
        let pts = c.demand.points();
        assert_eq!(pts.len(), 30);
        assert!((pts[29] - 7.5e6).abs() < 1e-6);
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::preset(Preset::Desk);
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert!(ExperimentConfig::from_toml("runs = 0").is_err());
    }
}
