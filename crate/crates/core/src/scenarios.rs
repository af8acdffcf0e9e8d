//! Discrete interference levels `Ψ_{nkm}` built from the strongest and
//! second-strongest interferer of every (cell, DP) pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::GainMatrix;

/// Scaling of primary, secondary and remaining interference for one level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioWeights {
    pub primary: f64,
    pub secondary: f64,
    pub remaining: f64,
}

impl ScenarioWeights {
    pub const fn new(primary: f64, secondary: f64, remaining: f64) -> Self {
        ScenarioWeights {
            primary,
            secondary,
            remaining,
        }
    }

    const FULL: ScenarioWeights = ScenarioWeights::new(1.0, 1.0, 1.0);
}

/// The seven-level table: back off the strongest interferer in steps of a
/// quarter, then drop the second strongest, then everything.
pub fn default_weights() -> Vec<ScenarioWeights> {
    vec![
        ScenarioWeights::new(1.0, 1.0, 1.0),
        ScenarioWeights::new(0.75, 1.0, 1.0),
        ScenarioWeights::new(0.5, 1.0, 1.0),
        ScenarioWeights::new(0.25, 1.0, 1.0),
        ScenarioWeights::new(0.0, 1.0, 1.0),
        ScenarioWeights::new(0.0, 0.0, 1.0),
        ScenarioWeights::new(0.0, 0.0, 0.0),
    ]
}

/// Three-level table used by the reduced preset.
pub fn desk_weights() -> Vec<ScenarioWeights> {
    vec![
        ScenarioWeights::new(1.0, 1.0, 1.0),
        ScenarioWeights::new(0.25, 1.0, 1.0),
        ScenarioWeights::new(0.0, 0.0, 0.0),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterferenceLevels {
    /// Row-major N×K×M, watts.
    psi: Vec<f64>,
    pub n_levels: usize,
    num_cells: usize,
    num_dps: usize,
    pub weights: Vec<ScenarioWeights>,
    pub nominal_powers: Vec<f64>,
}

impl InterferenceLevels {
    #[inline]
    pub fn get(&self, n: usize, k: usize, m: usize) -> f64 {
        self.psi[(n * self.num_cells + k) * self.num_dps + m]
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_dps(&self) -> usize {
        self.num_dps
    }
}

/// Strongest (`v`) and second strongest (`w`) interferer of DP `m` when
/// served by `k`, ranked by `p_j g_jm`. Missing interferers (K < 3) are
/// `None` and contribute zero power.
pub fn rank_interferers(gains: &GainMatrix, nominal_powers: &[f64], k: usize, m: usize) -> (Option<usize>, Option<usize>) {
    let mut v: Option<usize> = None;
    let mut w: Option<usize> = None;
    let rx = |j: usize| nominal_powers[j] * gains.get(j, m);
    for j in (0..gains.num_cells()).filter(|&j| j != k) {
        match v {
            None => v = Some(j),
            Some(vi) if rx(j) > rx(vi) => {
                w = v;
                v = Some(j);
            }
            _ => match w {
                None => w = Some(j),
                Some(wi) if rx(j) > rx(wi) => w = Some(j),
                _ => {}
            },
        }
    }
    (v, w)
}

pub fn build_levels(
    gains: &GainMatrix,
    nominal_powers: &[f64],
    noise: f64,
    weights: &[ScenarioWeights],
) -> Result<InterferenceLevels> {
    if weights.first() != Some(&ScenarioWeights::FULL) {
        return Err(Error::Config(
            "interference weight table must start with the full-interference row (1, 1, 1)".into(),
        ));
    }
    if nominal_powers.len() != gains.num_cells() {
        return Err(Error::Config("one nominal power per cell required".into()));
    }
    let (k_n, m_n) = (gains.num_cells(), gains.num_dps());
    let mut psi = vec![0.0; weights.len() * k_n * m_n];
    for k in 0..k_n {
        for m in 0..m_n {
            let (v, w) = rank_interferers(gains, nominal_powers, k, m);
            let rx = |j: Option<usize>| j.map_or(0.0, |j| nominal_powers[j] * gains.get(j, m));
            let primary = rx(v);
            let secondary = rx(w);
            let remaining: f64 = (0..k_n)
                .filter(|&j| j != k && Some(j) != v && Some(j) != w)
                .map(|j| nominal_powers[j] * gains.get(j, m))
                .sum();
            for (n, l) in weights.iter().enumerate() {
                psi[(n * k_n + k) * m_n + m] =
                    l.primary * primary + l.secondary * secondary + l.remaining * remaining + noise;
            }
        }
    }
    Ok(InterferenceLevels {
        psi,
        n_levels: weights.len(),
        num_cells: k_n,
        num_dps: m_n,
        weights: weights.to_vec(),
        nominal_powers: nominal_powers.to_vec(),
    })
}
