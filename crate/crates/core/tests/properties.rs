use hetnet_energy::harness::{generate_instance, ExperimentConfig, Preset};
use hetnet_energy::netmodel::{
    allocate, cell_loads, energy, evaluate, inverse_rate, sinr, EnergyParams, SolutionPoint, Violation,
};
use hetnet_energy::pwl::{bps, build_bound, lambert_w};
use hetnet_energy::scenarios::{build_levels, default_weights};
use proptest::prelude::*;

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pwl_bound_over_approximates(
        lo_db in -12.0f64..0.0,
        span_db in 5.0f64..35.0,
        epsilon in 0.005f64..0.3,
    ) {
        let lo = 10f64.powf(lo_db / 10.0);
        let hi = 10f64.powf((lo_db + span_db) / 10.0);
        let bound = build_bound(lo, hi, epsilon).unwrap();
        prop_assert!(bound.pieces.iter().all(|p| p.alpha <= 0.0));
        for g in log_grid(lo, hi, 20_000) {
            let f = hetnet_energy::pwl::inverse_rate(g);
            let u = bound.eval(g);
            prop_assert!(u >= f - 1e-12, "deficit at {g}");
            prop_assert!(u - f <= epsilon + 1e-9, "error {} at {g}", u - f);
        }
        let finer = build_bound(lo, hi, epsilon / 2.0).unwrap();
        prop_assert!(finer.len() >= bound.len());
    }

    #[test]
    fn lambert_w_inverts(y in 1e-6f64..1e3) {
        let w = lambert_w(y).unwrap();
        prop_assert!(((w * w.exp()) / y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn load_is_invariant_to_joint_scaling(run in 0u64..500, demand in 1e5f64..5e6, mask in 1u32..16) {
        let config = ExperimentConfig::preset(Preset::Desk);
        let (scenario, gains) = generate_instance(&config, config.seed, run, demand).unwrap();
        let active: Vec<bool> = (0..4).map(|k| mask >> k & 1 == 1).collect();
        let power: Vec<f64> = scenario.cells.iter().zip(&active).map(|(c, &on)| if on { c.p_max } else { 0.0 }).collect();
        let biases: Vec<f64> = scenario.cells.iter().map(|c| c.bias).collect();
        let serving = allocate(&active, &power, &gains, &biases).unwrap();
        let sol = SolutionPoint::new(active, power, serving).unwrap();
        let base = cell_loads(&sol, &scenario, &gains);
        let mut doubled = scenario.clone();
        doubled.bandwidth *= 2.0;
        for d in &mut doubled.demand_points {
            d.demand *= 2.0;
        }
        // Gains and noise are inputs here, so only the demand/bandwidth ratio moves.
        let scaled = cell_loads(&sol, &doubled, &gains);
        for (a, b) in base.rho.iter().zip(&scaled.rho) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        // Biased allocation never breaks the association constraint.
        let associated = !base
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NotStrongestBiased { .. } | Violation::ServedByInactive { .. }));
        prop_assert!(associated);
    }

    #[test]
    fn top_interference_level_dominates(run in 0u64..500, seed in 0u64..1000) {
        let config = ExperimentConfig::preset(Preset::Paper);
        let (scenario, gains) = generate_instance(&config, config.seed, run, 1e6).unwrap();
        let nominal: Vec<f64> = scenario.cells.iter().map(|c| c.p_max).collect();
        let levels = build_levels(&gains, &nominal, scenario.noise_power, &default_weights()).unwrap();
        let (kn, mn) = (scenario.num_cells(), scenario.num_dps());
        for k in 0..kn {
            for m in 0..mn {
                for n in 1..levels.n_levels {
                    prop_assert!(levels.get(n, k, m) <= levels.get(n - 1, k, m));
                }
                prop_assert!(levels.get(levels.n_levels - 1, k, m) >= scenario.noise_power);
            }
        }
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let power: Vec<f64> = scenario
                .cells
                .iter()
                .map(|c| if rng.gen_bool(0.5) { rng.gen_range(c.p_min..=c.p_max) } else { 0.0 })
                .collect();
            for k in 0..kn {
                for m in 0..mn {
                    let actual: f64 = (0..kn).filter(|&j| j != k).map(|j| power[j] * gains.get(j, m)).sum::<f64>()
                        + scenario.noise_power;
                    prop_assert!(levels.get(0, k, m) >= actual * (1.0 - 1e-12));
                }
            }
        }
    }
}

#[test]
fn single_cell_sinr_and_rate_are_monotone() {
    let mut config = ExperimentConfig::preset(Preset::Desk);
    config.cells.truncate(1);
    config.dp_count = 3;
    let (scenario, gains) = generate_instance(&config, config.seed, 0, 1e6).unwrap();
    let c = &scenario.cells[0];
    let mut last = vec![(0.0, f64::INFINITY); 3];
    for i in 0..=200 {
        let p = c.p_min + (c.p_max - c.p_min) * i as f64 / 200.0;
        let sol = SolutionPoint::new(vec![true], vec![p], vec![0; 3]).unwrap();
        for (m, prev) in last.iter_mut().enumerate() {
            let g = sinr(&sol, &gains, scenario.noise_power, 0, m);
            let tau = inverse_rate(g, scenario.gamma_max).unwrap();
            assert!(g > prev.0 && tau <= prev.1);
            *prev = (g, tau);
        }
    }
}

#[test]
fn inverse_rate_floor() {
    let gamma_max = 100.0;
    let tau_min = 1.0 / (101f64).log2();
    for g in log_grid(1e-3, 1e4, 5000) {
        let t = inverse_rate(g, gamma_max).unwrap();
        assert!(t >= tau_min);
        if g >= gamma_max {
            assert_eq!(t, tau_min);
        }
    }
}

#[test]
fn activity_only_energy_counts_powered_cells() {
    let config = ExperimentConfig::preset(Preset::Paper);
    let (scenario, gains) = generate_instance(&config, config.seed, 3, 2e6).unwrap();
    let params = EnergyParams {
        kappa1: 1.0,
        kappa2: 0.0,
        kappa3: 0.0,
        t0: 2.5,
    };
    for mask in [1u32, 0b1010_0101, 0xff] {
        let active: Vec<bool> = (0..8).map(|k| mask >> k & 1 == 1).collect();
        let power: Vec<f64> =
            scenario.cells.iter().zip(&active).map(|(c, &on)| if on { c.p_min } else { 0.0 }).collect();
        let biases: Vec<f64> = scenario.cells.iter().map(|c| c.bias).collect();
        let serving = allocate(&active, &power, &gains, &biases).unwrap();
        let sol = SolutionPoint::new(active.clone(), power, serving).unwrap();
        let loads = cell_loads(&sol, &scenario, &gains);
        let want: f64 = scenario.cells.iter().zip(&active).filter(|(_, &on)| on).map(|(c, _)| 2.5 * c.p_max).sum();
        assert_eq!(energy(&sol, &loads, &params, &scenario.cells).total, want);
    }
    let power: Vec<f64> = scenario.cells.iter().map(|c| c.p_max).collect();
    let serving = allocate(&[true; 8], &power, &gains, &vec![1.0; 8]).unwrap();
    let sol = SolutionPoint::new(vec![true; 8], power, serving).unwrap();
    assert_eq!(evaluate(&scenario, &gains, &sol).energy.per_cell.len(), 8);
}

#[test]
fn bps_depth_stays_bounded() {
    for eps in [1e-1, 1e-2, 1e-4, 1e-6] {
        let b = bps(0.01, 1e4, eps).unwrap();
        assert!(b.windows(2).all(|w| w[0] < w[1]));
    }
    assert!(bps(0.1, 100.0, 100.0).unwrap().is_empty());
    assert!(bps(1.0, 1.0 + 1e-12, 1e-3).unwrap().is_empty());
}
