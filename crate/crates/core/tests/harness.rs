use std::path::Path;

use hetnet_energy::harness::{
    emit_csv, instances_csv, run_sweep, ExperimentConfig, Method, OutcomeStatus, Preset,
};
use hetnet_energy::Error;

fn data(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn mini() -> ExperimentConfig {
    ExperimentConfig::load(&data("mini_sweep.toml")).unwrap()
}

#[test]
fn seeded_sweep_matches_golden_files() {
    let sweep = run_sweep(&mini()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_csv(&sweep.rows, &sweep.records, dir.path()).unwrap();
    for name in ["metrics.csv", "instances.csv"] {
        let got = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let want = std::fs::read_to_string(data("golden").join(name)).unwrap();
        assert_eq!(got, want, "{name}");
    }
}

#[test]
fn repeated_sweeps_are_identical() {
    let mut config = mini();
    config.seed = 99;
    let a = run_sweep(&config).unwrap();
    let b = run_sweep(&config).unwrap();
    assert_eq!(a, b);
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_csv(&a.rows, &a.records, da.path()).unwrap();
    emit_csv(&b.rows, &b.records, db.path()).unwrap();
    for name in ["metrics.csv", "instances.csv"] {
        assert_eq!(std::fs::read(da.path().join(name)).unwrap(), std::fs::read(db.path().join(name)).unwrap());
    }
}

#[test]
fn empty_records_give_header_only_instances() {
    let sweep = run_sweep(&mini()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_csv(&sweep.rows, &[], dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("instances.csv")).unwrap();
    assert_eq!(text, instances_csv(&[]));
    assert_eq!(text.lines().count(), 1);
    assert!(emit_csv(&[], &[], dir.path()).is_err());
}

#[test]
fn unwritable_path_is_reported() {
    let sweep = run_sweep(&mini()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("out");
    let err = emit_csv(&sweep.rows, &sweep.records, &target).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains(&blocker.display().to_string()), "{err}");
}

#[test]
fn full_power_reference_is_constant() {
    let mut config = ExperimentConfig::preset(Preset::Paper);
    config.methods = vec![Method::MaxPowerSwitching, Method::FullPower];
    config.runs = 6;
    config.demand.step = 2.5e6;
    let sweep = run_sweep(&config).unwrap();
    for row in sweep.rows.iter().filter(|r| r.method == Method::FullPower) {
        if row.instances_counted > 0 {
            assert!((row.mean_energy.unwrap() - 175.167155).abs() < 1e-5, "{row:?}");
            assert_eq!(row.mean_active_cells, Some(8.0));
        }
    }
    for rec in sweep.records.iter().filter(|r| r.outcome.method == Method::FullPower) {
        assert!((rec.outcome.energy.unwrap() - 175.167155).abs() < 1e-5);
    }
}

#[test]
fn compared_methods_share_instances() {
    let mut config = ExperimentConfig::preset(Preset::Desk);
    config.runs = 6;
    config.demand.start = 4e6;
    config.demand.step = 3e6;
    let sweep = run_sweep(&config).unwrap();
    let points = config.demand.points();
    assert_eq!(sweep.rows.len(), points.len() * config.methods.len());
    for chunk in sweep.rows.chunks(config.methods.len()) {
        assert!(chunk.iter().all(|r| r.instances_counted == chunk[0].instances_counted && r.demand == chunk[0].demand));
    }
    for rec in &sweep.records {
        if rec.outcome.method == Method::Milp && rec.outcome.status == OutcomeStatus::Feasible {
            assert!(rec.outcome.objective.unwrap() >= rec.outcome.energy.unwrap() - 1e-9);
        }
    }
}

#[test]
fn baseline_feasibility_falls_with_demand() {
    let mut config = ExperimentConfig::preset(Preset::Desk);
    config.methods = vec![Method::MaxPowerSwitching, Method::PowerScaling, Method::FullPower];
    config.runs = 200;
    let sweep = run_sweep(&config).unwrap();
    for method in &config.methods {
        let rates: Vec<f64> = sweep.rows.iter().filter(|r| r.method == *method).map(|r| r.feasibility_rate).collect();
        for w in rates.windows(2) {
            assert!(w[1] <= w[0] + 0.05, "{}: {rates:?}", method.as_str());
        }
    }
}

#[test]
fn large_models_are_routed_to_export() {
    let mut config = ExperimentConfig::preset(Preset::Paper);
    config.methods = vec![Method::Milp];
    config.runs = 2;
    config.demand.stop = config.demand.start;
    let dir = tempfile::tempdir().unwrap();
    config.solver.export_dir = Some(dir.path().display().to_string());
    let sweep = run_sweep(&config).unwrap();
    assert!(sweep.records.iter().all(|r| r.outcome.status == OutcomeStatus::Unsolved));
    assert_eq!(sweep.rows[0].feasibility_rate, 0.0);
    for tag in ["d000_r0000", "d000_r0001"] {
        assert!(dir.path().join(format!("{tag}.mps")).exists());
        assert!(dir.path().join(format!("{tag}.names")).exists());
    }
}

#[test]
fn config_rejects_unknown_keys() {
    let text = mini().to_toml().replace("dp_count = 4", "dp_count = 4\nturbo = true");
    assert!(ExperimentConfig::from_toml(&text).is_err());
    assert_eq!(ExperimentConfig::from_toml(&mini().to_toml()).unwrap(), mini());
}
