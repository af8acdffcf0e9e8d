mod common;

use std::path::Path;
use std::process::Command;

use hetnet_energy::harness::{generate_instance, ExperimentConfig, Preset};
use hetnet_energy::milp::{extract_solution, MilpModel, Sense};
use hetnet_energy::netmodel::evaluate;
use hetnet_energy::solver::{
    branch_and_bound, export_mps, import_solution, parse_name_map, read_mps, BnbSettings, BnbStatus,
};

const TOY_GOLDEN: &str = include_str!("data/toy.mps");

fn toy() -> MilpModel {
    let mut m = MilpModel::new("toy");
    let y = m.add_binary("y").unwrap();
    let c = m.add_continuous("c", 0.0, 4.0).unwrap();
    m.add_constraint("link", [(c, 1.0), (y, -4.0)], Sense::Le, 0.0).unwrap();
    m.add_constraint("need", [(c, 1.0)], Sense::Ge, 1.5).unwrap();
    m.set_objective([(y, 2.0), (c, 0.5)], 1.0).unwrap();
    m
}

#[test]
fn toy_golden_file() {
    let a = export_mps(&toy()).unwrap();
    let b = export_mps(&toy()).unwrap();
    assert_eq!(a.text, b.text);
    assert_eq!(a.text, TOY_GOLDEN);
    assert!(a.name_map.is_empty());
}

#[test]
fn toy_round_trip() {
    let m = toy();
    let back = read_mps(&export_mps(&m).unwrap().text, None).unwrap();
    assert_eq!(back.num_vars(), 2);
    assert_eq!(back.num_binaries(), 1);
    assert_eq!(back.num_constraints(), 2);
    let r = branch_and_bound(&back, &BnbSettings::default()).unwrap();
    assert_eq!(r.status, BnbStatus::Optimal);
    assert!((r.objective - 3.75).abs() < 1e-12);
    let sol = import_solution("y 1\nc 1.5\n", &back, None).unwrap();
    assert!((back.objective_value(&sol) - 3.75).abs() < 1e-12);
}

#[test]
fn import_rejects_bad_files() {
    let m = toy();
    assert!(import_solution("", &m, None).is_err());
    assert!(import_solution("# only a comment\n", &m, None).is_err());
    assert!(import_solution("y 1\nz 2\n", &m, None).is_err());
    assert!(import_solution("y 0.3\n", &m, None).is_err());
    assert!(import_solution("y 1 2\n", &m, None).is_err());
    assert!(import_solution("y 1\ny 1\n", &m, None).is_err());
    assert_eq!(import_solution("c 2\n", &m, None).unwrap(), vec![0.0, 2.0]);
}

fn desk_instance(run: u64, demand: f64) -> (ExperimentConfig, MilpModel, hetnet_energy::milp::VarMap) {
    let config = ExperimentConfig::preset(Preset::Desk);
    let (scenario, gains) = generate_instance(&config, config.seed, run, demand).unwrap();
    let (model, map) = config.milp_model(&scenario, &gains, &config.pwl_bound().unwrap()).unwrap();
    (config, model, map)
}

#[test]
fn desk_model_round_trip_keeps_optimum() {
    for (run, demand) in [(0, 1e6), (3, 3e6)] {
        let (_, model, _) = desk_instance(run, demand);
        let export = export_mps(&model).unwrap();
        assert!(!export.name_map.is_empty());
        let names = parse_name_map(&export.name_map_text()).unwrap();
        let mut back = read_mps(&export.text, Some(&names)).unwrap();
        // Branching priorities are not part of the file format.
        for (j, v) in model.variables().iter().enumerate() {
            back.set_priority(hetnet_energy::milp::VarId(j), v.priority);
        }
        assert_eq!(back.num_vars(), model.num_vars());
        assert_eq!(back.num_binaries(), model.num_binaries());
        assert_eq!(back.num_constraints(), model.num_constraints());
        for (a, b) in model.variables().iter().zip(back.variables()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.kind, b.kind);
        }
        let s = BnbSettings::default();
        let (r1, r2) = (branch_and_bound(&model, &s).unwrap(), branch_and_bound(&back, &s).unwrap());
        assert_eq!(r1.has_solution(), r2.has_solution());
        if r1.has_solution() {
            assert!((r1.objective - r2.objective).abs() <= 1e-6 * r1.objective.abs());
        }
    }
}

const HIGHS_SCRIPT: &str = r#"
import sys, highspy
h = highspy.Highs()
h.setOptionValue("output_flag", False)
# HiGHS presolve mis-tightens some of these models (it reports optima above
# points it accepts as feasible when handed them), so solve without it.
h.setOptionValue("presolve", "off")
h.setOptionValue("mip_rel_gap", 1e-10)
h.setOptionValue("mip_abs_gap", 1e-10)
if h.readModel(sys.argv[1]) != highspy.HighsStatus.kOk:
    sys.exit(3)
if sys.argv[2] == "-":
    print(h.getNumCol(), h.getNumRow())
    sys.exit(0)
h.run()
if h.getModelStatus() != highspy.HighsModelStatus.kOptimal:
    sys.exit(4)
lp = h.getLp()
with open(sys.argv[2], "w") as f:
    for name, v in zip(lp.col_names_, h.getSolution().col_value):
        f.write(f"{name} {v!r}\n")
print(repr(h.getInfo().objective_function_value))
"#;

fn highs_available() -> bool {
    Command::new("python3")
        .args(["-c", "import highspy"])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn run_highs(model: &Path, solution: Option<&Path>) -> std::process::Output {
    let sol = solution.map(|p| p.to_str().unwrap().to_string()).unwrap_or_else(|| "-".into());
    Command::new("python3")
        .args(["-c", HIGHS_SCRIPT, model.to_str().unwrap(), &sol])
        .output()
        .unwrap()
}

#[test]
fn external_solver_reads_full_size_export() {
    if !highs_available() {
        eprintln!("highspy not installed; skipping external reader check");
        return;
    }
    let config = ExperimentConfig::preset(Preset::Paper);
    let (scenario, gains) = generate_instance(&config, config.seed, 0, 1e6).unwrap();
    let (model, _) = config.milp_model(&scenario, &gains, &config.pwl_bound().unwrap()).unwrap();
    assert_eq!(model.num_binaries(), 1288);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("full.mps");
    std::fs::write(&path, export_mps(&model).unwrap().text).unwrap();
    let out = run_highs(&path, None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stderr.is_empty(), "{}", String::from_utf8_lossy(&out.stderr));
    let dims = String::from_utf8(out.stdout).unwrap();
    assert_eq!(dims.trim(), format!("{} {}", model.num_vars(), model.num_constraints()));
}

#[test]
fn external_solution_reproduces_objective() {
    if !highs_available() {
        eprintln!("highspy not installed; skipping cross-solver check");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    for (run, demand) in [(0u64, 0.5e6), (1, 2e6), (2, 3.5e6)] {
        let (config, model, map) = desk_instance(run, demand);
        let export = export_mps(&model).unwrap();
        let mps = dir.path().join(format!("r{run}.mps"));
        let sol = dir.path().join(format!("r{run}.sol"));
        std::fs::write(&mps, &export.text).unwrap();
        let out = run_highs(&mps, Some(&sol));
        let ours = branch_and_bound(&model, &BnbSettings::default()).unwrap();
        if out.status.code() == Some(4) {
            assert_eq!(ours.status, BnbStatus::Infeasible, "run {run}");
            continue;
        }
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let highs_obj: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
        let names = parse_name_map(&export.name_map_text()).unwrap();
        let values = import_solution(&std::fs::read_to_string(&sol).unwrap(), &model, Some(&names)).unwrap();
        assert!((model.objective_value(&values) - highs_obj).abs() <= 1e-6 * highs_obj.abs());
        assert!((ours.objective - highs_obj).abs() <= 1e-6 * highs_obj.abs(), "{} vs {highs_obj}", ours.objective);
        let (scenario, gains) = generate_instance(&config, config.seed, run, demand).unwrap();
        let point = extract_solution(&values, &map, &scenario, &gains).unwrap();
        assert!(evaluate(&scenario, &gains, &point).loads.feasible);
    }
}
