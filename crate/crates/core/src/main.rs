use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hetnet_energy::harness::{emit_csv, generate_instance, run_sweep, solve_instance, ExperimentConfig, Preset};
use hetnet_energy::milp::extract_solution;
use hetnet_energy::netmodel::{evaluate, linear_to_db, GainMatrix, NetworkScenario, SolutionPoint};
use hetnet_energy::pwl::build_bound;
use hetnet_energy::solver::{export_mps, import_solution, parse_name_map};
use hetnet_energy::{Error, Result};

#[derive(Parser)]
#[command(name = "hetnet-energy", version, about = "Energy-minimal cell switching and power control")]
struct Cli {
    /// Experiment configuration (TOML); overrides --preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = PresetArg::Desk)]
    preset: PresetArg,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Paper,
}

#[derive(Args)]
struct InstanceArgs {
    /// Per-DP demand, bit/s.
    #[arg(long)]
    demand: f64,
    #[arg(long, default_value_t = 0)]
    run: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured demand sweep and write metrics.csv and instances.csv.
    Sweep {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the configured runs per demand point.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Solve one instance with every configured method and verify the results.
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Write the MILP of one instance in fixed MPS format.
    Export {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an external solver's solution for an exported instance.
    Verify {
        #[command(flatten)]
        instance: InstanceArgs,
        /// `name value` lines.
        #[arg(long)]
        solution: PathBuf,
        /// Name map written next to the model, when names were shortened.
        #[arg(long)]
        names: Option<PathBuf>,
    },
    /// Print the piecewise-linear bound table.
    Pwl {
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = -10.0)]
        gamma_min_db: f64,
        #[arg(long, default_value_t = 20.0)]
        gamma_max_db: f64,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::preset(match cli.preset {
            PresetArg::Desk => Preset::Desk,
            PresetArg::Paper => Preset::Paper,
        }),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn instance(config: &ExperimentConfig, args: &InstanceArgs) -> Result<(NetworkScenario, GainMatrix)> {
    generate_instance(config, config.seed, args.run, args.demand)
}

fn print_solution(scenario: &NetworkScenario, gains: &GainMatrix, sol: &SolutionPoint) {
    let ev = evaluate(scenario, gains, sol);
    for (k, cell) in scenario.cells.iter().enumerate() {
        if sol.active[k] {
            println!(
                "  cell {} ({}) on  p = {:.3} dBm  load = {:.4}",
                k + 1,
                cell.class.as_str(),
                linear_to_db(sol.power[k] * 1e3),
                ev.loads.rho[k]
            );
        } else {
            println!("  cell {} ({}) off", k + 1, cell.class.as_str());
        }
    }
    let serving: Vec<String> = sol.serving.iter().map(|k| (k + 1).to_string()).collect();
    println!("  serving cells: {}", serving.join(" "));
    println!("  energy: {:.6}  feasible: {}", ev.energy.total, ev.loads.feasible);
    for v in &ev.loads.violations {
        println!("  violation: {v}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::Sweep { out, runs } => {
            if let Some(runs) = runs {
                config.runs = runs;
            }
            let sweep = run_sweep(&config)?;
            emit_csv(&sweep.rows, &sweep.records, &out)?;
            println!("wrote {} metric rows to {}", sweep.rows.len(), out.display());
        }
        Command::Solve { instance: args } => {
            let (scenario, gains) = instance(&config, &args)?;
            let pwl = config.pwl_bound()?;
            for &method in &config.methods {
                let out = solve_instance(&config, &scenario, &gains, &pwl, method, "solve")?;
                println!("{}: {}", method.as_str(), out.status.as_str());
                if let Some(obj) = out.objective {
                    println!("  model objective: {obj:.6}  nodes: {}", out.nodes.unwrap_or(0));
                }
                if let Some(sol) = &out.solution {
                    print_solution(&scenario, &gains, sol);
                }
            }
        }
        Command::Export { instance: args, out } => {
            let (scenario, gains) = instance(&config, &args)?;
            let (model, _) = config.milp_model(&scenario, &gains, &config.pwl_bound()?)?;
            let export = export_mps(&model)?;
            write(&out, &export.text)?;
            println!(
                "wrote {} ({} variables, {} binaries, {} rows)",
                out.display(),
                model.num_vars(),
                model.num_binaries(),
                model.num_constraints()
            );
            if !export.name_map.is_empty() {
                let names = out.with_extension("names");
                write(&names, &export.name_map_text())?;
                println!("wrote {}", names.display());
            }
        }
        Command::Verify {
            instance: args,
            solution,
            names,
        } => {
            let (scenario, gains) = instance(&config, &args)?;
            let (model, map) = config.milp_model(&scenario, &gains, &config.pwl_bound()?)?;
            let names: Option<HashMap<String, String>> = match names {
                Some(p) => Some(parse_name_map(&read(&p)?)?),
                None => None,
            };
            let values = import_solution(&read(&solution)?, &model, names.as_ref())?;
            let (viol, row) = model.max_violation(&values);
            println!("model objective: {:.6}", model.objective_value(&values));
            println!("max row violation: {viol:.3e}{}", row.map(|r| format!(" ({r})")).unwrap_or_default());
            let sol = extract_solution(&values, &map, &scenario, &gains)?;
            print_solution(&scenario, &gains, &sol);
        }
        Command::Pwl {
            epsilon,
            gamma_min_db,
            gamma_max_db,
        } => {
            let to_lin = |db: f64| 10f64.powf(db / 10.0);
            let bound = build_bound(to_lin(gamma_min_db), to_lin(gamma_max_db), epsilon)?;
            print!("{}", bound.to_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
