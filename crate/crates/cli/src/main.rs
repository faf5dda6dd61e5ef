use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use muskat::config::{ExperimentKind, Method, Mode, RunConfig};
use muskat::evolution::{
    picard_solve, scaling_experiment, solve, stability_experiment, EvolutionError, Model, Trajectory,
};
use muskat::spectral::{Field, PeriodicGrid};
use muskat::verify::{suites, write_report, VerifyOptions};

const OK: u8 = 0;
const INVALID: u8 = 1;
const ABORTED: u8 = 2;

#[derive(Parser)]
#[command(name = "muskat", version, about = "Elastic-interface Muskat simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Suppress progress output
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a verification suite and write report.csv
    Verify {
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

struct Failure(u8, String);

impl<E: std::fmt::Display> From<(u8, E)> for Failure {
    fn from((code, e): (u8, E)) -> Self {
        Failure(code, e.to_string())
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(INVALID, format!("{}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(|e| Failure(INVALID, format!("{}:{e}", path.display())))
}

fn manifest(cfg: &RunConfig, body: serde_json::Value) -> serde_json::Value {
    let mut m = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
    });
    if let (Some(obj), serde_json::Value::Object(extra)) = (m.as_object_mut(), body) {
        obj.extend(extra);
    }
    m
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure(INVALID, format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let w = BufWriter::new(File::create(path).map_err(io)?);
    serde_json::to_writer_pretty(w, value).map_err(|e| Failure(INVALID, e.to_string()))
}

fn direction(grid: &PeriodicGrid, modes: &[Mode]) -> Field {
    let k1 = grid.k_min();
    grid.sample(|x| modes.iter().map(|m| m.amplitude * (m.k as f64 * k1 * x + m.phase).cos()).sum())
}

fn trajectory_summary(t: &Trajectory) -> serde_json::Value {
    json!({
        "steps": t.times.len() - 1,
        "final_time": t.times.last(),
        "abort": t.abort,
        "stats": t.stats,
        "z_norms": t.sobolev.iter().zip(t.z_norms()).map(|(s, z)| json!({"s": s, "z": z})).collect::<Vec<_>>(),
        "max_mean_drift": t.max_mean_drift(),
    })
}

fn simulate(cfg: RunConfig, out: &Path, quiet: bool) -> Result<u8, Failure> {
    let eta0 = cfg.initial_eta().map_err(|e| Failure(INVALID, e.to_string()))?;
    let model = Model {
        params: cfg.params.clone(),
        dn: cfg.solver.dn.clone(),
        pressure: cfg.solver.pressure.clone(),
        linear_only: false,
    };
    let t_final = cfg.solver.t_final;
    let io = |e: std::io::Error| Failure(INVALID, format!("{}: {e}", out.display()));
    match cfg.experiment.name {
        ExperimentKind::Trajectory => match cfg.solver.method {
            Method::Etd => {
                let traj = solve(&model, &eta0, t_final, &cfg.solver.evolution).map_err(|e| (INVALID, e))?;
                let m = manifest(
                    &cfg,
                    json!({"method": "etd", "scheme": cfg.solver.evolution.scheme, "trajectory": trajectory_summary(&traj)}),
                );
                traj.write_dir(out, &m, cfg.output.stride).map_err(io)?;
                if !quiet {
                    println!("{} steps to t = {}", traj.times.len() - 1, traj.times.last().unwrap_or(&0.0));
                }
                match &traj.abort {
                    None => Ok(OK),
                    Some(reason) => {
                        eprintln!("aborted: {reason:?}");
                        Ok(ABORTED)
                    }
                }
            }
            Method::Picard => match picard_solve(&model, &eta0, t_final, &cfg.solver.picard) {
                Ok(p) => {
                    let m = manifest(
                        &cfg,
                        json!({
                            "method": "picard",
                            "picard_iterations": p.iterations,
                            "picard_distances": p.distances,
                            "trajectory": trajectory_summary(&p.trajectory),
                        }),
                    );
                    p.trajectory.write_dir(out, &m, cfg.output.stride).map_err(io)?;
                    if !quiet {
                        println!("Picard converged in {} iterations", p.iterations);
                    }
                    Ok(OK)
                }
                Err(e @ EvolutionError::NotContracting { .. }) => {
                    let m = manifest(&cfg, json!({"method": "picard", "abort": e.to_string()}));
                    write_json(&out.join("manifest.json"), &m)?;
                    eprintln!("aborted: {e}");
                    Ok(ABORTED)
                }
                Err(e) => Err(Failure(INVALID, e.to_string())),
            },
        },
        ExperimentKind::Stability => {
            let d = direction(eta0.grid(), &cfg.experiment.direction);
            let report = stability_experiment(
                &model,
                &eta0,
                &d,
                &cfg.experiment.magnitudes,
                t_final,
                cfg.experiment.s,
                &cfg.solver.evolution,
            )
            .map_err(|e| (INVALID, e))?;
            write_json(&out.join("manifest.json"), &manifest(&cfg, json!({"stability": report})))?;
            if !quiet {
                for r in &report.rows {
                    println!("magnitude {:e}: ratio {:?}", r.magnitude, r.ratio);
                }
            }
            Ok(OK)
        }
        ExperimentKind::Scaling => {
            let report = scaling_experiment(&model, &eta0, cfg.experiment.lambda, t_final, &cfg.solver.evolution)
                .map_err(|e| (INVALID, e))?;
            write_json(&out.join("manifest.json"), &manifest(&cfg, json!({"scaling": report})))?;
            if !quiet {
                println!("lambda {}: defect {:e}", report.lambda, report.defect);
            }
            Ok(OK)
        }
    }
}

fn verify(suite: &str, cfg: &RunConfig, out: &Path, quiet: bool) -> Result<u8, Failure> {
    let registry = suites();
    let runner = registry.get(suite).map_err(|e| (INVALID, e))?;
    let rows = runner.run(&VerifyOptions { seed: cfg.output.seed });
    let path = out.join("report.csv");
    let io = |e: std::io::Error| Failure(INVALID, format!("{}: {e}", path.display()));
    fs::create_dir_all(out).map_err(io)?;
    write_report(BufWriter::new(File::create(&path).map_err(io)?), &rows).map_err(io)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    if !quiet {
        for r in &rows {
            println!("{} {}", if r.pass { "pass" } else { "FAIL" }, r.check);
        }
        println!("{suite}: {} of {} checks passed", rows.len() - failed, rows.len());
    }
    Ok(if failed == 0 { OK } else { INVALID })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Simulate { config } => {
            let cfg = load(&config)?;
            let out = cli.output.unwrap_or_else(|| cfg.output.directory.clone());
            simulate(cfg, &out, cli.quiet)
        }
        Command::Verify { suite, config } => {
            let cfg = match config {
                Some(p) => load(&p)?,
                None => RunConfig::default(),
            };
            let out = cli.output.unwrap_or_else(|| cfg.output.directory.join(&suite));
            verify(&suite, &cfg, &out, cli.quiet)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { INVALID } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
