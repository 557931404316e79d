use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thinspec_cli::config::{parse_axis, CheckName, RunKind, Scenario, SweepSpec};
use thinspec_cli::run::{run_scenario, verdict_str, write_diagnostics};
use thinspec_cli::{parse_scenario, parse_sweep, run_sweep, CliError, CliResult};

#[derive(Parser)]
#[command(name = "thinspec", version, about = "Thin-spectrum dynamics of the Lieb-Mattis model under a ramped staggered field")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario (or sweep) configuration, JSON
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps
    #[arg(long, global = true, env = "THINSPEC_WORKERS")]
    workers: Option<usize>,

    /// Override the run's primary tolerance (check verdict, exact rtol or ED tol)
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Static thin-spectrum quantities along the ramp
    Static,
    /// Adiabatic-impulse defect density and recursion fidelities
    Kz,
    /// Exact Gaussian evolution and comb detection
    Exact,
    /// Exact diagonalization of the finite model
    Ed,
    /// Dataset for one of the four figures
    Figure { number: u8 },
    /// Parameter sweep; axes as name=v1,v2 or name=geom:start:stop:count
    Sweep {
        #[arg(long = "axis")]
        axes: Vec<String>,
    },
    /// Oracle cross-check by name
    Check { name: String },
}

fn read_config(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// The scenario for a single-run subcommand. A config file may refine the
/// run options, but its run kind must match the subcommand.
fn scenario_for(cli: &Cli, kind: RunKind) -> CliResult<Scenario> {
    let mut s = match &cli.config {
        Some(path) => {
            let mut v: serde_json::Value = serde_json::from_str(&read_config(path)?)?;
            if let Some(obj) = v.as_object_mut() {
                obj.entry("run").or_insert(serde_json::to_value(kind)?);
            }
            parse_scenario(&v.to_string())?
        }
        None => Scenario::new(kind),
    };
    if std::mem::discriminant(&s.run) != std::mem::discriminant(&kind) {
        return Err(CliError::Config(format!(
            "config describes a '{}' run, not '{}'",
            s.run.label(),
            kind.label()
        )));
    }
    if let (RunKind::Check { name: a }, RunKind::Check { name: b }) = (s.run, kind) {
        if a != b {
            return Err(CliError::Config(format!("config names check {}, command asks for {}", a.as_str(), b.as_str())));
        }
    }
    if let (RunKind::Figure { number: a }, RunKind::Figure { number: b }) = (s.run, kind) {
        if a != b {
            return Err(CliError::Config(format!("config names figure {a}, command asks for {b}")));
        }
    }
    if let Some(tol) = cli.tol {
        let t = &mut s.tolerances;
        match s.run {
            RunKind::Check { name } => match name {
                CheckName::ExactVsGrid => t.grid_l2 = tol,
                CheckName::KzVsExact => t.kz_vs_exact = tol,
                CheckName::EdVsContinuum => t.ed_vs_continuum = tol,
                CheckName::WignerEckartVsClebschGordan => t.wigner_eckart = tol,
            },
            RunKind::Ed { .. } => t.ed_tol = tol,
            _ => t.exact_rtol = tol,
        }
    }
    s.validate()?;
    Ok(s)
}

fn out_dir(cli: &Cli, s: Option<&Scenario>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| s.and_then(|s| s.output.clone()))
        .unwrap_or_else(|| PathBuf::from("thinspec_out"))
}

fn sweep_spec(cli: &Cli, axes: &[String]) -> CliResult<SweepSpec> {
    let mut spec = match &cli.config {
        Some(path) => parse_sweep(&read_config(path)?)?,
        None => SweepSpec {
            axes: Vec::new(),
            template: Scenario::new(RunKind::Kz { k_max: 4 }),
            workers: None,
            max_points: 10_000,
        },
    };
    if !axes.is_empty() {
        spec.axes = axes.iter().map(|a| parse_axis(a)).collect::<CliResult<_>>()?;
    }
    spec.validate()?;
    Ok(spec)
}

fn execute(cli: &Cli) -> Result<ExitCode, (Option<Box<Scenario>>, CliError)> {
    let kind = match &cli.command {
        Command::Static => RunKind::Static,
        Command::Kz => RunKind::Kz { k_max: 4 },
        Command::Exact => RunKind::Exact {
            k_max: 4,
            schedule: Default::default(),
        },
        Command::Ed => RunKind::Ed {
            schedule: Default::default(),
        },
        Command::Figure { number } => RunKind::Figure { number: *number },
        Command::Check { name } => RunKind::Check {
            name: name.parse().map_err(|e| (None, e))?,
        },
        Command::Sweep { axes } => {
            let spec = sweep_spec(cli, axes).map_err(|e| (None, e))?;
            let workers = cli
                .workers
                .or(spec.workers)
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let dir = out_dir(cli, Some(&spec.template));
            let report = run_sweep(&spec, workers, &dir).map_err(|e| (Some(Box::new(spec.template.clone())), e))?;
            println!(
                "sweep: {} points, {} failed -> {}",
                report.total,
                report.failed.len(),
                dir.display()
            );
            return Ok(ExitCode::SUCCESS);
        }
    };
    let s = scenario_for(cli, kind).map_err(|e| (None, e))?;
    let dir = out_dir(cli, Some(&s));
    let out = run_scenario(&s, &dir).map_err(|e| (Some(Box::new(s.clone())), e))?;
    match out.verdict {
        Some(v) => {
            let metric = out.results.get("metric").and_then(|m| m.as_f64()).unwrap_or(f64::NAN);
            let tol = out.results.get("tolerance").and_then(|m| m.as_f64()).unwrap_or(f64::NAN);
            println!("{}: {} (metric {metric:.3e}, tolerance {tol:.1e})", s.run.label(), verdict_str(v));
            Ok(if v { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        None => {
            println!("{}: done -> {}", s.run.label(), dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err((scenario, err)) => {
            eprintln!("error: {err}");
            if let CliError::Numerical(_) = err {
                let scenario = scenario.as_deref();
                let dir = out_dir(&cli, scenario);
                if let Err(e) = write_diagnostics(scenario, &err, &dir) {
                    eprintln!("error: could not write diagnostics: {e}");
                }
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
