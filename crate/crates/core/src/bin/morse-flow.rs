use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use morse_flow::acceptance::{run_all, DEFAULT_SEED};
use morse_flow::config::{FlowKind, RawConfig, RunConfig};
use morse_flow::flow::{check_weak_solution_bounds, run_flow, Trajectory, Variant};
use morse_flow::geometry::write_snapshot;
use morse_flow::Error;

const EXIT_CERTIFICATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "morse-flow", version, about = "Discrete Morse flow for the porous medium equation and Ricci flow on the football")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory.
    #[arg(long, global = true, default_value = "morse-flow-out")]
    out: PathBuf,
    /// Write a field snapshot every K steps (overrides `output.snapshot_every`).
    #[arg(long, global = true, value_name = "K")]
    snapshot_every: Option<usize>,
    /// Seed for random initial data and the randomized validation checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Accept β = 1 (the heat equation) for `pme`.
    #[arg(long, global = true)]
    allow_heat: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Porous medium equation on a rectangle.
    Pme { config: Option<PathBuf> },
    /// Normalized Ricci flow over symmetric mean-zero fields.
    RicciSym { config: Option<PathBuf> },
    /// Ricci flow with a fixed relaxation parameter.
    RicciReg { config: Option<PathBuf> },
    /// Un-normalized Ricci flow.
    RicciUnnorm { config: Option<PathBuf> },
    /// Run the acceptance suite.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, path) = match &cli.command {
        Command::Pme { config } => (FlowKind::Pme, config),
        Command::RicciSym { config } => (FlowKind::RicciSym, config),
        Command::RicciReg { config } => (FlowKind::RicciReg, config),
        Command::RicciUnnorm { config } => (FlowKind::RicciUnnorm, config),
        Command::Validate => return validate(&cli),
    };
    let config = match load_config(&cli, kind, path.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&cli, kind, &config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli, kind: FlowKind, path: Option<&Path>) -> morse_flow::Result<RunConfig> {
    let mut raw = match path {
        Some(p) => RawConfig::from_file(p).map_err(|e| match e {
            Error::Io(io) => Error::Parse(format!("{}: {io}", p.display())),
            other => other,
        })?,
        None => RawConfig::default(),
    };
    if let Some(seed) = cli.seed {
        raw.set("init.seed", &seed.to_string())?;
    }
    if let Some(k) = cli.snapshot_every {
        raw.set("output.snapshot_every", &k.to_string())?;
    }
    RunConfig::resolve(kind, &raw, cli.allow_heat)
}

fn run(cli: &Cli, kind: FlowKind, config: &RunConfig) -> morse_flow::Result<ExitCode> {
    fs::create_dir_all(&cli.out)?;
    let (traj, failure) = match run_flow(&config.flow) {
        Ok(t) => (t, None),
        Err(Error::NotConverged { step, diagnostics, partial }) => {
            (*partial, Some(format!("step {step} did not converge: {diagnostics}")))
        }
        Err(e @ (Error::InvalidParameter { .. } | Error::NotAdmissible(_) | Error::GridMismatch { .. })) => {
            eprintln!("configuration error: {e}");
            return Ok(ExitCode::from(EXIT_CONFIG));
        }
        Err(e) => return Err(e),
    };
    write_outputs(&cli.out, config, &traj)?;

    let mut certifications = vec![("ledger".to_string(), traj.ledger_ok)];
    let mut extra = serde_json::Map::new();
    if failure.is_none() && traj.config.variant == Variant::RicciSym {
        let rep = check_weak_solution_bounds(&traj)?;
        certifications.push(("weak_solution_energy".into(), rep.energy_pass));
        certifications.push(("weak_solution_kinetic".into(), rep.kinetic_pass));
        extra.insert(
            "weak_solution".into(),
            json!({
                "initial_energy": rep.initial_energy,
                "max_energy": rep.max_energy,
                "kinetic_integral": rep.kinetic_integral,
                "kinetic_bound": rep.kinetic_bound,
                "definition_rhs": rep.definition_rhs,
                "slack": rep.slack,
            }),
        );
    }
    if let Some(m) = traj.moser_half_max() {
        extra.insert("moser_half_max".into(), json!(m));
    }
    let certified = failure.is_none() && certifications.iter().all(|(_, ok)| *ok);
    let min_margin = traj.records.iter().skip(1).map(|r| r.ledger_margin).fold(f64::INFINITY, f64::min);
    let manifest = json!({
        "command": kind.name(),
        "config": config.resolved.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
        "steps_completed": traj.records.len() - 1,
        "steps_requested": traj.config.steps,
        "ledger": {
            "ok": traj.ledger_ok,
            "slack": traj.ledger_slack,
            "min_margin": if min_margin.is_finite() { json!(min_margin) } else { json!(null) },
        },
        "certifications": certifications.iter().map(|(k, ok)| json!({"name": k, "passed": ok})).collect::<Vec<_>>(),
        "diagnostics": extra,
        "failure": failure,
        "passed": certified,
    });
    write_manifest(&cli.out, &manifest)?;

    if let Some(msg) = failure {
        eprintln!("{msg}; partial outputs in {}", cli.out.display());
        return Ok(ExitCode::from(EXIT_NOT_CONVERGED));
    }
    for (name, ok) in &certifications {
        println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
    }
    Ok(if certified { ExitCode::SUCCESS } else { ExitCode::from(EXIT_CERTIFICATION) })
}

fn write_outputs(out: &Path, config: &RunConfig, traj: &Trajectory) -> morse_flow::Result<()> {
    traj.write_trace_csv(BufWriter::new(File::create(out.join("trace.csv"))?))?;
    if config.snapshot_every > 0 {
        for r in &traj.records {
            if r.n % config.snapshot_every == 0 || r.n == traj.records.len() - 1 {
                let f = File::create(out.join(format!("field_{:06}.txt", r.n)))?;
                write_snapshot(BufWriter::new(f), &traj.grid, &r.field)?;
            }
        }
    }
    Ok(())
}

fn write_manifest(out: &Path, manifest: &serde_json::Value) -> morse_flow::Result<()> {
    let mut f = BufWriter::new(File::create(out.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut f, manifest).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(f)?;
    Ok(())
}

fn validate(cli: &Cli) -> ExitCode {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let reports = run_all(seed);
    for r in &reports {
        println!("{}", r.line());
    }
    let passed = reports.iter().all(|r| r.passed);
    let manifest = json!({
        "command": "validate",
        "seed": seed,
        "criteria": reports,
        "passed": passed,
    });
    let written = fs::create_dir_all(&cli.out).map_err(Error::from).and_then(|_| write_manifest(&cli.out, &manifest));
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CERTIFICATION)
    }
}
