//! Scenario runner: executes a preset or config file in sim or live mode,
//! persists logs/charts/report, and prints a summary table.

use clap::{Args, Parser, Subcommand};
use floodbed_core::ids::TUNED_GAMMA;
use floodbed_core::metrics::{sweep_best, RunReport};
use floodbed_core::runner;
use floodbed_core::scenario::{preset, Scenario, TransportMode, PRESET_NAMES};
use floodbed_core::RunError;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_GENERIC: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_TRANSPORT: u8 = 3;
const EXIT_CONTRACT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "floodbed",
    about = "Desk-scale UDP flood test-bed: traffic, queueing, anomaly detection, mitigation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write logs, charts, and the report.
    Run(RunArgs),
    /// Rerun a sim scenario across a threshold grid and tabulate.
    SweepGamma(SweepArgs),
    /// List the built-in scenario presets.
    ListScenarios,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Built-in preset name (see list-scenarios).
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// TOML scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run seed; fully determines a sim-mode run together with the config.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Transport override: sim or live.
    #[arg(long)]
    mode: Option<String>,
    /// UDP port override for live mode.
    #[arg(long)]
    port: Option<u16>,
    /// Detection threshold; a number or the named preset "tuned" (0.3787).
    #[arg(long)]
    gamma: Option<String>,
    /// Mitigation override: on or off.
    #[arg(long)]
    mitigation: Option<String>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated thresholds; default 0.0,0.05,...,1.0.
    #[arg(long)]
    grid: Option<String>,
}

fn load_scenario(args: &ScenarioArgs) -> Result<Scenario, RunError> {
    let mut scenario = match (&args.scenario, &args.config) {
        (Some(name), None) => preset(name).ok_or_else(|| {
            RunError::config(
                "--scenario",
                format!("unknown preset {name:?}; try: {}", PRESET_NAMES.join(", ")),
            )
        })?,
        (None, Some(path)) => Scenario::from_path(path)?,
        (None, None) => {
            return Err(RunError::config(
                "--scenario/--config",
                "one of --scenario or --config is required",
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    if let Some(mode) = &args.mode {
        scenario.transport.mode = match mode.as_str() {
            "sim" => TransportMode::Sim,
            "live" => TransportMode::Live,
            other => {
                return Err(RunError::config(
                    "--mode",
                    format!("expected sim|live, got {other}"),
                ))
            }
        };
    }
    if let Some(port) = args.port {
        scenario.transport.port = port;
    }
    if let Some(gamma) = &args.gamma {
        scenario.gamma = match gamma.as_str() {
            "tuned" => TUNED_GAMMA,
            num => num
                .parse()
                .map_err(|_| RunError::config("--gamma", "expected a number or \"tuned\""))?,
        };
    }
    if let Some(m) = &args.mitigation {
        scenario.mitigation.enabled = match m.as_str() {
            "on" => true,
            "off" => false,
            other => {
                return Err(RunError::config(
                    "--mitigation",
                    format!("expected on|off, got {other}"),
                ))
            }
        };
    }
    scenario.validate()?;
    Ok(scenario)
}

fn print_summary(report: &RunReport) {
    let pct = |v: Option<f64>| v.map_or("   n/a".to_string(), |x| format!("{:6.2}%", x * 100.0));
    println!("scenario          : {}", report.scenario);
    println!("gamma             : {}", report.gamma);
    println!("complete          : {}", report.complete);
    println!("batches decided   : {}", report.batches);
    println!(
        "confusion         : tp {} fp {} tn {} fn {}",
        report.confusion.tp, report.confusion.fp, report.confusion.tn, report.confusion.fn_
    );
    println!("accuracy          : {}", pct(report.confusion.accuracy));
    println!("tpr               : {}", pct(report.confusion.tpr));
    println!("tnr               : {}", pct(report.confusion.tnr));
    println!(
        "peak queue        : {} packets (sampled {})",
        report.peak_queue, report.peak_queue_sampled
    );
    match report.drain_time_s {
        Some(d) => println!("drain time        : {d:.1} s"),
        None => println!("drain time        : n/a"),
    }
    println!(
        "attack intervals  : {}",
        report
            .attack_intervals_s
            .iter()
            .map(|iv| format!("[{:.1}, {:.1})", iv[0], iv[1]))
            .collect::<Vec<_>>()
            .join(" ")
    );
    println!(
        "activations       : {} [{}]",
        report.activations_s.len(),
        report
            .activations_s
            .iter()
            .map(|t| format!("{t:.3}s"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("benign collateral : {} packets", report.benign_collateral);
    println!("flood discarded   : {} packets", report.flood_discarded);
    println!(
        "packets           : emitted {} delivered {} window-dropped {} undelivered {}",
        report.stats.emitted,
        report.stats.transport_delivered,
        report.stats.transport_dropped,
        report.stats.undelivered
    );
    if let Some(t) = report.stats.trained_at_s {
        println!(
            "detector          : trained at {t:.1} s, residual {:.5}",
            report.training_residual.unwrap_or(f64::NAN)
        );
    } else {
        println!("detector          : never trained (trace too short)");
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), RunError> {
    let scenario = load_scenario(&args.scenario)?;
    let (_artifacts, report) =
        runner::run_and_write(&scenario, args.scenario.seed, args.scenario.out.as_deref())?;
    print_summary(&report);
    if let Some(out) = &args.scenario.out {
        println!("artifacts         : {}", out.display());
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), RunError> {
    let scenario = load_scenario(&args.scenario)?;
    let grid: Vec<f64> = match &args.grid {
        None => runner::default_gamma_grid(),
        Some(text) => text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| RunError::config("--grid", format!("bad threshold {s:?}")))
            })
            .collect::<Result<_, _>>()?,
    };
    let rows = runner::sweep_gamma(&scenario, args.scenario.seed, &grid)?;
    let opt = |v: Option<f64>| v.map_or("    n/a".to_string(), |x| format!("{x:7.4}"));
    println!("gamma    tp    fp    tn    fn  accuracy     tpr     tnr");
    for r in &rows {
        println!(
            "{:5.2} {:5} {:5} {:5} {:5}   {} {} {}",
            r.gamma,
            r.confusion.tp,
            r.confusion.fp,
            r.confusion.tn,
            r.confusion.fn_,
            opt(r.confusion.accuracy),
            opt(r.confusion.tpr),
            opt(r.confusion.tnr)
        );
    }
    match sweep_best(&rows) {
        Some(best) => println!("max-accuracy gamma: {best}"),
        None => println!("max-accuracy gamma: n/a (no defined accuracy)"),
    }
    if let Some(out) = &args.scenario.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("gamma_sweep.csv"), runner::sweep_to_csv(&rows))?;
        println!("table written to {}", out.join("gamma_sweep.csv").display());
    }
    Ok(())
}

fn exit_code_for(err: &RunError) -> u8 {
    match err {
        RunError::Config { .. } => EXIT_CONFIG,
        RunError::Transport(_) => EXIT_TRANSPORT,
        RunError::Contract(_) | RunError::Evaluation(_) => EXIT_CONTRACT,
        RunError::Io(_) => EXIT_GENERIC,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::SweepGamma(args) => cmd_sweep(args),
        Command::ListScenarios => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
