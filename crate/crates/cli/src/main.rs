mod error;
mod output;
mod params;
mod pipeline;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ctd_core::decode::{Direction, SeizureReport};
use ctd_core::scenario::presets;
use ctd_core::tuning::{calibrate, verify_bands, BandSpec};
use serde::Serialize;

use error::{CliError, CliResult};
use params::{ParamsFile, ParamsSource, PROXIMITY_WINDOW};
use pipeline::{CircuitKind, CircuitOptions};

#[derive(Parser)]
#[command(name = "ctd", version, about = "Spiking curved-trajectory detector simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    /// trace.jsonl, spikes.csv and potential.csv
    Trace,
    /// raster.svg
    Raster,
    /// detections.json
    Report,
}

#[derive(clap::Args)]
struct ReadoutArgs {
    #[arg(long, default_value_t = 0.5)]
    seizure_threshold: f64,
    #[arg(long, default_value_t = 50)]
    seizure_window: usize,
    #[arg(long, default_value_t = PROXIMITY_WINDOW)]
    proximity_window: usize,
}

#[derive(clap::Args)]
struct CircuitArgs {
    /// `default`, `tune` (calibrate for the scenario's layout) or a
    /// cmd_params.json path.
    #[arg(long, default_value = "tune")]
    params: ParamsSource,
    /// Delay on the left branch of the baseline coincidence detectors, in steps.
    #[arg(long, default_value_t = presets::sweep_latency_steps())]
    branch_delay: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Run one circuit on a scenario and write its artifacts.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "ctd")]
        circuit: CircuitKind,
        #[command(flatten)]
        circuit_args: CircuitArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "trace,report")]
        emit: Vec<Emit>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        readout: ReadoutArgs,
    },
    /// Calibrate CMD weights for rate bands and verify them by simulation.
    Tune {
        #[arg(long)]
        f1: f64,
        #[arg(long)]
        f2: f64,
        #[arg(long, default_value_t = 0.1)]
        tolerance: f64,
        /// Lowest rate at which the F neuron must respond.
        #[arg(long, default_value_t = 10.0)]
        floor: f64,
        #[arg(long, default_value_t = 0.9)]
        leak: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the baseline, the CTD and the CTD without inhibition side by side.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        circuit_args: CircuitArgs,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        readout: ReadoutArgs,
    },
    /// Write a built-in scenario as JSON.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(presets::NAMES))]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate {
            scenario,
            circuit,
            circuit_args,
            out,
            emit,
            seed,
            readout,
        } => simulate(&scenario, circuit, &circuit_args, &out, &emit, seed, &readout),
        Command::Tune {
            f1,
            f2,
            tolerance,
            floor,
            leak,
            dt,
            out,
        } => tune(BandSpec::new(f1, f2, tolerance).with_floor(floor), leak, dt, &out),
        Command::Compare {
            scenario,
            circuit_args,
            out,
            readout,
        } => compare(&scenario, &circuit_args, &out, &readout),
        Command::Preset { name, out } => {
            let scenario = presets::by_name(&name).expect("validated by clap");
            output::write_json(&out, &scenario)
        }
    }
}

fn options(args: &CircuitArgs, scenario: &ctd_core::Scenario) -> CliResult<CircuitOptions> {
    Ok(CircuitOptions {
        params: params::resolve(&args.params, scenario)?,
        branch_delay: args.branch_delay,
        ablate_inhibition: false,
    })
}

fn simulate(
    scenario_path: &Path,
    circuit: CircuitKind,
    circuit_args: &CircuitArgs,
    out: &Path,
    emit: &[Emit],
    seed: Option<u64>,
    readout: &ReadoutArgs,
) -> CliResult<()> {
    let mut scenario = pipeline::load_scenario(scenario_path)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let opts = options(circuit_args, &scenario)?;
    let run = pipeline::simulate(circuit, &scenario, &opts)?;
    let report = pipeline::detections(
        circuit,
        &run,
        readout.proximity_window,
        readout.seizure_threshold,
        readout.seizure_window,
    )?;
    output::ensure_dir(out)?;
    if emit.contains(&Emit::Trace) {
        output::write_trace_jsonl(&out.join("trace.jsonl"), &run.trace)?;
        output::write_spikes_csv(&out.join("spikes.csv"), &run.inputs, run.trace.horizon)?;
        output::write_potential_csv(&out.join("potential.csv"), &run.trace)?;
    }
    if emit.contains(&Emit::Raster) {
        output::write_raster(&out.join("raster.svg"), &run.inputs, &run.trace)?;
    }
    if emit.contains(&Emit::Report) {
        output::write_json(&out.join("detections.json"), &report)?;
    }
    println!(
        "{}: direction {} (confidence {:.2}), {} seizure event(s), peak activity {:.3}",
        circuit.name(),
        direction_label(report.direction),
        report.confidence,
        report.seizure.events.len(),
        report.seizure.peak_activity
    );
    Ok(())
}

fn tune(bands: BandSpec, leak: f64, dt: f64, out: &Path) -> CliResult<()> {
    let cmd = calibrate(&bands, leak, dt).map_err(|e| CliError::Infeasible(e.to_string()))?;
    let report = verify_bands(&cmd, &bands, leak, dt);
    let file = ParamsFile {
        cmd,
        leak,
        dt: Some(dt),
        bands: Some(bands),
        measured_f1: report.measured_f1,
        measured_f2: report.measured_f2,
        pass: Some(report.pass),
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        output::ensure_dir(dir)?;
    }
    output::write_json(out, &file)?;
    let show = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:.1} Hz"));
    println!(
        "measured boundaries: F|M {}, M|N {}; {}",
        show(report.measured_f1),
        show(report.measured_f2),
        if report.pass { "pass" } else { "FAIL" }
    );
    if !report.pass {
        return Err(CliError::Infeasible(
            "simulated boundaries miss the requested bands".into(),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareRow {
    circuit: &'static str,
    direction: Direction,
    confidence: f64,
    seizure: SeizureReport,
}

fn compare(
    scenario_path: &Path,
    circuit_args: &CircuitArgs,
    out: &Path,
    readout: &ReadoutArgs,
) -> CliResult<()> {
    let scenario = pipeline::load_scenario(scenario_path)?;
    let opts = options(circuit_args, &scenario)?;
    let ablated = CircuitOptions {
        ablate_inhibition: true,
        ..opts.clone()
    };
    let variants = [
        ("braitenberg-lr", CircuitKind::BraitenbergLr, &opts),
        ("ctd", CircuitKind::Ctd, &opts),
        ("ctd-no-inhibition", CircuitKind::Ctd, &ablated),
    ];
    let mut rows = Vec::new();
    for (label, kind, o) in variants {
        let run = pipeline::simulate(kind, &scenario, o)?;
        let d = pipeline::detections(
            kind,
            &run,
            readout.proximity_window,
            readout.seizure_threshold,
            readout.seizure_window,
        )?;
        rows.push(CompareRow {
            circuit: label,
            direction: d.direction,
            confidence: d.confidence,
            seizure: d.seizure,
        });
    }
    output::ensure_dir(out)?;
    output::write_json(&out.join("compare.json"), &rows)?;
    println!(
        "{:<20} {:>9} {:>10} {:>8} {:>13}",
        "circuit", "direction", "confidence", "seizures", "peak activity"
    );
    for r in &rows {
        println!(
            "{:<20} {:>9} {:>10.2} {:>8} {:>13.3}",
            r.circuit,
            direction_label(r.direction),
            r.confidence,
            r.seizure.events.len(),
            r.seizure.peak_activity
        );
    }
    Ok(())
}

fn direction_label(d: Direction) -> &'static str {
    match d {
        Direction::LeftToRight => "LR",
        Direction::RightToLeft => "RL",
        Direction::None => "none",
    }
}
