//! Scenario → circuit → trace → read-outs, shared by every subcommand.

use std::path::Path;

use ctd_core::circuits::{build_braitenberg_lr, build_ctd, build_pdd, pdd_units_for, CtdConfig};
use ctd_core::decode::{
    classify_direction_pooled, coincidence_direction, detect, detect_coincidence,
    detect_seizures, trace_pattern, DetectionEvent, Direction, SeizureReport,
};
use ctd_core::engine::{
    run, CircuitTopology, SimTrace, SpikeTrain, UnitId, UnitKind, AGGREGATE_TOLERANCE,
};
use ctd_core::scenario::{encode, Scenario};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::params::ParamsFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircuitKind {
    Ctd,
    PddOnly,
    BraitenbergLr,
}

impl CircuitKind {
    pub fn name(self) -> &'static str {
        match self {
            CircuitKind::Ctd => "ctd",
            CircuitKind::PddOnly => "pdd-only",
            CircuitKind::BraitenbergLr => "braitenberg-lr",
        }
    }
}

pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let scenario: Scenario = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    scenario
        .validate()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(scenario)
}

/// Everything a circuit needs besides the scenario.
#[derive(Debug, Clone)]
pub struct CircuitOptions {
    pub params: ParamsFile,
    pub branch_delay: u32,
    /// Drops PDD and CMD inhibition (the seizure ablation).
    pub ablate_inhibition: bool,
}

pub fn build(
    kind: CircuitKind,
    scenario: &Scenario,
    opts: &CircuitOptions,
) -> CliResult<CircuitTopology> {
    let sensors = scenario.layout.len();
    let topo = match kind {
        CircuitKind::Ctd => {
            let mut config = CtdConfig {
                num_sensors: sensors,
                cmd: opts.params.cmd,
                cmd_dynamics: opts.params.dynamics(),
                ..CtdConfig::default()
            };
            if opts.ablate_inhibition {
                config = config.without_inhibition();
            }
            build_ctd(&config)
        }
        CircuitKind::PddOnly => pdd_units_for(sensors).and_then(build_pdd),
        CircuitKind::BraitenbergLr => build_braitenberg_lr(sensors, opts.branch_delay),
    };
    topo.map_err(CliError::input)
}

pub struct Run {
    pub topology: CircuitTopology,
    pub inputs: Vec<SpikeTrain>,
    pub trace: SimTrace,
}

pub fn simulate(kind: CircuitKind, scenario: &Scenario, opts: &CircuitOptions) -> CliResult<Run> {
    let topology = build(kind, scenario, opts)?;
    let inputs = encode(scenario).map_err(CliError::input)?;
    let trace = run(&topology, &inputs, scenario.horizon(), scenario.seed)
        .map_err(|e| CliError::Invariant(e.to_string()))?;
    check_invariants(&topology, &trace, !opts.ablate_inhibition)?;
    Ok(Run {
        topology,
        inputs,
        trace,
    })
}

/// Post-run checks: the aggregate potential matches the per-neuron sum and,
/// when inhibition is wired, no unit ever fires two members in one step.
pub fn check_invariants(
    topology: &CircuitTopology,
    trace: &SimTrace,
    exclusive_units: bool,
) -> CliResult<()> {
    for frame in &trace.frames {
        let sum: f64 = frame.potentials.values().sum();
        if (sum - frame.aggregate_potential).abs() > AGGREGATE_TOLERANCE {
            return Err(CliError::Invariant(format!(
                "step {}: aggregate potential {} differs from the sum {sum}",
                frame.t, frame.aggregate_potential
            )));
        }
        if !exclusive_units {
            continue;
        }
        for unit in &topology.atomic_units {
            let n = unit.members.iter().filter(|&&m| frame.has_fired(m)).count();
            if n > 1 {
                return Err(CliError::Invariant(format!(
                    "step {}: {n} members of {:?} unit {} fired together",
                    frame.t, unit.kind, unit.id
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitDetections {
    pub pdd_unit: Option<UnitId>,
    pub cmd_unit: Option<UnitId>,
    pub direction: Direction,
    pub confidence: f64,
    pub events: Vec<DetectionEvent>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Detections {
    pub circuit: CircuitKind,
    pub direction: Direction,
    pub confidence: f64,
    pub proximity_window: usize,
    pub units: Vec<UnitDetections>,
    pub seizure: SeizureReport,
}

pub fn detections(
    kind: CircuitKind,
    run: &Run,
    proximity_window: usize,
    seizure_threshold: f64,
    seizure_window: usize,
) -> CliResult<Detections> {
    let topo = &run.topology;
    let trace = &run.trace;
    let seizure =
        detect_seizures(trace, topo, seizure_threshold, seizure_window).map_err(CliError::input)?;
    let (direction, confidence, units) = match kind {
        CircuitKind::BraitenbergLr => {
            let events = detect_coincidence(trace, topo, proximity_window)
                .map_err(CliError::input)?;
            let direction = coincidence_direction(trace, topo);
            let confidence = if direction == Direction::None { 0.0 } else { 1.0 };
            let unit = UnitDetections {
                pdd_unit: None,
                cmd_unit: None,
                direction,
                confidence,
                events,
            };
            (direction, confidence, vec![unit])
        }
        CircuitKind::Ctd | CircuitKind::PddOnly => {
            let mut units = Vec::new();
            let mut patterns = Vec::new();
            for pdd in topo.units_of_kind(UnitKind::Pdd) {
                let cmd = topo
                    .units_of_kind(UnitKind::Cmd)
                    .find(|c| c.source_unit == Some(pdd.id))
                    .map(|c| c.id);
                let pattern = trace_pattern(trace, topo, pdd.id).map_err(CliError::input)?;
                let (direction, confidence) =
                    classify_direction_pooled(std::iter::once(&pattern));
                let events =
                    detect(trace, topo, pdd.id, cmd, proximity_window).map_err(CliError::input)?;
                units.push(UnitDetections {
                    pdd_unit: Some(pdd.id),
                    cmd_unit: cmd,
                    direction,
                    confidence,
                    events,
                });
                patterns.push(pattern);
            }
            let (direction, confidence) = classify_direction_pooled(&patterns);
            (direction, confidence, units)
        }
    };
    Ok(Detections {
        circuit: kind,
        direction,
        confidence,
        proximity_window,
        units,
        seizure,
    })
}
