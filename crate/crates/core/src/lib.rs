//! Spiking circuits that detect the direction and proximity of objects
//! moving past a stationary vehicle.
//!
//! The pipeline is: [`scenario`] turns object trajectories into per-sensor
//! spike trains, [`circuits`] builds detector topologies, [`engine`]
//! simulates them step by step, and [`decode`] reads direction, proximity
//! state, aggregate potential and runaway activity out of the trace.
//! [`tuning`] calibrates the proximity stage against rate bands.

pub mod batch;
pub mod circuits;
pub mod decode;
pub mod engine;
pub mod par;
pub mod scenario;
pub mod tuning;

pub use circuits::{
    build_braitenberg_lr, build_cmd_unit, build_ctd, build_pdd, CircuitError, CmdParams,
    CtdConfig, Dynamics, PerState,
};
pub use decode::{
    classify_direction, decode_proximity, detect_seizures, trace_pattern, ActivationPattern,
    DecodeError, DetectionEvent, Direction, Proximity, SeizureReport,
};
pub use engine::{
    run, validate, CircuitTopology, EngineError, NeuronSpec, SimTrace, SpikeTrain, Synapse,
    TraceFrame, Violation,
};
pub use scenario::{encode, sample_path, spike_rate, Encoding, Scenario, ScenarioError, SensorLayout, Trajectory};
pub use tuning::{
    calibrate, calibrate_for_ranges, onset_rate, verify_bands, BandReport, BandSpec, RangeBands,
    TuningError,
};
