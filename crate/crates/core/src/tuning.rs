//! CMD weight and threshold calibration against spike-rate bands.
//!
//! The analytic design uses the steady state of a leaky integrator driven by
//! a regular train. A neuron with weight `w`, threshold `T` and retention
//! `λ` receiving one spike every `P` steps peaks at `w / (1 − λ^P)` right
//! after each spike, so it fires for every period with `w ≥ T(1 − λ^P)`.
//! Calibration solves that condition for the weights; [`verify_bands`] then
//! checks the result by simulation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{build_pdd, pdd_units_for, CmdParams, Dynamics, PerState};
use crate::decode::{windows, Proximity};
use crate::engine::{
    run, AtomicUnit, CircuitTopology, NeuronId, NeuronSpec, Source, Synapse, UnitKind,
};
use crate::par;
use crate::scenario::{encode, encode_regular, Point, Scenario, SensorLayout, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TuningError {
    #[error("leak must lie in [0, 1): a perfect integrator has no finite onset rate")]
    NoFiniteOnset,
    #[error("weight, threshold and dt must be positive")]
    NonPositive,
    #[error("invalid bands: {0}")]
    InvalidBands(String),
    #[error("infeasible bands: {0}")]
    Infeasible(String),
}

/// Rate boundaries (spikes/s at the CMD input) between the F and M states
/// (`f1`) and the M and N states (`f2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub f1: f64,
    pub f2: f64,
    /// Relative tolerance on the measured boundaries.
    pub tolerance: f64,
    /// Lowest input rate at which the F neuron must still respond.
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_floor() -> f64 {
    10.0
}

impl BandSpec {
    pub fn new(f1: f64, f2: f64, tolerance: f64) -> Self {
        Self {
            f1,
            f2,
            tolerance,
            floor: default_floor(),
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn validate(&self) -> Result<(), TuningError> {
        let bad = |m: String| Err(TuningError::InvalidBands(m));
        if ![self.f1, self.f2, self.tolerance, self.floor]
            .iter()
            .all(|v| v.is_finite())
        {
            return bad("non-finite value".into());
        }
        if !(self.f1 > 0.0 && self.f1 < self.f2) {
            return bad(format!("need 0 < f1 < f2, got f1={} f2={}", self.f1, self.f2));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 0.5) {
            return bad(format!("tolerance {} outside (0, 0.5)", self.tolerance));
        }
        if !(self.floor > 0.0 && self.floor < self.f1) {
            return bad(format!("floor {} must lie in (0, f1)", self.floor));
        }
        Ok(())
    }
}

fn check_neuron(weight: f64, threshold: f64, leak: f64, dt: f64) -> Result<(), TuningError> {
    if !(weight > 0.0 && threshold > 0.0 && dt > 0.0) {
        return Err(TuningError::NonPositive);
    }
    if !(0.0..1.0).contains(&leak) {
        return Err(TuningError::NoFiniteOnset);
    }
    Ok(())
}

/// Mean-field onset: the constant rate at which the average potential
/// `w·r·dt / (1 − λ)` reaches threshold.
pub fn onset_rate(weight: f64, threshold: f64, leak: f64, dt: f64) -> Result<f64, TuningError> {
    check_neuron(weight, threshold, leak, dt)?;
    Ok(threshold * (1.0 - leak) / (weight * dt))
}

/// Onset for a regular train: the rate at which the post-spike peak
/// `w / (1 − λ^P)` reaches threshold. Zero when a single spike suffices;
/// `None` when no rate up to one spike per step is enough.
pub fn regular_onset_rate(
    weight: f64,
    threshold: f64,
    leak: f64,
    dt: f64,
) -> Result<Option<f64>, TuningError> {
    check_neuron(weight, threshold, leak, dt)?;
    if weight >= threshold {
        return Ok(Some(0.0));
    }
    if leak == 0.0 {
        return Ok(None);
    }
    let period = (1.0 - weight / threshold).ln() / leak.ln();
    if period < 1.0 {
        return Ok(None);
    }
    Ok(Some(1.0 / (period * dt)))
}

/// Weight at which a regular train of `rate` sits exactly at onset.
fn weight_for_onset(threshold: f64, rate: f64, leak: f64, dt: f64) -> f64 {
    let period = 1.0 / (rate * dt);
    threshold * (1.0 - leak.powf(period))
}

pub const BASE_THRESHOLDS: PerState = PerState::new(2.0, 3.0, 4.0);
const MAX_RETRIES: u32 = 8;
/// F sits a little below the floor so the floor rate itself fires reliably.
const FLOOR_MARGIN: f64 = 0.9;
/// Priority inhibition in multiples of the largest threshold.
const PRIORITY_SCALE: f64 = 2.5;

/// Solves CMD weights so that F responds from `bands.floor`, M from `f1`
/// and N from `f2`, with thresholds pinned first.
pub fn calibrate(bands: &BandSpec, leak: f64, dt: f64) -> Result<CmdParams, TuningError> {
    bands.validate()?;
    if !(dt > 0.0) {
        return Err(TuningError::NonPositive);
    }
    if !(leak > 0.0 && leak < 1.0) {
        return Err(TuningError::Infeasible(format!(
            "leak {leak} gives no rate selectivity"
        )));
    }
    if bands.f2 * dt >= 0.5 {
        return Err(TuningError::Infeasible(format!(
            "f2 = {} needs more than one input spike every two steps",
            bands.f2
        )));
    }
    let rates = PerState::new(bands.f2, bands.f1, bands.floor * FLOOR_MARGIN);
    let mut last = String::new();
    for attempt in 0..MAX_RETRIES {
        let spread = 2f64.powi(attempt as i32);
        let thresholds = PerState::new(
            BASE_THRESHOLDS.near,
            BASE_THRESHOLDS.near + (BASE_THRESHOLDS.middle - BASE_THRESHOLDS.near) * spread,
            BASE_THRESHOLDS.near + (BASE_THRESHOLDS.far - BASE_THRESHOLDS.near) * spread,
        );
        let weights = PerState::new(
            weight_for_onset(thresholds.near, rates.near, leak, dt),
            weight_for_onset(thresholds.middle, rates.middle, leak, dt),
            weight_for_onset(thresholds.far, rates.far, leak, dt),
        );
        let params = CmdParams {
            weights,
            thresholds,
            priority_inhibition_weight: -PRIORITY_SCALE * thresholds.far,
        };
        match params.validate() {
            Ok(()) => return Ok(params),
            Err(e) => last = e.to_string(),
        }
    }
    Err(TuningError::Infeasible(last))
}

/// Distance boundaries (meters) between the proximity states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeBands {
    /// Beyond this distance an object reads as Far.
    pub far: f64,
    /// Closer than this an object reads as Near.
    pub near: f64,
}

impl Default for RangeBands {
    fn default() -> Self {
        Self {
            far: 1.6,
            near: 0.6,
        }
    }
}

/// An object circling the sensor array at constant `distance`, off the
/// sensor line by a small angular margin.
pub fn reference_arc(layout: &SensorLayout, distance: f64, dt: f64) -> Scenario {
    let n = layout.len() as f64;
    let cx = layout.positions.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = layout.positions.iter().map(|p| p.y).sum::<f64>() / n;
    let end = std::f64::consts::PI - REFERENCE_ARC_MARGIN;
    let mut scenario = Scenario::new(
        layout.clone(),
        vec![Trajectory::Arc {
            center: Point::new(cx, cy),
            radius: distance,
            start_angle: REFERENCE_ARC_MARGIN,
            end_angle: Some(end),
            angular_speed: 1.0,
        }],
        end - REFERENCE_ARC_MARGIN,
    );
    scenario.dt = dt;
    scenario
}

const REFERENCE_ARC_MARGIN: f64 = 0.4;

fn scenario_err(e: impl std::fmt::Display) -> TuningError {
    TuningError::InvalidBands(e.to_string())
}

/// Mean output rate of one PDD unit (spikes/s) on the reference arc at
/// `distance`.
pub fn pdd_output_rate(layout: &SensorLayout, distance: f64, dt: f64) -> Result<f64, TuningError> {
    let units = pdd_units_for(layout.len()).map_err(scenario_err)?;
    let scenario = reference_arc(layout, distance, dt);
    let inputs = encode(&scenario).map_err(scenario_err)?;
    let topo = build_pdd(units).expect("at least one unit");
    let trace = run(&topo, &inputs, scenario.horizon(), 0).expect("PDD topology is valid");
    Ok(trace.total_spikes() as f64 / units as f64 / (scenario.horizon() as f64 * dt))
}

fn check_ranges(layout: &SensorLayout, ranges: &RangeBands) -> Result<(), TuningError> {
    if !(ranges.near > 0.0 && ranges.near < ranges.far && ranges.far < layout.range) {
        return Err(TuningError::InvalidBands(format!(
            "need 0 < near < far < range, got near={} far={} range={}",
            ranges.near, ranges.far, layout.range
        )));
    }
    Ok(())
}

/// Mean PDD output rates at the range boundaries, expressed as bands.
pub fn bands_for_ranges(
    layout: &SensorLayout,
    ranges: &RangeBands,
    tolerance: f64,
    dt: f64,
) -> Result<BandSpec, TuningError> {
    check_ranges(layout, ranges)?;
    let bands = BandSpec {
        f1: pdd_output_rate(layout, ranges.far, dt)?,
        f2: pdd_output_rate(layout, ranges.near, dt)?,
        tolerance,
        floor: layout.rate_min,
    };
    bands.validate()?;
    Ok(bands)
}

const BISECTION_STEPS: usize = 40;

/// Calibrates a CMD unit against the PDD output it actually receives on
/// `layout`. Mean rates are not enough there: the pooled PDD output is
/// bursty, and a leaky neuron read out per window fires on bursts well
/// below its regular-train onset. M and N weights are bisected so that
/// each fires in half of the windows on the reference arc at its boundary
/// distance; F keeps the regular-train design at the layout's minimum rate.
pub fn calibrate_for_ranges(
    layout: &SensorLayout,
    ranges: &RangeBands,
    leak: f64,
    dt: f64,
    window: usize,
) -> Result<CmdParams, TuningError> {
    check_ranges(layout, ranges)?;
    if !(leak > 0.0 && leak < 1.0) {
        return Err(TuningError::Infeasible(format!(
            "leak {leak} gives no rate selectivity"
        )));
    }
    if window == 0 || !(dt > 0.0) {
        return Err(TuningError::NonPositive);
    }
    let t = BASE_THRESHOLDS;
    let base = CmdParams {
        weights: PerState::new(
            t.near,
            t.middle,
            weight_for_onset(t.far, layout.rate_min * FLOOR_MARGIN, leak, dt),
        ),
        thresholds: t,
        priority_inhibition_weight: -PRIORITY_SCALE * t.far,
    };
    let near_w = bisect_window_onset(layout, ranges.near, &base, 0, leak, dt, window)?;
    let middle_w = bisect_window_onset(layout, ranges.far, &base, 1, leak, dt, window)?;
    let params = CmdParams {
        weights: PerState::new(near_w, middle_w, base.weights.far),
        ..base
    };
    params
        .validate()
        .map_err(|e| TuningError::Infeasible(e.to_string()))?;
    Ok(params)
}

/// Smallest weight (to bisection precision) at which CMD member `member`
/// fires in at least half the windows of the reference arc at `distance`.
fn bisect_window_onset(
    layout: &SensorLayout,
    distance: f64,
    base: &CmdParams,
    member: usize,
    leak: f64,
    dt: f64,
    window: usize,
) -> Result<f64, TuningError> {
    let scenario = reference_arc(layout, distance, dt);
    let inputs = encode(&scenario).map_err(scenario_err)?;
    let threshold = base.thresholds.as_array()[member];
    let pdd = build_pdd(pdd_units_for(layout.len()).map_err(scenario_err)?)
        .expect("at least one unit");
    let dynamics = Dynamics {
        leak,
        ..Dynamics::CMD
    };
    let fraction = |w: f64| {
        let mut topo = pdd.clone();
        let mut probes = Vec::new();
        for unit in pdd.units_of_kind(UnitKind::Pdd) {
            let id = topo.neurons.len() as NeuronId;
            topo.neurons.push(dynamics.neuron(id, threshold));
            for &pre in &unit.members {
                topo.synapses.push(Synapse::new(Source::Neuron(pre), id, w));
            }
            probes.push(id);
        }
        let trace = run(&topo, &inputs, scenario.horizon(), 0).expect("probe topology is valid");
        let mut hit = 0usize;
        let mut total = 0usize;
        for &id in &probes {
            for (s, e) in windows(trace.frames.len(), window) {
                total += 1;
                hit += trace.frames[s..=e].iter().any(|f| f.has_fired(id)) as usize;
            }
        }
        hit as f64 / total as f64
    };
    let (mut lo, mut hi) = (0.0, threshold);
    if fraction(hi) < 0.5 {
        return Err(TuningError::Infeasible(format!(
            "no weight makes CMD member {member} respond at {distance} m"
        )));
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if fraction(mid) >= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Rates at which [`verify_bands`] probes a CMD unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub rate_min: f64,
    pub rate_max: f64,
    pub points: usize,
    pub horizon: usize,
}

impl Sweep {
    pub const MIN_POINTS: usize = 30;
    pub const HORIZON: usize = 2000;

    /// From the band floor to 1.5·f2, dense enough that one sweep step is
    /// no wider than the tolerance on f1.
    pub fn for_bands(bands: &BandSpec, dt: f64) -> Self {
        let rate_min = bands.floor;
        let rate_max = (1.5 * bands.f2).min(0.5 / dt);
        let step = bands.tolerance * bands.f1;
        let needed = ((rate_max - rate_min) / step).ceil() as usize + 1;
        Self {
            rate_min,
            rate_max,
            points: needed.max(Self::MIN_POINTS),
            horizon: Self::HORIZON,
        }
    }

    pub fn rates(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|k| self.rate_min + (self.rate_max - self.rate_min) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

/// A lone CMD unit (N, M, F as neurons 0, 1, 2) reading one sensor that
/// stands in for the pooled PDD output.
pub fn cmd_probe(params: &CmdParams, dynamics: Dynamics) -> CircuitTopology {
    let mut topo = CircuitTopology::default();
    let ids = [0u32, 1, 2];
    for ((&id, w), th) in ids
        .iter()
        .zip(params.weights.as_array())
        .zip(params.thresholds.as_array())
    {
        topo.neurons.push(
            NeuronSpec::new(id, th)
                .with_leak(dynamics.leak)
                .with_refractory(dynamics.refractory),
        );
        topo.bind_sensor(0, id, w);
    }
    if params.priority_inhibition_weight != 0.0 {
        for (pre, post) in [(0, 1), (0, 2), (1, 2)] {
            topo.synapses.push(Synapse::new(
                Source::Neuron(pre),
                post,
                params.priority_inhibition_weight,
            ));
        }
    }
    topo.atomic_units.push(AtomicUnit {
        id: 0,
        kind: UnitKind::Cmd,
        members: ids.to_vec(),
        source_unit: None,
    });
    topo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub rate: f64,
    /// Priority state with inhibition enabled.
    pub state: Proximity,
    /// Members that fired with priority inhibition disabled, as states.
    pub fired_without_priority: Vec<Proximity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub points: Vec<SweepPoint>,
    pub measured_f1: Option<f64>,
    pub measured_f2: Option<f64>,
    /// States never step back down as the rate rises.
    pub monotone: bool,
    /// Pre-priority fired sets are nested: {} ⊆ {F} ⊆ {M,F} ⊆ {N,M,F}.
    pub nested: bool,
    pub pass: bool,
}

const STATES: [Proximity; 3] = [Proximity::Near, Proximity::Middle, Proximity::Far];

fn probe(params: &CmdParams, dynamics: Dynamics, rate: f64, dt: f64, horizon: usize) -> Vec<usize> {
    let topo = cmd_probe(params, dynamics);
    let train = encode_regular(0, &vec![rate; horizon], dt);
    let trace = run(&topo, &[train], horizon, 0).expect("probe topology is valid");
    crate::decode::fired_members(&trace, &[0, 1, 2], 0, horizon - 1)
}

pub fn verify_bands(params: &CmdParams, bands: &BandSpec, leak: f64, dt: f64) -> BandReport {
    verify_bands_with(params, bands, leak, dt, &Sweep::for_bands(bands, dt))
}

pub fn verify_bands_with(
    params: &CmdParams,
    bands: &BandSpec,
    leak: f64,
    dt: f64,
    sweep: &Sweep,
) -> BandReport {
    let dynamics = Dynamics {
        leak,
        refractory: Dynamics::CMD.refractory,
    };
    let horizon = sweep.horizon.max(1);
    let rates = sweep.rates();
    let open = params.without_priority();
    let points: Vec<SweepPoint> = par::map(&rates, |&rate| {
        let with = probe(params, dynamics, rate, dt, horizon);
        let without = probe(&open, dynamics, rate, dt, horizon);
        SweepPoint {
            rate,
            state: with.first().map_or(Proximity::None, |&k| STATES[k]),
            fired_without_priority: without.iter().map(|&k| STATES[k]).collect(),
        }
    });

    let boundary = |level: Proximity| {
        let k = points.iter().position(|p| p.state >= level)?;
        Some(if k == 0 {
            points[0].rate
        } else {
            0.5 * (points[k - 1].rate + points[k].rate)
        })
    };
    let measured_f1 = boundary(Proximity::Middle);
    let measured_f2 = boundary(Proximity::Near);

    let monotone = points.windows(2).all(|w| w[0].state <= w[1].state);
    let canonical = [
        vec![],
        vec![Proximity::Far],
        vec![Proximity::Middle, Proximity::Far],
        vec![Proximity::Near, Proximity::Middle, Proximity::Far],
    ];
    let nested = points
        .iter()
        .all(|p| canonical.contains(&p.fired_without_priority))
        && points
            .windows(2)
            .all(|w| w[0].fired_without_priority.len() <= w[1].fired_without_priority.len());
    let within = |m: Option<f64>, f: f64| m.is_some_and(|m| (m - f).abs() <= bands.tolerance * f);
    let low_end_ok = points
        .first()
        .is_some_and(|p| p.state <= Proximity::Far);
    let pass = monotone
        && nested
        && low_end_ok
        && within(measured_f1, bands.f1)
        && within(measured_f2, bands.f2);
    BandReport {
        points,
        measured_f1,
        measured_f2,
        monotone,
        nested,
        pass,
    }
}
