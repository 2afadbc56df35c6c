//! Builders for the detector topologies.
//!
//! * PDD: per atomic unit, three unit-threshold neurons that all inhibit
//!   each other, each driven by one sensor.
//! * CMD: per PDD unit, a Near/Middle/Far triple that integrates the
//!   pooled PDD output with state-specific weights and thresholds, plus
//!   priority inhibition N → {M, F} and M → F.
//! * CTD: PDD followed by one CMD unit per PDD unit.
//! * Braitenberg baseline: delayed-left / undelayed-right coincidence pairs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    AtomicUnit, CircuitTopology, NeuronId, NeuronSpec, Source, Synapse, UnitId, UnitKind,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("a PDD needs at least one atomic unit")]
    NoUnits,
    #[error("{0} sensors given, at least {1} required")]
    TooFewSensors(usize, usize),
    #[error("invalid CMD parameters: {0}")]
    InvalidParams(String),
    #[error("unit {0} is not a PDD unit of this topology")]
    NotPddUnit(UnitId),
}

/// One value per proximity state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerState {
    pub near: f64,
    pub middle: f64,
    pub far: f64,
}

impl PerState {
    pub const fn new(near: f64, middle: f64, far: f64) -> Self {
        Self { near, middle, far }
    }

    /// Values in member order (N, M, F).
    pub fn as_array(&self) -> [f64; 3] {
        [self.near, self.middle, self.far]
    }

    fn strictly_increasing(&self) -> bool {
        self.near < self.middle && self.middle < self.far
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmdParams {
    pub weights: PerState,
    pub thresholds: PerState,
    /// Weight of the N → {M, F} and M → F connections. Zero disables them.
    pub priority_inhibition_weight: f64,
}

impl Default for CmdParams {
    fn default() -> Self {
        Self {
            weights: PerState::new(0.2, 0.5, 1.0),
            thresholds: PerState::new(2.0, 3.0, 4.0),
            priority_inhibition_weight: -10.0,
        }
    }
}

impl CmdParams {
    pub fn validate(&self) -> Result<(), CircuitError> {
        let w = self.weights;
        let t = self.thresholds;
        let bad = |m: &str| Err(CircuitError::InvalidParams(m.to_string()));
        let all = w.as_array().into_iter().chain(t.as_array());
        if all.clone().any(|x| !x.is_finite() || x <= 0.0) {
            return bad("weights and thresholds must be finite and positive");
        }
        if !w.strictly_increasing() {
            return bad("weights must satisfy W_N < W_M < W_F");
        }
        if !t.strictly_increasing() {
            return bad("thresholds must satisfy T_N < T_M < T_F");
        }
        let ratio = PerState::new(t.near / w.near, t.middle / w.middle, t.far / w.far);
        if !(ratio.far < ratio.middle && ratio.middle < ratio.near) {
            return bad("onset ordering T_F/W_F < T_M/W_M < T_N/W_N violated");
        }
        if !self.priority_inhibition_weight.is_finite() || self.priority_inhibition_weight > 0.0 {
            return bad("priority inhibition weight must be zero or negative");
        }
        Ok(())
    }

    pub fn without_priority(mut self) -> Self {
        self.priority_inhibition_weight = 0.0;
        self
    }
}

/// Per-neuron dynamics shared by every neuron of a sub-circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dynamics {
    pub leak: f64,
    pub refractory: u32,
}

impl Dynamics {
    pub const PDD: Dynamics = Dynamics {
        leak: 0.0,
        refractory: 1,
    };
    pub const CMD: Dynamics = Dynamics {
        leak: 0.9,
        refractory: 1,
    };

    pub fn neuron(&self, id: NeuronId, threshold: f64) -> NeuronSpec {
        NeuronSpec::new(id, threshold)
            .with_leak(self.leak)
            .with_refractory(self.refractory)
    }
}

pub const PDD_THRESHOLD: f64 = 1.0;
pub const PDD_INHIBITION: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtdConfig {
    pub num_sensors: usize,
    pub cmd: CmdParams,
    pub pdd: Dynamics,
    pub cmd_dynamics: Dynamics,
    /// Weight of the circular PDD inhibition. Zero removes it.
    pub pdd_inhibition_weight: f64,
}

impl Default for CtdConfig {
    fn default() -> Self {
        Self {
            num_sensors: 4,
            cmd: CmdParams::default(),
            pdd: Dynamics::PDD,
            cmd_dynamics: Dynamics::CMD,
            pdd_inhibition_weight: PDD_INHIBITION,
        }
    }
}

impl CtdConfig {
    pub fn with_sensors(num_sensors: usize) -> Self {
        Self {
            num_sensors,
            ..Self::default()
        }
    }

    /// The ablation used to study runaway activity: every inhibitory
    /// connection of the detector removed.
    pub fn without_inhibition(mut self) -> Self {
        self.pdd_inhibition_weight = 0.0;
        self.cmd = self.cmd.without_priority();
        self
    }
}

/// Number of overlapping three-sensor windows covering `num_sensors` sensors.
pub fn pdd_units_for(num_sensors: usize) -> Result<usize, CircuitError> {
    if num_sensors < 3 {
        return Err(CircuitError::TooFewSensors(num_sensors, 3));
    }
    Ok(num_sensors - 2)
}

pub fn build_pdd(num_units: usize) -> Result<CircuitTopology, CircuitError> {
    build_pdd_with(num_units, Dynamics::PDD, PDD_INHIBITION)
}

/// PDD whose unit `u` reads sensors `u, u+1, u+2` into members 0, 1, 2.
pub fn build_pdd_with(
    num_units: usize,
    dynamics: Dynamics,
    inhibition_weight: f64,
) -> Result<CircuitTopology, CircuitError> {
    if num_units == 0 {
        return Err(CircuitError::NoUnits);
    }
    let mut topo = CircuitTopology::default();
    for u in 0..num_units {
        let members: Vec<NeuronId> = (0..3).map(|k| (3 * u + k) as NeuronId).collect();
        for (k, &id) in members.iter().enumerate() {
            topo.neurons.push(dynamics.neuron(id, PDD_THRESHOLD));
            topo.bind_sensor((u + k) as u32, id, 1.0);
        }
        if inhibition_weight != 0.0 {
            for &pre in &members {
                for &post in members.iter().filter(|&&m| m != pre) {
                    topo.synapses
                        .push(Synapse::new(Source::Neuron(pre), post, inhibition_weight));
                }
            }
        }
        topo.atomic_units.push(AtomicUnit {
            id: u as UnitId,
            kind: UnitKind::Pdd,
            members,
            source_unit: None,
        });
    }
    Ok(topo)
}

/// Neurons, synapses and unit record of one CMD unit, ready to be merged.
#[derive(Debug, Clone, PartialEq)]
pub struct CmdFragment {
    pub neurons: Vec<NeuronSpec>,
    pub synapses: Vec<Synapse>,
    pub unit: AtomicUnit,
}

/// Builds the N/M/F triple fed by every member of `pdd`. New neurons take
/// ids `first_id..first_id + 3` in N, M, F order.
pub fn build_cmd_unit(
    params: &CmdParams,
    pdd: &AtomicUnit,
    dynamics: Dynamics,
    first_id: NeuronId,
    unit_id: UnitId,
) -> Result<CmdFragment, CircuitError> {
    params.validate()?;
    if pdd.kind != UnitKind::Pdd {
        return Err(CircuitError::NotPddUnit(pdd.id));
    }
    let ids = [first_id, first_id + 1, first_id + 2];
    let weights = params.weights.as_array();
    let thresholds = params.thresholds.as_array();

    let neurons = ids
        .iter()
        .zip(thresholds)
        .map(|(&id, th)| dynamics.neuron(id, th))
        .collect();
    let mut synapses = Vec::with_capacity(12);
    for (&post, w) in ids.iter().zip(weights) {
        for &pre in &pdd.members {
            synapses.push(Synapse::new(Source::Neuron(pre), post, w));
        }
    }
    let inhibition = params.priority_inhibition_weight;
    if inhibition != 0.0 {
        let [n, m, f] = ids;
        for (pre, post) in [(n, m), (n, f), (m, f)] {
            synapses.push(Synapse::new(Source::Neuron(pre), post, inhibition));
        }
    }
    Ok(CmdFragment {
        neurons,
        synapses,
        unit: AtomicUnit {
            id: unit_id,
            kind: UnitKind::Cmd,
            members: ids.to_vec(),
            source_unit: Some(pdd.id),
        },
    })
}

/// Attaches a CMD unit to an existing PDD unit of `topo`.
pub fn attach_cmd_unit(
    topo: &mut CircuitTopology,
    params: &CmdParams,
    pdd_unit: UnitId,
    dynamics: Dynamics,
) -> Result<UnitId, CircuitError> {
    let pdd = topo
        .unit(pdd_unit)
        .filter(|u| u.kind == UnitKind::Pdd)
        .cloned()
        .ok_or(CircuitError::NotPddUnit(pdd_unit))?;
    let first_id = topo.neurons.iter().map(|n| n.id + 1).max().unwrap_or(0);
    let unit_id = topo.atomic_units.iter().map(|u| u.id + 1).max().unwrap_or(0);
    let frag = build_cmd_unit(params, &pdd, dynamics, first_id, unit_id)?;
    topo.neurons.extend(frag.neurons);
    topo.synapses.extend(frag.synapses);
    topo.atomic_units.push(frag.unit);
    Ok(unit_id)
}

pub fn build_ctd(config: &CtdConfig) -> Result<CircuitTopology, CircuitError> {
    let units = pdd_units_for(config.num_sensors)?;
    config.cmd.validate()?;
    let mut topo = build_pdd_with(units, config.pdd, config.pdd_inhibition_weight)?;
    for u in 0..units {
        attach_cmd_unit(&mut topo, &config.cmd, u as UnitId, config.cmd_dynamics)?;
    }
    Ok(topo)
}

/// Level-C coincidence threshold of the baseline: both branches must agree.
pub const BRAITENBERG_COINCIDENCE_THRESHOLD: f64 = 2.0;

/// Left-to-right detector: for each adjacent sensor pair `(i, i+1)`, a
/// left-branch neuron whose output is delayed by `branch_delay`, an
/// undelayed right-branch neuron, and a coincidence neuron reading both.
///
/// Ids for pair `i`: left `3i`, right `3i + 1`, coincidence `3i + 2`.
pub fn build_braitenberg_lr(
    num_sensors: usize,
    branch_delay: u32,
) -> Result<CircuitTopology, CircuitError> {
    if num_sensors < 2 {
        return Err(CircuitError::TooFewSensors(num_sensors, 2));
    }
    let relay = Dynamics::PDD;
    let mut topo = CircuitTopology::default();
    for i in 0..num_sensors - 1 {
        let (left, right, coincidence) = (3 * i as u32, 3 * i as u32 + 1, 3 * i as u32 + 2);
        topo.neurons.push(relay.neuron(left, 1.0));
        topo.neurons.push(relay.neuron(right, 1.0));
        topo.neurons
            .push(relay.neuron(coincidence, BRAITENBERG_COINCIDENCE_THRESHOLD));
        topo.bind_sensor(i as u32, left, 1.0);
        topo.bind_sensor(i as u32 + 1, right, 1.0);
        topo.synapses.push(
            Synapse::new(Source::Neuron(left), coincidence, 1.0).with_delay(branch_delay),
        );
        topo.synapses
            .push(Synapse::new(Source::Neuron(right), coincidence, 1.0));
    }
    Ok(topo)
}
