//! Discrete-time leaky integrate-and-fire engine.
//!
//! Every neuron is updated synchronously from the firing vector of earlier
//! steps. Sensor spikes reach their targets after `delay` steps; neuron spikes
//! need one extra step to propagate, so a spike fired at `t` over a synapse
//! with delay `d` is integrated at `t + 1 + d`. There are no within-step
//! excitatory cascades.
//!
//! Zero-delay inhibitory synapses between neurons additionally act as a veto
//! inside the step on which both ends cross threshold: candidates are visited
//! in canonical order (atomic unit, then member index, then neuron id) and a
//! candidate is suppressed when an already accepted neuron inhibits it. This
//! is how the winner-take-all tie rule is realized.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NeuronId = u32;
pub type SensorId = u32;
pub type UnitId = u32;

/// Tolerance used when checking that a frame's aggregate matches its potentials.
pub const AGGREGATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("sensor {0} is not bound to any neuron")]
    UnboundSensor(SensorId),
    #[error("invalid topology: {}", join_violations(.0))]
    InvalidTopology(Vec<Violation>),
    #[error("horizon must be at least one step")]
    ZeroHorizon,
    #[error("spike train for sensor {source_id}: {reason}")]
    BadSpikeTrain { source_id: SensorId, reason: String },
    #[error("step {step} is outside the horizon {horizon}")]
    PastHorizon { step: usize, horizon: usize },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Where a synapse takes its spikes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum Source {
    Sensor(SensorId),
    Neuron(NeuronId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronSpec {
    pub id: NeuronId,
    pub threshold: f64,
    /// Fraction of the potential retained from one step to the next.
    pub leak: f64,
    pub refractory: u32,
    #[serde(default)]
    pub reset_potential: f64,
}

impl NeuronSpec {
    /// Threshold neuron with no memory and a one-step refractory period.
    pub fn new(id: NeuronId, threshold: f64) -> Self {
        Self {
            id,
            threshold,
            leak: 0.0,
            refractory: 1,
            reset_potential: 0.0,
        }
    }

    pub fn with_leak(mut self, leak: f64) -> Self {
        self.leak = leak;
        self
    }

    pub fn with_refractory(mut self, refractory: u32) -> Self {
        self.refractory = refractory;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synapse {
    pub pre: Source,
    pub post: NeuronId,
    /// Positive values excite, negative values inhibit.
    pub weight: f64,
    #[serde(default)]
    pub delay: u32,
}

impl Synapse {
    pub fn new(pre: Source, post: NeuronId, weight: f64) -> Self {
        Self {
            pre,
            post,
            weight,
            delay: 0,
        }
    }

    pub fn with_delay(mut self, delay: u32) -> Self {
        self.delay = delay;
        self
    }

    pub fn is_inhibitory(&self) -> bool {
        self.weight < 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Pdd,
    Cmd,
}

/// A three-neuron building block. Member order is significant: it defines
/// the in-unit index used by decoders and the tie-break priority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicUnit {
    pub id: UnitId,
    pub kind: UnitKind,
    pub members: Vec<NeuronId>,
    /// For CMD units, the PDD unit feeding it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_unit: Option<UnitId>,
}

pub const UNIT_SIZE: usize = 3;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitTopology {
    pub neurons: Vec<NeuronSpec>,
    pub synapses: Vec<Synapse>,
    pub atomic_units: Vec<AtomicUnit>,
    pub sensor_bindings: BTreeMap<SensorId, Vec<NeuronId>>,
}

impl CircuitTopology {
    pub fn unit(&self, id: UnitId) -> Option<&AtomicUnit> {
        self.atomic_units.iter().find(|u| u.id == id)
    }

    pub fn units_of_kind(&self, kind: UnitKind) -> impl Iterator<Item = &AtomicUnit> {
        self.atomic_units.iter().filter(move |u| u.kind == kind)
    }

    pub fn neuron(&self, id: NeuronId) -> Option<&NeuronSpec> {
        self.neurons.iter().find(|n| n.id == id)
    }

    pub fn sensors(&self) -> impl Iterator<Item = SensorId> + '_ {
        self.sensor_bindings.keys().copied()
    }

    /// Neurons with no outgoing synapse: the read-out layer of a circuit.
    pub fn output_neurons(&self) -> Vec<NeuronId> {
        let with_out: BTreeSet<NeuronId> = self
            .synapses
            .iter()
            .filter_map(|s| match s.pre {
                Source::Neuron(id) => Some(id),
                Source::Sensor(_) => None,
            })
            .collect();
        let mut out: Vec<NeuronId> = self
            .neurons
            .iter()
            .map(|n| n.id)
            .filter(|id| !with_out.contains(id))
            .collect();
        out.sort_unstable();
        out
    }

    /// Connects a sensor to a neuron and records the binding.
    pub fn bind_sensor(&mut self, sensor: SensorId, post: NeuronId, weight: f64) {
        self.synapses
            .push(Synapse::new(Source::Sensor(sensor), post, weight));
        let bound = self.sensor_bindings.entry(sensor).or_default();
        if !bound.contains(&post) {
            bound.push(post);
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }
}

/// A single reason a topology is malformed.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateNeuron(NeuronId),
    NonPositiveThreshold(NeuronId),
    LeakOutOfRange(NeuronId),
    NonFiniteParameter(NeuronId),
    ZeroWeight { synapse: usize },
    NonFiniteWeight { synapse: usize },
    UnknownPost { synapse: usize, post: NeuronId },
    UnknownPre { synapse: usize, pre: NeuronId },
    UnboundSensorSynapse { synapse: usize, sensor: SensorId },
    BindingWithoutSynapse { sensor: SensorId, neuron: NeuronId },
    DuplicateUnit(UnitId),
    UnitSize { unit: UnitId, size: usize },
    UnknownMember { unit: UnitId, neuron: NeuronId },
    SharedMember { neuron: NeuronId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNeuron(id) => write!(f, "neuron {id}: duplicate id"),
            Violation::NonPositiveThreshold(id) => write!(f, "neuron {id}: threshold must be > 0"),
            Violation::LeakOutOfRange(id) => write!(f, "neuron {id}: leak outside [0, 1]"),
            Violation::NonFiniteParameter(id) => write!(f, "neuron {id}: non-finite parameter"),
            Violation::ZeroWeight { synapse } => write!(f, "synapse {synapse}: zero weight"),
            Violation::NonFiniteWeight { synapse } => {
                write!(f, "synapse {synapse}: non-finite weight")
            }
            Violation::UnknownPost { synapse, post } => {
                write!(f, "synapse {synapse}: unknown post neuron {post}")
            }
            Violation::UnknownPre { synapse, pre } => {
                write!(f, "synapse {synapse}: unknown pre neuron {pre}")
            }
            Violation::UnboundSensorSynapse { synapse, sensor } => {
                write!(f, "synapse {synapse}: sensor {sensor} has no matching binding")
            }
            Violation::BindingWithoutSynapse { sensor, neuron } => {
                write!(f, "sensor {sensor} bound to neuron {neuron} without a synapse")
            }
            Violation::DuplicateUnit(id) => write!(f, "unit {id}: duplicate id"),
            Violation::UnitSize { unit, size } => {
                write!(f, "unit {unit}: unit size ≠ {UNIT_SIZE} (got {size})")
            }
            Violation::UnknownMember { unit, neuron } => {
                write!(f, "unit {unit}: unknown member neuron {neuron}")
            }
            Violation::SharedMember { neuron } => {
                write!(f, "neuron {neuron}: member of more than one unit")
            }
        }
    }
}

pub fn validate(topology: &CircuitTopology) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for n in &topology.neurons {
        if !ids.insert(n.id) {
            out.push(Violation::DuplicateNeuron(n.id));
        }
        if !n.threshold.is_finite() || !n.leak.is_finite() || !n.reset_potential.is_finite() {
            out.push(Violation::NonFiniteParameter(n.id));
            continue;
        }
        if n.threshold <= 0.0 {
            out.push(Violation::NonPositiveThreshold(n.id));
        }
        if !(0.0..=1.0).contains(&n.leak) {
            out.push(Violation::LeakOutOfRange(n.id));
        }
    }

    let mut sensor_edges = BTreeSet::new();
    for (i, s) in topology.synapses.iter().enumerate() {
        if !s.weight.is_finite() {
            out.push(Violation::NonFiniteWeight { synapse: i });
        } else if s.weight == 0.0 {
            out.push(Violation::ZeroWeight { synapse: i });
        }
        if !ids.contains(&s.post) {
            out.push(Violation::UnknownPost {
                synapse: i,
                post: s.post,
            });
        }
        match s.pre {
            Source::Neuron(pre) if !ids.contains(&pre) => {
                out.push(Violation::UnknownPre { synapse: i, pre })
            }
            Source::Sensor(sensor) => {
                let bound = topology
                    .sensor_bindings
                    .get(&sensor)
                    .is_some_and(|b| b.contains(&s.post));
                if !bound {
                    out.push(Violation::UnboundSensorSynapse { synapse: i, sensor });
                }
                sensor_edges.insert((sensor, s.post));
            }
            Source::Neuron(_) => {}
        }
    }
    for (&sensor, neurons) in &topology.sensor_bindings {
        for &neuron in neurons {
            if !sensor_edges.contains(&(sensor, neuron)) {
                out.push(Violation::BindingWithoutSynapse { sensor, neuron });
            }
        }
    }

    let mut unit_ids = BTreeSet::new();
    let mut members_seen = BTreeSet::new();
    for u in &topology.atomic_units {
        if !unit_ids.insert(u.id) {
            out.push(Violation::DuplicateUnit(u.id));
        }
        if u.members.len() != UNIT_SIZE {
            out.push(Violation::UnitSize {
                unit: u.id,
                size: u.members.len(),
            });
        }
        for &m in &u.members {
            if !ids.contains(&m) {
                out.push(Violation::UnknownMember {
                    unit: u.id,
                    neuron: m,
                });
            }
            if !members_seen.insert(m) {
                out.push(Violation::SharedMember { neuron: m });
            }
        }
    }
    out
}

/// Spike times of one source over a finite horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpikeTrain {
    pub source: SensorId,
    pub times: Vec<usize>,
    pub horizon: usize,
}

impl SpikeTrain {
    pub fn new(source: SensorId, times: Vec<usize>, horizon: usize) -> Self {
        Self {
            source,
            times,
            horizon,
        }
    }

    pub fn empty(source: SensorId, horizon: usize) -> Self {
        Self::new(source, Vec::new(), horizon)
    }

    /// Checks that times are strictly increasing and inside `[0, horizon)`.
    pub fn check(&self) -> Result<(), String> {
        if let Some(w) = self.times.windows(2).find(|w| w[0] >= w[1]) {
            return Err(format!("times not strictly increasing at {} -> {}", w[0], w[1]));
        }
        if let Some(&last) = self.times.last() {
            if last >= self.horizon {
                return Err(format!("spike at {last} outside horizon {}", self.horizon));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFrame {
    pub t: usize,
    pub fired: Vec<NeuronId>,
    pub potentials: BTreeMap<NeuronId, f64>,
    pub aggregate_potential: f64,
}

impl TraceFrame {
    pub fn has_fired(&self, id: NeuronId) -> bool {
        self.fired.binary_search(&id).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub seed: u64,
    pub horizon: usize,
    pub neuron_ids: Vec<NeuronId>,
    pub frames: Vec<TraceFrame>,
}

impl SimTrace {
    pub fn neuron_count(&self) -> usize {
        self.neuron_ids.len()
    }

    /// Spike times of one neuron.
    pub fn spike_times(&self, id: NeuronId) -> Vec<usize> {
        self.frames
            .iter()
            .filter(|f| f.has_fired(id))
            .map(|f| f.t)
            .collect()
    }

    pub fn total_spikes(&self) -> usize {
        self.frames.iter().map(|f| f.fired.len()).sum()
    }
}

#[derive(Debug, Clone, Copy)]
enum InputRef {
    Sensor(usize),
    Neuron(usize),
}

#[derive(Debug, Clone, Copy)]
struct Incoming {
    from: InputRef,
    weight: f64,
    delay: usize,
}

/// Fixed-depth ring of boolean spike vectors indexed by absolute step.
#[derive(Debug, Clone)]
struct History {
    slots: Vec<Vec<bool>>,
}

impl History {
    fn new(depth: usize, width: usize) -> Self {
        Self {
            slots: vec![vec![false; width]; depth],
        }
    }

    fn slot_mut(&mut self, t: usize) -> &mut Vec<bool> {
        let depth = self.slots.len();
        &mut self.slots[t % depth]
    }

    fn get(&self, t: usize, i: usize) -> bool {
        self.slots[t % self.slots.len()][i]
    }
}

/// Compiled topology plus the mutable run state.
#[derive(Debug, Clone)]
pub struct Simulator {
    ids: Vec<NeuronId>,
    threshold: Vec<f64>,
    leak: Vec<f64>,
    refractory: Vec<u32>,
    reset: Vec<f64>,
    incoming: Vec<Vec<Incoming>>,
    vetoes: Vec<Vec<usize>>,
    order: Vec<usize>,
    sensor_slot: HashMap<SensorId, usize>,
    /// Neuron indices in ascending id order, for stable frame summation.
    by_id: Vec<usize>,

    potential: Vec<f64>,
    refractory_left: Vec<u32>,
    sensors: History,
    neurons: History,
    t: usize,
}

impl Simulator {
    pub fn new(topology: &CircuitTopology) -> Result<Self, EngineError> {
        let violations = validate(topology);
        if !violations.is_empty() {
            return Err(EngineError::InvalidTopology(violations));
        }
        let n = topology.neurons.len();
        let index: HashMap<NeuronId, usize> = topology
            .neurons
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id, i))
            .collect();
        let sensor_slot: HashMap<SensorId, usize> = topology
            .sensor_bindings
            .keys()
            .enumerate()
            .map(|(i, &s)| (s, i))
            .collect();

        let mut incoming = vec![Vec::new(); n];
        let mut vetoes = vec![Vec::new(); n];
        let mut max_delay = 0usize;
        for s in &topology.synapses {
            let post = index[&s.post];
            let from = match s.pre {
                Source::Sensor(id) => InputRef::Sensor(sensor_slot[&id]),
                Source::Neuron(id) => {
                    let pre = index[&id];
                    if s.delay == 0 && s.is_inhibitory() && pre != post {
                        vetoes[pre].push(post);
                    }
                    InputRef::Neuron(pre)
                }
            };
            max_delay = max_delay.max(s.delay as usize);
            incoming[post].push(Incoming {
                from,
                weight: s.weight,
                delay: s.delay as usize,
            });
        }

        let mut rank: HashMap<NeuronId, (u8, UnitId, usize)> = HashMap::new();
        for u in &topology.atomic_units {
            for (k, &m) in u.members.iter().enumerate() {
                rank.insert(m, (0, u.id, k));
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| {
            let id = topology.neurons[i].id;
            let (group, unit, member) = rank.get(&id).copied().unwrap_or((1, 0, 0));
            (group, unit, member, id)
        });
        let mut by_id: Vec<usize> = (0..n).collect();
        by_id.sort_by_key(|&i| topology.neurons[i].id);

        let depth = max_delay + 2;
        Ok(Self {
            ids: topology.neurons.iter().map(|s| s.id).collect(),
            threshold: topology.neurons.iter().map(|s| s.threshold).collect(),
            leak: topology.neurons.iter().map(|s| s.leak).collect(),
            refractory: topology.neurons.iter().map(|s| s.refractory).collect(),
            reset: topology.neurons.iter().map(|s| s.reset_potential).collect(),
            incoming,
            vetoes,
            order,
            sensors: History::new(depth, sensor_slot.len()),
            neurons: History::new(depth, n),
            sensor_slot,
            by_id,
            potential: vec![0.0; n],
            refractory_left: vec![0; n],
            t: 0,
        })
    }

    /// The step that the next call to [`Simulator::step`] will compute.
    pub fn time(&self) -> usize {
        self.t
    }

    /// Advances one step given the sensors spiking at this step.
    pub fn step(&mut self, sensor_spikes: &[SensorId]) -> Result<TraceFrame, EngineError> {
        let t = self.t;
        let n = self.ids.len();

        let slot = self.sensors.slot_mut(t);
        slot.iter_mut().for_each(|s| *s = false);
        for id in sensor_spikes {
            let i = *self
                .sensor_slot
                .get(id)
                .ok_or(EngineError::UnboundSensor(*id))?;
            self.sensors.slot_mut(t)[i] = true;
        }

        let mut refractory_now = vec![false; n];
        for j in 0..n {
            if self.refractory_left[j] > 0 {
                refractory_now[j] = true;
                self.refractory_left[j] -= 1;
            }
            let mut input = 0.0;
            for syn in &self.incoming[j] {
                let spiked = match syn.from {
                    InputRef::Sensor(i) => t >= syn.delay && self.sensors.get(t - syn.delay, i),
                    InputRef::Neuron(i) => {
                        t > syn.delay && self.neurons.get(t - 1 - syn.delay, i)
                    }
                };
                if spiked {
                    input += syn.weight;
                }
            }
            let v = self.leak[j] * self.potential[j] + input;
            self.potential[j] = v.max(0.0);
        }

        let mut fired = vec![false; n];
        let mut vetoed = vec![false; n];
        for &j in &self.order {
            if refractory_now[j] || vetoed[j] || self.potential[j] < self.threshold[j] {
                continue;
            }
            fired[j] = true;
            self.potential[j] = self.reset[j];
            self.refractory_left[j] = self.refractory[j];
            for &k in &self.vetoes[j] {
                vetoed[k] = true;
            }
        }
        self.neurons.slot_mut(t).copy_from_slice(&fired);
        self.t += 1;

        let mut potentials = BTreeMap::new();
        let mut aggregate = 0.0;
        let mut fired_ids = Vec::new();
        for &j in &self.by_id {
            potentials.insert(self.ids[j], self.potential[j]);
            aggregate += self.potential[j];
            if fired[j] {
                fired_ids.push(self.ids[j]);
            }
        }
        Ok(TraceFrame {
            t,
            fired: fired_ids,
            potentials,
            aggregate_potential: aggregate,
        })
    }
}

/// Simulates `horizon` steps of `topology` driven by `inputs`.
///
/// The engine itself draws no random numbers; `seed` is carried into the
/// trace so that runs can be matched to the scenario that produced them.
pub fn run(
    topology: &CircuitTopology,
    inputs: &[SpikeTrain],
    horizon: usize,
    seed: u64,
) -> Result<SimTrace, EngineError> {
    if horizon == 0 {
        return Err(EngineError::ZeroHorizon);
    }
    let mut sim = Simulator::new(topology)?;
    let mut schedule: Vec<Vec<SensorId>> = vec![Vec::new(); horizon];
    for train in inputs {
        if !topology.sensor_bindings.contains_key(&train.source) {
            return Err(EngineError::UnboundSensor(train.source));
        }
        train.check().map_err(|reason| EngineError::BadSpikeTrain {
            source_id: train.source,
            reason,
        })?;
        for &t in &train.times {
            if t >= horizon {
                return Err(EngineError::PastHorizon { step: t, horizon });
            }
            schedule[t].push(train.source);
        }
    }
    let frames = schedule
        .iter()
        .map(|spikes| sim.step(spikes))
        .collect::<Result<Vec<_>, _>>()?;
    let mut neuron_ids: Vec<NeuronId> = topology.neurons.iter().map(|n| n.id).collect();
    neuron_ids.sort_unstable();
    Ok(SimTrace {
        seed,
        horizon,
        neuron_ids,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(threshold: f64, leak: f64) -> CircuitTopology {
        let mut topo = CircuitTopology {
            neurons: vec![NeuronSpec::new(0, threshold).with_leak(leak)],
            ..Default::default()
        };
        topo.bind_sensor(0, 0, 1.0);
        topo
    }

    #[test]
    fn silent_neuron_never_fires() {
        let topo = single(1.0, 0.0);
        let trace = run(&topo, &[], 10, 0).unwrap();
        assert_eq!(trace.frames.len(), 10);
        for f in &trace.frames {
            assert!(f.fired.is_empty());
            assert_eq!(f.potentials[&0], 0.0);
        }
    }

    #[test]
    fn unit_spike_meets_unit_threshold() {
        let topo = single(1.0, 0.0);
        let trace = run(&topo, &[SpikeTrain::new(0, vec![3], 10)], 10, 0).unwrap();
        assert_eq!(trace.spike_times(0), vec![3]);
    }

    #[test]
    fn excitation_and_inhibition_cancel() {
        let mut topo = single(1.0, 0.0);
        topo.bind_sensor(1, 0, -1.0);
        let inputs = [
            SpikeTrain::new(0, vec![3], 10),
            SpikeTrain::new(1, vec![3], 10),
        ];
        let trace = run(&topo, &inputs, 10, 0).unwrap();
        assert!(trace.spike_times(0).is_empty());
        assert_eq!(trace.frames[3].potentials[&0], 0.0);
    }

    #[test]
    fn inhibition_floors_at_zero() {
        let mut topo = single(5.0, 1.0);
        topo.bind_sensor(1, 0, -3.0);
        let inputs = [
            SpikeTrain::new(0, vec![0], 4),
            SpikeTrain::new(1, vec![1], 4),
        ];
        let trace = run(&topo, &inputs, 4, 0).unwrap();
        assert_eq!(trace.frames[0].potentials[&0], 1.0);
        assert_eq!(trace.frames[1].potentials[&0], 0.0);
    }

    #[test]
    fn neuron_spikes_arrive_one_step_later_plus_delay() {
        let mut topo = CircuitTopology {
            neurons: vec![NeuronSpec::new(0, 1.0), NeuronSpec::new(1, 1.0)],
            ..Default::default()
        };
        topo.bind_sensor(0, 0, 1.0);
        topo.synapses
            .push(Synapse::new(Source::Neuron(0), 1, 1.0).with_delay(3));
        let trace = run(&topo, &[SpikeTrain::new(0, vec![2], 12)], 12, 0).unwrap();
        assert_eq!(trace.spike_times(0), vec![2]);
        assert_eq!(trace.spike_times(1), vec![6]);
    }

    #[test]
    fn sensor_delay_shifts_arrival() {
        let mut topo = CircuitTopology {
            neurons: vec![NeuronSpec::new(0, 1.0)],
            ..Default::default()
        };
        topo.synapses
            .push(Synapse::new(Source::Sensor(0), 0, 1.0).with_delay(4));
        topo.sensor_bindings.insert(0, vec![0]);
        let trace = run(&topo, &[SpikeTrain::new(0, vec![1], 10)], 10, 0).unwrap();
        assert_eq!(trace.spike_times(0), vec![5]);
    }

    #[test]
    fn refractory_blocks_next_step() {
        let mut topo = CircuitTopology {
            neurons: vec![NeuronSpec::new(0, 1.0).with_refractory(2)],
            ..Default::default()
        };
        topo.bind_sensor(0, 0, 1.0);
        let every: Vec<usize> = (0..10).collect();
        let trace = run(&topo, &[SpikeTrain::new(0, every, 10)], 10, 0).unwrap();
        assert_eq!(trace.spike_times(0), vec![0, 3, 6, 9]);
    }

    #[test]
    fn zero_delay_inhibition_vetoes_simultaneous_crossing() {
        let mut topo = CircuitTopology {
            neurons: vec![NeuronSpec::new(0, 1.0), NeuronSpec::new(1, 1.0)],
            atomic_units: vec![],
            ..Default::default()
        };
        topo.bind_sensor(0, 0, 1.0);
        topo.bind_sensor(0, 1, 1.0);
        topo.synapses.push(Synapse::new(Source::Neuron(0), 1, -1.0));
        topo.synapses.push(Synapse::new(Source::Neuron(1), 0, -1.0));
        let trace = run(&topo, &[SpikeTrain::new(0, vec![0], 3)], 3, 0).unwrap();
        assert_eq!(trace.frames[0].fired, vec![0]);
    }

    #[test]
    fn unbound_sensor_is_rejected() {
        let topo = single(1.0, 0.0);
        let err = run(&topo, &[SpikeTrain::new(7, vec![0], 3)], 3, 0).unwrap_err();
        assert_eq!(err, EngineError::UnboundSensor(7));
        let mut sim = Simulator::new(&topo).unwrap();
        assert_eq!(sim.step(&[9]).unwrap_err(), EngineError::UnboundSensor(9));
    }

    #[test]
    fn zero_horizon_is_rejected() {
        let topo = single(1.0, 0.0);
        assert_eq!(run(&topo, &[], 0, 0).unwrap_err(), EngineError::ZeroHorizon);
    }

    #[test]
    fn malformed_trains_are_rejected() {
        let topo = single(1.0, 0.0);
        let unordered = SpikeTrain::new(0, vec![3, 3], 10);
        assert!(matches!(
            run(&topo, &[unordered], 10, 0),
            Err(EngineError::BadSpikeTrain { .. })
        ));
        let long = SpikeTrain::new(0, vec![12], 20);
        assert!(matches!(
            run(&topo, &[long], 10, 0),
            Err(EngineError::PastHorizon { .. })
        ));
    }

    #[test]
    fn validate_reports_each_problem() {
        let mut topo = single(1.0, 0.0);
        topo.neurons.push(NeuronSpec::new(0, -1.0).with_leak(1.5));
        topo.synapses.push(Synapse::new(Source::Neuron(0), 9, 0.0));
        topo.sensor_bindings.entry(3).or_default().push(0);
        topo.atomic_units.push(AtomicUnit {
            id: 0,
            kind: UnitKind::Pdd,
            members: vec![0, 4],
            source_unit: None,
        });
        let v = validate(&topo);
        let text: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        assert!(v.contains(&Violation::DuplicateNeuron(0)));
        assert!(v.contains(&Violation::NonPositiveThreshold(0)));
        assert!(v.contains(&Violation::LeakOutOfRange(0)));
        assert!(v.contains(&Violation::ZeroWeight { synapse: 1 }));
        assert!(v.contains(&Violation::UnknownPost { synapse: 1, post: 9 }));
        assert!(v.contains(&Violation::BindingWithoutSynapse { sensor: 3, neuron: 0 }));
        assert!(v.contains(&Violation::UnknownMember { unit: 0, neuron: 4 }));
        assert!(text.iter().any(|s| s.contains("unit size ≠ 3")));
        assert!(text.iter().any(|s| s.contains("zero weight")));
    }
}
