use ctd_core::engine::{
    run, AtomicUnit, CircuitTopology, NeuronSpec, Simulator, Source, SpikeTrain, Synapse,
    UnitKind, Violation, AGGREGATE_TOLERANCE,
};
use proptest::prelude::*;

fn single(threshold: f64, leak: f64, weight: f64) -> CircuitTopology {
    let mut t = CircuitTopology::default();
    t.neurons.push(NeuronSpec::new(0, threshold).with_leak(leak));
    t.bind_sensor(0, 0, weight);
    t
}

/// First fire of a lone neuron fed every `period` steps starting at 0,
/// from the scalar recurrence v ← λv + w·[t mod P = 0].
fn oracle_first_fire(threshold: f64, leak: f64, weight: f64, period: usize, horizon: usize) -> Option<usize> {
    let mut v = 0.0f64;
    for t in 0..horizon {
        let input = if t % period == 0 { weight } else { 0.0 };
        v = leak * v + input;
        if v >= threshold {
            return Some(t);
        }
    }
    None
}

fn periodic(source: u32, period: usize, horizon: usize) -> SpikeTrain {
    SpikeTrain::new(source, (0..horizon).step_by(period).collect(), horizon)
}

#[test]
fn geometric_sum_first_fire() {
    // threshold 2, leak 0.5, weight 1 every step: 1, 1.5, 1.75, ... never
    // reaches 2 in exact arithmetic; with floats the sum rounds to 2 after
    // enough steps. Either way the engine must agree with the recurrence.
    let topo = single(2.0, 0.5, 1.0);
    let horizon = 80;
    let trace = run(&topo, &[periodic(0, 1, horizon)], horizon, 0).unwrap();
    let fired = trace.spike_times(0).first().copied();
    assert_eq!(fired, oracle_first_fire(2.0, 0.5, 1.0, 1, horizon));
}

#[test]
fn geometric_sum_hand_values() {
    // leak 0.5 with weight 1.5 every step: 1.5, 2.25 → fires at t = 1.
    let topo = single(2.0, 0.5, 1.5);
    let trace = run(&topo, &[periodic(0, 1, 5)], 5, 0).unwrap();
    assert_eq!(trace.spike_times(0)[0], 1);
    // leak 0.9 with weight 1 every other step: 1, 0.9, 1.81, 1.629, 2.4661
    let topo = single(2.0, 0.9, 1.0);
    let trace = run(&topo, &[periodic(0, 2, 10)], 10, 0).unwrap();
    assert_eq!(trace.spike_times(0)[0], 4);
}

#[test]
fn empty_inputs_give_all_zero_trace() {
    let topo = single(1.0, 0.0, 1.0);
    let trace = run(&topo, &[SpikeTrain::empty(0, 25)], 25, 0).unwrap();
    assert_eq!(trace.frames.len(), 25);
    assert!(trace
        .frames
        .iter()
        .all(|f| f.fired.is_empty() && f.aggregate_potential == 0.0));
}

#[test]
fn mutual_inhibition_silences_the_undriven_neuron() {
    let mut t = CircuitTopology::default();
    t.neurons.push(NeuronSpec::new(0, 1.0));
    t.neurons.push(NeuronSpec::new(1, 1.0));
    t.synapses.push(Synapse::new(Source::Neuron(0), 1, -1.0));
    t.synapses.push(Synapse::new(Source::Neuron(1), 0, -1.0));
    t.bind_sensor(0, 0, 1.0);
    let trace = run(&t, &[periodic(0, 1, 40)], 40, 0).unwrap();
    assert!(trace.spike_times(1).is_empty());
    // refractory 1: fires every other step
    assert_eq!(trace.spike_times(0), (0..40).step_by(2).collect::<Vec<_>>());
}

#[test]
fn validate_examples() {
    let mut t = CircuitTopology::default();
    for i in 0..3 {
        t.neurons.push(NeuronSpec::new(i, 1.0));
    }
    t.atomic_units.push(AtomicUnit {
        id: 0,
        kind: UnitKind::Pdd,
        members: vec![0, 1, 2],
        source_unit: None,
    });
    assert!(t.validate().is_empty());

    t.atomic_units[0].members.pop();
    t.synapses.push(Synapse::new(Source::Neuron(0), 1, 0.0));
    let v = t.validate();
    let text: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    assert!(text.iter().any(|s| s.contains("unit size ≠ 3")), "{text:?}");
    assert!(text.iter().any(|s| s.contains("zero weight")), "{text:?}");
    assert!(v.iter().any(|x| matches!(x, Violation::ZeroWeight { .. })));
}

#[test]
fn stepping_matches_run() {
    let topo = single(2.0, 0.8, 0.9);
    let horizon = 30;
    let train = periodic(0, 3, horizon);
    let trace = run(&topo, std::slice::from_ref(&train), horizon, 0).unwrap();
    let mut sim = Simulator::new(&topo).unwrap();
    for t in 0..horizon {
        let input: Vec<u32> = if train.times.contains(&t) { vec![0] } else { vec![] };
        assert_eq!(sim.step(&input).unwrap(), trace.frames[t]);
    }
}

/// Random small network: neurons 0..n, sensors 0..s each bound to one
/// neuron, random signed neuron synapses with delays.
#[derive(Debug, Clone)]
struct Net {
    topo: CircuitTopology,
    inputs: Vec<SpikeTrain>,
    horizon: usize,
}

fn net_strategy() -> impl Strategy<Value = Net> {
    (2usize..7, 1usize..4, 10usize..60).prop_flat_map(|(n, s, horizon)| {
        let neurons = proptest::collection::vec((0.5f64..3.0, 0.0f64..=1.0, 0u32..3), n);
        let syns = proptest::collection::vec(
            (0..n as u32, 0..n as u32, prop_oneof![-2.0f64..-0.1, 0.1f64..2.0], 0u32..3),
            0..3 * n,
        );
        let bindings = proptest::collection::vec((0..n as u32, 0.2f64..2.0), s);
        let trains = proptest::collection::vec(
            proptest::collection::btree_set(0..horizon, 0..horizon),
            s,
        );
        (neurons, syns, bindings, trains).prop_map(move |(neurons, syns, bindings, trains)| {
            let mut topo = CircuitTopology::default();
            for (i, (th, leak, refr)) in neurons.into_iter().enumerate() {
                topo.neurons.push(
                    NeuronSpec::new(i as u32, th)
                        .with_leak(leak)
                        .with_refractory(refr),
                );
            }
            for (pre, post, w, d) in syns {
                topo.synapses
                    .push(Synapse::new(Source::Neuron(pre), post, w).with_delay(d));
            }
            for (sensor, (post, w)) in bindings.into_iter().enumerate() {
                topo.bind_sensor(sensor as u32, post, w);
            }
            let inputs = trains
                .into_iter()
                .enumerate()
                .map(|(i, set)| SpikeTrain::new(i as u32, set.into_iter().collect(), horizon))
                .collect();
            Net {
                topo,
                inputs,
                horizon,
            }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn runs_are_deterministic(net in net_strategy(), seed in any::<u64>()) {
        let a = run(&net.topo, &net.inputs, net.horizon, seed).unwrap();
        let b = run(&net.topo, &net.inputs, net.horizon, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn declaration_order_is_irrelevant(net in net_strategy(), rot in 0usize..7) {
        let base = run(&net.topo, &net.inputs, net.horizon, 0).unwrap();
        let mut shuffled = net.topo.clone();
        shuffled.neurons.reverse();
        let k = rot % shuffled.neurons.len();
        shuffled.neurons.rotate_left(k);
        let mut inputs = net.inputs.clone();
        inputs.reverse();
        let other = run(&shuffled, &inputs, net.horizon, 0).unwrap();
        prop_assert_eq!(base.frames, other.frames);
    }

    #[test]
    fn refractory_spacing_holds(net in net_strategy()) {
        let trace = run(&net.topo, &net.inputs, net.horizon, 0).unwrap();
        for n in &net.topo.neurons {
            let times = trace.spike_times(n.id);
            for w in times.windows(2) {
                prop_assert!(w[1] - w[0] > n.refractory as usize, "neuron {} fired at {:?}", n.id, w);
            }
        }
    }

    #[test]
    fn aggregate_is_the_potential_sum(net in net_strategy()) {
        let trace = run(&net.topo, &net.inputs, net.horizon, 0).unwrap();
        for f in &trace.frames {
            let sum: f64 = f.potentials.values().sum();
            prop_assert!((sum - f.aggregate_potential).abs() <= AGGREGATE_TOLERANCE);
            prop_assert!(f.potentials.values().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn perfect_integrators_never_lose_charge(net in net_strategy()) {
        let mut topo = net.topo.clone();
        topo.synapses.retain(|s| s.weight > 0.0);
        for n in &mut topo.neurons {
            n.leak = 1.0;
        }
        let trace = run(&topo, &net.inputs, net.horizon, 0).unwrap();
        for n in &topo.neurons {
            for w in trace.frames.windows(2) {
                if w[1].has_fired(n.id) {
                    continue;
                }
                prop_assert!(w[1].potentials[&n.id] >= w[0].potentials[&n.id]);
            }
        }
    }

    #[test]
    fn first_fire_matches_scalar_recurrence(
        weight in 0.05f64..3.0,
        threshold in 0.5f64..5.0,
        leak in 0.0f64..1.0,
        period in 1usize..40,
    ) {
        let horizon = 600;
        let topo = single(threshold, leak, weight);
        let trace = run(&topo, &[periodic(0, period, horizon)], horizon, 0).unwrap();
        prop_assert_eq!(
            trace.spike_times(0).first().copied(),
            oracle_first_fire(threshold, leak, weight, period, horizon)
        );
    }
}
