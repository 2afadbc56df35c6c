//! Read-outs over simulated traces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{CircuitTopology, NeuronId, SimTrace, UnitId, UnitKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("unknown unit {0}")]
    UnknownUnit(UnitId),
    #[error("unit {unit} is a {found:?} unit, expected {expected:?}")]
    WrongKind {
        unit: UnitId,
        expected: UnitKind,
        found: UnitKind,
    },
    #[error("window must be at least one step")]
    ZeroWindow,
    #[error("activity threshold must lie in (0, 1], got {0}")]
    BadThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "LR")]
    LeftToRight,
    #[serde(rename = "RL")]
    RightToLeft,
    #[serde(rename = "none")]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Proximity {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "F")]
    Far,
    #[serde(rename = "M")]
    Middle,
    #[serde(rename = "N")]
    Near,
}

/// Which member of a PDD unit fired, step by step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationPattern {
    pub unit: UnitId,
    pub entries: Vec<(usize, u8)>,
}

impl ActivationPattern {
    pub fn indices(&self) -> Vec<u8> {
        self.entries.iter().map(|&(_, i)| i).collect()
    }

    pub fn within(&self, start: usize, end: usize) -> ActivationPattern {
        ActivationPattern {
            unit: self.unit,
            entries: self
                .entries
                .iter()
                .copied()
                .filter(|&(t, _)| t >= start && t <= end)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    /// Inclusive step range.
    pub window: (usize, usize),
    pub direction: Direction,
    pub proximity: Proximity,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeizureEvent {
    pub t_start: usize,
    pub t_end: usize,
    pub peak_activity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeizureReport {
    pub events: Vec<SeizureEvent>,
    pub activity_threshold: f64,
    pub window: usize,
    /// Highest windowed activity seen anywhere in the trace.
    pub peak_activity: f64,
}

fn unit_of_kind<'a>(
    topology: &'a CircuitTopology,
    unit: UnitId,
    kind: UnitKind,
) -> Result<&'a [NeuronId], DecodeError> {
    let u = topology.unit(unit).ok_or(DecodeError::UnknownUnit(unit))?;
    if u.kind != kind {
        return Err(DecodeError::WrongKind {
            unit,
            expected: kind,
            found: u.kind,
        });
    }
    Ok(&u.members)
}

/// Extracts the member index that fired at each non-silent step. If several
/// members fired on one step (only possible without the unit's inhibition),
/// the lowest index is reported.
pub fn trace_pattern(
    trace: &SimTrace,
    topology: &CircuitTopology,
    unit: UnitId,
) -> Result<ActivationPattern, DecodeError> {
    let members = unit_of_kind(topology, unit, UnitKind::Pdd)?;
    let entries = trace
        .frames
        .iter()
        .filter_map(|f| {
            members
                .iter()
                .position(|&m| f.has_fired(m))
                .map(|k| (f.t, k as u8))
        })
        .collect();
    Ok(ActivationPattern { unit, entries })
}

/// Signed steps between consecutive entries: +1 for an ascending move
/// (mod 3), −1 for a descending one, repeats skipped.
fn step_signs(indices: &[u8]) -> Vec<i8> {
    indices
        .windows(2)
        .filter_map(|w| match (3 + w[1] as i16 - w[0] as i16) % 3 {
            1 => Some(1),
            2 => Some(-1),
            _ => None,
        })
        .collect()
}

/// Sum of signs and number of informative pairs.
pub fn direction_votes(pattern: &ActivationPattern) -> (i64, usize) {
    let signs = step_signs(&pattern.indices());
    (signs.iter().map(|&s| s as i64).sum(), signs.len())
}

fn direction_from_votes(sum: i64, count: usize) -> (Direction, f64) {
    if count == 0 || sum == 0 {
        return (Direction::None, 0.0);
    }
    let mean = sum as f64 / count as f64;
    let dir = if mean > 0.0 {
        Direction::LeftToRight
    } else {
        Direction::RightToLeft
    };
    (dir, mean.abs())
}

pub fn classify_direction(pattern: &ActivationPattern) -> (Direction, f64) {
    let (sum, count) = direction_votes(pattern);
    direction_from_votes(sum, count)
}

/// Pools the votes of several units into one decision.
pub fn classify_direction_pooled<'a>(
    patterns: impl IntoIterator<Item = &'a ActivationPattern>,
) -> (Direction, f64) {
    let (sum, count) = patterns
        .into_iter()
        .map(direction_votes)
        .fold((0, 0), |(s, c), (s2, c2)| (s + s2, c + c2));
    direction_from_votes(sum, count)
}

/// Inclusive `[start, end]` windows tiling `0..horizon`.
pub fn windows(horizon: usize, window: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..horizon)
        .step_by(window.max(1))
        .map(move |s| (s, (s + window).min(horizon) - 1))
}

/// Priority state of a CMD unit over each window: N beats M beats F.
pub fn decode_proximity(
    trace: &SimTrace,
    topology: &CircuitTopology,
    unit: UnitId,
    window: usize,
) -> Result<Vec<((usize, usize), Proximity)>, DecodeError> {
    if window == 0 {
        return Err(DecodeError::ZeroWindow);
    }
    let members = unit_of_kind(topology, unit, UnitKind::Cmd)?;
    let states = [Proximity::Near, Proximity::Middle, Proximity::Far];
    Ok(windows(trace.frames.len(), window)
        .map(|(s, e)| {
            let frames = &trace.frames[s..=e];
            let state = members
                .iter()
                .zip(states)
                .find(|(&m, _)| frames.iter().any(|f| f.has_fired(m)))
                .map_or(Proximity::None, |(_, st)| st);
            ((s, e), state)
        })
        .collect())
}

/// Members of a unit that fired at least once in `frames[start..=end]`, in
/// member order.
pub fn fired_members(
    trace: &SimTrace,
    members: &[NeuronId],
    start: usize,
    end: usize,
) -> Vec<usize> {
    let frames = &trace.frames[start..=end.min(trace.frames.len() - 1)];
    members
        .iter()
        .enumerate()
        .filter(|(_, &m)| frames.iter().any(|f| f.has_fired(m)))
        .map(|(k, _)| k)
        .collect()
}

/// Direction and proximity per window for a PDD unit and the CMD unit it
/// feeds.
pub fn detect(
    trace: &SimTrace,
    topology: &CircuitTopology,
    pdd_unit: UnitId,
    cmd_unit: Option<UnitId>,
    window: usize,
) -> Result<Vec<DetectionEvent>, DecodeError> {
    let pattern = trace_pattern(trace, topology, pdd_unit)?;
    let proximity = match cmd_unit {
        Some(u) => decode_proximity(trace, topology, u, window)?,
        None => windows(trace.frames.len(), window)
            .map(|w| (w, Proximity::None))
            .collect(),
    };
    Ok(proximity
        .into_iter()
        .map(|((s, e), state)| {
            let (direction, confidence) = classify_direction(&pattern.within(s, e));
            DetectionEvent {
                window: (s, e),
                direction,
                proximity: state,
                confidence,
            }
        })
        .collect())
}

/// Read-out for coincidence baselines, whose only outputs are detector
/// neurons without outgoing synapses. A window reads LR when any of them
/// fired in it.
pub fn detect_coincidence(
    trace: &SimTrace,
    topology: &CircuitTopology,
    window: usize,
) -> Result<Vec<DetectionEvent>, DecodeError> {
    if window == 0 {
        return Err(DecodeError::ZeroWindow);
    }
    let outputs = topology.output_neurons();
    Ok(windows(trace.frames.len(), window)
        .map(|(s, e)| {
            let hit = trace.frames[s..=e]
                .iter()
                .any(|f| outputs.iter().any(|&n| f.has_fired(n)));
            DetectionEvent {
                window: (s, e),
                direction: if hit { Direction::LeftToRight } else { Direction::None },
                proximity: Proximity::None,
                confidence: if hit { 1.0 } else { 0.0 },
            }
        })
        .collect())
}

/// Whole-trace verdict of a coincidence baseline.
pub fn coincidence_direction(trace: &SimTrace, topology: &CircuitTopology) -> Direction {
    let outputs = topology.output_neurons();
    let fired = trace
        .frames
        .iter()
        .any(|f| outputs.iter().any(|&n| f.has_fired(n)));
    if fired {
        Direction::LeftToRight
    } else {
        Direction::None
    }
}

pub fn aggregate_potential(trace: &SimTrace) -> Vec<f64> {
    trace.frames.iter().map(|f| f.aggregate_potential).collect()
}

/// Per-step firing as a fraction of the population's sustainable maximum:
/// a neuron with refractory period `r` can fire at most once every `r + 1`
/// steps, so it contributes `1/(r + 1)` to the denominator. With zero
/// refractory periods this is simply fired count over neuron count.
pub fn activity_series(trace: &SimTrace, topology: &CircuitTopology) -> Vec<f64> {
    let capacity: f64 = topology
        .neurons
        .iter()
        .map(|n| 1.0 / (n.refractory as f64 + 1.0))
        .sum();
    if capacity == 0.0 {
        return vec![0.0; trace.frames.len()];
    }
    trace
        .frames
        .iter()
        .map(|f| f.fired.len() as f64 / capacity)
        .collect()
}

/// Plain fired-count over neuron-count per step.
pub fn firing_fraction_series(trace: &SimTrace) -> Vec<f64> {
    let n = trace.neuron_count().max(1) as f64;
    trace
        .frames
        .iter()
        .map(|f| f.fired.len() as f64 / n)
        .collect()
}

/// Flags maximal intervals whose sliding-window mean activity exceeds
/// `activity_threshold`.
pub fn detect_seizures(
    trace: &SimTrace,
    topology: &CircuitTopology,
    activity_threshold: f64,
    window: usize,
) -> Result<SeizureReport, DecodeError> {
    if !(activity_threshold > 0.0 && activity_threshold <= 1.0) {
        return Err(DecodeError::BadThreshold(activity_threshold));
    }
    if window == 0 {
        return Err(DecodeError::ZeroWindow);
    }
    let activity = activity_series(trace, topology);
    Ok(seizures_in_series(&activity, activity_threshold, window))
}

/// Seizure detection over an arbitrary activity series.
pub fn seizures_in_series(activity: &[f64], threshold: f64, window: usize) -> SeizureReport {
    let n = activity.len();
    let w = window.min(n).max(1);
    let mut events: Vec<SeizureEvent> = Vec::new();
    let mut peak_activity = 0.0f64;
    if n > 0 {
        let mut sum: f64 = activity[..w].iter().sum();
        for start in 0..=n - w {
            if start > 0 {
                sum += activity[start + w - 1] - activity[start - 1];
            }
            let mean = (sum / w as f64).clamp(0.0, 1.0);
            peak_activity = peak_activity.max(mean);
            if mean <= threshold {
                continue;
            }
            let end = start + w - 1;
            match events.last_mut() {
                Some(ev) if start <= ev.t_end + 1 => {
                    ev.t_end = end;
                    ev.peak_activity = ev.peak_activity.max(mean);
                }
                _ => events.push(SeizureEvent {
                    t_start: start,
                    t_end: end,
                    peak_activity: mean,
                }),
            }
        }
    }
    SeizureReport {
        events,
        activity_threshold: threshold,
        window,
        peak_activity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_ctd, CtdConfig};
    use crate::engine::{run, TraceFrame};

    fn pattern(indices: &[u8]) -> ActivationPattern {
        ActivationPattern {
            unit: 0,
            entries: indices
                .iter()
                .enumerate()
                .map(|(t, &i)| (t * 5, i))
                .collect(),
        }
    }

    #[test]
    fn direction_rules() {
        assert_eq!(
            classify_direction(&pattern(&[0, 1, 2, 0, 1, 2])),
            (Direction::LeftToRight, 1.0)
        );
        assert_eq!(
            classify_direction(&pattern(&[2, 1, 0, 2, 1])),
            (Direction::RightToLeft, 1.0)
        );
        let (d, c) = classify_direction(&pattern(&[0, 1, 2, 1]));
        assert_eq!(d, Direction::LeftToRight);
        assert!((c - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(classify_direction(&pattern(&[])), (Direction::None, 0.0));
        assert_eq!(classify_direction(&pattern(&[1, 1, 1])), (Direction::None, 0.0));
        assert_eq!(classify_direction(&pattern(&[0, 1, 0])), (Direction::None, 0.0));
    }

    fn synthetic_trace(n_neurons: u32, fired: &[Vec<NeuronId>]) -> SimTrace {
        SimTrace {
            seed: 0,
            horizon: fired.len(),
            neuron_ids: (0..n_neurons).collect(),
            frames: fired
                .iter()
                .enumerate()
                .map(|(t, f)| TraceFrame {
                    t,
                    fired: f.clone(),
                    potentials: (0..n_neurons).map(|i| (i, 0.0)).collect(),
                    aggregate_potential: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn proximity_priority() {
        let topo = build_ctd(&CtdConfig::with_sensors(3)).unwrap();
        // CMD unit 1 holds neurons 3 (N), 4 (M), 5 (F).
        let trace = synthetic_trace(
            6,
            &[
                vec![5],
                vec![],
                vec![4],
                vec![5],
                vec![3],
                vec![4],
                vec![5],
                vec![],
                vec![],
            ],
        );
        let states: Vec<Proximity> = decode_proximity(&trace, &topo, 1, 2)
            .unwrap()
            .into_iter()
            .map(|(_, s)| s)
            .collect();
        assert_eq!(
            states,
            vec![
                Proximity::Far,
                Proximity::Middle,
                Proximity::Near,
                Proximity::Far,
                Proximity::None
            ]
        );
    }

    #[test]
    fn unit_kind_errors() {
        let topo = build_ctd(&CtdConfig::with_sensors(3)).unwrap();
        let trace = run(&topo, &[], 5, 0).unwrap();
        assert!(matches!(
            trace_pattern(&trace, &topo, 1),
            Err(DecodeError::WrongKind { .. })
        ));
        assert_eq!(
            trace_pattern(&trace, &topo, 9).unwrap_err(),
            DecodeError::UnknownUnit(9)
        );
        assert!(decode_proximity(&trace, &topo, 0, 5).is_err());
        assert_eq!(
            decode_proximity(&trace, &topo, 1, 0).unwrap_err(),
            DecodeError::ZeroWindow
        );
        assert!(trace_pattern(&trace, &topo, 0).unwrap().entries.is_empty());
    }

    #[test]
    fn seizure_extremes() {
        let topo = build_ctd(&CtdConfig::with_sensors(3)).unwrap();
        let silent = run(&topo, &[], 100, 0).unwrap();
        let r = detect_seizures(&silent, &topo, 0.5, 10).unwrap();
        assert!(r.events.is_empty());
        assert_eq!(r.peak_activity, 0.0);

        let all = vec![1.0; 100];
        let r = seizures_in_series(&all, 0.5, 10);
        assert_eq!(r.events.len(), 1);
        assert_eq!((r.events[0].t_start, r.events[0].t_end), (0, 99));
        assert_eq!(r.events[0].peak_activity, 1.0);

        assert!(detect_seizures(&silent, &topo, 0.0, 10).is_err());
        assert!(detect_seizures(&silent, &topo, 1.5, 10).is_err());
    }

    #[test]
    fn seizure_intervals_are_disjoint() {
        let mut a = vec![0.0; 60];
        a[5..15].fill(1.0);
        a[40..50].fill(1.0);
        let r = seizures_in_series(&a, 0.5, 8);
        assert_eq!(r.events.len(), 2);
        assert!(r.events[0].t_end < r.events[1].t_start);
    }

    #[test]
    fn activity_normalizes_by_capacity() {
        let topo = build_ctd(&CtdConfig::with_sensors(3)).unwrap();
        // Six neurons with refractory 1: capacity three spikes per step.
        let trace = synthetic_trace(6, &[vec![0, 1, 2], vec![]]);
        assert_eq!(activity_series(&trace, &topo), vec![1.0, 0.0]);
        assert_eq!(firing_fraction_series(&trace), vec![0.5, 0.0]);
    }
}
