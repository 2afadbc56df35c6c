//! Synthetic stimuli: object trajectories in front of a stationary vehicle,
//! range sensing, and rate-coded spike trains.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::SpikeTrain;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid trajectory: {0}")]
    Trajectory(String),
    #[error("invalid sensor layout: {0}")]
    Layout(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("rate {rate} spikes/s with dt {dt} s gives a per-step probability above 1")]
    RateTooHigh { rate: f64, dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn lerp(&self, other: &Point, s: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * s,
            self.y + (other.y - self.y) * s,
        )
    }
}

/// Range-only sensors along the front of the vehicle, listed left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorLayout {
    pub positions: Vec<Point>,
    /// Sensing radius in meters.
    pub range: f64,
    pub rate_min: f64,
    pub rate_max: f64,
}

impl Default for SensorLayout {
    fn default() -> Self {
        Self {
            positions: [-0.3, -0.1, 0.1, 0.3]
                .into_iter()
                .map(|x| Point::new(x, 0.0))
                .collect(),
            range: 2.0,
            rate_min: 10.0,
            rate_max: 200.0,
        }
    }
}

impl SensorLayout {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Layout(m.to_string()));
        if self.positions.is_empty() {
            return bad("no sensors");
        }
        if self.positions.windows(2).any(|w| w[0].x >= w[1].x) {
            return bad("sensor positions must be strictly ordered by x");
        }
        if !(self.range > 0.0) {
            return bad("range must be positive");
        }
        if !(self.rate_min > 0.0 && self.rate_min < self.rate_max) {
            return bad("rates must satisfy 0 < rate_min < rate_max");
        }
        Ok(())
    }

    /// The same layout reflected about the vehicle's center line.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        out.positions = self
            .positions
            .iter()
            .rev()
            .map(|p| Point::new(-p.x, p.y))
            .collect();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    /// Seconds from the start of the scenario.
    pub t: f64,
    pub at: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Trajectory {
    /// Constant-speed straight segment.
    Line { start: Point, end: Point, speed: f64 },
    /// Constant angular speed around `center`, from `start_angle` towards
    /// `end_angle` (radians). Without an end angle the object circles
    /// counter-clockwise forever.
    Arc {
        center: Point,
        radius: f64,
        start_angle: f64,
        #[serde(default)]
        end_angle: Option<f64>,
        angular_speed: f64,
    },
    /// Piecewise-linear path through timed points.
    Waypoints { points: Vec<Waypoint> },
}

impl Trajectory {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Trajectory(m.to_string()));
        match self {
            Trajectory::Line { start, end, speed } => {
                if !(speed.is_finite() && *speed > 0.0) {
                    return bad("line speed must be positive");
                }
                if ![start.x, start.y, end.x, end.y].iter().all(|v| v.is_finite()) {
                    return bad("line endpoints must be finite");
                }
            }
            Trajectory::Arc {
                radius,
                angular_speed,
                start_angle,
                end_angle,
                center,
            } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad("arc radius must be positive");
                }
                if !(angular_speed.is_finite() && *angular_speed > 0.0) {
                    return bad("arc angular speed must be positive");
                }
                let finite = [center.x, center.y, *start_angle]
                    .iter()
                    .chain(end_angle.iter())
                    .all(|v| v.is_finite());
                if !finite {
                    return bad("arc parameters must be finite");
                }
            }
            Trajectory::Waypoints { points } => {
                if points.is_empty() {
                    return bad("waypoint list is empty");
                }
                if points.windows(2).any(|w| w[0].t >= w[1].t) {
                    return bad("waypoint times must be strictly increasing");
                }
            }
        }
        Ok(())
    }

    /// Position at `t` seconds. Objects hold their final position once the
    /// path is exhausted.
    pub fn position(&self, t: f64) -> Point {
        match self {
            Trajectory::Line { start, end, speed } => {
                let len = start.distance(end);
                if len == 0.0 {
                    return *start;
                }
                let s = (speed * t / len).clamp(0.0, 1.0);
                start.lerp(end, s)
            }
            Trajectory::Arc {
                center,
                radius,
                start_angle,
                end_angle,
                angular_speed,
            } => {
                let swept = angular_speed * t.max(0.0);
                let angle = match end_angle {
                    None => start_angle + swept % TAU,
                    Some(end) => {
                        let span = end - start_angle;
                        start_angle + span.signum() * swept.min(span.abs())
                    }
                };
                Point::new(
                    center.x + radius * angle.cos(),
                    center.y + radius * angle.sin(),
                )
            }
            Trajectory::Waypoints { points } => {
                let first = &points[0];
                if t <= first.t {
                    return first.at;
                }
                for w in points.windows(2) {
                    if t <= w[1].t {
                        let s = (t - w[0].t) / (w[1].t - w[0].t);
                        return w[0].at.lerp(&w[1].at, s);
                    }
                }
                points[points.len() - 1].at
            }
        }
    }

    /// Reflection about the vehicle's center line (x → −x).
    pub fn mirrored(&self) -> Self {
        let m = |p: &Point| Point::new(-p.x, p.y);
        match self {
            Trajectory::Line { start, end, speed } => Trajectory::Line {
                start: m(start),
                end: m(end),
                speed: *speed,
            },
            Trajectory::Waypoints { points } => Trajectory::Waypoints {
                points: points
                    .iter()
                    .map(|w| Waypoint { t: w.t, at: m(&w.at) })
                    .collect(),
            },
            Trajectory::Arc { .. } => {
                // An arc mirrors into a clockwise arc, which this form cannot
                // express without an end angle; sample it instead.
                Trajectory::Waypoints {
                    points: (0..=1000)
                        .map(|k| {
                            let t = k as f64 * 0.01;
                            Waypoint {
                                t,
                                at: m(&self.position(t)),
                            }
                        })
                        .collect(),
                }
            }
        }
    }
}

/// Number of simulation steps covering `duration` seconds.
pub fn step_count(duration: f64, dt: f64) -> usize {
    ((duration / dt).round() as usize).max(1)
}

/// One position per step, sampled at `t = k·dt`.
pub fn sample_path(
    traj: &Trajectory,
    duration: f64,
    dt: f64,
) -> Result<Vec<Point>, ScenarioError> {
    traj.validate()?;
    if !(duration > 0.0 && dt > 0.0) {
        return Err(ScenarioError::Scenario(
            "duration and dt must be positive".into(),
        ));
    }
    Ok((0..step_count(duration, dt))
        .map(|k| traj.position(k as f64 * dt))
        .collect())
}

/// Linear proximity code: `rate_max` at contact, `rate_min` at the edge of
/// the sensing range, silent beyond it.
pub fn spike_rate(distance: f64, layout: &SensorLayout) -> f64 {
    if distance > layout.range {
        return 0.0;
    }
    let closeness = 1.0 - distance.max(0.0) / layout.range;
    layout.rate_min + (layout.rate_max - layout.rate_min) * closeness
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Regular,
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub layout: SensorLayout,
    pub objects: Vec<Trajectory>,
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub encoding: Encoding,
}

fn default_dt() -> f64 {
    1e-3
}

impl Scenario {
    pub fn new(layout: SensorLayout, objects: Vec<Trajectory>, duration: f64) -> Self {
        Self {
            layout,
            objects,
            duration,
            dt: default_dt(),
            seed: 0,
            encoding: Encoding::Regular,
        }
    }

    pub fn with_encoding(mut self, encoding: Encoding, seed: u64) -> Self {
        self.encoding = encoding;
        self.seed = seed;
        self
    }

    pub fn horizon(&self) -> usize {
        step_count(self.duration, self.dt)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.layout.validate()?;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(ScenarioError::Scenario("duration must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ScenarioError::Scenario("dt must be positive".into()));
        }
        if self.objects.is_empty() {
            return Err(ScenarioError::Scenario("at least one object required".into()));
        }
        self.objects.iter().try_for_each(Trajectory::validate)
    }

    /// Per-step firing rate of every sensor: `rates[sensor][step]`.
    pub fn sensor_rates(&self) -> Result<Vec<Vec<f64>>, ScenarioError> {
        self.validate()?;
        let paths = self
            .objects
            .iter()
            .map(|o| sample_path(o, self.duration, self.dt))
            .collect::<Result<Vec<_>, _>>()?;
        let horizon = self.horizon();
        Ok(self
            .layout
            .positions
            .iter()
            .map(|sensor| {
                (0..horizon)
                    .map(|k| {
                        paths
                            .iter()
                            .map(|p| spike_rate(sensor.distance(&p[k]), &self.layout))
                            .fold(0.0, f64::max)
                    })
                    .collect()
            })
            .collect())
    }

    pub fn mirrored(&self) -> Self {
        Self {
            layout: self.layout.mirrored(),
            objects: self.objects.iter().map(Trajectory::mirrored).collect(),
            ..self.clone()
        }
    }
}

/// Phase-accumulator tolerance so that rates with an integral period land
/// exactly on that period despite floating-point accumulation.
const PHASE_EPS: f64 = 1e-9;

/// Deterministic spike train following a time-varying rate. A sensor fires
/// on the step it becomes active (phase zero) and thereafter whenever the
/// accumulated `rate·dt` completes a cycle, so a constant rate `r` yields
/// one spike every `1/(r·dt)` steps.
pub fn encode_regular(source: u32, rates: &[f64], dt: f64) -> SpikeTrain {
    let mut times = Vec::new();
    let mut phase: Option<f64> = None;
    for (t, &rate) in rates.iter().enumerate() {
        if rate <= 0.0 {
            phase = None;
            continue;
        }
        let p = match phase {
            None => 1.0,
            Some(p) => p + rate * dt,
        };
        if p >= 1.0 - PHASE_EPS {
            times.push(t);
            phase = Some((p - 1.0).clamp(0.0, 1.0));
        } else {
            phase = Some(p);
        }
    }
    SpikeTrain::new(source, times, rates.len())
}

/// Bernoulli spikes with per-step probability `rate·dt`.
pub fn encode_poisson(
    source: u32,
    rates: &[f64],
    dt: f64,
    seed: u64,
) -> Result<SpikeTrain, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, source));
    let mut times = Vec::new();
    for (t, &rate) in rates.iter().enumerate() {
        let p = rate * dt;
        if p > 1.0 {
            return Err(ScenarioError::RateTooHigh { rate, dt });
        }
        // Draw every step so that one sensor's stream does not depend on
        // when its rate happens to be zero.
        let u: f64 = rng.gen();
        if p > 0.0 && u < p {
            times.push(t);
        }
    }
    Ok(SpikeTrain::new(source, times, rates.len()))
}

fn stream_seed(seed: u64, sensor: u32) -> u64 {
    // splitmix64 of the pair keeps per-sensor streams decorrelated.
    let mut z = seed ^ (u64::from(sensor) + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One spike train per sensor, in layout order.
pub fn encode(scenario: &Scenario) -> Result<Vec<SpikeTrain>, ScenarioError> {
    let rates = scenario.sensor_rates()?;
    rates
        .iter()
        .enumerate()
        .map(|(i, r)| match scenario.encoding {
            Encoding::Regular => Ok(encode_regular(i as u32, r, scenario.dt)),
            Encoding::Poisson => encode_poisson(i as u32, r, scenario.dt, scenario.seed),
        })
        .collect()
}

/// Canonical scenarios on the default layout.
pub mod presets {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    /// Lateral offset of the sweep line; far enough that the sensor trains
    /// stay sparse compared with the crossing latency.
    pub const SWEEP_DISTANCE: f64 = 1.7;
    pub const SWEEP_SPEED: f64 = 20.0;

    /// Steps between successive sensors during a sweep on the default layout.
    pub fn sweep_latency_steps() -> u32 {
        let layout = SensorLayout::default();
        let spacing = layout.positions[1].x - layout.positions[0].x;
        (spacing / SWEEP_SPEED / default_dt()).round() as u32
    }

    fn sweep(from: f64, to: f64) -> Scenario {
        Scenario::new(
            SensorLayout::default(),
            vec![Trajectory::Line {
                start: Point::new(from, SWEEP_DISTANCE),
                end: Point::new(to, SWEEP_DISTANCE),
                speed: SWEEP_SPEED,
            }],
            0.3,
        )
    }

    pub fn lr_sweep() -> Scenario {
        sweep(-2.5, 2.5)
    }

    pub fn rl_sweep() -> Scenario {
        sweep(2.5, -2.5)
    }

    /// Object curving away from beyond the Far boundary out of range.
    pub fn receding_arc() -> Scenario {
        Scenario::new(
            SensorLayout::default(),
            vec![Trajectory::Arc {
                center: Point::new(0.9, 1.75),
                radius: 0.9,
                start_angle: PI,
                end_angle: Some(FRAC_PI_2),
                angular_speed: 0.5,
            }],
            3.2,
        )
    }

    /// Object crossing in front of the array on a short straight segment,
    /// so its range stays between 1.15 and 1.3 m.
    pub fn constant_range_pass() -> Scenario {
        Scenario::new(
            SensorLayout::default(),
            vec![Trajectory::Line {
                start: Point::new(-0.5, 1.15),
                end: Point::new(0.5, 1.15),
                speed: 0.5,
            }],
            2.0,
        )
    }

    /// Object curving in from inside the Near boundary to just in front of
    /// the array.
    pub fn approaching_arc() -> Scenario {
        Scenario::new(
            SensorLayout::default(),
            vec![Trajectory::Arc {
                center: Point::new(0.0, 0.3),
                radius: 0.2,
                start_angle: 0.0,
                end_angle: Some(-FRAC_PI_2),
                angular_speed: 1.0,
            }],
            1.6,
        )
    }

    /// Peak rate of the close-range layout used by [`two_objects`].
    pub const CLOSE_RANGE_RATE_MAX: f64 = 400.0;

    /// Two objects crossing slowly just in front of the vehicle, seen by
    /// sensors that saturate at [`CLOSE_RANGE_RATE_MAX`].
    pub fn two_objects() -> Scenario {
        let layout = SensorLayout {
            rate_max: CLOSE_RANGE_RATE_MAX,
            ..SensorLayout::default()
        };
        Scenario::new(
            layout,
            vec![
                Trajectory::Line {
                    start: Point::new(-0.6, 0.25),
                    end: Point::new(0.6, 0.25),
                    speed: 0.5,
                },
                Trajectory::Line {
                    start: Point::new(0.6, 0.15),
                    end: Point::new(-0.6, 0.15),
                    speed: 0.5,
                },
            ],
            2.4,
        )
    }

    pub fn by_name(name: &str) -> Option<Scenario> {
        Some(match name {
            "lr-sweep" => lr_sweep(),
            "rl-sweep" => rl_sweep(),
            "receding-arc" => receding_arc(),
            "constant-range" => constant_range_pass(),
            "approaching-arc" => approaching_arc(),
            "two-objects" => two_objects(),
            _ => return None,
        })
    }

    pub const NAMES: [&str; 6] = [
        "lr-sweep",
        "rl-sweep",
        "receding-arc",
        "constant-range",
        "approaching-arc",
        "two-objects",
    ];
}
