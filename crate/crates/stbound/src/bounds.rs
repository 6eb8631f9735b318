//! Spacetime bounds: per-channel deviation limits around a reference motion
//! plus forbidden state regions. Checking an event against the bound set is
//! the early-termination trigger for training episodes.

use thiserror::Error;

use crate::dynsys::{SystemKind, SystemSpec, SystemState};
use crate::reference::ReferenceMotion;

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("event time {t} outside horizon [0, {horizon}]")]
    OutsideHorizon { t: f64, horizon: f64 },
    #[error("unknown preset '{0}', expected default|loose|tight")]
    UnknownPreset(String),
    #[error("unknown bound channel '{0}' for this system")]
    UnknownChannel(String),
    #[error("reference is missing channel '{0}' required by bound '{1}'")]
    MissingRefChannel(String, String),
    #[error("sigma must be positive (channel '{0}')")]
    NonPositiveSigma(String),
}

/// A state paired with a time stamp; the atom of spacetime.
#[derive(Debug, Clone)]
pub struct Event {
    pub state: SystemState,
    pub t: f64,
}

impl Event {
    pub fn new(state: SystemState, t: f64) -> Self {
        Event { state, t }
    }
}

/// Scalar read off a system state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coord {
    Q(usize),
    Qdot(usize),
    /// Pendulum tip x = l*sin(theta)
    TipX { length: f64 },
    /// Pendulum tip y = -l*cos(theta)
    TipY { length: f64 },
}

impl Coord {
    pub fn eval(&self, s: &SystemState) -> f64 {
        match *self {
            Coord::Q(i) => s.q[i],
            Coord::Qdot(i) => s.qdot[i],
            Coord::TipX { length } => length * s.q[0].sin(),
            Coord::TipY { length } => -length * s.q[0].cos(),
        }
    }
}

/// Unit class of a channel; presets assign sigma by class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelClass {
    Position,
    Angle,
    Endpoint,
    Velocity,
}

/// How a channel's deviation from the reference is measured.
#[derive(Debug, Clone, PartialEq)]
pub enum Extractor {
    /// |coord(state) - ref_channel(t)|
    AbsDiff { coord: Coord, ref_channel: String },
    /// angular difference wrapped to [0, pi]
    AngleDiff { coord: Coord, ref_channel: String },
    /// Euclidean distance between a derived planar point and its reference
    PlanarDistance {
        coords: [Coord; 2],
        ref_channels: [String; 2],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub name: String,
    pub class: ChannelClass,
    pub extractor: Extractor,
}

/// Wrap an angular difference into [0, pi].
pub fn wrapped_angle_dist(a: f64, b: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut d = (a - b) % two_pi;
    if d > std::f64::consts::PI {
        d -= two_pi;
    } else if d < -std::f64::consts::PI {
        d += two_pi;
    }
    d.abs()
}

/// Nonnegative deviation of an event from the reference on one channel.
pub fn deviation(ch: &ChannelSpec, motion: &ReferenceMotion, e: &Event) -> Result<f64, BoundError> {
    let phase = motion.phase_of(e.t);
    let refv = |name: &str| -> Result<f64, BoundError> {
        let idx = motion
            .channel_index(name)
            .ok_or_else(|| BoundError::MissingRefChannel(name.into(), ch.name.clone()))?;
        Ok(motion.value_at(idx, phase))
    };
    match &ch.extractor {
        Extractor::AbsDiff { coord, ref_channel } => Ok((coord.eval(&e.state) - refv(ref_channel)?).abs()),
        Extractor::AngleDiff { coord, ref_channel } => {
            Ok(wrapped_angle_dist(coord.eval(&e.state), refv(ref_channel)?))
        }
        Extractor::PlanarDistance { coords, ref_channels } => {
            let dx = coords[0].eval(&e.state) - refv(&ref_channels[0])?;
            let dy = coords[1].eval(&e.state) - refv(&ref_channels[1])?;
            Ok((dx * dx + dy * dy).sqrt())
        }
    }
}

/// Channel deviation limit: constant or piecewise-linear in time.
#[derive(Debug, Clone, PartialEq)]
pub enum Sigma {
    Constant(f64),
    /// (t, sigma) knots, t strictly increasing; clamped outside the knots.
    Table(Vec<(f64, f64)>),
}

impl Sigma {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Sigma::Constant(s) => *s,
            Sigma::Table(knots) => {
                if knots.is_empty() {
                    return f64::INFINITY;
                }
                if t <= knots[0].0 {
                    return knots[0].1;
                }
                if t >= knots[knots.len() - 1].0 {
                    return knots[knots.len() - 1].1;
                }
                let hi = knots.partition_point(|(kt, _)| *kt <= t);
                let (t0, s0) = knots[hi - 1];
                let (t1, s1) = knots[hi];
                s0 + (s1 - s0) * (t - t0) / (t1 - t0)
            }
        }
    }

    pub fn min_value(&self) -> f64 {
        match self {
            Sigma::Constant(s) => *s,
            Sigma::Table(knots) => knots.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn scaled(&self, factor: f64) -> Sigma {
        match self {
            Sigma::Constant(s) => Sigma::Constant(s * factor),
            Sigma::Table(k) => Sigma::Table(k.iter().map(|&(t, s)| (t, s * factor)).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Le,
    Ge,
}

/// Half-space predicate on one state coordinate, active on a time window.
#[derive(Debug, Clone, PartialEq)]
pub struct ForbiddenRegion {
    pub name: String,
    pub coord: Coord,
    pub op: CmpOp,
    pub value: f64,
    /// [t_a, t_b] absolute times
    pub window: (f64, f64),
}

impl ForbiddenRegion {
    pub fn contains(&self, e: &Event) -> bool {
        if e.t < self.window.0 || e.t > self.window.1 {
            return false;
        }
        let x = self.coord.eval(&e.state);
        match self.op {
            CmpOp::Le => x <= self.value,
            CmpOp::Ge => x >= self.value,
        }
    }
}

/// Result of checking one event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundCheck {
    Within,
    Violated(String),
}

/// Per-channel sigmas plus forbidden regions over a time horizon.
#[derive(Debug, Clone)]
pub struct SpacetimeBoundSet {
    /// checked in declaration order
    pub channels: Vec<(ChannelSpec, Sigma)>,
    pub forbidden: Vec<ForbiddenRegion>,
    pub horizon: f64,
}

impl SpacetimeBoundSet {
    pub fn new(channels: Vec<(ChannelSpec, Sigma)>, forbidden: Vec<ForbiddenRegion>, horizon: f64) -> Result<Self, BoundError> {
        for (ch, sigma) in &channels {
            if sigma.min_value() <= 0.0 {
                return Err(BoundError::NonPositiveSigma(ch.name.clone()));
            }
        }
        Ok(SpacetimeBoundSet {
            channels,
            forbidden,
            horizon,
        })
    }

    /// Sigma tables for cyclic motions index time within the cycle.
    fn sigma_time(&self, motion: &ReferenceMotion, t: f64) -> f64 {
        if motion.cyclic() {
            let cyc = motion.cycle_duration();
            t - (t / cyc).floor() * cyc
        } else {
            t
        }
    }

    /// Within iff every channel deviation <= sigma(t) (inclusive) and no
    /// forbidden region contains the state. Violations report the first
    /// failing channel in declaration order.
    pub fn check_event(&self, motion: &ReferenceMotion, e: &Event) -> Result<BoundCheck, BoundError> {
        if e.t < 0.0 || e.t > self.horizon {
            return Err(BoundError::OutsideHorizon {
                t: e.t,
                horizon: self.horizon,
            });
        }
        let st = self.sigma_time(motion, e.t);
        for (ch, sigma) in &self.channels {
            let dev = deviation(ch, motion, e)?;
            if dev > sigma.at(st) {
                return Ok(BoundCheck::Violated(ch.name.clone()));
            }
        }
        for fr in &self.forbidden {
            if fr.contains(e) {
                return Ok(BoundCheck::Violated(fr.name.clone()));
            }
        }
        Ok(BoundCheck::Within)
    }
}

/// Named sigma presets drawn from the deviation limits used with the full
/// character: position channels 0.2 m, angle channels 0.7 rad, end-point
/// channels 0.5 m. `loose` doubles every sigma, `tight` halves it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Default,
    Loose,
    Tight,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self, BoundError> {
        match name {
            "default" => Ok(Preset::Default),
            "loose" => Ok(Preset::Loose),
            "tight" => Ok(Preset::Tight),
            other => Err(BoundError::UnknownPreset(other.into())),
        }
    }

    pub fn factor(self) -> f64 {
        match self {
            Preset::Default => 1.0,
            Preset::Loose => 2.0,
            Preset::Tight => 0.5,
        }
    }

    /// None for classes that presets do not bound (velocities).
    pub fn sigma_for(self, class: ChannelClass) -> Option<f64> {
        let base = match class {
            ChannelClass::Position => 0.2,
            ChannelClass::Angle => 0.7,
            ChannelClass::Endpoint => 0.5,
            ChannelClass::Velocity => return None,
        };
        Some(base * self.factor())
    }
}

/// All boundable channels a system exposes, in declaration order.
pub fn system_channels(spec: &SystemSpec) -> Vec<ChannelSpec> {
    match spec.kind {
        SystemKind::DoubleIntegrator1D => vec![
            ChannelSpec {
                name: "x".into(),
                class: ChannelClass::Position,
                extractor: Extractor::AbsDiff {
                    coord: Coord::Q(0),
                    ref_channel: "x".into(),
                },
            },
            ChannelSpec {
                name: "v".into(),
                class: ChannelClass::Velocity,
                extractor: Extractor::AbsDiff {
                    coord: Coord::Qdot(0),
                    ref_channel: "v".into(),
                },
            },
        ],
        SystemKind::PlanarPointMass => vec![
            ChannelSpec {
                name: "x".into(),
                class: ChannelClass::Position,
                extractor: Extractor::AbsDiff {
                    coord: Coord::Q(0),
                    ref_channel: "x".into(),
                },
            },
            ChannelSpec {
                name: "y".into(),
                class: ChannelClass::Position,
                extractor: Extractor::AbsDiff {
                    coord: Coord::Q(1),
                    ref_channel: "y".into(),
                },
            },
            ChannelSpec {
                name: "vx".into(),
                class: ChannelClass::Velocity,
                extractor: Extractor::AbsDiff {
                    coord: Coord::Qdot(0),
                    ref_channel: "vx".into(),
                },
            },
            ChannelSpec {
                name: "vy".into(),
                class: ChannelClass::Velocity,
                extractor: Extractor::AbsDiff {
                    coord: Coord::Qdot(1),
                    ref_channel: "vy".into(),
                },
            },
        ],
        SystemKind::Pendulum => vec![
            ChannelSpec {
                name: "theta".into(),
                class: ChannelClass::Angle,
                extractor: Extractor::AngleDiff {
                    coord: Coord::Q(0),
                    ref_channel: "theta".into(),
                },
            },
            ChannelSpec {
                name: "omega".into(),
                class: ChannelClass::Velocity,
                extractor: Extractor::AbsDiff {
                    coord: Coord::Qdot(0),
                    ref_channel: "omega".into(),
                },
            },
            ChannelSpec {
                name: "tip".into(),
                class: ChannelClass::Endpoint,
                extractor: Extractor::PlanarDistance {
                    coords: [
                        Coord::TipX { length: spec.length },
                        Coord::TipY { length: spec.length },
                    ],
                    ref_channels: ["tip_x".into(), "tip_y".into()],
                },
            },
        ],
    }
}

/// Build a bound set from a preset: every preset-covered channel of the
/// system whose reference channels exist in `motion`.
pub fn preset_bounds(
    preset: Preset,
    spec: &SystemSpec,
    motion: &ReferenceMotion,
    horizon: f64,
) -> Result<SpacetimeBoundSet, BoundError> {
    let mut channels = Vec::new();
    for ch in system_channels(spec) {
        let Some(sigma) = preset.sigma_for(ch.class) else {
            continue;
        };
        let present = match &ch.extractor {
            Extractor::AbsDiff { ref_channel, .. } | Extractor::AngleDiff { ref_channel, .. } => {
                motion.has_channel(ref_channel)
            }
            Extractor::PlanarDistance { ref_channels, .. } => {
                ref_channels.iter().all(|c| motion.has_channel(c))
            }
        };
        if present {
            channels.push((ch, Sigma::Constant(sigma)));
        }
    }
    SpacetimeBoundSet::new(channels, Vec::new(), horizon)
}
