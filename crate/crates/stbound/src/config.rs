//! Run configuration: a line-based `section.key = value` format with a
//! fixed schema, defaults for every key, and a faithful emitter so a parsed
//! config can be echoed back byte-comparably into run manifests.

use std::path::Path;

use thiserror::Error;

use crate::bounds::{
    preset_bounds, system_channels, BoundError, ChannelSpec, CmpOp, Coord, ForbiddenRegion,
    Preset, Sigma, SpacetimeBoundSet,
};
use crate::dynsys::{SystemKind, SystemSpec};
use crate::initstate::EliteSign;
use crate::reference::{RefError, ReferenceMotion};
use crate::rlcore::TrainConfig;
use crate::style::{StyleConfig, StyleMode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("key '{key}': {msg}")]
    BadValue { key: String, msg: String },
    #[error("line {0}: expected 'section.key = value'")]
    BadLine(usize),
    #[error("referenced file '{0}' does not exist")]
    MissingFile(String),
    #[error("config file: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Bounds(#[from] BoundError),
    #[error(transparent)]
    Reference(#[from] RefError),
}

/// Where the reference motion comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSource {
    /// CSV file path
    File(String),
    /// generated reference, by name
    Builtin(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSection {
    pub kind: SystemKind,
    pub a_max: f64,
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub kp: f64,
    pub kd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSection {
    pub source: ReferenceSource,
    pub cyclic: bool,
    pub cycle_duration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSection {
    pub enabled: bool,
    pub preset: Preset,
    pub horizon: f64,
    /// per-channel sigma overrides, by channel name
    pub overrides: Vec<(String, Sigma)>,
    pub forbidden: Vec<ForbiddenRegion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSection {
    pub core: TrainConfig,
    /// number of training epochs to run
    pub epochs: usize,
    pub hidden: Vec<usize>,
    pub checkpoint_every: usize,
    pub init_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// uniform reference state initialization
    Rsi,
    /// importance sampling over motion segments
    Importance,
    /// importance sampling plus evolving elite buffers
    Elite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitSection {
    pub mode: InitMode,
    pub segments: usize,
    pub buffer: usize,
    pub u: f64,
    pub elite_sign: EliteSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StyleSection {
    /// None disables the style term
    pub mode: Option<StyleMode>,
    pub e_min: f64,
    pub e_max: f64,
    pub alpha: f64,
    /// style weight in the two-term composition; only used when imitation
    /// is enabled as well
    pub w_s: f64,
    pub imitation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub seed: u64,
    pub out: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemSection,
    pub reference: ReferenceSection,
    pub bound: BoundSection,
    pub train: TrainSection,
    pub init: InitSection,
    pub style: StyleSection,
    pub run: RunSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: SystemSection {
                kind: SystemKind::DoubleIntegrator1D,
                a_max: 2.0,
                mass: 1.0,
                length: 1.0,
                gravity: 9.81,
                kp: 40.0,
                kd: 8.0,
            },
            reference: ReferenceSection {
                source: ReferenceSource::Builtin("di_rest_to_rest".into()),
                cyclic: false,
                cycle_duration: None,
            },
            bound: BoundSection {
                enabled: true,
                preset: Preset::Default,
                horizon: 20.0,
                overrides: Vec::new(),
                forbidden: Vec::new(),
            },
            train: TrainSection {
                core: TrainConfig::default(),
                epochs: 20,
                hidden: vec![64, 64],
                checkpoint_every: 10,
                init_std: 0.3,
            },
            init: InitSection {
                mode: InitMode::Rsi,
                segments: 10,
                buffer: 32,
                u: 0.2,
                elite_sign: EliteSign::AsPrinted,
            },
            style: StyleSection {
                mode: None,
                e_min: 20.0,
                e_max: 100.0,
                alpha: 0.12,
                w_s: 0.5,
                imitation: false,
            },
            run: RunSection {
                seed: 0,
                out: "out".into(),
            },
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        msg: format!("expected a number, got '{v}'"),
    })
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        msg: format!("expected a nonnegative integer, got '{v}'"),
    })
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            msg: format!("expected true|false, got '{v}'"),
        }),
    }
}

/// `[(t0,s0),(t1,s1),...]` or a single number.
fn parse_sigma(key: &str, v: &str) -> Result<Sigma, ConfigError> {
    let v = v.trim();
    if !v.starts_with('[') {
        return Ok(Sigma::Constant(parse_f64(key, v)?));
    }
    let inner = v
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| ConfigError::BadValue {
            key: key.into(),
            msg: "unterminated sigma table".into(),
        })?;
    let mut knots = Vec::new();
    for part in inner.split(')') {
        let part = part.trim().trim_start_matches(',').trim();
        if part.is_empty() {
            continue;
        }
        let pair = part.strip_prefix('(').ok_or_else(|| ConfigError::BadValue {
            key: key.into(),
            msg: format!("expected '(t,sigma)', got '{part}'"),
        })?;
        let mut it = pair.split(',');
        let t = parse_f64(key, it.next().unwrap_or("").trim())?;
        let s = parse_f64(key, it.next().unwrap_or("").trim())?;
        knots.push((t, s));
    }
    if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(ConfigError::BadValue {
            key: key.into(),
            msg: "sigma table times must strictly increase".into(),
        });
    }
    Ok(Sigma::Table(knots))
}

fn emit_sigma(s: &Sigma) -> String {
    match s {
        Sigma::Constant(c) => format!("{c}"),
        Sigma::Table(knots) => {
            let parts: Vec<String> = knots.iter().map(|(t, s)| format!("({t},{s})")).collect();
            format!("[{}]", parts.join(","))
        }
    }
}

/// `<coord> <= <value> @ [ta,tb]` with coord one of q0,q1,qdot0,qdot1.
fn parse_forbidden(key: &str, name: &str, v: &str) -> Result<ForbiddenRegion, ConfigError> {
    let bad = |msg: &str| ConfigError::BadValue {
        key: key.into(),
        msg: msg.into(),
    };
    let (pred, window) = v.split_once('@').ok_or_else(|| {
        bad("expected '<coord> <op> <value> @ [ta,tb]'")
    })?;
    let toks: Vec<&str> = pred.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(bad("expected '<coord> <op> <value>' before '@'"));
    }
    let coord = match toks[0] {
        "q0" => Coord::Q(0),
        "q1" => Coord::Q(1),
        "qdot0" => Coord::Qdot(0),
        "qdot1" => Coord::Qdot(1),
        other => return Err(bad(&format!("unknown coordinate '{other}'"))),
    };
    let op = match toks[1] {
        "<=" => CmpOp::Le,
        ">=" => CmpOp::Ge,
        other => return Err(bad(&format!("unknown operator '{other}'"))),
    };
    let value = parse_f64(key, toks[2])?;
    let w = window
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| bad("expected window '[ta,tb]'"))?;
    let mut it = w.split(',');
    let ta = parse_f64(key, it.next().unwrap_or("").trim())?;
    let tb = parse_f64(key, it.next().unwrap_or("").trim())?;
    if tb < ta {
        return Err(bad("window must have ta <= tb"));
    }
    Ok(ForbiddenRegion {
        name: name.into(),
        coord,
        op,
        value,
        window: (ta, tb),
    })
}

fn emit_forbidden(fr: &ForbiddenRegion) -> String {
    let coord = match fr.coord {
        Coord::Q(0) => "q0",
        Coord::Q(1) => "q1",
        Coord::Qdot(0) => "qdot0",
        Coord::Qdot(1) => "qdot1",
        _ => "q0",
    };
    let op = match fr.op {
        CmpOp::Le => "<=",
        CmpOp::Ge => ">=",
    };
    format!(
        "{coord} {op} {} @ [{},{}]",
        fr.value, fr.window.0, fr.window.1
    )
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::BadLine(ln + 1))?;
            cfg.apply(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn apply(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "system.kind" => {
                self.system.kind = match v {
                    "double_integrator" => SystemKind::DoubleIntegrator1D,
                    "point_mass" => SystemKind::PlanarPointMass,
                    "pendulum" => SystemKind::Pendulum,
                    other => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            msg: format!(
                                "expected double_integrator|point_mass|pendulum, got '{other}'"
                            ),
                        })
                    }
                }
            }
            "system.a_max" => self.system.a_max = parse_f64(key, v)?,
            "system.mass" => self.system.mass = parse_f64(key, v)?,
            "system.length" => self.system.length = parse_f64(key, v)?,
            "system.gravity" => self.system.gravity = parse_f64(key, v)?,
            "system.kp" => self.system.kp = parse_f64(key, v)?,
            "system.kd" => self.system.kd = parse_f64(key, v)?,
            "reference.path" => self.reference.source = ReferenceSource::File(v.into()),
            "reference.builtin" => self.reference.source = ReferenceSource::Builtin(v.into()),
            "reference.cyclic" => self.reference.cyclic = parse_bool(key, v)?,
            "reference.cycle_duration" => {
                self.reference.cycle_duration = if v == "auto" {
                    None
                } else {
                    Some(parse_f64(key, v)?)
                }
            }
            "bound.enabled" => self.bound.enabled = parse_bool(key, v)?,
            "bound.preset" => self.bound.preset = Preset::parse(v)?,
            "bound.horizon" => self.bound.horizon = parse_f64(key, v)?,
            "train.gamma" => self.train.core.gamma = parse_f64(key, v)?,
            "train.lambda" => self.train.core.lambda = parse_f64(key, v)?,
            "train.clip" => self.train.core.clip_ratio = parse_f64(key, v)?,
            "train.actor_lr" => self.train.core.actor_lr = parse_f64(key, v)?,
            "train.critic_lr" => self.train.core.critic_lr = parse_f64(key, v)?,
            "train.samples_per_epoch" => {
                self.train.core.samples_per_epoch = parse_usize(key, v)?
            }
            "train.minibatch" => self.train.core.minibatch_size = parse_usize(key, v)?,
            "train.update_epochs" => self.train.core.update_epochs = parse_usize(key, v)?,
            "train.max_episode_steps" => {
                self.train.core.max_episode_steps = parse_usize(key, v)?
            }
            "train.epochs" => self.train.epochs = parse_usize(key, v)?,
            "train.hidden" => {
                let sizes: Result<Vec<usize>, _> =
                    v.split(',').map(|s| parse_usize(key, s.trim())).collect();
                self.train.hidden = sizes?;
            }
            "train.checkpoint_every" => self.train.checkpoint_every = parse_usize(key, v)?,
            "train.init_std" => self.train.init_std = parse_f64(key, v)?,
            "init.mode" => {
                self.init.mode = match v {
                    "rsi" => InitMode::Rsi,
                    "importance" => InitMode::Importance,
                    "elite" => InitMode::Elite,
                    other => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            msg: format!("expected rsi|importance|elite, got '{other}'"),
                        })
                    }
                }
            }
            "init.segments" => self.init.segments = parse_usize(key, v)?,
            "init.buffer" => self.init.buffer = parse_usize(key, v)?,
            "init.u" => self.init.u = parse_f64(key, v)?,
            "init.elite_sign" => {
                self.init.elite_sign = match v {
                    "as_printed" => EliteSign::AsPrinted,
                    "favor_high" => EliteSign::FavorHigh,
                    other => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            msg: format!("expected as_printed|favor_high, got '{other}'"),
                        })
                    }
                }
            }
            "style.mode" => {
                self.style.mode = match v {
                    "none" => None,
                    "energy_up" => Some(StyleMode::EnergyUp),
                    "energy_down" => Some(StyleMode::EnergyDown),
                    "volume_up" => Some(StyleMode::VolumeUp),
                    "volume_down" => Some(StyleMode::VolumeDown),
                    "gram" => Some(StyleMode::Gram),
                    other => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            msg: format!(
                                "expected none|energy_up|energy_down|volume_up|volume_down|gram, got '{other}'"
                            ),
                        })
                    }
                }
            }
            "style.e_min" => self.style.e_min = parse_f64(key, v)?,
            "style.e_max" => self.style.e_max = parse_f64(key, v)?,
            "style.alpha" => self.style.alpha = parse_f64(key, v)?,
            "style.w_s" => self.style.w_s = parse_f64(key, v)?,
            "style.imitation" => self.style.imitation = parse_bool(key, v)?,
            "run.seed" => {
                self.run.seed = v.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    msg: format!("expected a u64, got '{v}'"),
                })?
            }
            "run.out" => self.run.out = v.into(),
            _ => {
                if let Some(ch) = key.strip_prefix("bound.") {
                    let sigma = parse_sigma(key, v)?;
                    self.bound.overrides.retain(|(c, _)| c != ch);
                    self.bound.overrides.push((ch.into(), sigma));
                } else if let Some(name) = key.strip_prefix("forbid.") {
                    let fr = parse_forbidden(key, name, v)?;
                    self.bound.forbidden.retain(|f| f.name != name);
                    self.bound.forbidden.push(fr);
                } else {
                    return Err(ConfigError::UnknownKey(key.into()));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, msg: &str| ConfigError::BadValue {
            key: key.into(),
            msg: msg.into(),
        };
        if let ReferenceSource::File(p) = &self.reference.source {
            if !Path::new(p).exists() {
                return Err(ConfigError::MissingFile(p.clone()));
            }
        }
        let t = &self.train.core;
        if !(t.gamma > 0.0 && t.gamma <= 1.0) {
            return Err(bad("train.gamma", "must be in (0, 1]"));
        }
        if !(t.lambda > 0.0 && t.lambda <= 1.0) {
            return Err(bad("train.lambda", "must be in (0, 1]"));
        }
        if t.clip_ratio <= 0.0 {
            return Err(bad("train.clip", "must be positive"));
        }
        if t.minibatch_size == 0 || t.samples_per_epoch == 0 && self.train.epochs > 0 {
            return Err(bad("train.minibatch", "batch sizes must be positive"));
        }
        if self.train.hidden.iter().any(|&h| h == 0) {
            return Err(bad("train.hidden", "layer sizes must be positive"));
        }
        if self.init.segments == 0 || self.init.buffer == 0 {
            return Err(bad("init.segments", "segment and buffer sizes must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.init.u) {
            return Err(bad("init.u", "must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.style.w_s) {
            return Err(bad("style.w_s", "must be in [0, 1]"));
        }
        if self.style.e_min >= self.style.e_max {
            return Err(bad("style.e_min", "energy range must have e_min < e_max"));
        }
        if self.style.alpha <= 0.0 {
            return Err(bad("style.alpha", "must be positive"));
        }
        if self.bound.horizon <= 0.0 {
            return Err(bad("bound.horizon", "must be positive"));
        }
        if self.system.a_max <= 0.0 {
            return Err(bad("system.a_max", "must be positive"));
        }
        Ok(())
    }

    /// Full echo with every key present; parse(emit(cfg)) == cfg.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let kind = match self.system.kind {
            SystemKind::DoubleIntegrator1D => "double_integrator",
            SystemKind::PlanarPointMass => "point_mass",
            SystemKind::Pendulum => "pendulum",
        };
        s.push_str(&format!("system.kind = {kind}\n"));
        s.push_str(&format!("system.a_max = {}\n", self.system.a_max));
        s.push_str(&format!("system.mass = {}\n", self.system.mass));
        s.push_str(&format!("system.length = {}\n", self.system.length));
        s.push_str(&format!("system.gravity = {}\n", self.system.gravity));
        s.push_str(&format!("system.kp = {}\n", self.system.kp));
        s.push_str(&format!("system.kd = {}\n", self.system.kd));
        match &self.reference.source {
            ReferenceSource::File(p) => s.push_str(&format!("reference.path = {p}\n")),
            ReferenceSource::Builtin(b) => s.push_str(&format!("reference.builtin = {b}\n")),
        }
        s.push_str(&format!("reference.cyclic = {}\n", self.reference.cyclic));
        match self.reference.cycle_duration {
            Some(d) => s.push_str(&format!("reference.cycle_duration = {d}\n")),
            None => s.push_str("reference.cycle_duration = auto\n"),
        }
        s.push_str(&format!("bound.enabled = {}\n", self.bound.enabled));
        let preset = match self.bound.preset {
            Preset::Default => "default",
            Preset::Loose => "loose",
            Preset::Tight => "tight",
        };
        s.push_str(&format!("bound.preset = {preset}\n"));
        s.push_str(&format!("bound.horizon = {}\n", self.bound.horizon));
        for (ch, sigma) in &self.bound.overrides {
            s.push_str(&format!("bound.{ch} = {}\n", emit_sigma(sigma)));
        }
        for fr in &self.bound.forbidden {
            s.push_str(&format!("forbid.{} = {}\n", fr.name, emit_forbidden(fr)));
        }
        let t = &self.train.core;
        s.push_str(&format!("train.gamma = {}\n", t.gamma));
        s.push_str(&format!("train.lambda = {}\n", t.lambda));
        s.push_str(&format!("train.clip = {}\n", t.clip_ratio));
        s.push_str(&format!("train.actor_lr = {}\n", t.actor_lr));
        s.push_str(&format!("train.critic_lr = {}\n", t.critic_lr));
        s.push_str(&format!("train.samples_per_epoch = {}\n", t.samples_per_epoch));
        s.push_str(&format!("train.minibatch = {}\n", t.minibatch_size));
        s.push_str(&format!("train.update_epochs = {}\n", t.update_epochs));
        s.push_str(&format!("train.max_episode_steps = {}\n", t.max_episode_steps));
        s.push_str(&format!("train.epochs = {}\n", self.train.epochs));
        let hidden: Vec<String> = self.train.hidden.iter().map(|h| h.to_string()).collect();
        s.push_str(&format!("train.hidden = {}\n", hidden.join(",")));
        s.push_str(&format!(
            "train.checkpoint_every = {}\n",
            self.train.checkpoint_every
        ));
        s.push_str(&format!("train.init_std = {}\n", self.train.init_std));
        let mode = match self.init.mode {
            InitMode::Rsi => "rsi",
            InitMode::Importance => "importance",
            InitMode::Elite => "elite",
        };
        s.push_str(&format!("init.mode = {mode}\n"));
        s.push_str(&format!("init.segments = {}\n", self.init.segments));
        s.push_str(&format!("init.buffer = {}\n", self.init.buffer));
        s.push_str(&format!("init.u = {}\n", self.init.u));
        let sign = match self.init.elite_sign {
            EliteSign::AsPrinted => "as_printed",
            EliteSign::FavorHigh => "favor_high",
        };
        s.push_str(&format!("init.elite_sign = {sign}\n"));
        let style = match self.style.mode {
            None => "none",
            Some(StyleMode::EnergyUp) => "energy_up",
            Some(StyleMode::EnergyDown) => "energy_down",
            Some(StyleMode::VolumeUp) => "volume_up",
            Some(StyleMode::VolumeDown) => "volume_down",
            Some(StyleMode::Gram) => "gram",
        };
        s.push_str(&format!("style.mode = {style}\n"));
        s.push_str(&format!("style.e_min = {}\n", self.style.e_min));
        s.push_str(&format!("style.e_max = {}\n", self.style.e_max));
        s.push_str(&format!("style.alpha = {}\n", self.style.alpha));
        s.push_str(&format!("style.w_s = {}\n", self.style.w_s));
        s.push_str(&format!("style.imitation = {}\n", self.style.imitation));
        s.push_str(&format!("run.seed = {}\n", self.run.seed));
        s.push_str(&format!("run.out = {}\n", self.run.out));
        s
    }

    pub fn build_system(&self) -> SystemSpec {
        let mut spec = match self.system.kind {
            SystemKind::DoubleIntegrator1D => SystemSpec::double_integrator(self.system.a_max),
            SystemKind::PlanarPointMass => SystemSpec::planar_point_mass(self.system.a_max),
            SystemKind::Pendulum => SystemSpec::pendulum(self.system.a_max),
        };
        spec.mass = self.system.mass;
        spec.length = self.system.length;
        if self.system.kind == SystemKind::Pendulum {
            spec.gravity = self.system.gravity;
            spec.kp = self.system.kp;
            spec.kd = self.system.kd;
        }
        spec
    }

    pub fn build_reference(&self) -> Result<ReferenceMotion, ConfigError> {
        match &self.reference.source {
            ReferenceSource::File(p) => Ok(ReferenceMotion::load_csv(
                Path::new(p),
                self.reference.cycle_duration,
                self.reference.cyclic,
            )?),
            ReferenceSource::Builtin(name) => {
                crate::reference_gen::builtin(name).map_err(ConfigError::from)
            }
        }
    }

    /// Bound set from the preset plus per-channel overrides; `enabled =
    /// false` yields an unbounded set over the same horizon.
    pub fn build_bounds(
        &self,
        spec: &SystemSpec,
        motion: &ReferenceMotion,
    ) -> Result<SpacetimeBoundSet, ConfigError> {
        if !self.bound.enabled {
            return Ok(SpacetimeBoundSet::new(
                Vec::new(),
                Vec::new(),
                self.bound.horizon,
            )?);
        }
        let mut set = preset_bounds(self.bound.preset, spec, motion, self.bound.horizon)?;
        let known: Vec<ChannelSpec> = system_channels(spec);
        for (name, sigma) in &self.bound.overrides {
            let Some(ch) = known.iter().find(|c| &c.name == name) else {
                return Err(ConfigError::Bounds(BoundError::UnknownChannel(name.clone())));
            };
            if let Some(existing) = set.channels.iter_mut().find(|(c, _)| &c.name == name) {
                existing.1 = sigma.clone();
            } else {
                set.channels.push((ch.clone(), sigma.clone()));
            }
        }
        set.forbidden = self.bound.forbidden.clone();
        SpacetimeBoundSet::new(set.channels, set.forbidden, set.horizon).map_err(ConfigError::from)
    }

    pub fn build_style(&self) -> Option<StyleConfig> {
        self.style.mode.map(|mode| StyleConfig {
            mode,
            e_min: self.style.e_min,
            e_max: self.style.e_max,
            alpha: self.style.alpha,
            reg_weights: vec![1.0],
            reg_scales: vec![1.0],
        })
    }
}
