//! Training orchestration: deterministic episode collection across any
//! worker count, adaptive initial-state sampling, policy updates, and the
//! run artifacts (manifest, epoch log, checkpoints, trajectories).
//!
//! Determinism contract: every episode gets its own RNG seeded from (run
//! seed, epoch, episode index), episodes are consumed in index order until
//! the sample budget is met, and the update shuffle uses a separate RNG
//! seeded from (run seed, epoch). Worker threads only change who computes
//! an episode, never which episodes exist.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bounds::{deviation, system_channels, Event, SpacetimeBoundSet};
use crate::checkpoint::{Checkpoint, CkptError};
use crate::config::{InitMode, RunConfig};
use crate::dynsys::{SystemKind, SystemSpec, SystemState};
use crate::initstate::{
    evolve_buffer, rsi_sample, rsi_sample_in_segment, sample_segment, segment_of,
    segment_probabilities, EliteBuffer, EliteEntry, InitError, SegmentStats,
};
use crate::nn::{GaussianHead, Mlp, NnError};
use crate::reference::ReferenceMotion;
use crate::rlcore::ppo::{assemble_batch, ppo_update, PpoOptimizer, PpoStats};
use crate::rlcore::{
    action_channels, feature_dim, lift_state, rollout, Episode, PolicyNet, RewardShaping, RlError,
    RolloutParams, StepCtx, TerminationCause,
};
use crate::style::{
    com_velocity, energy_reward, convex_hull_volume, gram_matrix, gram_style_reward,
    kinematic_energy, volume_reward, StyleConfig, StyleMode,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Ckpt(#[from] CkptError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("training state became non-finite at epoch {0}")]
    NonFinite(usize),
}

/// Deterministic 64-bit mix of the run seed with two stream indices.
fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Rolling window length for the volume and movement-texture style terms.
const STYLE_WINDOW: usize = 30;
/// Imitation deviation scale: r_i = exp(-(|dq| + 0.3 |dqdot|) / 0.25).
const IMITATION_SCALE: f64 = 0.25;
const IMITATION_VEL_WEIGHT: f64 = 0.3;

/// Two bodies used by the energy term: a stationary anchor of the system's
/// mass and the moving mass itself, so the relative kinetic energy grows
/// monotonically with speed.
fn energy_bodies(spec: &SystemSpec, state: &SystemState) -> (Vec<f64>, Vec<Vec<f64>>) {
    let vel = match spec.kind {
        SystemKind::DoubleIntegrator1D => vec![state.qdot[0]],
        SystemKind::PlanarPointMass => vec![state.qdot[0], state.qdot[1]],
        SystemKind::Pendulum => {
            // tangential bob velocity
            let w = state.qdot[0];
            let th = state.q[0];
            vec![spec.length * w * th.cos(), spec.length * w * th.sin()]
        }
    };
    let rest = vec![0.0; vel.len()];
    (vec![spec.mass, spec.mass], vec![rest, vel])
}

/// Planar footprint point used by the volume term.
fn body_point(spec: &SystemSpec, state: &SystemState) -> Vec<f64> {
    match spec.kind {
        // phase-plane footprint for the 1D system
        SystemKind::DoubleIntegrator1D => vec![state.q[0], state.qdot[0]],
        SystemKind::PlanarPointMass => vec![state.q[0], state.q[1]],
        SystemKind::Pendulum => vec![
            spec.length * state.q[0].sin(),
            -spec.length * state.q[0].cos(),
        ],
    }
}

/// Reward shaping backed by the configured style mode and/or an imitation
/// term. One instance per episode: the rolling window is interior state.
pub struct StyleShaping {
    pub style: Option<StyleConfig>,
    pub imitation: bool,
    pub w_s: f64,
    /// movement-texture target, matched against the rolling feature window
    gram_target: Option<Vec<Vec<f64>>>,
    window: RefCell<VecDeque<Vec<f64>>>,
}

impl StyleShaping {
    pub fn new(style: Option<StyleConfig>, imitation: bool, w_s: f64) -> Self {
        StyleShaping {
            style,
            imitation,
            w_s,
            gram_target: None,
            window: RefCell::new(VecDeque::new()),
        }
    }

    /// Build from a run config; the movement-texture target is the opening
    /// window of the reference sampled at the control rate.
    pub fn from_config(cfg: &RunConfig, spec: &SystemSpec, motion: &ReferenceMotion) -> Self {
        let style = cfg.build_style();
        let gram_target = match style.as_ref().map(|s| s.mode) {
            Some(StyleMode::Gram) => {
                let dt = spec.control_dt();
                let rows: Vec<Vec<f64>> = (0..STYLE_WINDOW)
                    .filter_map(|i| {
                        lift_state(spec.kind, motion, (i as f64 * dt).min(motion.cycle_duration()))
                            .ok()
                            .map(|s| state_row(&s))
                    })
                    .collect();
                if rows.is_empty() {
                    None
                } else {
                    Some(gram_matrix(&padded(&rows, STYLE_WINDOW)))
                }
            }
            _ => None,
        };
        StyleShaping {
            style,
            imitation: cfg.style.imitation,
            w_s: cfg.style.w_s,
            gram_target,
            window: RefCell::new(VecDeque::new()),
        }
    }

    fn style_term(&self, ctx: &StepCtx<'_>) -> Option<f64> {
        let cfg = self.style.as_ref()?;
        let r = match cfg.mode {
            StyleMode::EnergyUp | StyleMode::EnergyDown => {
                let (masses, vels) = energy_bodies(ctx.spec, ctx.state);
                let v_com = com_velocity(&masses, &vels);
                let e = kinematic_energy(&masses, &vels, &v_com);
                energy_reward(e, cfg.e_min, cfg.e_max, cfg.mode == StyleMode::EnergyUp)
            }
            StyleMode::VolumeUp | StyleMode::VolumeDown => {
                let mut w = self.window.borrow_mut();
                push_window(&mut w, body_point(ctx.spec, ctx.state));
                let pts: Vec<Vec<f64>> = w.iter().cloned().collect();
                let v = if pts.len() < 3 {
                    0.0
                } else {
                    convex_hull_volume(&pts).unwrap_or(0.0)
                };
                volume_reward(v, cfg.alpha, cfg.mode == StyleMode::VolumeUp)
            }
            StyleMode::Gram => {
                let target = self.gram_target.as_ref()?;
                let mut w = self.window.borrow_mut();
                push_window(&mut w, state_row(ctx.state));
                let rows: Vec<Vec<f64>> = w.iter().cloned().collect();
                let g = gram_matrix(&padded(&rows, STYLE_WINDOW));
                gram_style_reward(target, &g, cfg.alpha).ok()?
            }
        };
        Some(r)
    }

    fn imitation_term(&self, ctx: &StepCtx<'_>) -> Option<f64> {
        if !self.imitation {
            return None;
        }
        let reference = lift_state(ctx.spec.kind, ctx.motion, ctx.state.t).ok()?;
        let dq: f64 = ctx
            .state
            .q
            .iter()
            .zip(reference.q.iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let dv: f64 = ctx
            .state
            .qdot
            .iter()
            .zip(reference.qdot.iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        Some((-(dq + IMITATION_VEL_WEIGHT * dv) / IMITATION_SCALE).exp())
    }
}

impl RewardShaping for StyleShaping {
    fn eval(&self, ctx: &StepCtx<'_>) -> (Option<f64>, Option<f64>) {
        (self.style_term(ctx), self.imitation_term(ctx))
    }

    fn w_s(&self) -> f64 {
        self.w_s
    }
}

fn state_row(s: &SystemState) -> Vec<f64> {
    let mut r = s.q.clone();
    r.extend_from_slice(&s.qdot);
    r
}

fn push_window(w: &mut VecDeque<Vec<f64>>, row: Vec<f64>) {
    if w.len() == STYLE_WINDOW {
        w.pop_front();
    }
    w.push_back(row);
}

fn padded(rows: &[Vec<f64>], len: usize) -> Vec<Vec<f64>> {
    let dim = rows[0].len();
    let mut out = rows.to_vec();
    while out.len() < len {
        out.push(vec![0.0; dim]);
    }
    out
}

/// One line of the epoch log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub samples: usize,
    pub episodes: usize,
    pub mean_len: f64,
    pub mean_return: f64,
    pub clip_fraction: f64,
    pub actor_loss: f64,
    pub value_loss: f64,
    pub wall_s: f64,
}

impl EpochLog {
    pub fn csv_header() -> &'static str {
        "epoch,samples,episodes,mean_len,mean_return,clip_fraction,actor_loss,value_loss,wall_s"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:.3}",
            self.epoch,
            self.samples,
            self.episodes,
            self.mean_len,
            self.mean_return,
            self.clip_fraction,
            self.actor_loss,
            self.value_loss,
            self.wall_s
        )
    }

    /// Everything except wall time, which legitimately varies between runs.
    pub fn deterministic_part(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.epoch,
            self.samples,
            self.episodes,
            self.mean_len,
            self.mean_return,
            self.clip_fraction,
            self.actor_loss,
            self.value_loss
        )
    }
}

pub struct Trainer {
    pub cfg: RunConfig,
    pub spec: SystemSpec,
    pub motion: ReferenceMotion,
    pub bounds: SpacetimeBoundSet,
    pub policy: PolicyNet,
    pub value_net: Mlp,
    pub stats: SegmentStats,
    pub elites: Option<Vec<EliteBuffer>>,
    opt: PpoOptimizer,
}

impl Trainer {
    pub fn new(cfg: RunConfig) -> Result<Self, TrainError> {
        let spec = cfg.build_system();
        let motion = cfg
            .build_reference()
            .map_err(|e| TrainError::Config(e.to_string()))?;
        let bounds = cfg
            .build_bounds(&spec, &motion)
            .map_err(|e| TrainError::Config(e.to_string()))?;
        let names = action_channels(spec.kind);
        let action_indices = motion
            .action_indices(&names)
            .map_err(|e| TrainError::Config(e.to_string()))?;
        let fdim = feature_dim(spec.kind);
        let mut sizes = vec![fdim];
        sizes.extend_from_slice(&cfg.train.hidden);
        sizes.push(names.len());
        let mut net_rng = ChaCha8Rng::seed_from_u64(mix(cfg.run.seed, 0, 0));
        let fbc = Mlp::init(&sizes, &mut net_rng, 0.01)?;
        let mut vsizes = vec![fdim];
        vsizes.extend_from_slice(&cfg.train.hidden);
        vsizes.push(1);
        let value_net = Mlp::init(&vsizes, &mut net_rng, 1.0)?;
        let head = GaussianHead::new(names.len(), cfg.train.init_std);
        let policy = PolicyNet::new(fbc, head, action_indices);
        let opt = PpoOptimizer::new(&policy, &value_net);
        let stats = SegmentStats::new(cfg.init.segments, cfg.init.u);
        let elites = if cfg.init.mode == InitMode::Elite {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.run.seed, 0, 1));
            let bufs = (0..cfg.init.segments)
                .map(|k| {
                    EliteBuffer::seeded(
                        spec.kind,
                        &motion,
                        k,
                        cfg.init.segments,
                        cfg.init.buffer,
                        &mut rng,
                    )
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| TrainError::Config(e.to_string()))?;
            Some(bufs)
        } else {
            None
        };
        Ok(Trainer {
            cfg,
            spec,
            motion,
            bounds,
            policy,
            value_net,
            stats,
            elites,
            opt,
        })
    }

    fn sample_start(
        &self,
        probs: Option<&[f64]>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Event, TrainError> {
        match self.cfg.init.mode {
            InitMode::Rsi => Ok(rsi_sample(self.spec.kind, &self.motion, rng)
                .map_err(|e| TrainError::Config(e.to_string()))?),
            InitMode::Importance => {
                let p = probs.expect("segment probabilities");
                let k = sample_segment(p, rng)?;
                Ok(
                    rsi_sample_in_segment(self.spec.kind, &self.motion, k, self.stats.n(), rng)
                        .map_err(|e| TrainError::Config(e.to_string()))?,
                )
            }
            InitMode::Elite => {
                let p = probs.expect("segment probabilities");
                let k = sample_segment(p, rng)?;
                let bufs = self.elites.as_ref().expect("elite buffers");
                Ok(bufs[k].sample(self.cfg.init.elite_sign, rng)?.event.clone())
            }
        }
    }

    fn run_episode(
        &self,
        probs: Option<&[f64]>,
        epoch: usize,
        idx: u64,
    ) -> Result<Episode, TrainError> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.cfg.run.seed, epoch as u64 + 1, idx));
        let start = self.sample_start(probs, &mut rng)?;
        let shaping = StyleShaping::from_config(&self.cfg, &self.spec, &self.motion);
        let params = RolloutParams {
            spec: &self.spec,
            motion: &self.motion,
            bounds: &self.bounds,
            policy: &self.policy,
            value_net: &self.value_net,
            shaping: &shaping,
            max_steps: self.cfg.train.core.max_episode_steps,
            explore: true,
            terminate_on_violation: self.cfg.bound.enabled,
        };
        Ok(rollout(&params, start.state, &mut rng)?)
    }

    /// Collect episodes for one epoch, in index order, until the sample
    /// budget is met. The worker count only parallelizes the computation.
    fn collect(
        &self,
        epoch: usize,
        workers: usize,
    ) -> Result<Vec<Episode>, TrainError> {
        let budget = self.cfg.train.core.samples_per_epoch;
        let probs = match self.cfg.init.mode {
            InitMode::Rsi => None,
            InitMode::Importance | InitMode::Elite => {
                Some(segment_probabilities(&self.stats))
            }
        };
        let probs = probs.as_deref();
        let workers = workers.max(1);
        let wave = (workers * 8).max(8);
        let mut episodes: Vec<Episode> = Vec::new();
        let mut samples = 0usize;
        let mut next_idx = 0u64;
        // hard cap so a start distribution of dead starts cannot spin forever
        while samples < budget && (next_idx as usize) < 200 * (budget.max(1)) {
            let mut slots: Vec<Option<Result<Episode, TrainError>>> =
                (0..wave).map(|_| None).collect();
            let chunk = wave.div_ceil(workers);
            std::thread::scope(|s| {
                for (w, out_chunk) in slots.chunks_mut(chunk).enumerate() {
                    let base = next_idx + (w * chunk) as u64;
                    s.spawn(move || {
                        for (j, slot) in out_chunk.iter_mut().enumerate() {
                            *slot = Some(self.run_episode(probs, epoch, base + j as u64));
                        }
                    });
                }
            });
            for slot in slots {
                let ep = slot.expect("worker filled slot")?;
                if samples < budget {
                    samples += ep.len();
                    episodes.push(ep);
                }
            }
            next_idx += wave as u64;
        }
        Ok(episodes)
    }

    fn update_init_stats(&mut self, epoch: usize, episodes: &[Episode]) -> Result<(), TrainError> {
        let n = self.stats.n();
        let total = self.motion.cycle_duration();
        let mut sums = vec![0.0; n];
        let mut counts = vec![0usize; n];
        for ep in episodes {
            let k = segment_of(ep.init_t.min(total), n, total);
            sums[k] += ep.ret();
            counts[k] += 1;
        }
        let means: Vec<Option<f64>> = sums
            .iter()
            .zip(counts.iter())
            .map(|(&s, &c)| if c > 0 { Some(s / c as f64) } else { None })
            .collect();
        self.stats.update(&means);

        if let Some(bufs) = self.elites.take() {
            let mut by_segment: Vec<Vec<EliteEntry>> = vec![Vec::new(); n];
            for ep in episodes {
                if ep.is_empty() {
                    continue;
                }
                let k = segment_of(ep.init_t.min(total), n, total);
                // recover the start event from the first transition features
                let state = state_from_features(
                    self.spec.kind,
                    &ep.transitions[0].features,
                    ep.init_t,
                );
                by_segment[k].push(EliteEntry {
                    event: Event::new(state, ep.init_t),
                    w: ep.ret(),
                });
            }
            let mut evolved = Vec::with_capacity(n);
            for (k, buf) in bufs.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(
                    self.cfg.run.seed,
                    epoch as u64 + 1,
                    0xE11E + k as u64,
                ));
                evolved.push(evolve_buffer(
                    buf,
                    &by_segment[k],
                    self.cfg.init.elite_sign,
                    self.spec.kind,
                    &self.motion,
                    n,
                    &mut rng,
                )?);
            }
            self.elites = Some(evolved);
        }
        Ok(())
    }

    pub fn run_epoch(&mut self, epoch: usize, workers: usize) -> Result<EpochLog, TrainError> {
        let start = Instant::now();
        let episodes = self.collect(epoch, workers)?;
        let samples: usize = episodes.iter().map(|e| e.len()).sum();
        let nonempty = episodes.iter().filter(|e| !e.is_empty()).count().max(1);
        let mean_len = samples as f64 / nonempty as f64;
        let mean_return =
            episodes.iter().map(|e| e.ret()).sum::<f64>() / episodes.len().max(1) as f64;
        self.update_init_stats(epoch, &episodes)?;
        let batch = assemble_batch(
            &episodes,
            self.cfg.train.core.gamma,
            self.cfg.train.core.lambda,
        );
        let mut update_rng =
            ChaCha8Rng::seed_from_u64(mix(self.cfg.run.seed, epoch as u64 + 1, 0xA5A5));
        let stats: PpoStats = ppo_update(
            &mut self.policy,
            &mut self.value_net,
            &mut self.opt,
            &batch,
            &self.cfg.train.core,
            &mut update_rng,
        )?;
        if !self.params_finite() {
            return Err(TrainError::NonFinite(epoch));
        }
        Ok(EpochLog {
            epoch,
            samples,
            episodes: episodes.len(),
            mean_len,
            mean_return,
            clip_fraction: stats.clip_fraction,
            actor_loss: stats.actor_loss,
            value_loss: stats.value_loss,
            wall_s: start.elapsed().as_secs_f64(),
        })
    }

    fn params_finite(&self) -> bool {
        self.policy.fbc.flatten().iter().all(|v| v.is_finite())
            && self.policy.head.log_std.iter().all(|v| v.is_finite())
            && self.value_net.flatten().iter().all(|v| v.is_finite())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::from_nets(
            &self.policy,
            &self.value_net,
            &action_channels(self.spec.kind),
        )
    }
}

fn state_from_features(kind: SystemKind, features: &[f64], t: f64) -> SystemState {
    let dof = kind.dof();
    SystemState::new(
        features[1..1 + dof].to_vec(),
        features[1 + dof..1 + 2 * dof].to_vec(),
        t,
    )
}

/// Where a completed run left its artifacts.
pub struct TrainOutcome {
    pub logs: Vec<EpochLog>,
    pub final_checkpoint: PathBuf,
    /// set when training aborted on a non-finite state; the last good
    /// checkpoint is retained
    pub aborted_epoch: Option<usize>,
}

/// Full training run: manifest, epoch log CSV, periodic checkpoints, and
/// for elite-buffer runs a dump of the final buffers.
pub fn run_training(
    cfg: RunConfig,
    workers: usize,
    out: &Path,
) -> Result<TrainOutcome, TrainError> {
    std::fs::create_dir_all(out)?;
    let mut trainer = Trainer::new(cfg)?;
    let manifest = format!(
        "stbound run\nversion = {}\nworkers = {}\n\n{}",
        env!("CARGO_PKG_VERSION"),
        workers,
        trainer.cfg.emit()
    );
    std::fs::write(out.join("manifest.txt"), manifest)?;

    let mut logs = Vec::new();
    let mut log_csv = String::from(EpochLog::csv_header());
    log_csv.push('\n');
    let final_path = out.join("ckpt_final.txt");
    let mut aborted = None;
    for epoch in 0..trainer.cfg.train.epochs {
        match trainer.run_epoch(epoch, workers) {
            Ok(log) => {
                log_csv.push_str(&log.csv_row());
                log_csv.push('\n');
                logs.push(log);
            }
            Err(TrainError::NonFinite(e)) => {
                aborted = Some(e);
                break;
            }
            Err(other) => return Err(other),
        }
        let every = trainer.cfg.train.checkpoint_every;
        if every > 0 && (epoch + 1) % every == 0 {
            trainer
                .checkpoint()
                .save(&out.join(format!("ckpt_{:04}.txt", epoch + 1)))?;
        }
        // final checkpoint tracks the last finite state so an abort retains it
        trainer.checkpoint().save(&final_path)?;
    }
    if trainer.cfg.train.epochs == 0 {
        trainer.checkpoint().save(&final_path)?;
    }
    std::fs::write(out.join("train_log.csv"), &log_csv)?;
    if let Some(bufs) = &trainer.elites {
        std::fs::write(out.join("elite_buffer.csv"), elite_csv(bufs))?;
    }
    Ok(TrainOutcome {
        logs,
        final_checkpoint: final_path,
        aborted_epoch: aborted,
    })
}

pub fn elite_csv(bufs: &[EliteBuffer]) -> String {
    let mut s = String::from("segment,t,q,qdot,w\n");
    for buf in bufs {
        for e in &buf.entries {
            let q = e
                .event
                .state
                .q
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(";");
            let qd = e
                .event
                .state
                .qdot
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(";");
            s.push_str(&format!("{},{},{},{},{}\n", buf.segment, e.event.t, q, qd, e.w));
        }
    }
    s
}

/// Evaluation summary over deterministic (exploration off) episodes.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub episodes: usize,
    pub completed: usize,
    pub mean_len: f64,
    pub mean_return: f64,
    /// per-channel maximum deviation from the reference over all steps
    pub max_dev: Vec<(String, f64)>,
    /// mean relative kinematic energy per step, using the same two-body
    /// convention as the energy style term
    pub mean_energy: f64,
}

impl EvalReport {
    pub fn completion_rate(&self) -> f64 {
        self.completed as f64 / self.episodes.max(1) as f64
    }
}

/// Run `episodes` evaluation episodes from uniform reference starts with
/// exploration off. When `traj_dir` is set, a trajectory CSV is written per
/// episode.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    cfg: &RunConfig,
    spec: &SystemSpec,
    motion: &ReferenceMotion,
    bounds: &SpacetimeBoundSet,
    policy: &PolicyNet,
    value_net: &Mlp,
    episodes: usize,
    seed: u64,
    traj_dir: Option<&Path>,
) -> Result<EvalReport, TrainError> {
    let shaping = StyleShaping::from_config(cfg, spec, motion);
    let params = RolloutParams {
        spec,
        motion,
        bounds,
        policy,
        value_net,
        shaping: &shaping,
        max_steps: cfg.train.core.max_episode_steps,
        explore: false,
        terminate_on_violation: cfg.bound.enabled,
    };
    // deviations over the bound channels, or all system channels present in
    // the reference when the bounds are disabled
    let channels = if bounds.channels.is_empty() {
        system_channels(spec)
            .into_iter()
            .filter(|c| motion.has_channel(&c.name))
            .collect()
    } else {
        bounds.channels.iter().map(|(c, _)| c.clone()).collect::<Vec<_>>()
    };
    let mut max_dev: Vec<(String, f64)> =
        channels.iter().map(|c| (c.name.clone(), 0.0)).collect();
    let dt = spec.control_dt();
    let mut completed = 0usize;
    let mut total_len = 0usize;
    let mut total_ret = 0.0;
    let mut energy_sum = 0.0;
    if let Some(dir) = traj_dir {
        std::fs::create_dir_all(dir)?;
    }
    for i in 0..episodes {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 0xEAA1, i as u64));
        let start = rsi_sample(spec.kind, motion, &mut rng)
            .map_err(|e| TrainError::Config(e.to_string()))?;
        let ep = rollout(&params, start.state, &mut rng)?;
        let violated = matches!(ep.cause, TerminationCause::BoundViolation(_));
        if !violated {
            completed += 1;
        }
        total_len += ep.len();
        total_ret += ep.ret();
        let mut csv = String::new();
        if traj_dir.is_some() {
            csv.push_str("step,t,");
            for c in &channels {
                csv.push_str(&c.name);
                csv.push(',');
            }
            csv.push_str("action,reward,violation\n");
        }
        for (k, tr) in ep.transitions.iter().enumerate() {
            let t = ep.init_t + k as f64 * dt;
            let state = state_from_features(spec.kind, &tr.features, t);
            let (masses, vels) = energy_bodies(spec, &state);
            let v_com = com_velocity(&masses, &vels);
            energy_sum += kinematic_energy(&masses, &vels, &v_com);
            let event = Event::new(state, t.min(bounds.horizon));
            for (c, slot) in channels.iter().zip(max_dev.iter_mut()) {
                if let Ok(d) = deviation(c, motion, &event) {
                    if d > slot.1 {
                        slot.1 = d;
                    }
                }
            }
            if traj_dir.is_some() {
                let vals = channels
                    .iter()
                    .map(|c| {
                        deviation(c, motion, &event)
                            .map(|d| d.to_string())
                            .unwrap_or_default()
                    })
                    .collect::<Vec<_>>()
                    .join(",");
                let act = tr
                    .action
                    .iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(";");
                let is_violation = violated && k + 1 == ep.len();
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    k, t, vals, act, tr.reward, is_violation as u8
                ));
            }
        }
        if let Some(dir) = traj_dir {
            std::fs::write(dir.join(format!("traj_{i:03}.csv")), csv)?;
        }
    }
    Ok(EvalReport {
        episodes,
        completed,
        mean_len: total_len as f64 / episodes.max(1) as f64,
        mean_return: total_ret / episodes.max(1) as f64,
        max_dev,
        mean_energy: energy_sum / total_len.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.train.core.samples_per_epoch = 200;
        cfg.train.core.minibatch_size = 64;
        cfg.train.core.max_episode_steps = 60;
        cfg.train.core.update_epochs = 2;
        cfg.train.epochs = 2;
        cfg.train.hidden = vec![16];
        cfg.run.seed = 3;
        cfg
    }

    #[test]
    fn epoch_logs_independent_of_worker_count() {
        let run = |workers: usize| {
            let mut t = Trainer::new(tiny_cfg()).unwrap();
            (0..2)
                .map(|e| t.run_epoch(e, workers).unwrap().deterministic_part())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn importance_and_elite_modes_also_deterministic() {
        for mode in [InitMode::Importance, InitMode::Elite] {
            let run = |workers: usize| {
                let mut cfg = tiny_cfg();
                cfg.init.mode = mode;
                let mut t = Trainer::new(cfg).unwrap();
                (0..2)
                    .map(|e| t.run_epoch(e, workers).unwrap().deterministic_part())
                    .collect::<Vec<_>>()
            };
            assert_eq!(run(1), run(3));
        }
    }

    #[test]
    fn run_training_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg();
        cfg.train.checkpoint_every = 1;
        cfg.init.mode = InitMode::Elite;
        let outcome = run_training(cfg, 2, dir.path()).unwrap();
        assert_eq!(outcome.logs.len(), 2);
        assert!(outcome.aborted_epoch.is_none());
        for name in [
            "manifest.txt",
            "train_log.csv",
            "ckpt_0001.txt",
            "ckpt_0002.txt",
            "ckpt_final.txt",
            "elite_buffer.csv",
        ] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        let log = std::fs::read_to_string(dir.path().join("train_log.csv")).unwrap();
        assert!(log.starts_with(EpochLog::csv_header()));
        assert_eq!(log.lines().count(), 3);
    }

    #[test]
    fn zero_epochs_still_writes_final_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg();
        cfg.train.epochs = 0;
        let outcome = run_training(cfg, 1, dir.path()).unwrap();
        assert!(outcome.logs.is_empty());
        assert!(outcome.final_checkpoint.exists());
    }

    #[test]
    fn eval_of_fresh_policy_tracks_easy_reference() {
        // near-zero feedback net plus correct feedforward should survive
        let cfg = tiny_cfg();
        let t = Trainer::new(cfg.clone()).unwrap();
        let report = evaluate(
            &cfg,
            &t.spec,
            &t.motion,
            &t.bounds,
            &t.policy,
            &t.value_net,
            10,
            7,
            None,
        )
        .unwrap();
        assert_eq!(report.completion_rate(), 1.0);
        for (name, d) in &report.max_dev {
            assert!(d.is_finite(), "{name} deviation not finite");
        }
    }

    #[test]
    fn eval_writes_trajectories() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg();
        let t = Trainer::new(cfg.clone()).unwrap();
        evaluate(
            &cfg,
            &t.spec,
            &t.motion,
            &t.bounds,
            &t.policy,
            &t.value_net,
            3,
            7,
            Some(dir.path()),
        )
        .unwrap();
        for i in 0..3 {
            let p = dir.path().join(format!("traj_{i:03}.csv"));
            let text = std::fs::read_to_string(p).unwrap();
            assert!(text.starts_with("step,t,"));
            assert!(text.lines().count() > 1);
        }
    }

    #[test]
    fn style_shaping_composes_into_rewards() {
        let mut cfg = tiny_cfg();
        cfg.style.mode = Some(crate::style::StyleMode::EnergyDown);
        cfg.style.e_min = 0.0;
        cfg.style.e_max = 1.0;
        let t = Trainer::new(cfg).unwrap();
        let ep = t.run_episode(None, 0, 0).unwrap();
        assert!(!ep.is_empty());
        for tr in &ep.transitions {
            assert!(tr.reward >= 0.0 && tr.reward <= 1.0);
        }
    }
}
