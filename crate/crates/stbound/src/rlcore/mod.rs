//! Episode rollout with spacetime-bound early termination, reward
//! composition, and the policy structure (feedforward reference lookup plus
//! a feedback net producing corrections).

pub mod ppo;
pub mod returns;

use rand::Rng;
use thiserror::Error;

use crate::bounds::{BoundCheck, BoundError, Event, SpacetimeBoundSet};
use crate::dynsys::{self, SystemKind, SystemSpec, SystemState};
use crate::nn::{GaussianHead, Mlp, NnError};
use crate::reference::{Phase, RefError, ReferenceMotion};

pub use returns::{gae, td_lambda_targets};

#[derive(Debug, Error)]
pub enum RlError {
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Dyn(#[from] dynsys::DynError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Reference(#[from] RefError),
    #[error("simulation produced a non-finite state at t={0}")]
    NonFiniteSim(f64),
}

/// Why an episode ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TerminationCause {
    BoundViolation(String),
    Horizon,
    EndState,
}

/// One step of experience.
#[derive(Debug, Clone)]
pub struct Transition {
    pub features: Vec<f64>,
    pub phase: f64,
    /// feedforward default action at this phase
    pub default_action: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub transitions: Vec<Transition>,
    pub cause: TerminationCause,
    /// value bootstrap for the state after the last transition
    pub bootstrap: f64,
    /// time the episode started at
    pub init_t: f64,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn ret(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }
}

/// Training hyperparameters. Defaults carry the published constants:
/// gamma = lambda = 0.95, 4096 samples per epoch, minibatch 256, actor
/// learning rate 2.5e-6, critic 1e-2.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip_ratio: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub samples_per_epoch: usize,
    pub minibatch_size: usize,
    pub max_episode_steps: usize,
    pub update_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.95,
            lambda: 0.95,
            clip_ratio: 0.2,
            actor_lr: 2.5e-6,
            critic_lr: 1.0e-2,
            samples_per_epoch: 4096,
            minibatch_size: 256,
            // 20 seconds of control at 30 Hz
            max_episode_steps: 600,
            update_epochs: 5,
        }
    }
}

/// Concatenation of phase, q, and qdot in that fixed order.
pub fn featurize(state: &SystemState, phase: Phase) -> Vec<f64> {
    let mut f = Vec::with_capacity(1 + state.q.len() + state.qdot.len());
    f.push(phase.value());
    f.extend_from_slice(&state.q);
    f.extend_from_slice(&state.qdot);
    f
}

pub fn feature_dim(kind: SystemKind) -> usize {
    1 + 2 * kind.dof()
}

/// Names of the reference channels that lift to a system state, (q, qdot).
pub fn state_channels(kind: SystemKind) -> (Vec<&'static str>, Vec<&'static str>) {
    match kind {
        SystemKind::DoubleIntegrator1D => (vec!["x"], vec!["v"]),
        SystemKind::PlanarPointMass => (vec!["x", "y"], vec!["vx", "vy"]),
        SystemKind::Pendulum => (vec!["theta"], vec!["omega"]),
    }
}

/// Name of the action channel(s) looked up by the feedforward controller.
pub fn action_channels(kind: SystemKind) -> Vec<String> {
    match kind {
        SystemKind::DoubleIntegrator1D => vec!["a".into()],
        SystemKind::PlanarPointMass => vec!["ax".into(), "ay".into()],
        SystemKind::Pendulum => vec!["q_target".into()],
    }
}

/// Build the system state the reference prescribes at time t.
pub fn lift_state(
    kind: SystemKind,
    motion: &ReferenceMotion,
    t: f64,
) -> Result<SystemState, RefError> {
    let (qc, vc) = state_channels(kind);
    let phase = motion.phase_of(t);
    let vals = motion.interpolate(phase);
    let get = |name: &str| -> Result<f64, RefError> {
        motion
            .channel_index(name)
            .map(|i| vals[i])
            .ok_or_else(|| RefError::MissingChannel(name.into()))
    };
    let q: Result<Vec<f64>, _> = qc.iter().map(|c| get(c)).collect();
    let qdot: Result<Vec<f64>, _> = vc.iter().map(|c| get(c)).collect();
    Ok(SystemState::new(q?, qdot?, t))
}

/// Feedforward reference lookup plus feedback correction net.
#[derive(Debug, Clone)]
pub struct PolicyNet {
    pub fbc: Mlp,
    pub head: GaussianHead,
    /// indices of the action channels within the reference
    pub action_indices: Vec<usize>,
}

impl PolicyNet {
    pub fn new(fbc: Mlp, head: GaussianHead, action_indices: Vec<usize>) -> Self {
        debug_assert_eq!(fbc.output_dim(), head.dim());
        PolicyNet {
            fbc,
            head,
            action_indices,
        }
    }

    pub fn action_dim(&self) -> usize {
        self.head.dim()
    }

    pub fn mean_action(
        &self,
        motion: &ReferenceMotion,
        features: &[f64],
        phase: Phase,
    ) -> Result<(Vec<f64>, Vec<f64>), NnError> {
        let default = motion.ffc_action(&self.action_indices, phase);
        let delta = self.fbc.forward(features)?;
        let mean = default
            .iter()
            .zip(delta.iter())
            .map(|(d, c)| d + c)
            .collect();
        Ok((mean, default))
    }

    /// Final action is the feedforward default plus the feedback offset;
    /// exploration samples from the Gaussian head around that mean.
    pub fn policy_action<R: Rng>(
        &self,
        motion: &ReferenceMotion,
        features: &[f64],
        phase: Phase,
        explore: bool,
        rng: &mut R,
    ) -> Result<(Vec<f64>, Vec<f64>, f64), NnError> {
        let (mean, default) = self.mean_action(motion, features, phase)?;
        let action = if explore {
            self.head.sample(&mean, rng)
        } else {
            mean.clone()
        };
        let log_prob = self.head.log_prob(&mean, &action);
        Ok((action, default, log_prob))
    }
}

/// Binary survival reward: 1 and continue inside the bounds, 0 and terminate
/// on violation.
pub fn survival_reward(check: &BoundCheck) -> (f64, bool) {
    match check {
        BoundCheck::Within => (1.0, false),
        BoundCheck::Violated(_) => (0.0, true),
    }
}

/// Multiplicative composition of the survival gate with optional style and
/// imitation terms. With both present the inner reward is the weighted
/// average (1-w_s)*r_i + w_s*r_s.
pub fn compose_reward(
    survival: f64,
    style: Option<f64>,
    imitation: Option<f64>,
    w_s: f64,
) -> f64 {
    let inner = match (style, imitation) {
        (None, None) => 1.0,
        (Some(s), None) => s,
        (None, Some(i)) => i,
        (Some(s), Some(i)) => (1.0 - w_s) * i + w_s * s,
    };
    survival * inner
}

/// Context handed to reward shaping each control step.
pub struct StepCtx<'a> {
    pub spec: &'a SystemSpec,
    pub motion: &'a ReferenceMotion,
    pub bounds: &'a SpacetimeBoundSet,
    pub state: &'a SystemState,
    pub prev_state: &'a SystemState,
    pub phase: Phase,
    pub control_dt: f64,
}

/// Optional style/imitation terms multiplied into the survival reward.
pub trait RewardShaping {
    /// (style term, imitation term), each in [0, 1] when present.
    fn eval(&self, ctx: &StepCtx<'_>) -> (Option<f64>, Option<f64>);

    /// Weight of the style term when both terms are present.
    fn w_s(&self) -> f64 {
        1.0
    }
}

/// Survival-only training.
pub struct NoShaping;

impl RewardShaping for NoShaping {
    fn eval(&self, _ctx: &StepCtx<'_>) -> (Option<f64>, Option<f64>) {
        (None, None)
    }
}

pub struct RolloutParams<'a> {
    pub spec: &'a SystemSpec,
    pub motion: &'a ReferenceMotion,
    pub bounds: &'a SpacetimeBoundSet,
    pub policy: &'a PolicyNet,
    pub value_net: &'a Mlp,
    pub shaping: &'a dyn RewardShaping,
    pub max_steps: usize,
    pub explore: bool,
    /// when false, bound violations do not terminate or zero the reward
    /// (used by the no-bounds ablation); violations are still not rewarded
    /// as survival failures
    pub terminate_on_violation: bool,
}

/// Run one episode from `init`, stepping at the control rate until a bound
/// violation, the end of a non-cyclic reference, or `max_steps`.
pub fn rollout<R: Rng>(
    p: &RolloutParams<'_>,
    init: SystemState,
    rng: &mut R,
) -> Result<Episode, RlError> {
    let init_t = init.t;
    let control_dt = p.spec.control_dt();
    let motion_end = if p.motion.cyclic() {
        f64::INFINITY
    } else {
        p.motion.cycle_duration()
    };
    let mut transitions = Vec::new();

    // reject an initial event already outside the bounds
    let init_event = Event::new(init.clone(), init.t);
    if p.terminate_on_violation {
        if let BoundCheck::Violated(ch) = p.bounds.check_event(p.motion, &init_event)? {
            return Ok(Episode {
                transitions,
                cause: TerminationCause::BoundViolation(ch),
                bootstrap: 0.0,
                init_t,
            });
        }
    }

    let mut state = init;
    let mut cause = TerminationCause::Horizon;
    let mut bootstrap = 0.0;
    if p.max_steps == 0 {
        return Ok(Episode {
            transitions,
            cause,
            bootstrap,
            init_t,
        });
    }
    for _ in 0..p.max_steps {
        let phase = p.motion.phase_of(state.t);
        let features = featurize(&state, phase);
        let value = p.value_net.forward(&features)?[0];
        let (action, default_action, log_prob) =
            p.policy
                .policy_action(p.motion, &features, phase, p.explore, rng)?;
        let input = dynsys::action_to_input(p.spec, &state, &action);
        let next = dynsys::step(p.spec, &state, &input)?;
        if !next.is_finite() {
            return Err(RlError::NonFiniteSim(state.t));
        }
        // clamp the checked time so float accumulation cannot step past the
        // declared horizon
        let t_checked = next.t.min(p.bounds.horizon).min(motion_end);
        let event = Event::new(next.clone(), t_checked);
        let check = p.bounds.check_event(p.motion, &event)?;
        let (_, violated) = survival_reward(&check);
        let terminal_violation = violated && p.terminate_on_violation;
        let reward = if terminal_violation {
            0.0
        } else {
            let ctx = StepCtx {
                spec: p.spec,
                motion: p.motion,
                bounds: p.bounds,
                state: &next,
                prev_state: &state,
                phase: p.motion.phase_of(t_checked),
                control_dt,
            };
            let (style, imitation) = p.shaping.eval(&ctx);
            compose_reward(1.0, style, imitation, p.shaping.w_s())
        };
        let mut done = false;
        if terminal_violation {
            let BoundCheck::Violated(ch) = check else {
                unreachable!()
            };
            cause = TerminationCause::BoundViolation(ch);
            done = true;
        } else if next.t >= motion_end - 1e-9 {
            cause = TerminationCause::EndState;
            done = true;
        }
        transitions.push(Transition {
            features,
            phase: phase.value(),
            default_action,
            action,
            log_prob,
            reward,
            value,
            done,
        });
        state = next;
        if done {
            bootstrap = 0.0;
            break;
        }
    }
    if cause == TerminationCause::Horizon {
        // truncation, not failure: bootstrap with the value estimate
        let phase = p.motion.phase_of(state.t.min(p.bounds.horizon));
        let features = featurize(&state, phase);
        bootstrap = p.value_net.forward(&features)?[0];
        if let Some(last) = transitions.last_mut() {
            last.done = true;
        }
    }
    Ok(Episode {
        transitions,
        cause,
        bootstrap,
        init_t,
    })
}
