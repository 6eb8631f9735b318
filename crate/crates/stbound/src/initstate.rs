//! Initial-state strategies: starts sampled on the reference motion,
//! importance sampling over motion segments weighted by estimated return,
//! and per-segment elite buffers that let starts drift off an infeasible
//! reference.

use rand::Rng;
use thiserror::Error;

use crate::bounds::Event;
use crate::dynsys::SystemKind;
use crate::reference::{RefError, ReferenceMotion};
use crate::rlcore::lift_state;

#[derive(Debug, Error)]
pub enum InitError {
    #[error("probabilities must be nonnegative and sum to 1 (got sum {0})")]
    InvalidDistribution(f64),
    #[error(transparent)]
    Reference(#[from] RefError),
}

/// Per-segment running estimate of the return from starts in that segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentStats {
    pub w: Vec<f64>,
    /// probability mass reserved for uniform segment choice
    pub u: f64,
}

impl SegmentStats {
    pub fn new(n: usize, u: f64) -> Self {
        assert!(n >= 1);
        assert!((0.0..=1.0).contains(&u));
        SegmentStats { w: vec![0.0; n], u }
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    /// Fold this epoch's mean start-state value estimates into the running
    /// averages (exponential factor 0.9; segments without samples keep
    /// their previous value).
    pub fn update(&mut self, epoch_means: &[Option<f64>]) {
        debug_assert_eq!(epoch_means.len(), self.w.len());
        for (w, m) in self.w.iter_mut().zip(epoch_means.iter()) {
            if let Some(m) = m {
                *w = 0.9 * *w + 0.1 * m;
            }
        }
    }
}

/// Time window of segment `k` out of `n` over a cycle of length `t_total`.
pub fn segment_window(k: usize, n: usize, t_total: f64) -> (f64, f64) {
    let span = t_total / n as f64;
    (k as f64 * span, (k + 1) as f64 * span)
}

pub fn segment_of(t: f64, n: usize, t_total: f64) -> usize {
    (((t / t_total) * n as f64) as usize).min(n - 1)
}

/// p(k) = (1-u) * softmax(-w_k / v) + u/n with v = (max w - min w)/3.
/// A degenerate range (all w equal) falls back to uniform.
pub fn segment_probabilities(stats: &SegmentStats) -> Vec<f64> {
    let n = stats.n();
    let max = stats.w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = stats.w.iter().cloned().fold(f64::INFINITY, f64::min);
    let v = (max - min) / 3.0;
    if v <= 0.0 {
        return vec![1.0 / n as f64; n];
    }
    let exps: Vec<f64> = stats.w.iter().map(|w| (-(w - min) / v).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter()
        .map(|e| (1.0 - stats.u) * e / z + stats.u / n as f64)
        .collect()
}

/// Categorical draw from an explicit distribution.
pub fn sample_segment<R: Rng>(p: &[f64], rng: &mut R) -> Result<usize, InitError> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(InitError::InvalidDistribution(sum));
    }
    let x: f64 = rng.gen_range(0.0..1.0);
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if x < acc {
            return Ok(i);
        }
    }
    Ok(p.len() - 1)
}

/// A start state on (or near) the reference, with the time it belongs to.
pub fn event_at(kind: SystemKind, motion: &ReferenceMotion, t: f64) -> Result<Event, RefError> {
    let state = lift_state(kind, motion, t)?;
    Ok(Event::new(state, t))
}

/// Reference state initialization: t uniform over the cycle, state read off
/// the reference.
pub fn rsi_sample<R: Rng>(
    kind: SystemKind,
    motion: &ReferenceMotion,
    rng: &mut R,
) -> Result<Event, RefError> {
    let t = rng.gen_range(0.0..motion.cycle_duration());
    event_at(kind, motion, t)
}

/// RSI restricted to one segment's time window.
pub fn rsi_sample_in_segment<R: Rng>(
    kind: SystemKind,
    motion: &ReferenceMotion,
    k: usize,
    n: usize,
    rng: &mut R,
) -> Result<Event, RefError> {
    let (a, b) = segment_window(k, n, motion.cycle_duration());
    let t = rng.gen_range(a..b);
    event_at(kind, motion, t)
}

/// Which returns the elite selection favors. `AsPrinted` keeps the negative
/// exponent (low returns drawn more often); `FavorHigh` flips it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EliteSign {
    #[default]
    AsPrinted,
    FavorHigh,
}

/// p(l) = softmax(-w_l / v) with v = max w - min w (sign per `sign`);
/// uniform when the range is degenerate.
pub fn boltzmann_elite_probs(w: &[f64], sign: EliteSign) -> Vec<f64> {
    assert!(!w.is_empty());
    let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let v = max - min;
    if v <= 0.0 {
        return vec![1.0 / w.len() as f64; w.len()];
    }
    let exps: Vec<f64> = w
        .iter()
        .map(|&wl| {
            let z = match sign {
                EliteSign::AsPrinted => -(wl - min) / v,
                EliteSign::FavorHigh => (wl - max) / v,
            };
            z.exp()
        })
        .collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|e| e / z).collect()
}

/// One stored start candidate.
#[derive(Debug, Clone)]
pub struct EliteEntry {
    pub event: Event,
    pub w: f64,
}

/// Fixed-size pool of start candidates for one motion segment.
#[derive(Debug, Clone)]
pub struct EliteBuffer {
    pub segment: usize,
    pub capacity: usize,
    pub entries: Vec<EliteEntry>,
}

impl EliteBuffer {
    /// Seed the buffer with reference starts inside the segment window.
    pub fn seeded<R: Rng>(
        kind: SystemKind,
        motion: &ReferenceMotion,
        segment: usize,
        n_segments: usize,
        capacity: usize,
        rng: &mut R,
    ) -> Result<Self, RefError> {
        let entries = (0..capacity)
            .map(|_| {
                rsi_sample_in_segment(kind, motion, segment, n_segments, rng)
                    .map(|event| EliteEntry { event, w: 0.0 })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EliteBuffer {
            segment,
            capacity,
            entries,
        })
    }

    /// Draw one stored start by the Boltzmann rule over stored returns.
    pub fn sample<R: Rng>(&self, sign: EliteSign, rng: &mut R) -> Result<&EliteEntry, InitError> {
        let w: Vec<f64> = self.entries.iter().map(|e| e.w).collect();
        let p = boltzmann_elite_probs(&w, sign);
        let i = sample_segment(&p, rng)?;
        Ok(&self.entries[i])
    }
}

/// Replace the buffer with `capacity` draws without replacement from the
/// union of the old buffer and this epoch's candidates, renormalizing after
/// each draw. A pool smaller than the capacity is kept whole and padded
/// with fresh reference starts from the segment.
#[allow(clippy::too_many_arguments)]
pub fn evolve_buffer<R: Rng>(
    buffer: &EliteBuffer,
    candidates: &[EliteEntry],
    sign: EliteSign,
    kind: SystemKind,
    motion: &ReferenceMotion,
    n_segments: usize,
    rng: &mut R,
) -> Result<EliteBuffer, InitError> {
    let mut pool: Vec<EliteEntry> = buffer.entries.clone();
    pool.extend(candidates.iter().cloned());
    let m = buffer.capacity;
    let mut entries = Vec::with_capacity(m);
    if pool.len() <= m {
        entries = pool;
        while entries.len() < m {
            let event =
                rsi_sample_in_segment(kind, motion, buffer.segment, n_segments, rng)?;
            entries.push(EliteEntry { event, w: 0.0 });
        }
    } else {
        let w: Vec<f64> = pool.iter().map(|e| e.w).collect();
        let mut p = boltzmann_elite_probs(&w, sign);
        let mut alive: Vec<usize> = (0..pool.len()).collect();
        for _ in 0..m {
            let total: f64 = alive.iter().map(|&i| p[i]).sum();
            let x: f64 = rng.gen_range(0.0..1.0) * total;
            let mut acc = 0.0;
            let mut chosen = alive.len() - 1;
            for (pos, &i) in alive.iter().enumerate() {
                acc += p[i];
                if x < acc {
                    chosen = pos;
                    break;
                }
            }
            let idx = alive.swap_remove(chosen);
            p[idx] = p[idx].max(0.0);
            entries.push(pool[idx].clone());
        }
    }
    Ok(EliteBuffer {
        segment: buffer.segment,
        capacity: m,
        entries,
    })
}
