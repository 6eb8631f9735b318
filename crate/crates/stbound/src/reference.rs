//! Reference motions: time-indexed keyframe channels with linear
//! interpolation, phase lookup, and the feedforward default action.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RefError {
    #[error("reference has no frames")]
    Empty,
    #[error("frame times must start at 0 and strictly increase (frame {0})")]
    BadTimes(usize),
    #[error("cycle duration must be >= last frame time and > 0")]
    BadCycle,
    #[error("missing channel '{0}'")]
    MissingChannel(String),
    #[error("reference file: {0}")]
    Io(#[from] std::io::Error),
    #[error("reference file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown builtin reference '{0}'")]
    UnknownBuiltin(String),
}

/// Normalized time within the reference cycle, in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Phase(f64);

impl Phase {
    pub fn new(value: f64) -> Self {
        assert!((0.0..=1.0).contains(&value), "phase out of range: {value}");
        Phase(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Time-ordered keyframes sharing one set of named channels.
#[derive(Debug, Clone)]
pub struct ReferenceMotion {
    channel_names: Vec<String>,
    /// frames[i] = (t, values), values aligned with `channel_names`
    frames: Vec<(f64, Vec<f64>)>,
    cycle_duration: f64,
    cyclic: bool,
    index: HashMap<String, usize>,
}

impl ReferenceMotion {
    pub fn new(
        channel_names: Vec<String>,
        frames: Vec<(f64, Vec<f64>)>,
        cycle_duration: f64,
        cyclic: bool,
    ) -> Result<Self, RefError> {
        if frames.is_empty() {
            return Err(RefError::Empty);
        }
        if frames[0].0 != 0.0 {
            return Err(RefError::BadTimes(0));
        }
        for i in 1..frames.len() {
            if frames[i].0 <= frames[i - 1].0 {
                return Err(RefError::BadTimes(i));
            }
        }
        if cycle_duration <= 0.0 || cycle_duration < frames.last().unwrap().0 {
            return Err(RefError::BadCycle);
        }
        let index = channel_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Ok(ReferenceMotion {
            channel_names,
            frames,
            cycle_duration,
            cyclic,
            index,
        })
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn has_channel(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn cycle_duration(&self) -> f64 {
        self.cycle_duration
    }

    pub fn cyclic(&self) -> bool {
        self.cyclic
    }

    pub fn frames(&self) -> &[(f64, Vec<f64>)] {
        &self.frames
    }

    /// Cyclic: (t mod T)/T; non-cyclic: min(t/T, 1).
    pub fn phase_of(&self, t: f64) -> Phase {
        assert!(t >= 0.0, "negative time");
        let frac = t / self.cycle_duration;
        if self.cyclic {
            Phase::new(frac - frac.floor())
        } else {
            Phase::new(frac.min(1.0))
        }
    }

    /// Piecewise-linear interpolation at `phase`. Cyclic motions interpolate
    /// between the last and first frame across the wrap.
    pub fn interpolate(&self, phase: Phase) -> Vec<f64> {
        let t = phase.value() * self.cycle_duration;
        let n = self.frames.len();
        if n == 1 {
            return self.frames[0].1.clone();
        }
        // bracketing frames
        let last_t = self.frames[n - 1].0;
        if t >= last_t {
            if !self.cyclic || self.cycle_duration == last_t {
                return self.frames[n - 1].1.clone();
            }
            // wrap segment: last frame -> first frame at cycle_duration
            let span = self.cycle_duration - last_t;
            let alpha = (t - last_t) / span;
            return lerp(&self.frames[n - 1].1, &self.frames[0].1, alpha);
        }
        let hi = self.frames.partition_point(|(ft, _)| *ft <= t);
        if hi == 0 {
            return self.frames[0].1.clone();
        }
        let (t0, v0) = &self.frames[hi - 1];
        let (t1, v1) = &self.frames[hi];
        let alpha = (t - t0) / (t1 - t0);
        lerp(v0, v1, alpha)
    }

    pub fn value_at(&self, channel: usize, phase: Phase) -> f64 {
        self.interpolate(phase)[channel]
    }

    /// Feedforward default action: interpolation restricted to the named
    /// action channels. Channels are validated once via `action_indices`.
    pub fn action_indices(&self, action_channels: &[String]) -> Result<Vec<usize>, RefError> {
        action_channels
            .iter()
            .map(|c| {
                self.channel_index(c)
                    .ok_or_else(|| RefError::MissingChannel(c.clone()))
            })
            .collect()
    }

    pub fn ffc_action(&self, action_indices: &[usize], phase: Phase) -> Vec<f64> {
        let all = self.interpolate(phase);
        action_indices.iter().map(|&i| all[i]).collect()
    }

    /// Load from CSV with header `t,<channel>,...`.
    pub fn load_csv(path: &Path, cycle_duration: Option<f64>, cyclic: bool) -> Result<Self, RefError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text, cycle_duration, cyclic)
    }

    pub fn parse_csv(text: &str, cycle_duration: Option<f64>, cyclic: bool) -> Result<Self, RefError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(RefError::Empty)?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") {
            return Err(RefError::Parse {
                line: 1,
                msg: "header must start with 't'".into(),
            });
        }
        let channel_names: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();
        let mut frames = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse()).collect();
            let vals = vals.map_err(|e| RefError::Parse {
                line: i + 1,
                msg: format!("{e}"),
            })?;
            if vals.len() != cols.len() {
                return Err(RefError::Parse {
                    line: i + 1,
                    msg: format!("expected {} values, got {}", cols.len(), vals.len()),
                });
            }
            frames.push((vals[0], vals[1..].to_vec()));
        }
        let t_last = frames.last().map(|f| f.0).unwrap_or(0.0);
        Self::new(
            channel_names,
            frames,
            cycle_duration.unwrap_or(t_last),
            cyclic,
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for c in &self.channel_names {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (t, vals) in &self.frames {
            out.push_str(&format!("{t}"));
            for v in vals {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn lerp(a: &[f64], b: &[f64], alpha: f64) -> Vec<f64> {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x + (y - x) * alpha)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_frame(cyclic: bool) -> ReferenceMotion {
        ReferenceMotion::new(
            vec!["x".into()],
            vec![(0.0, vec![0.0]), (1.0, vec![2.0])],
            1.0,
            cyclic,
        )
        .unwrap()
    }

    #[test]
    fn phase_examples() {
        let walk = ReferenceMotion::new(
            vec!["x".into()],
            vec![(0.0, vec![0.0]), (1.2, vec![1.0])],
            1.26,
            true,
        )
        .unwrap();
        assert_eq!(walk.phase_of(0.0).value(), 0.0);
        assert!(walk.phase_of(1.26).value().abs() < 1e-12);
        let noncyc = two_frame(false);
        assert_eq!(noncyc.phase_of(2.0).value(), 1.0);
    }

    #[test]
    fn phase_periodicity() {
        let walk = ReferenceMotion::new(
            vec!["x".into()],
            vec![(0.0, vec![0.0]), (1.0, vec![1.0])],
            1.26,
            true,
        )
        .unwrap();
        for k in 1..5u32 {
            let t = 0.37;
            let p0 = walk.phase_of(t).value();
            let pk = walk.phase_of(t + k as f64 * 1.26).value();
            assert_relative_eq!(p0, pk, epsilon = 1e-12);
        }
    }

    #[test]
    fn interpolate_knot_and_midpoint() {
        let m = two_frame(false);
        assert_eq!(m.interpolate(Phase::new(0.0))[0], 0.0);
        assert_eq!(m.interpolate(Phase::new(1.0))[0], 2.0);
        // linear interpolation oracle: midpoint of 0 and 2 is 1
        assert_relative_eq!(m.interpolate(Phase::new(0.5))[0], 1.0);
    }

    #[test]
    fn interpolate_cyclic_wrap() {
        // last frame value 1 at phase 0.9, first frame value 0; phase 0.95
        // is halfway across the wrap -> 0.5
        let m = ReferenceMotion::new(
            vec!["x".into()],
            vec![(0.0, vec![0.0]), (0.9, vec![1.0])],
            1.0,
            true,
        )
        .unwrap();
        assert_relative_eq!(m.interpolate(Phase::new(0.95))[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ffc_action_examples() {
        let m = ReferenceMotion::new(
            vec!["x".into(), "a".into()],
            vec![(0.0, vec![0.0, 1.0]), (1.0, vec![2.0, 3.0])],
            1.0,
            false,
        )
        .unwrap();
        let idx = m.action_indices(&["a".into()]).unwrap();
        assert_eq!(m.ffc_action(&idx, Phase::new(0.0)), vec![1.0]);
        assert_relative_eq!(m.ffc_action(&idx, Phase::new(0.5))[0], 2.0);
        assert!(m.action_indices(&["missing".into()]).is_err());
    }

    #[test]
    fn ffc_constant_reference() {
        let m = ReferenceMotion::new(
            vec!["a".into()],
            vec![(0.0, vec![0.7]), (1.0, vec![0.7])],
            1.0,
            false,
        )
        .unwrap();
        let idx = m.action_indices(&["a".into()]).unwrap();
        for p in [0.0, 0.3, 0.99] {
            assert_eq!(m.ffc_action(&idx, Phase::new(p)), vec![0.7]);
        }
    }

    #[test]
    fn stored_frames_reproduced_exactly() {
        let m = ReferenceMotion::new(
            vec!["x".into()],
            vec![(0.0, vec![0.1]), (0.4, vec![-0.3]), (1.0, vec![0.8])],
            1.0,
            false,
        )
        .unwrap();
        for (t, vals) in m.frames().to_vec() {
            assert_eq!(m.interpolate(m.phase_of(t)), vals);
        }
    }

    #[test]
    fn interpolation_is_lipschitz() {
        let m = ReferenceMotion::new(
            vec!["x".into()],
            vec![(0.0, vec![0.0]), (0.5, vec![3.0]), (1.0, vec![-1.0])],
            1.0,
            false,
        )
        .unwrap();
        // max finite-difference slope in phase units
        let l = ((3.0f64 - 0.0) / 0.5).abs().max(((-1.0f64 - 3.0) / 0.5).abs());
        let eps = 1e-4;
        let mut p = 0.0;
        while p + eps <= 1.0 {
            let d = (m.interpolate(Phase::new(p + eps))[0] - m.interpolate(Phase::new(p))[0]).abs();
            assert!(d <= l * eps + 1e-12);
            p += 0.0137;
        }
    }

    #[test]
    fn csv_round_trip() {
        let m = two_frame(true);
        let again = ReferenceMotion::parse_csv(&m.to_csv(), Some(1.0), true).unwrap();
        assert_eq!(again.frames(), m.frames());
        assert_eq!(again.channel_names(), m.channel_names());
    }

    #[test]
    fn invalid_frames_rejected() {
        assert!(ReferenceMotion::new(vec!["x".into()], vec![], 1.0, false).is_err());
        assert!(ReferenceMotion::new(
            vec!["x".into()],
            vec![(0.5, vec![0.0])],
            1.0,
            false
        )
        .is_err());
        assert!(ReferenceMotion::new(
            vec!["x".into()],
            vec![(0.0, vec![0.0]), (0.0, vec![1.0])],
            1.0,
            false
        )
        .is_err());
    }
}
