//! Synthetic reference motions for the toy systems, generated analytically
//! so position, velocity, and feedforward action channels stay consistent.

use std::f64::consts::PI;

use crate::reference::{RefError, ReferenceMotion};

/// Frames per generated reference.
const FRAMES: usize = 101;

/// Look up a generated reference by name.
pub fn builtin(name: &str) -> Result<ReferenceMotion, RefError> {
    match name {
        "di_rest_to_rest" => di_rest_to_rest(2.0, 5.0),
        "di_hold" => di_hold(5.0),
        "di_sine" => di_sine(0.5, 5.0, 1.0),
        "di_sine_half" => di_sine(0.5, 5.0, 0.5),
        "di_sine_noff" => di_sine(0.5, 5.0, 0.0),
        "pendulum_swing" => pendulum_swing(1.0, 2.0, 1.0),
        other => Err(RefError::UnknownBuiltin(other.into())),
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &[
        "di_rest_to_rest",
        "di_hold",
        "di_sine",
        "di_sine_half",
        "di_sine_noff",
        "pendulum_swing",
    ]
}

fn sample(
    channels: Vec<String>,
    duration: f64,
    cyclic: bool,
    f: impl Fn(f64) -> Vec<f64>,
) -> Result<ReferenceMotion, RefError> {
    // cyclic motions omit the duplicate endpoint frame; the wrap segment
    // interpolates back to frame 0
    let n = if cyclic { FRAMES - 1 } else { FRAMES };
    let frames = (0..n)
        .map(|i| {
            let t = duration * i as f64 / (FRAMES - 1) as f64;
            (t, f(t))
        })
        .collect();
    ReferenceMotion::new(channels, frames, duration, cyclic)
}

/// Minimum-jerk translation from rest at 0 to rest at `dist` over `t_end`.
/// Peak acceleration is about 5.77 * dist / t_end^2, well under the default
/// actuation limit for the toy setups.
pub fn di_rest_to_rest(dist: f64, t_end: f64) -> Result<ReferenceMotion, RefError> {
    sample(
        vec!["x".into(), "v".into(), "a".into()],
        t_end,
        false,
        move |t| {
            let s = t / t_end;
            let x = dist * (10.0 * s.powi(3) - 15.0 * s.powi(4) + 6.0 * s.powi(5));
            let v = dist / t_end * (30.0 * s.powi(2) - 60.0 * s.powi(3) + 30.0 * s.powi(4));
            let a = dist / (t_end * t_end) * (60.0 * s - 180.0 * s.powi(2) + 120.0 * s.powi(3));
            vec![x, v, a]
        },
    )
}

/// Hold position 0.
pub fn di_hold(t_end: f64) -> Result<ReferenceMotion, RefError> {
    sample(
        vec!["x".into(), "v".into(), "a".into()],
        t_end,
        false,
        |_| vec![0.0, 0.0, 0.0],
    )
}

/// Cyclic sinusoid x = amp * sin(2 pi t / period). The action channel
/// carries `ff_scale` times the consistent acceleration; at 0 the feedback
/// net must supply all of the tracking effort, at 1 replay is exact.
pub fn di_sine(amp: f64, period: f64, ff_scale: f64) -> Result<ReferenceMotion, RefError> {
    let w = 2.0 * PI / period;
    sample(
        vec!["x".into(), "v".into(), "a".into()],
        period,
        true,
        move |t| {
            let x = amp * (w * t).sin();
            let v = amp * w * (w * t).cos();
            let a = -ff_scale * amp * w * w * (w * t).sin();
            vec![x, v, a]
        },
    )
}

/// Cyclic pendulum swing theta = amp * sin(2 pi t / period), with the PD
/// target channel set to the reference angle and tip coordinates derived
/// from the rod length.
pub fn pendulum_swing(amp: f64, period: f64, length: f64) -> Result<ReferenceMotion, RefError> {
    let w = 2.0 * PI / period;
    sample(
        vec![
            "theta".into(),
            "omega".into(),
            "tip_x".into(),
            "tip_y".into(),
            "q_target".into(),
        ],
        period,
        true,
        move |t| {
            let th = amp * (w * t).sin();
            let om = amp * w * (w * t).cos();
            vec![th, om, length * th.sin(), -length * th.cos(), th]
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::reference::Phase;

    #[test]
    fn rest_to_rest_endpoints_and_limits() {
        let m = di_rest_to_rest(2.0, 5.0).unwrap();
        let first = &m.frames()[0].1;
        let last = &m.frames()[m.frames().len() - 1].1;
        assert_relative_eq!(first[0], 0.0);
        assert_relative_eq!(first[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(last[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(last[1], 0.0, epsilon = 1e-10);
        for (_, vals) in m.frames() {
            assert!(vals[2].abs() <= 2.0, "accel {} exceeds limit", vals[2]);
        }
    }

    #[test]
    fn rest_to_rest_consistent_derivatives() {
        // central difference of x matches the stored v channel
        let m = di_rest_to_rest(2.0, 5.0).unwrap();
        let h = 1e-4;
        for t in [0.5, 1.7, 2.5, 4.2] {
            let xp = m.interpolate(m.phase_of(t + h))[0];
            let xm = m.interpolate(m.phase_of(t - h))[0];
            let v = m.interpolate(m.phase_of(t))[1];
            assert_relative_eq!((xp - xm) / (2.0 * h), v, epsilon = 2e-3);
        }
    }

    #[test]
    fn sine_feedforward_scale() {
        let m = di_sine(0.5, 5.0, 0.0).unwrap();
        let ai = m.channel_index("a").unwrap();
        for p in [0.0, 0.3, 0.77] {
            assert_eq!(m.value_at(ai, Phase::new(p)), 0.0);
        }
        let full = di_sine(0.5, 5.0, 1.0).unwrap();
        let half = di_sine(0.5, 5.0, 0.5).unwrap();
        assert!(full.value_at(ai, Phase::new(0.25)).abs() > 0.1);
        assert_relative_eq!(
            half.value_at(ai, Phase::new(0.25)),
            0.5 * full.value_at(ai, Phase::new(0.25)),
            epsilon = 1e-12
        );
    }

    #[test]
    fn sine_is_cyclic_and_wraps_smoothly() {
        let m = di_sine(0.5, 5.0, 1.0).unwrap();
        assert!(m.cyclic());
        let near_end = m.interpolate(Phase::new(0.999))[0];
        let start = m.interpolate(Phase::new(0.0))[0];
        assert!((near_end - start).abs() < 0.05);
    }

    #[test]
    fn pendulum_swing_tip_consistency() {
        let m = pendulum_swing(1.0, 2.0, 1.0).unwrap();
        let (ti, xi, yi) = (
            m.channel_index("theta").unwrap(),
            m.channel_index("tip_x").unwrap(),
            m.channel_index("tip_y").unwrap(),
        );
        for p in [0.0, 0.2, 0.6, 0.9] {
            let vals = m.interpolate(Phase::new(p));
            assert_relative_eq!(vals[xi], vals[ti].sin(), epsilon = 1e-12);
            assert_relative_eq!(vals[yi], -vals[ti].cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn unknown_builtin_rejected() {
        assert!(builtin("nonsense").is_err());
        for name in builtin_names() {
            assert!(builtin(name).is_ok());
        }
    }
}
