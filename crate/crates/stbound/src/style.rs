//! Style-exploration rewards: kinematic energy in the CoM frame, convex-hull
//! volume of tracked points, Gram-matrix similarity to a target style, and
//! an acceleration regularizer. All terms map into [0, 1] and multiply.

use std::collections::VecDeque;

use thiserror::Error;

use crate::geom::{hull_area_2d, hull_volume_3d};

#[derive(Debug, Error)]
pub enum StyleError {
    #[error("E_min must be < E_max")]
    BadEnergyRange,
    #[error("alpha must be positive")]
    BadAlpha,
    #[error("regularizer weights must sum to 1 (got {0})")]
    BadWeights(f64),
    #[error("regularizer scales must be positive")]
    BadScales,
    #[error("gram matrices have mismatched shapes")]
    ShapeMismatch,
    #[error("point dimension must be 2 or 3 (got {0})")]
    BadPointDim(usize),
}

/// Which style objective is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StyleMode {
    EnergyUp,
    EnergyDown,
    VolumeUp,
    VolumeDown,
    Gram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StyleConfig {
    pub mode: StyleMode,
    /// energy range linearly rewarded, in J
    pub e_min: f64,
    pub e_max: f64,
    /// scale of the volume or gram exponential
    pub alpha: f64,
    /// regularizer weights (sum 1) and per-term scales
    pub reg_weights: Vec<f64>,
    pub reg_scales: Vec<f64>,
}

impl StyleConfig {
    /// Published constants: energy range [20, 100] J, alpha 0.12.
    pub fn defaults(mode: StyleMode) -> Self {
        StyleConfig {
            mode,
            e_min: 20.0,
            e_max: 100.0,
            alpha: 0.12,
            reg_weights: vec![1.0],
            reg_scales: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<(), StyleError> {
        if self.e_min >= self.e_max {
            return Err(StyleError::BadEnergyRange);
        }
        if self.alpha <= 0.0 {
            return Err(StyleError::BadAlpha);
        }
        let ws: f64 = self.reg_weights.iter().sum();
        if (ws - 1.0).abs() > 1e-9 || self.reg_weights.len() != self.reg_scales.len() {
            return Err(StyleError::BadWeights(ws));
        }
        if self.reg_scales.iter().any(|&b| b <= 0.0) {
            return Err(StyleError::BadScales);
        }
        Ok(())
    }
}

/// Mass-weighted mean velocity.
pub fn com_velocity(masses: &[f64], velocities: &[Vec<f64>]) -> Vec<f64> {
    assert_eq!(masses.len(), velocities.len());
    assert!(!masses.is_empty());
    let dim = velocities[0].len();
    let total: f64 = masses.iter().sum();
    let mut com = vec![0.0; dim];
    for (m, v) in masses.iter().zip(velocities.iter()) {
        for d in 0..dim {
            com[d] += m * v[d];
        }
    }
    for c in com.iter_mut() {
        *c /= total;
    }
    com
}

/// E = sum_i 1/2 m_i |v_i - v_com|^2, the kinetic energy left after removing
/// the shared translation.
pub fn kinematic_energy(masses: &[f64], velocities: &[Vec<f64>], v_com: &[f64]) -> f64 {
    masses
        .iter()
        .zip(velocities.iter())
        .map(|(m, v)| {
            let sq: f64 = v
                .iter()
                .zip(v_com.iter())
                .map(|(vi, ci)| (vi - ci) * (vi - ci))
                .sum();
            0.5 * m * sq
        })
        .sum()
}

/// Linear ramp over [E_min, E_max], clamped; `increase` rewards high energy.
pub fn energy_reward(e: f64, e_min: f64, e_max: f64, increase: bool) -> f64 {
    let frac = if increase {
        (e - e_min) / (e_max - e_min)
    } else {
        (e_max - e) / (e_max - e_min)
    };
    frac.clamp(0.0, 1.0)
}

/// Hull area for 2D points, hull volume for 3D; degenerate sets give 0.
pub fn convex_hull_volume(points: &[Vec<f64>]) -> Result<f64, StyleError> {
    assert!(!points.is_empty());
    match points[0].len() {
        2 => {
            let p: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
            Ok(hull_area_2d(&p))
        }
        3 => {
            let p: Vec<[f64; 3]> = points.iter().map(|p| [p[0], p[1], p[2]]).collect();
            Ok(hull_volume_3d(&p))
        }
        d => Err(StyleError::BadPointDim(d)),
    }
}

/// exp(-V/alpha) when shrinking the hull, 1 - exp(-V/alpha) when growing it.
pub fn volume_reward(v: f64, alpha: f64, increase: bool) -> f64 {
    let shrink = (-v / alpha).exp();
    if increase {
        1.0 - shrink
    } else {
        shrink
    }
}

/// G = F^T F / T over a (time x channels) feature window.
pub fn gram_matrix(features: &[Vec<f64>]) -> Vec<Vec<f64>> {
    assert!(!features.is_empty());
    let t = features.len();
    let c = features[0].len();
    let mut g = vec![vec![0.0; c]; c];
    for row in features {
        debug_assert_eq!(row.len(), c);
        for i in 0..c {
            for j in 0..c {
                g[i][j] += row[i] * row[j];
            }
        }
    }
    for gi in g.iter_mut() {
        for gij in gi.iter_mut() {
            *gij /= t as f64;
        }
    }
    g
}

/// exp(-||G_s - G||_F / alpha), entrywise Frobenius norm.
pub fn gram_style_reward(
    g_style: &[Vec<f64>],
    g: &[Vec<f64>],
    alpha: f64,
) -> Result<f64, StyleError> {
    if g_style.len() != g.len()
        || g_style
            .iter()
            .zip(g.iter())
            .any(|(a, b)| a.len() != b.len())
    {
        return Err(StyleError::ShapeMismatch);
    }
    let mut sq = 0.0;
    for (ra, rb) in g_style.iter().zip(g.iter()) {
        for (a, b) in ra.iter().zip(rb.iter()) {
            sq += (a - b) * (a - b);
        }
    }
    Ok((-sq.sqrt() / alpha).exp())
}

/// exp(-sum_i w_i a_i / beta_i) over nonnegative magnitudes.
pub fn regularization_reward(a: &[f64], cfg: &StyleConfig) -> f64 {
    debug_assert_eq!(a.len(), cfg.reg_weights.len());
    let s: f64 = a
        .iter()
        .zip(cfg.reg_weights.iter())
        .zip(cfg.reg_scales.iter())
        .map(|((ai, wi), bi)| wi * ai / bi)
        .sum();
    (-s).exp()
}

/// r = r_s * r_reg.
pub fn style_total(r_s: f64, r_reg: f64) -> f64 {
    r_s * r_reg
}

/// Declared mapping from state-feature rows to standardized feature rows;
/// identity channels shifted and scaled by fixed per-channel statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExtractor {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl FeatureExtractor {
    pub fn identity(dim: usize) -> Self {
        FeatureExtractor {
            means: vec![0.0; dim],
            stds: vec![1.0; dim],
        }
    }

    pub fn standardizing(means: Vec<f64>, stds: Vec<f64>) -> Self {
        debug_assert_eq!(means.len(), stds.len());
        debug_assert!(stds.iter().all(|&s| s > 0.0));
        FeatureExtractor { means, stds }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn extract_row(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.means.iter())
            .zip(self.stds.iter())
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }
}

/// Sliding window of extracted feature rows spanning one reference cycle;
/// shorter prefixes are zero-padded so the Gram matrix has a stable scale.
#[derive(Debug, Clone)]
pub struct GramWindow {
    extractor: FeatureExtractor,
    len: usize,
    rows: VecDeque<Vec<f64>>,
}

impl GramWindow {
    pub fn new(extractor: FeatureExtractor, len: usize) -> Self {
        assert!(len >= 1);
        GramWindow {
            extractor,
            len,
            rows: VecDeque::with_capacity(len),
        }
    }

    pub fn push(&mut self, raw: &[f64]) {
        if self.rows.len() == self.len {
            self.rows.pop_front();
        }
        self.rows.push_back(self.extractor.extract_row(raw));
    }

    pub fn clear(&mut self) {
        self.rows.clear();
    }

    /// Gram matrix over the window, zero-padded up to the full length.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let dim = self.extractor.dim();
        let mut padded: Vec<Vec<f64>> = Vec::with_capacity(self.len);
        for _ in self.rows.len()..self.len {
            padded.push(vec![0.0; dim]);
        }
        padded.extend(self.rows.iter().cloned());
        gram_matrix(&padded)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn energy_zero_at_rest_and_shared_velocity() {
        let masses = [1.0, 2.0];
        let rest = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        let com = com_velocity(&masses, &rest);
        assert_eq!(kinematic_energy(&masses, &rest, &com), 0.0);
        let shared = vec![vec![1.0, -2.0], vec![1.0, -2.0]];
        let com = com_velocity(&masses, &shared);
        assert_relative_eq!(kinematic_energy(&masses, &shared, &com), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn energy_two_unit_masses_opposed() {
        let masses = [1.0, 1.0];
        let vels = vec![vec![1.0], vec![-1.0]];
        let com = com_velocity(&masses, &vels);
        assert_eq!(com, vec![0.0]);
        assert_relative_eq!(kinematic_energy(&masses, &vels, &com), 1.0);
    }

    #[test]
    fn energy_com_frame_invariance() {
        let masses = [1.0, 3.0, 0.5];
        let vels = vec![vec![0.3, -0.1], vec![0.0, 0.8], vec![-1.2, 0.4]];
        let com = com_velocity(&masses, &vels);
        let e0 = kinematic_energy(&masses, &vels, &com);
        let boost = [5.0, -7.0];
        let shifted: Vec<Vec<f64>> = vels
            .iter()
            .map(|v| vec![v[0] + boost[0], v[1] + boost[1]])
            .collect();
        let com2 = com_velocity(&masses, &shifted);
        let e1 = kinematic_energy(&masses, &shifted, &com2);
        assert_relative_eq!(e0, e1, max_relative = 1e-9);
    }

    #[test]
    fn energy_reward_examples() {
        assert_eq!(energy_reward(10.0, 20.0, 100.0, false), 1.0);
        assert_relative_eq!(energy_reward(60.0, 20.0, 100.0, false), 0.5);
        assert_eq!(energy_reward(150.0, 20.0, 100.0, true), 1.0);
        assert_eq!(energy_reward(150.0, 20.0, 100.0, false), 0.0);
    }

    #[test]
    fn energy_modes_complementary_inside_range() {
        for e in [20.0, 35.0, 60.0, 99.0, 100.0] {
            let up = energy_reward(e, 20.0, 100.0, true);
            let down = energy_reward(e, 20.0, 100.0, false);
            assert_relative_eq!(up + down, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn hull_volume_examples() {
        let square = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ];
        assert_relative_eq!(convex_hull_volume(&square).unwrap(), 1.0);
        let mut with_center = square.clone();
        with_center.push(vec![0.5, 0.5]);
        assert_relative_eq!(convex_hull_volume(&with_center).unwrap(), 1.0);
        let line = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(convex_hull_volume(&line).unwrap(), 0.0);
        assert!(convex_hull_volume(&[vec![1.0]]).is_err());
    }

    #[test]
    fn volume_reward_examples() {
        assert_eq!(volume_reward(0.0, 0.12, false), 1.0);
        assert_relative_eq!(
            volume_reward(0.12, 0.12, false),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );
        assert_relative_eq!(volume_reward(1e6, 0.12, true), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gram_matrix_examples() {
        let zeros = vec![vec![0.0, 0.0]; 5];
        for row in gram_matrix(&zeros) {
            assert!(row.iter().all(|&x| x == 0.0));
        }
        let constant = vec![vec![2.0]; 7];
        assert_relative_eq!(gram_matrix(&constant)[0][0], 4.0);
        let f = vec![vec![1.0, 2.0], vec![-0.5, 0.3]];
        let g1 = gram_matrix(&f);
        let scaled: Vec<Vec<f64>> = f
            .iter()
            .map(|r| r.iter().map(|x| 3.0 * x).collect())
            .collect();
        let g9 = gram_matrix(&scaled);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(g9[i][j], 9.0 * g1[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gram_is_symmetric_psd() {
        let f = vec![
            vec![0.3, -1.0, 0.2],
            vec![1.1, 0.4, -0.6],
            vec![-0.2, 0.9, 0.5],
            vec![0.0, 0.1, 0.7],
        ];
        let g = gram_matrix(&f);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(g[i][j], g[j][i], epsilon = 1e-12);
            }
        }
        // x^T G x = |F x|^2 / T >= 0 for arbitrary x
        for x in [[1.0, 0.0, 0.0], [0.4, -0.7, 0.3], [-1.0, 2.0, 1.5]] {
            let mut q = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    q += x[i] * g[i][j] * x[j];
                }
            }
            assert!(q >= -1e-12, "quadratic form {q}");
        }
    }

    #[test]
    fn gram_style_reward_examples() {
        let g = vec![vec![1.0, 0.2], vec![0.2, 0.5]];
        assert_relative_eq!(gram_style_reward(&g, &g, 0.12).unwrap(), 1.0);
        let gs = vec![vec![0.0]];
        let g2 = vec![vec![2.0]];
        assert_relative_eq!(
            gram_style_reward(&gs, &g2, 1.0).unwrap(),
            (-2.0f64).exp(),
            epsilon = 1e-12
        );
        assert!(gram_style_reward(&gs, &g, 1.0).is_err());
    }

    #[test]
    fn regularization_examples() {
        let cfg = StyleConfig {
            mode: StyleMode::EnergyDown,
            e_min: 20.0,
            e_max: 100.0,
            alpha: 0.12,
            reg_weights: vec![1.0],
            reg_scales: vec![0.4],
        };
        assert_eq!(regularization_reward(&[0.0], &cfg), 1.0);
        assert_relative_eq!(
            regularization_reward(&[0.4], &cfg),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );
        let doubled = StyleConfig {
            reg_scales: vec![0.8],
            ..cfg.clone()
        };
        let a = [0.4];
        assert_relative_eq!(
            regularization_reward(&a, &doubled).ln(),
            regularization_reward(&a, &cfg).ln() / 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn style_total_examples() {
        assert_eq!(style_total(0.7, 1.0), 0.7);
        assert_eq!(style_total(0.0, 0.9), 0.0);
        assert_relative_eq!(style_total(0.5, 0.8), 0.4);
    }

    #[test]
    fn config_validation() {
        let mut cfg = StyleConfig::defaults(StyleMode::EnergyDown);
        assert!(cfg.validate().is_ok());
        cfg.e_min = 200.0;
        assert!(cfg.validate().is_err());
        let mut cfg = StyleConfig::defaults(StyleMode::VolumeDown);
        cfg.alpha = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = StyleConfig::defaults(StyleMode::Gram);
        cfg.reg_weights = vec![0.5, 0.4];
        cfg.reg_scales = vec![1.0, 1.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn gram_window_slides_and_pads() {
        let mut w = GramWindow::new(FeatureExtractor::identity(1), 4);
        // empty window: zero padding everywhere
        assert_eq!(w.gram()[0][0], 0.0);
        w.push(&[2.0]);
        // one live row of value 2 among 4 slots -> 4/4 = 1
        assert_relative_eq!(w.gram()[0][0], 1.0);
        for _ in 0..10 {
            w.push(&[2.0]);
        }
        assert_relative_eq!(w.gram()[0][0], 4.0);
        w.clear();
        assert_eq!(w.gram()[0][0], 0.0);
    }

    #[test]
    fn extractor_standardizes() {
        let fx = FeatureExtractor::standardizing(vec![1.0, -2.0], vec![2.0, 0.5]);
        assert_eq!(fx.extract_row(&[1.0, -2.0]), vec![0.0, 0.0]);
        assert_eq!(fx.extract_row(&[3.0, -1.5]), vec![1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn rewards_stay_in_unit_interval(
            e in -50.0..200.0f64,
            v in 0.0..10.0f64,
            a in 0.0..5.0f64,
        ) {
            let cfg = StyleConfig {
                reg_weights: vec![1.0],
                reg_scales: vec![0.5],
                ..StyleConfig::defaults(StyleMode::EnergyDown)
            };
            for inc in [false, true] {
                let r = energy_reward(e, 20.0, 100.0, inc);
                prop_assert!((0.0..=1.0).contains(&r));
                let r = volume_reward(v, 0.12, inc);
                prop_assert!((0.0..=1.0).contains(&r));
            }
            let r = regularization_reward(&[a], &cfg);
            prop_assert!((0.0..=1.0).contains(&r));
        }

        #[test]
        fn hull_area_matches_shoelace_oracle(
            pts in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 3..8)
        ) {
            // brute force: every simple polygon lies inside the hull of its
            // vertices, so max shoelace area over all simple-polygon
            // orderings of every subset equals the convex hull area
            let points: Vec<Vec<f64>> = pts.iter().map(|&(x, y)| vec![x, y]).collect();
            let hull = convex_hull_volume(&points).unwrap();
            let mut best = 0.0f64;
            let n = pts.len();
            fn segs_cross(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
                let orient = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| {
                    (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)
                };
                let d1 = orient(a, b, c);
                let d2 = orient(a, b, d);
                let d3 = orient(c, d, a);
                let d4 = orient(c, d, b);
                // treat any touching or collinear overlap as a crossing
                // (conservative: those orderings are discarded)
                d1 * d2 <= 0.0 && d3 * d4 <= 0.0
            }
            fn is_simple(perm: &[usize], pts: &[(f64, f64)]) -> bool {
                let k = perm.len();
                for i in 0..k {
                    let (a, b) = (pts[perm[i]], pts[perm[(i + 1) % k]]);
                    if a == b {
                        return false;
                    }
                    for j in i + 1..k {
                        // skip edge pairs sharing a vertex
                        if j == i || (j + 1) % k == i || j == (i + 1) % k {
                            continue;
                        }
                        let (c, d) = (pts[perm[j]], pts[perm[(j + 1) % k]]);
                        if segs_cross(a, b, c, d) {
                            return false;
                        }
                    }
                }
                true
            }
            fn heaps(k: usize, perm: &mut Vec<usize>, pts: &[(f64, f64)], best: &mut f64) {
                if k == 1 {
                    if is_simple(perm, pts) {
                        let mut s = 0.0;
                        for i in 0..perm.len() {
                            let (x0, y0) = pts[perm[i]];
                            let (x1, y1) = pts[perm[(i + 1) % perm.len()]];
                            s += x0 * y1 - x1 * y0;
                        }
                        *best = best.max(s.abs() / 2.0);
                    }
                    return;
                }
                for i in 0..k {
                    heaps(k - 1, perm, pts, best);
                    if k % 2 == 0 {
                        perm.swap(i, k - 1);
                    } else {
                        perm.swap(0, k - 1);
                    }
                }
            }
            // interior points shrink any polygon that must visit them, so
            // the max runs over every subset of >= 3 points as well
            for mask in 0u32..(1 << n) {
                if mask.count_ones() < 3 {
                    continue;
                }
                let mut subset: Vec<usize> =
                    (0..n).filter(|i| mask & (1 << i) != 0).collect();
                let k = subset.len();
                heaps(k, &mut subset, &pts, &mut best);
            }
            prop_assert!((hull - best).abs() <= 1e-9 * best.max(1.0),
                "hull {hull} vs oracle {best}");
        }

        #[test]
        fn hull_rigid_transform_invariance(
            pts in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 3..10),
            theta in 0.0..std::f64::consts::TAU,
            tx in -4.0..4.0f64,
            ty in -4.0..4.0f64,
        ) {
            let points: Vec<Vec<f64>> = pts.iter().map(|&(x, y)| vec![x, y]).collect();
            let (c, s) = (theta.cos(), theta.sin());
            let moved: Vec<Vec<f64>> = pts
                .iter()
                .map(|&(x, y)| vec![c * x - s * y + tx, s * x + c * y + ty])
                .collect();
            let a0 = convex_hull_volume(&points).unwrap();
            let a1 = convex_hull_volume(&moved).unwrap();
            prop_assert!((a0 - a1).abs() <= 1e-9 * a0.max(1.0));
        }

        #[test]
        fn hull_monotone_under_added_points(
            pts in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 4..10)
        ) {
            let all: Vec<Vec<f64>> = pts.iter().map(|&(x, y)| vec![x, y]).collect();
            let fewer = all[..all.len() - 1].to_vec();
            let a_small = convex_hull_volume(&fewer).unwrap();
            let a_big = convex_hull_volume(&all).unwrap();
            prop_assert!(a_big >= a_small - 1e-12);
        }
    }
}
