//! Brute-force feasible-region oracle for the 1D bounded-acceleration toy
//! problem. Forward and backward reachable sets are propagated as exact
//! convex polygons in the (x, v) plane (the one-step map is a shear plus a
//! Minkowski segment sum, so convexity is preserved), then rasterized onto a
//! boolean occupancy grid per time step. The feasible region is the cellwise
//! intersection of the forward and backward grids.

use num_traits::Float;
use thiserror::Error;

use crate::geom::{clip_halfplane, convex_hull_2d, P2};

#[derive(Debug, Error)]
pub enum FeasibleError {
    #[error("start set must sit at t=0")]
    StartNotAtZero,
    #[error("end set must sit at t=T_end")]
    EndNotAtEnd,
    #[error("empty start or end set")]
    EmptySet,
    #[error("grid shapes do not match")]
    ShapeMismatch,
}

/// Discretization of the (x, v, t) spacetime.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<F: Float = f64> {
    pub x_lo: F,
    pub x_hi: F,
    pub v_lo: F,
    pub v_hi: F,
    pub nx: usize,
    pub nv: usize,
    pub nt: usize,
    pub t_end: F,
}

impl Default for GridSpec<f64> {
    fn default() -> Self {
        GridSpec {
            x_lo: -6.0,
            x_hi: 6.0,
            v_lo: -6.0,
            v_hi: 6.0,
            nx: 240,
            nv: 240,
            nt: 250,
            t_end: 5.0,
        }
    }
}

impl<F: Float> GridSpec<F> {
    pub fn dt(&self) -> F {
        self.t_end / F::from(self.nt).unwrap()
    }

    pub fn hx(&self) -> F {
        (self.x_hi - self.x_lo) / F::from(self.nx).unwrap()
    }

    pub fn hv(&self) -> F {
        (self.v_hi - self.v_lo) / F::from(self.nv).unwrap()
    }

    pub fn x_center(&self, ix: usize) -> F {
        self.x_lo + self.hx() * (F::from(ix).unwrap() + F::from(0.5).unwrap())
    }

    pub fn v_center(&self, iv: usize) -> F {
        self.v_lo + self.hv() * (F::from(iv).unwrap() + F::from(0.5).unwrap())
    }

    pub fn cell_of(&self, x: F, v: F) -> (usize, usize) {
        let ix = ((x - self.x_lo) / self.hx()).floor();
        let iv = ((v - self.v_lo) / self.hv()).floor();
        let clamp = |i: F, n: usize| -> usize {
            let i = i.max(F::zero()).min(F::from(n - 1).unwrap());
            i.to_usize().unwrap()
        };
        (clamp(ix, self.nx), clamp(iv, self.nv))
    }

    /// Time step nearest to `t`.
    pub fn step_of(&self, t: F) -> usize {
        (t / self.dt()).round().to_usize().unwrap().min(self.nt)
    }

    pub fn refined(&self, factor: usize) -> GridSpec<F> {
        GridSpec {
            nx: self.nx * factor,
            nv: self.nv * factor,
            nt: self.nt * factor,
            ..self.clone()
        }
    }
}

/// A spacetime bound for the toy problem: a box or point event in (x, v) at
/// a single time.
#[derive(Debug, Clone, PartialEq)]
pub enum ToyBound<F: Float = f64> {
    Box { x: (F, F), v: (F, F), t: F },
    Point { x: F, v: F, t: F },
}

impl<F: Float> ToyBound<F> {
    pub fn time(&self) -> F {
        match self {
            ToyBound::Box { t, .. } | ToyBound::Point { t, .. } => *t,
        }
    }

    /// Vertex list of the bound region; points stay exact points.
    fn polygon(&self) -> Vec<P2<F>> {
        match *self {
            ToyBound::Point { x, v, .. } => vec![[x, v]],
            ToyBound::Box { x, v, .. } => {
                vec![[x.0, v.0], [x.1, v.0], [x.1, v.1], [x.0, v.1]]
            }
        }
    }

    fn clip(&self, poly: &[P2<F>]) -> Vec<P2<F>> {
        match *self {
            ToyBound::Point { x, v, .. } => {
                // a point constraint collapses the set to that point if inside
                if point_in_convex(poly, [x, v]) {
                    vec![[x, v]]
                } else {
                    Vec::new()
                }
            }
            ToyBound::Box { x, v, .. } => {
                let mut p = poly.to_vec();
                p = clip_halfplane(&p, F::one(), F::zero(), x.1);
                p = clip_halfplane(&p, -F::one(), F::zero(), -x.0);
                p = clip_halfplane(&p, F::zero(), F::one(), v.1);
                p = clip_halfplane(&p, F::zero(), -F::one(), -v.0);
                p
            }
        }
    }
}

fn point_in_convex<F: Float>(poly: &[P2<F>], p: P2<F>) -> bool {
    match poly.len() {
        0 => false,
        1 => poly[0] == p,
        2 => {
            // on segment
            let a = poly[0];
            let b = poly[1];
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            if cross.abs() > F::from(1e-12).unwrap() {
                return false;
            }
            let dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1]);
            let len2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
            dot >= F::zero() && dot <= len2
        }
        _ => {
            for i in 0..poly.len() {
                let a = poly[i];
                let b = poly[(i + 1) % poly.len()];
                let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                if cross < F::zero() {
                    return false;
                }
            }
            true
        }
    }
}

/// Boolean occupancy over (x, v) cells, one layer per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachGrid {
    pub nx: usize,
    pub nv: usize,
    pub nt: usize,
    /// bit-packed, layer-major: bit index = step*(nx*nv) + iv*nx + ix
    bits: Vec<u64>,
}

impl ReachGrid {
    pub fn empty(nx: usize, nv: usize, nt: usize) -> Self {
        let nbits = (nt + 1) * nx * nv;
        ReachGrid {
            nx,
            nv,
            nt,
            bits: vec![0; (nbits + 63) / 64],
        }
    }

    fn bit(&self, step: usize, ix: usize, iv: usize) -> usize {
        step * self.nx * self.nv + iv * self.nx + ix
    }

    pub fn mark(&mut self, step: usize, ix: usize, iv: usize) {
        let b = self.bit(step, ix, iv);
        self.bits[b / 64] |= 1u64 << (b % 64);
    }

    pub fn marked(&self, step: usize, ix: usize, iv: usize) -> bool {
        let b = self.bit(step, ix, iv);
        self.bits[b / 64] & (1u64 << (b % 64)) != 0
    }

    pub fn marked_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn total_cells(&self) -> usize {
        (self.nt + 1) * self.nx * self.nv
    }

    pub fn iter_marked(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..=self.nt).flat_map(move |step| {
            (0..self.nv).flat_map(move |iv| {
                (0..self.nx).filter_map(move |ix| {
                    if self.marked(step, ix, iv) {
                        Some((step, ix, iv))
                    } else {
                        None
                    }
                })
            })
        })
    }

    /// Cellwise intersection.
    pub fn intersect(&self, other: &ReachGrid) -> Result<ReachGrid, FeasibleError> {
        if self.nx != other.nx || self.nv != other.nv || self.nt != other.nt {
            return Err(FeasibleError::ShapeMismatch);
        }
        let bits = self
            .bits
            .iter()
            .zip(other.bits.iter())
            .map(|(a, b)| a & b)
            .collect();
        Ok(ReachGrid {
            nx: self.nx,
            nv: self.nv,
            nt: self.nt,
            bits,
        })
    }

    pub fn is_subset_of(&self, other: &ReachGrid) -> bool {
        self.bits
            .iter()
            .zip(other.bits.iter())
            .all(|(a, b)| a & !b == 0)
    }
}

/// Marked-cell count divided by total cell count.
pub fn region_volume(r: &ReachGrid) -> f64 {
    r.marked_count() as f64 / r.total_cells() as f64
}

pub fn feasible_region(fwd: &ReachGrid, bwd: &ReachGrid) -> Result<ReachGrid, FeasibleError> {
    fwd.intersect(bwd)
}

fn clip_to_domain<F: Float>(grid: &GridSpec<F>, poly: Vec<P2<F>>) -> Vec<P2<F>> {
    let mut p = poly;
    p = clip_halfplane(&p, F::one(), F::zero(), grid.x_hi);
    p = clip_halfplane(&p, -F::one(), F::zero(), -grid.x_lo);
    p = clip_halfplane(&p, F::zero(), F::one(), grid.v_hi);
    p = clip_halfplane(&p, F::zero(), -F::one(), -grid.v_lo);
    p
}

/// One forward step of the semi-implicit double integrator on a convex set:
/// (x, v) -> (x + v'dt, v') with v' = v + a*dt, |a| <= a_max. This is the
/// shear (x, v) -> (x + v*dt, v) followed by the Minkowski sum with the
/// segment +- (a_max*dt^2, a_max*dt).
fn step_polygon_forward<F: Float>(poly: &[P2<F>], a_max: F, dt: F) -> Vec<P2<F>> {
    minkowski_segment(
        poly.iter().map(|p| [p[0] + p[1] * dt, p[1]]).collect(),
        [a_max * dt * dt, a_max * dt],
    )
}

/// One backward step: predecessors of a set under the same dynamics.
/// (x', v') -> (x' - v'dt, v' - a*dt): shear then Minkowski with (0, a_max*dt).
fn step_polygon_backward<F: Float>(poly: &[P2<F>], a_max: F, dt: F) -> Vec<P2<F>> {
    minkowski_segment(
        poly.iter().map(|p| [p[0] - p[1] * dt, p[1]]).collect(),
        [F::zero(), a_max * dt],
    )
}

fn minkowski_segment<F: Float>(poly: Vec<P2<F>>, d: P2<F>) -> Vec<P2<F>> {
    let mut pts = Vec::with_capacity(poly.len() * 2);
    for p in &poly {
        pts.push([p[0] + d[0], p[1] + d[1]]);
        pts.push([p[0] - d[0], p[1] - d[1]]);
    }
    convex_hull_2d(&pts)
}

/// Mark every cell the convex set overlaps at one time layer.
fn rasterize<F: Float>(grid: &GridSpec<F>, poly: &[P2<F>], step: usize, out: &mut ReachGrid) {
    if poly.is_empty() {
        return;
    }
    if poly.len() == 1 {
        let (ix, iv) = grid.cell_of(poly[0][0], poly[0][1]);
        out.mark(step, ix, iv);
        return;
    }
    let hv = grid.hv();
    let hx = grid.hx();
    let vmin = poly.iter().map(|p| p[1]).fold(F::infinity(), F::min);
    let vmax = poly.iter().map(|p| p[1]).fold(F::neg_infinity(), F::max);
    let iv_lo = ((vmin - grid.v_lo) / hv).floor().max(F::zero());
    let iv_hi = ((vmax - grid.v_lo) / hv).floor();
    let iv_lo = iv_lo.to_usize().unwrap_or(0);
    let iv_hi = iv_hi.to_usize().unwrap_or(0).min(grid.nv - 1);
    for iv in iv_lo..=iv_hi {
        let v0 = grid.v_lo + hv * F::from(iv).unwrap();
        let v1 = v0 + hv;
        // clip to the row strip and take the x extent
        let mut row = clip_halfplane(poly, F::zero(), F::one(), v1);
        row = clip_halfplane(&row, F::zero(), -F::one(), -v0);
        if row.is_empty() {
            continue;
        }
        let xmin = row.iter().map(|p| p[0]).fold(F::infinity(), F::min);
        let xmax = row.iter().map(|p| p[0]).fold(F::neg_infinity(), F::max);
        let ix_lo = ((xmin - grid.x_lo) / hx)
            .floor()
            .max(F::zero())
            .to_usize()
            .unwrap_or(0)
            .min(grid.nx - 1);
        let ix_hi = ((xmax - grid.x_lo) / hx)
            .floor()
            .max(F::zero())
            .to_usize()
            .unwrap_or(0)
            .min(grid.nx - 1);
        for ix in ix_lo..=ix_hi {
            out.mark(step, ix, iv);
        }
    }
}

fn active_bounds_at<'a, F: Float>(
    grid: &GridSpec<F>,
    bounds: &'a [ToyBound<F>],
    step: usize,
) -> impl Iterator<Item = &'a ToyBound<F>> + 'a {
    let step_of: Vec<usize> = bounds.iter().map(|b| grid.step_of(b.time())).collect();
    bounds
        .iter()
        .zip(step_of)
        .filter_map(move |(b, s)| if s == step { Some(b) } else { None })
}

fn propagate<F: Float>(
    grid: &GridSpec<F>,
    a_max: F,
    seed: &ToyBound<F>,
    bounds: &[ToyBound<F>],
    forward: bool,
) -> Result<ReachGrid, FeasibleError> {
    let mut out = ReachGrid::empty(grid.nx, grid.nv, grid.nt);
    let dt = grid.dt();
    let mut poly = clip_to_domain(grid, seed.polygon());
    if poly.is_empty() {
        return Err(FeasibleError::EmptySet);
    }
    let steps: Vec<usize> = if forward {
        (0..=grid.nt).collect()
    } else {
        (0..=grid.nt).rev().collect()
    };
    for (i, &step) in steps.iter().enumerate() {
        if i > 0 {
            poly = if forward {
                step_polygon_forward(&poly, a_max, dt)
            } else {
                step_polygon_backward(&poly, a_max, dt)
            };
            poly = clip_to_domain(grid, poly);
        }
        for b in active_bounds_at(grid, bounds, step) {
            poly = b.clip(&poly);
        }
        if poly.is_empty() {
            break;
        }
        rasterize(grid, &poly, step, &mut out);
    }
    Ok(out)
}

/// Forward-reachable cells from a start set at t=0 under |a| <= a_max,
/// respecting every bound at its time step.
pub fn forward_reach<F: Float>(
    grid: &GridSpec<F>,
    a_max: F,
    start: &ToyBound<F>,
    bounds: &[ToyBound<F>],
) -> Result<ReachGrid, FeasibleError> {
    if grid.step_of(start.time()) != 0 {
        return Err(FeasibleError::StartNotAtZero);
    }
    propagate(grid, a_max, start, bounds, true)
}

/// Backward-reachable cells from an end set at t=T_end.
pub fn backward_reach<F: Float>(
    grid: &GridSpec<F>,
    a_max: F,
    end: &ToyBound<F>,
    bounds: &[ToyBound<F>],
) -> Result<ReachGrid, FeasibleError> {
    if grid.step_of(end.time()) != grid.nt {
        return Err(FeasibleError::EndNotAtEnd);
    }
    propagate(grid, a_max, end, bounds, false)
}

/// The two bounds of the toy problem: boxes at T1 = 5/3 and T2 = 10/3.
pub fn toy_bound_b1() -> ToyBound {
    ToyBound::Box {
        x: (0.5, 2.5),
        v: (-1.0, 1.0),
        t: 5.0 / 3.0,
    }
}

pub fn toy_bound_b2() -> ToyBound {
    ToyBound::Box {
        x: (-2.5, -0.5),
        v: (-1.0, 1.0),
        t: 10.0 / 3.0,
    }
}

pub fn toy_start() -> ToyBound {
    ToyBound::Point {
        x: 0.0,
        v: 0.0,
        t: 0.0,
    }
}

pub fn toy_end(t_end: f64) -> ToyBound {
    ToyBound::Point {
        x: 0.0,
        v: 0.0,
        t: t_end,
    }
}

/// Max |x| over marked cells, measured at cell centers.
pub fn max_abs_x_center(grid: &GridSpec, r: &ReachGrid) -> f64 {
    let mut best: f64 = 0.0;
    for (_, ix, _) in r.iter_marked() {
        best = best.max(grid.x_center(ix).abs());
    }
    best
}
