//! Plain-text plot output for reachability results: a per-step CSV of the
//! occupied (x, v) envelope and a dependency-free SVG of the x band over
//! time with the toy bounds overlaid.

use crate::feasible::{GridSpec, ReachGrid, ToyBound};

/// Per-step envelope of the marked cells.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRow {
    pub step: usize,
    pub t: f64,
    /// cell-edge extents; None when no cell is marked at this step
    pub x: Option<(f64, f64)>,
    pub v: Option<(f64, f64)>,
    pub cells: usize,
}

pub fn region_band(spec: &GridSpec<f64>, grid: &ReachGrid) -> Vec<BandRow> {
    let hx = spec.hx();
    let hv = spec.hv();
    let mut rows: Vec<BandRow> = (0..=grid.nt)
        .map(|step| BandRow {
            step,
            t: spec.dt() * step as f64,
            x: None,
            v: None,
            cells: 0,
        })
        .collect();
    for (step, ix, iv) in grid.iter_marked() {
        let row = &mut rows[step];
        let (xl, xh) = (spec.x_center(ix) - 0.5 * hx, spec.x_center(ix) + 0.5 * hx);
        let (vl, vh) = (spec.v_center(iv) - 0.5 * hv, spec.v_center(iv) + 0.5 * hv);
        row.x = Some(match row.x {
            None => (xl, xh),
            Some((lo, hi)) => (lo.min(xl), hi.max(xh)),
        });
        row.v = Some(match row.v {
            None => (vl, vh),
            Some((lo, hi)) => (lo.min(vl), hi.max(vh)),
        });
        row.cells += 1;
    }
    rows
}

pub fn region_csv(spec: &GridSpec<f64>, grid: &ReachGrid) -> String {
    let mut out = String::from("step,t,x_lo,x_hi,v_lo,v_hi,cells\n");
    for row in region_band(spec, grid) {
        match (row.x, row.v) {
            (Some((xl, xh)), Some((vl, vh))) => out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.step, row.t, xl, xh, vl, vh, row.cells
            )),
            _ => out.push_str(&format!("{},{},,,,,0\n", row.step, row.t)),
        }
    }
    out
}

const W: f64 = 800.0;
const H: f64 = 500.0;
const MARGIN: f64 = 50.0;

struct Frame {
    t_end: f64,
    x_lo: f64,
    x_hi: f64,
}

impl Frame {
    fn px(&self, t: f64) -> f64 {
        MARGIN + (W - 2.0 * MARGIN) * t / self.t_end
    }

    fn py(&self, x: f64) -> f64 {
        // y grows downward; high x at the top
        MARGIN + (H - 2.0 * MARGIN) * (self.x_hi - x) / (self.x_hi - self.x_lo)
    }
}

/// SVG of the x-versus-t band of `grid` with the toy bounds drawn on top.
/// `reference` is an optional (t, x) polyline.
pub fn region_svg(
    spec: &GridSpec<f64>,
    grid: &ReachGrid,
    bounds: &[ToyBound<f64>],
    reference: Option<&[(f64, f64)]>,
) -> String {
    let frame = Frame {
        t_end: spec.t_end,
        x_lo: spec.x_lo,
        x_hi: spec.x_hi,
    };
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    // axes
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        frame.px(0.0),
        frame.py(spec.x_lo),
        frame.px(spec.t_end),
        frame.py(spec.x_lo)
    ));
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        frame.px(0.0),
        frame.py(spec.x_lo),
        frame.px(0.0),
        frame.py(spec.x_hi)
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">t</text>\n<text x=\"{}\" y=\"{}\" font-size=\"12\">x</text>\n",
        W - MARGIN + 8.0,
        frame.py(spec.x_lo) + 4.0,
        frame.px(0.0) - 6.0,
        MARGIN - 10.0
    ));
    // the band, one column per step
    let dt = spec.dt();
    for row in region_band(spec, grid) {
        if let Some((xl, xh)) = row.x {
            let x0 = frame.px(row.t - 0.5 * dt).max(frame.px(0.0));
            let x1 = frame.px(row.t + 0.5 * dt).min(frame.px(spec.t_end));
            let y0 = frame.py(xh);
            let y1 = frame.py(xl);
            s.push_str(&format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#7fb3d5\"/>\n",
                x0,
                y0,
                (x1 - x0).max(0.5),
                (y1 - y0).max(0.5)
            ));
        }
    }
    // bounds on top
    for b in bounds {
        match *b {
            ToyBound::Box { x, t, .. } => {
                let x0 = frame.px(t) - 4.0;
                let y0 = frame.py(x.1);
                s.push_str(&format!(
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"8\" height=\"{:.2}\" fill=\"none\" \
                     stroke=\"#c0392b\" stroke-width=\"2\"/>\n",
                    x0,
                    y0,
                    frame.py(x.0) - y0
                ));
            }
            ToyBound::Point { x, t, .. } => {
                s.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#c0392b\"/>\n",
                    frame.px(t),
                    frame.py(x)
                ));
            }
        }
    }
    if let Some(curve) = reference {
        let pts = curve
            .iter()
            .map(|&(t, x)| format!("{:.2},{:.2}", frame.px(t), frame.py(x)))
            .collect::<Vec<_>>()
            .join(" ");
        s.push_str(&format!(
            "<polyline points=\"{pts}\" fill=\"none\" stroke=\"#27ae60\" stroke-width=\"1.5\"/>\n"
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasible::{feasible_region, forward_reach, backward_reach, toy_end, toy_start};

    fn small_region() -> (GridSpec<f64>, ReachGrid) {
        let spec = GridSpec {
            nx: 60,
            nv: 60,
            nt: 50,
            ..GridSpec::default()
        };
        let bounds = vec![toy_start(), toy_end(spec.t_end)];
        let fwd = forward_reach(&spec, 2.0, &toy_start(), &bounds).unwrap();
        let bwd = backward_reach(&spec, 2.0, &toy_end(spec.t_end), &bounds).unwrap();
        (spec, feasible_region(&fwd, &bwd).unwrap())
    }

    #[test]
    fn band_covers_marked_cells() {
        let (spec, grid) = small_region();
        for (step, ix, iv) in grid.iter_marked() {
            let rows = region_band(&spec, &grid);
            let (xl, xh) = rows[step].x.unwrap();
            let (vl, vh) = rows[step].v.unwrap();
            let eps = 1e-9;
            assert!(spec.x_center(ix) >= xl - eps && spec.x_center(ix) <= xh + eps);
            assert!(spec.v_center(iv) >= vl - eps && spec.v_center(iv) <= vh + eps);
            break;
        }
        let rows = region_band(&spec, &grid);
        let total: usize = rows.iter().map(|r| r.cells).sum();
        assert_eq!(total, grid.marked_count());
    }

    #[test]
    fn csv_has_row_per_step() {
        let (spec, grid) = small_region();
        let csv = region_csv(&spec, &grid);
        assert_eq!(csv.lines().count(), grid.nt + 2);
        assert!(csv.starts_with("step,t,"));
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let (spec, grid) = small_region();
        let bounds = vec![toy_start(), toy_end(spec.t_end)];
        let svg = region_svg(&spec, &grid, &bounds, Some(&[(0.0, 0.0), (5.0, 0.0)]));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count() - 1, {
            // one fill rect per nonempty step, plus the background
            region_band(&spec, &grid)
                .iter()
                .filter(|r| r.x.is_some())
                .count()
        });
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("<circle"));
    }
}
