//! Small computational-geometry kit: 2D convex hulls (monotone chain),
//! 3D convex hulls (incremental), and convex polygon clipping.

use num_traits::Float;

pub type P2<F> = [F; 2];
pub type P3<F> = [F; 3];

fn cross2<F: Float>(o: P2<F>, a: P2<F>, b: P2<F>) -> F {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone-chain convex hull, counter-clockwise, collinear points dropped.
/// Input order does not matter; points are pre-sorted canonically.
pub fn convex_hull_2d<F: Float>(points: &[P2<F>]) -> Vec<P2<F>> {
    let mut pts: Vec<P2<F>> = points.to_vec();
    pts.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .unwrap()
            .then(a[1].partial_cmp(&b[1]).unwrap())
    });
    pts.dedup_by(|a, b| a[0] == b[0] && a[1] == b[1]);
    let n = pts.len();
    if n <= 2 {
        return pts;
    }
    let mut lower: Vec<P2<F>> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2
            && cross2(lower[lower.len() - 2], lower[lower.len() - 1], p) <= F::zero()
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<P2<F>> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2
            && cross2(upper[upper.len() - 2], upper[upper.len() - 1], p) <= F::zero()
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 2 {
        // all collinear; monotone chain degenerates, return extreme pair
        return vec![pts[0], pts[n - 1]];
    }
    lower
}

/// Shoelace area of a simple polygon given in order.
pub fn polygon_area<F: Float>(poly: &[P2<F>]) -> F {
    if poly.len() < 3 {
        return F::zero();
    }
    let mut s = F::zero();
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        s = s + a[0] * b[1] - b[0] * a[1];
    }
    (s / F::from(2.0).unwrap()).abs()
}

/// Area of the convex hull of a 2D point set; 0 for degenerate sets.
pub fn hull_area_2d<F: Float>(points: &[P2<F>]) -> F {
    polygon_area(&convex_hull_2d(points))
}

/// Clip a convex polygon (any vertex count, possibly degenerate) against the
/// half-plane a*x + b*y <= c. Sutherland-Hodgman, one edge.
pub fn clip_halfplane<F: Float>(poly: &[P2<F>], a: F, b: F, c: F) -> Vec<P2<F>> {
    if poly.is_empty() {
        return Vec::new();
    }
    if poly.len() == 1 {
        let p = poly[0];
        return if a * p[0] + b * p[1] <= c {
            vec![p]
        } else {
            Vec::new()
        };
    }
    let inside = |p: P2<F>| a * p[0] + b * p[1] <= c;
    let intersect = |p: P2<F>, q: P2<F>| -> P2<F> {
        let fp = a * p[0] + b * p[1] - c;
        let fq = a * q[0] + b * q[1] - c;
        let t = fp / (fp - fq);
        [p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t]
    };
    let mut out: Vec<P2<F>> = Vec::new();
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        match (inside(p), inside(q)) {
            (true, true) => out.push(q),
            (true, false) => out.push(intersect(p, q)),
            (false, true) => {
                out.push(intersect(p, q));
                out.push(q);
            }
            (false, false) => {}
        }
    }
    out.dedup_by(|x, y| x[0] == y[0] && x[1] == y[1]);
    if out.len() > 1 {
        let first = out[0];
        let last = *out.last().unwrap();
        if first[0] == last[0] && first[1] == last[1] {
            out.pop();
        }
    }
    out
}

fn sub3<F: Float>(a: P3<F>, b: P3<F>) -> P3<F> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3<F: Float>(a: P3<F>, b: P3<F>) -> P3<F> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3<F: Float>(a: P3<F>, b: P3<F>) -> F {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Volume of the convex hull of a 3D point set via an incremental hull.
/// Degenerate (coplanar or fewer) sets have volume 0. Points are pre-sorted
/// canonically so the result does not depend on input order.
pub fn hull_volume_3d<F: Float>(points: &[P3<F>]) -> F {
    let mut pts: Vec<P3<F>> = points.to_vec();
    pts.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .unwrap()
            .then(a[1].partial_cmp(&b[1]).unwrap())
            .then(a[2].partial_cmp(&b[2]).unwrap())
    });
    pts.dedup_by(|a, b| a == b);
    if pts.len() < 4 {
        return F::zero();
    }
    let eps = F::from(1e-12).unwrap();

    // initial non-degenerate tetrahedron
    let p0 = pts[0];
    let Some(i1) = pts.iter().position(|&p| {
        let d = sub3(p, p0);
        dot3(d, d) > eps
    }) else {
        return F::zero();
    };
    let p1 = pts[i1];
    let Some(i2) = pts.iter().position(|&p| {
        let n = cross3(sub3(p1, p0), sub3(p, p0));
        dot3(n, n) > eps
    }) else {
        return F::zero();
    };
    let p2 = pts[i2];
    let n012 = cross3(sub3(p1, p0), sub3(p2, p0));
    let Some(i3) = pts
        .iter()
        .position(|&p| dot3(n012, sub3(p, p0)).abs() > eps)
    else {
        return F::zero();
    };
    let p3 = pts[i3];

    // faces as vertex index triples with outward orientation
    let verts = vec![p0, p1, p2, p3];
    let mut faces: Vec<[usize; 3]> = vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    let centroid = |vs: &Vec<P3<F>>| -> P3<F> {
        let mut c = [F::zero(); 3];
        for v in vs {
            for k in 0..3 {
                c[k] = c[k] + v[k];
            }
        }
        let n = F::from(vs.len()).unwrap();
        [c[0] / n, c[1] / n, c[2] / n]
    };
    let mut verts = verts;
    let orient = |f: &mut [usize; 3], vs: &Vec<P3<F>>, interior: P3<F>| {
        let n = cross3(sub3(vs[f[1]], vs[f[0]]), sub3(vs[f[2]], vs[f[0]]));
        if dot3(n, sub3(interior, vs[f[0]])) > F::zero() {
            f.swap(1, 2);
        }
    };
    let interior = centroid(&verts);
    for f in faces.iter_mut() {
        orient(f, &verts, interior);
    }

    let visible = |f: &[usize; 3], vs: &Vec<P3<F>>, p: P3<F>| -> bool {
        let n = cross3(sub3(vs[f[1]], vs[f[0]]), sub3(vs[f[2]], vs[f[0]]));
        dot3(n, sub3(p, vs[f[0]])) > eps
    };

    for (idx, &p) in pts.iter().enumerate() {
        if idx == 0 || idx == i1 || idx == i2 || idx == i3 {
            continue;
        }
        let vis: Vec<usize> = (0..faces.len())
            .filter(|&fi| visible(&faces[fi], &verts, p))
            .collect();
        if vis.is_empty() {
            continue;
        }
        // horizon = edges shared by exactly one visible face
        use std::collections::HashMap;
        let mut edge_count: HashMap<(usize, usize), i32> = HashMap::new();
        for &fi in &vis {
            let f = faces[fi];
            for e in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let key = (e.0.min(e.1), e.0.max(e.1));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for &fi in &vis {
            let f = faces[fi];
            for e in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let key = (e.0.min(e.1), e.0.max(e.1));
                if edge_count[&key] == 1 {
                    horizon.push(e);
                }
            }
        }
        let mut keep: Vec<[usize; 3]> = Vec::new();
        for (fi, f) in faces.iter().enumerate() {
            if !vis.contains(&fi) {
                keep.push(*f);
            }
        }
        verts.push(p);
        let pi = verts.len() - 1;
        let interior = centroid(&verts);
        for (a, b) in horizon {
            let mut f = [a, b, pi];
            orient(&mut f, &verts, interior);
            keep.push(f);
        }
        faces = keep;
    }

    // signed tetrahedra from an interior point
    let c = centroid(&verts);
    let mut vol = F::zero();
    for f in &faces {
        let a = sub3(verts[f[0]], c);
        let b = sub3(verts[f[1]], c);
        let d = sub3(verts[f[2]], c);
        vol = vol + dot3(a, cross3(b, d)).abs();
    }
    vol / F::from(6.0).unwrap()
}
