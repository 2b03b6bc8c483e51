//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;

use cloplan::collision::clothoid_intersections;
use cloplan::swept::SweptBoundary;
use cloplan::{ClothoidSegment, Pose2D, ThreeClothoidPath, VehicleGeometry};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_segment(rng: &mut ChaCha8Rng) -> ClothoidSegment {
    let start = Pose2D::new(rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0), rng.gen_range(-PI..PI));
    ClothoidSegment::new(start, rng.gen_range(-0.2..0.2), rng.gen_range(-0.03..0.03), rng.gen_range(2.0..20.0)).unwrap()
}

/// Dense polyline of a segment from cumulative Simpson integration of the
/// closed-form heading, no Fresnel evaluation involved.
pub fn dense_polyline(seg: &ClothoidSegment, h: f64) -> Vec<(f64, [f64; 2])> {
    let n = ((seg.length / h).ceil() as usize).max(1);
    let step = seg.length / n as f64;
    let psi = |s: f64| seg.start.psi + seg.kappa_hat * s + 0.5 * seg.sharpness * s * s;
    let mut out = Vec::with_capacity(n + 1);
    let (mut x, mut y) = (seg.start.x, seg.start.y);
    out.push((0.0, [x, y]));
    for k in 0..n {
        let (s0, s1) = (k as f64 * step, (k + 1) as f64 * step);
        let sm = 0.5 * (s0 + s1);
        x += step / 6.0 * (psi(s0).cos() + 4.0 * psi(sm).cos() + psi(s1).cos());
        y += step / 6.0 * (psi(s0).sin() + 4.0 * psi(sm).sin() + psi(s1).sin());
        out.push((s1, [x, y]));
    }
    out
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Crossings of two dense polylines, found through a spatial hash and
/// merged within `merge` metres. Returns `(s_a, s_b, point)`.
pub fn polyline_crossings(pa: &[(f64, [f64; 2])], pb: &[(f64, [f64; 2])], merge: f64) -> Vec<(f64, f64, [f64; 2])> {
    let cell = 0.05;
    let key = |p: [f64; 2]| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
    let mut hash: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for k in 0..pb.len() - 1 {
        let (a, b) = (pb[k].1, pb[k + 1].1);
        let (i0, j0) = key([a[0].min(b[0]), a[1].min(b[1])]);
        let (i1, j1) = key([a[0].max(b[0]), a[1].max(b[1])]);
        for i in i0..=i1 {
            for j in j0..=j1 {
                hash.entry((i, j)).or_default().push(k);
            }
        }
    }
    let mut hits: Vec<(f64, f64, [f64; 2])> = Vec::new();
    for k in 0..pa.len() - 1 {
        let (p0, p1) = (pa[k].1, pa[k + 1].1);
        let (i0, j0) = key([p0[0].min(p1[0]), p0[1].min(p1[1])]);
        let (i1, j1) = key([p0[0].max(p1[0]), p0[1].max(p1[1])]);
        let mut cand: Vec<usize> = Vec::new();
        for i in i0..=i1 {
            for j in j0..=j1 {
                if let Some(v) = hash.get(&(i, j)) {
                    cand.extend(v);
                }
            }
        }
        cand.sort_unstable();
        cand.dedup();
        for m in cand {
            let (q0, q1) = (pb[m].1, pb[m + 1].1);
            let r = [p1[0] - p0[0], p1[1] - p0[1]];
            let s = [q1[0] - q0[0], q1[1] - q0[1]];
            let den = cross(r, s);
            if den == 0.0 {
                continue;
            }
            let qp = [q0[0] - p0[0], q0[1] - p0[1]];
            let t = cross(qp, s) / den;
            let u = cross(qp, r) / den;
            if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
                let pt = [p0[0] + t * r[0], p0[1] + t * r[1]];
                let sa = pa[k].0 + t * (pa[k + 1].0 - pa[k].0);
                let sb = pb[m].0 + u * (pb[m + 1].0 - pb[m].0);
                if !hits.iter().any(|h| (h.2[0] - pt[0]).hypot(h.2[1] - pt[1]) < merge && (h.1 - sb).abs() < merge) {
                    hits.push((sa, sb, pt));
                }
            }
        }
    }
    hits
}

/// Oracle roots of two segments at 1 mm sampling.
pub fn oracle_roots(a: &ClothoidSegment, b: &ClothoidSegment) -> Vec<(f64, f64, [f64; 2])> {
    polyline_crossings(&dense_polyline(a, 1e-3), &dense_polyline(b, 1e-3), 1e-3)
}

/// Counts analytic roots without an oracle partner and oracle hits without
/// an analytic root. Returns `(roots, unmatched roots, unmatched hits)`.
pub fn mismatches(a: &ClothoidSegment, b: &ClothoidSegment) -> (usize, usize, usize) {
    let roots = clothoid_intersections(a, b);
    let hits = oracle_roots(a, b);
    let pos: Vec<[f64; 2]> = roots
        .iter()
        .map(|&(sa, _)| {
            let (x, y) = a.position_at(sa);
            [x, y]
        })
        .collect();
    for (&(_, sb), p) in roots.iter().zip(&pos) {
        let (xb, yb) = b.position_at(sb);
        assert!((p[0] - xb).hypot(p[1] - yb) < 1e-6, "root positions differ");
    }
    let near = |p: &[f64; 2], q: &[f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]) <= 1e-3;
    let unmatched_roots = pos.iter().filter(|p| !hits.iter().any(|h| near(p, &h.2))).count();
    let unmatched_hits = hits.iter().filter(|h| !pos.iter().any(|p| near(p, &h.2))).count();
    (roots.len(), unmatched_roots, unmatched_hits)
}

/// Largest distance outside the boundary of an `n × n` body grid carried
/// along the path every `ds` metres.
pub fn body_grid_outside(path: &ThreeClothoidPath, g: &VehicleGeometry, b: &SweptBoundary, n: usize, ds: f64) -> f64 {
    let idx = b.index();
    let body: Vec<(f64, f64)> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let xi = -g.rear_overhang + (g.front_length() + g.rear_overhang) * i as f64 / (n - 1) as f64;
            let eta = -0.5 * g.width + g.width * j as f64 / (n - 1) as f64;
            (xi, eta)
        })
        .collect();
    let steps = (path.s_f() / ds).ceil() as usize;
    let mut worst: f64 = 0.0;
    for k in 0..=steps {
        let p = path.pose_at((k as f64 * ds).min(path.s_f())).unwrap();
        for &(xi, eta) in &body {
            let (x, y) = p.transform(xi, eta);
            worst = worst.max(idx.outside_distance([x, y]));
        }
    }
    worst
}

/// Intersection scenario with a left-turning and a right-turning vehicle
/// that both exit westwards. The exit road has an inner lane (`y = 1.75`)
/// holding the blue target and an outer lane (`y = 5.25`) holding the red one.
pub mod intersection {
    use std::f64::consts::{FRAC_PI_2, PI};

    use cloplan::plan::{plan_motion, MotionPlan};
    use cloplan::{PathBoundaryCondition, Pose2D, VehicleLimits};

    pub const RED: (f64, f64) = (-19.75, 5.25);
    pub const BLUE: (f64, f64) = (-19.75, 1.75);

    fn to_target(start: Pose2D, target: (f64, f64), v0: f64) -> MotionPlan {
        let (dxw, dyw) = (target.0 - start.x, target.1 - start.y);
        let (sn, cs) = start.psi.sin_cos();
        let dpsi = cloplan::clothoid::normalize_angle(PI - start.psi);
        let bc = PathBoundaryCondition::new(cs * dxw + sn * dyw, -sn * dxw + cs * dyw, dpsi, 0.0, 0.0);
        plan_motion(&bc, 5.0, 5.0, v0, start, &VehicleLimits::default()).expect("scenario plans are feasible")
    }

    /// The left-turning (green) vehicle, northbound at 6 m/s.
    pub fn green(target: (f64, f64)) -> MotionPlan {
        to_target(Pose2D::new(1.75, -9.25, FRAC_PI_2), target, 6.0)
    }

    /// The right-turning (blue) vehicle, southbound at 6.5 m/s.
    pub fn blue(target: (f64, f64)) -> MotionPlan {
        to_target(Pose2D::new(-1.75, 18.0, -FRAC_PI_2), target, 6.5)
    }
}
