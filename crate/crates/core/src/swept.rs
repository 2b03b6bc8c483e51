//! Swept-volume boundary of a rectangular body following a three-clothoid path.
//!
//! The body frame `(ξ, η)` has its origin at the rear-axle center, `ξ` forward
//! and `η` to the left. The boundary is built from the traces of body corners:
//! the rear-axle ends `A (0, w/2)` and `B (0, −w/2)`, the front-bumper corners
//! `C (l+d_f, −w/2)` and `D (l+d_f, w/2)`, and the rear-bumper corners
//! `E (−d_r, w/2)` and `F (−d_r, −w/2)`.
//!
//! Per curvature-sign interval the left side follows `A` where `κ ≥ 0` and `D`
//! where `κ < 0`; the right side follows `C` where `κ > 0` and `B` otherwise.
//! Consecutive traces are joined at their intersection and the initial and
//! final rectangles close the loop. When some corner trace still leaves that
//! loop (the rear-bumper swing at the onset of a turn, for instance), the
//! boundary is rebuilt as the outer face of all the curves it can lie on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clothoid::{ClothoidSegment, Pose2D};
use crate::error::GeometryError;
use crate::fresnel;
use crate::geometry::{dist, lerp, signed_area, Point, PolygonIndex, SegmentGrid};
use crate::path::ThreeClothoidPath;
use crate::vehicle::VehicleGeometry;

/// Polygonization step along the traces [m].
pub const POLYGON_STEP: f64 = 0.01;
/// A candidate curve must leave the chained loop by more than this to
/// trigger the outer-face construction [m].
pub const PROTRUSION_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Corner {
    /// Left end of the rear axle.
    A,
    /// Right end of the rear axle.
    B,
    /// Right corner of the front bumper.
    C,
    /// Left corner of the front bumper.
    D,
    /// Left corner of the rear bumper.
    E,
    /// Right corner of the rear bumper.
    F,
}

impl Corner {
    pub const ALL: [Corner; 6] = [Corner::A, Corner::B, Corner::C, Corner::D, Corner::E, Corner::F];

    /// Body-frame offset `(ξ, η)`.
    pub fn offset(self, g: &VehicleGeometry) -> (f64, f64) {
        let (lf, dr, h) = (g.front_length(), g.rear_overhang, 0.5 * g.width);
        match self {
            Corner::A => (0.0, h),
            Corner::B => (0.0, -h),
            Corner::C => (lf, -h),
            Corner::D => (lf, h),
            Corner::E => (-dr, h),
            Corner::F => (-dr, -h),
        }
    }

    /// The corner at the mirrored position across the body axis.
    pub fn mirrored(self) -> Corner {
        match self {
            Corner::A => Corner::B,
            Corner::B => Corner::A,
            Corner::C => Corner::D,
            Corner::D => Corner::C,
            Corner::E => Corner::F,
            Corner::F => Corner::E,
        }
    }
}

/// The path of one body corner while the rear axle follows a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerTrace {
    pub segment: ClothoidSegment,
    pub corner: Corner,
    pub xi: f64,
    pub eta: f64,
}

impl CornerTrace {
    /// Corner position at segment arclength `s`.
    pub fn at(&self, s: f64) -> Point {
        let (x, y) = self.segment.position_at(s);
        let psi = self.segment.heading_at(s);
        let p = Pose2D { x, y, psi }.transform(self.xi, self.eta);
        [p.0, p.1]
    }

    /// `d/ds` of the corner position: the body-frame velocity `(1 − κη, κξ)`
    /// rotated by the heading.
    pub fn derivative(&self, s: f64) -> Point {
        rotated_velocity(self.segment.heading_at(s), self.segment.curvature_at(s), self.xi, self.eta)
    }
}

fn rotated_velocity(psi: f64, kappa: f64, xi: f64, eta: f64) -> Point {
    let (sn, cs) = psi.sin_cos();
    let (u, v) = (1.0 - kappa * eta, kappa * xi);
    [cs * u - sn * v, sn * u + cs * v]
}

pub fn corner_trace(segment: &ClothoidSegment, geom: &VehicleGeometry, corner: Corner) -> CornerTrace {
    let (xi, eta) = corner.offset(geom);
    CornerTrace { segment: *segment, corner, xi, eta }
}

/// Corner position when the rear axle is at path arclength `s`.
pub fn corner_at(path: &ThreeClothoidPath, geom: &VehicleGeometry, corner: Corner, s: f64) -> Result<Point, GeometryError> {
    let (i, sigma) = path.locate(s)?;
    Ok(corner_trace(&path.segments()[i], geom, corner).at(sigma))
}

fn corner_derivative(path: &ThreeClothoidPath, geom: &VehicleGeometry, corner: Corner, s: f64) -> Point {
    let (i, sigma) = path.locate(s.clamp(0.0, path.s_f())).expect("clamped");
    corner_trace(&path.segments()[i], geom, corner).derivative(sigma)
}

/// One piece of the boundary loop, traversed in the stored direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryCurve {
    /// Corner trace from path arclength `s[0]` to `s[1]` (either order).
    Trace { corner: Corner, s: [f64; 2] },
    /// Straight piece of the initial or final rectangle.
    Edge { from: Point, to: Point },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweptError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Closed counter-clockwise boundary loop with its 1 cm polygonization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweptBoundary {
    pub curves: Vec<BoundaryCurve>,
    pub polygon: Vec<Point>,
    /// Largest distance between the end of one curve and the start of the next.
    pub max_gap: f64,
}

impl SweptBoundary {
    pub fn area(&self) -> f64 {
        signed_area(&self.polygon)
    }

    pub fn index(&self) -> PolygonIndex {
        PolygonIndex::new(self.polygon.clone())
    }

    /// Corners contributing at least one trace piece.
    pub fn corners(&self) -> Vec<Corner> {
        let mut out: Vec<Corner> = Vec::new();
        for c in &self.curves {
            if let BoundaryCurve::Trace { corner, .. } = c {
                if !out.contains(corner) {
                    out.push(*corner);
                }
            }
        }
        out
    }
}

/// Evaluates the loop geometry against a path.
struct Loop<'a> {
    path: &'a ThreeClothoidPath,
    geom: &'a VehicleGeometry,
    curves: Vec<BoundaryCurve>,
}

fn trace_step(geom: &VehicleGeometry, path: &ThreeClothoidPath) -> f64 {
    let kmax = path.segments().iter().map(|g| g.curvature_at(0.0).abs().max(g.curvature_at(g.length).abs())).fold(0.0, f64::max);
    let reach = geom.front_length().max(geom.rear_overhang).hypot(0.5 * geom.width);
    POLYGON_STEP / (1.0 + kmax * reach)
}

impl Loop<'_> {
    fn point(&self, c: &BoundaryCurve, t: f64) -> Point {
        match *c {
            BoundaryCurve::Trace { corner, s } => {
                let u = s[0] + t * (s[1] - s[0]);
                corner_at(self.path, self.geom, corner, u.clamp(0.0, self.path.s_f())).expect("clamped")
            }
            BoundaryCurve::Edge { from, to } => lerp(from, to, t),
        }
    }

    fn derivative(&self, c: &BoundaryCurve, t: f64) -> Point {
        match *c {
            BoundaryCurve::Trace { corner, s } => {
                let d = corner_derivative(self.path, self.geom, corner, s[0] + t * (s[1] - s[0]));
                [d[0] * (s[1] - s[0]), d[1] * (s[1] - s[0])]
            }
            BoundaryCurve::Edge { from, to } => [to[0] - from[0], to[1] - from[1]],
        }
    }

    fn polygonize(&self, step: f64) -> Vec<Point> {
        let mut pts = Vec::new();
        for c in &self.curves {
            let n = match *c {
                BoundaryCurve::Trace { s, .. } => (((s[1] - s[0]).abs() / step).ceil() as usize).max(1),
                BoundaryCurve::Edge { .. } => 1,
            };
            for j in 0..n {
                pts.push(self.point(c, j as f64 / n as f64));
            }
        }
        pts
    }

    fn max_gap(&self) -> f64 {
        let n = self.curves.len();
        (0..n).map(|k| dist(self.point(&self.curves[k], 1.0), self.point(&self.curves[(k + 1) % n], 0.0))).fold(0.0, f64::max)
    }
}

/// Newton refinement of `P(t) = Q(u)` for two loop curves (or a curve and a trace).
fn refine(
    lp: &Loop,
    p: &BoundaryCurve,
    q: &BoundaryCurve,
    mut t: f64,
    mut u: f64,
) -> Option<(f64, f64)> {
    for _ in 0..30 {
        let (a, b) = (lp.point(p, t), lp.point(q, u));
        let f = [a[0] - b[0], a[1] - b[1]];
        if f[0].hypot(f[1]) <= 1e-11 {
            return Some((t, u));
        }
        let da = lp.derivative(p, t);
        let db = lp.derivative(q, u);
        let det = -da[0] * db[1] + db[0] * da[1];
        if det.abs() < 1e-14 {
            return None;
        }
        let dt = (f[0] * db[1] - db[0] * f[1]) / det;
        let du = (da[1] * f[0] - da[0] * f[1]) / det;
        t += dt;
        u += du;
        if !(-0.5..=1.5).contains(&t) || !(-0.5..=1.5).contains(&u) {
            return None;
        }
    }
    None
}

/// Curvature-sign intervals `[s0, s1]` with the sign of `κ` inside.
fn sign_intervals(path: &ThreeClothoidPath) -> Vec<(f64, f64, f64)> {
    let mut cuts = vec![0.0];
    let mut offset = 0.0;
    for seg in path.segments() {
        if seg.sharpness != 0.0 {
            let r = -seg.kappa_hat / seg.sharpness;
            if r > 0.0 && r < seg.length {
                cuts.push(offset + r);
            }
        }
        offset += seg.length;
        cuts.push(offset);
    }
    let sf = path.s_f();
    cuts.retain(|&c| c <= sf);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            (w[0], w[1], crate::path::curvature_at(path, m).expect("inside"))
        })
        .collect()
}

/// Chain of `(corner, s0, s1)` runs for one side.
fn side_chain(intervals: &[(f64, f64, f64)], pick: impl Fn(f64) -> Corner) -> Vec<(Corner, f64, f64)> {
    let mut out: Vec<(Corner, f64, f64)> = Vec::new();
    for &(a, b, k) in intervals {
        let c = pick(k);
        match out.last_mut() {
            Some(last) if last.0 == c => last.2 = b,
            _ => out.push((c, a, b)),
        }
    }
    out
}

/// Dense polyline of a corner trace over `[s0, s1]` with the arclengths.
fn trace_polyline(path: &ThreeClothoidPath, geom: &VehicleGeometry, corner: Corner, s0: f64, s1: f64, step: f64) -> Vec<(f64, Point)> {
    let n = (((s1 - s0) / step).ceil() as usize).max(1);
    (0..=n)
        .map(|k| {
            let s = if k == n { s1 } else { s0 + (s1 - s0) * k as f64 / n as f64 };
            (s, corner_at(path, geom, corner, s).expect("inside"))
        })
        .collect()
}

/// Joins trace `c1` (ending near `m`) and trace `c2` (starting near `m`) at
/// their crossing closest to `m`, as `(s1, s2)`.
fn splice(lp: &Loop, c1: Corner, a: f64, c2: Corner, b: f64, m: f64, step: f64) -> Option<(f64, f64)> {
    let g = lp.geom;
    let window = 2.0 * (g.front_length() + g.rear_overhang + g.width);
    let sf = lp.path.s_f();
    let p1 = trace_polyline(lp.path, g, c1, a, (m + window).min(sf), step);
    let p2 = trace_polyline(lp.path, g, c2, (m - window).max(0.0), b, step);
    let grid = SegmentGrid::new(p2.windows(2).map(|w| (w[0].1, w[1].1)).collect());
    let mut buf = Vec::new();
    let mut best: Option<(f64, f64, f64)> = None;
    for k in 0..p1.len() - 1 {
        for (j, t, u) in grid.crossings(p1[k].1, p1[k + 1].1, &mut buf) {
            let s1 = p1[k].0 + t * (p1[k + 1].0 - p1[k].0);
            let s2 = p2[j].0 + u * (p2[j + 1].0 - p2[j].0);
            let score = (s1 - m).abs() + (s2 - m).abs();
            if best.map_or(true, |b| score < b.2) {
                best = Some((s1, s2, score));
            }
        }
    }
    let (s1, s2, _) = best?;
    // refine on the analytic traces
    let t1 = BoundaryCurve::Trace { corner: c1, s: [0.0, sf] };
    let t2 = BoundaryCurve::Trace { corner: c2, s: [0.0, sf] };
    match refine(lp, &t1, &t2, s1 / sf, s2 / sf) {
        Some((x, y)) if (x * sf - s1).abs() < 0.1 && (y * sf - s2).abs() < 0.1 => Some((x * sf, y * sf)),
        _ => Some((s1, s2)),
    }
}

/// Builds a side's curves in forward order, ending where the last trace ends.
fn chain_curves(lp: &Loop, chain: &[(Corner, f64, f64)], step: f64) -> Vec<BoundaryCurve> {
    let mut curves = Vec::new();
    let mut start = chain[0].1;
    for k in 0..chain.len() {
        let (c, _, m) = chain[k];
        if k + 1 == chain.len() {
            curves.push(BoundaryCurve::Trace { corner: c, s: [start, m] });
            break;
        }
        let (c2, _, b2) = chain[k + 1];
        // leaving an inner corner for an outer one, the body side at `m` is
        // extremal and the two traces only touch there
        let inner_to_outer = matches!((c, c2), (Corner::A, Corner::D) | (Corner::B, Corner::C));
        let joined = if inner_to_outer { None } else { splice(lp, c, start, c2, b2, m, step) };
        match joined {
            Some((s1, s2)) if s1 >= start && s2 <= b2 => {
                curves.push(BoundaryCurve::Trace { corner: c, s: [start, s1] });
                start = s2;
            }
            _ => {
                // no crossing: step across along the body side at `m`
                let p = corner_at(lp.path, lp.geom, c, m).expect("inside");
                let q = corner_at(lp.path, lp.geom, c2, m).expect("inside");
                curves.push(BoundaryCurve::Trace { corner: c, s: [start, m] });
                curves.push(BoundaryCurve::Edge { from: p, to: q });
                start = m;
            }
        }
    }
    curves
}

fn reversed(c: BoundaryCurve) -> BoundaryCurve {
    match c {
        BoundaryCurve::Trace { corner, s } => BoundaryCurve::Trace { corner, s: [s[1], s[0]] },
        BoundaryCurve::Edge { from, to } => BoundaryCurve::Edge { from: to, to: from },
    }
}

fn push_edge(curves: &mut Vec<BoundaryCurve>, from: Point, to: Point) {
    if dist(from, to) > 1e-12 {
        curves.push(BoundaryCurve::Edge { from, to });
    }
}

/// Body outline counter-clockwise through the axle and bumper corners.
const OUTLINE: [Corner; 6] = [Corner::F, Corner::B, Corner::C, Corner::D, Corner::A, Corner::E];

/// Every curve the boundary can lie on: the six corner traces, the end
/// rectangles, and the body sides at each inflection, where the whole side
/// moves along itself for an instant.
fn candidates(path: &ThreeClothoidPath, geom: &VehicleGeometry, inflections: &[f64]) -> Result<Vec<BoundaryCurve>, GeometryError> {
    let sf = path.s_f();
    let mut out: Vec<BoundaryCurve> = OUTLINE.iter().map(|&corner| BoundaryCurve::Trace { corner, s: [0.0, sf] }).collect();
    let at = |c: Corner, s: f64| corner_at(path, geom, c, s);
    for s in [0.0, sf] {
        for k in 0..6 {
            out.push(BoundaryCurve::Edge { from: at(OUTLINE[k], s)?, to: at(OUTLINE[(k + 1) % 6], s)? });
        }
    }
    for &m in inflections {
        // sides only: F-B, B-C, D-A, A-E
        for k in [0, 1, 3, 4] {
            out.push(BoundaryCurve::Edge { from: at(OUTLINE[k], m)?, to: at(OUTLINE[k + 1], m)? });
        }
    }
    Ok(out)
}

/// True when no candidate leaves the loop and the loop does not cross itself.
fn loop_is_outer_boundary(lp: &Loop, cands: &[BoundaryCurve], knots: &[f64], step: f64) -> bool {
    let ring = lp.polygonize(step);
    let n = ring.len();
    let idx = PolygonIndex::new(ring.clone());
    let mut buf = Vec::new();
    for k in 0..n {
        for (j, _, _) in idx.grid().crossings(ring[k], ring[(k + 1) % n], &mut buf) {
            let gap = (j + n - k) % n;
            if gap > 1 && gap < n - 1 {
                return false;
            }
        }
    }
    cands.iter().all(|c| {
        sample_candidate(lp, c, knots, step).iter().all(|&(_, p)| idx.outside_distance(p) <= PROTRUSION_TOLERANCE)
    })
}

/// Points of a candidate with their parameter: arclength for traces (on a
/// grid that contains every knot, so shared points are bitwise equal), the
/// end points for edges.
fn sample_candidate(lp: &Loop, c: &BoundaryCurve, knots: &[f64], step: f64) -> Vec<(f64, Point)> {
    match *c {
        BoundaryCurve::Trace { corner, s } => {
            let sf = lp.path.s_f();
            let n = ((sf / step).ceil() as usize).max(1);
            let mut grid: Vec<f64> = (0..n).map(|k| sf * k as f64 / n as f64).collect();
            grid.push(sf);
            grid.extend(knots.iter().copied().filter(|&k| k > 0.0 && k < sf));
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            debug_assert!(s == [0.0, sf]);
            grid.into_iter().map(|u| (u, corner_at(lp.path, lp.geom, corner, u).expect("inside"))).collect()
        }
        BoundaryCurve::Edge { from, to } => vec![(0.0, from), (1.0, to)],
    }
}

/// Normalized parameter of a candidate for [`refine`].
fn normalized(lp: &Loop, c: &BoundaryCurve, p: f64) -> f64 {
    match c {
        BoundaryCurve::Trace { .. } => p / lp.path.s_f(),
        BoundaryCurve::Edge { .. } => p,
    }
}

fn piece(c: &BoundaryCurve, pa: f64, pb: f64) -> BoundaryCurve {
    match *c {
        BoundaryCurve::Trace { corner, .. } => BoundaryCurve::Trace { corner, s: [pa, pb] },
        BoundaryCurve::Edge { from, to } => {
            let at = |p: f64| if p == 0.0 { from } else if p == 1.0 { to } else { lerp(from, to, p) };
            BoundaryCurve::Edge { from: at(pa), to: at(pb) }
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut k: usize) -> usize {
        while self.0[k] != k {
            self.0[k] = self.0[self.0[k]];
            k = self.0[k];
        }
        k
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[rb] = ra;
        }
    }
}

/// A polyline piece of a candidate between two graph nodes.
struct Span {
    cand: usize,
    param: [f64; 2],
    node: [usize; 2],
}

/// Outer face of the arrangement of the candidate curves, walked counter-
/// clockwise by always taking the rightmost turn. Every candidate lies in the
/// swept volume and its boundary lies on the candidates, so this face is the
/// outer boundary. `None` when the walk does not close.
fn outer_face(lp: &Loop, cands: &[BoundaryCurve], knots: &[f64], step: f64) -> Option<Vec<BoundaryCurve>> {
    let key = |p: Point| [(p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits()];
    let mut nodes: Vec<Point> = Vec::new();
    let mut ids: std::collections::HashMap<[u64; 2], usize> = std::collections::HashMap::new();
    let mut node_of = |p: Point, nodes: &mut Vec<Point>| {
        *ids.entry(key(p)).or_insert_with(|| {
            nodes.push(p);
            nodes.len() - 1
        })
    };
    // polyline segments of every candidate
    let mut segs: Vec<Span> = Vec::new();
    for (ci, c) in cands.iter().enumerate() {
        let pts = sample_candidate(lp, c, knots, step);
        for w in pts.windows(2) {
            let (na, nb) = (node_of(w[0].1, &mut nodes), node_of(w[1].1, &mut nodes));
            if na != nb {
                segs.push(Span { cand: ci, param: [w[0].0, w[1].0], node: [na, nb] });
            }
        }
    }
    // split at crossings; crossings at segment ends reuse the end node
    const END: f64 = 1e-9;
    let mut splits: Vec<Vec<(f64, usize)>> = segs.iter().map(|g| vec![(0.0, g.node[0]), (1.0, g.node[1])]).collect();
    let mut uf = UnionFind((0..nodes.len()).collect());
    let grid = SegmentGrid::new(segs.iter().map(|g| (nodes[g.node[0]], nodes[g.node[1]])).collect());
    let mut buf = Vec::new();
    for k in 0..segs.len() {
        let (a, b) = (nodes[segs[k].node[0]], nodes[segs[k].node[1]]);
        for (j, t, u) in grid.crossings(a, b, &mut buf) {
            if j <= k || segs[j].node.iter().any(|n| segs[k].node.contains(n)) {
                continue;
            }
            let (c, d) = (nodes[segs[j].node[0]], nodes[segs[j].node[1]]);
            let (r, q) = ([b[0] - a[0], b[1] - a[1]], [d[0] - c[0], d[1] - c[1]]);
            // coincident curves add nothing to the outline
            if (r[0] * q[1] - r[1] * q[0]).abs() <= 1e-9 * r[0].hypot(r[1]) * q[0].hypot(q[1]) {
                continue;
            }
            let end_k = (t <= END).then_some(segs[k].node[0]).or((t >= 1.0 - END).then_some(segs[k].node[1]));
            let end_j = (u <= END).then_some(segs[j].node[0]).or((u >= 1.0 - END).then_some(segs[j].node[1]));
            let n = match (end_k, end_j) {
                (Some(x), Some(y)) => {
                    uf.union(x, y);
                    continue;
                }
                (Some(x), None) | (None, Some(x)) => x,
                (None, None) => {
                    nodes.push(lerp(a, b, t));
                    uf.0.push(nodes.len() - 1);
                    nodes.len() - 1
                }
            };
            if end_k.is_none() {
                splits[k].push((t, n));
            }
            if end_j.is_none() {
                splits[j].push((u, n));
            }
        }
    }
    // graph edges between consecutive split nodes
    let mut edges: Vec<Span> = Vec::new();
    for (g, sp) in segs.iter().zip(splits.iter_mut()) {
        sp.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in sp.windows(2) {
            let (na, nb) = (uf.find(w[0].1), uf.find(w[1].1));
            if na == nb {
                continue;
            }
            let p = |f: f64| if f == 0.0 { g.param[0] } else if f == 1.0 { g.param[1] } else { g.param[0] + f * (g.param[1] - g.param[0]) };
            edges.push(Span { cand: g.cand, param: [p(w[0].0), p(w[1].0)], node: [na, nb] });
        }
    }
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); nodes.len()];
    for (e, g) in edges.iter().enumerate() {
        adj[g.node[0]].push((e, true));
        adj[g.node[1]].push((e, false));
    }
    let ends = |(e, fwd): (usize, bool)| if fwd { (edges[e].node[0], edges[e].node[1]) } else { (edges[e].node[1], edges[e].node[0]) };
    let start = (0..nodes.len())
        .filter(|&n| !adj[n].is_empty())
        .min_by(|&a, &b| nodes[a][1].total_cmp(&nodes[b][1]).then(nodes[a][0].total_cmp(&nodes[b][0])))?;
    let angle = |h: (usize, bool)| {
        let (a, b) = ends(h);
        let mut t = (nodes[b][1] - nodes[a][1]).atan2(nodes[b][0] - nodes[a][0]);
        if t < -std::f64::consts::FRAC_PI_2 {
            t += 2.0 * std::f64::consts::PI;
        }
        t
    };
    let first = adj[start].iter().copied().min_by(|&x, &y| angle(x).total_cmp(&angle(y)))?;
    let mut walked = vec![first];
    let mut h = first;
    loop {
        let (u, v) = ends(h);
        let back = [nodes[u][0] - nodes[v][0], nodes[u][1] - nodes[v][1]];
        let turn = |o: (usize, bool)| {
            let w = nodes[ends(o).1];
            let out = [w[0] - nodes[v][0], w[1] - nodes[v][1]];
            let t = (back[0] * out[1] - back[1] * out[0]).atan2(back[0] * out[0] + back[1] * out[1]);
            if t <= 1e-12 { t + 2.0 * std::f64::consts::PI } else { t }
        };
        h = adj[v].iter().copied().min_by(|&x, &y| turn(x).total_cmp(&turn(y)))?;
        if h == first {
            break;
        }
        walked.push(h);
        if walked.len() > 2 * edges.len() {
            return None;
        }
    }
    // merge runs on one candidate, then refine the switches between candidates
    let mut runs: Vec<(usize, [f64; 2])> = Vec::new();
    for &(e, fwd) in &walked {
        let g = &edges[e];
        let (pa, pb) = if fwd { (g.param[0], g.param[1]) } else { (g.param[1], g.param[0]) };
        match runs.last_mut() {
            Some(r) if r.0 == g.cand && r.1[1] == pa => r.1[1] = pb,
            _ => runs.push((g.cand, [pa, pb])),
        }
    }
    if runs.len() > 1 && runs[0].0 == runs[runs.len() - 1].0 && runs[runs.len() - 1].1[1] == runs[0].1[0] {
        let last = runs.pop().expect("non-empty");
        runs[0].1[0] = last.1[0];
    }
    let n = runs.len();
    for k in 0..n {
        let next = (k + 1) % n;
        let (c1, c2) = (&cands[runs[k].0], &cands[runs[next].0]);
        let (t, u) = (normalized(lp, c1, runs[k].1[1]), normalized(lp, c2, runs[next].1[0]));
        if let Some((t2, u2)) = refine(lp, c1, c2, t, u) {
            let (d1, d2) = (dist(lp.point(c1, t), lp.point(c1, t2)), dist(lp.point(c2, u), lp.point(c2, u2)));
            if d1 < 2.0 * step && d2 < 2.0 * step && (0.0..=1.0).contains(&t2) && (0.0..=1.0).contains(&u2) {
                let back = |c: &BoundaryCurve, x: f64| match c {
                    BoundaryCurve::Trace { .. } => x * lp.path.s_f(),
                    BoundaryCurve::Edge { .. } => x,
                };
                runs[k].1[1] = back(c1, t2);
                runs[next].1[0] = back(c2, u2);
            }
        }
    }
    let curves: Vec<BoundaryCurve> = runs
        .iter()
        .map(|&(c, [pa, pb])| piece(&cands[c], pa, pb))
        .filter(|c| match *c {
            BoundaryCurve::Trace { s, .. } => s[0] != s[1],
            BoundaryCurve::Edge { from, to } => from != to,
        })
        .collect();
    Some(curves)
}

/// Swept-volume boundary of `geom` driven along `path`.
pub fn swept_boundary(path: &ThreeClothoidPath, geom: &VehicleGeometry) -> Result<SweptBoundary, SweptError> {
    geom.validate().map_err(SweptError::InvalidGeometry)?;
    let sf = path.s_f();
    let step = trace_step(geom, path);
    let intervals = sign_intervals(path);
    let left = side_chain(&intervals, |k| if k >= 0.0 { Corner::A } else { Corner::D });
    let right = side_chain(&intervals, |k| if k > 0.0 { Corner::C } else { Corner::B });

    let mut lp = Loop { path, geom, curves: Vec::new() };
    let right_curves = chain_curves(&lp, &right, step);
    let left_curves = chain_curves(&lp, &left, step);
    let at = |c: Corner, s: f64| corner_at(path, geom, c, s);

    let mut curves = Vec::new();
    // initial rectangle: rear-right corner to the start of the right chain
    push_edge(&mut curves, at(Corner::F, 0.0)?, at(right[0].0, 0.0)?);
    curves.extend(right_curves);
    // final rectangle: right chain end, front edge, left chain end
    let r_end = right.last().expect("non-empty").0;
    let l_end = left.last().expect("non-empty").0;
    push_edge(&mut curves, at(r_end, sf)?, at(Corner::C, sf)?);
    push_edge(&mut curves, at(Corner::C, sf)?, at(Corner::D, sf)?);
    push_edge(&mut curves, at(Corner::D, sf)?, at(l_end, sf)?);
    curves.extend(left_curves.into_iter().rev().map(reversed));
    push_edge(&mut curves, at(left[0].0, 0.0)?, at(Corner::E, 0.0)?);
    push_edge(&mut curves, at(Corner::E, 0.0)?, at(Corner::F, 0.0)?);
    lp.curves = curves;

    // Where a corner trace still leaves the chained loop (the rear-bumper
    // swing at the onset of a turn, or a trace meeting an end rectangle), the
    // loop is replaced by the outer face of all candidate curves.
    let inflections: Vec<f64> = intervals.iter().skip(1).map(|iv| iv.0).collect();
    let mut knots = inflections.clone();
    knots.extend(path.breakpoints());
    let cands = candidates(path, geom, &inflections)?;
    if !loop_is_outer_boundary(&lp, &cands, &knots, step) {
        if let Some(curves) = outer_face(&lp, &cands, &knots, step) {
            lp.curves = curves;
        }
    }

    let polygon = lp.polygonize(step);
    let max_gap = lp.max_gap();
    Ok(SweptBoundary { curves: lp.curves, polygon, max_gap })
}

/// True when the two swept volumes share any point: their boundaries cross
/// or one lies inside the other.
pub fn swept_overlap(
    path_a: &ThreeClothoidPath,
    path_b: &ThreeClothoidPath,
    geom_a: &VehicleGeometry,
    geom_b: &VehicleGeometry,
) -> Result<bool, SweptError> {
    let a = swept_boundary(path_a, geom_a)?;
    let b = swept_boundary(path_b, geom_b)?;
    Ok(boundaries_overlap(&a, &b))
}

pub fn boundaries_overlap(a: &SweptBoundary, b: &SweptBoundary) -> bool {
    let ia = a.index();
    let ib = b.index();
    let mut buf = Vec::new();
    let n = b.polygon.len();
    for k in 0..n {
        if !ia.grid().crossings(b.polygon[k], b.polygon[(k + 1) % n], &mut buf).is_empty() {
            return true;
        }
    }
    ia.contains(b.polygon[0]) || ib.contains(a.polygon[0])
}

/// Outcome of the claim tests for one `(κ̂, κ′)`; `eta` holds the crossing
/// ordinates, `None` when the trace never reaches the test line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub claim21_holds: bool,
    pub claim22_holds: bool,
    pub claim3_holds: bool,
    pub eta_int: [Option<f64>; 3],
}

/// Local trace of a body point for a segment starting at the origin.
fn local_point(kh: f64, kp: f64, s: f64, xi: f64, eta: f64) -> (f64, f64, f64) {
    let (c, sn) = if s == 0.0 { (0.0, 0.0) } else { fresnel::eval(kp * s * s, kh * s, 0.0, fresnel::DEFAULT_TOLERANCE) };
    let psi = (0.5 * kp * s + kh) * s;
    let p = Pose2D { x: s * c, y: s * sn, psi }.transform(xi, eta);
    (p.0, p.1, psi)
}

/// First root of `g` on `(0, s_max]` by a scan and bisection.
fn first_root(g: impl Fn(f64) -> f64, s_max: f64) -> Option<f64> {
    let h = 0.02;
    let n = (s_max / h).ceil() as usize;
    let mut prev = g(0.0);
    let mut lo = 0.0;
    for k in 1..=n {
        let s = (k as f64 * h).min(s_max);
        let v = g(s);
        if v == 0.0 {
            return Some(s);
        }
        if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            let (mut a, mut b) = (lo, s);
            let fa_pos = prev > 0.0;
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if (g(m) > 0.0) == fa_pos {
                    a = m;
                } else {
                    b = m;
                }
                if b - a < 1e-13 {
                    break;
                }
            }
            return Some(0.5 * (a + b));
        }
        prev = v;
        lo = s;
    }
    None
}

/// Claim tests for a clothoid with `κ̂ ≥ 0`, `κ′ ≥ 0`.
///
/// Claim 2.1: the rear-left corner `E` crosses the line `ξ = 0` through the
/// rear axle at `η ≤ w/2`. Claim 2.2: the trace of `A` crosses the line from
/// the turning center `O = (0, 1/κ̂)` through `D` at `η ≥ w/2`. Claim 3: the
/// trace of `B` crosses the line from `O` through `C` at `η ≥ −w/2`. The lines
/// are scaled by `κ̂` so `κ̂ = 0` gives their limits. A trace that never
/// reaches its line before turning by π leaves the claim vacuously true.
pub fn claim_region_check(kappa_hat: f64, sharpness: f64, geom: &VehicleGeometry) -> Result<ClaimCheck, GeometryError> {
    if !(kappa_hat >= 0.0 && sharpness >= 0.0 && kappa_hat.is_finite() && sharpness.is_finite()) {
        return Err(GeometryError::InvalidArgument(format!(
            "claims need κ̂ ≥ 0 and κ′ ≥ 0, got ({kappa_hat}, {sharpness})"
        )));
    }
    geom.validate().map_err(GeometryError::InvalidArgument)?;
    if kappa_hat == 0.0 && sharpness == 0.0 {
        return Ok(ClaimCheck { claim21_holds: true, claim22_holds: true, claim3_holds: true, eta_int: [None; 3] });
    }
    let (lf, dr, h) = (geom.front_length(), geom.rear_overhang, 0.5 * geom.width);
    // arclength at which the heading reaches π
    let s_pi = if sharpness > 0.0 {
        (-kappa_hat + (kappa_hat * kappa_hat + 2.0 * sharpness * std::f64::consts::PI).sqrt()) / sharpness
    } else {
        std::f64::consts::PI / kappa_hat
    };
    let s_max = s_pi.min(100.0);
    let (kh, kp) = (kappa_hat, sharpness);

    let e_x = |s: f64| local_point(kh, kp, s, -dr, h).0;
    let eta1 = first_root(e_x, s_max).map(|s| local_point(kh, kp, s, -dr, h).1);

    let line = |x: f64, y: f64, eta0: f64| (1.0 - kh * eta0) / lf * x + kh * y - 1.0;
    let a_g = |s: f64| {
        let (x, y, _) = local_point(kh, kp, s, 0.0, h);
        line(x, y, h)
    };
    let eta2 = first_root(a_g, s_max).map(|s| local_point(kh, kp, s, 0.0, h).1);
    let b_g = |s: f64| {
        let (x, y, _) = local_point(kh, kp, s, 0.0, -h);
        line(x, y, -h)
    };
    let eta3 = first_root(b_g, s_max).map(|s| local_point(kh, kp, s, 0.0, -h).1);

    let tol = 1e-12;
    Ok(ClaimCheck {
        claim21_holds: eta1.map_or(true, |e| e <= h + tol),
        claim22_holds: eta2.map_or(true, |e| e >= h - tol),
        claim3_holds: eta3.map_or(true, |e| e >= -h - tol),
        eta_int: [eta1, eta2, eta3],
    })
}
