//! Clothoid intersections and arrival-time conflicts between shared plans.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clothoid::ClothoidSegment;
use crate::path::ThreeClothoidPath;
use crate::plan::MotionPlan;
use crate::velocity::{VelocityError, VelocityProfile};

/// Default minimum arrival-time gap for a crossing to be clear [s].
pub const DEFAULT_GAP_THRESHOLD: f64 = 2.0;
/// Crossings whose gap is below this multiple of the threshold are marginal.
pub const MARGINAL_FACTOR: f64 = 1.2;
/// Roots closer than this are merged [m].
pub const DEDUP_DISTANCE: f64 = 1e-3;

const PRESCAN_STEP: f64 = 0.25;
const MIN_PIECE: f64 = 1e-4;
const ROOT_TOLERANCE: f64 = 1e-10;
const MAX_PAIRS: usize = 1 << 20;
// below this |sin| of the crossing angle, neighbouring roots may be one contact
const TANGENT_ANGLE: f64 = 1e-2;
const TANGENT_RUN: f64 = 0.1;

/// A sub-arc `[s0, s1]` of a segment with its bounding circle and heading range.
#[derive(Debug, Clone, Copy)]
struct Piece {
    s0: f64,
    s1: f64,
    center: (f64, f64),
    radius: f64,
    psi_lo: f64,
    psi_hi: f64,
}

impl Piece {
    fn new(seg: &ClothoidSegment, s0: f64, s1: f64) -> Self {
        let mut lo = seg.heading_at(s0).min(seg.heading_at(s1));
        let mut hi = seg.heading_at(s0).max(seg.heading_at(s1));
        if seg.sharpness != 0.0 {
            // heading is quadratic in s; include its vertex
            let sv = -seg.kappa_hat / seg.sharpness;
            if sv > s0 && sv < s1 {
                let p = seg.heading_at(sv);
                lo = lo.min(p);
                hi = hi.max(p);
            }
        }
        Piece { s0, s1, center: seg.position_at(0.5 * (s0 + s1)), radius: 0.5 * (s1 - s0), psi_lo: lo, psi_hi: hi }
    }

    fn split(&self, seg: &ClothoidSegment) -> [Piece; 2] {
        let m = 0.5 * (self.s0 + self.s1);
        [Piece::new(seg, self.s0, m), Piece::new(seg, m, self.s1)]
    }

    fn len(&self) -> f64 {
        self.s1 - self.s0
    }
}

fn prescan(seg: &ClothoidSegment) -> Vec<Piece> {
    let n = ((seg.length / PRESCAN_STEP).ceil() as usize).max(1);
    (0..n)
        .map(|k| {
            let s0 = seg.length * k as f64 / n as f64;
            let s1 = if k + 1 == n { seg.length } else { seg.length * (k + 1) as f64 / n as f64 };
            Piece::new(seg, s0, s1)
        })
        .collect()
}

/// True when no tangent line of `a` is parallel to one of `b`; the arcs then
/// meet at most once.
fn cones_separated(a: &Piece, b: &Piece) -> bool {
    let (wa, wb) = (a.psi_hi - a.psi_lo, b.psi_hi - b.psi_lo);
    if wa + wb >= std::f64::consts::PI {
        return false;
    }
    let lo = a.psi_lo - b.psi_hi;
    let hi = a.psi_hi - b.psi_lo;
    let pi = std::f64::consts::PI;
    // margin keeps Newton away from near-parallel crossings
    (lo / pi - 1e-9).ceil() > (hi / pi + 1e-9).floor()
}

/// Newton on `P_a(s_a) − P_b(s_b) = 0` with analytic Jacobian `[t_a, −t_b]`.
fn newton(a: &ClothoidSegment, b: &ClothoidSegment, mut sa: f64, mut sb: f64) -> Option<(f64, f64)> {
    let slack = 1e-9;
    for _ in 0..40 {
        let (xa, ya) = a.position_at(sa);
        let (xb, yb) = b.position_at(sb);
        let (fx, fy) = (xa - xb, ya - yb);
        if fx.hypot(fy) <= ROOT_TOLERANCE {
            return Some((sa.clamp(0.0, a.length), sb.clamp(0.0, b.length)));
        }
        let (sna, csa) = a.heading_at(sa).sin_cos();
        let (snb, csb) = b.heading_at(sb).sin_cos();
        // [csa −csb; sna −snb] · (dsa, dsb) = −(fx, fy)
        let det = -csa * snb + csb * sna;
        if det.abs() < 1e-14 {
            return None;
        }
        let dsa = (fx * snb - csb * fy) / det;
        let dsb = (sna * fx - csa * fy) / det;
        let step = dsa.abs().max(dsb.abs());
        // keep steps local; a piece is never longer than the prescan step
        let scale = if step > PRESCAN_STEP { PRESCAN_STEP / step } else { 1.0 };
        sa += scale * dsa;
        sb += scale * dsb;
        if sa < -slack - PRESCAN_STEP || sa > a.length + slack + PRESCAN_STEP {
            return None;
        }
        if sb < -slack - PRESCAN_STEP || sb > b.length + slack + PRESCAN_STEP {
            return None;
        }
    }
    None
}

fn accept(a: &ClothoidSegment, b: &ClothoidSegment, r: Option<(f64, f64)>) -> Option<(f64, f64)> {
    let (sa, sb) = r?;
    let (xa, ya) = a.position_at(sa);
    let (xb, yb) = b.position_at(sb);
    ((xa - xb).hypot(ya - yb) <= 1e-8).then_some((sa, sb))
}

/// Coincident stretch of two segments, parameter ranges on each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentOverlap {
    pub sa: [f64; 2],
    pub sb: [f64; 2],
}

fn same_point(a: &ClothoidSegment, sa: f64, b: &ClothoidSegment, sb: f64) -> bool {
    let (xa, ya) = a.position_at(sa);
    let (xb, yb) = b.position_at(sb);
    (xa - xb).hypot(ya - yb) <= 1e-7
}

/// Detects segments that trace the same curve over an interval, in the same
/// or opposite direction.
pub fn segment_overlap(a: &ClothoidSegment, b: &ClothoidSegment) -> Option<SegmentOverlap> {
    let tol = 1e-12;
    if (a.sharpness - b.sharpness).abs() > tol {
        return None;
    }
    let k = a.sharpness;
    let two_pi = std::f64::consts::TAU;
    for dir in [1.0, -1.0] {
        // candidate maps s_b = dir·s_a + d
        let mut shifts = Vec::new();
        if k.abs() > tol {
            shifts.push(if dir > 0.0 { (a.kappa_hat - b.kappa_hat) / k } else { -(a.kappa_hat + b.kappa_hat) / k });
        } else {
            if (b.kappa_hat - dir * a.kappa_hat).abs() > tol {
                continue;
            }
            let flip = if dir > 0.0 { 0.0 } else { std::f64::consts::PI };
            if b.kappa_hat.abs() > tol {
                // arcs: headings must agree up to whole turns
                let base = (a.start.psi + flip - b.start.psi) / b.kappa_hat;
                let period = two_pi / b.kappa_hat.abs();
                let n = ((a.length + b.length) / period).ceil() as i64 + 1;
                shifts.extend((-n..=n).map(|m| base + m as f64 * period));
            } else {
                // lines: project a's start onto b
                let (sn, cs) = b.start.psi.sin_cos();
                shifts.push((a.start.x - b.start.x) * cs + (a.start.y - b.start.y) * sn);
            }
        }
        for d in shifts {
            // s_a range mapping into [0, L_b]
            let (lo_b, hi_b) = if dir > 0.0 { (-d, b.length - d) } else { (d - b.length, d) };
            let lo = lo_b.max(0.0);
            let hi = hi_b.min(a.length);
            if hi - lo <= 1e-9 {
                continue;
            }
            let ok = [lo, 0.5 * (lo + hi), hi].iter().all(|&sa| same_point(a, sa, b, dir * sa + d));
            let heading_ok = {
                let flip = if dir > 0.0 { 0.0 } else { std::f64::consts::PI };
                let e = crate::clothoid::normalize_angle(a.heading_at(lo) + flip - b.heading_at(dir * lo + d));
                e.abs() < 1e-7
            };
            if ok && heading_ok {
                let sb = [dir * lo + d, dir * hi + d];
                return Some(SegmentOverlap {
                    sa: [lo, hi],
                    sb: [sb[0].min(sb[1]).clamp(0.0, b.length), sb[0].max(sb[1]).clamp(0.0, b.length)],
                });
            }
        }
    }
    None
}

/// All parameter pairs `(s_a, s_b)` where the two segments meet.
///
/// Pieces from a 0.25 m prescan are pruned by bounding circles and split
/// until their tangent cones are separated, where at most one root can lie;
/// each such pair is refined by Newton. Coincident segments return the two
/// ends of the shared stretch.
///
/// ```
/// use cloplan::collision::clothoid_intersections;
/// use cloplan::{ClothoidSegment, Pose2D};
/// use std::f64::consts::FRAC_PI_2;
///
/// let a = ClothoidSegment::new(Pose2D::new(0.0, 5.0, 0.0), 0.0, 0.0, 10.0).unwrap();
/// let b = ClothoidSegment::new(Pose2D::new(5.0, 0.0, FRAC_PI_2), 0.0, 0.0, 10.0).unwrap();
/// let roots = clothoid_intersections(&a, &b);
/// assert_eq!(roots.len(), 1);
/// assert!((roots[0].0 - 5.0).abs() < 1e-9 && (roots[0].1 - 5.0).abs() < 1e-9);
/// ```
pub fn clothoid_intersections(a: &ClothoidSegment, b: &ClothoidSegment) -> Vec<(f64, f64)> {
    if let Some(o) = segment_overlap(a, b) {
        let ends = if same_point(a, o.sa[0], b, o.sb[0]) {
            [(o.sa[0], o.sb[0]), (o.sa[1], o.sb[1])]
        } else {
            [(o.sa[0], o.sb[1]), (o.sa[1], o.sb[0])]
        };
        return ends.to_vec();
    }
    let pa = prescan(a);
    let pb = prescan(b);
    let mut stack: Vec<(Piece, Piece)> = Vec::new();
    for x in &pa {
        for y in &pb {
            stack.push((*x, *y));
        }
    }
    let mut roots: Vec<(f64, f64)> = Vec::new();
    let mut visited = 0;
    while let Some((x, y)) = stack.pop() {
        visited += 1;
        if visited > MAX_PAIRS {
            break;
        }
        let gap = (x.center.0 - y.center.0).hypot(x.center.1 - y.center.1);
        if gap > x.radius + y.radius + 1e-9 {
            continue;
        }
        let tiny = x.len() <= MIN_PIECE && y.len() <= MIN_PIECE;
        if cones_separated(&x, &y) || tiny {
            let start = (0.5 * (x.s0 + x.s1), 0.5 * (y.s0 + y.s1));
            if let Some(r) = accept(a, b, newton(a, b, start.0, start.1)) {
                roots.push(r);
                continue;
            }
            if tiny {
                continue;
            }
        }
        if x.len() >= y.len() {
            for h in x.split(a) {
                stack.push((h, y));
            }
        } else {
            for h in y.split(b) {
                stack.push((x, h));
            }
        }
    }
    dedup(a, b, roots)
}

fn residual(a: &ClothoidSegment, b: &ClothoidSegment, (sa, sb): (f64, f64)) -> f64 {
    let (xa, ya) = a.position_at(sa);
    let (xb, yb) = b.position_at(sb);
    (xa - xb).hypot(ya - yb)
}

fn tangential(a: &ClothoidSegment, b: &ClothoidSegment, (sa, sb): (f64, f64)) -> bool {
    (a.heading_at(sa) - b.heading_at(sb)).sin().abs() < TANGENT_ANGLE
}

/// Merges roots within `DEDUP_DISTANCE`, and runs of near-tangential roots
/// that stay in contact between them, keeping the smallest residual.
fn dedup(a: &ClothoidSegment, b: &ClothoidSegment, mut roots: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    roots.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut last_in_run: Option<(f64, f64)> = None;
    for r in roots {
        let p = a.position_at(r.0);
        if let Some(q) = out.iter_mut().find(|q| {
            let pq = a.position_at(q.0);
            (p.0 - pq.0).hypot(p.1 - pq.1) <= DEDUP_DISTANCE && (r.1 - q.1).abs() <= DEDUP_DISTANCE
        }) {
            if residual(a, b, r) < residual(a, b, *q) {
                *q = r;
            }
            last_in_run = Some(r);
            continue;
        }
        if let (Some(prev), Some(q)) = (last_in_run, out.last_mut()) {
            let mid = (0.5 * (prev.0 + r.0), 0.5 * (prev.1 + r.1));
            let contact = (r.0 - prev.0).abs() <= TANGENT_RUN
                && (r.1 - prev.1).abs() <= TANGENT_RUN
                && tangential(a, b, prev)
                && tangential(a, b, r)
                && residual(a, b, mid) <= 1e-8;
            if contact {
                if residual(a, b, r) < residual(a, b, *q) {
                    *q = r;
                }
                last_in_run = Some(r);
                continue;
            }
        }
        out.push(r);
        last_in_run = Some(r);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Clear,
    Marginal,
    Conflict,
    OverlappingPaths,
}

impl Verdict {
    fn from_gap(gap: f64, threshold: f64) -> Self {
        if gap < threshold {
            Verdict::Conflict
        } else if gap < MARGINAL_FACTOR * threshold {
            Verdict::Marginal
        } else {
            Verdict::Clear
        }
    }

    fn rank(self) -> u8 {
        match self {
            Verdict::Clear => 0,
            Verdict::Marginal => 1,
            Verdict::OverlappingPaths => 2,
            Verdict::Conflict => 3,
        }
    }
}

/// A crossing of the two paths with both arrival times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub point: [f64; 2],
    pub s_a: f64,
    pub s_b: f64,
    pub t_a: f64,
    pub t_b: f64,
    pub time_gap: f64,
    pub verdict: Verdict,
}

/// A stretch driven by both vehicles; `min_time_gap` is over a 0.1 m sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharedStretch {
    pub s_a: [f64; 2],
    pub s_b: [f64; 2],
    pub min_time_gap: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub gap_threshold: f64,
    pub intersections: Vec<Crossing>,
    pub overlaps: Vec<SharedStretch>,
}

impl ConflictReport {
    /// `OverlappingPaths` when the paths share a stretch, else the worst crossing.
    pub fn verdict(&self) -> Verdict {
        if !self.overlaps.is_empty() {
            return Verdict::OverlappingPaths;
        }
        self.intersections.iter().map(|c| c.verdict).max_by_key(|v| v.rank()).unwrap_or(Verdict::Clear)
    }

    /// True when any crossing or shared stretch is closer in time than the threshold.
    pub fn has_conflict(&self) -> bool {
        self.intersections.iter().any(|c| c.verdict == Verdict::Conflict)
            || self.overlaps.iter().any(|o| o.min_time_gap < self.gap_threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConflictError {
    #[error("gap threshold {0} must be non-negative")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Velocity(#[from] VelocityError),
}

fn seg_offset(path: &ThreeClothoidPath, i: usize) -> f64 {
    path.lengths()[..i].iter().sum()
}

/// Crossings of two plans over all 3×3 segment pairs with arrival-time gaps.
pub fn path_conflicts(a: &MotionPlan, b: &MotionPlan, gap_threshold: f64) -> Result<ConflictReport, ConflictError> {
    if !(gap_threshold >= 0.0 && gap_threshold.is_finite()) {
        return Err(ConflictError::InvalidThreshold(gap_threshold));
    }
    let pa = a.profile()?;
    let pb = b.profile()?;
    let mut raw: Vec<(f64, f64)> = Vec::new();
    let mut overlaps: Vec<SharedStretch> = Vec::new();
    for (i, sa_seg) in a.path.segments().iter().enumerate() {
        for (j, sb_seg) in b.path.segments().iter().enumerate() {
            if sa_seg.length == 0.0 || sb_seg.length == 0.0 {
                continue;
            }
            let (oa, ob) = (seg_offset(&a.path, i), seg_offset(&b.path, j));
            if let Some(o) = segment_overlap(sa_seg, sb_seg) {
                overlaps.push(shared_stretch(sa_seg, sb_seg, &o, (oa, ob), (&pa, &pb))?);
                continue;
            }
            for (sa, sb) in clothoid_intersections(sa_seg, sb_seg) {
                raw.push((oa + sa, ob + sb));
            }
        }
    }
    raw.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let mut intersections: Vec<Crossing> = Vec::new();
    for (sa, sb) in raw {
        let sa = sa.min(a.path.s_f());
        let sb = sb.min(b.path.s_f());
        let p = a.path.pose_at(sa).map_err(|e| VelocityError::InvalidInput(e.to_string()))?;
        let dup = intersections
            .iter()
            .any(|c| (c.point[0] - p.x).hypot(c.point[1] - p.y) <= DEDUP_DISTANCE && (c.s_b - sb).abs() <= DEDUP_DISTANCE);
        if dup {
            continue;
        }
        let t_a = pa.time_at(sa)?;
        let t_b = pb.time_at(sb)?;
        let gap = (t_a - t_b).abs();
        intersections.push(Crossing {
            point: [p.x, p.y],
            s_a: sa,
            s_b: sb,
            t_a,
            t_b,
            time_gap: gap,
            verdict: Verdict::from_gap(gap, gap_threshold),
        });
    }
    Ok(ConflictReport { gap_threshold, intersections, overlaps })
}

fn shared_stretch(
    a: &ClothoidSegment,
    b: &ClothoidSegment,
    o: &SegmentOverlap,
    (oa, ob): (f64, f64),
    (pa, pb): (&VelocityProfile, &VelocityProfile),
) -> Result<SharedStretch, VelocityError> {
    let forward = same_point(a, o.sa[0], b, o.sb[0]);
    let n = (((o.sa[1] - o.sa[0]) / 0.1).ceil() as usize).max(1);
    let mut min_gap = f64::INFINITY;
    for k in 0..=n {
        let u = k as f64 / n as f64;
        let sa = o.sa[0] + u * (o.sa[1] - o.sa[0]);
        let sb = if forward { o.sb[0] + u * (o.sb[1] - o.sb[0]) } else { o.sb[1] - u * (o.sb[1] - o.sb[0]) };
        let gap = (pa.time_at((oa + sa).min(pa.s_f()))? - pb.time_at((ob + sb).min(pb.s_f()))?).abs();
        min_gap = min_gap.min(gap);
    }
    Ok(SharedStretch {
        s_a: [oa + o.sa[0], oa + o.sa[1]],
        s_b: [ob + o.sb[0], ob + o.sb[1]],
        min_time_gap: min_gap,
        verdict: Verdict::OverlappingPaths,
    })
}
