//! Speed profiles along a three-clothoid path.
//!
//! A raw plan holds one constant acceleration per segment, the largest that
//! keeps the speed under the bound `v̄(s)`. Smoothing then replaces each
//! acceleration step with a constant-jerk ramp in time, hosted in the later
//! segment when acceleration rises and in the earlier one when it falls.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::path::{curvature_at, ThreeClothoidPath};
use crate::vehicle::VehicleLimits;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VelocityError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("initial speed {v0} exceeds the speed bound {vbar} at s = 0")]
    InfeasibleStart { v0: f64, vbar: f64 },
    #[error("smoothing ramp at junction {junction} needs {required} m but its host segment has {available} m")]
    SmoothingOverrun { junction: usize, required: f64, available: f64 },
    #[error("speed reaches zero at s = {s}; the plan stops")]
    StoppedFlow { s: f64 },
    #[error("arclength {s} outside [0, {s_f}]")]
    OutOfRange { s: f64, s_f: f64 },
}

/// Pointwise speed bound `v̄(s)` along a path.
///
/// ```text
/// v̄ = min{ √(a_lat/|κ|), Ω(1 + l²κ²)/(l|κ′|), v_cap }
/// ```
///
/// At a breakpoint the steering branch takes the smaller of the two sides.
#[derive(Debug, Clone, Copy)]
pub struct VelocityBound<'a> {
    path: &'a ThreeClothoidPath,
    limits: VehicleLimits,
}

impl<'a> VelocityBound<'a> {
    pub fn new(path: &'a ThreeClothoidPath, limits: &VehicleLimits) -> Self {
        VelocityBound { path, limits: *limits }
    }

    /// `√(a_lat/|κ|)`, infinite on straight stretches.
    pub fn lateral_branch(&self, kappa: f64) -> f64 {
        if kappa == 0.0 {
            f64::INFINITY
        } else {
            (self.limits.a_lat_max / kappa.abs()).sqrt()
        }
    }

    /// `Ω(1 + l²κ²)/(l|κ′|)`, infinite where the sharpness vanishes.
    pub fn steering_branch(&self, kappa: f64, sharpness: f64) -> f64 {
        if sharpness == 0.0 {
            return f64::INFINITY;
        }
        let l = self.limits.wheelbase;
        self.limits.omega_max * (1.0 + l * l * kappa * kappa) / (l * sharpness.abs())
    }

    /// Bound evaluated with segment `i`'s sharpness at local arclength `sigma`.
    pub fn on_segment(&self, i: usize, sigma: f64) -> f64 {
        let seg = &self.path.segments()[i];
        let kappa = seg.curvature_at(sigma);
        self.lateral_branch(kappa).min(self.steering_branch(kappa, seg.sharpness)).min(self.limits.v_cap)
    }

    /// Lateral branch at path arclength `s`.
    pub fn lateral(&self, s: f64) -> f64 {
        curvature_at(self.path, s).map(|k| self.lateral_branch(k)).unwrap_or(f64::NAN)
    }

    /// Steering-rate branch at path arclength `s`, smaller side at breakpoints.
    pub fn steering(&self, s: f64) -> f64 {
        let Ok(kappa) = curvature_at(self.path, s) else { return f64::NAN };
        self.sharpnesses_at(s).iter().map(|&kp| self.steering_branch(kappa, kp)).fold(f64::INFINITY, f64::min)
    }

    /// `v̄(s)`.
    pub fn value(&self, s: f64) -> f64 {
        self.lateral(s).min(self.steering(s)).min(self.limits.v_cap)
    }

    fn sharpnesses_at(&self, s: f64) -> Vec<f64> {
        let kp = self.path.sharpnesses();
        let lengths = self.path.lengths();
        let mut lo = 0.0;
        let mut out = Vec::with_capacity(2);
        for i in 0..3 {
            let hi = lo + lengths[i];
            if lengths[i] > 0.0 && s >= lo && s <= hi {
                out.push(kp[i]);
            }
            lo = hi;
        }
        if out.is_empty() {
            out.push(kp[2]);
        }
        out
    }
}

/// `v̄(s)` for a path and limits.
pub fn vbar(path: &ThreeClothoidPath, limits: &VehicleLimits, s: f64) -> f64 {
    VelocityBound::new(path, limits).value(s)
}

/// One constant acceleration per segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantAccelPlan {
    pub v0: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub v1: f64,
    pub v2: f64,
    pub vf: f64,
}

impl ConstantAccelPlan {
    pub fn accelerations(&self) -> [f64; 3] {
        [self.a0, self.a1, self.a2]
    }

    /// Speed at the start of each segment.
    pub fn start_speeds(&self) -> [f64; 3] {
        [self.v0, self.v1, self.v2]
    }

    /// Speed at path arclength `s`.
    pub fn velocity_at(&self, path: &ThreeClothoidPath, s: f64) -> Result<f64, VelocityError> {
        let (i, sigma) = path.locate(s).map_err(|_| VelocityError::OutOfRange { s, s_f: path.s_f() })?;
        let v = self.start_speeds()[i];
        Ok((v * v + 2.0 * self.accelerations()[i] * sigma).max(0.0).sqrt())
    }

    /// Travel time to arclength `s`.
    pub fn time_at(&self, path: &ThreeClothoidPath, s: f64) -> Result<f64, VelocityError> {
        let s_f = path.s_f();
        if !(s >= 0.0 && s <= s_f) {
            return Err(VelocityError::OutOfRange { s, s_f });
        }
        let ends = [self.v1, self.v2, self.vf];
        let mut t = 0.0;
        let mut start = 0.0;
        for (i, &len) in path.lengths().iter().enumerate() {
            let sigma = (s - start).clamp(0.0, len);
            if sigma > 0.0 {
                let v0 = self.start_speeds()[i];
                let v1 = if sigma == len { ends[i] } else { (v0 * v0 + 2.0 * self.accelerations()[i] * sigma).max(0.0).sqrt() };
                if v0 + v1 <= 0.0 {
                    return Err(VelocityError::StoppedFlow { s: start });
                }
                t += 2.0 * sigma / (v0 + v1);
            }
            start += len;
        }
        Ok(t)
    }
}

const GRID_STEP: f64 = 0.01;
const GOLDEN_TOL: f64 = 1e-6;

/// Minimum over `σ ∈ (0, len]` of `g`, from a grid plus golden-section refinement
/// of every grid-local minimum.
fn minimize_on_segment(len: f64, g: impl Fn(f64) -> f64) -> f64 {
    let mut xs = vec![1e-6_f64.min(len)];
    let n = (len / GRID_STEP).floor() as usize;
    xs.extend((1..=n).map(|k| k as f64 * GRID_STEP).filter(|&x| x < len));
    if *xs.last().unwrap() < len {
        xs.push(len);
    }
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut best = gs.iter().copied().fold(f64::INFINITY, f64::min);
    for k in 0..xs.len() {
        let left = k == 0 || gs[k] <= gs[k - 1];
        let right = k + 1 == xs.len() || gs[k] <= gs[k + 1];
        if !(left && right) {
            continue;
        }
        let lo = xs[k.saturating_sub(1)];
        let hi = xs[(k + 1).min(xs.len() - 1)];
        best = best.min(golden(lo, hi, &g));
    }
    best
}

fn golden(mut a: f64, mut b: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// Highest constant acceleration per segment that keeps `v ≤ v̄`.
///
/// `a_i = max{a_min, min{a_max, min over σ ∈ (0, s_i] of (v̄² − v_i²)/(2σ)}}`,
/// where the segment end uses the bound on both sides of the breakpoint.
pub fn constant_accel_plan(path: &ThreeClothoidPath, v0: f64, limits: &VehicleLimits) -> Result<ConstantAccelPlan, VelocityError> {
    if !(v0.is_finite() && v0 >= 0.0) {
        return Err(VelocityError::InvalidInput(format!("initial speed {v0} must be finite and non-negative")));
    }
    limits.validate().map_err(VelocityError::InvalidInput)?;
    let bound = VelocityBound::new(path, limits);
    let start_bound = bound.value(0.0);
    if v0 > start_bound {
        return Err(VelocityError::InfeasibleStart { v0, vbar: start_bound });
    }
    let lengths = path.lengths();
    let [b0, b1] = path.breakpoints();
    let ends = [b0, b1, path.s_f()];
    let mut v = v0;
    let mut acc = [0.0; 3];
    let mut speeds = [0.0; 4];
    speeds[0] = v0;
    for i in 0..3 {
        let len = lengths[i];
        let a = if len == 0.0 {
            0.0
        } else {
            // rounding can leave v a few ulps above the bound at a junction
            let v_eff = v.min(bound.on_segment(i, 0.0));
            let end_bound = bound.value(ends[i]);
            let g = |sigma: f64| {
                let vb = if sigma >= len { end_bound } else { bound.on_segment(i, sigma) };
                (vb * vb - v_eff * v_eff) / (2.0 * sigma)
            };
            minimize_on_segment(len, g).clamp(limits.a_min, limits.a_max)
        };
        acc[i] = a;
        v = (v * v + 2.0 * a * len).max(0.0).sqrt();
        speeds[i + 1] = v;
    }
    Ok(ConstantAccelPlan { v0, a0: acc[0], a1: acc[1], a2: acc[2], v1: speeds[1], v2: speeds[2], vf: speeds[3] })
}

/// Which side of each junction hosts its smoothing ramp.
///
/// The first letter compares `a0` with `a1`, the second `a1` with `a2`:
/// `L` for `≤` (ramp at the start of the later segment) and `G` for `>`
/// (ramp at the end of the earlier segment).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VelocityCase {
    LL,
    GG,
    LG,
    GL,
}

impl VelocityCase {
    pub fn from_accelerations(a0: f64, a1: f64, a2: f64) -> Self {
        match (a0 <= a1, a1 <= a2) {
            (true, true) => VelocityCase::LL,
            (false, false) => VelocityCase::GG,
            (true, false) => VelocityCase::LG,
            (false, true) => VelocityCase::GL,
        }
    }

    /// Wire tag: 0 = LL, 1 = GG, 2 = LG, 3 = GL.
    pub fn tag(&self) -> u8 {
        match self {
            VelocityCase::LL => 0,
            VelocityCase::GG => 1,
            VelocityCase::LG => 2,
            VelocityCase::GL => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => VelocityCase::LL,
            1 => VelocityCase::GG,
            2 => VelocityCase::LG,
            3 => VelocityCase::GL,
            _ => return None,
        })
    }

    /// Whether junction `j` (1 or 2) ramps forward into the later segment.
    pub fn forward_at(&self, junction: usize) -> bool {
        let (first, second) = match self {
            VelocityCase::LL => (true, true),
            VelocityCase::GG => (false, false),
            VelocityCase::LG => (true, false),
            VelocityCase::GL => (false, true),
        };
        if junction == 1 {
            first
        } else {
            second
        }
    }
}

/// Jerk-smoothed speed plan aligned to the three path segments.
///
/// `v_aux1`, `v_aux2` are the speeds at the two junctions. `smooth_a` and
/// `smooth_b` are the ramp lengths at junctions 1 and 2; the case tag says
/// whether each ramp sits before or after its junction. A rising ramp into the
/// last segment may be longer than that segment, in which case it is still
/// in progress at `s_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedVelocityPlan {
    pub case_tag: VelocityCase,
    pub v0: f64,
    pub v_aux1: f64,
    pub v_aux2: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub jc: f64,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub smooth_a: f64,
    pub smooth_b: f64,
}

/// Ramp entering a segment: start speed `v`, acceleration rising by `jc`.
struct ForwardRamp {
    length: f64,
    end_speed: f64,
}

fn forward_ramp(v: f64, a_prev: f64, a_next: f64, jc: f64, s_at: f64) -> Result<ForwardRamp, VelocityError> {
    let t = (a_next - a_prev) / jc;
    if a_prev < 0.0 && -a_prev / jc < t && v - a_prev * a_prev / (2.0 * jc) <= 0.0 {
        return Err(VelocityError::StoppedFlow { s: s_at });
    }
    Ok(ForwardRamp {
        length: v * t + 0.5 * a_prev * t * t + jc * t * t * t / 6.0,
        end_speed: v + a_prev * t + 0.5 * jc * t * t,
    })
}

/// Ramp ending a host segment of length `avail` whose constant phase starts at
/// speed `vb` with acceleration `a`; the acceleration falls by `jc` to `a_next`.
/// Returns `(S, junction speed)`.
fn backward_ramp(
    vb: f64,
    a: f64,
    a_next: f64,
    jc: f64,
    avail: f64,
    junction: usize,
    host_start: f64,
) -> Result<(f64, f64), VelocityError> {
    let t = (a - a_next) / jc;
    let dist = |v: f64| v * t + 0.5 * a * t * t - jc * t * t * t / 6.0;
    let v_r = |s: f64| (vb * vb + 2.0 * a * (avail - s)).max(0.0).sqrt();
    let f = |s: f64| s - dist(v_r(s));
    let lo0 = if a < 0.0 { (avail + vb * vb / (2.0 * a)).max(0.0) } else { 0.0 };
    let (mut lo, mut hi) = (lo0, avail);
    let (flo, fhi) = (f(lo), f(hi));
    if fhi < 0.0 {
        return Err(VelocityError::SmoothingOverrun { junction, required: dist(vb), available: avail });
    }
    if flo > 0.0 {
        return Err(VelocityError::StoppedFlow { s: host_start + lo });
    }
    if fhi == 0.0 {
        lo = hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = hi;
    let vr = v_r(s);
    let v_end = vr + a * t - 0.5 * jc * t * t;
    if v_end <= 0.0 {
        return Err(VelocityError::StoppedFlow { s: host_start + avail });
    }
    Ok((s, v_end))
}

/// Replaces acceleration steps with constant-jerk ramps of jerk `limits.j_max`.
pub fn jerk_smooth(raw: &ConstantAccelPlan, path: &ThreeClothoidPath, limits: &VehicleLimits) -> Result<SmoothedVelocityPlan, VelocityError> {
    let jc = limits.j_max;
    if !(jc.is_finite() && jc > 0.0) {
        return Err(VelocityError::InvalidInput(format!("smoothing jerk {jc} must be positive")));
    }
    let [s0, s1, s2] = path.lengths();
    let [a0, a1, a2] = raw.accelerations();
    let case = VelocityCase::from_accelerations(a0, a1, a2);
    let [b0, b1] = path.breakpoints();

    // junction 1
    let (smooth_a, v_aux1, seg1_start, seg1_speed) = if case.forward_at(1) {
        let v_j = (raw.v0 * raw.v0 + 2.0 * a0 * s0).max(0.0).sqrt();
        let r = forward_ramp(v_j, a0, a1, jc, b0)?;
        if r.length > s1 {
            return Err(VelocityError::SmoothingOverrun { junction: 1, required: r.length, available: s1 });
        }
        (r.length, v_j, r.length, r.end_speed)
    } else {
        let (s, v_j) = backward_ramp(raw.v0, a0, a1, jc, s0, 1, 0.0)?;
        (s, v_j, 0.0, v_j)
    };

    // junction 2, starting from segment 1's constant phase
    let avail = s1 - seg1_start;
    let (smooth_b, v_aux2) = if case.forward_at(2) {
        let sq = seg1_speed * seg1_speed + 2.0 * a1 * avail;
        if sq <= 0.0 && avail > 0.0 {
            return Err(VelocityError::StoppedFlow { s: b0 + seg1_start });
        }
        let v_j = sq.max(0.0).sqrt();
        // a ramp longer than the last segment stays open at s_f
        let r = forward_ramp(v_j, a1, a2, jc, b1)?;
        (r.length, v_j)
    } else {
        backward_ramp(seg1_speed, a1, a2, jc, avail, 2, b0 + seg1_start)?
    };

    let plan = SmoothedVelocityPlan { case_tag: case, v0: raw.v0, v_aux1, v_aux2, a0, a1, a2, jc, s0, s1, s2, smooth_a, smooth_b };
    // surfaces stalls in the final constant phase
    plan.profile()?;
    Ok(plan)
}

/// A stretch of the profile with constant jerk in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub s_start: f64,
    pub length: f64,
    pub v_start: f64,
    pub a_start: f64,
    pub jerk: f64,
    pub t_start: f64,
    pub duration: f64,
}

impl Phase {
    fn v_end(&self) -> f64 {
        self.velocity_at_time(self.duration)
    }

    fn velocity_at_time(&self, tau: f64) -> f64 {
        self.v_start + self.a_start * tau + 0.5 * self.jerk * tau * tau
    }

    fn distance_at_time(&self, tau: f64) -> f64 {
        self.v_start * tau + 0.5 * self.a_start * tau * tau + self.jerk * tau * tau * tau / 6.0
    }

    /// Local time at which the phase has covered `sigma`.
    fn time_at(&self, sigma: f64) -> f64 {
        if sigma <= 0.0 {
            return 0.0;
        }
        if sigma >= self.length {
            return self.duration;
        }
        if self.jerk == 0.0 {
            let v = (self.v_start * self.v_start + 2.0 * self.a_start * sigma).max(0.0).sqrt();
            return 2.0 * sigma / (self.v_start + v);
        }
        // σ(τ) is increasing while v > 0: safeguarded Newton on [0, duration]
        let (mut lo, mut hi) = (0.0, self.duration);
        let mut tau = self.duration * sigma / self.length;
        for _ in 0..100 {
            let f = self.distance_at_time(tau) - sigma;
            if f > 0.0 {
                hi = tau;
            } else {
                lo = tau;
            }
            let v = self.velocity_at_time(tau);
            let mut next = if v > 0.0 { tau - f / v } else { 0.5 * (lo + hi) };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - tau).abs() <= 1e-16 * self.duration.max(1.0) || hi - lo <= 1e-16 {
                tau = next;
                break;
            }
            tau = next;
        }
        tau
    }
}

/// A sample of the evaluated profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub v: f64,
    pub a: f64,
    pub t: f64,
}

/// Phase list of a smoothed plan, ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityProfile {
    phases: Vec<Phase>,
    s_f: f64,
}

impl VelocityProfile {
    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn s_f(&self) -> f64 {
        self.s_f
    }

    pub fn total_time(&self) -> f64 {
        self.phases.last().map_or(0.0, |p| p.t_start + p.duration)
    }

    fn phase_index(&self, s: f64) -> Result<usize, VelocityError> {
        if !(s >= -1e-9 && s <= self.s_f + 1e-9) {
            return Err(VelocityError::OutOfRange { s, s_f: self.s_f });
        }
        let idx = self.phases.partition_point(|p| p.s_start + p.length <= s);
        Ok(idx.min(self.phases.len() - 1))
    }

    /// Speed, acceleration and time at arclength `s`.
    pub fn evaluate(&self, s: f64) -> Result<ProfilePoint, VelocityError> {
        let i = self.phase_index(s)?;
        let p = &self.phases[i];
        let sigma = (s - p.s_start).clamp(0.0, p.length);
        let tau = p.time_at(sigma);
        let (v, a) = if p.jerk == 0.0 {
            ((p.v_start * p.v_start + 2.0 * p.a_start * sigma).max(0.0).sqrt(), p.a_start)
        } else {
            (p.velocity_at_time(tau).max(0.0), p.a_start + p.jerk * tau)
        };
        Ok(ProfilePoint { v, a, t: p.t_start + tau })
    }

    /// Travel time to `s`; fails when the speed vanishes on `(0, s]`.
    pub fn time_at(&self, s: f64) -> Result<f64, VelocityError> {
        let i = self.phase_index(s)?;
        for p in &self.phases[..i] {
            if p.length > 0.0 && p.v_end() <= 0.0 {
                return Err(VelocityError::StoppedFlow { s: p.s_start + p.length });
            }
        }
        let pt = self.evaluate(s)?;
        if s > 0.0 && pt.v <= 0.0 {
            return Err(VelocityError::StoppedFlow { s });
        }
        Ok(pt.t)
    }
}

impl SmoothedVelocityPlan {
    pub fn accelerations(&self) -> [f64; 3] {
        [self.a0, self.a1, self.a2]
    }

    pub fn lengths(&self) -> [f64; 3] {
        [self.s0, self.s1, self.s2]
    }

    pub fn s_f(&self) -> f64 {
        self.s0 + self.s1 + self.s2
    }

    /// Field-level sanity checks shared by construction and decoding.
    pub fn validate(&self) -> Result<(), VelocityError> {
        let fields = [
            ("v0", self.v0),
            ("v_aux1", self.v_aux1),
            ("v_aux2", self.v_aux2),
            ("a0", self.a0),
            ("a1", self.a1),
            ("a2", self.a2),
            ("jc", self.jc),
            ("s0", self.s0),
            ("s1", self.s1),
            ("s2", self.s2),
            ("smooth_a", self.smooth_a),
            ("smooth_b", self.smooth_b),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(VelocityError::InvalidInput(format!("{name} is not finite")));
            }
        }
        for (name, v) in [("v0", self.v0), ("v_aux1", self.v_aux1), ("v_aux2", self.v_aux2), ("s0", self.s0), ("s1", self.s1), ("s2", self.s2), ("smooth_a", self.smooth_a), ("smooth_b", self.smooth_b)] {
            if v < 0.0 {
                return Err(VelocityError::InvalidInput(format!("{name} is negative")));
            }
        }
        if self.jc <= 0.0 {
            return Err(VelocityError::InvalidInput("jc must be positive".into()));
        }
        let host_a = if self.case_tag.forward_at(1) { self.s1 } else { self.s0 };
        if self.smooth_a > host_a {
            return Err(VelocityError::SmoothingOverrun { junction: 1, required: self.smooth_a, available: host_a });
        }
        let host_b = if self.case_tag.forward_at(2) {
            f64::INFINITY
        } else if self.case_tag.forward_at(1) {
            self.s1 - self.smooth_a
        } else {
            self.s1
        };
        if self.smooth_b > host_b {
            return Err(VelocityError::SmoothingOverrun { junction: 2, required: self.smooth_b, available: host_b.max(0.0) });
        }
        Ok(())
    }

    /// Builds the phase list.
    pub fn profile(&self) -> Result<VelocityProfile, VelocityError> {
        self.validate()?;
        let mut phases: Vec<Phase> = Vec::with_capacity(7);
        let a = self.accelerations();
        let starts = [self.v0, self.v_aux1, self.v_aux2];
        let lengths = self.lengths();
        let fwd = [false, self.case_tag.forward_at(1), self.case_tag.forward_at(2)];
        let smooth = [0.0, self.smooth_a, self.smooth_b];
        let mut s_cursor = 0.0;
        let mut t = 0.0;
        let mut push = |phases: &mut Vec<Phase>, s_start: f64, length: f64, v_start: f64, a_start: f64, jerk: f64, duration: f64| -> Result<f64, VelocityError> {
            let duration = if jerk != 0.0 {
                duration
            } else if length == 0.0 {
                0.0
            } else {
                let v_end = (v_start * v_start + 2.0 * a_start * length).max(0.0).sqrt();
                if v_start + v_end <= 0.0 {
                    return Err(VelocityError::StoppedFlow { s: s_start });
                }
                2.0 * length / (v_start + v_end)
            };
            let p = Phase { s_start, length, v_start, a_start, jerk, t_start: t, duration };
            t += duration;
            let v_end = if jerk == 0.0 {
                let sq = v_start * v_start + 2.0 * a_start * length;
                if sq < 0.0 && length > 0.0 {
                    return Err(VelocityError::StoppedFlow { s: s_start + length });
                }
                sq.max(0.0).sqrt()
            } else {
                p.v_end()
            };
            if length > 0.0 || phases.is_empty() {
                phases.push(p);
            }
            Ok(v_end)
        };
        for i in 0..3 {
            let seg_start = s_cursor;
            let mut v = starts[i];
            let mut used = 0.0;
            // forward ramp opening this segment
            if i > 0 && fwd[i] && smooth[i] > 0.0 {
                let mut dur = (a[i] - a[i - 1]) / self.jc;
                let len = smooth[i].min(lengths[i]);
                if len < smooth[i] {
                    let full = Phase { s_start: seg_start, length: smooth[i], v_start: v, a_start: a[i - 1], jerk: self.jc, t_start: 0.0, duration: dur };
                    dur = full.time_at(len);
                }
                v = push(&mut phases, seg_start, len, v, a[i - 1], self.jc, dur)?;
                used = len;
            }
            // backward ramp closing this segment
            let tail = if i < 2 && !fwd[i + 1] { smooth[i + 1] } else { 0.0 };
            let body = (lengths[i] - used - tail).max(0.0);
            v = push(&mut phases, seg_start + used, body, v, a[i], 0.0, 0.0)?;
            if tail > 0.0 {
                let dur = (a[i] - a[i + 1]) / self.jc;
                push(&mut phases, seg_start + lengths[i] - tail, tail, v, a[i], -self.jc, dur)?;
            }
            s_cursor += lengths[i];
        }
        Ok(VelocityProfile { phases, s_f: self.s_f() })
    }

    pub fn velocity_at(&self, s: f64) -> Result<f64, VelocityError> {
        Ok(self.profile()?.evaluate(s)?.v)
    }

    pub fn acceleration_at(&self, s: f64) -> Result<f64, VelocityError> {
        Ok(self.profile()?.evaluate(s)?.a)
    }

    pub fn time_at(&self, s: f64) -> Result<f64, VelocityError> {
        self.profile()?.time_at(s)
    }

    pub fn total_time(&self) -> Result<f64, VelocityError> {
        let p = self.profile()?;
        p.time_at(p.s_f)
    }

    /// The unsmoothed plan with the same accelerations and start speed.
    pub fn unsmoothed(&self) -> ConstantAccelPlan {
        let v1 = (self.v0 * self.v0 + 2.0 * self.a0 * self.s0).max(0.0).sqrt();
        let v2 = (v1 * v1 + 2.0 * self.a1 * self.s1).max(0.0).sqrt();
        let vf = (v2 * v2 + 2.0 * self.a2 * self.s2).max(0.0).sqrt();
        ConstantAccelPlan { v0: self.v0, a0: self.a0, a1: self.a1, a2: self.a2, v1, v2, vf }
    }
}

/// Raw plan followed by smoothing.
pub fn plan_velocity(path: &ThreeClothoidPath, v0: f64, limits: &VehicleLimits) -> Result<SmoothedVelocityPlan, VelocityError> {
    let raw = constant_accel_plan(path, v0, limits)?;
    jerk_smooth(&raw, path, limits)
}
