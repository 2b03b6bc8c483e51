//! Poses and single clothoid segments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::fresnel;

/// Slack allowed when an arclength argument overshoots a domain through rounding.
pub(crate) const DOMAIN_SLACK: f64 = 1e-9;

/// Wrap an angle into `(-π, π]`.
///
/// Angles already in range are returned untouched, so the map is idempotent.
pub fn normalize_angle(psi: f64) -> f64 {
    if psi > -PI && psi <= PI {
        return psi;
    }
    let mut r = (psi + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Position and heading of the rear-axle center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

impl Pose2D {
    /// Builds a pose with the heading wrapped into `(-π, π]`.
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Pose2D { x, y, psi: normalize_angle(psi) }
    }

    pub fn origin() -> Self {
        Pose2D { x: 0.0, y: 0.0, psi: 0.0 }
    }

    pub fn normalized(self) -> Self {
        Pose2D::new(self.x, self.y, self.psi)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.psi.is_finite()
    }

    /// Maps a body-frame offset `(ξ, η)` into the world frame.
    pub fn transform(&self, xi: f64, eta: f64) -> (f64, f64) {
        let (s, c) = self.psi.sin_cos();
        (self.x + c * xi - s * eta, self.y + s * xi + c * eta)
    }
}

impl Default for Pose2D {
    fn default() -> Self {
        Pose2D::origin()
    }
}

/// An arc whose curvature is `kappa_hat + sharpness·s` for `s ∈ [0, length]`.
///
/// `start.psi` may hold an unwrapped heading when the segment is part of a
/// chained path; headings leaving through [`ClothoidSegment::pose_at`] are
/// normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClothoidSegment {
    pub start: Pose2D,
    pub kappa_hat: f64,
    pub sharpness: f64,
    pub length: f64,
}

impl ClothoidSegment {
    pub fn new(start: Pose2D, kappa_hat: f64, sharpness: f64, length: f64) -> Result<Self, GeometryError> {
        if !(start.is_finite() && kappa_hat.is_finite() && sharpness.is_finite() && length.is_finite()) {
            return Err(GeometryError::InvalidArgument("segment parameters must be finite".into()));
        }
        if length < 0.0 {
            return Err(GeometryError::InvalidArgument(format!("segment length {length} is negative")));
        }
        Ok(ClothoidSegment { start, kappa_hat, sharpness, length })
    }

    /// Unwrapped heading `κ′s²/2 + κ̂s + ψ̂`.
    pub fn heading_at(&self, s: f64) -> f64 {
        (0.5 * self.sharpness * s + self.kappa_hat) * s + self.start.psi
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        self.kappa_hat + self.sharpness * s
    }

    /// Position without a domain check; valid for any finite `s ≥ 0`.
    pub fn position_at(&self, s: f64) -> (f64, f64) {
        self.position_at_tol(s, fresnel::DEFAULT_TOLERANCE)
    }

    pub(crate) fn position_at_tol(&self, s: f64, tol: f64) -> (f64, f64) {
        if s == 0.0 {
            return (self.start.x, self.start.y);
        }
        let (c, sn) = fresnel::eval(self.sharpness * s * s, self.kappa_hat * s, self.start.psi, tol);
        (self.start.x + s * c, self.start.y + s * sn)
    }

    /// Pose at arclength `s`, heading normalized.
    pub fn pose_at(&self, s: f64) -> Result<Pose2D, GeometryError> {
        let s = self.check(s)?;
        let (x, y) = self.position_at(s);
        Ok(Pose2D::new(x, y, self.heading_at(s)))
    }

    /// End pose with the heading left unwrapped, for chaining.
    pub fn end_pose_unwrapped(&self) -> Pose2D {
        let (x, y) = self.position_at(self.length);
        Pose2D { x, y, psi: self.heading_at(self.length) }
    }

    pub(crate) fn check(&self, s: f64) -> Result<f64, GeometryError> {
        if !s.is_finite() || s < -DOMAIN_SLACK || s > self.length + DOMAIN_SLACK {
            return Err(GeometryError::OutOfRange { s, length: self.length });
        }
        Ok(s.clamp(0.0, self.length))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    /// Classic RK4 on x′ = cos ψ, y′ = sin ψ, ψ′ = κ(s).
    pub(crate) fn rk4(seg: &ClothoidSegment, s_end: f64, h: f64) -> (f64, f64, f64) {
        let n = (s_end / h).round() as usize;
        let h = s_end / n as f64;
        let f = |s: f64, st: [f64; 3]| [st[2].cos(), st[2].sin(), seg.kappa_hat + seg.sharpness * s];
        let mut st = [seg.start.x, seg.start.y, seg.start.psi];
        for i in 0..n {
            let s = i as f64 * h;
            let k1 = f(s, st);
            let add = |st: [f64; 3], k: [f64; 3], w: f64| [st[0] + w * k[0], st[1] + w * k[1], st[2] + w * k[2]];
            let k2 = f(s + h / 2.0, add(st, k1, h / 2.0));
            let k3 = f(s + h / 2.0, add(st, k2, h / 2.0));
            let k4 = f(s + h, add(st, k3, h));
            for j in 0..3 {
                st[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        (st[0], st[1], st[2])
    }

    #[test]
    fn normalization_range_and_idempotence() {
        for &a in &[0.0, PI, -PI, 3.0 * PI, -3.0 * PI, 7.5, -7.5, 1e6, -1e-300, 2.0 * PI] {
            let n = normalize_angle(a);
            assert!(n > -PI && n <= PI, "{a} -> {n}");
            assert_eq!(normalize_angle(n), n);
            assert!(((a - n) / (2.0 * PI)).fract().abs() < 1e-9 || ((a - n) / (2.0 * PI)).fract().abs() > 1.0 - 1e-9);
        }
        assert_eq!(normalize_angle(-PI), PI);
    }

    #[test]
    fn straight_and_circle() {
        let seg = ClothoidSegment::new(Pose2D::origin(), 0.0, 0.0, 10.0).unwrap();
        let p = seg.pose_at(10.0).unwrap();
        assert!((p.x - 10.0).abs() < 1e-12 && p.y.abs() < 1e-12 && p.psi == 0.0);

        let seg = ClothoidSegment::new(Pose2D::origin(), 0.2, 0.0, PI * 2.5).unwrap();
        let p = seg.pose_at(PI * 2.5).unwrap();
        assert!((p.x - 5.0).abs() < 1e-11 && (p.y - 5.0).abs() < 1e-11);
        assert!((p.psi - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn generic_clothoid_matches_rk4() {
        let seg = ClothoidSegment::new(Pose2D::origin(), 0.0, 0.01, 20.0).unwrap();
        let p = seg.pose_at(20.0).unwrap();
        let (x, y, psi) = rk4(&seg, 20.0, 1e-4);
        assert!((p.x - x).abs() < 1e-7 && (p.y - y).abs() < 1e-7);
        assert!((p.psi - psi).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_out_of_range() {
        let start = Pose2D::new(1.0, 2.0, 0.3);
        let seg = ClothoidSegment::new(start, 0.1, 0.2, 0.0).unwrap();
        assert_eq!(seg.pose_at(0.0).unwrap(), start);
        assert!(seg.pose_at(0.1).is_err());
        assert!(seg.pose_at(-0.1).is_err());
        assert!(ClothoidSegment::new(start, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn tolerance_convergence() {
        let seg = ClothoidSegment::new(Pose2D::new(0.0, 0.0, 0.4), -0.15, 0.03, 17.0).unwrap();
        let a = seg.position_at_tol(17.0, 1e-12);
        let b = seg.position_at_tol(17.0, 1e-9);
        assert!((a.0 - b.0).hypot(a.1 - b.1) <= 1e-8);
    }
}
