//! Three-clothoid G² paths between two configurations.
//!
//! The curvature is piecewise linear with breakpoints `s0` and `s0 + s1`:
//!
//! ```text
//! κ(s) = κ0 + κ′0 s                       0 ≤ s ≤ s0
//!        κ1 + κ′1 (s − s0 − s1/2)        s0 ≤ s ≤ s0 + s1
//!        κ2 + κ′2 (s − s_f)              s0 + s1 ≤ s ≤ s_f
//! ```
//!
//! With `s0`, `s2` fixed by the caller, the boundary value problem reduces to
//! two equations in `(s1, κ′1)`, solved by damped Newton iteration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clothoid::{normalize_angle, ClothoidSegment, Pose2D, DOMAIN_SLACK};
use crate::error::GeometryError;
use crate::fresnel;
use crate::vehicle::VehicleLimits;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("Newton iteration did not converge (best scaled residual {best_residual:e})")]
    NoConvergence { best_residual: f64 },
    #[error("chord length {chord:e} is too short to turn by {dpsi} rad")]
    DegenerateChord { chord: f64, dpsi: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Goal configuration relative to the start pose, plus end curvatures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathBoundaryCondition {
    pub dx: f64,
    pub dy: f64,
    /// Heading change, in `(-π, π]`.
    pub dpsi: f64,
    pub kappa0: f64,
    pub kappa2: f64,
}

impl PathBoundaryCondition {
    pub fn new(dx: f64, dy: f64, dpsi: f64, kappa0: f64, kappa2: f64) -> Self {
        PathBoundaryCondition { dx, dy, dpsi, kappa0, kappa2 }
    }

    pub fn chord(&self) -> f64 {
        self.dx.hypot(self.dy)
    }

    pub fn validate(&self) -> Result<(), PathError> {
        let all = [self.dx, self.dy, self.dpsi, self.kappa0, self.kappa2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(PathError::InvalidInput("boundary condition must be finite".into()));
        }
        if !(self.dpsi > -std::f64::consts::PI && self.dpsi <= std::f64::consts::PI) {
            return Err(PathError::InvalidInput(format!("dpsi {} outside (-π, π]", self.dpsi)));
        }
        Ok(())
    }
}

/// The eight unknowns of the full boundary value system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Unknowns {
    pub x1: f64,
    pub y1: f64,
    pub psi1: f64,
    pub kappa1: f64,
    pub kp0: f64,
    pub kp1: f64,
    pub kp2: f64,
    pub s1: f64,
}

/// A solved three-clothoid path.
///
/// Built only through [`ThreeClothoidPath::from_params`], which derives the
/// outer sharpnesses from curvature continuity and chains the segments from
/// the origin. Solver output and decoded messages share this constructor, so
/// equal parameters always give bitwise-equal paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeClothoidPath {
    s: [f64; 3],
    kappa: [f64; 3],
    kp: [f64; 3],
    origin: Pose2D,
    mid: Pose2D,
    segments: [ClothoidSegment; 3],
}

impl ThreeClothoidPath {
    /// Builds the path from the transmitted parameter set.
    #[allow(clippy::too_many_arguments)]
    pub fn from_params(
        origin: Pose2D,
        s0: f64,
        s1: f64,
        s2: f64,
        kappa0: f64,
        kappa1: f64,
        kappa2: f64,
        kp1: f64,
    ) -> Result<Self, PathError> {
        let all = [origin.x, origin.y, origin.psi, s0, s1, s2, kappa0, kappa1, kappa2, kp1];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(PathError::InvalidInput("path parameters must be finite".into()));
        }
        if !(s0 > 0.0 && s2 > 0.0) {
            return Err(PathError::InvalidInput(format!("s0 = {s0} and s2 = {s2} must be positive")));
        }
        if s1 < 0.0 {
            return Err(PathError::InvalidInput(format!("s1 = {s1} is negative")));
        }
        let origin = origin.normalized();
        let kp0 = (kappa1 - 0.5 * kp1 * s1 - kappa0) / s0;
        let kp2 = (kappa2 - kappa1 - 0.5 * kp1 * s1) / s2;
        let seg0 = ClothoidSegment::new(origin, kappa0, kp0, s0)?;
        let seg1 = ClothoidSegment::new(seg0.end_pose_unwrapped(), kappa1 - 0.5 * kp1 * s1, kp1, s1)?;
        let seg2 = ClothoidSegment::new(seg1.end_pose_unwrapped(), kappa2 - kp2 * s2, kp2, s2)?;
        let (mx, my) = seg1.position_at(0.5 * s1);
        let mid = Pose2D::new(mx, my, seg1.heading_at(0.5 * s1));
        Ok(ThreeClothoidPath {
            s: [s0, s1, s2],
            kappa: [kappa0, kappa1, kappa2],
            kp: [kp0, kp1, kp2],
            origin,
            mid,
            segments: [seg0, seg1, seg2],
        })
    }

    /// The same path shape placed at another start pose.
    pub fn with_origin(&self, origin: Pose2D) -> Result<Self, PathError> {
        let [s0, s1, s2] = self.s;
        let [k0, k1, k2] = self.kappa;
        ThreeClothoidPath::from_params(origin, s0, s1, s2, k0, k1, k2, self.kp[1])
    }

    pub fn s0(&self) -> f64 {
        self.s[0]
    }
    pub fn s1(&self) -> f64 {
        self.s[1]
    }
    pub fn s2(&self) -> f64 {
        self.s[2]
    }
    /// Segment lengths `[s0, s1, s2]`.
    pub fn lengths(&self) -> [f64; 3] {
        self.s
    }
    /// `[κ0, κ1, κ2]`: start curvature, curvature at the middle of segment 1, end curvature.
    pub fn curvatures(&self) -> [f64; 3] {
        self.kappa
    }
    /// `[κ′0, κ′1, κ′2]`.
    pub fn sharpnesses(&self) -> [f64; 3] {
        self.kp
    }
    pub fn kappa0(&self) -> f64 {
        self.kappa[0]
    }
    pub fn kappa1(&self) -> f64 {
        self.kappa[1]
    }
    pub fn kappa2(&self) -> f64 {
        self.kappa[2]
    }
    pub fn kp0(&self) -> f64 {
        self.kp[0]
    }
    pub fn kp1(&self) -> f64 {
        self.kp[1]
    }
    pub fn kp2(&self) -> f64 {
        self.kp[2]
    }
    pub fn origin(&self) -> Pose2D {
        self.origin
    }
    /// Pose at the middle of segment 1.
    pub fn mid(&self) -> Pose2D {
        self.mid
    }
    pub fn s_f(&self) -> f64 {
        self.s[0] + self.s[1] + self.s[2]
    }
    /// Arclengths of the two interior breakpoints.
    pub fn breakpoints(&self) -> [f64; 2] {
        [self.s[0], self.s[0] + self.s[1]]
    }
    pub fn segments(&self) -> &[ClothoidSegment; 3] {
        &self.segments
    }

    /// Segment index and local arclength for a path arclength. Breakpoints
    /// belong to the following segment; `s_f` belongs to the last one.
    pub fn locate(&self, s: f64) -> Result<(usize, f64), GeometryError> {
        let sf = self.s_f();
        if !s.is_finite() || s < -DOMAIN_SLACK || s > sf + DOMAIN_SLACK {
            return Err(GeometryError::OutOfRange { s, length: sf });
        }
        let s = s.clamp(0.0, sf);
        let [b0, b1] = self.breakpoints();
        Ok(if s < b0 {
            (0, s)
        } else if s < b1 {
            (1, s - b0)
        } else {
            (2, (s - b1).min(self.s[2]))
        })
    }

    /// Pose at path arclength `s`, heading normalized.
    pub fn pose_at(&self, s: f64) -> Result<Pose2D, GeometryError> {
        let (i, sigma) = self.locate(s)?;
        self.segments[i].pose_at(sigma)
    }

    /// Heading at `s` without wrapping to (−π, π].
    pub fn heading_unwrapped(&self, s: f64) -> Result<f64, GeometryError> {
        let (i, sigma) = self.locate(s)?;
        Ok(self.segments[i].heading_at(sigma))
    }

    /// Sharpness active at `s` (the following segment's at a breakpoint).
    pub fn sharpness_at(&self, s: f64) -> Result<f64, GeometryError> {
        let (i, _) = self.locate(s)?;
        Ok(self.kp[i])
    }

    pub fn end_pose_unwrapped(&self) -> Pose2D {
        self.segments[2].end_pose_unwrapped()
    }

    /// Unknowns of the full system, expressed in the path's own start frame.
    pub fn unknowns(&self) -> G2Unknowns {
        let local = if self.origin == Pose2D::origin() {
            self.clone()
        } else {
            self.with_origin(Pose2D::origin()).expect("parameters already validated")
        };
        let seg1 = &local.segments[1];
        let (x1, y1) = seg1.position_at(0.5 * self.s[1]);
        G2Unknowns {
            x1,
            y1,
            psi1: seg1.heading_at(0.5 * self.s[1]),
            kappa1: self.kappa[1],
            kp0: self.kp[0],
            kp1: self.kp[1],
            kp2: self.kp[2],
            s1: self.s[1],
        }
    }
}

/// Piecewise-linear curvature at path arclength `s`.
pub fn curvature_at(path: &ThreeClothoidPath, s: f64) -> Result<f64, GeometryError> {
    let (i, _) = path.locate(s)?;
    let s = s.clamp(0.0, path.s_f());
    let [s0, s1, _] = path.s;
    let [k0, k1, k2] = path.kappa;
    let [kp0, kp1, kp2] = path.kp;
    Ok(match i {
        0 => k0 + kp0 * s,
        1 => k1 + kp1 * ((s - s0) - 0.5 * s1),
        _ => k2 + kp2 * (s - path.s_f()),
    })
}

/// Left-minus-right values of the eight boundary value equations.
///
/// The heading equation closes with `κ2 s2 − κ′2 s2²/2` over the last segment.
pub fn residuals(bc: &PathBoundaryCondition, s0: f64, s2: f64, u: &G2Unknowns) -> Result<[f64; 8], PathError> {
    if !(s0 > 0.0 && s2 > 0.0 && u.s1 > 0.0) {
        return Err(PathError::InvalidInput(format!(
            "segment lengths must be positive (s0 = {s0}, s1 = {}, s2 = {s2})",
            u.s1
        )));
    }
    let h = 0.5 * u.s1;
    let (k0, k2) = (bc.kappa0, bc.kappa2);
    let psi0e = k0 * s0 + 0.5 * u.kp0 * s0 * s0;
    let (c0, sn0) = fresnel::eval(u.kp0 * s0 * s0, k0 * s0, 0.0, fresnel::DEFAULT_TOLERANCE);
    let khat1 = u.kappa1 - u.kp1 * h;
    let (ca, sa) = fresnel::eval(u.kp1 * h * h, khat1 * h, psi0e, fresnel::DEFAULT_TOLERANCE);
    let (cb, sb) = fresnel::eval(u.kp1 * h * h, u.kappa1 * h, u.psi1, fresnel::DEFAULT_TOLERANCE);
    let psi1e = u.psi1 + u.kappa1 * h + 0.5 * u.kp1 * h * h;
    let khat2 = u.kappa1 + u.kp1 * h;
    let (c2, sn2) = fresnel::eval(u.kp2 * s2 * s2, khat2 * s2, psi1e, fresnel::DEFAULT_TOLERANCE);
    Ok([
        u.x1 - (s0 * c0 + h * ca),
        u.y1 - (s0 * sn0 + h * sa),
        u.psi1 - (psi0e + khat1 * h + 0.5 * u.kp1 * h * h),
        (u.kappa1 - u.kp1 * h) - (k0 + u.kp0 * s0),
        bc.dx - (u.x1 + h * cb + s2 * c2),
        bc.dy - (u.y1 + h * sb + s2 * sn2),
        bc.dpsi - (psi1e + k2 * s2 - 0.5 * u.kp2 * s2 * s2),
        (k2 - u.kp2 * s2) - (u.kappa1 + u.kp1 * h),
    ])
}

/// Newton solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Curvature scale for the sharpness seeds, normally the curvature limit.
    pub kappa_scale: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Convergence threshold on the chord-scaled residual.
    pub tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { kappa_scale: VehicleLimits::default().kappa_max(), max_iterations: 50, max_halvings: 20, tolerance: 1e-10 }
    }
}

/// Largest quadratic or linear phase the solver explores, in radians.
const MAX_PHASE: f64 = 16.0 * std::f64::consts::PI;

/// `κ1` from the heading balance, given `(s1, κ′1)`.
fn kappa1_from(bc: &PathBoundaryCondition, s0: f64, s2: f64, s1: f64, kp1: f64) -> f64 {
    (bc.dpsi - 0.5 * bc.kappa0 * s0 - 0.5 * bc.kappa2 * s2 + 0.25 * kp1 * s1 * (s0 - s2)) / (0.5 * s0 + s1 + 0.5 * s2)
}

/// End position of the forward-chained path for the reduced unknowns.
fn reduced_endpoint(bc: &PathBoundaryCondition, s0: f64, s2: f64, s1: f64, kp1: f64) -> (f64, f64) {
    let tol = fresnel::DEFAULT_TOLERANCE;
    let k1 = kappa1_from(bc, s0, s2, s1, kp1);
    let kp0 = (k1 - 0.5 * kp1 * s1 - bc.kappa0) / s0;
    let kp2 = (bc.kappa2 - k1 - 0.5 * kp1 * s1) / s2;
    let phases = [kp0 * s0 * s0, kp1 * s1 * s1, kp2 * s2 * s2, k1 * s1];
    if phases.iter().any(|a| !(a.abs() <= MAX_PHASE)) {
        // many full turns: outside any useful solution branch
        return (f64::NAN, f64::NAN);
    }
    let (c0, sn0) = fresnel::eval(kp0 * s0 * s0, bc.kappa0 * s0, 0.0, tol);
    let psi_a = bc.kappa0 * s0 + 0.5 * kp0 * s0 * s0;
    let khat1 = k1 - 0.5 * kp1 * s1;
    let (c1, sn1) = fresnel::eval(kp1 * s1 * s1, khat1 * s1, psi_a, tol);
    let psi_b = psi_a + khat1 * s1 + 0.5 * kp1 * s1 * s1;
    let khat2 = bc.kappa2 - kp2 * s2;
    let (c2, sn2) = fresnel::eval(kp2 * s2 * s2, khat2 * s2, psi_b, tol);
    (s0 * c0 + s1 * c1 + s2 * c2, s0 * sn0 + s1 * sn1 + s2 * sn2)
}

struct Scaled<'a> {
    bc: &'a PathBoundaryCondition,
    s0: f64,
    s2: f64,
    chord: f64,
}

impl Scaled<'_> {
    /// Residual in chord units for `u = (s1/L, κ′1 L²)`.
    fn f(&self, u: [f64; 2]) -> [f64; 2] {
        let l = self.chord;
        let (x, y) = reduced_endpoint(self.bc, self.s0, self.s2, u[0] * l, u[1] / (l * l));
        [(x - self.bc.dx) / l, (y - self.bc.dy) / l]
    }

    fn jacobian(&self, u: [f64; 2]) -> [[f64; 2]; 2] {
        let mut j = [[0.0; 2]; 2];
        for k in 0..2 {
            let h = 1e-7 * u[k].abs().max(1.0);
            let mut up = u;
            let mut um = u;
            up[k] += h;
            um[k] -= h;
            let fp = self.f(up);
            let fm = self.f(um);
            for r in 0..2 {
                j[r][k] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        j
    }
}

/// Iterations over which the residual must at least halve while it is still large.
const STALL_WINDOW: usize = 8;

fn norm_inf(v: [f64; 2]) -> f64 {
    v[0].abs().max(v[1].abs())
}

/// One damped Newton run; returns the converged point or the best residual seen.
fn newton(p: &Scaled, mut u: [f64; 2], opts: &SolverOptions) -> Result<[f64; 2], f64> {
    let mut r = p.f(u);
    let mut rn = norm_inf(r);
    let mut polish = 0;
    let mut history = Vec::with_capacity(opts.max_iterations + 3);
    for _ in 0..opts.max_iterations + 3 {
        if !rn.is_finite() {
            return Err(f64::INFINITY);
        }
        history.push(rn);
        // give up on a start that has crawled for a while far from a root
        if history.len() > STALL_WINDOW && rn > 1e-3 && rn > 0.5 * history[history.len() - 1 - STALL_WINDOW] {
            break;
        }
        if rn <= opts.tolerance {
            polish += 1;
            if polish > 2 {
                break;
            }
        }
        let j = p.jacobian(u);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !det.is_finite() || det == 0.0 {
            break;
        }
        let d = [(j[1][1] * r[0] - j[0][1] * r[1]) / det, (j[0][0] * r[1] - j[1][0] * r[0]) / det];
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let cand = [u[0] - lambda * d[0], u[1] - lambda * d[1]];
            if cand[0] > 0.0 {
                let rc = p.f(cand);
                let rcn = norm_inf(rc);
                if rcn.is_finite() && rcn < rn {
                    u = cand;
                    r = rc;
                    rn = rcn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if rn <= opts.tolerance {
        Ok(u)
    } else {
        Err(rn)
    }
}

/// Solves the boundary value problem with default solver options.
pub fn solve_g2(bc: &PathBoundaryCondition, s0: f64, s2: f64) -> Result<ThreeClothoidPath, PathError> {
    solve_g2_with(bc, s0, s2, &SolverOptions::default())
}

/// Solves the boundary value problem for fixed outer lengths `s0`, `s2`.
///
/// ```
/// use cloplan::path::{solve_g2, PathBoundaryCondition};
///
/// let bc = PathBoundaryCondition::new(10.0, 0.0, 0.0, 0.0, 0.0);
/// let path = solve_g2(&bc, 2.0, 2.0).unwrap();
/// assert!((path.s1() - 6.0).abs() < 1e-9);
/// ```
pub fn solve_g2_with(
    bc: &PathBoundaryCondition,
    s0: f64,
    s2: f64,
    opts: &SolverOptions,
) -> Result<ThreeClothoidPath, PathError> {
    bc.validate()?;
    if !(s0.is_finite() && s2.is_finite() && s0 > 0.0 && s2 > 0.0) {
        return Err(PathError::InvalidInput(format!("s0 = {s0} and s2 = {s2} must be positive")));
    }
    let chord = bc.chord();
    if chord < 1e-9 {
        return Err(PathError::DegenerateChord { chord, dpsi: bc.dpsi });
    }
    let problem = Scaled { bc, s0, s2, chord };
    let ks = opts.kappa_scale / chord;
    let mut seeds = vec![((chord - s0 - s2).max(0.1 * chord), 0.0)];
    for m in [0.5, 1.0, 2.0, 4.0] {
        for kp in [0.0, ks, -ks] {
            seeds.push((m * chord, kp));
        }
    }
    let mut best = f64::INFINITY;
    for (s1, kp1) in seeds {
        match newton(&problem, [s1 / chord, kp1 * chord * chord], opts) {
            Ok(u) => {
                let s1 = u[0] * chord;
                let kp1 = u[1] / (chord * chord);
                let k1 = kappa1_from(bc, s0, s2, s1, kp1);
                return ThreeClothoidPath::from_params(Pose2D::origin(), s0, s1, s2, bc.kappa0, k1, bc.kappa2, kp1);
            }
            Err(r) => best = best.min(r),
        }
    }
    Err(PathError::NoConvergence { best_residual: best })
}

/// Curvature feasibility of a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub max_abs_curvature: f64,
    pub argmax_s: f64,
}

/// Exact maximum of `|κ|`, taken over the endpoints and breakpoints.
pub fn check_feasible(path: &ThreeClothoidPath, limits: &VehicleLimits) -> Feasibility {
    let [s0, s1, _] = path.s;
    let [k0, k1, k2] = path.kappa;
    let [kp0, kp1, kp2] = path.kp;
    let candidates = [
        (0.0, k0.abs()),
        (s0, (k0 + kp0 * s0).abs().max((k1 - 0.5 * kp1 * s1).abs())),
        (s0 + s1, (k1 + 0.5 * kp1 * s1).abs().max((k2 - kp2 * path.s[2]).abs())),
        (path.s_f(), k2.abs()),
    ];
    let (argmax_s, max_abs_curvature) =
        candidates.into_iter().fold((0.0, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
    Feasibility { feasible: max_abs_curvature <= limits.kappa_max(), max_abs_curvature, argmax_s }
}

/// One sample of a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub s: f64,
    pub pose: Pose2D,
    pub kappa: f64,
}

/// Arclength grid `0, ds, 2ds, …` merged with both breakpoints and `s_f`.
pub fn sample_grid(s_f: f64, breakpoints: &[f64], ds: f64) -> Result<Vec<f64>, GeometryError> {
    if !(ds.is_finite() && ds > 0.0) {
        return Err(GeometryError::InvalidArgument(format!("sampling step {ds} must be positive")));
    }
    const MERGE: f64 = 1e-9;
    let n = (s_f / ds).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| k as f64 * ds).filter(|&s| s <= s_f).collect();
    grid.extend(breakpoints.iter().copied().filter(|&b| b >= 0.0 && b <= s_f));
    grid.push(s_f);
    grid.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(grid.len());
    for s in grid {
        match out.last_mut() {
            Some(last) if s - *last <= MERGE => {
                // keep exact breakpoints and the end over nearby grid values
                if breakpoints.contains(&s) || s == s_f {
                    *last = s;
                }
            }
            _ => out.push(s),
        }
    }
    Ok(out)
}

/// Samples a path on [`sample_grid`].
pub fn sample_path(path: &ThreeClothoidPath, ds: f64) -> Result<Vec<PathSample>, GeometryError> {
    sample_grid(path.s_f(), &path.breakpoints(), ds)?
        .into_iter()
        .map(|s| Ok(PathSample { s, pose: path.pose_at(s)?, kappa: curvature_at(path, s)? }))
        .collect()
}

/// Heading difference wrapped into `(-π, π]`.
pub fn heading_error(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}
