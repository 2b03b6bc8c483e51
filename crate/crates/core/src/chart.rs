//! Feasibility charts in the `(Δx, Δy)` plane.
//!
//! For fixed `(Δψ, κ0, s0)` with `s2 = s0` and `κ2 = 0`, the chart separates
//! goal positions whose path respects `|κ| ≤ κ_max` from those whose path does
//! not. Boundary points come from bisection on `max|κ| − κ_max` along rays of
//! constant `Δy` and, transposed, of constant `Δx`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::path::{check_feasible, solve_g2_with, PathBoundaryCondition, PathError, SolverOptions};
use crate::vehicle::VehicleLimits;

/// Rectangular region of goal positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartWindow {
    pub dx_min: f64,
    pub dx_max: f64,
    pub dy_min: f64,
    pub dy_max: f64,
}

impl ChartWindow {
    pub fn new(dx_min: f64, dx_max: f64, dy_min: f64, dy_max: f64) -> Self {
        ChartWindow { dx_min, dx_max, dy_min, dy_max }
    }

    /// The default square window used for the charts in this crate.
    pub fn standard() -> Self {
        ChartWindow::new(-10.0, 40.0, -10.0, 40.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartSide {
    Boundary,
    FeasibleSample,
    InfeasibleSample,
}

impl ChartSide {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChartSide::Boundary => "boundary",
            ChartSide::FeasibleSample => "feasible_sample",
            ChartSide::InfeasibleSample => "infeasible_sample",
        }
    }
}

/// One chart point; `max_curvature` is absent when the solver did not converge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub dx: f64,
    pub dy: f64,
    pub side: ChartSide,
    pub max_curvature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityChart {
    pub dpsi: f64,
    pub kappa0: f64,
    pub s0: f64,
    pub window: ChartWindow,
    pub resolution: f64,
    pub kappa_max: f64,
    /// Boundary points ordered by sweep, ray and position along the ray.
    pub boundary: Vec<ChartPoint>,
    /// Grid samples of the constant-`Δy` sweep.
    pub samples: Vec<ChartPoint>,
}

impl FeasibilityChart {
    /// Writes `dx,dy,side` rows, boundary points first.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "dx,dy,side")?;
        for p in self.boundary.iter().chain(&self.samples) {
            writeln!(w, "{},{},{}", p.dx, p.dy, p.side.as_str())?;
        }
        Ok(())
    }
}

/// Accepted distance of a boundary point from the curvature limit.
pub const BOUNDARY_TOLERANCE: f64 = 1e-4;

struct Classifier<'a> {
    dpsi: f64,
    kappa0: f64,
    s0: f64,
    limits: &'a VehicleLimits,
    opts: SolverOptions,
}

impl Classifier<'_> {
    /// `max|κ| − κ_max`, or `None` when no path was found.
    fn margin(&self, dx: f64, dy: f64) -> Option<f64> {
        let bc = PathBoundaryCondition::new(dx, dy, self.dpsi, self.kappa0, 0.0);
        solve_g2_with(&bc, self.s0, self.s0, &self.opts)
            .ok()
            .map(|p| check_feasible(&p, self.limits).max_abs_curvature - self.limits.kappa_max())
    }

    /// Scans one ray `p(t) = origin + t·dir` at the given parameters.
    fn ray(&self, point: impl Fn(f64) -> (f64, f64), ts: &[f64], resolution: f64) -> (Vec<ChartPoint>, Vec<ChartPoint>) {
        let margins: Vec<Option<f64>> = ts.iter().map(|&t| {
            let (x, y) = point(t);
            self.margin(x, y)
        }).collect();
        let feasible = |m: Option<f64>| matches!(m, Some(g) if g <= 0.0);
        let mut samples = Vec::with_capacity(ts.len());
        let mut boundary = Vec::new();
        for (k, &t) in ts.iter().enumerate() {
            let (x, y) = point(t);
            let side = if feasible(margins[k]) { ChartSide::FeasibleSample } else { ChartSide::InfeasibleSample };
            samples.push(ChartPoint { dx: x, dy: y, side, max_curvature: margins[k].map(|g| g + self.limits.kappa_max()) });
            if k == 0 || feasible(margins[k - 1]) == feasible(margins[k]) {
                continue;
            }
            // bisection on the feasibility class, tracking the margin
            let (mut lo, mut hi) = (ts[k - 1], t);
            let lo_feasible = feasible(margins[k - 1]);
            let mut best: Option<(f64, f64)> = None;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let (x, y) = point(mid);
                let m = self.margin(x, y);
                if let Some(g) = m {
                    if best.map_or(true, |(_, bg)| g.abs() < bg.abs()) {
                        best = Some((mid, g));
                    }
                }
                if feasible(m) == lo_feasible {
                    lo = mid;
                } else {
                    hi = mid;
                }
                let converged = best.is_some_and(|(_, g)| g.abs() <= 1e-5);
                if (hi - lo) <= resolution / 10.0 && converged {
                    break;
                }
            }
            if let Some((tb, g)) = best {
                if g.abs() <= BOUNDARY_TOLERANCE {
                    let (x, y) = point(tb);
                    boundary.push(ChartPoint {
                        dx: x,
                        dy: y,
                        side: ChartSide::Boundary,
                        max_curvature: Some(g + self.limits.kappa_max()),
                    });
                }
            }
        }
        (boundary, samples)
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// Traces the feasibility boundary for `(Δψ, κ0, s0 = s2, κ2 = 0)`.
pub fn feasibility_boundary(
    dpsi: f64,
    kappa0: f64,
    s0: f64,
    window: ChartWindow,
    resolution: f64,
    limits: &VehicleLimits,
) -> Result<FeasibilityChart, PathError> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(PathError::InvalidInput(format!("resolution {resolution} must be positive")));
    }
    let w = window;
    let ok = [w.dx_min, w.dx_max, w.dy_min, w.dy_max].iter().all(|v| v.is_finite());
    if !ok || w.dx_min >= w.dx_max || w.dy_min >= w.dy_max {
        return Err(PathError::InvalidInput("chart window is empty".into()));
    }
    if !(s0.is_finite() && s0 > 0.0) {
        return Err(PathError::InvalidInput(format!("s0 = {s0} must be positive")));
    }
    PathBoundaryCondition::new(1.0, 0.0, dpsi, kappa0, 0.0).validate()?;
    limits.validate().map_err(PathError::InvalidInput)?;

    let cls = Classifier {
        dpsi,
        kappa0,
        s0,
        limits,
        opts: SolverOptions { kappa_scale: limits.kappa_max(), ..SolverOptions::default() },
    };
    let xs = grid(w.dx_min, w.dx_max, resolution);
    let ys = grid(w.dy_min, w.dy_max, resolution);

    let rows: Vec<(Vec<ChartPoint>, Vec<ChartPoint>)> =
        ys.par_iter().map(|&y| cls.ray(|t| (t, y), &xs, resolution)).collect();
    let cols: Vec<Vec<ChartPoint>> =
        xs.par_iter().map(|&x| cls.ray(|t| (x, t), &ys, resolution).0).collect();

    let mut boundary = Vec::new();
    let mut samples = Vec::new();
    for (b, s) in rows {
        boundary.extend(b);
        samples.extend(s);
    }
    for b in cols {
        boundary.extend(b);
    }
    Ok(FeasibilityChart {
        dpsi,
        kappa0,
        s0,
        window,
        resolution,
        kappa_max: limits.kappa_max(),
        boundary,
        samples,
    })
}
