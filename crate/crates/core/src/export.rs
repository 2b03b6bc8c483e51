//! CSV and SVG output for trajectories, charts, conflicts and swept boundaries.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so equal
//! inputs give byte-identical files and values parse back exactly.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::chart::{ChartSide, FeasibilityChart};
use crate::codec::TrajectorySample;
use crate::collision::ConflictReport;
use crate::geometry::Point;
use crate::swept::SweptBoundary;

pub const TRAJECTORY_HEADER: &str = "s,x,y,psi,kappa,v,a,t";

pub fn write_trajectory_csv<W: Write>(samples: &[TrajectorySample], mut w: W) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for p in samples {
        writeln!(w, "{},{},{},{},{},{},{},{}", p.s, p.x, p.y, p.psi, p.kappa, p.v, p.a, p.t)?;
    }
    Ok(())
}

/// Parses rows written by [`write_trajectory_csv`].
pub fn read_trajectory_csv(text: &str) -> Result<Vec<TrajectorySample>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == TRAJECTORY_HEADER => {}
        other => return Err(format!("expected header `{TRAJECTORY_HEADER}`, got {other:?}")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| format!("row {}: {e}", k + 2))?;
            if v.len() != 8 {
                return Err(format!("row {}: expected 8 columns, got {}", k + 2, v.len()));
            }
            Ok(TrajectorySample { s: v[0], x: v[1], y: v[2], psi: v[3], kappa: v[4], v: v[5], a: v[6], t: v[7] })
        })
        .collect()
}

/// Polygon vertices of a swept boundary as `x,y` rows.
pub fn write_boundary_csv<W: Write>(b: &SweptBoundary, mut w: W) -> io::Result<()> {
    writeln!(w, "x,y")?;
    for p in &b.polygon {
        writeln!(w, "{},{}", p[0], p[1])?;
    }
    Ok(())
}

/// A small SVG canvas in world coordinates, `y` pointing up.
#[derive(Debug, Clone)]
pub struct Svg {
    lo: Point,
    hi: Point,
    body: String,
}

impl Default for Svg {
    fn default() -> Self {
        Svg::new()
    }
}

impl Svg {
    pub fn new() -> Self {
        Svg { lo: [f64::INFINITY; 2], hi: [f64::NEG_INFINITY; 2], body: String::new() }
    }

    fn extend(&mut self, p: Point) {
        for k in 0..2 {
            self.lo[k] = self.lo[k].min(p[k]);
            self.hi[k] = self.hi[k].max(p[k]);
        }
    }

    fn points(pts: &[Point]) -> String {
        let mut s = String::new();
        for p in pts {
            let _ = write!(s, "{:.4},{:.4} ", p[0], -p[1]);
        }
        s.trim_end().to_string()
    }

    pub fn polyline(&mut self, pts: &[Point], stroke: &str, width: f64) -> &mut Self {
        pts.iter().for_each(|p| self.extend(*p));
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
            Svg::points(pts)
        );
        self
    }

    pub fn polygon(&mut self, pts: &[Point], fill: &str, stroke: &str, width: f64) -> &mut Self {
        pts.iter().for_each(|p| self.extend(*p));
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" fill="{fill}" fill-opacity="0.35" stroke="{stroke}" stroke-width="{width}"/>"#,
            Svg::points(pts)
        );
        self
    }

    pub fn circle(&mut self, c: Point, r: f64, fill: &str) -> &mut Self {
        self.extend([c[0] - r, c[1] - r]);
        self.extend([c[0] + r, c[1] + r]);
        let _ = writeln!(self.body, r#"<circle cx="{:.4}" cy="{:.4}" r="{r}" fill="{fill}"/>"#, c[0], -c[1]);
        self
    }

    pub fn render(&self) -> String {
        let (lo, hi) = if self.lo[0].is_finite() { (self.lo, self.hi) } else { ([0.0; 2], [1.0; 2]) };
        let pad = 0.05 * (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
        let (x, y) = (lo[0] - pad, -hi[1] - pad);
        let (w, h) = (hi[0] - lo[0] + 2.0 * pad, hi[1] - lo[1] + 2.0 * pad);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{x:.4} {y:.4} {w:.4} {h:.4}\" width=\"800\" height=\"{:.0}\">\n{}</svg>\n",
            800.0 * h / w,
            self.body
        )
    }
}

fn xy(samples: &[TrajectorySample]) -> Vec<Point> {
    samples.iter().map(|p| [p.x, p.y]).collect()
}

pub fn trajectory_svg(samples: &[TrajectorySample]) -> String {
    let mut svg = Svg::new();
    svg.polyline(&xy(samples), "#1f5fbf", 0.15);
    if let (Some(a), Some(b)) = (samples.first(), samples.last()) {
        svg.circle([a.x, a.y], 0.3, "#2a9d3a").circle([b.x, b.y], 0.3, "#c0392b");
    }
    svg.render()
}

pub fn chart_svg(chart: &FeasibilityChart) -> String {
    let mut svg = Svg::new();
    let w = chart.window;
    svg.polyline(&[[w.dx_min, w.dy_min], [w.dx_max, w.dy_min], [w.dx_max, w.dy_max], [w.dx_min, w.dy_max], [w.dx_min, w.dy_min]], "#888", 0.05);
    let r = 0.3 * chart.resolution;
    for p in &chart.samples {
        if p.side == ChartSide::FeasibleSample {
            svg.circle([p.dx, p.dy], r, "#7fd17f");
        }
    }
    for p in &chart.boundary {
        svg.circle([p.dx, p.dy], r, "#222");
    }
    svg.render()
}

/// Both paths with their crossings; conflicting crossings in red.
pub fn conflict_svg(a: &[TrajectorySample], b: &[TrajectorySample], report: &ConflictReport) -> String {
    let mut svg = Svg::new();
    svg.polyline(&xy(a), "#2a9d3a", 0.15).polyline(&xy(b), "#1f5fbf", 0.15);
    for c in &report.intersections {
        let color = match c.verdict {
            crate::collision::Verdict::Conflict => "#c0392b",
            crate::collision::Verdict::Marginal => "#e67e22",
            _ => "#555",
        };
        svg.circle(c.point, 0.4, color);
    }
    svg.render()
}

pub fn swept_svg(boundary: &SweptBoundary, samples: &[TrajectorySample]) -> String {
    let mut svg = Svg::new();
    svg.polygon(&boundary.polygon, "#9ecae1", "#08519c", 0.05).polyline(&xy(samples), "#222", 0.08);
    svg.render()
}
