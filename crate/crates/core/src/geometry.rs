//! Planar polyline and polygon utilities.

pub type Point = [f64; 2];

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Parameters `(t, u)` at which segments `p0p1` and `q0q1` cross, endpoints
/// included. Parallel segments never cross.
pub fn segment_intersection(p0: Point, p1: Point, q0: Point, q1: Point) -> Option<(f64, f64)> {
    let r = sub(p1, p0);
    let s = sub(q1, q0);
    let den = cross(r, s);
    if den == 0.0 {
        return None;
    }
    let qp = sub(q0, p0);
    let t = cross(qp, s) / den;
    let u = cross(qp, r) / den;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some((t, u))
}

/// Distance from `p` to segment `ab` and the foot parameter.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> (f64, f64) {
    let ab = sub(b, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 { 0.0 } else { ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2 };
    let t = t.clamp(0.0, 1.0);
    (dist(p, lerp(a, b, t)), t)
}

/// Shoelace area, positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    (0..n).map(|i| cross(ring[i], ring[(i + 1) % n])).sum::<f64>() / 2.0
}

/// Uniform bucket grid over a set of segments.
#[derive(Debug, Clone)]
pub struct SegmentGrid {
    min: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
    segs: Vec<(Point, Point)>,
}

impl SegmentGrid {
    pub fn new(segs: Vec<(Point, Point)>) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        let mut total = 0.0;
        for (a, b) in &segs {
            for p in [a, b] {
                for k in 0..2 {
                    min[k] = min[k].min(p[k]);
                    max[k] = max[k].max(p[k]);
                }
            }
            total += dist(*a, *b);
        }
        if segs.is_empty() {
            min = [0.0; 2];
            max = [1.0; 2];
        }
        let ext = (max[0] - min[0]).max(max[1] - min[1]).max(1e-9);
        let n = segs.len().max(1) as f64;
        // a few segments per cell, never more than ~4n cells
        let mean = total / n;
        let cell = (3.0 * mean).max(ext / (4.0 * n).sqrt()).max(1e-9);
        let nx = ((max[0] - min[0]) / cell).floor() as usize + 1;
        let ny = ((max[1] - min[1]) / cell).floor() as usize + 1;
        let mut grid = SegmentGrid { min, cell, nx, ny, cells: vec![Vec::new(); nx * ny], segs: Vec::new() };
        for (k, (a, b)) in segs.iter().enumerate() {
            let (i0, j0) = grid.cell_of([a[0].min(b[0]), a[1].min(b[1])]);
            let (i1, j1) = grid.cell_of([a[0].max(b[0]), a[1].max(b[1])]);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid.cells[j * nx + i].push(k as u32);
                }
            }
        }
        grid.segs = segs;
        grid
    }

    pub fn segments(&self) -> &[(Point, Point)] {
        &self.segs
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let clamp = |v: f64, n: usize| (v.max(0.0) as usize).min(n - 1);
        (clamp((p[0] - self.min[0]) / self.cell, self.nx), clamp((p[1] - self.min[1]) / self.cell, self.ny))
    }

    /// Indices of segments whose cells overlap the box, each reported once.
    pub fn query(&self, lo: Point, hi: Point, out: &mut Vec<usize>) {
        out.clear();
        if hi[0] < self.min[0] || hi[1] < self.min[1] {
            return;
        }
        let top = [self.min[0] + self.cell * self.nx as f64, self.min[1] + self.cell * self.ny as f64];
        if lo[0] > top[0] || lo[1] > top[1] {
            return;
        }
        let (i0, j0) = self.cell_of(lo);
        let (i1, j1) = self.cell_of(hi);
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend(self.cells[j * self.nx + i].iter().map(|&k| k as usize));
            }
        }
        out.sort_unstable();
        out.dedup();
    }

    /// Crossings of segment `ab` with the stored segments as `(index, t on ab, u on stored)`.
    pub fn crossings(&self, a: Point, b: Point, buf: &mut Vec<usize>) -> Vec<(usize, f64, f64)> {
        self.query([a[0].min(b[0]), a[1].min(b[1])], [a[0].max(b[0]), a[1].max(b[1])], buf);
        buf.iter()
            .filter_map(|&k| {
                let (q0, q1) = self.segs[k];
                segment_intersection(a, b, q0, q1).map(|(t, u)| (k, t, u))
            })
            .collect()
    }

    /// Distance from `p` to the nearest stored segment.
    pub fn distance(&self, p: Point) -> f64 {
        self.nearest(p).map_or(f64::INFINITY, |n| n.1)
    }

    /// Nearest stored segment as `(index, distance, foot parameter)`.
    pub fn nearest(&self, p: Point) -> Option<(usize, f64, f64)> {
        let (ci, cj) = self.cell_of(p);
        let mut best = f64::INFINITY;
        let mut arg: Option<(usize, f64, f64)> = None;
        let rmax = self.nx.max(self.ny);
        for r in 0..=rmax {
            // every cell at ring r is at least (r - 1)·cell away
            if r >= 1 && (r - 1) as f64 * self.cell > best {
                break;
            }
            let (i0, i1) = (ci.saturating_sub(r), (ci + r).min(self.nx - 1));
            let (j0, j1) = (cj.saturating_sub(r), (cj + r).min(self.ny - 1));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let on_ring = i + r == ci || i == ci + r || j + r == cj || j == cj + r;
                    if !on_ring {
                        continue;
                    }
                    for &k in &self.cells[j * self.nx + i] {
                        let (a, b) = self.segs[k as usize];
                        let (d, t) = point_segment_distance(p, a, b);
                        if d < best {
                            best = d;
                            arg = Some((k as usize, d, t));
                        }
                    }
                }
            }
        }
        arg
    }
}

/// A closed ring with a bucket grid for inclusion and distance queries.
#[derive(Debug, Clone)]
pub struct PolygonIndex {
    ring: Vec<Point>,
    grid: SegmentGrid,
}

impl PolygonIndex {
    pub fn new(ring: Vec<Point>) -> Self {
        let n = ring.len();
        let segs = (0..n).map(|i| (ring[i], ring[(i + 1) % n])).collect();
        PolygonIndex { grid: SegmentGrid::new(segs), ring }
    }

    pub fn ring(&self) -> &[Point] {
        &self.ring
    }

    pub fn grid(&self) -> &SegmentGrid {
        &self.grid
    }

    /// Even-odd inclusion by a ray towards `+x`, counted cell by cell.
    pub fn contains(&self, p: Point) -> bool {
        let g = &self.grid;
        if p[1] < g.min[1] || p[1] > g.min[1] + g.cell * g.ny as f64 {
            return false;
        }
        let (ci, cj) = g.cell_of(p);
        let mut inside = false;
        for i in ci..g.nx {
            let x_lo = g.min[0] + g.cell * i as f64;
            let x_hi = if i + 1 == g.nx { f64::INFINITY } else { x_lo + g.cell };
            let x_lo = if i == 0 { f64::NEG_INFINITY } else { x_lo };
            for &k in &g.cells[cj * g.nx + i] {
                let (a, b) = g.segs[k as usize];
                if (a[1] > p[1]) == (b[1] > p[1]) {
                    continue;
                }
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                // count each crossing in the cell that holds it
                if x > p[0] && x >= x_lo && x < x_hi {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance outside the ring; zero for points inside.
    pub fn outside_distance(&self, p: Point) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            self.grid.distance(p)
        }
    }
}
