//! Trim loops: closed polylines in a face's parameter domain.

/// Points within this distance of a loop edge count as inside.
pub const TRIM_EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TrimLoop {
    /// Closed polyline (`points[0] == points[last]`).
    pub points: Vec<[f64; 2]>,
    /// `true` for the outer boundary, `false` for holes.
    pub outer: bool,
}

impl TrimLoop {
    /// Closes `points` if needed.
    pub fn new(mut points: Vec<[f64; 2]>, outer: bool) -> Self {
        if let (Some(first), Some(last)) = (points.first().copied(), points.last().copied()) {
            if first != last {
                points.push(first);
            }
        }
        Self { points, outer }
    }

    /// Axis-aligned rectangle loop (counter-clockwise).
    pub fn rectangle(u0: f64, u1: f64, v0: f64, v1: f64, outer: bool) -> Self {
        Self::new(vec![[u0, v0], [u1, v0], [u1, v1], [u0, v1]], outer)
    }

    /// Polygonal approximation of a circle with `segments` edges.
    pub fn circle(center: [f64; 2], radius: f64, segments: usize, outer: bool) -> Self {
        let pts = (0..segments)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / segments as f64;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            })
            .collect();
        Self::new(pts, outer)
    }

    pub fn is_closed(&self) -> bool {
        self.points.len() >= 2 && self.points.first() == self.points.last()
    }

    /// Number of distinct vertices (the closing repeat excluded).
    pub fn distinct_vertices(&self) -> usize {
        let mut pts: Vec<[u64; 2]> = self.points[..self.points.len().saturating_sub(1)]
            .iter()
            .map(|p| [p[0].to_bits(), p[1].to_bits()])
            .collect();
        pts.sort_unstable();
        pts.dedup();
        pts.len()
    }

    pub fn segments(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    /// Number of edges crossed by the ray `(u, v) + t·(1, 0)`, `t > 0`.
    pub fn crossings(&self, u: f64, v: f64) -> usize {
        self.segments()
            .filter(|(a, b)| {
                if (a[1] > v) != (b[1] > v) {
                    let x = a[0] + (v - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                    x > u
                } else {
                    false
                }
            })
            .count()
    }

    /// Distance from `(u, v)` to the polyline.
    pub fn distance(&self, u: f64, v: f64) -> f64 {
        self.segments()
            .map(|(a, b)| segment_distance([u, v], a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn map_points(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        Self {
            points: self.points.iter().map(|&p| f(p)).collect(),
            outer: self.outer,
        }
    }

    /// Shoelace area (positive for counter-clockwise loops).
    pub fn signed_area(&self) -> f64 {
        0.5 * self
            .segments()
            .map(|(a, b)| a[0] * b[1] - b[0] * a[1])
            .sum::<f64>()
    }
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    (cx * cx + cy * cy).sqrt()
}

/// Even-odd membership over a set of loops; points on (within
/// [`TRIM_EDGE_TOL`] of) any loop edge are inside.
pub fn inside_loops(loops: &[TrimLoop], u: f64, v: f64) -> bool {
    if loops.is_empty() {
        return true;
    }
    loops.iter().map(|l| l.crossings(u, v)).sum::<usize>() % 2 == 1
        || loops.iter().any(|l| l.distance(u, v) <= TRIM_EDGE_TOL)
}
