//! Parametric solid families built directly as analytic B-reps.

use std::f64::consts::TAU;

use rand::Rng;

use crate::brep::{AnalyticSurface, Face, Placement, Shape, Solid, TrimLoop, UvDomain, Vec3};

use super::{DatasetError, Family, Role};

/// Polygon segments used for circular trim loops.
pub const CIRCLE_SEGMENTS: usize = 128;

/// Sampling ranges shared by all families. Lengths are in pre-normalization
/// model units; `feature` ranges are fractions of the host dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec {
    pub family: Family,
    pub dim_range: (f64, f64),
    pub feature_range: (f64, f64),
}

impl FamilySpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            dim_range: (0.5, 2.0),
            feature_range: (0.2, 0.9),
        }
    }
}

/// Concrete dimensions of one solid; unused fields are ignored by a family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    /// Box extents along x, y, z (cylinders use `size.x` as diameter and
    /// `size.z` as height).
    pub size: Vec3,
    /// Relative feature width (hole/slot/step/bore).
    pub feature: f64,
    /// Relative feature depth (slot, step).
    pub depth: f64,
    /// Feature center offset as a fraction of the admissible travel, in [-1, 1].
    pub offset: [f64; 2],
}

impl Params {
    pub fn sample<R: Rng + ?Sized>(spec: &FamilySpec, rng: &mut R) -> Self {
        let (lo, hi) = spec.dim_range;
        let (flo, fhi) = spec.feature_range;
        let size = Vec3::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi), rng.gen_range(lo..hi));
        Self {
            size,
            feature: rng.gen_range(flo..fhi),
            depth: rng.gen_range(flo..fhi),
            offset: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
        }
    }
}

/// Minimum material left around any feature, as a fraction of the host size.
const MARGIN: f64 = 0.08;

struct Builder {
    faces: Vec<Face>,
    edges: Vec<(usize, usize)>,
}

impl Builder {
    fn new() -> Self {
        Self {
            faces: Vec::new(),
            edges: Vec::new(),
        }
    }

    fn push(&mut self, mut face: Face, role: Role) -> usize {
        let id = self.faces.len();
        face.id = id;
        face.label = Some(role as i64);
        self.faces.push(face);
        id
    }

    fn connect(&mut self, a: usize, b: usize) {
        self.edges.push((a.min(b), a.max(b)));
    }

    fn finish(mut self, family: Family) -> Result<Solid, DatasetError> {
        self.edges.sort_unstable();
        let solid = Solid {
            faces: self.faces,
            edges: self.edges,
            name: family.name().to_string(),
            class_label: Some(family as i64),
        };
        solid
            .validate()
            .map_err(|e| DatasetError::InvalidParams(e.to_string()))?;
        Ok(solid)
    }
}

/// Planar face whose outer boundary is the polygon `outer` (3D points on the
/// plane), with circular holes `(center, radius)`. The outward normal is `n`
/// and the parameter `u` axis is `x`.
fn plane_face(n: Vec3, x: Vec3, outer: &[Vec3], holes: &[(Vec3, f64)]) -> Face {
    let y = n.cross(&x);
    let p0 = outer[0];
    let raw: Vec<[f64; 2]> = outer.iter().map(|p| [(p - p0).dot(&x), (p - p0).dot(&y)]).collect();
    let (lo, hi) = bounds(&raw);
    let (cu, cv) = (0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]));
    let origin = p0 + x * cu + y * cv;
    let to_uv = |p: &Vec3| [(p - origin).dot(&x), (p - origin).dot(&y)];
    let mut loops = vec![TrimLoop::new(outer.iter().map(to_uv).collect(), true)];
    for (c, r) in holes {
        loops.push(TrimLoop::circle(to_uv(c), *r, CIRCLE_SEGMENTS, false));
    }
    planar(origin, n, x, loops)
}

/// Planar disk (optionally annular) centered at `c`.
fn disk_face(c: Vec3, n: Vec3, x: Vec3, radius: f64, bore: Option<f64>) -> Face {
    let mut loops = vec![TrimLoop::circle([0.0, 0.0], radius, CIRCLE_SEGMENTS, true)];
    if let Some(r) = bore {
        loops.push(TrimLoop::circle([0.0, 0.0], r, CIRCLE_SEGMENTS, false));
    }
    planar(c, n, x, loops)
}

fn planar(origin: Vec3, n: Vec3, x: Vec3, loops: Vec<TrimLoop>) -> Face {
    let (lo, hi) = bounds(&loops[0].points);
    let placement = Placement::from_axis_ref(origin, n, x).expect("orthogonal axes");
    let surface = AnalyticSurface::new(Shape::Plane, placement, UvDomain::new(lo[0], hi[0], lo[1], hi[1]));
    Face {
        id: 0,
        surface,
        loops,
        same_sense: true,
        label: None,
    }
}

/// Full cylindrical band around `axis` through `base`, `height` long.
/// `convex == false` orients the normal towards the axis (a bore wall).
fn cylinder_face(base: Vec3, axis: Vec3, x: Vec3, radius: f64, height: f64, convex: bool) -> Face {
    let placement = Placement::from_axis_ref(base, axis, x).expect("orthogonal axes");
    let surface = AnalyticSurface::new(
        Shape::Cylinder { radius },
        placement,
        UvDomain::new(0.0, TAU, 0.0, height),
    );
    Face::untrimmed(0, surface, convex)
}

fn bounds(pts: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    pts.iter().fold(
        ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
        |(lo, hi), p| ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])]),
    )
}

fn invalid(msg: impl Into<String>) -> DatasetError {
    DatasetError::InvalidParams(msg.into())
}

/// Corner of the box `[-a/2, a/2] × [-b/2, b/2] × [-c/2, c/2]`.
fn corner(size: &Vec3, sx: f64, sy: f64, sz: f64) -> Vec3 {
    Vec3::new(sx * size.x / 2.0, sy * size.y / 2.0, sz * size.z / 2.0)
}

/// The six faces of a box with optional circular holes through ±z.
/// Returns face ids in the order +z, -z, +x, -x, +y, -y.
fn box_faces(b: &mut Builder, s: &Vec3, hole: Option<(f64, f64, f64)>) -> [usize; 6] {
    let (x, y, z) = (Vec3::x(), Vec3::y(), Vec3::z());
    let quad = |n: Vec3, signs: [[f64; 3]; 4]| -> Vec<Vec3> {
        let _ = n;
        signs.iter().map(|c| corner(s, c[0], c[1], c[2])).collect()
    };
    let holes = |zc: f64| -> Vec<(Vec3, f64)> {
        hole.map(|(hx, hy, r)| vec![(Vec3::new(hx, hy, zc), r)]).unwrap_or_default()
    };
    let top = b.push(
        plane_face(z, x, &quad(z, [[-1., -1., 1.], [1., -1., 1.], [1., 1., 1.], [-1., 1., 1.]]), &holes(s.z / 2.0)),
        Role::Stock,
    );
    let bottom = b.push(
        plane_face(-z, x, &quad(-z, [[-1., -1., -1.], [1., -1., -1.], [1., 1., -1.], [-1., 1., -1.]]), &holes(-s.z / 2.0)),
        Role::Stock,
    );
    let px = b.push(
        plane_face(x, y, &quad(x, [[1., -1., -1.], [1., 1., -1.], [1., 1., 1.], [1., -1., 1.]]), &[]),
        Role::Stock,
    );
    let nx = b.push(
        plane_face(-x, y, &quad(-x, [[-1., -1., -1.], [-1., 1., -1.], [-1., 1., 1.], [-1., -1., 1.]]), &[]),
        Role::Stock,
    );
    let py = b.push(
        plane_face(y, z, &quad(y, [[-1., 1., -1.], [1., 1., -1.], [1., 1., 1.], [-1., 1., 1.]]), &[]),
        Role::Stock,
    );
    let ny = b.push(
        plane_face(-y, z, &quad(-y, [[-1., -1., -1.], [1., -1., -1.], [1., -1., 1.], [-1., -1., 1.]]), &[]),
        Role::Stock,
    );
    for (a, c) in [
        (top, px),
        (top, nx),
        (top, py),
        (top, ny),
        (bottom, px),
        (bottom, nx),
        (bottom, py),
        (bottom, ny),
        (px, py),
        (px, ny),
        (nx, py),
        (nx, ny),
    ] {
        b.connect(a, c);
    }
    [top, bottom, px, nx, py, ny]
}

fn make_box(p: &Params) -> Result<Solid, DatasetError> {
    let mut b = Builder::new();
    box_faces(&mut b, &p.size, None);
    b.finish(Family::Box)
}

fn make_box_through_hole(p: &Params) -> Result<Solid, DatasetError> {
    let s = p.size;
    let half = 0.5 * s.x.min(s.y);
    let r = p.feature * half;
    let margin = MARGIN * s.x.min(s.y);
    if r + margin >= half {
        return Err(invalid(format!("hole radius {r:.4} leaves no wall in half-width {half:.4}")));
    }
    let hx = p.offset[0] * (s.x / 2.0 - r - margin);
    let hy = p.offset[1] * (s.y / 2.0 - r - margin);
    let mut b = Builder::new();
    let [top, bottom, ..] = box_faces(&mut b, &s, Some((hx, hy, r)));
    let wall = b.push(
        cylinder_face(Vec3::new(hx, hy, -s.z / 2.0), Vec3::z(), Vec3::x(), r, s.z, false),
        Role::HoleWall,
    );
    b.connect(top, wall);
    b.connect(bottom, wall);
    b.finish(Family::BoxThroughHole)
}

fn make_box_slot(p: &Params) -> Result<Solid, DatasetError> {
    let s = p.size;
    let (hx, hy, hz) = (s.x / 2.0, s.y / 2.0, s.z / 2.0);
    let w = p.feature * s.y;
    let d = p.depth * s.z;
    let margin = MARGIN * s.y;
    if w + 2.0 * margin >= s.y {
        return Err(invalid(format!("slot width {w:.4} leaves no stock in {:.4}", s.y)));
    }
    if d + MARGIN * s.z >= s.z {
        return Err(invalid(format!("slot depth {d:.4} cuts through height {:.4}", s.z)));
    }
    let travel = hy - w / 2.0 - margin;
    let yc = p.offset[0] * travel;
    let (y0, y1) = (yc - w / 2.0, yc + w / 2.0);
    let zb = hz - d;
    let (x, y, z) = (Vec3::x(), Vec3::y(), Vec3::z());
    let v = Vec3::new;
    let mut b = Builder::new();
    let bottom = b.push(
        plane_face(-z, x, &[v(-hx, -hy, -hz), v(hx, -hy, -hz), v(hx, hy, -hz), v(-hx, hy, -hz)], &[]),
        Role::Stock,
    );
    let top_lo = b.push(
        plane_face(z, x, &[v(-hx, -hy, hz), v(hx, -hy, hz), v(hx, y0, hz), v(-hx, y0, hz)], &[]),
        Role::Stock,
    );
    let top_hi = b.push(
        plane_face(z, x, &[v(-hx, y1, hz), v(hx, y1, hz), v(hx, hy, hz), v(-hx, hy, hz)], &[]),
        Role::Stock,
    );
    let slot_bottom = b.push(
        plane_face(z, x, &[v(-hx, y0, zb), v(hx, y0, zb), v(hx, y1, zb), v(-hx, y1, zb)], &[]),
        Role::SlotBottom,
    );
    let wall_lo = b.push(
        plane_face(y, x, &[v(-hx, y0, zb), v(hx, y0, zb), v(hx, y0, hz), v(-hx, y0, hz)], &[]),
        Role::SlotWall,
    );
    let wall_hi = b.push(
        plane_face(-y, x, &[v(-hx, y1, zb), v(hx, y1, zb), v(hx, y1, hz), v(-hx, y1, hz)], &[]),
        Role::SlotWall,
    );
    let profile = |xs: f64| {
        vec![
            v(xs, -hy, -hz),
            v(xs, hy, -hz),
            v(xs, hy, hz),
            v(xs, y1, hz),
            v(xs, y1, zb),
            v(xs, y0, zb),
            v(xs, y0, hz),
            v(xs, -hy, hz),
        ]
    };
    let front = b.push(plane_face(-x, y, &profile(-hx), &[]), Role::Stock);
    let back = b.push(plane_face(x, y, &profile(hx), &[]), Role::Stock);
    let side_lo = b.push(
        plane_face(-y, x, &[v(-hx, -hy, -hz), v(hx, -hy, -hz), v(hx, -hy, hz), v(-hx, -hy, hz)], &[]),
        Role::Stock,
    );
    let side_hi = b.push(
        plane_face(y, x, &[v(-hx, hy, -hz), v(hx, hy, -hz), v(hx, hy, hz), v(-hx, hy, hz)], &[]),
        Role::Stock,
    );
    for end in [front, back] {
        for f in [bottom, top_lo, top_hi, slot_bottom, wall_lo, wall_hi, side_lo, side_hi] {
            b.connect(end, f);
        }
    }
    for (a, c) in [
        (bottom, side_lo),
        (bottom, side_hi),
        (top_lo, side_lo),
        (top_lo, wall_lo),
        (top_hi, side_hi),
        (top_hi, wall_hi),
        (slot_bottom, wall_lo),
        (slot_bottom, wall_hi),
    ] {
        b.connect(a, c);
    }
    b.finish(Family::BoxSlot)
}

fn make_cylinder_capped(p: &Params) -> Result<Solid, DatasetError> {
    let r = p.size.x / 2.0;
    let h = p.size.z;
    let z = Vec3::z();
    let mut b = Builder::new();
    let side = b.push(cylinder_face(-z * (h / 2.0), z, Vec3::x(), r, h, true), Role::Stock);
    let bottom = b.push(disk_face(-z * (h / 2.0), -z, Vec3::x(), r, None), Role::Stock);
    let top = b.push(disk_face(z * (h / 2.0), z, Vec3::x(), r, None), Role::Stock);
    b.connect(side, bottom);
    b.connect(side, top);
    b.finish(Family::CylinderCapped)
}

fn make_l_bracket(p: &Params) -> Result<Solid, DatasetError> {
    let s = p.size;
    let (hx, hy, hz) = (s.x / 2.0, s.y / 2.0, s.z / 2.0);
    // the step removes y > ys, z > zs along the full x extent
    let w = p.feature * s.y;
    let d = p.depth * s.z;
    if w + MARGIN * s.y >= s.y || d + MARGIN * s.z >= s.z {
        return Err(invalid(format!("step {w:.4} x {d:.4} consumes the bracket")));
    }
    let ys = hy - w;
    let zs = hz - d;
    let (x, y, z) = (Vec3::x(), Vec3::y(), Vec3::z());
    let v = Vec3::new;
    let mut b = Builder::new();
    let bottom = b.push(
        plane_face(-z, x, &[v(-hx, -hy, -hz), v(hx, -hy, -hz), v(hx, hy, -hz), v(-hx, hy, -hz)], &[]),
        Role::Stock,
    );
    let back_wall = b.push(
        plane_face(-y, x, &[v(-hx, -hy, -hz), v(hx, -hy, -hz), v(hx, -hy, hz), v(-hx, -hy, hz)], &[]),
        Role::Stock,
    );
    let low_wall = b.push(
        plane_face(y, x, &[v(-hx, hy, -hz), v(hx, hy, -hz), v(hx, hy, zs), v(-hx, hy, zs)], &[]),
        Role::Stock,
    );
    let top = b.push(
        plane_face(z, x, &[v(-hx, -hy, hz), v(hx, -hy, hz), v(hx, ys, hz), v(-hx, ys, hz)], &[]),
        Role::Stock,
    );
    let step_bottom = b.push(
        plane_face(z, x, &[v(-hx, ys, zs), v(hx, ys, zs), v(hx, hy, zs), v(-hx, hy, zs)], &[]),
        Role::StepBottom,
    );
    let step_wall = b.push(
        plane_face(y, x, &[v(-hx, ys, zs), v(hx, ys, zs), v(hx, ys, hz), v(-hx, ys, hz)], &[]),
        Role::StepWall,
    );
    let profile = |xs: f64| {
        vec![
            v(xs, -hy, -hz),
            v(xs, hy, -hz),
            v(xs, hy, zs),
            v(xs, ys, zs),
            v(xs, ys, hz),
            v(xs, -hy, hz),
        ]
    };
    let front = b.push(plane_face(-x, y, &profile(-hx), &[]), Role::Stock);
    let back = b.push(plane_face(x, y, &profile(hx), &[]), Role::Stock);
    for end in [front, back] {
        for f in [bottom, back_wall, low_wall, top, step_bottom, step_wall] {
            b.connect(end, f);
        }
    }
    for (a, c) in [
        (bottom, back_wall),
        (bottom, low_wall),
        (back_wall, top),
        (low_wall, step_bottom),
        (top, step_wall),
        (step_bottom, step_wall),
    ] {
        b.connect(a, c);
    }
    b.finish(Family::LBracket)
}

fn make_washer(p: &Params) -> Result<Solid, DatasetError> {
    let outer = p.size.x / 2.0;
    let inner = p.feature * outer;
    let h = p.size.z;
    if inner + MARGIN * outer >= outer {
        return Err(invalid(format!("bore {inner:.4} leaves no ring in radius {outer:.4}")));
    }
    let z = Vec3::z();
    let base = -z * (h / 2.0);
    let mut b = Builder::new();
    let outer_wall = b.push(cylinder_face(base, z, Vec3::x(), outer, h, true), Role::Stock);
    let inner_wall = b.push(cylinder_face(base, z, Vec3::x(), inner, h, false), Role::HoleWall);
    let bottom = b.push(disk_face(base, -z, Vec3::x(), outer, Some(inner)), Role::Stock);
    let top = b.push(disk_face(-base, z, Vec3::x(), outer, Some(inner)), Role::Stock);
    for cap in [bottom, top] {
        b.connect(outer_wall, cap);
        b.connect(inner_wall, cap);
    }
    b.finish(Family::Washer)
}

/// Builds one solid (un-normalized) from explicit parameters.
pub fn build_family(family: Family, p: &Params) -> Result<Solid, DatasetError> {
    if p.size.iter().any(|d| !(*d > 0.0)) {
        return Err(invalid(format!("non-positive size {:?}", p.size)));
    }
    match family {
        Family::Box => make_box(p),
        Family::BoxThroughHole => make_box_through_hole(p),
        Family::BoxSlot => make_box_slot(p),
        Family::CylinderCapped => make_cylinder_capped(p),
        Family::LBracket => make_l_bracket(p),
        Family::Washer => make_washer(p),
    }
}
