//! Boundary-representation substrate: analytic faces, solids and the rigid
//! and similarity transforms applied to them.

mod rotation;
mod surface;
mod trim;

use std::collections::HashSet;

use thiserror::Error;

pub use rotation::{random_rotation, Rotation};
pub use surface::{
    AnalyticSurface, Placement, Shape, SurfaceKind, SurfaceSample, UvDomain, DEGENERATE_EPS,
};
pub use trim::{inside_loops, TrimLoop, TRIM_EDGE_TOL};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Lattice resolution used for descriptors and for the normalization box.
pub const GRID_RES: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate tangent plane at (u, v) = ({u}, {v})")]
    DegenerateTangent { u: f64, v: f64 },
    #[error("degenerate bounding box (diagonal {0:e})")]
    DegenerateBBox(f64),
    #[error("invalid solid: {0}")]
    InvalidSolid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub id: usize,
    pub surface: AnalyticSurface,
    /// Exactly one loop has `outer == true`.
    pub loops: Vec<TrimLoop>,
    /// `false` flips the parameterization normal to obtain the outward one.
    pub same_sense: bool,
    pub label: Option<i64>,
}

impl Face {
    /// Untrimmed face whose outer loop is the boundary of its domain.
    pub fn untrimmed(id: usize, surface: AnalyticSurface, same_sense: bool) -> Self {
        let d = surface.domain;
        Self {
            id,
            surface,
            loops: vec![TrimLoop::rectangle(d.u_min, d.u_max, d.v_min, d.v_max, true)],
            same_sense,
            label: None,
        }
    }

    pub fn with_label(mut self, label: i64) -> Self {
        self.label = Some(label);
        self
    }

    pub fn kind(&self) -> SurfaceKind {
        self.surface.kind()
    }

    pub fn sense(&self) -> f64 {
        if self.same_sense {
            1.0
        } else {
            -1.0
        }
    }

    pub fn point(&self, u: f64, v: f64) -> Vec3 {
        self.surface.point(u, v)
    }

    /// Outward unit normal plus `∂F/∂u`, `∂F/∂v`.
    pub fn normal_and_partials(&self, u: f64, v: f64) -> Result<(Vec3, Vec3, Vec3), GeomError> {
        let s = self.surface.sample(u, v)?;
        Ok((s.normal * self.sense(), s.du, s.dv))
    }

    /// Outward normal, falling back to the geometric limit at poles.
    pub fn outward_normal(&self, u: f64, v: f64) -> Vec3 {
        match self.surface.sample(u, v) {
            Ok(s) => s.normal * self.sense(),
            Err(_) => self.surface.limit_normal(u, v) * self.sense(),
        }
    }

    /// Trim-mask membership of a parameter point.
    pub fn contains_uv(&self, u: f64, v: f64) -> bool {
        inside_loops(&self.loops, u, v)
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        let err = |msg: String| Err(GeomError::InvalidSolid(format!("face {}: {msg}", self.id)));
        if self.surface.domain.is_degenerate() {
            return err("degenerate uv domain".into());
        }
        if self.surface.placement.frame_error() > 1e-9 {
            return err("placement axes are not orthonormal".into());
        }
        if self.loops.iter().filter(|l| l.outer).count() != 1 {
            return err("expected exactly one outer loop".into());
        }
        for (k, l) in self.loops.iter().enumerate() {
            if !l.is_closed() || l.distinct_vertices() < 3 {
                return err(format!("loop {k} is not a closed polyline with 3 vertices"));
            }
            if let Some(p) = l
                .points
                .iter()
                .find(|p| !self.surface.domain.contains(p[0], p[1], 1e-9))
            {
                return err(format!("loop {k} vertex {p:?} outside uv domain"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Solid {
    pub faces: Vec<Face>,
    /// Undirected adjacency between faces sharing a boundary curve.
    pub edges: Vec<(usize, usize)>,
    pub name: String,
    pub class_label: Option<i64>,
}

impl Solid {
    pub fn face(&self, id: usize) -> Option<&Face> {
        self.faces.iter().find(|f| f.id == id)
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        let mut ids = HashSet::new();
        for f in &self.faces {
            if !ids.insert(f.id) {
                return Err(GeomError::InvalidSolid(format!("duplicate face id {}", f.id)));
            }
            f.validate()?;
        }
        let mut seen = HashSet::new();
        for &(a, b) in &self.edges {
            if a == b || !ids.contains(&a) || !ids.contains(&b) {
                return Err(GeomError::InvalidSolid(format!("bad edge ({a}, {b})")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(GeomError::InvalidSolid(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(())
    }

    /// Every cell-center sample of every face's `GRID_RES²` lattice, trimmed
    /// or not.
    pub fn lattice_samples(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.faces.iter().flat_map(|f| {
            let d = f.surface.domain;
            (0..GRID_RES).flat_map(move |i| {
                (0..GRID_RES).map(move |j| {
                    let (u, v) = d.cell_center(i, GRID_RES, j, GRID_RES);
                    f.point(u, v)
                })
            })
        })
    }

    /// Axis-aligned bounds `(min, max)` of [`Self::lattice_samples`].
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let inf = f64::INFINITY;
        self.lattice_samples().fold(
            (Vec3::repeat(inf), Vec3::repeat(-inf)),
            |(lo, hi), p| (lo.inf(&p), hi.sup(&p)),
        )
    }

    /// Applies `p ↦ scale·(p + translation)` to every face.
    pub fn similarity(&self, scale: f64, translation: &Vec3) -> Solid {
        let faces = self
            .faces
            .iter()
            .map(|f| {
                let (lu, lv) = f.surface.linear_params();
                let su = if lu { scale } else { 1.0 };
                let sv = if lv { scale } else { 1.0 };
                Face {
                    surface: f.surface.similarity(scale, translation),
                    loops: f
                        .loops
                        .iter()
                        .map(|l| l.map_points(|p| [p[0] * su, p[1] * sv]))
                        .collect(),
                    ..f.clone()
                }
            })
            .collect();
        Solid {
            faces,
            ..self.clone()
        }
    }

    pub fn translated(&self, t: &Vec3) -> Solid {
        self.similarity(1.0, t)
    }

    /// Rotates every placement about the world origin.
    pub fn rotated(&self, rot: &Rotation) -> Solid {
        let m = rot.matrix();
        Solid {
            faces: self
                .faces
                .iter()
                .map(|f| Face {
                    surface: f.surface.rotated(&m),
                    ..f.clone()
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// Centers the lattice bounding box at the origin and scales its diagonal to
/// one. Returns the normalized solid with the applied `scale` and
/// `translation` (`p' = scale·(p + translation)`).
pub fn normalize_solid(solid: &Solid) -> Result<(Solid, f64, Vec3), GeomError> {
    if solid.faces.is_empty() {
        return Err(GeomError::InvalidSolid("solid has no faces".into()));
    }
    let (lo, hi) = solid.bounding_box();
    let diag = (hi - lo).norm();
    if !(diag >= 1e-12) {
        return Err(GeomError::DegenerateBBox(diag));
    }
    let translation = -(lo + hi) * 0.5;
    let scale = 1.0 / diag;
    Ok((solid.similarity(scale, &translation), scale, translation))
}

pub fn rotate_solid(solid: &Solid, rot: &Rotation) -> Solid {
    solid.rotated(rot)
}

/// Midpoint-rule area of the trimmed face on a `quadrature_n²` lattice.
pub fn face_area(face: &Face, quadrature_n: usize) -> f64 {
    let d = face.surface.domain;
    let n = quadrature_n.max(1);
    let cell = d.width() * d.height() / (n * n) as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (u, v) = d.cell_center(i, n, j, n);
            if face.contains_uv(u, v) {
                total += face.surface.area_element(u, v);
            }
        }
    }
    total * cell
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, TAU};

    pub(crate) fn cube(side: f64, center: Vec3) -> Solid {
        let h = side / 2.0;
        let dirs = [
            (Vec3::z(), Vec3::x()),
            (-Vec3::z(), Vec3::x()),
            (Vec3::x(), Vec3::y()),
            (-Vec3::x(), -Vec3::y()),
            (Vec3::y(), Vec3::z()),
            (-Vec3::y(), -Vec3::z()),
        ];
        let faces = dirs
            .iter()
            .enumerate()
            .map(|(id, (n, r))| {
                let pl = Placement::from_axis_ref(center + n * h, *n, *r).unwrap();
                Face::untrimmed(
                    id,
                    AnalyticSurface::new(Shape::Plane, pl, UvDomain::new(-h, h, -h, h)),
                    true,
                )
            })
            .collect();
        let mut edges = vec![];
        for a in 0..6 {
            for b in a + 1..6 {
                if a / 2 != b / 2 {
                    edges.push((a, b));
                }
            }
        }
        Solid {
            faces,
            edges,
            name: "cube".into(),
            class_label: None,
        }
    }

    #[test]
    fn cube_normalizes_to_unit_diagonal() {
        let (n, scale, t) = normalize_solid(&cube(2.0, Vec3::zeros())).unwrap();
        assert!((scale - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-12);
        assert!(t.norm() < 1e-12);
        let (lo, hi) = n.bounding_box();
        assert!(((hi + lo) * 0.5).amax() < 1e-9);
        assert!(((hi - lo).norm() - 1.0).abs() < 1e-9);
        let side = n.faces[0].surface.domain.width();
        assert!((side - 1.0 / 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn normalization_removes_translation_and_is_idempotent() {
        let (a, ..) = normalize_solid(&cube(2.0, Vec3::zeros())).unwrap();
        let (b, ..) = normalize_solid(&cube(2.0, Vec3::new(5.0, 5.0, 5.0))).unwrap();
        for (fa, fb) in a.faces.iter().zip(&b.faces) {
            assert!((fa.surface.placement.origin - fb.surface.placement.origin).amax() < 1e-9);
        }
        let (c, scale, t) = normalize_solid(&a).unwrap();
        assert!((scale - 1.0).abs() < 1e-9 && t.amax() < 1e-9);
        for (fa, fc) in a.faces.iter().zip(&c.faces) {
            assert!((fa.surface.placement.origin - fc.surface.placement.origin).amax() < 1e-9);
        }
    }

    #[test]
    fn degenerate_bbox() {
        let mut s = cube(2.0, Vec3::zeros());
        s.faces.truncate(1);
        s.faces[0].surface.domain = UvDomain::new(0.0, 0.0, 0.0, 0.0);
        assert!(matches!(normalize_solid(&s), Err(GeomError::DegenerateBBox(_))));
    }

    #[test]
    fn rotation_of_canonical_normal() {
        let s = cube(2.0, Vec3::zeros());
        let top = |s: &Solid| s.faces[0].outward_normal(0.0, 0.0);
        let rz = s.rotated(&Rotation::from_axis_angle(Vec3::z(), FRAC_PI_2));
        assert!((top(&rz) - Vec3::z()).norm() < 1e-15);
        let rx = s.rotated(&Rotation::from_axis_angle(Vec3::x(), FRAC_PI_2));
        assert!((top(&rx) - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-15);
        assert_eq!(s.rotated(&Rotation::identity()), s);
    }

    #[test]
    fn areas() {
        let (n, ..) = normalize_solid(&cube(2.0, Vec3::zeros())).unwrap();
        assert!((face_area(&n.faces[0], 64) - 1.0 / 3.0).abs() < 1e-3);

        let cyl = Face::untrimmed(
            0,
            AnalyticSurface::new(
                Shape::Cylinder { radius: 1.0 },
                Placement::canonical(),
                UvDomain::new(0.0, TAU, 0.0, 1.0),
            ),
            true,
        );
        assert!((face_area(&cyl, 64) - TAU).abs() < 1e-2);

        let mut empty = n.faces[0].clone();
        empty.loops = vec![TrimLoop::rectangle(10.0, 11.0, 10.0, 11.0, true)];
        assert_eq!(face_area(&empty, 64), 0.0);
    }

    #[test]
    fn validate_rejects_bad_edges() {
        let mut s = cube(1.0, Vec3::zeros());
        assert!(s.validate().is_ok());
        s.edges.push((2, 0));
        assert!(s.validate().is_err());
        s.edges.pop();
        s.edges.push((2, 2));
        assert!(s.validate().is_err());
    }
}
