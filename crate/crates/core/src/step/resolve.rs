//! Maps a Part 21 entity graph onto an analytic [`Solid`].

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use super::parser::{EntityGraph, Part21Entity, Value};
use super::StepError;
use crate::brep::{AnalyticSurface, Face, Placement, Shape, Solid, TrimLoop, UvDomain, Vec3};

/// Maximum distance between a boundary point and its UV re-evaluation.
pub const INVERSION_TOL: f64 = 1e-7;
/// Initial per-edge sample count.
pub const EDGE_SAMPLES: usize = 32;
/// Chord deviation bound (UV units) driving adaptive edge refinement.
pub const CHORD_TOL: f64 = 1e-4;
const MAX_EDGE_SAMPLES: usize = 1 << 14;

struct Resolver<'g> {
    graph: &'g EntityGraph,
}

/// Curve geometry of an edge.
enum Curve {
    Line { origin: Vec3, dir: Vec3 },
    Circle { place: Placement, radius: f64 },
}

impl Curve {
    fn point(&self, t: f64) -> Vec3 {
        match self {
            Curve::Line { origin, dir } => origin + dir * t,
            Curve::Circle { place, radius } => {
                let (s, c) = t.sin_cos();
                place.origin + (place.x * c + place.y * s) * *radius
            }
        }
    }

    fn param_of(&self, p: &Vec3) -> f64 {
        match self {
            Curve::Line { origin, dir } => (p - origin).dot(dir) / dir.norm_squared(),
            Curve::Circle { place, .. } => {
                let q = place.to_local(p);
                q.y.atan2(q.x)
            }
        }
    }

    fn is_periodic(&self) -> bool {
        matches!(self, Curve::Circle { .. })
    }
}

impl<'g> Resolver<'g> {
    fn entity(&self, id: u64) -> Result<&'g Part21Entity, StepError> {
        self.graph
            .get(id)
            .ok_or_else(|| StepError::Resolve(format!("missing entity #{id}")))
    }

    fn arg<'e>(&self, e: &'e Part21Entity, k: usize) -> Result<&'e Value, StepError> {
        e.args.get(k).ok_or_else(|| {
            StepError::Resolve(format!("#{} {}: missing argument {k}", e.id, e.type_name))
        })
    }

    fn ref_arg(&self, e: &'g Part21Entity, k: usize) -> Result<&'g Part21Entity, StepError> {
        let id = self.arg(e, k)?.as_ref_id().ok_or_else(|| {
            StepError::Resolve(format!("#{} {}: argument {k} is not a reference", e.id, e.type_name))
        })?;
        self.entity(id)
    }

    fn num_arg(&self, e: &Part21Entity, k: usize) -> Result<f64, StepError> {
        self.arg(e, k)?.as_f64().ok_or_else(|| {
            StepError::Resolve(format!("#{} {}: argument {k} is not a number", e.id, e.type_name))
        })
    }

    fn bool_arg(&self, e: &Part21Entity, k: usize) -> Result<bool, StepError> {
        self.arg(e, k)?.as_bool().ok_or_else(|| {
            StepError::Resolve(format!("#{} {}: argument {k} is not a boolean", e.id, e.type_name))
        })
    }

    fn list_arg<'e>(&self, e: &'e Part21Entity, k: usize) -> Result<&'e [Value], StepError> {
        self.arg(e, k)?.as_list().ok_or_else(|| {
            StepError::Resolve(format!("#{} {}: argument {k} is not a list", e.id, e.type_name))
        })
    }

    fn expect_type(&self, e: &Part21Entity, names: &[&str]) -> Result<(), StepError> {
        if names.contains(&e.type_name.as_str()) {
            Ok(())
        } else {
            Err(StepError::Resolve(format!(
                "#{}: expected {}, found {}",
                e.id,
                names.join("/"),
                e.type_name
            )))
        }
    }

    fn triple(&self, e: &Part21Entity, k: usize) -> Result<Vec3, StepError> {
        let items = self.list_arg(e, k)?;
        let xs: Option<Vec<f64>> = items.iter().map(Value::as_f64).collect();
        match xs.as_deref() {
            Some([x, y, z]) => Ok(Vec3::new(*x, *y, *z)),
            Some([x, y]) => Ok(Vec3::new(*x, *y, 0.0)),
            _ => Err(StepError::Resolve(format!("#{}: expected coordinate triple", e.id))),
        }
    }

    fn point(&self, e: &Part21Entity) -> Result<Vec3, StepError> {
        self.expect_type(e, &["CARTESIAN_POINT"])?;
        self.triple(e, 1)
    }

    fn direction(&self, e: &Part21Entity) -> Result<Vec3, StepError> {
        self.expect_type(e, &["DIRECTION"])?;
        self.triple(e, 1)
    }

    fn placement(&self, e: &'g Part21Entity) -> Result<Placement, StepError> {
        self.expect_type(e, &["AXIS2_PLACEMENT_3D"])?;
        let origin = self.point(self.ref_arg(e, 1)?)?;
        let axis = match self.arg(e, 2)? {
            Value::Ref(id) => self.direction(self.entity(*id)?)?,
            _ => Vec3::z(),
        };
        let reference = match self.arg(e, 3)? {
            Value::Ref(id) => self.direction(self.entity(*id)?)?,
            _ => {
                // any direction not parallel to the axis
                if axis.normalize().x.abs() < 0.9 {
                    Vec3::x()
                } else {
                    Vec3::y()
                }
            }
        };
        Placement::from_axis_ref(origin, axis, reference)
            .ok_or_else(|| StepError::Resolve(format!("#{}: degenerate placement axes", e.id)))
    }

    fn surface_shape(&self, e: &'g Part21Entity) -> Result<(Shape, Placement), StepError> {
        let place = || self.placement(self.ref_arg(e, 1)?);
        let shape = match e.type_name.as_str() {
            "PLANE" => Shape::Plane,
            "CYLINDRICAL_SURFACE" => Shape::Cylinder {
                radius: self.num_arg(e, 2)?,
            },
            "CONICAL_SURFACE" => Shape::Cone {
                radius: self.num_arg(e, 2)?,
                semi_angle: self.num_arg(e, 3)?,
            },
            "SPHERICAL_SURFACE" => Shape::Sphere {
                radius: self.num_arg(e, 2)?,
            },
            "TOROIDAL_SURFACE" => Shape::Torus {
                major_radius: self.num_arg(e, 2)?,
                minor_radius: self.num_arg(e, 3)?,
            },
            other => {
                let name = other.split('+').next().unwrap_or(other);
                return Err(StepError::UnsupportedEntity(name.to_string()));
            }
        };
        Ok((shape, place()?))
    }

    fn curve(&self, e: &'g Part21Entity) -> Result<Curve, StepError> {
        match e.type_name.as_str() {
            "LINE" => {
                let origin = self.point(self.ref_arg(e, 1)?)?;
                let vector = self.ref_arg(e, 2)?;
                self.expect_type(vector, &["VECTOR"])?;
                let dir = self.direction(self.ref_arg(vector, 1)?)?.normalize()
                    * self.num_arg(vector, 2)?;
                Ok(Curve::Line { origin, dir })
            }
            "CIRCLE" => Ok(Curve::Circle {
                place: self.placement(self.ref_arg(e, 1)?)?,
                radius: self.num_arg(e, 2)?,
            }),
            "SURFACE_CURVE" | "SEAM_CURVE" => self.curve(self.ref_arg(e, 1)?),
            other => Err(StepError::UnsupportedEntity(other.to_string())),
        }
    }

    fn vertex(&self, e: &'g Part21Entity) -> Result<Vec3, StepError> {
        self.expect_type(e, &["VERTEX_POINT"])?;
        self.point(self.ref_arg(e, 1)?)
    }

    /// Samples an oriented edge into 3D points, start to end of traversal.
    fn sample_edge(
        &self,
        edge: &'g Part21Entity,
        forward: bool,
        surface: &AnalyticSurface,
    ) -> Result<Vec<Vec3>, StepError> {
        self.expect_type(edge, &["EDGE_CURVE"])?;
        let start = self.vertex(self.ref_arg(edge, 1)?)?;
        let end = self.vertex(self.ref_arg(edge, 2)?)?;
        let curve = self.curve(self.ref_arg(edge, 3)?)?;
        let same_sense = self.bool_arg(edge, 4)?;
        let (a, b) = if forward { (start, end) } else { (end, start) };
        let increasing = forward == same_sense;
        let ta = curve.param_of(&a);
        let mut tb = curve.param_of(&b);
        if curve.is_periodic() {
            // a closed edge (start == end vertex) spans the full circle
            let closed = (a - b).norm() < 1e-9;
            let ahead = if closed { TAU } else { (tb - ta).rem_euclid(TAU) };
            tb = if increasing {
                ta + ahead
            } else if closed {
                ta - TAU
            } else {
                ta - (TAU - ahead)
            };
        }
        let uv_of = |p: &Vec3| -> Result<[f64; 2], StepError> {
            let (u, v) = surface.invert(p);
            let err = (surface.point(u, v) - p).norm();
            if !(err <= INVERSION_TOL) {
                return Err(StepError::InversionFailure {
                    entity: edge.id,
                    error: err,
                });
            }
            Ok([u, v])
        };
        let mut n = EDGE_SAMPLES;
        loop {
            let params: Vec<f64> = (0..=n).map(|k| ta + (tb - ta) * k as f64 / n as f64).collect();
            let pts: Vec<Vec3> = params.iter().map(|&t| curve.point(t)).collect();
            if n >= MAX_EDGE_SAMPLES {
                return Ok(pts);
            }
            let mut worst = 0.0f64;
            for w in params.windows(2) {
                let p0 = uv_of(&curve.point(w[0]))?;
                let p1 = unwrap_near(uv_of(&curve.point(w[1]))?, p0, surface);
                let pm = unwrap_near(uv_of(&curve.point(0.5 * (w[0] + w[1])))?, p0, surface);
                let dev = ((pm[0] - 0.5 * (p0[0] + p1[0])).powi(2)
                    + (pm[1] - 0.5 * (p0[1] + p1[1])).powi(2))
                .sqrt();
                worst = worst.max(dev);
            }
            if worst < CHORD_TOL {
                return Ok(pts);
            }
            n *= 2;
        }
    }

    /// UV polyline of an edge loop, unwrapped by continuity.
    fn loop_uv(
        &self,
        loop_entity: &'g Part21Entity,
        reversed: bool,
        surface: &AnalyticSurface,
        edge_faces: &mut Vec<u64>,
    ) -> Result<Option<Vec<[f64; 2]>>, StepError> {
        if loop_entity.type_name == "VERTEX_LOOP" {
            return Ok(None);
        }
        self.expect_type(loop_entity, &["EDGE_LOOP"])?;
        let mut edges: Vec<(&Part21Entity, bool)> = Vec::new();
        for item in self.list_arg(loop_entity, 1)? {
            let oe = self.entity(item.as_ref_id().ok_or_else(|| {
                StepError::Resolve(format!("#{}: loop item is not a reference", loop_entity.id))
            })?)?;
            self.expect_type(oe, &["ORIENTED_EDGE"])?;
            let ec = self.ref_arg(oe, 3)?;
            edges.push((ec, self.bool_arg(oe, 4)?));
        }
        if reversed {
            edges.reverse();
            edges.iter_mut().for_each(|e| e.1 = !e.1);
        }
        let mut uv: Vec<[f64; 2]> = Vec::new();
        for (ec, forward) in edges {
            edge_faces.push(ec.id);
            let pts = self.sample_edge(ec, forward, surface)?;
            for (k, p) in pts.iter().enumerate() {
                if k == 0 && !uv.is_empty() {
                    continue;
                }
                let (u, v) = surface.invert(p);
                let q = match uv.last() {
                    Some(prev) => unwrap_near([u, v], *prev, surface),
                    None => [u, v],
                };
                uv.push(q);
            }
        }
        Ok(Some(uv))
    }

    fn face(
        &self,
        id: usize,
        e: &'g Part21Entity,
        edge_map: &mut BTreeMap<u64, Vec<usize>>,
    ) -> Result<Face, StepError> {
        self.expect_type(e, &["ADVANCED_FACE", "FACE_SURFACE"])?;
        let surf_entity = self.ref_arg(e, 2)?;
        let (shape, placement) = self.surface_shape(surf_entity)?;
        let same_sense = self.bool_arg(e, 3)?;
        // provisional domain; replaced by the loop bounds below
        let mut surface = AnalyticSurface::new(shape, placement, UvDomain::new(0.0, 1.0, 0.0, 1.0));

        let bounds = self.list_arg(e, 1)?;
        let mut outer_idx = None;
        let mut polylines: Vec<Vec<[f64; 2]>> = Vec::new();
        let mut edge_ids = Vec::new();
        for b in bounds {
            let bound = self.entity(b.as_ref_id().ok_or_else(|| {
                StepError::Resolve(format!("#{}: bound is not a reference", e.id))
            })?)?;
            self.expect_type(bound, &["FACE_OUTER_BOUND", "FACE_BOUND"])?;
            let orientation = self.bool_arg(bound, 2)?;
            let loop_entity = self.ref_arg(bound, 1)?;
            if let Some(uv) = self.loop_uv(loop_entity, !orientation, &surface, &mut edge_ids)? {
                if bound.type_name == "FACE_OUTER_BOUND" {
                    outer_idx = Some(polylines.len());
                }
                polylines.push(uv);
            }
        }
        for ec in edge_ids {
            let faces = edge_map.entry(ec).or_default();
            if !faces.contains(&id) {
                faces.push(id);
            }
        }
        if polylines.is_empty() {
            return Err(StepError::Resolve(format!("#{}: face has no edge loops", e.id)));
        }

        let u_period = surface.u_period();
        let wraps = |pl: &[[f64; 2]]| -> bool {
            match (u_period, pl.first(), pl.last()) {
                (Some(p), Some(a), Some(b)) => (b[0] - a[0]).abs() > 0.5 * p,
                _ => false,
            }
        };
        let loops = if polylines.iter().any(|pl| wraps(pl)) {
            // band on a periodic surface bounded by curves going once around
            let period = u_period.unwrap_or(TAU);
            let wrapping: Vec<&Vec<[f64; 2]>> = polylines.iter().filter(|pl| wraps(pl)).collect();
            let u0 = wrapping
                .iter()
                .flat_map(|pl| pl.iter().map(|p| p[0]))
                .fold(f64::INFINITY, f64::min);
            let (v0, v1) = wrapping
                .iter()
                .flat_map(|pl| pl.iter().map(|p| p[1]))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            surface.domain = UvDomain::new(u0, u0 + period, v0, v1);
            let mut loops = vec![TrimLoop::rectangle(u0, u0 + period, v0, v1, true)];
            for pl in polylines.iter().filter(|pl| !wraps(pl)) {
                loops.push(TrimLoop::new(shift_into(pl, &surface), false));
            }
            loops
        } else {
            let outer = outer_idx.unwrap_or_else(|| {
                // without an explicit outer bound, the widest loop is outer
                (0..polylines.len())
                    .max_by(|&a, &b| {
                        let w = |pl: &[[f64; 2]]| bbox(pl).1[0] - bbox(pl).0[0];
                        w(&polylines[a]).total_cmp(&w(&polylines[b]))
                    })
                    .unwrap_or(0)
            });
            let (lo, hi) = bbox(&polylines[outer]);
            surface.domain = UvDomain::new(lo[0], hi[0], lo[1], hi[1]);
            polylines
                .iter()
                .enumerate()
                .map(|(k, pl)| {
                    if k == outer {
                        TrimLoop::new(pl.clone(), true)
                    } else {
                        TrimLoop::new(shift_into(pl, &surface), false)
                    }
                })
                .collect()
        };
        Ok(Face {
            id,
            surface,
            loops,
            same_sense,
            label: None,
        })
    }

    fn shell_faces(&self) -> Result<(String, Vec<u64>), StepError> {
        let (name, shell) = if let Some(brep) = self.graph.of_type("MANIFOLD_SOLID_BREP").next() {
            let name = match brep.args.first() {
                Some(Value::Str(s)) => s.clone(),
                _ => String::new(),
            };
            (name, self.ref_arg(brep, 1)?)
        } else if let Some(shell) = self
            .graph
            .entities
            .values()
            .find(|e| e.type_name == "CLOSED_SHELL" || e.type_name == "OPEN_SHELL")
        {
            (String::new(), shell)
        } else {
            return Err(StepError::Resolve(
                "no MANIFOLD_SOLID_BREP or CLOSED_SHELL in file".into(),
            ));
        };
        self.expect_type(shell, &["CLOSED_SHELL", "OPEN_SHELL"])?;
        let ids = self
            .list_arg(shell, 1)?
            .iter()
            .map(|v| {
                v.as_ref_id()
                    .ok_or_else(|| StepError::Resolve(format!("#{}: face is not a reference", shell.id)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((name, ids))
    }
}

fn bbox(pl: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    pl.iter().fold(
        ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
        |(lo, hi), p| ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])]),
    )
}

/// Picks the periodic branch of `p` closest to `prev`.
fn unwrap_near(p: [f64; 2], prev: [f64; 2], surface: &AnalyticSurface) -> [f64; 2] {
    let fix = |x: f64, reference: f64, period: Option<f64>| match period {
        Some(per) => x + per * ((reference - x) / per).round(),
        None => x,
    };
    [
        fix(p[0], prev[0], surface.u_period()),
        fix(p[1], prev[1], surface.v_period()),
    ]
}

/// Shifts a loop by whole periods so that its first vertex lies in the surface domain.
fn shift_into(pl: &[[f64; 2]], surface: &AnalyticSurface) -> Vec<[f64; 2]> {
    let Some(first) = pl.first() else {
        return Vec::new();
    };
    let (u, v) = surface.wrap_to_domain(first[0], first[1], 1e-9);
    let (du, dv) = (u - first[0], v - first[1]);
    pl.iter().map(|p| [p[0] + du, p[1] + dv]).collect()
}

/// Builds a [`Solid`] from the first solid B-rep (or shell) in the graph.
pub fn resolve_brep(graph: &EntityGraph) -> Result<Solid, StepError> {
    let r = Resolver { graph };
    let (name, face_ids) = r.shell_faces()?;
    let mut edge_map: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let mut faces = Vec::with_capacity(face_ids.len());
    for (k, fid) in face_ids.iter().enumerate() {
        let face = r.face(k, r.entity(*fid)?, &mut edge_map)?;
        faces.push(face);
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for users in edge_map.values() {
        for (i, &a) in users.iter().enumerate() {
            for &b in &users[i + 1..] {
                // seam edges shared by a face with itself never reach here
                let pair = (a.min(b), a.max(b));
                if !edges.contains(&pair) {
                    edges.push(pair);
                }
            }
        }
    }
    edges.sort_unstable();
    let solid = Solid {
        faces,
        edges,
        name,
        class_label: None,
    };
    solid
        .validate()
        .map_err(|e| StepError::Resolve(e.to_string()))?;
    Ok(solid)
}
