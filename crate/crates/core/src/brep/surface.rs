//! Analytic surfaces and their parameterizations.
//!
//! Every surface is expressed in a local placement (origin plus a right-handed
//! orthonormal frame). Angular parameters are in radians, linear ones in model
//! units:
//!
//! | kind     | F(u, v)                                              |
//! |----------|------------------------------------------------------|
//! | plane    | o + u·x + v·y                                        |
//! | cylinder | o + r·e(u) + v·z                                     |
//! | cone     | o + (r + v·tan α)·e(u) + v·z                         |
//! | sphere   | o + r·cos v·e(u) + r·sin v·z                         |
//! | torus    | o + (R + r·cos v)·e(u) + r·sin v·z                   |
//!
//! with `e(u) = cos u·x + sin u·y`.

use std::f64::consts::{PI, TAU};

use super::{GeomError, Vec3};

/// Threshold below which `|∂F/∂u × ∂F/∂v|` counts as a parameterization pole.
pub const DEGENERATE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceKind {
    Plane,
    Cylinder,
    Cone,
    Sphere,
    Torus,
}

impl SurfaceKind {
    pub const ALL: [SurfaceKind; 5] = [
        SurfaceKind::Plane,
        SurfaceKind::Cylinder,
        SurfaceKind::Cone,
        SurfaceKind::Sphere,
        SurfaceKind::Torus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::Plane => "plane",
            SurfaceKind::Cylinder => "cylinder",
            SurfaceKind::Cone => "cone",
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::Torus => "torus",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Position in the six-way surface-type one-hot (slot 5 is "other").
    pub fn one_hot_index(self) -> usize {
        match self {
            SurfaceKind::Plane => 0,
            SurfaceKind::Cylinder => 1,
            SurfaceKind::Cone => 2,
            SurfaceKind::Sphere => 3,
            SurfaceKind::Torus => 4,
        }
    }
}

/// Kind-specific shape parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Plane,
    Cylinder { radius: f64 },
    /// `radius` is the radius at `v = 0`; `semi_angle` in radians.
    Cone { radius: f64, semi_angle: f64 },
    Sphere { radius: f64 },
    Torus { major_radius: f64, minor_radius: f64 },
}

impl Shape {
    pub fn kind(&self) -> SurfaceKind {
        match self {
            Shape::Plane => SurfaceKind::Plane,
            Shape::Cylinder { .. } => SurfaceKind::Cylinder,
            Shape::Cone { .. } => SurfaceKind::Cone,
            Shape::Sphere { .. } => SurfaceKind::Sphere,
            Shape::Torus { .. } => SurfaceKind::Torus,
        }
    }

    /// Scalar parameters in interchange order.
    pub fn radii(&self) -> Vec<f64> {
        match *self {
            Shape::Plane => vec![],
            Shape::Cylinder { radius } | Shape::Sphere { radius } => vec![radius],
            Shape::Cone { radius, semi_angle } => vec![radius, semi_angle],
            Shape::Torus {
                major_radius,
                minor_radius,
            } => vec![major_radius, minor_radius],
        }
    }

    pub fn from_radii(kind: SurfaceKind, radii: &[f64]) -> Option<Self> {
        let shape = match (kind, radii) {
            (SurfaceKind::Plane, []) => Shape::Plane,
            (SurfaceKind::Cylinder, [r]) => Shape::Cylinder { radius: *r },
            (SurfaceKind::Cone, [r, a]) => Shape::Cone {
                radius: *r,
                semi_angle: *a,
            },
            (SurfaceKind::Sphere, [r]) => Shape::Sphere { radius: *r },
            (SurfaceKind::Torus, [big, small]) => Shape::Torus {
                major_radius: *big,
                minor_radius: *small,
            },
            _ => return None,
        };
        Some(shape)
    }

    fn scaled(&self, s: f64) -> Self {
        match *self {
            Shape::Plane => Shape::Plane,
            Shape::Cylinder { radius } => Shape::Cylinder { radius: radius * s },
            Shape::Cone { radius, semi_angle } => Shape::Cone {
                radius: radius * s,
                semi_angle,
            },
            Shape::Sphere { radius } => Shape::Sphere { radius: radius * s },
            Shape::Torus {
                major_radius,
                minor_radius,
            } => Shape::Torus {
                major_radius: major_radius * s,
                minor_radius: minor_radius * s,
            },
        }
    }
}

/// Origin plus right-handed orthonormal axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub origin: Vec3,
    pub x: Vec3,
    pub y: Vec3,
    pub z: Vec3,
}

impl Placement {
    pub fn canonical() -> Self {
        Self {
            origin: Vec3::zeros(),
            x: Vec3::x(),
            y: Vec3::y(),
            z: Vec3::z(),
        }
    }

    /// Builds a placement from an origin, a main axis and a reference
    /// direction; the reference is orthogonalized against the axis.
    pub fn from_axis_ref(origin: Vec3, axis: Vec3, reference: Vec3) -> Option<Self> {
        let z = axis.try_normalize(1e-15)?;
        let x = (reference - z * reference.dot(&z)).try_normalize(1e-15)?;
        let y = z.cross(&x);
        Some(Self { origin, x, y, z })
    }

    /// Largest deviation from orthonormality / right-handedness.
    pub fn frame_error(&self) -> f64 {
        let checks = [
            self.x.norm() - 1.0,
            self.y.norm() - 1.0,
            self.z.norm() - 1.0,
            self.x.dot(&self.y),
            self.y.dot(&self.z),
            self.z.dot(&self.x),
            self.x.cross(&self.y).dot(&self.z) - 1.0,
        ];
        checks.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for (k, v) in [self.origin, self.x, self.y, self.z].iter().enumerate() {
            out[3 * k..3 * k + 3].copy_from_slice(v.as_slice());
        }
        out
    }

    pub fn from_array(a: &[f64; 12]) -> Self {
        let v = |k: usize| Vec3::new(a[3 * k], a[3 * k + 1], a[3 * k + 2]);
        Self {
            origin: v(0),
            x: v(1),
            y: v(2),
            z: v(3),
        }
    }

    /// Coordinates of `p` in this frame.
    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        let d = p - self.origin;
        Vec3::new(d.dot(&self.x), d.dot(&self.y), d.dot(&self.z))
    }

    pub fn dir_to_local(&self, d: &Vec3) -> Vec3 {
        Vec3::new(d.dot(&self.x), d.dot(&self.y), d.dot(&self.z))
    }

    fn radial(&self, u: f64) -> Vec3 {
        let (s, c) = u.sin_cos();
        self.x * c + self.y * s
    }

    fn tangential(&self, u: f64) -> Vec3 {
        let (s, c) = u.sin_cos();
        self.y * c - self.x * s
    }
}

/// Rectangular parameter domain `[u_min, u_max] × [v_min, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UvDomain {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl UvDomain {
    pub fn new(u_min: f64, u_max: f64, v_min: f64, v_max: f64) -> Self {
        Self {
            u_min,
            u_max,
            v_min,
            v_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.u_max - self.u_min
    }

    pub fn height(&self) -> f64 {
        self.v_max - self.v_min
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.u_min + self.u_max),
            0.5 * (self.v_min + self.v_max),
        )
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.width() > 0.0 && self.height() > 0.0)
    }

    pub fn contains(&self, u: f64, v: f64, tol: f64) -> bool {
        u >= self.u_min - tol && u <= self.u_max + tol && v >= self.v_min - tol && v <= self.v_max + tol
    }

    /// Center of lattice cell `(i, j)` of an `n_u × n_v` subdivision.
    pub fn cell_center(&self, i: usize, n_u: usize, j: usize, n_v: usize) -> (f64, f64) {
        (
            self.u_min + (i as f64 + 0.5) * self.width() / n_u as f64,
            self.v_min + (j as f64 + 0.5) * self.height() / n_v as f64,
        )
    }
}

/// Point, partial derivatives and unit normal at one parameter location.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceSample {
    pub point: Vec3,
    pub du: Vec3,
    pub dv: Vec3,
    /// Unit normal of the parameterization, `normalize(du × dv)`.
    pub normal: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSurface {
    pub shape: Shape,
    pub placement: Placement,
    pub domain: UvDomain,
}

impl AnalyticSurface {
    pub fn new(shape: Shape, placement: Placement, domain: UvDomain) -> Self {
        Self {
            shape,
            placement,
            domain,
        }
    }

    pub fn kind(&self) -> SurfaceKind {
        self.shape.kind()
    }

    /// `F(u, v)`.
    pub fn point(&self, u: f64, v: f64) -> Vec3 {
        let p = &self.placement;
        match self.shape {
            Shape::Plane => p.origin + p.x * u + p.y * v,
            Shape::Cylinder { radius } => p.origin + p.radial(u) * radius + p.z * v,
            Shape::Cone { radius, semi_angle } => {
                p.origin + p.radial(u) * (radius + v * semi_angle.tan()) + p.z * v
            }
            Shape::Sphere { radius } => {
                let (sv, cv) = v.sin_cos();
                p.origin + p.radial(u) * (radius * cv) + p.z * (radius * sv)
            }
            Shape::Torus {
                major_radius,
                minor_radius,
            } => {
                let (sv, cv) = v.sin_cos();
                p.origin + p.radial(u) * (major_radius + minor_radius * cv) + p.z * (minor_radius * sv)
            }
        }
    }

    /// `(∂F/∂u, ∂F/∂v)`.
    pub fn partials(&self, u: f64, v: f64) -> (Vec3, Vec3) {
        let p = &self.placement;
        match self.shape {
            Shape::Plane => (p.x, p.y),
            Shape::Cylinder { radius } => (p.tangential(u) * radius, p.z),
            Shape::Cone { radius, semi_angle } => {
                let t = semi_angle.tan();
                (
                    p.tangential(u) * (radius + v * t),
                    p.radial(u) * t + p.z,
                )
            }
            Shape::Sphere { radius } => {
                let (sv, cv) = v.sin_cos();
                (
                    p.tangential(u) * (radius * cv),
                    (p.z * cv - p.radial(u) * sv) * radius,
                )
            }
            Shape::Torus {
                major_radius,
                minor_radius,
            } => {
                let (sv, cv) = v.sin_cos();
                (
                    p.tangential(u) * (major_radius + minor_radius * cv),
                    (p.z * cv - p.radial(u) * sv) * minor_radius,
                )
            }
        }
    }

    /// Point, partials and parameterization normal. Fails with
    /// [`GeomError::DegenerateTangent`] at poles where `|F_u × F_v|` vanishes.
    pub fn sample(&self, u: f64, v: f64) -> Result<SurfaceSample, GeomError> {
        let point = self.point(u, v);
        let (du, dv) = self.partials(u, v);
        let cross = du.cross(&dv);
        let n = cross.norm();
        if !(n >= DEGENERATE_EPS) {
            return Err(GeomError::DegenerateTangent { u, v });
        }
        Ok(SurfaceSample {
            point,
            du,
            dv,
            normal: cross / n,
        })
    }

    /// Normal defined by the surface geometry itself where the
    /// parameterization degenerates (sphere poles, cone apex).
    pub fn limit_normal(&self, u: f64, v: f64) -> Vec3 {
        let p = &self.placement;
        match self.shape {
            Shape::Sphere { .. } | Shape::Torus { .. } => {
                let (sv, cv) = v.sin_cos();
                (p.radial(u) * cv + p.z * sv).normalize()
            }
            Shape::Cone { semi_angle, .. } => {
                let n = p.radial(u) - p.z * semi_angle.tan();
                n.try_normalize(1e-15).unwrap_or(p.z)
            }
            Shape::Plane | Shape::Cylinder { .. } => self
                .sample(u, v)
                .map(|s| s.normal)
                .unwrap_or(p.z),
        }
    }

    /// Surface area element `|F_u × F_v|`.
    pub fn area_element(&self, u: f64, v: f64) -> f64 {
        let (du, dv) = self.partials(u, v);
        du.cross(&dv).norm()
    }

    /// Period of the `u` parameter, if the surface closes on itself in `u`.
    pub fn u_period(&self) -> Option<f64> {
        match self.shape {
            Shape::Plane => None,
            _ => Some(TAU),
        }
    }

    pub fn v_period(&self) -> Option<f64> {
        match self.shape {
            Shape::Torus { .. } => Some(TAU),
            _ => None,
        }
    }

    /// Which parameters carry model length units (and therefore scale with
    /// the model).
    pub fn linear_params(&self) -> (bool, bool) {
        match self.shape {
            Shape::Plane => (true, true),
            Shape::Cylinder { .. } | Shape::Cone { .. } => (false, true),
            Shape::Sphere { .. } | Shape::Torus { .. } => (false, false),
        }
    }

    /// Closed-form parameters of the surface point closest to `p` (exact
    /// for points on the surface). Angular parameters are returned in
    /// `(-π, π]`.
    pub fn invert(&self, p: &Vec3) -> (f64, f64) {
        let q = self.placement.to_local(p);
        match self.shape {
            Shape::Plane => (q.x, q.y),
            Shape::Cylinder { .. } => (q.y.atan2(q.x), q.z),
            Shape::Cone { radius, semi_angle } => {
                let v = q.z;
                let rho = radius + v * semi_angle.tan();
                let u = if rho < 0.0 {
                    (-q.y).atan2(-q.x)
                } else {
                    q.y.atan2(q.x)
                };
                (u, v)
            }
            Shape::Sphere { .. } => {
                let rxy = (q.x * q.x + q.y * q.y).sqrt();
                (q.y.atan2(q.x), q.z.atan2(rxy))
            }
            Shape::Torus { major_radius, .. } => {
                let rxy = (q.x * q.x + q.y * q.y).sqrt();
                (q.y.atan2(q.x), q.z.atan2(rxy - major_radius))
            }
        }
    }

    /// Shifts a periodic parameter by whole periods into `[lo - tol, hi + tol]`
    /// when possible; returns the value closest to the interval otherwise.
    pub fn wrap_into(value: f64, period: Option<f64>, lo: f64, hi: f64, tol: f64) -> f64 {
        let Some(period) = period else { return value };
        if value >= lo - tol && value <= hi + tol {
            return value;
        }
        let k = ((lo - value) / period).ceil();
        let shifted = value + k * period;
        if shifted <= hi + tol {
            return shifted;
        }
        // `shifted` overshoots; the previous branch may still be within tolerance
        let prev = shifted - period;
        if prev >= lo - tol || (lo - prev) < (shifted - hi) {
            prev
        } else {
            shifted
        }
    }

    /// Maps surface parameters into this surface's domain by whole periods.
    pub fn wrap_to_domain(&self, u: f64, v: f64, tol: f64) -> (f64, f64) {
        let d = &self.domain;
        (
            Self::wrap_into(u, self.u_period(), d.u_min, d.u_max, tol),
            Self::wrap_into(v, self.v_period(), d.v_min, d.v_max, tol),
        )
    }

    /// Applies `p ↦ scale·(p + translation)` to the surface.
    pub fn similarity(&self, scale: f64, translation: &Vec3) -> Self {
        let (lu, lv) = self.linear_params();
        let d = &self.domain;
        let su = if lu { scale } else { 1.0 };
        let sv = if lv { scale } else { 1.0 };
        Self {
            shape: self.shape.scaled(scale),
            placement: Placement {
                origin: (self.placement.origin + translation) * scale,
                ..self.placement
            },
            domain: UvDomain::new(d.u_min * su, d.u_max * su, d.v_min * sv, d.v_max * sv),
        }
    }

    /// Applies a rotation matrix about the world origin to the placement.
    pub fn rotated(&self, r: &nalgebra::Matrix3<f64>) -> Self {
        let p = &self.placement;
        Self {
            placement: Placement {
                origin: r * p.origin,
                x: r * p.x,
                y: r * p.y,
                z: r * p.z,
            },
            ..self.clone()
        }
    }

    /// Default full domain used for convenience constructors.
    pub fn full_angular_domain(v_min: f64, v_max: f64) -> UvDomain {
        UvDomain::new(0.0, TAU, v_min, v_max)
    }

    pub fn hemisphere_domain() -> UvDomain {
        UvDomain::new(0.0, TAU, 0.0, PI / 2.0)
    }
}
