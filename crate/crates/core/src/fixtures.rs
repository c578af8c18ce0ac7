//! Named reference solids, normalized, covering every surface kind.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::brep::{normalize_solid, AnalyticSurface, Face, Placement, Shape, Solid, TrimLoop, UvDomain, Vec3};
use crate::dataset::{build_family, generate_solid_retrying, Family, FamilySpec, Params, CIRCLE_SEGMENTS};

fn normalized(mut solid: Solid, name: &str) -> Solid {
    solid.name = name.to_string();
    normalize_solid(&solid).expect("fixture has a proper bounding box").0
}

fn box_params(feature: f64) -> Params {
    Params {
        size: Vec3::new(1.0, 1.0, 1.0),
        feature,
        depth: 0.5,
        offset: [0.0, 0.0],
    }
}

/// Axis-aligned cube of side `1/√3`; faces ordered +z, -z, +x, -x, +y, -y.
pub fn cube() -> Solid {
    normalized(build_family(Family::Box, &box_params(0.5)).unwrap(), "cube")
}

/// Cube pierced along z by a central hole of radius a quarter of the side.
pub fn cube_with_hole() -> Solid {
    normalized(build_family(Family::BoxThroughHole, &box_params(0.5)).unwrap(), "cube_with_hole")
}

fn cap(center: Vec3, normal: Vec3, radius: f64) -> Face {
    let placement = Placement::from_axis_ref(center, normal, Vec3::x()).unwrap();
    let surface = AnalyticSurface::new(Shape::Plane, placement, UvDomain::new(-radius, radius, -radius, radius));
    Face {
        id: 0,
        surface,
        loops: vec![TrimLoop::circle([0.0, 0.0], radius, CIRCLE_SEGMENTS, true)],
        same_sense: true,
        label: None,
    }
}

fn assemble(faces: Vec<Face>, edges: Vec<(usize, usize)>, name: &str) -> Solid {
    let faces = faces
        .into_iter()
        .enumerate()
        .map(|(id, f)| Face { id, ..f })
        .collect();
    normalized(
        Solid {
            faces,
            edges,
            ..Default::default()
        },
        name,
    )
}

/// Single closed spherical face.
pub fn sphere() -> Solid {
    let s = AnalyticSurface::new(
        Shape::Sphere { radius: 1.0 },
        Placement::canonical(),
        UvDomain::new(0.0, TAU, -FRAC_PI_2, FRAC_PI_2),
    );
    assemble(vec![Face::untrimmed(0, s, true)], vec![], "sphere")
}

/// Single closed toroidal face with major radius 2 and minor radius 0.6.
pub fn torus() -> Solid {
    let s = AnalyticSurface::new(
        Shape::Torus {
            major_radius: 2.0,
            minor_radius: 0.6,
        },
        Placement::canonical(),
        UvDomain::new(0.0, TAU, 0.0, TAU),
    );
    assemble(vec![Face::untrimmed(0, s, true)], vec![], "torus")
}

/// Conical frustum (radius 1 widening to 1.5 over height 1.2) with two caps.
pub fn cone_frustum() -> Solid {
    let (r0, h) = (1.0, 1.2);
    let alpha = (0.5f64 / h).atan();
    let side = AnalyticSurface::new(
        Shape::Cone {
            radius: r0,
            semi_angle: alpha,
        },
        Placement::canonical(),
        UvDomain::new(0.0, TAU, 0.0, h),
    );
    let r1 = r0 + h * alpha.tan();
    assemble(
        vec![
            Face::untrimmed(0, side, true),
            cap(Vec3::zeros(), -Vec3::z(), r0),
            cap(Vec3::new(0.0, 0.0, h), Vec3::z(), r1),
        ],
        vec![(0, 1), (0, 2)],
        "cone_frustum",
    )
}

/// Hemisphere dome on a flat disk; the dome's domain center is off the pole.
pub fn dome() -> Solid {
    let dome = AnalyticSurface::new(
        Shape::Sphere { radius: 1.0 },
        Placement::canonical(),
        UvDomain::new(0.0, TAU, 0.0, 0.5 * PI),
    );
    assemble(
        vec![Face::untrimmed(0, dome, true), cap(Vec3::zeros(), -Vec3::z(), 1.0)],
        vec![(0, 1)],
        "dome",
    )
}

/// One generated solid per family at a fixed seed.
pub fn family_samples(seed: u64) -> Vec<Solid> {
    Family::ALL
        .iter()
        .map(|&f| generate_solid_retrying(&FamilySpec::new(f), seed).expect("family sampling converges"))
        .collect()
}

/// Every named fixture plus one sample per family.
pub fn all() -> Vec<Solid> {
    let mut out = vec![cube(), cube_with_hole(), sphere(), torus(), cone_frustum(), dome()];
    out.extend(family_samples(7));
    out
}

/// Fixtures without full rotational symmetry about their center.
pub fn asymmetric() -> Vec<Solid> {
    all().into_iter().filter(|s| s.name != "sphere").collect()
}
