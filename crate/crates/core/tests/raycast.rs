use std::f64::consts::{PI, TAU};

use fovnet_core::brep::{Rotation, SurfaceKind, Vec3};
use fovnet_core::fixtures;
use fovnet_core::raycast::{
    build_tessellation_oracle, cast_ray, compute_fov_grid, compute_fov_grids, elevation, hemisphere_directions, oracle_cast,
    write_fov_debug_rows, Hemisphere, Ray, DEBUG_CSV_HEADER,
};
use fovnet_core::sampler::compute_local_frame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIDE: f64 = 0.577_350_269_189_625_8;

#[test]
fn cube_inward_examples() {
    let cube = fixtures::cube();
    let top = &cube.faces[0];
    let frame = compute_local_frame(top);
    assert!((frame.origin - Vec3::new(0.0, 0.0, SIDE / 2.0)).norm() < 1e-12);
    assert!((frame.n - Vec3::z()).norm() < 1e-12);
    let inward = hemisphere_directions(&frame, 6, 12, Hemisphere::Inward);

    let steep = cast_ray(&cube, &Ray::new(frame.origin, inward[5 * 12])).unwrap();
    let s825 = 82.5f64.to_radians().sin();
    assert_eq!(steep.face_id, 1);
    assert!((steep.t - SIDE / s825).abs() < 1e-12);
    assert!((steep.t - 0.58234).abs() < 1e-5);
    assert!((steep.incidence - 0.99144).abs() < 1e-5);

    let shallow = cast_ray(&cube, &Ray::new(frame.origin, inward[0])).unwrap();
    assert_eq!(shallow.face_id, 2);
    assert!((shallow.t - 0.29117).abs() < 1e-5);
    assert!((shallow.incidence - 0.99144).abs() < 1e-5);
}

#[test]
fn cube_top_face_grids() {
    let cube = fixtures::cube();
    let frame = compute_local_frame(&cube.faces[0]);
    let (ov, iv) = compute_fov_grids(&cube, &frame);
    assert!(ov.cells.iter().all(|&c| c == 0.0));
    let t = SIDE / 82.5f64.to_radians().sin();
    for j in 0..12 {
        let [flag, dist, _] = iv.cell(5, j);
        assert_eq!(flag, 1.0);
        assert!((dist - t).abs() < 1e-12, "column {j}");
    }
}

#[test]
fn convex_outward_rays_miss() {
    for solid in [fixtures::cube(), fixtures::sphere()] {
        for face in &solid.faces {
            let frame = compute_local_frame(face);
            let ov = compute_fov_grid(&solid, &frame, 6, 12, Hemisphere::Outward);
            assert_eq!(ov.hit_count(), 0, "{}", solid.name);
        }
    }
}

#[test]
fn inward_rays_of_closed_convex_solids_hit() {
    for solid in [fixtures::cube(), fixtures::sphere(), fixtures::cone_frustum()] {
        for face in &solid.faces {
            let iv = compute_fov_grid(&solid, &compute_local_frame(face), 6, 12, Hemisphere::Inward);
            // rows from 22.5 degrees of elevation upwards
            for i in 1..6 {
                for j in 0..12 {
                    assert!(iv.hit(i, j), "{} face {} cell ({i},{j})", solid.name, face.id);
                }
            }
        }
    }
}

#[test]
fn empty_cells_are_all_zero() {
    for solid in fixtures::all() {
        for face in &solid.faces {
            let (ov, iv) = compute_fov_grids(&solid, &compute_local_frame(face));
            for g in [&ov, &iv] {
                for c in g.cells.chunks(3) {
                    assert!(c[0] == 0.0 || c[0] == 1.0);
                    if c[0] == 0.0 {
                        assert_eq!(c, [0.0, 0.0, 0.0]);
                    } else {
                        assert!(c[1] > 0.0 && (-1.0..=1.0).contains(&c[2]));
                    }
                }
            }
        }
    }
}

#[test]
fn azimuth_bins_shift_under_one_bin_rotation() {
    let cube = fixtures::cube();
    let frame = compute_local_frame(&cube.faces[0]);
    // the top-face center lies on the z axis, so the plane of the face maps onto itself
    let turned = cube.rotated(&Rotation::from_axis_angle(Vec3::z(), PI / 6.0));
    for hemi in [Hemisphere::Outward, Hemisphere::Inward] {
        let before = compute_fov_grid(&cube, &frame, 6, 12, hemi);
        let after = compute_fov_grid(&turned, &frame, 6, 12, hemi);
        for i in 0..6 {
            for j in 0..12 {
                let (a, b) = (after.cell(i, j), before.cell(i, (j + 11) % 12));
                for c in 0..3 {
                    assert!((a[c] - b[c]).abs() <= 1e-6, "({i},{j}) {a:?} vs {b:?}");
                }
            }
        }
    }
}

#[test]
fn oracle_triangle_count() {
    assert_eq!(build_tessellation_oracle(&fixtures::cube(), 32).triangles.len(), 6 * 2 * 31 * 31);
}

#[test]
fn oracle_vertices_lie_on_their_surfaces() {
    let solid = fixtures::torus();
    let oracle = build_tessellation_oracle(&solid, 32);
    for tri in &oracle.triangles {
        let face = solid.face(tri.face_id).unwrap();
        for (p, uv) in tri.vertices.iter().zip(&tri.uv) {
            assert!((face.point(uv[0], uv[1]) - p).norm() < 1e-9);
        }
    }
}

/// Random descriptor rays: a random face center, hemisphere, elevation bin
/// of the 6×12 grid and a uniform azimuth. Returns the hit-flag agreement
/// rate, the worst `|Δt|` and the worst `|Δt|·|incidence|` over non-grazing
/// hits of the same face.
fn oracle_agreement(solid: &fovnet_core::brep::Solid, rays: usize, seed: u64) -> (f64, f64, f64) {
    let oracle = build_tessellation_oracle(solid, 64);
    let frames: Vec<_> = solid.faces.iter().map(compute_local_frame).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agree = 0usize;
    let (mut worst_t, mut worst_normal) = (0.0f64, 0.0f64);
    for _ in 0..rays {
        let frame = &frames[rng.gen_range(0..frames.len())];
        let el = elevation(rng.gen_range(0..6), 6);
        let az: f64 = rng.gen_range(0.0..TAU);
        let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let d = (frame.u * az.cos() + frame.v * az.sin()) * el.cos() + frame.n * (side * el.sin());
        let ray = Ray::new(frame.origin, d);
        let a = cast_ray(solid, &ray);
        let b = oracle_cast(&oracle, solid, &ray);
        if a.is_some() == b.is_some() {
            agree += 1;
        }
        if let (Some(a), Some(b)) = (a, b) {
            if a.face_id == b.face_id && a.incidence.abs() >= 0.05 && b.incidence.abs() >= 0.05 {
                worst_t = worst_t.max((a.t - b.t).abs());
                worst_normal = worst_normal.max((a.t - b.t).abs() * a.incidence.abs());
            }
        }
    }
    (agree as f64 / rays as f64, worst_t, worst_normal)
}

#[test]
fn analytic_caster_matches_tessellation_oracle() {
    for (k, solid) in fixtures::all().iter().enumerate() {
        let (rate, worst_t, worst_normal) = oracle_agreement(solid, 2000, k as u64);
        assert!(rate >= 0.99, "{}: agreement {rate}", solid.name);
        // chord error of a 64-vertex lattice, measured along the surface normal
        assert!(worst_normal <= 1e-3, "{}: normal gap {worst_normal:e}", solid.name);
        // planar solids tessellate exactly
        if solid.faces.iter().all(|f| f.kind() == SurfaceKind::Plane) {
            assert!(worst_t <= 1e-9, "{}: distance gap {worst_t:e}", solid.name);
        }
    }
}

#[test]
fn debug_rows_follow_header() {
    let cube = fixtures::cube();
    let frame = compute_local_frame(&cube.faces[0]);
    let iv = compute_fov_grid(&cube, &frame, 2, 4, Hemisphere::Inward);
    let mut out = Vec::new();
    write_fov_debug_rows(&mut out, 0, &iv).unwrap();
    let text = String::from_utf8(out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 8);
    let columns = DEBUG_CSV_HEADER.split(',').count();
    assert!(rows.iter().all(|r| r.split(',').count() == columns));
    assert!(rows[0].starts_with("0,inward,0,0,1,"));
}
