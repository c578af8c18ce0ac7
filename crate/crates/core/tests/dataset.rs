use std::collections::BTreeSet;

use fovnet_core::brep::{SurfaceKind, Vec3};
use fovnet_core::dataset::{
    axis_rotation, build_family, generate_dataset, generate_in_memory, generate_solid_retrying, subset, DatasetConfig,
    DatasetError, DatasetManifest, Family, FamilySpec, Params, Role, Split,
};
use fovnet_core::raycast::{cast_ray, intersect_ray_surface, Ray};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(feature: f64) -> Params {
    Params {
        size: Vec3::new(1.0, 1.2, 0.8),
        feature,
        depth: 0.4,
        offset: [0.3, -0.2],
    }
}

fn roles(solid: &fovnet_core::brep::Solid) -> Vec<i64> {
    solid.faces.iter().map(|f| f.label.unwrap()).collect()
}

#[test]
fn box_topology() {
    let s = build_family(Family::Box, &params(0.5)).unwrap();
    assert_eq!((s.faces.len(), s.edges.len()), (6, 12));
    assert!(roles(&s).iter().all(|&r| r == Role::Stock as i64));
    assert_eq!(s.class_label, Some(0));
}

#[test]
fn through_hole_topology() {
    let s = build_family(Family::BoxThroughHole, &params(0.5)).unwrap();
    assert_eq!((s.faces.len(), s.edges.len()), (7, 14));
    let walls: Vec<_> = s.faces.iter().filter(|f| f.label == Some(Role::HoleWall as i64)).collect();
    assert_eq!(walls.len(), 1);
    assert_eq!(walls[0].kind(), SurfaceKind::Cylinder);
    let pierced = s.faces.iter().filter(|f| f.loops.iter().any(|l| !l.outer)).count();
    assert_eq!(pierced, 2);
}

#[test]
fn washer_topology() {
    let s = build_family(Family::Washer, &params(0.5)).unwrap();
    assert_eq!((s.faces.len(), s.edges.len()), (4, 4));
    let kinds: Vec<_> = s.faces.iter().map(|f| f.kind()).collect();
    assert_eq!(kinds.iter().filter(|k| **k == SurfaceKind::Cylinder).count(), 2);
    let annular = s
        .faces
        .iter()
        .filter(|f| f.kind() == SurfaceKind::Plane && f.loops.len() == 2)
        .count();
    assert_eq!(annular, 2);
}

#[test]
fn remaining_family_sizes() {
    let s = build_family(Family::BoxSlot, &params(0.5)).unwrap();
    assert_eq!((s.faces.len(), s.edges.len()), (10, 24));
    let s = build_family(Family::CylinderCapped, &params(0.5)).unwrap();
    assert_eq!((s.faces.len(), s.edges.len()), (3, 2));
    let s = build_family(Family::LBracket, &params(0.5)).unwrap();
    assert_eq!((s.faces.len(), s.edges.len()), (8, 18));
}

#[test]
fn oversized_features_are_rejected() {
    for f in [Family::BoxThroughHole, Family::BoxSlot, Family::Washer] {
        assert!(matches!(build_family(f, &params(0.99)), Err(DatasetError::InvalidParams(_))), "{f:?}");
    }
}

/// Number of trim-valid surface crossings along a ray.
fn crossings(solid: &fovnet_core::brep::Solid, ray: &Ray) -> usize {
    solid
        .faces
        .iter()
        .map(|f| {
            intersect_ray_surface(&f.surface, ray)
                .into_iter()
                .filter(|&(_, u, v)| f.contains_uv(u, v))
                .count()
        })
        .sum()
}

#[test]
fn generated_solids_are_closed() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for family in Family::ALL {
        for seed in 0..5 {
            let s = generate_solid_retrying(&FamilySpec::new(family), seed).unwrap();
            s.validate().unwrap();
            let (lo, hi) = s.bounding_box();
            assert!(((hi - lo).norm() - 1.0).abs() < 1e-9);
            assert!(((hi + lo) * 0.5).norm() < 1e-9);
            for face in &s.faces {
                // a parameter point on the trimmed face; the domain center may sit in a hole
                let d = face.surface.domain;
                let (u, v) = (0..100)
                    .map(|k| d.cell_center(k / 10, 10, k % 10, 10))
                    .find(|&(u, v)| face.contains_uv(u, v))
                    .unwrap();
                let p = face.point(u, v);
                let n = face.outward_normal(u, v);
                assert!(cast_ray(&s, &Ray::new(p, -n)).is_some(), "{family:?} face {}", face.id);
                // from just inside, a generic direction crosses the boundary an odd number of times
                let inside = p - n * 1e-4;
                let dir = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                assert_eq!(crossings(&s, &Ray::new(inside, dir)) % 2, 1, "{family:?} face {}", face.id);
            }
        }
    }
}

#[test]
fn stratified_splits() {
    let data = generate_in_memory(&DatasetConfig::new(100, 5)).unwrap();
    let m = &data.manifest;
    assert_eq!(m.entries.len(), 600);
    assert_eq!((m.split_len(Split::Train), m.split_len(Split::Val), m.split_len(Split::Test)), (480, 60, 60));
    for split in [Split::Train, Split::Val, Split::Test] {
        let h = m.split_histogram(split);
        assert_eq!(h.len(), 6);
        let expected = if split == Split::Train { 80 } else { 10 };
        assert!(h.values().all(|&c| c == expected), "{split:?} {h:?}");
    }
    let paths: BTreeSet<_> = m.entries.iter().map(|e| &e.path).collect();
    assert_eq!(paths.len(), 600);
    for (e, s) in m.entries.iter().zip(&data.solids) {
        assert_eq!(s.class_label, Some(e.class));
        assert!(s.faces.iter().all(|f| f.label.is_some()));
    }
}

#[test]
fn count_below_minimum_is_an_error() {
    assert!(matches!(generate_in_memory(&DatasetConfig::new(0, 1)), Err(DatasetError::CountTooSmall(0))));
}

#[test]
fn manifests_are_byte_identical_and_round_trip() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = DatasetConfig::new(10, 42);
    let (pa, data) = generate_dataset(&config, a.path()).unwrap();
    let (pb, _) = generate_dataset(&config, b.path()).unwrap();
    let bytes = std::fs::read(&pa).unwrap();
    assert_eq!(bytes, std::fs::read(&pb).unwrap());
    assert!(String::from_utf8_lossy(&bytes).starts_with("# seed=42\npath,class,split,rot_w,rot_x,rot_y,rot_z\n"));
    let loaded = DatasetManifest::load(&pa).unwrap();
    assert_eq!(loaded, data.manifest);
    for (e, s) in loaded.entries.iter().zip(&data.solids) {
        let back = fovnet_core::brj::load_brj(a.path().join(&e.path)).unwrap();
        assert_eq!(&back, s);
        assert_eq!(std::fs::read(a.path().join(&e.path)).unwrap(), std::fs::read(b.path().join(&e.path)).unwrap());
    }
}

#[test]
fn subsets_are_nested_and_keep_holdout() {
    let m = generate_in_memory(&DatasetConfig::new(20, 3)).unwrap().manifest;
    let train = m.split_len(Split::Train);
    assert_eq!(subset(&m, train, 9).unwrap(), m);
    let s25 = subset(&m, 25, 9).unwrap();
    let s50 = subset(&m, 50, 9).unwrap();
    assert_eq!(s25.split_len(Split::Train), 25);
    assert_eq!(s50.split_len(Split::Train), 50);
    let p50: BTreeSet<_> = s50.split(Split::Train).map(|e| e.path.clone()).collect();
    assert!(s25.split(Split::Train).all(|e| p50.contains(&e.path)));
    for split in [Split::Val, Split::Test] {
        assert_eq!(s25.split(split).collect::<Vec<_>>(), m.split(split).collect::<Vec<_>>());
    }
    assert_ne!(subset(&m, 25, 10).unwrap(), s25);
    assert!(matches!(subset(&m, train + 1, 9), Err(DatasetError::SubsetTooLarge { .. })));
}

#[test]
fn axis_rotations_are_the_cube_group() {
    let mut seen = BTreeSet::new();
    for k in 0..24 {
        let m = axis_rotation(k).matrix();
        let rounded: Vec<i64> = m.iter().map(|x| x.round() as i64).collect();
        assert!(m.iter().zip(&rounded).all(|(x, r)| (x - *r as f64).abs() <= 1e-15));
        assert_eq!(rounded.iter().filter(|&&r| r != 0).count(), 3);
        seen.insert(rounded);
    }
    assert_eq!(seen.len(), 24);
}

#[test]
fn axis_turns_keep_labels_and_normalization() {
    let plain = generate_in_memory(&DatasetConfig::new(10, 4)).unwrap();
    let turned = generate_in_memory(&DatasetConfig { axis_turns: true, ..DatasetConfig::new(10, 4) }).unwrap();
    assert_eq!(plain.manifest, turned.manifest);
    let mut moved = 0;
    for (a, b) in plain.solids.iter().zip(&turned.solids) {
        assert_eq!(roles(a), roles(b));
        assert_eq!(a.edges, b.edges);
        let (lo, hi) = b.bounding_box();
        assert!(((hi - lo).norm() - 1.0).abs() <= 1e-9 && ((hi + lo) * 0.5).norm() <= 1e-9);
        let normals = |s: &fovnet_core::brep::Solid| s.faces.iter().map(|f| f.surface.placement.z).collect::<Vec<Vec3>>();
        if normals(a).iter().zip(normals(b)).any(|(x, y)| (x - y).norm() > 1e-6) {
            moved += 1;
        }
    }
    assert!(moved > plain.solids.len() / 2, "{moved}");
}
