use std::collections::BTreeSet;
use std::path::PathBuf;

use fovnet_core::brep::SurfaceKind;
use fovnet_core::step::{
    parse_part21, parse_step_bytes, print_tokens, read_step, tokenize_part21, StepError,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bytes(name: &str) -> Vec<u8> {
    std::fs::read(fixture(name)).unwrap()
}

/// cube.step: 8 vertices (point + vertex), 12 line edges (direction, vector,
/// point, line, edge curve), 6 faces (4 oriented edges, loop, bound, 4-entity
/// placement, plane, face), then shell, solid and one unreferenced context.
const CUBE_ENTITY_COUNT: usize = 8 * 2 + 12 * 5 + 6 * 12 + 3;

#[test]
fn cube_entity_count() {
    let graph = parse_part21(&tokenize_part21(&bytes("cube.step")).unwrap()).unwrap();
    assert_eq!(graph.len(), 151);
    assert_eq!(graph.len(), CUBE_ENTITY_COUNT);
    assert!(graph.header("FILE_SCHEMA").is_some());
    assert_eq!(graph.of_type("ADVANCED_FACE").count(), 6);
}

#[test]
fn cube_topology() {
    let solid = read_step(fixture("cube.step")).unwrap();
    assert_eq!(solid.faces.len(), 6);
    assert_eq!(solid.edges.len(), 12);
    assert_eq!(solid.name, "cube");
    for f in &solid.faces {
        assert_eq!(f.kind(), SurfaceKind::Plane);
        let deg = solid.edges.iter().filter(|&&(a, b)| a == f.id || b == f.id).count();
        assert_eq!(deg, 4);
        assert_eq!(f.loops.len(), 1);
        assert!((f.surface.domain.width() - 10.0).abs() < 1e-9);
        assert!((f.surface.domain.height() - 10.0).abs() < 1e-9);
        // outward normal points away from the cube center
        let (uc, vc) = f.surface.domain.center();
        let p = f.point(uc, vc);
        let n = f.outward_normal(uc, vc);
        assert!((p - nalgebra::Vector3::repeat(5.0)).dot(&n) > 4.9);
    }
    // opposite faces never share an edge
    for &(a, b) in &solid.edges {
        let na = solid.faces[a].outward_normal(5.0, 5.0);
        let nb = solid.faces[b].outward_normal(5.0, 5.0);
        assert!(na.dot(&nb).abs() < 1e-12);
    }
}

#[test]
fn cylinder_topology_and_seam() {
    let solid = read_step(fixture("cylinder.step")).unwrap();
    assert_eq!(solid.faces.len(), 3);
    assert_eq!(solid.edges, vec![(0, 1), (0, 2)]);
    let side = &solid.faces[0];
    assert_eq!(side.kind(), SurfaceKind::Cylinder);
    let d = side.surface.domain;
    assert!((d.width() - std::f64::consts::TAU).abs() < 1e-9, "{d:?}");
    assert!((d.height() - 20.0).abs() < 1e-9);
    for cap in &solid.faces[1..] {
        assert_eq!(cap.kind(), SurfaceKind::Plane);
        assert!(cap.loops[0].distinct_vertices() >= 32);
        // loop lies on the radius-5 circle
        for p in &cap.loops[0].points {
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 5.0).abs() < 1e-9);
        }
        assert!(cap.contains_uv(0.0, 0.0));
        assert!(!cap.contains_uv(4.0, 4.0));
    }
    // the side cap-normal convention: bottom cap faces -z
    assert!(solid.faces[1].outward_normal(0.0, 0.0).z < -0.99);
    assert!(solid.faces[2].outward_normal(0.0, 0.0).z > 0.99);
}

#[test]
fn spline_face_is_unsupported() {
    match read_step(fixture("bspline_face.step")) {
        Err(StepError::UnsupportedEntity(name)) => assert_eq!(name, "B_SPLINE_SURFACE"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_fixtures_report_positions() {
    match parse_step_bytes(&bytes("malformed.step")) {
        Err(StepError::Parse { line, col, .. }) => assert_eq!((line, col), (9, 27)),
        other => panic!("{other:?}"),
    }
    match parse_step_bytes(&bytes("unterminated.step")) {
        Err(StepError::Lex { line, col, .. }) => assert_eq!((line, col), (6, 20)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn printer_round_trip_on_fixtures() {
    for name in ["cube.step", "cylinder.step", "bspline_face.step", "malformed.step"] {
        let toks = tokenize_part21(&bytes(name)).unwrap();
        let again = tokenize_part21(print_tokens(&toks).as_bytes()).unwrap();
        let a: Vec<_> = toks.into_iter().map(|t| t.kind).collect();
        let b: Vec<_> = again.into_iter().map(|t| t.kind).collect();
        assert_eq!(a, b, "{name}");
    }
}

fn permute_data_lines(src: &str, seed: u64) -> String {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let lines: Vec<&str> = src.lines().collect();
    let start = lines.iter().position(|l| *l == "DATA;").unwrap() + 1;
    let end = start + lines[start..].iter().position(|l| *l == "ENDSEC;").unwrap();
    let mut body = lines[start..end].to_vec();
    body.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let mut out: Vec<&str> = lines[..start].to_vec();
    out.extend(body);
    out.extend(&lines[end..]);
    out.join("\n")
}

#[test]
fn line_order_does_not_matter() {
    for name in ["cube.step", "cylinder.step"] {
        let src = String::from_utf8(bytes(name)).unwrap();
        let reference = parse_step_bytes(src.as_bytes()).unwrap();
        for seed in 0..5 {
            let shuffled = permute_data_lines(&src, seed);
            assert_ne!(shuffled, src);
            let s = parse_step_bytes(shuffled.as_bytes()).unwrap();
            assert_eq!(s, reference, "{name} seed {seed}");
        }
    }
}

#[test]
fn adjacency_matches_shared_edge_curves() {
    // every EDGE_CURVE of the cube is used by exactly two faces
    let solid = read_step(fixture("cube.step")).unwrap();
    let pairs: BTreeSet<_> = solid.edges.iter().copied().collect();
    assert_eq!(pairs.len(), 12);
    assert!(pairs.iter().all(|&(a, b)| a < b));
}

#[test]
fn brj_round_trip_is_exact() {
    use fovnet_core::brj;
    for name in ["cube.step", "cylinder.step"] {
        let solid = read_step(fixture(name)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.brj");
        brj::save_brj(&solid, &path).unwrap();
        assert_eq!(brj::load_brj(&path).unwrap(), solid, "{name}");
    }
}
