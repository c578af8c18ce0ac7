use fovnet_core::brep::{random_rotation, SurfaceKind};
use fovnet_core::fixtures;
use fovnet_core::graph::{build_face_graph, build_face_graph_res, ATTR_DIM};

#[test]
fn cube_graph() {
    let g = build_face_graph(&fixtures::cube());
    assert_eq!(g.len(), 6);
    assert_eq!(g.edges.len(), 12);
    assert!(g.degrees().iter().all(|&d| d == 4));
    for node in &g.nodes {
        assert_eq!(node.attributes[..6], [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((node.attributes[6] - 1.0 / 3.0).abs() < 1e-3);
    }
    for &(a, b) in &g.edges {
        assert!(a < b);
        assert!(g.has_edge(b, a));
        assert!(g.neighbors(a).contains(&b) && g.neighbors(b).contains(&a));
    }
}

#[test]
fn cube_with_hole_graph() {
    let solid = fixtures::cube_with_hole();
    let g = build_face_graph(&solid);
    assert_eq!(g.len(), 7);
    let wall = solid.faces.iter().position(|f| f.kind() == SurfaceKind::Cylinder).unwrap();
    assert_eq!(g.nodes[wall].attributes[..6], [0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    assert!(g.nodes[wall].attributes[6] > 0.0);
    // faces are ordered +z, -z, +x, -x, +y, -y, wall
    assert_eq!(g.degrees(), vec![5, 5, 4, 4, 4, 4, 2]);
    assert!(g.has_edge(0, wall) && g.has_edge(1, wall));
    assert_eq!(g.labels, Some(vec![0, 0, 0, 0, 0, 0, 1]));
}

#[test]
fn payload_shapes() {
    for solid in fixtures::all() {
        let g = build_face_graph(&solid);
        assert_eq!(g.len(), solid.faces.len());
        for (node, face) in g.nodes.iter().zip(&solid.faces) {
            assert_eq!(node.face_id, face.id);
            assert_eq!((node.lrf.n_u, node.lrf.n_v, node.lrf.samples.len()), (10, 10, 700));
            assert_eq!((node.outward.n_el, node.outward.n_az, node.outward.cells.len()), (6, 12, 216));
            assert_eq!((node.inward.n_el, node.inward.n_az, node.inward.cells.len()), (6, 12, 216));
            assert_eq!(node.attributes.len(), ATTR_DIM);
            assert_eq!(node.attributes[..6].iter().filter(|&&x| x == 1.0).count(), 1);
            assert!(node.attributes[6] >= 0.0);
        }
    }
}

#[test]
fn reduced_resolutions() {
    let cube = fixtures::cube();
    for (n_el, n_az) in [(4, 8), (2, 4), (1, 4), (1, 1)] {
        let g = build_face_graph_res(&cube, n_el, n_az);
        assert_eq!((g.nodes[0].inward.n_el, g.nodes[0].inward.n_az), (n_el, n_az));
    }
    // the single ray along -N from the top face lands on the bottom face
    let g = build_face_graph_res(&cube, 1, 1);
    let [flag, t, inc] = g.nodes[0].inward.cell(0, 0);
    assert_eq!(flag, 1.0);
    assert!((t - 1.0 / 3f64.sqrt()).abs() < 1e-12 && (inc - 1.0).abs() < 1e-12);
}

#[test]
fn graph_structure_is_pose_independent() {
    for solid in fixtures::all() {
        let a = build_face_graph(&solid);
        let b = build_face_graph(&solid.rotated(&random_rotation(8)));
        assert_eq!(a.edges, b.edges);
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.nodes.iter().map(|n| n.face_id).collect::<Vec<_>>(), b.nodes.iter().map(|n| n.face_id).collect::<Vec<_>>());
    }
}
