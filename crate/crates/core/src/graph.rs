//! Face-adjacency graph with per-face descriptor payloads.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::brep::{face_area, Face, Solid, SurfaceKind, GRID_RES};
use crate::raycast::{compute_fov_grids_res, FovGrid, N_AZ, N_EL};
use crate::sampler::{lrf_descriptor, LocalFrame, UvGrid};

/// Surface one-hot (five kinds plus "other") followed by face area.
pub const ATTR_DIM: usize = 7;
/// Midpoint-rule resolution for face areas.
pub const AREA_QUADRATURE: usize = 64;

pub type AttributeVector = [f64; ATTR_DIM];

pub fn attribute_vector(face: &Face) -> AttributeVector {
    let mut a = [0.0; ATTR_DIM];
    a[face.kind().one_hot_index()] = 1.0;
    a[ATTR_DIM - 1] = face_area(face, AREA_QUADRATURE);
    a
}

/// One-hot slot reserved for surfaces outside the supported kinds.
pub const OTHER_KIND_SLOT: usize = SurfaceKind::ALL.len();

#[derive(Debug, Clone, PartialEq)]
pub struct FaceNode {
    pub face_id: usize,
    pub frame: LocalFrame,
    pub lrf: UvGrid,
    pub outward: FovGrid,
    pub inward: FovGrid,
    pub attributes: AttributeVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceGraph {
    pub nodes: Vec<FaceNode>,
    /// Node-index pairs `(a, b)` with `a < b`, each stored once.
    pub edges: Vec<(usize, usize)>,
    pub labels: Option<Vec<i64>>,
}

impl FaceGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    pub fn neighbors(&self, node: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == node {
                    Some(b)
                } else if b == node {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }
}

/// Node-index adjacency of a solid: deduplicated, self-edges dropped.
pub fn adjacency(solid: &Solid) -> Vec<(usize, usize)> {
    let index: HashMap<usize, usize> = solid.faces.iter().enumerate().map(|(k, f)| (f.id, k)).collect();
    let set: BTreeSet<(usize, usize)> = solid
        .edges
        .iter()
        .filter_map(|(a, b)| Some((*index.get(a)?, *index.get(b)?)))
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    set.into_iter().collect()
}

/// Face labels, present only when every face carries one.
pub fn face_labels(solid: &Solid) -> Option<Vec<i64>> {
    solid.faces.iter().map(|f| f.label).collect()
}

/// Descriptors for one face at the given field-of-view resolution.
pub fn face_node(solid: &Solid, face: &Face, n_el: usize, n_az: usize) -> FaceNode {
    let (frame, lrf) = lrf_descriptor(face);
    let (outward, inward) = compute_fov_grids_res(solid, &frame, n_el, n_az);
    let node = FaceNode {
        face_id: face.id,
        frame,
        lrf,
        outward,
        inward,
        attributes: attribute_vector(face),
    };
    assert_eq!((node.lrf.n_u, node.lrf.n_v), (GRID_RES, GRID_RES));
    let fov_shape = if n_el * n_az == 1 { (1, 1) } else { (n_el, n_az) };
    assert_eq!((node.outward.n_el, node.outward.n_az), fov_shape);
    assert_eq!((node.inward.n_el, node.inward.n_az), fov_shape);
    node
}

pub fn build_face_graph(solid: &Solid) -> FaceGraph {
    build_face_graph_res(solid, N_EL, N_AZ)
}

pub fn build_face_graph_res(solid: &Solid, n_el: usize, n_az: usize) -> FaceGraph {
    FaceGraph {
        nodes: solid.faces.par_iter().map(|f| face_node(solid, f, n_el, n_az)).collect(),
        edges: adjacency(solid),
        labels: face_labels(solid),
    }
}
