//! Rotation-invariant B-rep face descriptors.
//!
//! The crate covers the geometric half of the pipeline: analytic
//! B-rep solids ([`brep`]), STEP and `.brj` ingestion ([`step`], [`brj`]),
//! local-reference-frame UV grids ([`sampler`]), ray-cast field-of-view
//! grids ([`raycast`]), the face adjacency graph ([`graph`]) and a
//! deterministic synthetic dataset generator ([`dataset`]) with named
//! reference solids ([`fixtures`]).

pub mod brep;
pub mod brj;
pub mod dataset;
pub mod fixtures;
pub mod graph;
pub mod raycast;
pub mod sampler;
pub mod step;
