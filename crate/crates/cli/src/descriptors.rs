//! Solid → descriptor container → network input.

use fovnet_core::brep::{Solid, GRID_RES};
use fovnet_core::graph::{adjacency, attribute_vector, face_labels, face_node};
use fovnet_core::raycast::{compute_fov_grids_res, N_AZ, N_EL};
use fovnet_core::sampler::{compute_local_frame, lrf_descriptor, sample_uv_grid};
use fovnet_nn::{FeatureConfig, GraphInput};
use rayon::prelude::*;

use crate::container::{flags, DescriptorContainer, FaceRecord};
use crate::CliError;

/// Field-of-view resolutions accepted by `--fov-res`.
pub const RESOLUTIONS: [(usize, usize); 5] = [(6, 12), (4, 8), (2, 4), (1, 4), (1, 1)];
pub const DEFAULT_RES: (usize, usize) = (N_EL, N_AZ);

/// Parses `ELxAZ`, restricted to [`RESOLUTIONS`].
pub fn parse_resolution(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::BadResolution(format!("{s:?}; expected one of 6x12, 4x8, 2x4, 1x4, 1x1"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let res = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    RESOLUTIONS.contains(&res).then_some(res).ok_or_else(bad)
}

pub fn resolution_name(res: (usize, usize)) -> String {
    format!("{}x{}", res.0, res.1)
}

/// Parses a comma-separated subset of `lrf, ov, iv, attributes, global-uv`,
/// or `topology`.
pub fn parse_features(s: &str) -> Result<FeatureConfig, CliError> {
    let mut f = FeatureConfig::NONE;
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part {
            "lrf" => f.lrf = true,
            "ov" => f.ov = true,
            "iv" => f.iv = true,
            "fov" => (f.ov, f.iv) = (true, true),
            "attributes" | "attrs" => f.attributes = true,
            "global-uv" => f.global_uv = true,
            "topology" => f.topology_only = true,
            other => return Err(CliError::BadArgument(format!("unknown feature {other:?}"))),
        }
    }
    f.validate().map_err(|e| CliError::BadArgument(e.to_string()))?;
    Ok(f)
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

/// Computes the payloads selected by `features` for every face.
pub fn extract(solid: &Solid, res: (usize, usize), features: &FeatureConfig) -> DescriptorContainer {
    let records = solid
        .faces
        .par_iter()
        .map(|face| {
            let (ov, iv) = if features.uses_fov() {
                let (o, i) = compute_fov_grids_res(solid, &compute_local_frame(face), res.0, res.1);
                (to_f32(&o.cells), to_f32(&i.cells))
            } else {
                (Vec::new(), Vec::new())
            };
            let grid = if features.lrf {
                to_f32(&lrf_descriptor(face).1.samples)
            } else if features.global_uv {
                to_f32(&sample_uv_grid(face).samples)
            } else {
                Vec::new()
            };
            FaceRecord {
                face_id: face.id as u32,
                grid,
                ov: if features.ov { ov } else { Vec::new() },
                iv: if features.iv { iv } else { Vec::new() },
                attrs: if features.attributes { to_f32(&attribute_vector(face)) } else { Vec::new() },
            }
        })
        .collect();
    let labels = face_labels(solid).map(|l| l.into_iter().map(|x| x as i32).collect());
    let mut bits = 0;
    for (on, bit) in [
        (features.uses_grid(), flags::GRID),
        (features.global_uv, flags::GLOBAL_GRID),
        (features.ov, flags::OV),
        (features.iv, flags::IV),
        (features.attributes, flags::ATTRS),
        (labels.is_some(), flags::LABELS),
    ] {
        if on {
            bits |= bit;
        }
    }
    let fov_shape = if res.0 * res.1 == 1 { (1, 1) } else { res };
    DescriptorContainer {
        flags: bits,
        uv_h: GRID_RES as u32,
        uv_w: GRID_RES as u32,
        fov_el: fov_shape.0 as u32,
        fov_az: fov_shape.1 as u32,
        records,
        edges: adjacency(solid).into_iter().map(|(a, b)| (a as u32, b as u32)).collect(),
        labels,
    }
}

/// Network input with payloads laid out per face; absent payloads get zero
/// spatial size.
pub fn to_graph_input(c: &DescriptorContainer, class: usize) -> GraphInput<f32> {
    let n = c.records.len();
    let cat = |f: fn(&FaceRecord) -> &Vec<f32>| c.records.iter().flat_map(|r| f(r).iter().copied()).collect::<Vec<f32>>();
    let (uv_h, uv_w) = if c.has(flags::GRID) { (c.uv_h as usize, c.uv_w as usize) } else { (0, 0) };
    let fov_on = c.has(flags::OV) || c.has(flags::IV);
    let (fov_h, fov_w) = if fov_on { (c.fov_el as usize, c.fov_az as usize) } else { (0, 0) };
    let fov_len = n * fov_h * fov_w * 3;
    let or_zero = |v: Vec<f32>| if v.is_empty() { vec![0.0; fov_len] } else { v };
    let attrs = if c.has(flags::ATTRS) { cat(|r| &r.attrs) } else { vec![0.0; n * 7] };
    GraphInput {
        n,
        uv: cat(|r| &r.grid),
        uv_h,
        uv_w,
        ov: or_zero(cat(|r| &r.ov)),
        iv: or_zero(cat(|r| &r.iv)),
        fov_h,
        fov_w,
        attrs,
        edges: c.edges.iter().map(|&(a, b)| (a as usize, b as usize)).collect(),
        class,
        node_labels: match &c.labels {
            Some(l) if l.iter().all(|&x| x >= 0) => l.iter().map(|&x| x as usize).collect(),
            _ => Vec::new(),
        },
    }
}

/// Largest per-channel deviation of the LRF, OV, IV and global UV payloads
/// between two poses of one solid.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Deviation {
    pub lrf: f64,
    pub ov: f64,
    pub iv: f64,
    pub global_uv: f64,
}

impl Deviation {
    pub fn invariant_max(&self) -> f64 {
        self.lrf.max(self.ov).max(self.iv)
    }

    pub fn max(self, o: Deviation) -> Deviation {
        Deviation { lrf: self.lrf.max(o.lrf), ov: self.ov.max(o.ov), iv: self.iv.max(o.iv), global_uv: self.global_uv.max(o.global_uv) }
    }
}

/// Double-precision descriptor deviation between two solids with matching faces.
pub fn deviation(a: &Solid, b: &Solid) -> Deviation {
    a.faces
        .par_iter()
        .zip(&b.faces)
        .map(|(f, g)| {
            let (x, y) = (face_node(a, f, N_EL, N_AZ), face_node(b, g, N_EL, N_AZ));
            Deviation {
                lrf: x.lrf.max_abs_diff(&y.lrf),
                ov: x.outward.max_abs_diff(&y.outward),
                iv: x.inward.max_abs_diff(&y.inward),
                global_uv: sample_uv_grid(f).max_abs_diff(&sample_uv_grid(g)),
            }
        })
        .reduce(Deviation::default, Deviation::max)
}
