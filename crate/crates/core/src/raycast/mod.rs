//! Hemisphere ray casting from face centers into the solid and its
//! surroundings, assembled into field-of-view grids.

mod intersect;
mod oracle;

use std::io::{self, Write};

pub use intersect::{intersect_ray_surface, quartic_real_roots, QUARTIC_RESIDUAL, TANGENCY_TOL};
pub use oracle::{build_tessellation_oracle, oracle_cast, TessellationOracle, Triangle};

use crate::brep::{Face, Solid, Vec3};
use crate::sampler::LocalFrame;

/// Self-hit offset in normalized model units.
pub const T_MIN: f64 = 1e-6;
/// Hits closer than this in `t` are ties, resolved towards the lower face id.
pub const T_TIE: f64 = 1e-9;
/// Default elevation and azimuth bin counts.
pub const N_EL: usize = 6;
pub const N_AZ: usize = 12;
/// Channels per FoV cell: hit flag, distance, incidence.
pub const FOV_CHANNELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit length.
    pub direction: Vec3,
    pub t_min: f64,
}

impl Ray {
    /// Ray with the default self-hit offset; `direction` is normalized.
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Self {
            origin,
            direction: direction.normalize(),
            t_min: T_MIN,
        }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub face_id: usize,
    /// Outward normal of the hit face.
    pub normal: Vec3,
    /// `direction · normal`, in `[-1, 1]`.
    pub incidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hemisphere {
    Outward,
    Inward,
}

impl Hemisphere {
    pub fn name(self) -> &'static str {
        match self {
            Hemisphere::Outward => "outward",
            Hemisphere::Inward => "inward",
        }
    }

    fn axis_sign(self) -> f64 {
        match self {
            Hemisphere::Outward => 1.0,
            Hemisphere::Inward => -1.0,
        }
    }
}

/// `n_el × n_az × 3` cells, elevation-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FovGrid {
    pub n_el: usize,
    pub n_az: usize,
    pub hemisphere: Hemisphere,
    pub cells: Vec<f64>,
    /// Face hit by each cell's ray, for diagnostics.
    pub hit_faces: Vec<Option<usize>>,
}

impl FovGrid {
    pub fn empty(n_el: usize, n_az: usize, hemisphere: Hemisphere) -> Self {
        Self {
            n_el,
            n_az,
            hemisphere,
            cells: vec![0.0; n_el * n_az * FOV_CHANNELS],
            hit_faces: vec![None; n_el * n_az],
        }
    }

    pub fn cell(&self, i: usize, j: usize) -> [f64; 3] {
        let k = (i * self.n_az + j) * FOV_CHANNELS;
        [self.cells[k], self.cells[k + 1], self.cells[k + 2]]
    }

    pub fn hit(&self, i: usize, j: usize) -> bool {
        self.cell(i, j)[0] != 0.0
    }

    fn set(&mut self, i: usize, j: usize, hit: Option<Hit>) {
        let k = i * self.n_az + j;
        let values = match hit {
            Some(h) => [1.0, h.t, h.incidence],
            None => [0.0; 3],
        };
        self.cells[k * FOV_CHANNELS..(k + 1) * FOV_CHANNELS].copy_from_slice(&values);
        self.hit_faces[k] = hit.map(|h| h.face_id);
    }

    pub fn hit_count(&self) -> usize {
        self.cells.chunks(FOV_CHANNELS).filter(|c| c[0] != 0.0).count()
    }

    pub fn max_abs_diff(&self, other: &FovGrid) -> f64 {
        assert_eq!(self.cells.len(), other.cells.len());
        self.cells
            .iter()
            .zip(&other.cells)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Elevation of bin `i` measured from the tangent plane, at the bin center.
pub fn elevation(i: usize, n_el: usize) -> f64 {
    (i as f64 + 0.5) * std::f64::consts::FRAC_PI_2 / n_el as f64
}

/// Azimuth of bin `j` from `U` towards `V`, at the bin's left edge.
pub fn azimuth(j: usize, n_az: usize) -> f64 {
    j as f64 * std::f64::consts::TAU / n_az as f64
}

/// Ray directions, elevation-major; the 1×1 grid is the single ray along `±N`.
pub fn hemisphere_directions(frame: &LocalFrame, n_el: usize, n_az: usize, hemisphere: Hemisphere) -> Vec<Vec3> {
    assert!(n_el >= 1 && n_az >= 1, "empty direction grid");
    let axis = frame.n * hemisphere.axis_sign();
    if n_el == 1 && n_az == 1 {
        return vec![axis];
    }
    let mut out = Vec::with_capacity(n_el * n_az);
    for i in 0..n_el {
        let (st, ct) = elevation(i, n_el).sin_cos();
        for j in 0..n_az {
            let (sp, cp) = azimuth(j, n_az).sin_cos();
            out.push((frame.u * cp + frame.v * sp) * ct + axis * st);
        }
    }
    out
}

/// Nearest trim-valid hit on a single face.
pub fn cast_ray_face(face: &Face, ray: &Ray) -> Option<Hit> {
    intersect_ray_surface(&face.surface, ray)
        .into_iter()
        .find(|&(_, u, v)| face.contains_uv(u, v))
        .map(|(t, u, v)| {
            let normal = face.outward_normal(u, v);
            Hit {
                t,
                face_id: face.id,
                normal,
                incidence: ray.direction.dot(&normal).clamp(-1.0, 1.0),
            }
        })
}

/// Nearest trim-valid hit over all faces, the originating face included.
/// Hits on a shared boundary curve are ties; the lowest face id wins.
pub fn cast_ray(solid: &Solid, ray: &Ray) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for face in &solid.faces {
        if let Some(h) = cast_ray_face(face, ray) {
            let better = best.is_none_or(|b| {
                h.t < b.t - T_TIE || ((h.t - b.t).abs() <= T_TIE && h.face_id < b.face_id)
            });
            if better {
                best = Some(h);
            }
        }
    }
    best
}

/// Casts one hemisphere's rays from `frame.origin`.
pub fn compute_fov_grid(solid: &Solid, frame: &LocalFrame, n_el: usize, n_az: usize, hemisphere: Hemisphere) -> FovGrid {
    let dirs = hemisphere_directions(frame, n_el, n_az, hemisphere);
    let (rows, cols) = if dirs.len() == 1 { (1, 1) } else { (n_el, n_az) };
    let mut grid = FovGrid::empty(rows, cols, hemisphere);
    for (k, d) in dirs.into_iter().enumerate() {
        grid.set(k / cols, k % cols, cast_ray(solid, &Ray::new(frame.origin, d)));
    }
    grid
}

/// Outward (OV) and inward (IV) grids for a face at the default resolution.
pub fn compute_fov_grids(solid: &Solid, frame: &LocalFrame) -> (FovGrid, FovGrid) {
    compute_fov_grids_res(solid, frame, N_EL, N_AZ)
}

pub fn compute_fov_grids_res(solid: &Solid, frame: &LocalFrame, n_el: usize, n_az: usize) -> (FovGrid, FovGrid) {
    (
        compute_fov_grid(solid, frame, n_el, n_az, Hemisphere::Outward),
        compute_fov_grid(solid, frame, n_el, n_az, Hemisphere::Inward),
    )
}

pub const DEBUG_CSV_HEADER: &str = "face_id,hemisphere,el_bin,az_bin,hit_flag,t,incidence,hit_face_id";

/// Appends one CSV row per cell (no header).
pub fn write_fov_debug_rows<W: Write>(out: &mut W, face_id: usize, grid: &FovGrid) -> io::Result<()> {
    for i in 0..grid.n_el {
        for j in 0..grid.n_az {
            let [flag, t, inc] = grid.cell(i, j);
            let hit_face = grid.hit_faces[i * grid.n_az + j].map_or(String::new(), |f| f.to_string());
            writeln!(
                out,
                "{face_id},{},{i},{j},{},{t:.17e},{inc:.17e},{hit_face}",
                grid.hemisphere.name(),
                flag as u8
            )?;
        }
    }
    Ok(())
}
