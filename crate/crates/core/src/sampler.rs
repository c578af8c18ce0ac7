//! Global UV grids, local reference frames and LRF-expressed UV grids.

use nalgebra::Matrix3;

use crate::brep::{Face, Vec3, GRID_RES};

/// Channels per UV-grid cell: position, normal, trim mask.
pub const UV_CHANNELS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameTag {
    Global,
    Lrf,
}

/// `n_u × n_v × 7` samples stored row-major with `u` as the slow axis.
#[derive(Debug, Clone, PartialEq)]
pub struct UvGrid {
    pub n_u: usize,
    pub n_v: usize,
    pub samples: Vec<f64>,
    pub frame: FrameTag,
}

impl UvGrid {
    pub fn cell(&self, i: usize, j: usize) -> &[f64] {
        let k = (i * self.n_v + j) * UV_CHANNELS;
        &self.samples[k..k + UV_CHANNELS]
    }

    fn cell_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let k = (i * self.n_v + j) * UV_CHANNELS;
        &mut self.samples[k..k + UV_CHANNELS]
    }

    pub fn position(&self, i: usize, j: usize) -> Vec3 {
        Vec3::from_column_slice(&self.cell(i, j)[0..3])
    }

    pub fn normal(&self, i: usize, j: usize) -> Vec3 {
        Vec3::from_column_slice(&self.cell(i, j)[3..6])
    }

    pub fn mask(&self, i: usize, j: usize) -> bool {
        self.cell(i, j)[6] != 0.0
    }

    /// Largest absolute channel difference between two same-shape grids.
    pub fn max_abs_diff(&self, other: &UvGrid) -> f64 {
        assert_eq!(self.samples.len(), other.samples.len());
        self.samples
            .iter()
            .zip(&other.samples)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Orthonormal right-handed frame `R_f = [U V N]` anchored at the face center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub origin: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    pub n: Vec3,
}

impl LocalFrame {
    pub fn identity() -> Self {
        Self {
            origin: Vec3::zeros(),
            u: Vec3::x(),
            v: Vec3::y(),
            n: Vec3::z(),
        }
    }

    /// Columns `U, V, N`.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.u, self.v, self.n])
    }

    pub fn point_to_local(&self, p: &Vec3) -> Vec3 {
        self.dir_to_local(&(p - self.origin))
    }

    pub fn dir_to_local(&self, d: &Vec3) -> Vec3 {
        Vec3::new(self.u.dot(d), self.v.dot(d), self.n.dot(d))
    }

    pub fn orthonormality_error(&self) -> f64 {
        let m = self.matrix();
        let gram = (m.transpose() * m - Matrix3::identity()).amax();
        gram.max((m.determinant() - 1.0).abs())
    }
}

/// Trim-mask membership (even-odd, on-edge counts as inside).
pub fn trim_test(face: &Face, u: f64, v: f64) -> bool {
    face.contains_uv(u, v)
}

/// Cell-center lattice of global positions, outward normals and trim mask.
pub fn sample_uv_grid(face: &Face) -> UvGrid {
    sample_uv_grid_res(face, GRID_RES, GRID_RES)
}

pub fn sample_uv_grid_res(face: &Face, n_u: usize, n_v: usize) -> UvGrid {
    let mut grid = UvGrid {
        n_u,
        n_v,
        samples: vec![0.0; n_u * n_v * UV_CHANNELS],
        frame: FrameTag::Global,
    };
    let d = face.surface.domain;
    for i in 0..n_u {
        for j in 0..n_v {
            let (u, v) = d.cell_center(i, n_u, j, n_v);
            let p = face.point(u, v);
            let (normal, valid) = match face.normal_and_partials(u, v) {
                Ok((n, _, _)) => (n, true),
                Err(_) => (face.outward_normal(u, v), false),
            };
            let mask = valid && trim_test(face, u, v);
            let cell = grid.cell_mut(i, j);
            cell[0..3].copy_from_slice(p.as_slice());
            cell[3..6].copy_from_slice(normal.as_slice());
            cell[6] = if mask { 1.0 } else { 0.0 };
        }
    }
    grid
}

/// Frame at the center of the face's full parameter domain.
pub fn compute_local_frame(face: &Face) -> LocalFrame {
    let (uc, vc) = face.surface.domain.center();
    let origin = face.point(uc, vc);
    let n = face.outward_normal(uc, vc);
    let (du, dv) = face.surface.partials(uc, vc);
    let project = |t: &Vec3| (t - n * n.dot(t)).try_normalize(1e-12);
    let u = project(&du)
        .or_else(|| project(&dv))
        .or_else(|| {
            [Vec3::x(), Vec3::y(), Vec3::z()]
                .iter()
                .find_map(|a| (a - n * n.dot(a)).try_normalize(1e-6))
        })
        .expect("some canonical axis is not parallel to a unit normal");
    LocalFrame {
        origin,
        u,
        v: n.cross(&u),
        n,
    }
}

/// Re-expresses a global grid in a face's local frame.
pub fn to_lrf_grid(grid: &UvGrid, frame: &LocalFrame) -> UvGrid {
    let mut out = grid.clone();
    out.frame = FrameTag::Lrf;
    for i in 0..grid.n_u {
        for j in 0..grid.n_v {
            let p = frame.point_to_local(&grid.position(i, j));
            let n = frame.dir_to_local(&grid.normal(i, j));
            let cell = out.cell_mut(i, j);
            cell[0..3].copy_from_slice(p.as_slice());
            cell[3..6].copy_from_slice(n.as_slice());
        }
    }
    out
}

/// Frame plus LRF grid for one face.
pub fn lrf_descriptor(face: &Face) -> (LocalFrame, UvGrid) {
    let frame = compute_local_frame(face);
    (frame, to_lrf_grid(&sample_uv_grid(face), &frame))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{PI, TAU};

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::brep::{AnalyticSurface, Placement, Shape, TrimLoop, UvDomain};

    fn face(shape: Shape, domain: UvDomain) -> Face {
        Face::untrimmed(0, AnalyticSurface::new(shape, Placement::canonical(), domain), true)
    }

    fn close(a: Vec3, b: Vec3) -> bool {
        (a - b).amax() < 1e-12
    }

    #[test]
    fn plane_grid_and_frame() {
        let f = face(Shape::Plane, UvDomain::new(0.0, 2.0, 0.0, 2.0));
        let g = sample_uv_grid(&f);
        for i in 0..10 {
            for j in 0..10 {
                assert!(g.mask(i, j));
                assert_eq!(g.normal(i, j), Vec3::z());
            }
        }
        let fr = compute_local_frame(&f);
        assert!(close(fr.origin, Vec3::new(1.0, 1.0, 0.0)));
        assert!(close(fr.n, Vec3::z()) && close(fr.u, Vec3::x()) && close(fr.v, Vec3::y()));
        let lrf = to_lrf_grid(&g, &fr);
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(lrf.position(i, j).z, 0.0);
                assert_eq!(lrf.normal(i, j), Vec3::z());
            }
        }
    }

    #[test]
    fn cylinder_frame() {
        let f = face(Shape::Cylinder { radius: 1.0 }, UvDomain::new(0.0, TAU, 0.0, 1.0));
        let fr = compute_local_frame(&f);
        assert!(close(fr.origin, Vec3::new(-1.0, 0.0, 0.5)));
        assert!(close(fr.n, Vec3::new(-1.0, 0.0, 0.0)));
        assert!(close(fr.u, Vec3::new(0.0, -1.0, 0.0)));
        assert!(close(fr.v, Vec3::new(0.0, 0.0, 1.0)));
    }

    #[test]
    fn pole_fallback_is_orthonormal() {
        // domain center on the north pole, where the u-partial vanishes
        let f = face(Shape::Sphere { radius: 1.0 }, UvDomain::new(-PI, PI, 1.0, PI - 1.0));
        let fr = compute_local_frame(&f);
        assert!(fr.orthonormality_error() < 1e-9);
        assert!(close(fr.n, Vec3::z()));
        assert!(close(fr.u, -Vec3::x()));
        assert_eq!(fr, compute_local_frame(&f));
        let g = sample_uv_grid(&f);
        for i in 0..10 {
            for j in 0..10 {
                assert!((g.normal(i, j).norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn center_maps_to_origin() {
        let f = face(Shape::Torus { major_radius: 1.0, minor_radius: 0.3 }, UvDomain::new(0.0, 1.0, 0.0, 1.0));
        let fr = compute_local_frame(&f);
        let p = fr.point_to_local(&fr.origin);
        assert_eq!(p, Vec3::zeros());
        // odd lattice: the middle cell is the domain center
        let lrf = to_lrf_grid(&sample_uv_grid_res(&f, 5, 5), &fr);
        assert!(lrf.position(2, 2).norm() < 1e-15);
    }

    #[test]
    fn hole_mask_matches_circle() {
        let mut f = face(Shape::Plane, UvDomain::new(0.0, 1.0, 0.0, 1.0));
        f.loops.push(TrimLoop::circle([0.5, 0.5], 0.25, 256, false));
        let g = sample_uv_grid(&f);
        for i in 0..10 {
            for j in 0..10 {
                let (u, v) = f.surface.domain.cell_center(i, 10, j, 10);
                let r = ((u - 0.5).powi(2) + (v - 0.5).powi(2)).sqrt();
                assert_eq!(g.mask(i, j), r > 0.25, "cell ({i},{j}) r={r}");
            }
        }
    }

    /// Sum of absolute winding numbers of a point about each loop.
    fn winding_parity_inside(loops: &[TrimLoop], u: f64, v: f64) -> bool {
        let mut total = 0i64;
        for l in loops {
            let mut angle = 0.0;
            for w in l.points.windows(2) {
                let a = (w[0][1] - v).atan2(w[0][0] - u);
                let b = (w[1][1] - v).atan2(w[1][0] - u);
                let mut d = b - a;
                if d > PI {
                    d -= TAU;
                } else if d < -PI {
                    d += TAU;
                }
                angle += d;
            }
            total += (angle / TAU).round().abs() as i64;
        }
        total % 2 == 1
    }

    #[test]
    fn trim_matches_winding_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for _ in 0..10 {
            // star-shaped outer polygon with a circular hole around its kernel
            let k = rng.gen_range(5..12);
            let outer: Vec<[f64; 2]> = (0..k)
                .map(|m| {
                    let t = TAU * m as f64 / k as f64;
                    let r = rng.gen_range(0.6..1.0);
                    [r * t.cos(), r * t.sin()]
                })
                .collect();
            let mut f = face(Shape::Plane, UvDomain::new(-1.0, 1.0, -1.0, 1.0));
            f.loops = vec![
                TrimLoop::new(outer, true),
                TrimLoop::circle([0.05, -0.05], rng.gen_range(0.1..0.3), 40, false),
            ];
            for _ in 0..1000 {
                let (u, v) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if f.loops.iter().any(|l| l.distance(u, v) < 1e-6) {
                    continue;
                }
                assert_eq!(trim_test(&f, u, v), winding_parity_inside(&f.loops, u, v), "({u},{v})");
                checked += 1;
            }
        }
        assert!(checked > 9900);
    }
}
