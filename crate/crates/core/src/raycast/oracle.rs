//! Mesh-based reference caster: a trimmed tessellation of every face behind
//! a median-split bounding volume hierarchy.

use crate::brep::{Solid, UvDomain, Vec3};

use super::{Hit, Ray};

#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pub vertices: [Vec3; 3],
    /// Parameter coordinates of each vertex on the source face.
    pub uv: [[f64; 2]; 3],
    pub face_id: usize,
}

impl Triangle {
    fn centroid(&self) -> Vec3 {
        (self.vertices[0] + self.vertices[1] + self.vertices[2]) / 3.0
    }

    fn area(&self) -> f64 {
        0.5 * (self.vertices[1] - self.vertices[0])
            .cross(&(self.vertices[2] - self.vertices[0]))
            .norm()
    }

    /// Möller–Trumbore; returns `(t, b1, b2)`.
    fn intersect(&self, ray: &Ray) -> Option<(f64, f64, f64)> {
        let [p0, p1, p2] = self.vertices;
        let e1 = p1 - p0;
        let e2 = p2 - p0;
        let pv = ray.direction.cross(&e2);
        let det = e1.dot(&pv);
        if det.abs() < 1e-15 {
            return None;
        }
        let inv = 1.0 / det;
        let tv = ray.origin - p0;
        let b1 = tv.dot(&pv) * inv;
        if !(0.0..=1.0).contains(&b1) {
            return None;
        }
        let qv = tv.cross(&e1);
        let b2 = ray.direction.dot(&qv) * inv;
        if b2 < 0.0 || b1 + b2 > 1.0 {
            return None;
        }
        let t = e2.dot(&qv) * inv;
        (t >= ray.t_min).then_some((t, b1, b2))
    }
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Vec3,
    max: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    /// Slab test: whether the ray meets the box before `t_max`.
    fn hit(&self, ray: &Ray, t_max: f64) -> bool {
        let mut lo = 0.0f64;
        let mut hi = t_max;
        for k in 0..3 {
            let inv = 1.0 / ray.direction[k];
            let mut t0 = (self.min[k] - ray.origin[k]) * inv;
            let mut t1 = (self.max[k] - ray.origin[k]) * inv;
            if inv < 0.0 {
                std::mem::swap(&mut t0, &mut t1);
            }
            // NaN from 0 * inf keeps the previous bound
            if t0 > lo {
                lo = t0;
            }
            if t1 < hi {
                hi = t1;
            }
            if lo > hi {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, count: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

const LEAF_SIZE: usize = 4;

/// Triangle soup plus its hierarchy; immutable after construction.
#[derive(Debug, Clone)]
pub struct TessellationOracle {
    pub triangles: Vec<Triangle>,
    nodes: Vec<Node>,
}

/// Lattice coordinates along one axis with the domain center as a vertex;
/// each half is uniformly spaced.
fn centered_lattice(lo: f64, hi: f64, vertices: usize) -> Vec<f64> {
    let intervals = vertices - 1;
    let left = intervals / 2;
    let right = intervals - left;
    let mid = 0.5 * (lo + hi);
    let mut out: Vec<f64> = (0..left).map(|k| lo + (mid - lo) * k as f64 / left as f64).collect();
    out.extend((0..=right).map(|k| mid + (hi - mid) * k as f64 / right as f64));
    out
}

fn tessellate(solid: &Solid, density: usize) -> Vec<Triangle> {
    let mut tris = Vec::new();
    for face in &solid.faces {
        let UvDomain { u_min, u_max, v_min, v_max } = face.surface.domain;
        let us = centered_lattice(u_min, u_max, density);
        let vs = centered_lattice(v_min, v_max, density);
        let corner = |i: usize, j: usize| ([us[i], vs[j]], face.point(us[i], vs[j]));
        for i in 0..density - 1 {
            for j in 0..density - 1 {
                let c = [corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1)];
                for idx in [[0, 1, 2], [0, 2, 3]] {
                    let tri = Triangle {
                        vertices: idx.map(|k| c[k].1),
                        uv: idx.map(|k| c[k].0),
                        face_id: face.id,
                    };
                    let cu = (tri.uv[0][0] + tri.uv[1][0] + tri.uv[2][0]) / 3.0;
                    let cv = (tri.uv[0][1] + tri.uv[1][1] + tri.uv[2][1]) / 3.0;
                    if tri.area() > 1e-18 && face.contains_uv(cu, cv) {
                        tris.push(tri);
                    }
                }
            }
        }
    }
    tris
}

fn build(tris: &mut [Triangle], offset: usize, nodes: &mut Vec<Node>) -> usize {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for t in tris.iter() {
        t.vertices.iter().for_each(|v| bounds.grow(v));
        cbounds.grow(&t.centroid());
    }
    let slot = nodes.len();
    if tris.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            bounds,
            start: offset,
            count: tris.len(),
        });
        return slot;
    }
    let extent = cbounds.max - cbounds.min;
    let axis = extent.imax();
    let mid = tris.len() / 2;
    tris.select_nth_unstable_by(mid, |a, b| a.centroid()[axis].total_cmp(&b.centroid()[axis]));
    nodes.push(Node::Leaf {
        bounds,
        start: 0,
        count: 0,
    });
    let (lo, hi) = tris.split_at_mut(mid);
    let left = build(lo, offset, nodes);
    let right = build(hi, offset + mid, nodes);
    nodes[slot] = Node::Inner { bounds, left, right };
    slot
}

/// Tessellates each face on a `density × density` vertex lattice (keeping
/// triangles whose parameter centroid is inside the trim) and builds a BVH.
pub fn build_tessellation_oracle(solid: &Solid, density: usize) -> TessellationOracle {
    assert!(density >= 2, "lattice needs at least two vertices per axis");
    let mut triangles = tessellate(solid, density);
    let mut nodes = Vec::new();
    if !triangles.is_empty() {
        build(&mut triangles, 0, &mut nodes);
    }
    TessellationOracle { triangles, nodes }
}

/// Nearest triangle hit; the normal is the source face's outward normal at
/// the interpolated parameter point.
pub fn oracle_cast(oracle: &TessellationOracle, solid: &Solid, ray: &Ray) -> Option<Hit> {
    if oracle.nodes.is_empty() {
        return None;
    }
    let mut best: Option<(f64, usize, f64, f64)> = None;
    let mut stack = vec![0usize];
    while let Some(n) = stack.pop() {
        let t_max = best.map_or(f64::INFINITY, |b| b.0);
        match &oracle.nodes[n] {
            Node::Leaf { bounds, start, count } => {
                if !bounds.hit(ray, t_max) {
                    continue;
                }
                for k in *start..start + count {
                    if let Some((t, b1, b2)) = oracle.triangles[k].intersect(ray) {
                        if best.is_none_or(|b| t < b.0) {
                            best = Some((t, k, b1, b2));
                        }
                    }
                }
            }
            Node::Inner { bounds, left, right } => {
                if bounds.hit(ray, t_max) {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
    }
    best.map(|(t, k, b1, b2)| {
        let tri = &oracle.triangles[k];
        let w = [1.0 - b1 - b2, b1, b2];
        let u = (0..3).map(|i| w[i] * tri.uv[i][0]).sum::<f64>();
        let v = (0..3).map(|i| w[i] * tri.uv[i][1]).sum::<f64>();
        let normal = solid
            .face(tri.face_id)
            .map_or(Vec3::zeros(), |f| f.outward_normal(u, v));
        Hit {
            t,
            face_id: tri.face_id,
            normal,
            incidence: ray.direction.dot(&normal).clamp(-1.0, 1.0),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_contains_center() {
        let l = centered_lattice(0.0, 3.0, 32);
        assert_eq!(l.len(), 32);
        assert_eq!(l[0], 0.0);
        assert_eq!(*l.last().unwrap(), 3.0);
        assert!(l.contains(&1.5));
        assert!(l.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(centered_lattice(-1.0, 1.0, 3), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_scene_never_hits() {
        let oracle = build_tessellation_oracle(&Solid::default(), 32);
        assert!(oracle.triangles.is_empty());
        assert!(oracle_cast(&oracle, &Solid::default(), &Ray::new(Vec3::zeros(), Vec3::x())).is_none());
    }
}
