use nalgebra::{Matrix3, Quaternion, Unit, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Vec3;

/// A rotation about the world origin, stored as a unit quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(UnitQuaternion<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Self(UnitQuaternion::identity())
    }

    /// Rotation by `angle` radians about `axis` (any nonzero length).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        Self(UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), angle))
    }

    /// `(w, x, y, z)`; normalized on construction.
    pub fn from_wxyz(q: [f64; 4]) -> Self {
        Self(UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3])))
    }

    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.0.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// Unit axis and angle in `[0, π]`; the identity reports `(+z, 0)`.
    pub fn axis_angle(&self) -> (Vec3, f64) {
        match self.0.axis_angle() {
            Some((axis, angle)) => (axis.into_inner(), angle),
            None => (Vec3::z(), 0.0),
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.0.to_rotation_matrix().into_inner()
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.matrix() * v
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    pub fn quaternion_norm(&self) -> f64 {
        self.0.quaternion().norm()
    }

    /// Haar-uniform sample (Shoemake's subgroup algorithm).
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let u3: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let a = (1.0 - u1).sqrt();
        let b = u1.sqrt();
        Self::from_wxyz([b * u3.cos(), a * u2.sin(), a * u2.cos(), b * u3.sin()])
    }
}

/// Deterministic uniform rotation for a seed.
pub fn random_rotation(seed: u64) -> Rotation {
    Rotation::sample(&mut ChaCha8Rng::seed_from_u64(seed))
}
