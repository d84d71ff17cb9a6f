//! Two-link planar arm reaching for a target; the "easy" target size.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2, Vector3};
use rand::Rng as _;

use crate::render::scene::{Primitive, Shape};
use crate::rng::Rng;

use super::tolerance::radial_reward;
use super::PhysicsState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReacherParams {
    pub link_lengths: [f64; 2],
    pub link_masses: [f64; 2],
    pub damping: f64,
    pub torque_gain: f64,
    pub target_radius: f64,
    pub target_distance: (f64, f64),
}

impl Default for ReacherParams {
    fn default() -> Self {
        ReacherParams {
            link_lengths: [0.12, 0.12],
            link_masses: [0.05, 0.05],
            damping: 0.01,
            torque_gain: 0.05,
            target_radius: 0.05,
            target_distance: (0.05, 0.20),
        }
    }
}

pub const ARM_HEIGHT: f64 = 0.02;

pub const BODY_COLORS: [[f64; 3]; 5] = [
    [0.5, 0.5, 0.5],
    [0.7, 0.5, 0.3],
    [0.7, 0.5, 0.3],
    [0.9, 0.7, 0.35],
    [0.6, 0.3, 0.3],
];

// q = [shoulder, elbow], qvel likewise, aux = [target_x, target_y]
impl ReacherParams {
    pub fn reset(&self, rng: &mut Rng) -> PhysicsState {
        let q = vec![rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
        let angle = rng.random_range(-PI..PI);
        let (lo, hi) = self.target_distance;
        let dist = rng.random_range(lo..hi);
        PhysicsState::new(q, vec![0.0, 0.0], vec![dist * angle.cos(), dist * angle.sin()])
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths[0] + self.link_lengths[1]
    }

    pub fn elbow(&self, s: &PhysicsState) -> Vector2<f64> {
        self.link_lengths[0] * Vector2::new(s.q[0].cos(), s.q[0].sin())
    }

    pub fn fingertip(&self, s: &PhysicsState) -> Vector2<f64> {
        let a = s.q[0] + s.q[1];
        self.elbow(s) + self.link_lengths[1] * Vector2::new(a.cos(), a.sin())
    }

    pub fn target(&self, s: &PhysicsState) -> Vector2<f64> {
        Vector2::new(s.aux[0], s.aux[1])
    }

    pub fn integrate(&self, s: &mut PhysicsState, action: &[f64], dt: f64) {
        let [l1, _] = self.link_lengths;
        let [m1, m2] = self.link_masses;
        let (lc1, lc2) = (l1 / 2.0, self.link_lengths[1] / 2.0);
        let i1 = m1 * l1 * l1 / 12.0;
        let i2 = m2 * self.link_lengths[1].powi(2) / 12.0;
        let (s2, c2) = s.q[1].sin_cos();
        let (qd1, qd2) = (s.qvel[0], s.qvel[1]);
        let m11 = m1 * lc1 * lc1 + i1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2) + i2;
        let m12 = m2 * (lc2 * lc2 + l1 * lc2 * c2) + i2;
        let m22 = m2 * lc2 * lc2 + i2;
        let h = m2 * l1 * lc2 * s2;
        let coriolis = Vector2::new(-h * (2.0 * qd1 * qd2 + qd2 * qd2), h * qd1 * qd1);
        let tau = Vector2::new(action[0], action[1]) * self.torque_gain
            - Vector2::new(qd1, qd2) * self.damping
            - coriolis;
        let mass = Matrix2::new(m11, m12, m12, m22);
        let acc = mass.try_inverse().expect("mass matrix is positive definite") * tau;
        s.qvel[0] += dt * acc.x;
        s.qvel[1] += dt * acc.y;
        s.q[0] += dt * s.qvel[0];
        s.q[1] += dt * s.qvel[1];
    }

    pub fn reward(&self, s: &PhysicsState) -> f64 {
        radial_reward((self.fingertip(s) - self.target(s)).norm(), self.target_radius)
    }

    pub fn observation(&self, s: &PhysicsState) -> Vec<f64> {
        let to_target = self.target(s) - self.fingertip(s);
        vec![
            s.q[0].cos(),
            s.q[0].sin(),
            s.q[1].cos(),
            s.q[1].sin(),
            to_target.x,
            to_target.y,
            s.qvel[0],
            s.qvel[1],
        ]
    }

    pub fn agent_position(&self, _s: &PhysicsState) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, ARM_HEIGHT)
    }

    pub fn primitives(&self, s: &PhysicsState) -> Vec<Primitive> {
        let lift = |p: Vector2<f64>, z: f64| Vector3::new(p.x, p.y, z);
        let base = Vector3::new(0.0, 0.0, ARM_HEIGHT);
        let elbow = lift(self.elbow(s), ARM_HEIGHT);
        let tip = lift(self.fingertip(s), ARM_HEIGHT);
        vec![
            Primitive::new(Shape::Sphere { radius: 0.022 }, base, 0),
            Primitive::segment(base, elbow, 0.012, 1),
            Primitive::segment(elbow, tip, 0.012, 2),
            Primitive::new(Shape::Sphere { radius: 0.018 }, tip, 3),
            // Sunk below the arm plane so only its cap shows from above.
            Primitive::new(
                Shape::Sphere { radius: self.target_radius },
                lift(self.target(s), ARM_HEIGHT - self.target_radius - 0.005),
                4,
            ),
        ]
    }
}
