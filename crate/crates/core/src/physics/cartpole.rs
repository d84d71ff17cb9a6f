//! Cart on a rail with a free pole; swing-up task.
//!
//! Pole angle is zero when upright and pi when hanging.

use nalgebra::Vector3;
use rand::Rng as _;

use crate::render::scene::{Primitive, Shape};
use crate::rng::Rng;

use super::tolerance::{tolerance, Sigmoid};
use super::PhysicsState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartpoleParams {
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Half the pole length.
    pub half_length: f64,
    pub gravity: f64,
    pub force_gain: f64,
    pub cart_damping: f64,
    pub pole_damping: f64,
    pub rail_limit: f64,
}

impl Default for CartpoleParams {
    fn default() -> Self {
        CartpoleParams {
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            gravity: 9.81,
            force_gain: 10.0,
            cart_damping: 0.0,
            pole_damping: 0.0,
            rail_limit: 1.8,
        }
    }
}

pub const RAIL_HEIGHT: f64 = 1.2;

pub const BODY_COLORS: [[f64; 3]; 3] = [[0.45, 0.45, 0.5], [0.7, 0.5, 0.3], [0.85, 0.6, 0.25]];

// q = [x, theta], qvel = [x_dot, theta_dot]
impl CartpoleParams {
    pub fn reset(&self, rng: &mut Rng) -> PhysicsState {
        let x = rng.random_range(-0.05..0.05);
        let theta = std::f64::consts::PI + rng.random_range(-0.05..0.05);
        let xd = rng.random_range(-0.01..0.01);
        let td = rng.random_range(-0.01..0.01);
        PhysicsState::new(vec![x, theta], vec![xd, td], vec![])
    }

    fn accelerations(&self, s: &PhysicsState, force: f64) -> (f64, f64) {
        let (theta, xd, td) = (s.q[1], s.qvel[0], s.qvel[1]);
        let (m, l, g) = (self.pole_mass, self.half_length, self.gravity);
        let total = self.cart_mass + m;
        let (sin, cos) = theta.sin_cos();
        let f = force - self.cart_damping * xd;
        let temp = (f + m * l * td * td * sin) / total;
        let theta_acc = (g * sin - cos * temp - self.pole_damping * td / (m * l))
            / (l * (4.0 / 3.0 - m * cos * cos / total));
        let x_acc = temp - m * l * theta_acc * cos / total;
        (x_acc, theta_acc)
    }

    pub fn integrate(&self, s: &mut PhysicsState, action: &[f64], dt: f64) {
        let (xa, ta) = self.accelerations(s, self.force_gain * action[0]);
        s.qvel[0] += dt * xa;
        s.qvel[1] += dt * ta;
        s.q[0] += dt * s.qvel[0];
        s.q[1] += dt * s.qvel[1];
        if s.q[0].abs() > self.rail_limit {
            s.q[0] = s.q[0].clamp(-self.rail_limit, self.rail_limit);
            s.qvel[0] = 0.0;
        }
    }

    pub fn reward(&self, s: &PhysicsState, action: &[f64]) -> f64 {
        let upright = (s.q[1].cos() + 1.0) / 2.0;
        let centered = (1.0 + tolerance(s.q[0], (0.0, 0.0), 2.0, Sigmoid::Gaussian, 0.1)) / 2.0;
        let small_control = (4.0 + tolerance(action[0], (0.0, 0.0), 1.0, Sigmoid::Quadratic, 0.0)) / 5.0;
        let small_velocity = (1.0 + tolerance(s.qvel[1], (0.0, 0.0), 5.0, Sigmoid::Gaussian, 0.1)) / 2.0;
        upright * centered * small_control * small_velocity
    }

    /// Kinetic plus potential energy, zero for the resting hanging pole.
    pub fn energy(&self, s: &PhysicsState) -> f64 {
        let (theta, xd, td) = (s.q[1], s.qvel[0], s.qvel[1]);
        let (m, l) = (self.pole_mass, self.half_length);
        let vx = xd + l * td * theta.cos();
        let vz = -l * td * theta.sin();
        let inertia = m * l * l / 3.0;
        0.5 * self.cart_mass * xd * xd
            + 0.5 * m * (vx * vx + vz * vz)
            + 0.5 * inertia * td * td
            + m * self.gravity * l * (1.0 + theta.cos())
    }

    pub fn observation(&self, s: &PhysicsState) -> Vec<f64> {
        vec![s.q[0], s.q[1].cos(), s.q[1].sin(), s.qvel[0], s.qvel[1]]
    }

    pub fn agent_position(&self, s: &PhysicsState) -> Vector3<f64> {
        Vector3::new(s.q[0], 0.0, RAIL_HEIGHT)
    }

    pub fn primitives(&self, s: &PhysicsState) -> Vec<Primitive> {
        let (x, theta) = (s.q[0], s.q[1]);
        let pivot = Vector3::new(x, -0.12, RAIL_HEIGHT);
        let tip = pivot + 2.0 * self.half_length * Vector3::new(theta.sin(), 0.0, theta.cos());
        vec![
            Primitive::new(
                Shape::Box { half_extents: Vector3::new(self.rail_limit + 0.3, 0.02, 0.02) },
                Vector3::new(0.0, 0.03, RAIL_HEIGHT),
                0,
            ),
            Primitive::new(
                Shape::Box { half_extents: Vector3::new(0.2, 0.1, 0.1) },
                Vector3::new(x, 0.0, RAIL_HEIGHT),
                1,
            ),
            Primitive::segment(pivot, tip, 0.045, 2),
        ]
    }
}
