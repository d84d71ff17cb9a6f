//! Actuated planar cup with a ball on a string; catch task.
//!
//! Positions are (horizontal, vertical) in the x-z plane. The cup is gravity
//! compensated; the ball is a point mass under gravity, tethered to the cup
//! bottom by an inextensible string that may go slack.

use nalgebra::{Vector2, Vector3};
use rand::Rng as _;

use crate::render::scene::{Primitive, Shape};
use crate::rng::Rng;

use super::PhysicsState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallInCupParams {
    pub string_length: f64,
    pub gravity: f64,
    pub cup_mass: f64,
    pub force_gain: f64,
    pub cup_damping: f64,
    pub cup_limits: (f64, f64),
    pub inner_half_width: f64,
    pub depth: f64,
    pub wall: f64,
    pub ball_radius: f64,
}

impl Default for BallInCupParams {
    fn default() -> Self {
        BallInCupParams {
            string_length: 0.3,
            gravity: 9.81,
            cup_mass: 0.5,
            force_gain: 3.0,
            cup_damping: 3.0,
            cup_limits: (0.4, 0.3),
            inner_half_width: 0.06,
            depth: 0.1,
            wall: 0.015,
            ball_radius: 0.025,
        }
    }
}

/// World height of the cup's neutral position.
pub const CUP_HEIGHT: f64 = 0.8;

pub const BODY_COLORS: [[f64; 3]; 2] = [[0.7, 0.5, 0.3], [0.85, 0.6, 0.25]];

// q = [cup_x, cup_z, ball_x, ball_z], qvel likewise
impl BallInCupParams {
    pub fn reset(&self, rng: &mut Rng) -> PhysicsState {
        let cup_x = rng.random_range(-0.1..0.1);
        let dx = rng.random_range(-0.05..0.05);
        let dz = -(self.string_length.powi(2) - dx * dx).sqrt();
        let ball_vx = rng.random_range(-0.05..0.05);
        PhysicsState::new(vec![cup_x, 0.0, cup_x + dx, dz], vec![0.0, 0.0, ball_vx, 0.0], vec![])
    }

    pub fn cup(&self, s: &PhysicsState) -> Vector2<f64> {
        Vector2::new(s.q[0], s.q[1])
    }

    pub fn ball(&self, s: &PhysicsState) -> Vector2<f64> {
        Vector2::new(s.q[2], s.q[3])
    }

    /// Ball position in the cup frame (origin at the inner bottom centre).
    pub fn ball_in_cup_frame(&self, s: &PhysicsState) -> Vector2<f64> {
        self.ball(s) - self.cup(s)
    }

    pub fn in_cup(&self, s: &PhysicsState) -> bool {
        let d = self.ball_in_cup_frame(s);
        d.x.abs() <= self.inner_half_width && d.y >= 0.0 && d.y <= self.depth
    }

    /// Amount by which the ball is farther from the cup than the string allows.
    pub fn string_violation(&self, s: &PhysicsState) -> f64 {
        (self.ball_in_cup_frame(s).norm() - self.string_length).max(0.0)
    }

    pub fn integrate(&self, s: &mut PhysicsState, action: &[f64], dt: f64) {
        let prev = self.ball_in_cup_frame(s);

        for axis in 0..2 {
            let acc = self.force_gain * action[axis] / self.cup_mass - self.cup_damping * s.qvel[axis];
            s.qvel[axis] += dt * acc;
            s.q[axis] += dt * s.qvel[axis];
            let limit = if axis == 0 { self.cup_limits.0 } else { self.cup_limits.1 };
            if s.q[axis].abs() > limit {
                s.q[axis] = s.q[axis].clamp(-limit, limit);
                s.qvel[axis] = 0.0;
            }
        }
        s.qvel[3] -= dt * self.gravity;
        s.q[2] += dt * s.qvel[2];
        s.q[3] += dt * s.qvel[3];

        self.collide(s, prev);
        self.enforce_string(s);
    }

    fn collide(&self, s: &mut PhysicsState, prev: Vector2<f64>) {
        let cup = self.cup(s);
        let cup_vel = Vector2::new(s.qvel[0], s.qvel[1]);
        let mut d = self.ball_in_cup_frame(s);
        let mut rel = Vector2::new(s.qvel[2], s.qvel[3]) - cup_vel;
        let (w, r) = (self.inner_half_width, self.ball_radius);
        let outer = w + self.wall;

        let was_inside = prev.x.abs() < w && prev.y >= 0.0;
        if was_inside && d.y < self.depth + r {
            // Walls from the inside.
            if d.x.abs() > w - r {
                d.x = d.x.signum() * (w - r);
                if rel.x * d.x > 0.0 {
                    rel.x = 0.0;
                }
            }
            // Bottom.
            if d.y < r {
                d.y = r;
                rel.y = rel.y.max(0.0);
            }
        } else if !was_inside && d.y > -self.wall - r && d.y < self.depth + r {
            if prev.y <= -self.wall - r && d.x.abs() < outer + r {
                // Hitting the underside.
                d.y = -self.wall - r;
                rel.y = rel.y.min(0.0);
            } else if prev.x.abs() >= outer && d.x.abs() < outer + r {
                // Hitting a wall from outside.
                d.x = prev.x.signum() * (outer + r);
                rel.x = 0.0;
            }
        }

        s.q[2] = cup.x + d.x;
        s.q[3] = cup.y + d.y;
        s.qvel[2] = cup_vel.x + rel.x;
        s.qvel[3] = cup_vel.y + rel.y;
    }

    fn enforce_string(&self, s: &mut PhysicsState) {
        let cup = self.cup(s);
        let d = self.ball(s) - cup;
        let len = d.norm();
        if len <= self.string_length {
            return;
        }
        let n = d / len;
        let ball = cup + n * self.string_length;
        s.q[2] = ball.x;
        s.q[3] = ball.y;
        let cup_vel = Vector2::new(s.qvel[0], s.qvel[1]);
        let rel = Vector2::new(s.qvel[2], s.qvel[3]) - cup_vel;
        let outward = rel.dot(&n);
        if outward > 0.0 {
            s.qvel[2] -= outward * n.x;
            s.qvel[3] -= outward * n.y;
        }
    }

    pub fn reward(&self, s: &PhysicsState) -> f64 {
        if self.in_cup(s) {
            1.0
        } else {
            0.0
        }
    }

    pub fn observation(&self, s: &PhysicsState) -> Vec<f64> {
        let d = self.ball_in_cup_frame(s);
        vec![s.q[0], s.q[1], d.x, d.y, s.qvel[0], s.qvel[1], s.qvel[2], s.qvel[3]]
    }

    fn world(p: Vector2<f64>) -> Vector3<f64> {
        Vector3::new(p.x, 0.0, CUP_HEIGHT + p.y)
    }

    pub fn agent_position(&self, s: &PhysicsState) -> Vector3<f64> {
        Self::world(self.cup(s))
    }

    pub fn primitives(&self, s: &PhysicsState) -> Vec<Primitive> {
        let cup = self.cup(s);
        let (w, t, depth) = (self.inner_half_width, self.wall, self.depth);
        let half_wall_h = (depth + t) / 2.0;
        let mut prims = vec![Primitive::new(
            Shape::Box { half_extents: Vector3::new(w + t, 0.05, t / 2.0) },
            Self::world(cup + Vector2::new(0.0, -t / 2.0)),
            0,
        )];
        for side in [-1.0, 1.0] {
            prims.push(Primitive::new(
                Shape::Box { half_extents: Vector3::new(t / 2.0, 0.05, half_wall_h) },
                Self::world(cup + Vector2::new(side * (w + t / 2.0), depth - half_wall_h)),
                0,
            ));
        }
        prims.push(Primitive::new(Shape::Sphere { radius: self.ball_radius }, Self::world(self.ball(s)), 1));
        prims
    }
}
