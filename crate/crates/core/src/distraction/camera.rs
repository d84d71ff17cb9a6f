//! Camera pose random walk.
//!
//! Poses are spherical coordinates around the focus point with the radius
//! normalized so that the task's original camera distance is 1. The polar
//! angle `theta` is measured from the scene up-axis (+z).

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::config::check_beta;
use crate::error::Result;
use crate::rng::Rng;

use super::uniform;

/// Extent of the camera pose distribution for a difficulty scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraRange {
    pub phi_max: f64,
    pub theta_max: f64,
    pub roll_max: f64,
    pub r_min: f64,
    pub r_max: f64,
}

pub fn camera_range_from_scale(beta_cam: f64) -> Result<CameraRange> {
    check_beta("beta_cam", beta_cam)?;
    let angle = PI * beta_cam / 2.0;
    Ok(CameraRange {
        phi_max: angle,
        theta_max: angle,
        roll_max: angle,
        r_min: 1.0 - 0.5 * beta_cam,
        r_max: 1.0 + 1.5 * beta_cam,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedParams {
    pub v_max: f64,
    pub sigma: f64,
    pub v_roll_max: f64,
    pub sigma_roll: f64,
}

pub fn camera_speed_params(beta_cam: f64) -> Result<SpeedParams> {
    check_beta("beta_cam", beta_cam)?;
    Ok(SpeedParams {
        v_max: 2.0 * beta_cam / 5.0,
        sigma: beta_cam / 10.0,
        v_roll_max: PI * beta_cam / 50.0,
        sigma_roll: PI * beta_cam / 300.0,
    })
}

/// Undistracted viewing direction of a task camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OriginPose {
    pub phi: f64,
    pub theta: f64,
}

/// Closed intervals for every pose component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseBounds {
    pub phi: (f64, f64),
    pub theta: (f64, f64),
    pub r: (f64, f64),
    pub roll: (f64, f64),
}

impl PoseBounds {
    /// Azimuth and roll are symmetric about the original pose, elevation
    /// only moves upward (towards the pole) and never past it.
    pub fn new(range: &CameraRange, origin: OriginPose) -> Self {
        PoseBounds {
            phi: (origin.phi - range.phi_max, origin.phi + range.phi_max),
            theta: ((origin.theta - range.theta_max).max(0.0), origin.theta),
            r: (range.r_min, range.r_max),
            roll: (-range.roll_max, range.roll_max),
        }
    }

    pub fn contains(&self, s: &CameraState) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        inside(s.phi, self.phi)
            && inside(s.theta, self.theta)
            && inside(s.r, self.r)
            && inside(s.roll, self.roll)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraState {
    pub phi: f64,
    pub theta: f64,
    pub r: f64,
    pub roll: f64,
    pub velocity: Vector3<f64>,
    pub roll_velocity: f64,
}

impl CameraState {
    pub fn at_origin(origin: OriginPose) -> Self {
        CameraState {
            phi: origin.phi,
            theta: origin.theta,
            r: 1.0,
            roll: 0.0,
            velocity: Vector3::zeros(),
            roll_velocity: 0.0,
        }
    }

    /// Offset from the focus point in normalized units.
    pub fn offset(&self) -> Vector3<f64> {
        spherical_offset(self.phi, self.theta, self.r)
    }
}

pub(crate) fn spherical_offset(phi: f64, theta: f64, r: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(r * st * cp, r * st * sp, r * ct)
}

/// Inverse of [`spherical_offset`]; the azimuth is unwrapped to lie within
/// pi of `phi_hint`.
pub(crate) fn offset_to_spherical(p: &Vector3<f64>, phi_hint: f64) -> (f64, f64, f64) {
    let r = p.norm();
    let theta = (p.z / r).clamp(-1.0, 1.0).acos();
    let mut phi = p.y.atan2(p.x);
    let turns = ((phi_hint - phi) / (2.0 * PI)).round();
    phi += turns * 2.0 * PI;
    (phi, theta, r)
}

fn sample_in_ball(radius: f64, rng: &mut Rng) -> Vector3<f64> {
    if radius <= 0.0 {
        return Vector3::zeros();
    }
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if v.norm_squared() <= 1.0 {
            return v * radius;
        }
    }
}

fn clip_norm(v: Vector3<f64>, max: f64) -> Vector3<f64> {
    let n = v.norm();
    if n > max {
        if max <= 0.0 {
            Vector3::zeros()
        } else {
            v * (max / n)
        }
    } else {
        v
    }
}

fn clamp(v: f64, (lo, hi): (f64, f64)) -> f64 {
    v.max(lo).min(hi)
}

/// Draws an episode start pose uniformly from the bounds. Velocities are
/// sampled only for dynamic cameras.
pub fn sample_camera_start(
    bounds: &PoseBounds,
    speed: &SpeedParams,
    dynamic: bool,
    rng: &mut Rng,
) -> CameraState {
    let phi = uniform(rng, bounds.phi.0, bounds.phi.1);
    let theta = uniform(rng, bounds.theta.0, bounds.theta.1);
    let r = uniform(rng, bounds.r.0, bounds.r.1);
    let roll = uniform(rng, bounds.roll.0, bounds.roll.1);
    let (velocity, roll_velocity) = if dynamic {
        (
            sample_in_ball(speed.v_max, rng),
            uniform(rng, -speed.v_roll_max, speed.v_roll_max),
        )
    } else {
        (Vector3::zeros(), 0.0)
    };
    CameraState { phi, theta, r, roll, velocity, roll_velocity }
}

/// One step of the dynamic camera walk.
///
/// The velocity gets isotropic Gaussian noise and is clipped to `v_max`
/// before the position moves; the new position is clipped per spherical
/// component. Velocity is left untouched by a position clip.
pub fn step_camera(
    state: &CameraState,
    bounds: &PoseBounds,
    speed: &SpeedParams,
    rng: &mut Rng,
) -> CameraState {
    let mut next = *state;

    if speed.sigma > 0.0 {
        let n = Normal::new(0.0, speed.sigma).expect("finite sigma");
        let noise = Vector3::new(n.sample(rng), n.sample(rng), n.sample(rng));
        next.velocity = state.velocity + noise;
    }
    next.velocity = clip_norm(next.velocity, speed.v_max);

    if speed.sigma_roll > 0.0 {
        let n = Normal::new(0.0, speed.sigma_roll).expect("finite sigma");
        next.roll_velocity = state.roll_velocity + n.sample(rng);
    }
    next.roll_velocity = next.roll_velocity.clamp(-speed.v_roll_max, speed.v_roll_max);

    if next.velocity != Vector3::zeros() {
        let moved = state.offset() + next.velocity;
        let (phi, theta, r) = offset_to_spherical(&moved, state.phi);
        next.phi = phi;
        next.theta = theta;
        next.r = r;
    }
    next.phi = clamp(next.phi, bounds.phi);
    next.theta = clamp(next.theta, bounds.theta);
    next.r = clamp(next.r, bounds.r);
    next.roll = clamp(state.roll + next.roll_velocity, bounds.roll);
    next
}

/// Camera pose process for one episode stream.
#[derive(Debug, Clone, Copy)]
pub struct CameraProcess {
    pub range: CameraRange,
    pub speed: SpeedParams,
    pub bounds: PoseBounds,
    pub dynamic: bool,
}

impl CameraProcess {
    pub fn new(beta_cam: f64, origin: OriginPose, dynamic: bool) -> Result<Self> {
        let range = camera_range_from_scale(beta_cam)?;
        let speed = camera_speed_params(beta_cam)?;
        Ok(CameraProcess { range, speed, bounds: PoseBounds::new(&range, origin), dynamic })
    }

    pub fn reset(&self, rng: &mut Rng) -> CameraState {
        sample_camera_start(&self.bounds, &self.speed, self.dynamic, rng)
    }

    pub fn step(&self, state: &CameraState, rng: &mut Rng) -> CameraState {
        if self.dynamic {
            step_camera(state, &self.bounds, &self.speed, rng)
        } else {
            *state
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use std::f64::consts::FRAC_PI_2;

    const EPS: f64 = 1e-12;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < EPS
    }

    #[test]
    fn range_examples() {
        let r = camera_range_from_scale(1.0).unwrap();
        assert!(close(r.phi_max, FRAC_PI_2) && close(r.theta_max, FRAC_PI_2));
        assert!(close(r.roll_max, FRAC_PI_2));
        assert!(close(r.r_min, 0.5) && close(r.r_max, 2.5));

        let r = camera_range_from_scale(0.0).unwrap();
        assert_eq!((r.phi_max, r.theta_max, r.roll_max, r.r_min, r.r_max), (0.0, 0.0, 0.0, 1.0, 1.0));

        let r = camera_range_from_scale(0.2).unwrap();
        assert!(close(r.phi_max, 0.1 * PI) && close(r.roll_max, 0.1 * PI));
        assert!(close(r.r_min, 0.9) && close(r.r_max, 1.3));

        assert!(camera_range_from_scale(1.01).is_err());
        assert!(camera_range_from_scale(f64::NAN).is_err());
    }

    #[test]
    fn speed_examples() {
        let s = camera_speed_params(0.5).unwrap();
        assert!(close(s.v_max, 0.2) && close(s.sigma, 0.05));
        assert!(close(s.v_roll_max, PI / 100.0) && close(s.sigma_roll, PI / 600.0));
        let s = camera_speed_params(1.0).unwrap();
        assert!(close(s.v_max, 0.4) && close(s.sigma, 0.1));
        assert!(close(s.v_roll_max, PI / 50.0) && close(s.sigma_roll, PI / 300.0));
        let s = camera_speed_params(0.0).unwrap();
        assert_eq!((s.v_max, s.sigma, s.v_roll_max, s.sigma_roll), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn zero_scale_start_is_origin() {
        let origin = OriginPose { phi: -FRAC_PI_2, theta: 1.2 };
        let p = CameraProcess::new(0.0, origin, true).unwrap();
        let mut rng = rng_from_seed(3);
        let s = p.reset(&mut rng);
        assert_eq!(s, CameraState::at_origin(origin));
        let stepped = p.step(&s, &mut rng);
        assert_eq!(stepped, s);
    }

    #[test]
    fn still_camera_stays_put() {
        let origin = OriginPose { phi: 0.3, theta: 1.0 };
        let range = camera_range_from_scale(0.5).unwrap();
        let bounds = PoseBounds::new(&range, origin);
        let speed = SpeedParams { v_max: 0.2, sigma: 0.0, v_roll_max: 0.1, sigma_roll: 0.0 };
        let s = CameraState { phi: 0.4, theta: 0.9, r: 1.1, roll: 0.05, ..CameraState::at_origin(origin) };
        let mut rng = rng_from_seed(0);
        assert_eq!(step_camera(&s, &bounds, &speed, &mut rng), s);
    }

    #[test]
    fn deterministic_start() {
        let p = CameraProcess::new(1.0, OriginPose { phi: 0.0, theta: 1.3 }, true).unwrap();
        let a = p.reset(&mut rng_from_seed(11));
        let b = p.reset(&mut rng_from_seed(11));
        assert_eq!(a, b);
    }

    #[test]
    fn spherical_roundtrip_unwraps_azimuth() {
        let (phi, theta, r) = offset_to_spherical(&spherical_offset(3.0, 0.7, 1.4), 3.1);
        assert!((phi - 3.0).abs() < 1e-12 && (theta - 0.7).abs() < 1e-12 && (r - 1.4).abs() < 1e-12);
        // Crossing the atan2 branch cut keeps phi continuous.
        let (phi, _, _) = offset_to_spherical(&spherical_offset(PI + 0.1, 0.7, 1.0), PI);
        assert!((phi - (PI + 0.1)).abs() < 1e-12);
    }
}
