//! Fixed-timestep planar dynamics and rewards for the benchmark tasks.
//!
//! One control step lasts 10 ms and is integrated with semi-implicit Euler
//! in [`INTEGRATION_STEPS`] equal increments. An agent step repeats the
//! action for `action_repeat` control steps; every control step yields a
//! reward in [0, 1].

pub mod ball_in_cup;
pub mod cartpole;
pub mod reacher;
pub mod tolerance;

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FocusKind;
use crate::render::scene::Primitive;
use crate::rng::Rng;

pub use ball_in_cup::BallInCupParams;
pub use cartpole::CartpoleParams;
pub use reacher::ReacherParams;

pub const CONTROL_TIMESTEP: f64 = 0.01;
pub const INTEGRATION_STEPS: usize = 10;
/// Control steps per episode, independent of the action repeat.
pub const CONTROL_STEPS_PER_EPISODE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskName {
    CartpoleSwingup,
    ReacherEasy,
    BallInCupCatch,
}

impl TaskName {
    pub const ALL: [TaskName; 3] = [TaskName::CartpoleSwingup, TaskName::ReacherEasy, TaskName::BallInCupCatch];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskName::CartpoleSwingup => "cartpole_swingup",
            TaskName::ReacherEasy => "reacher_easy",
            TaskName::BallInCupCatch => "ball_in_cup_catch",
        }
    }
}

impl fmt::Display for TaskName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for TaskName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskName::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown task '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: TaskName,
    pub action_dim: usize,
    pub action_repeat: usize,
    /// Agent steps per episode.
    pub episode_steps: usize,
    pub ground_opacity: f64,
}

impl TaskSpec {
    pub fn new(name: TaskName) -> Self {
        let (action_dim, action_repeat, ground_opacity) = match name {
            TaskName::CartpoleSwingup => (1, 8, 0.3),
            TaskName::ReacherEasy => (2, 4, 0.0),
            TaskName::BallInCupCatch => (2, 4, 0.3),
        };
        TaskSpec {
            name,
            action_dim,
            action_repeat,
            episode_steps: CONTROL_STEPS_PER_EPISODE / action_repeat,
            ground_opacity,
        }
    }
}

/// Generalized positions and velocities; layout is task specific. `aux`
/// holds episode constants such as the reacher target.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsState {
    pub q: Vec<f64>,
    pub qvel: Vec<f64>,
    pub aux: Vec<f64>,
    pub control_steps: usize,
}

impl PhysicsState {
    pub fn new(q: Vec<f64>, qvel: Vec<f64>, aux: Vec<f64>) -> Self {
        PhysicsState { q, qvel, aux, control_steps: 0 }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.qvel).chain(&self.aux).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dynamics {
    Cartpole(CartpoleParams),
    Reacher(ReacherParams),
    BallInCup(BallInCupParams),
}

/// A task: its spec plus the dynamics parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task {
    pub spec: TaskSpec,
    pub dynamics: Dynamics,
}

impl Task {
    pub fn new(name: TaskName) -> Self {
        let dynamics = match name {
            TaskName::CartpoleSwingup => Dynamics::Cartpole(CartpoleParams::default()),
            TaskName::ReacherEasy => Dynamics::Reacher(ReacherParams::default()),
            TaskName::BallInCupCatch => Dynamics::BallInCup(BallInCupParams::default()),
        };
        Task { spec: TaskSpec::new(name), dynamics }
    }

    pub fn reset(&self, rng: &mut Rng) -> PhysicsState {
        match &self.dynamics {
            Dynamics::Cartpole(p) => p.reset(rng),
            Dynamics::Reacher(p) => p.reset(rng),
            Dynamics::BallInCup(p) => p.reset(rng),
        }
    }

    /// Validates and clips an action to [-1, 1].
    pub fn check_action(&self, action: &[f64]) -> Result<Vec<f64>> {
        if action.len() != self.spec.action_dim {
            return Err(Error::env(format!(
                "{} expects {} action dimensions, got {}",
                self.spec.name,
                self.spec.action_dim,
                action.len()
            )));
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::env("non-finite action"));
        }
        Ok(action.iter().map(|a| a.clamp(-1.0, 1.0)).collect())
    }

    /// Advances one 10 ms control step and returns its reward.
    pub fn control_step(&self, state: &mut PhysicsState, action: &[f64]) -> f64 {
        let dt = CONTROL_TIMESTEP / INTEGRATION_STEPS as f64;
        for _ in 0..INTEGRATION_STEPS {
            match &self.dynamics {
                Dynamics::Cartpole(p) => p.integrate(state, action, dt),
                Dynamics::Reacher(p) => p.integrate(state, action, dt),
                Dynamics::BallInCup(p) => p.integrate(state, action, dt),
            }
        }
        state.control_steps += 1;
        match &self.dynamics {
            Dynamics::Cartpole(p) => p.reward(state, action),
            Dynamics::Reacher(p) => p.reward(state),
            Dynamics::BallInCup(p) => p.reward(state),
        }
    }

    /// One agent step: `action_repeat` control steps with the same action.
    /// Returns the summed reward.
    pub fn step(&self, state: &mut PhysicsState, action: &[f64]) -> Result<f64> {
        let action = self.check_action(action)?;
        let mut total = 0.0;
        for _ in 0..self.spec.action_repeat {
            total += self.control_step(state, &action);
        }
        if !state.is_finite() {
            return Err(Error::env("physics state became non-finite"));
        }
        Ok(total)
    }

    pub fn observation(&self, state: &PhysicsState) -> Vec<f64> {
        match &self.dynamics {
            Dynamics::Cartpole(p) => p.observation(state),
            Dynamics::Reacher(p) => p.observation(state),
            Dynamics::BallInCup(p) => p.observation(state),
        }
    }

    pub fn observation_dim(&self) -> usize {
        match self.spec.name {
            TaskName::CartpoleSwingup => 5,
            TaskName::ReacherEasy | TaskName::BallInCupCatch => 8,
        }
    }

    pub fn agent_position(&self, state: &PhysicsState) -> Vector3<f64> {
        match &self.dynamics {
            Dynamics::Cartpole(p) => p.agent_position(state),
            Dynamics::Reacher(p) => p.agent_position(state),
            Dynamics::BallInCup(p) => p.agent_position(state),
        }
    }

    pub fn primitives(&self, state: &PhysicsState) -> Vec<Primitive> {
        match &self.dynamics {
            Dynamics::Cartpole(p) => p.primitives(state),
            Dynamics::Reacher(p) => p.primitives(state),
            Dynamics::BallInCup(p) => p.primitives(state),
        }
    }

    pub fn body_colors(&self) -> Vec<[f64; 3]> {
        match self.spec.name {
            TaskName::CartpoleSwingup => cartpole::BODY_COLORS.to_vec(),
            TaskName::ReacherEasy => reacher::BODY_COLORS.to_vec(),
            TaskName::BallInCupCatch => ball_in_cup::BODY_COLORS.to_vec(),
        }
    }

    /// Undistracted camera: `(azimuth, polar angle, distance)` around the
    /// focus point, and how the focus point is chosen.
    pub fn camera(&self) -> (f64, f64, f64, FocusKind) {
        use std::f64::consts::FRAC_PI_2;
        match self.spec.name {
            TaskName::CartpoleSwingup => (-FRAC_PI_2, FRAC_PI_2 - 0.12, 4.5, FocusKind::Fixed),
            TaskName::ReacherEasy => (-FRAC_PI_2, 0.35, 0.75, FocusKind::Fixed),
            TaskName::BallInCupCatch => (-FRAC_PI_2, FRAC_PI_2 - 0.08, 1.1, FocusKind::Fixed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use std::f64::consts::PI;

    #[test]
    fn action_repeats_and_episode_lengths() {
        let cp = TaskSpec::new(TaskName::CartpoleSwingup);
        assert_eq!((cp.action_repeat, cp.episode_steps, cp.ground_opacity), (8, 125, 0.3));
        let re = TaskSpec::new(TaskName::ReacherEasy);
        assert_eq!((re.action_repeat, re.episode_steps, re.ground_opacity), (4, 250, 0.0));
        let bic = TaskSpec::new(TaskName::BallInCupCatch);
        assert_eq!((bic.action_repeat, bic.episode_steps, bic.ground_opacity), (4, 250, 0.3));
    }

    #[test]
    fn cartpole_starts_hanging() {
        let task = Task::new(TaskName::CartpoleSwingup);
        let mut rng = rng_from_seed(0);
        for _ in 0..1000 {
            let s = task.reset(&mut rng);
            assert!((s.q[1] - PI).abs() <= 0.1);
        }
    }

    #[test]
    fn same_seed_same_start() {
        for name in TaskName::ALL {
            let task = Task::new(name);
            assert_eq!(task.reset(&mut rng_from_seed(4)), task.reset(&mut rng_from_seed(4)));
        }
    }

    #[test]
    fn reacher_target_is_reachable() {
        let task = Task::new(TaskName::ReacherEasy);
        let Dynamics::Reacher(p) = task.dynamics else { unreachable!() };
        let mut rng = rng_from_seed(1);
        for _ in 0..1000 {
            let s = task.reset(&mut rng);
            let d = p.target(&s).norm();
            assert!(d >= 0.05 && d <= p.reach(), "{d}");
        }
    }

    #[test]
    fn reacher_reward_one_on_target() {
        let task = Task::new(TaskName::ReacherEasy);
        let Dynamics::Reacher(p) = task.dynamics else { unreachable!() };
        let mut s = task.reset(&mut rng_from_seed(2));
        let tip = p.fingertip(&s);
        s.aux = vec![tip.x + 0.01, tip.y];
        assert_eq!(task.control_step(&mut s, &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn ball_resting_in_cup_stays_caught() {
        let task = Task::new(TaskName::BallInCupCatch);
        let Dynamics::BallInCup(p) = task.dynamics else { unreachable!() };
        let mut s = PhysicsState::new(vec![0.1, 0.0, 0.1, 0.05], vec![0.0; 4], vec![]);
        assert!(p.in_cup(&s));
        for _ in 0..1000 {
            assert_eq!(task.control_step(&mut s, &[0.0, 0.0]), 1.0);
            assert!(p.string_violation(&s) < 1e-6);
        }
    }

    #[test]
    fn string_never_overstretches() {
        let task = Task::new(TaskName::BallInCupCatch);
        let Dynamics::BallInCup(p) = task.dynamics else { unreachable!() };
        let mut rng = rng_from_seed(3);
        let mut s = task.reset(&mut rng);
        for i in 0..2000 {
            let a = [((i as f64) * 0.05).sin(), ((i as f64) * 0.031).cos()];
            task.control_step(&mut s, &a);
            assert!(p.string_violation(&s) < 1e-6);
        }
    }

    #[test]
    fn cartpole_energy_conserved() {
        let task = Task::new(TaskName::CartpoleSwingup);
        let Dynamics::Cartpole(p) = task.dynamics else { unreachable!() };
        for theta in [PI + 0.1, PI - 1.0, 0.5] {
            let mut s = PhysicsState::new(vec![0.0, theta], vec![0.0, 0.0], vec![]);
            let e0 = p.energy(&s);
            for _ in 0..1000 {
                task.control_step(&mut s, &[0.0]);
                assert!(((p.energy(&s) - e0) / e0).abs() < 0.01);
            }
        }
    }

    #[test]
    fn rewards_bounded() {
        for name in TaskName::ALL {
            let task = Task::new(name);
            let mut rng = rng_from_seed(9);
            let mut s = task.reset(&mut rng);
            for i in 0..300 {
                let a: Vec<f64> = (0..task.spec.action_dim).map(|k| ((i * (k + 3)) as f64 * 0.1).sin()).collect();
                let r = task.step(&mut s, &a).unwrap();
                assert!((0.0..=task.spec.action_repeat as f64).contains(&r));
            }
        }
    }

    #[test]
    fn bad_actions() {
        let task = Task::new(TaskName::ReacherEasy);
        let mut s = task.reset(&mut rng_from_seed(0));
        assert!(task.step(&mut s, &[0.0]).is_err());
        assert!(task.step(&mut s, &[f64::NAN, 0.0]).is_err());
        assert_eq!(task.check_action(&[3.0, -2.0]).unwrap(), vec![1.0, -1.0]);
    }
}
