//! Environment facade: physics, distractions, camera and renderer composed
//! behind `reset` / `step`.

use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::background::{procedural_background, BackgroundSet};
use crate::config::{DifficultyConfig, Preset};
use crate::distraction::{CameraState, ColorState, DistractionState, Distractions, OriginPose};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geometry::{look_at_with_roll, spherical_to_cartesian, CameraExtrinsics, FocusMode, DEFAULT_FOV};
use crate::physics::{PhysicsState, Task, TaskName, TaskSpec};
use crate::render::render;
use crate::render::scene::{default_ground, default_light, SceneDescription, DEFAULT_SKYBOX};
use crate::rng::{component_rng, Rng, TAG_PHYSICS};

pub const DEFAULT_RENDER_SIZE: (usize, usize) = (100, 100);

/// Frames per procedurally generated background video.
pub const PROCEDURAL_VIDEO_LENGTH: usize = 40;
/// Seed of the built-in procedural video set; fixed so that every
/// environment sees the same "dataset".
pub const PROCEDURAL_DATASET_SEED: u64 = 2017;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationMode {
    #[default]
    Pixels,
    /// Low-dimensional physics observation; nothing is rendered.
    State,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub task: TaskName,
    /// Distraction parameters; its `seed` is the environment's master seed.
    pub difficulty: DifficultyConfig,
    pub camera_backwards: bool,
    pub render_size: (usize, usize),
    pub observation: ObservationMode,
    pub fov: f64,
}

impl EnvConfig {
    pub fn new(task: TaskName, difficulty: DifficultyConfig) -> Self {
        EnvConfig {
            task,
            difficulty,
            camera_backwards: false,
            render_size: DEFAULT_RENDER_SIZE,
            observation: ObservationMode::Pixels,
            fov: DEFAULT_FOV,
        }
    }

    pub fn from_preset(task: TaskName, preset: Preset, dynamic: bool, seed: u64) -> Self {
        EnvConfig {
            camera_backwards: preset.camera_backwards(),
            ..Self::new(task, preset.difficulty().with_dynamic(dynamic).with_seed(seed))
        }
    }

    pub fn with_render_size(mut self, size: (usize, usize)) -> Self {
        self.render_size = size;
        self
    }

    pub fn with_observation(mut self, mode: ObservationMode) -> Self {
        self.observation = mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Pixels(Frame),
    State(Vec<f64>),
}

impl Observation {
    pub fn frame(&self) -> Option<&Frame> {
        match self {
            Observation::Pixels(f) => Some(f),
            Observation::State(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeStep {
    pub observation: Observation,
    /// Sum of the control-step rewards over the action repeat; 0 on reset.
    pub reward: f64,
    pub discount: f64,
    pub last: bool,
}

/// Camera of a task without distractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraRig {
    pub origin: OriginPose,
    pub r_original: f64,
    pub fov: f64,
    pub backwards: bool,
}

impl CameraRig {
    pub fn for_task(task: &Task, fov: f64, backwards: bool) -> Self {
        let (phi, theta, r_original, _) = task.camera();
        CameraRig { origin: OriginPose { phi, theta }, r_original, fov, backwards }
    }

    pub fn extrinsics(&self, pose: &CameraState, focus: Vector3<f64>) -> Result<CameraExtrinsics> {
        let position = spherical_to_cartesian(pose, focus, self.r_original);
        let ext = look_at_with_roll(position, focus, pose.roll, self.fov)?;
        Ok(if self.backwards { ext.reversed() } else { ext })
    }
}

pub fn task_scene(task: &Task, physics: &PhysicsState) -> SceneDescription {
    SceneDescription {
        primitives: task.primitives(physics),
        ground: Some(default_ground(task.spec.ground_opacity)),
        skybox: DEFAULT_SKYBOX,
        light: default_light(),
    }
}

/// Reference render with the original camera, original colours and no
/// background video.
pub fn undistracted_render(task: &Task, physics: &PhysicsState, focus: Vector3<f64>, size: (usize, usize)) -> Result<Frame> {
    let rig = CameraRig::for_task(task, DEFAULT_FOV, false);
    let ext = rig.extrinsics(&CameraState::at_origin(rig.origin), focus)?;
    let colors = ColorState::original(&task.body_colors());
    render(&task_scene(task, physics), &ext, &colors, None, 0.0, size)
}

struct Episode {
    physics: PhysicsState,
    distraction: DistractionState,
    steps: usize,
    done: bool,
}

pub struct Environment {
    config: EnvConfig,
    task: Task,
    rig: CameraRig,
    focus: FocusMode,
    distractions: Distractions,
    backgrounds: Option<Arc<BackgroundSet>>,
    physics_rng: Rng,
    episode: Option<Episode>,
}

impl std::fmt::Debug for Environment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Environment").field("config", &self.config).finish_non_exhaustive()
    }
}

/// Builds an environment with the procedural background videos.
pub fn make_env(config: EnvConfig) -> Result<Environment> {
    Environment::new(config, None)
}

impl Environment {
    /// `backgrounds` supplies the video set; when `None` and the config asks
    /// for videos, the procedural set is generated.
    pub fn new(config: EnvConfig, backgrounds: Option<Arc<BackgroundSet>>) -> Result<Self> {
        config.difficulty.validate()?;
        let (w, h) = config.render_size;
        if w == 0 || h == 0 {
            return Err(Error::config("render size must be positive"));
        }
        let task = Task::new(config.task);
        let b = config.difficulty.num_videos;
        let backgrounds = if b == 0 {
            None
        } else {
            let set = match backgrounds {
                Some(set) => {
                    if set.len() < b {
                        return Err(Error::config(format!(
                            "{b} background videos requested, the set has {}",
                            set.len()
                        )));
                    }
                    let first = set.first(b);
                    let needs_resize = first.sequences().iter().any(|s| s.size() != config.render_size);
                    if needs_resize { first.resized(config.render_size) } else { first }
                }
                None => procedural_background(b, PROCEDURAL_VIDEO_LENGTH, config.render_size, PROCEDURAL_DATASET_SEED),
            };
            Some(Arc::new(set))
        };
        let rig = CameraRig::for_task(&task, config.fov, config.camera_backwards);
        let distractions = Distractions::new(
            config.difficulty,
            rig.origin,
            task.body_colors(),
            backgrounds.as_ref().map(|s| s.lengths()).unwrap_or_default(),
        )?;
        let (_, _, _, focus_kind) = task.camera();
        Ok(Environment {
            physics_rng: component_rng(config.difficulty.seed, TAG_PHYSICS),
            focus: FocusMode::new(focus_kind, Vector3::zeros()),
            config,
            task,
            rig,
            distractions,
            backgrounds,
            episode: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn spec(&self) -> &TaskSpec {
        &self.task.spec
    }

    pub fn task(&self) -> &Task {
        &self.task
    }

    pub fn focus(&self) -> &FocusMode {
        &self.focus
    }

    pub fn physics_state(&self) -> Option<&PhysicsState> {
        self.episode.as_ref().map(|e| &e.physics)
    }

    pub fn distraction_state(&self) -> Option<&DistractionState> {
        self.episode.as_ref().map(|e| &e.distraction)
    }

    /// Low-dimensional physics observation of the current state.
    pub fn physics_observation(&self) -> Option<Vec<f64>> {
        self.physics_state().map(|p| self.task.observation(p))
    }

    pub fn observation_size(&self) -> (usize, usize) {
        self.config.render_size
    }

    pub fn reset(&mut self) -> Result<TimeStep> {
        let physics = self.task.reset(&mut self.physics_rng);
        self.focus.reset(self.task.agent_position(&physics));
        let distraction = self.distractions.reset();
        self.episode = Some(Episode { physics, distraction, steps: 0, done: false });
        Ok(TimeStep { observation: self.observe()?, reward: 0.0, discount: 1.0, last: false })
    }

    pub fn step(&mut self, action: &[f64]) -> Result<TimeStep> {
        let episode_steps = self.task.spec.episode_steps;
        let episode = self.episode.as_mut().ok_or_else(|| Error::env("step called before reset"))?;
        if episode.done {
            return Err(Error::env("step called after the last time step; reset first"));
        }
        let reward = self.task.step(&mut episode.physics, action)?;
        episode.steps += 1;
        self.focus.update(self.task.agent_position(&episode.physics));
        episode.distraction = self.distractions.step(&episode.distraction);
        let last = episode.steps >= episode_steps;
        episode.done = last;
        Ok(TimeStep { observation: self.observe()?, reward, discount: 1.0, last })
    }

    fn observe(&self) -> Result<Observation> {
        let episode = self.episode.as_ref().expect("observe after reset");
        Ok(match self.config.observation {
            ObservationMode::State => Observation::State(self.task.observation(&episode.physics)),
            ObservationMode::Pixels => Observation::Pixels(self.render_state(&episode.physics, &episode.distraction)?),
        })
    }

    /// Renders an arbitrary physics state under the given distractions with
    /// the environment's current focus point.
    pub fn render_state(&self, physics: &PhysicsState, distraction: &DistractionState) -> Result<Frame> {
        let ext = self.rig.extrinsics(&distraction.camera, self.focus.focus_point)?;
        let background = distraction
            .background
            .zip(self.backgrounds.as_ref())
            .map(|(b, set)| set.frame(b.video_index, b.frame_index));
        render(
            &task_scene(&self.task, physics),
            &ext,
            &distraction.colors,
            background,
            self.config.difficulty.beta_bg,
            self.config.render_size,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(task: TaskName, preset: Preset, dynamic: bool, seed: u64) -> Environment {
        make_env(EnvConfig::from_preset(task, preset, dynamic, seed).with_render_size((48, 48))).unwrap()
    }

    #[test]
    fn episode_accounting() {
        for task in TaskName::ALL {
            let mut e = env(task, Preset::None, false, 0);
            e.reset().unwrap();
            let action = vec![0.0; e.spec().action_dim];
            let mut n = 0;
            loop {
                let ts = e.step(&action).unwrap();
                n += 1;
                if ts.last {
                    break;
                }
            }
            assert_eq!(n * e.spec().action_repeat, 1000);
            assert!(e.step(&action).is_err());
        }
    }

    #[test]
    fn step_requires_reset_and_right_dims() {
        let mut e = env(TaskName::ReacherEasy, Preset::Easy, true, 1);
        assert!(e.step(&[0.0, 0.0]).is_err());
        e.reset().unwrap();
        assert!(e.step(&[0.0]).is_err());
        assert!(e.step(&[0.0, 0.0]).is_ok());
    }

    #[test]
    fn same_seed_same_first_observation() {
        let a = env(TaskName::ReacherEasy, Preset::Easy, true, 1).reset().unwrap();
        let b = env(TaskName::ReacherEasy, Preset::Easy, true, 1).reset().unwrap();
        assert_eq!(a, b);
        let c = env(TaskName::ReacherEasy, Preset::Easy, true, 2).reset().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn static_distractions_constant_over_episode() {
        let mut e = env(TaskName::CartpoleSwingup, Preset::Medium, false, 3);
        e.reset().unwrap();
        let d0 = e.distraction_state().unwrap().clone();
        let p0 = e.physics_state().unwrap().clone();
        for _ in 0..30 {
            e.step(&[1.0]).unwrap();
            assert_eq!(e.distraction_state().unwrap(), &d0);
        }
        assert_ne!(e.physics_state().unwrap(), &p0);
    }

    #[test]
    fn dynamic_distractions_move() {
        let mut e = env(TaskName::BallInCupCatch, Preset::Medium, true, 3);
        e.reset().unwrap();
        let d0 = e.distraction_state().unwrap().clone();
        e.step(&[0.0, 0.0]).unwrap();
        assert_ne!(e.distraction_state().unwrap(), &d0);
    }

    #[test]
    fn state_observations_skip_rendering() {
        let cfg = EnvConfig::from_preset(TaskName::CartpoleSwingup, Preset::None, false, 0)
            .with_observation(ObservationMode::State);
        let mut e = make_env(cfg).unwrap();
        let ts = e.reset().unwrap();
        assert!(matches!(ts.observation, Observation::State(ref v) if v.len() == 5));
    }

    #[test]
    fn supplied_set_must_be_large_enough() {
        let set = Arc::new(procedural_background(2, 3, (8, 8), 0));
        let cfg = EnvConfig::from_preset(TaskName::CartpoleSwingup, Preset::Easy, false, 0);
        assert!(Environment::new(cfg.clone(), Some(set)).is_err());
        let set = Arc::new(procedural_background(4, 3, (8, 8), 0));
        let mut e = Environment::new(cfg.with_render_size((16, 16)), Some(set)).unwrap();
        assert_eq!(e.reset().unwrap().observation.frame().unwrap().size(), (16, 16));
    }
}
