//! Pixel-based continuous-control tasks with procedural visual distractions
//! (camera pose, body colours, background video), a wire-protocol server,
//! and a QT-Opt baseline with crop augmentation.

pub mod background;
pub mod config;
pub mod distraction;
pub mod env;
pub mod error;
pub mod frame;
pub mod geometry;
pub mod harness;
pub mod physics;
pub mod protocol;
pub mod qtopt;
pub mod render;
pub mod rng;

pub use config::{DifficultyConfig, Preset};
pub use env::{make_env, EnvConfig, Environment, Observation, ObservationMode, TimeStep};
pub use error::{Error, Result};
pub use frame::Frame;
pub use physics::{TaskName, TaskSpec};
