//! Length-prefixed request/response protocol for driving environments out
//! of process.
//!
//! A message is a 4-byte big-endian length `n` followed by `n` bytes: a
//! UTF-8 JSON header terminated by `'\n'`, then an optional raw payload
//! (RGB bytes, row major, for pixel observations). Every request gets
//! exactly one response.

pub mod client;
pub mod codec;
pub mod server;

use serde::{Deserialize, Serialize};

use crate::config::Preset;
use crate::env::ObservationMode;
use crate::physics::TaskName;

pub use client::Client;
pub use codec::{decode_message, encode_message, read_message, write_message, Message, MAX_MESSAGE_LEN};
pub use server::{serve_connection, serve_stdio, Server, ServerOptions};

pub const PROTOCOL_VERSION: u32 = 1;

/// Explicit distraction parameters in a `make` request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireDifficulty {
    pub beta_cam: f64,
    pub beta_rgb: f64,
    pub beta_bg: f64,
    pub num_videos: usize,
    #[serde(default)]
    pub camera_backwards: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MakeRequest {
    pub task: TaskName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<WireDifficulty>,
    #[serde(default)]
    pub dynamic: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationMode>,
}

impl MakeRequest {
    pub fn preset(task: TaskName, preset: Preset, dynamic: bool, seed: u64) -> Self {
        MakeRequest {
            task,
            preset: Some(preset),
            config: None,
            dynamic,
            seed,
            width: None,
            height: None,
            observation: None,
        }
    }

    pub fn with_size(mut self, width: usize, height: usize) -> Self {
        self.width = Some(width);
        self.height = Some(height);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    Hello { version: u32 },
    Make(MakeRequest),
    Reset {},
    Step { action: Vec<f64> },
    Close {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecResponse {
    pub task: TaskName,
    pub action_dim: usize,
    pub action_repeat: usize,
    pub episode_steps: usize,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub state_dim: usize,
}

/// Header of a time step. For pixel observations the frame follows as the
/// payload; for state observations `state` is set and the sizes are 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeStepHeader {
    pub reward: f64,
    pub discount: f64,
    pub last: bool,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Response {
    Hello { version: u32 },
    Spec(SpecResponse),
    TimeStep(TimeStepHeader),
    Closed {},
    Error { message: String },
}
