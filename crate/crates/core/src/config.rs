use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Difficulty of every distraction axis.
///
/// `beta_cam` and `beta_rgb` scale range and speed of the camera and color
/// processes. `beta_bg` is the blend weight of the video background over the
/// skybox and `num_videos` the number of background videos in rotation
/// (0 disables the background distraction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifficultyConfig {
    pub beta_cam: f64,
    pub beta_rgb: f64,
    pub beta_bg: f64,
    pub num_videos: usize,
    pub dynamic: bool,
    pub seed: u64,
}

impl Default for DifficultyConfig {
    fn default() -> Self {
        Self::none()
    }
}

impl DifficultyConfig {
    pub fn none() -> Self {
        DifficultyConfig {
            beta_cam: 0.0,
            beta_rgb: 0.0,
            beta_bg: 0.0,
            num_videos: 0,
            dynamic: false,
            seed: 0,
        }
    }

    pub fn with_dynamic(mut self, dynamic: bool) -> Self {
        self.dynamic = dynamic;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, beta) in [
            ("beta_cam", self.beta_cam),
            ("beta_rgb", self.beta_rgb),
            ("beta_bg", self.beta_bg),
        ] {
            check_beta(name, beta)?;
        }
        Ok(())
    }

    pub fn background_enabled(&self) -> bool {
        self.num_videos > 0
    }
}

pub(crate) fn check_beta(name: &str, beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::config(format!("{name} must lie in [0, 1], got {beta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    None,
    Easy,
    Medium,
    Blind,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::None, Preset::Easy, Preset::Medium, Preset::Blind];

    pub fn name(self) -> &'static str {
        match self {
            Preset::None => "none",
            Preset::Easy => "easy",
            Preset::Medium => "medium",
            Preset::Blind => "blind",
        }
    }

    /// Distraction parameters of the preset (static, seed 0).
    ///
    /// Presets with background videos use the fully opaque background.
    pub fn difficulty(self) -> DifficultyConfig {
        match self {
            Preset::None => DifficultyConfig::none(),
            Preset::Easy => DifficultyConfig {
                beta_cam: 0.1,
                beta_rgb: 0.1,
                beta_bg: 1.0,
                num_videos: 4,
                ..DifficultyConfig::none()
            },
            Preset::Medium | Preset::Blind => DifficultyConfig {
                beta_cam: 0.2,
                beta_rgb: 0.2,
                beta_bg: 1.0,
                num_videos: 8,
                ..DifficultyConfig::none()
            },
        }
    }

    /// The blind preset turns the camera to face away from the scene.
    pub fn camera_backwards(self) -> bool {
        matches!(self, Preset::Blind)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Preset::None),
            "easy" => Ok(Preset::Easy),
            "medium" => Ok(Preset::Medium),
            "blind" => Ok(Preset::Blind),
            other => Err(Error::config(format!("unknown preset '{other}'"))),
        }
    }
}
