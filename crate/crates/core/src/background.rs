//! Background video sources.
//!
//! On-disk layout:
//!
//! ```text
//! <root>/<split>/<video_name>/<NNNNN>.ppm
//! ```
//!
//! `split` is `train` or `validation`. Every video directory holds frames
//! named by their zero-based frame number (any number of digits) as binary
//! PPM (`P6`, 8-bit RGB, maxval 255) or PNG. Videos are ordered
//! lexicographically by directory name and frames numerically, so "the
//! first b videos" is stable for a given tree.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::frame::{load_image, Frame};
use crate::rng::{rng_from_seed, splitmix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            other => Err(Error::config(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub id: String,
    frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(id: impl Into<String>, frames: Vec<Frame>) -> Result<Self> {
        let id = id.into();
        let first = frames
            .first()
            .ok_or_else(|| Error::config(format!("video '{id}' has no frames")))?;
        if frames.iter().any(|f| f.size() != first.size()) {
            return Err(Error::config(format!("video '{id}' mixes frame sizes")));
        }
        Ok(FrameSequence { id, frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, index: usize) -> &Frame {
        &self.frames[index]
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn size(&self) -> (usize, usize) {
        self.frames[0].size()
    }
}

/// Immutable once built; wrap in an `Arc` to share between environments.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSet {
    pub split: Split,
    sequences: Vec<FrameSequence>,
}

impl BackgroundSet {
    /// Sorts sequences by id.
    pub fn new(split: Split, mut sequences: Vec<FrameSequence>) -> Self {
        sequences.sort_by(|a, b| a.id.cmp(&b.id));
        BackgroundSet { split, sequences }
    }

    pub fn sequences(&self) -> &[FrameSequence] {
        &self.sequences
    }

    pub fn ids(&self) -> Vec<&str> {
        self.sequences.iter().map(|s| s.id.as_str()).collect()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.sequences.iter().map(FrameSequence::len).collect()
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn frame(&self, video: usize, frame: usize) -> &Frame {
        self.sequences[video].frame(frame)
    }

    /// The lexicographically first `b` videos.
    pub fn first(&self, b: usize) -> BackgroundSet {
        BackgroundSet { split: self.split, sequences: self.sequences.iter().take(b).cloned().collect() }
    }

    pub fn resized(&self, size: (usize, usize)) -> BackgroundSet {
        let sequences = self
            .sequences
            .iter()
            .map(|s| FrameSequence {
                id: s.id.clone(),
                frames: s.frames.iter().map(|f| f.resized(size.0, size.1)).collect(),
            })
            .collect();
        BackgroundSet { split: self.split, sequences }
    }

    pub fn into_shared(self) -> Arc<BackgroundSet> {
        Arc::new(self)
    }
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("ppm" | "png")
    )
}

fn load_video(dir: &Path, id: String, size: Option<(usize, usize)>) -> Result<FrameSequence> {
    let mut numbered: Vec<(u64, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if !path.is_file() || !is_image(&path) {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let n = stem.parse::<u64>().map_err(|_| Error::Load {
            path: path.clone(),
            reason: "frame file name is not a frame number".into(),
        })?;
        numbered.push((n, path));
    }
    numbered.sort();
    let mut frames = Vec::with_capacity(numbered.len());
    for (_, path) in &numbered {
        let frame = load_image(path)?;
        if let Some(first) = frames.first().map(Frame::size) {
            if frame.size() != first {
                return Err(Error::Load {
                    path: path.clone(),
                    reason: format!("frame is {:?}, earlier frames are {:?}", frame.size(), first),
                });
            }
        }
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(Error::Load { path: dir.to_path_buf(), reason: "video directory has no frames".into() });
    }
    if let Some((w, h)) = size {
        frames = frames.iter().map(|f| f.resized(w, h)).collect();
    }
    FrameSequence::new(id, frames)
}

/// Reads `<root>/<split>/*/`. Frames are resized to `size` when given.
pub fn load_background_set(root: &Path, split: Split, size: Option<(usize, usize)>) -> Result<BackgroundSet> {
    let dir = root.join(split.dir_name());
    if !dir.is_dir() {
        return Err(Error::Load { path: dir, reason: "directory does not exist".into() });
    }
    let mut videos: Vec<(String, PathBuf)> = Vec::new();
    for entry in fs::read_dir(&dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()).map(str::to_owned) else {
            continue;
        };
        if path.is_dir() && !name.starts_with('.') {
            videos.push((name, path));
        }
    }
    if videos.is_empty() {
        return Err(Error::NoVideos(dir));
    }
    videos.sort();
    let sequences = videos
        .into_iter()
        .map(|(id, path)| load_video(&path, id, size))
        .collect::<Result<Vec<_>>>()?;
    Ok(BackgroundSet::new(split, sequences))
}

struct Wave {
    kx: f64,
    ky: f64,
    omega: f64,
    phase: f64,
}

/// Deterministic animated interference patterns, one parameter draw per
/// video. Video `i` depends only on `(seed, i)`, so a larger `count` keeps
/// the earlier videos unchanged.
pub fn procedural_background(count: usize, length: usize, size: (usize, usize), seed: u64) -> BackgroundSet {
    let (w, h) = size;
    let scale = 64.0 / w.max(h).max(1) as f64;
    let sequences = (0..count)
        .map(|v| {
            let mut rng = rng_from_seed(splitmix64(seed ^ splitmix64(v as u64 + 1)));
            let tint: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.3..1.0));
            let waves: Vec<[Wave; 2]> = (0..3)
                .map(|_| {
                    std::array::from_fn(|_| Wave {
                        kx: rng.random_range(-0.15..0.15) * scale,
                        ky: rng.random_range(-0.15..0.15) * scale,
                        omega: rng.random_range(0.03..0.12),
                        phase: rng.random_range(0.0..std::f64::consts::TAU),
                    })
                })
                .collect();
            let frames = (0..length)
                .map(|t| {
                    let t = t as f64;
                    let mut frame = Frame::new(w, h);
                    for y in 0..h {
                        for x in 0..w {
                            let rgb = std::array::from_fn(|c| {
                                let s: f64 = waves[c]
                                    .iter()
                                    .map(|wv| (wv.kx * x as f64 + wv.ky * y as f64 + wv.omega * t + wv.phase).sin())
                                    .sum::<f64>()
                                    / 2.0;
                                (255.0 * tint[c] * (0.5 + 0.5 * s)).round() as u8
                            });
                            frame.set_pixel(x, y, rgb);
                        }
                    }
                    frame
                })
                .collect();
            FrameSequence { id: format!("procedural_{v:03}"), frames }
        })
        .collect();
    BackgroundSet::new(Split::Train, sequences)
}
