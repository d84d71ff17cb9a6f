//! Background video selection and ping-pong playback.

use rand::Rng as _;

use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BackgroundSchedule {
    pub video_index: usize,
    pub frame_index: usize,
    /// +1 or -1.
    pub direction: i8,
}

/// Picks a video among the first `num_videos` and a frame within it.
///
/// Returns `None` when the background distraction is disabled
/// (`num_videos == 0`).
///
/// # Panics
///
/// If fewer than `num_videos` lengths are supplied or a length is zero.
pub fn sample_background(
    num_videos: usize,
    video_lengths: &[usize],
    rng: &mut Rng,
) -> Option<BackgroundSchedule> {
    if num_videos == 0 {
        return None;
    }
    assert!(video_lengths.len() >= num_videos, "not enough videos loaded");
    let video_index = rng.random_range(0..num_videos);
    let length = video_lengths[video_index];
    assert!(length >= 1, "empty video {video_index}");
    let frame_index = rng.random_range(0..length);
    let direction = if rng.random::<bool>() { 1 } else { -1 };
    Some(BackgroundSchedule { video_index, frame_index, direction })
}

/// Advances playback by one frame, bouncing off the first and last frame.
pub fn step_background(sched: &BackgroundSchedule, length: usize) -> BackgroundSchedule {
    if length <= 1 {
        return BackgroundSchedule { frame_index: 0, ..*sched };
    }
    let last = length as i64 - 1;
    let mut direction = sched.direction;
    let mut next = sched.frame_index as i64 + i64::from(direction);
    if !(0..=last).contains(&next) {
        direction = -direction;
        next = sched.frame_index as i64 + i64::from(direction);
    }
    BackgroundSchedule { frame_index: next as usize, direction, ..*sched }
}
