//! Distribution checks against analytic CDFs.

use nalgebra::Vector3;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use distraxion::distraction::{
    camera_range_from_scale, camera_speed_params, sample_background, sample_camera_start, sample_colors, step_colors,
    OriginPose, PoseBounds,
};
use distraxion::frame::random_crop_offset;
use distraxion::rng::rng_from_seed;

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// 0.1% critical value of the one-sample KS statistic.
fn ks_critical(n: usize) -> f64 {
    1.95 / (n as f64).sqrt()
}

fn chi_square_uniform(counts: &[usize]) -> (f64, f64) {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new((counts.len() - 1) as f64).unwrap().inverse_cdf(0.999);
    (stat, critical)
}

#[test]
fn color_start_is_uniform_in_band() {
    let mut rng = rng_from_seed(1);
    let (orig, beta) = (0.5, 0.2);
    let samples: Vec<f64> = (0..20_000).map(|_| sample_colors(&[[orig; 3]], beta, &mut rng).current(0)[1]).collect();
    let d = ks_statistic(samples.clone(), |x| ((x - (orig - beta)) / (2.0 * beta)).clamp(0.0, 1.0));
    assert!(d < ks_critical(samples.len()), "KS {d}");
}

#[test]
fn color_steps_are_gaussian() {
    let mut rng = rng_from_seed(2);
    let beta = 0.5;
    let mut increments = Vec::new();
    for _ in 0..20_000 {
        let start = sample_colors(&[[0.5; 3]], beta, &mut rng);
        let mut c = start.clone();
        c.bodies[0].current = [0.5; 3];
        let next = step_colors(&c, beta, &mut rng);
        increments.push(next.current(0)[0] - 0.5);
    }
    let n = Normal::new(0.0, 0.03 * beta).unwrap();
    let d = ks_statistic(increments.clone(), |x| n.cdf(x));
    assert!(d < ks_critical(increments.len()), "KS {d}");
}

#[test]
fn initial_velocity_uniform_in_ball() {
    let mut rng = rng_from_seed(3);
    let beta = 0.6;
    let range = camera_range_from_scale(beta).unwrap();
    let speed = camera_speed_params(beta).unwrap();
    let bounds = PoseBounds::new(&range, OriginPose { phi: 0.0, theta: 1.0 });
    let mut radial = Vec::new();
    let mut mean = Vector3::zeros();
    for _ in 0..20_000 {
        let s = sample_camera_start(&bounds, &speed, true, &mut rng);
        radial.push((s.velocity.norm() / speed.v_max).powi(3));
        mean += s.velocity;
    }
    let d = ks_statistic(radial.clone(), |x| x.clamp(0.0, 1.0));
    assert!(d < ks_critical(radial.len()), "KS {d}");
    assert!((mean / 20_000.0).norm() < 0.02 * speed.v_max);
}

#[test]
fn crop_offsets_uniform() {
    let mut rng = rng_from_seed(4);
    let mut counts = vec![0usize; 9];
    for _ in 0..45_000 {
        let o = random_crop_offset((8, 8), (6, 6), &mut rng);
        counts[o.y * 3 + o.x] += 1;
    }
    let (stat, critical) = chi_square_uniform(&counts);
    assert!(stat < critical, "chi2 {stat} >= {critical}");
}

#[test]
fn background_choice_uniform() {
    let mut rng = rng_from_seed(5);
    let lengths = [3, 5, 7, 2, 9, 4];
    let mut videos = vec![0usize; 4];
    let mut frames = vec![0usize; 5];
    let mut forward = 0usize;
    let n = 40_000;
    for _ in 0..n {
        let s = sample_background(4, &lengths, &mut rng).unwrap();
        videos[s.video_index] += 1;
        if s.video_index == 1 {
            frames[s.frame_index] += 1;
        }
        forward += usize::from(s.direction > 0);
    }
    let (stat, critical) = chi_square_uniform(&videos);
    assert!(stat < critical, "videos chi2 {stat}");
    let (stat, critical) = chi_square_uniform(&frames);
    assert!(stat < critical, "frames chi2 {stat}");
    let (stat, critical) = chi_square_uniform(&[forward, n - forward]);
    assert!(stat < critical, "direction chi2 {stat}");
}
