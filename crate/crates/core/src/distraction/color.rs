//! Body color perturbation.

use rand_distr::{Distribution, Normal};

use crate::rng::Rng;

use super::uniform;

pub type Rgb = [f64; 3];

/// Step standard deviation per unit of `beta_rgb`.
pub const COLOR_STEP_SCALE: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyColor {
    pub original: Rgb,
    pub current: Rgb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorState {
    pub bodies: Vec<BodyColor>,
}

impl ColorState {
    pub fn original(originals: &[Rgb]) -> Self {
        ColorState {
            bodies: originals
                .iter()
                .map(|&c| BodyColor { original: c, current: c })
                .collect(),
        }
    }

    pub fn current(&self, body: usize) -> Rgb {
        self.bodies[body].current
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }
}

fn admissible(original: f64, beta: f64) -> (f64, f64) {
    ((original - beta).max(0.0), (original + beta).min(1.0))
}

/// Per channel `x0 ~ U(x - beta, x + beta)`, clipped to [0, 1].
pub fn sample_colors(originals: &[Rgb], beta_rgb: f64, rng: &mut Rng) -> ColorState {
    if beta_rgb == 0.0 {
        return ColorState::original(originals);
    }
    let bodies = originals
        .iter()
        .map(|&original| {
            let mut current = original;
            for (c, &x) in current.iter_mut().zip(&original) {
                *c = uniform(rng, x - beta_rgb, x + beta_rgb).clamp(0.0, 1.0);
            }
            BodyColor { original, current }
        })
        .collect();
    ColorState { bodies }
}

/// Gaussian walk with standard deviation `0.03 * beta`, clipped to within
/// `beta` of the original color and to [0, 1].
pub fn step_colors(state: &ColorState, beta_rgb: f64, rng: &mut Rng) -> ColorState {
    if beta_rgb == 0.0 {
        return state.clone();
    }
    let noise = Normal::new(0.0, COLOR_STEP_SCALE * beta_rgb).expect("finite sigma");
    let bodies = state
        .bodies
        .iter()
        .map(|body| {
            let mut current = body.current;
            for (c, &x) in current.iter_mut().zip(&body.original) {
                let (lo, hi) = admissible(x, beta_rgb);
                *c = (*c + noise.sample(rng)).clamp(lo, hi);
            }
            BodyColor { original: body.original, current }
        })
        .collect();
    ColorState { bodies }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn zero_beta_is_identity() {
        let originals = [[0.2, 0.5, 0.9], [1.0, 0.0, 0.3]];
        let mut rng = rng_from_seed(1);
        let s = sample_colors(&originals, 0.0, &mut rng);
        assert_eq!(s, ColorState::original(&originals));
        assert_eq!(step_colors(&s, 0.0, &mut rng), s);
    }

    #[test]
    fn sample_near_upper_edge_is_clipped() {
        let mut rng = rng_from_seed(5);
        for _ in 0..10_000 {
            let s = sample_colors(&[[0.95; 3]], 0.1, &mut rng);
            for c in s.bodies[0].current {
                assert!((0.85..=1.0).contains(&c), "{c}");
            }
        }
    }

    #[test]
    fn walk_stays_in_band() {
        let mut rng = rng_from_seed(9);
        let mut s = sample_colors(&[[0.5; 3], [0.02, 0.5, 0.99]], 0.2, &mut rng);
        for _ in 0..100_000 {
            s = step_colors(&s, 0.2, &mut rng);
            for b in &s.bodies {
                for (c, o) in b.current.iter().zip(&b.original) {
                    assert!((c - o).abs() <= 0.2 + 1e-15 && (0.0..=1.0).contains(c));
                }
            }
        }
    }
}
