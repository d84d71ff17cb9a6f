//! Smooth reward kernels in the style of tolerance-based control rewards.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sigmoid {
    Gaussian,
    Quadratic,
}

/// 1 inside `bounds`, decaying with the distance to the bounds in units of
/// `margin` so that the value equals `value_at_margin` one margin away.
pub fn tolerance(x: f64, bounds: (f64, f64), margin: f64, sigmoid: Sigmoid, value_at_margin: f64) -> f64 {
    let (lo, hi) = bounds;
    if x >= lo && x <= hi {
        return 1.0;
    }
    if margin <= 0.0 {
        return 0.0;
    }
    let d = if x < lo { lo - x } else { x - hi } / margin;
    match sigmoid {
        Sigmoid::Gaussian => {
            let scale = (-2.0 * value_at_margin.ln()).sqrt();
            (-0.5 * (d * scale).powi(2)).exp()
        }
        Sigmoid::Quadratic => {
            let s = d * (1.0 - value_at_margin).sqrt();
            if s.abs() < 1.0 {
                1.0 - s * s
            } else {
                0.0
            }
        }
    }
}

/// 1 for `d <= radius`, cosine fall-off to 0 at `2 * radius`.
pub fn radial_reward(d: f64, radius: f64) -> f64 {
    if d <= radius {
        1.0
    } else if d >= 2.0 * radius {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (d - radius) / radius).cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_hits_value_at_margin() {
        let v = tolerance(3.0, (0.0, 1.0), 2.0, Sigmoid::Gaussian, 0.1);
        assert!((v - 0.1).abs() < 1e-12);
        assert_eq!(tolerance(0.5, (0.0, 1.0), 2.0, Sigmoid::Gaussian, 0.1), 1.0);
    }

    #[test]
    fn quadratic_reaches_zero() {
        assert_eq!(tolerance(1.0, (0.0, 0.0), 1.0, Sigmoid::Quadratic, 0.0), 0.0);
        assert!((tolerance(0.5, (0.0, 0.0), 1.0, Sigmoid::Quadratic, 0.0) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn radial_is_continuous() {
        assert_eq!(radial_reward(0.05, 0.05), 1.0);
        assert!((radial_reward(0.075, 0.05) - 0.5).abs() < 1e-12);
        assert!(radial_reward(0.0999999, 0.05) < 1e-9);
    }
}
