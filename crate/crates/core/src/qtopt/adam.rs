/// Adam over a flat parameter vector split into slices.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; num_params], v: vec![0.0; num_params], t: 0 }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// Gradient descent step; `grads` is laid out like the concatenated slices.
    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let mut i = 0;
        for p in params {
            for x in p.iter_mut() {
                let g = grads[i];
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
                *x -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
                i += 1;
            }
        }
        debug_assert_eq!(i, grads.len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut adam = Adam::new(2, 0.1);
        let mut p = [1.0, -1.0];
        adam.step(vec![&mut p[..]], &[3.0, -0.5]);
        assert!((p[0] - 0.9).abs() < 1e-6 && (p[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut adam = Adam::new(1, 0.05);
        let mut x = [4.0];
        for _ in 0..2000 {
            let g = 2.0 * (x[0] - 1.5);
            adam.step(vec![&mut x[..]], &[g]);
        }
        assert!((x[0] - 1.5).abs() < 1e-3);
    }
}
