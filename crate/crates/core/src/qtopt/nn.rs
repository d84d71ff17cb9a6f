//! Minimal layers with explicit backward passes. Activations are f64;
//! images are NHWC.

use ndarray::{Array1, Array2, Array4, Axis};
use rand::Rng as _;

use crate::rng::Rng;

fn uniform_init(rng: &mut Rng, shape: (usize, usize), fan_in: usize) -> Array2<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Array2::from_shape_fn(shape, |_| rng.random_range(-bound..bound))
}

fn uniform_bias(rng: &mut Rng, n: usize, fan_in: usize) -> Array1<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Array1::from_shape_fn(n, |_| rng.random_range(-bound..bound))
}

/// `y = x W + b` with `W` of shape (in, out).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        Dense { w: uniform_init(rng, (inputs, outputs), inputs), b: uniform_bias(rng, outputs, inputs) }
    }

    pub fn inputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }

    /// Returns `(dx, dw, db)`.
    pub fn backward(&self, x: &Array2<f64>, dy: &Array2<f64>) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
        (dy.dot(&self.w.t()), x.t().dot(dy), dy.sum_axis(Axis(0)))
    }
}

/// 3x3 (or k x k) valid convolution with stride, lowered to a matrix product.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    /// Shape (k*k*in_channels, out_channels); rows ordered (ky, kx, c).
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub kernel: usize,
    pub stride: usize,
    pub in_channels: usize,
}

impl Conv2d {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, stride: usize, rng: &mut Rng) -> Self {
        let fan_in = kernel * kernel * in_channels;
        Conv2d {
            w: uniform_init(rng, (fan_in, out_channels), fan_in),
            b: uniform_bias(rng, out_channels, fan_in),
            kernel,
            stride,
            in_channels,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.w.ncols()
    }

    pub fn output_size(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        if h < self.kernel || w < self.kernel {
            return None;
        }
        Some(((h - self.kernel) / self.stride + 1, (w - self.kernel) / self.stride + 1))
    }

    fn im2col(&self, x: &Array4<f64>) -> Array2<f64> {
        let (n, h, w, c) = x.dim();
        let (oh, ow) = self.output_size(h, w).expect("input smaller than kernel");
        let k = self.kernel;
        let x = x.as_standard_layout();
        let src = x.as_slice().unwrap();
        let mut cols = Array2::<f64>::zeros((n * oh * ow, k * k * c));
        let dst = cols.as_slice_mut().unwrap();
        let row_len = k * k * c;
        let mut row = 0;
        for b in 0..n {
            for oy in 0..oh {
                for ox in 0..ow {
                    let out = &mut dst[row * row_len..(row + 1) * row_len];
                    for ky in 0..k {
                        let iy = oy * self.stride + ky;
                        let start = ((b * h + iy) * w + ox * self.stride) * c;
                        out[ky * k * c..(ky + 1) * k * c].copy_from_slice(&src[start..start + k * c]);
                    }
                    row += 1;
                }
            }
        }
        cols
    }

    fn col2im(&self, dcols: &Array2<f64>, shape: (usize, usize, usize, usize)) -> Array4<f64> {
        let (n, h, w, c) = shape;
        let (oh, ow) = self.output_size(h, w).unwrap();
        let k = self.kernel;
        let mut dx = Array4::<f64>::zeros(shape);
        let dst = dx.as_slice_mut().unwrap();
        let dcols = dcols.as_standard_layout();
        let src = dcols.as_slice().unwrap();
        let row_len = k * k * c;
        let mut row = 0;
        for b in 0..n {
            for oy in 0..oh {
                for ox in 0..ow {
                    let r = &src[row * row_len..(row + 1) * row_len];
                    for ky in 0..k {
                        let iy = oy * self.stride + ky;
                        let start = ((b * h + iy) * w + ox * self.stride) * c;
                        for (d, s) in dst[start..start + k * c].iter_mut().zip(&r[ky * k * c..(ky + 1) * k * c]) {
                            *d += s;
                        }
                    }
                    row += 1;
                }
            }
        }
        dx
    }

    /// Returns the output and the lowered input needed by `backward`.
    pub fn forward(&self, x: &Array4<f64>) -> (Array4<f64>, Array2<f64>) {
        let (n, h, w, _) = x.dim();
        let (oh, ow) = self.output_size(h, w).expect("input smaller than kernel");
        let cols = self.im2col(x);
        let y = cols.dot(&self.w) + &self.b;
        let y = y.into_shape_with_order((n, oh, ow, self.out_channels())).unwrap();
        (y, cols)
    }

    /// Returns `(dw, db)` only; for the first layer, whose input needs no gradient.
    pub fn param_grads(&self, cols: &Array2<f64>, dy: &Array4<f64>) -> (Array2<f64>, Array1<f64>) {
        let dy = dy.as_standard_layout().into_owned().into_shape_with_order((cols.nrows(), self.out_channels())).unwrap();
        (cols.t().dot(&dy), dy.sum_axis(Axis(0)))
    }

    /// Returns `(dx, dw, db)`.
    pub fn backward(
        &self,
        cols: &Array2<f64>,
        input_shape: (usize, usize, usize, usize),
        dy: &Array4<f64>,
    ) -> (Array4<f64>, Array2<f64>, Array1<f64>) {
        let rows = cols.nrows();
        let dy = dy.as_standard_layout().into_owned().into_shape_with_order((rows, self.out_channels())).unwrap();
        let dw = cols.t().dot(&dy);
        let db = dy.sum_axis(Axis(0));
        let dcols = dy.dot(&self.w.t());
        (self.col2im(&dcols, input_shape), dw, db)
    }
}

/// Per-row normalization with learned gain and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: Array1<f64>,
    pub bias: Array1<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    normalized: Array2<f64>,
    inv_std: Array1<f64>,
}

impl LayerNorm {
    pub fn new(dim: usize) -> Self {
        LayerNorm { gain: Array1::ones(dim), bias: Array1::zeros(dim), eps: 1e-5 }
    }

    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, LayerNormCache) {
        let d = x.ncols() as f64;
        let mean = x.mean_axis(Axis(1)).unwrap();
        let centered = x - &mean.insert_axis(Axis(1));
        let var = centered.mapv(|v| v * v).sum_axis(Axis(1)) / d;
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let normalized = centered * &inv_std.view().insert_axis(Axis(1));
        let y = &normalized * &self.gain + &self.bias;
        (y, LayerNormCache { normalized, inv_std })
    }

    /// Returns `(dx, dgain, dbias)`.
    pub fn backward(&self, cache: &LayerNormCache, dy: &Array2<f64>) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
        let d = dy.ncols() as f64;
        let dgain = (dy * &cache.normalized).sum_axis(Axis(0));
        let dbias = dy.sum_axis(Axis(0));
        let dn = dy * &self.gain;
        let mean_dn = dn.mean_axis(Axis(1)).unwrap().insert_axis(Axis(1));
        let mean_dn_n = (&dn * &cache.normalized).sum_axis(Axis(1)).insert_axis(Axis(1)) / d;
        let dx = (dn - &mean_dn - &cache.normalized * &mean_dn_n) * &cache.inv_std.view().insert_axis(Axis(1));
        (dx, dgain, dbias)
    }
}

pub fn relu<D: ndarray::Dimension>(x: &ndarray::Array<f64, D>) -> ndarray::Array<f64, D> {
    x.mapv(|v| v.max(0.0))
}

/// Gradient through a ReLU given its output.
pub fn relu_backward<D: ndarray::Dimension>(y: &ndarray::Array<f64, D>, dy: &ndarray::Array<f64, D>) -> ndarray::Array<f64, D> {
    let mut dx = dy.clone();
    ndarray::Zip::from(&mut dx).and(y).for_each(|d, &v| {
        if v <= 0.0 {
            *d = 0.0;
        }
    });
    dx
}

/// Gradient through tanh given its output.
pub fn tanh_backward(y: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
    dy * &y.mapv(|v| 1.0 - v * v)
}
