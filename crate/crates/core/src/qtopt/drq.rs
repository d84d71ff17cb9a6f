//! Crop augmentation and the augmented Bellman target and loss.
//!
//! With `K` target crops and `M` loss crops:
//! `y = r + gamma * d * mean_k V(crop_k(s'))`, `V(s) = max_a Q_target(s, a)`
//! (maximized by CEM), and `J = mean_b (y - mean_m Q(crop_m(s), a))^2`.
//! `K = M = 0` uses one deterministic view and is plain QT-Opt.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Array4};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{center_crop_offset, random_crop_offset, CropOffset, CHANNELS};
use crate::rng::{rng_from_seed, Rng};

use super::cem::{cem_maximize_batch, CemConfig};
use super::critic::{Critic, ObsBatch};
use super::replay::{ObsData, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugKind {
    None,
    Rad,
    Drq,
}

impl AugKind {
    pub fn name(self) -> &'static str {
        match self {
            AugKind::None => "none",
            AugKind::Rad => "rad",
            AugKind::Drq => "drq",
        }
    }
}

impl fmt::Display for AugKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AugKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AugKind::None),
            "rad" => Ok(AugKind::Rad),
            "drq" => Ok(AugKind::Drq),
            _ => Err(Error::config(format!("unknown augmentation '{s}'"))),
        }
    }
}

/// `k` target crops, `m` loss crops, square crop side in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugConfig {
    pub k: usize,
    pub m: usize,
    pub crop_size: usize,
}

impl AugConfig {
    pub fn new(kind: AugKind, crop_size: usize) -> Self {
        let n = match kind {
            AugKind::None => 0,
            AugKind::Rad => 1,
            AugKind::Drq => 2,
        };
        AugConfig { k: n, m: n, crop_size }
    }

    pub fn is_cropped(&self) -> bool {
        self.k > 0 || self.m > 0
    }

    /// Side length of the network input for frames of `frame_size`.
    pub fn input_size(&self, frame_size: (usize, usize)) -> (usize, usize) {
        if self.is_cropped() { (self.crop_size, self.crop_size) } else { frame_size }
    }

    pub fn validate(&self, frame_size: (usize, usize)) -> Result<()> {
        if self.is_cropped() && (self.crop_size == 0 || self.crop_size > frame_size.0 || self.crop_size > frame_size.1) {
            return Err(Error::config(format!(
                "crop size {} does not fit {}x{} frames",
                self.crop_size, frame_size.0, frame_size.1
            )));
        }
        Ok(())
    }
}

/// How one batch view is cut from stored observations.
#[derive(Debug, Clone, PartialEq)]
pub enum View {
    /// Whole frame.
    Full,
    /// Centre window of the given side.
    Center(usize),
    /// One window per batch element.
    Crops(Vec<CropOffset>, usize),
}

impl View {
    /// The deterministic view used for acting and for `K = 0` / `M = 0`.
    pub fn deterministic(aug: &AugConfig) -> View {
        if aug.is_cropped() { View::Center(aug.crop_size) } else { View::Full }
    }

    pub fn random(batch: usize, frame_size: (usize, usize), crop: usize, rng: &mut Rng) -> View {
        View::Crops((0..batch).map(|_| random_crop_offset(frame_size, (crop, crop), rng)).collect(), crop)
    }
}

/// Builds network input from stored observations. State vectors ignore
/// the view (cropping is the identity on them).
pub fn obs_batch(items: &[&ObsData], view: &View) -> Result<ObsBatch> {
    match items.first() {
        None => Err(Error::Shape("empty observation batch".into())),
        Some(ObsData::State(first)) => {
            let dim = first.len();
            let mut out = Array2::<f64>::zeros((items.len(), dim));
            for (i, item) in items.iter().enumerate() {
                match item {
                    ObsData::State(v) if v.len() == dim => out.row_mut(i).iter_mut().zip(v.iter()).for_each(|(o, x)| *o = *x),
                    _ => return Err(Error::Shape("inconsistent state observations".into())),
                }
            }
            Ok(ObsBatch::State(out))
        }
        Some(ObsData::Pixels(first)) => {
            let frame_size = first.size();
            let (cw, ch) = match view {
                View::Full => frame_size,
                View::Center(c) | View::Crops(_, c) => (*c, *c),
            };
            if let View::Crops(offsets, _) = view {
                if offsets.len() != items.len() {
                    return Err(Error::Shape(format!("{} crops for {} observations", offsets.len(), items.len())));
                }
            }
            let mut out = Array4::<f64>::zeros((items.len(), ch, cw, CHANNELS));
            let dst = out.as_slice_mut().unwrap();
            let row = cw * CHANNELS;
            for (i, item) in items.iter().enumerate() {
                let ObsData::Pixels(frame) = item else {
                    return Err(Error::Shape("mixed observation kinds".into()));
                };
                if frame.size() != frame_size {
                    return Err(Error::Shape("frames of different sizes in one batch".into()));
                }
                let off = match view {
                    View::Full => CropOffset { x: 0, y: 0 },
                    View::Center(c) => center_crop_offset(frame_size, (*c, *c)),
                    View::Crops(o, _) => o[i],
                };
                if off.x + cw > frame_size.0 || off.y + ch > frame_size.1 {
                    return Err(Error::Shape(format!("crop at ({}, {}) leaves the frame", off.x, off.y)));
                }
                let src = frame.data();
                for y in 0..ch {
                    let s = ((off.y + y) * frame_size.0 + off.x) * CHANNELS;
                    let d = (i * ch + y) * row;
                    for (o, &p) in dst[d..d + row].iter_mut().zip(&src[s..s + row]) {
                        *o = p as f64 / 255.0;
                    }
                }
            }
            Ok(ObsBatch::Pixels(out))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `(y - Q)^2`.
    #[default]
    SquaredError,
    /// Binary cross-entropy between `clip(y, 0, 1)` and `sigmoid(Q)`;
    /// values are `sigmoid(Q)`.
    CrossEntropy,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 { x } else { x.exp().ln_1p() }
}

/// `y_b = r_b + gamma * d_b * mean_k values[k][b]`.
pub fn target_from_values(rewards: &[f64], discounts: &[f64], gamma: f64, values: &[Vec<f64>]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Shape("no value estimates".into()));
    }
    let n = rewards.len();
    if discounts.len() != n || values.iter().any(|v| v.len() != n) {
        return Err(Error::Shape("rewards, discounts and values differ in length".into()));
    }
    let k = values.len() as f64;
    Ok((0..n)
        .map(|b| rewards[b] + gamma * discounts[b] * values.iter().map(|v| v[b]).sum::<f64>() / k)
        .collect())
}

/// Loss from per-crop Q values `q[m][b]`; returns `J` and `dJ/dq[m][b]`.
/// The Q values are averaged over crops before the loss is applied.
pub fn loss_from_q(targets: &[f64], q: &[Vec<f64>], kind: LossKind) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = targets.len();
    if q.is_empty() || n == 0 || q.iter().any(|v| v.len() != n) {
        return Err(Error::Shape("Q values and targets differ in shape".into()));
    }
    let m = q.len() as f64;
    let bn = n as f64;
    let mut loss = 0.0;
    let mut dq_bar = vec![0.0; n];
    for b in 0..n {
        let q_bar = q.iter().map(|v| v[b]).sum::<f64>() / m;
        match kind {
            LossKind::SquaredError => {
                let e = targets[b] - q_bar;
                loss += e * e / bn;
                dq_bar[b] = -2.0 * e / bn;
            }
            LossKind::CrossEntropy => {
                let y = targets[b].clamp(0.0, 1.0);
                loss += (y * softplus(-q_bar) + (1.0 - y) * softplus(q_bar)) / bn;
                dq_bar[b] = (sigmoid(q_bar) - y) / bn;
            }
        }
    }
    let grads = (0..q.len()).map(|_| dq_bar.iter().map(|g| g / m).collect()).collect();
    Ok((loss, grads))
}

/// `max_a Q(s, a)` per row of `obs`, maximized with CEM.
pub fn state_values(critic: &Critic, obs: &ObsBatch, cem: &CemConfig, kind: LossKind, rng: &mut Rng) -> Result<Vec<f64>> {
    let emb = critic.embed(obs)?;
    let (b, e) = emb.dim();
    let n = cem.population;
    let mut repeated = Array2::<f64>::zeros((b * n, e));
    for (i, mut row) in repeated.rows_mut().into_iter().enumerate() {
        row.assign(&emb.row(i / n));
    }
    let results = cem_maximize_batch(
        |actions| critic.q_from_embedding(&repeated, actions),
        b,
        critic.config().action_dim,
        cem,
        rng,
    )?;
    Ok(results
        .into_iter()
        .map(|r| match kind {
            LossKind::SquaredError => r.score,
            LossKind::CrossEntropy => sigmoid(r.score),
        })
        .collect())
}

/// Target with caller-chosen views of `s'`, one entry per target crop.
/// Every view's CEM starts from the same `cem_seed`, so a view's value does
/// not depend on its position in the list.
#[allow(clippy::too_many_arguments)]
pub fn drq_target_with_views(
    batch: &[&Transition],
    views: &[View],
    target: &Critic,
    cem: &CemConfig,
    gamma: f64,
    kind: LossKind,
    cem_seed: u64,
) -> Result<Vec<f64>> {
    let next: Vec<&ObsData> = batch.iter().map(|t| &t.next_obs).collect();
    let values = views
        .iter()
        .map(|v| state_values(target, &obs_batch(&next, v)?, cem, kind, &mut rng_from_seed(cem_seed)))
        .collect::<Result<Vec<_>>>()?;
    let rewards: Vec<f64> = batch.iter().map(|t| t.reward).collect();
    let discounts: Vec<f64> = batch.iter().map(|t| t.discount).collect();
    target_from_values(&rewards, &discounts, gamma, &values)
}

/// Views for `count` random crops, or the deterministic view when 0.
pub fn sample_views(count: usize, batch: &[&Transition], aug: &AugConfig, rng: &mut Rng) -> Vec<View> {
    if count == 0 {
        return vec![View::deterministic(aug)];
    }
    let frame_size = match &batch[0].obs {
        ObsData::Pixels(f) => f.size(),
        ObsData::State(_) => return vec![View::Full; count],
    };
    (0..count).map(|_| View::random(batch.len(), frame_size, aug.crop_size, rng)).collect()
}

#[allow(clippy::too_many_arguments)]
pub fn drq_target(
    batch: &[&Transition],
    aug: &AugConfig,
    target: &Critic,
    cem: &CemConfig,
    gamma: f64,
    kind: LossKind,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let views = sample_views(aug.k, batch, aug, rng);
    let cem_seed = rng.random();
    drq_target_with_views(batch, &views, target, cem, gamma, kind, cem_seed)
}

/// Loss over caller-chosen views of `s` and its gradient with respect to
/// the critic parameters.
pub fn drq_loss_with_views(
    critic: &Critic,
    batch: &[&Transition],
    views: &[View],
    targets: &[f64],
    kind: LossKind,
) -> Result<(f64, Vec<f64>)> {
    if targets.len() != batch.len() {
        return Err(Error::Shape(format!("{} targets for {} transitions", targets.len(), batch.len())));
    }
    let obs: Vec<&ObsData> = batch.iter().map(|t| &t.obs).collect();
    let parts = views.iter().map(|v| obs_batch(&obs, v)).collect::<Result<Vec<_>>>()?;
    let stacked = ObsBatch::stack(&parts)?;
    let a = critic.config().action_dim;
    let n = batch.len();
    let mut actions = Array2::<f64>::zeros((n * views.len(), a));
    for (i, mut row) in actions.rows_mut().into_iter().enumerate() {
        let act = &batch[i % n].action;
        if act.len() != a {
            return Err(Error::Shape(format!("action of dim {} for a critic of dim {a}", act.len())));
        }
        row.iter_mut().zip(act).for_each(|(r, x)| *r = *x);
    }
    let (q, cache) = critic.forward(&stacked, &actions)?;
    let per_view: Vec<Vec<f64>> = q.as_slice().unwrap().chunks(n).map(|c| c.to_vec()).collect();
    let (loss, dq) = loss_from_q(targets, &per_view, kind)?;
    let dq = Array1::from(dq.concat());
    Ok((loss, critic.backward(&cache, &dq)))
}

pub fn drq_loss(
    critic: &Critic,
    batch: &[&Transition],
    aug: &AugConfig,
    targets: &[f64],
    kind: LossKind,
    rng: &mut Rng,
) -> Result<(f64, Vec<f64>)> {
    let views = sample_views(aug.m, batch, aug, rng);
    drq_loss_with_views(critic, batch, &views, targets, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Frame;
    use std::sync::Arc;

    #[test]
    fn stubbed_target_arithmetic() {
        let y = target_from_values(&[0.5], &[1.0], 0.99, &[vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(y, vec![0.5 + 0.99 * 1.5]);
        let y = target_from_values(&[0.5], &[0.0], 0.99, &[vec![7.0]]).unwrap();
        assert_eq!(y, vec![0.5]);
    }

    #[test]
    fn loss_averages_before_squaring() {
        let (loss, grads) = loss_from_q(&[2.0], &[vec![1.0], vec![3.0]], LossKind::SquaredError).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grads, vec![vec![0.0], vec![0.0]]);
        let (loss, _) = loss_from_q(&[2.0, 1.0], &[vec![2.0, 1.0]], LossKind::SquaredError).unwrap();
        assert_eq!(loss, 0.0);
        assert!(loss_from_q(&[1.0], &[vec![1.0, 2.0]], LossKind::SquaredError).is_err());
    }

    #[test]
    fn cross_entropy_gradient_matches_difference() {
        let y = [0.3, 0.9];
        let q = vec![vec![0.2, -1.0], vec![0.5, 2.0]];
        let (_, g) = loss_from_q(&y, &q, LossKind::CrossEntropy).unwrap();
        let h = 1e-6;
        for m in 0..2 {
            for b in 0..2 {
                let mut qp = q.clone();
                qp[m][b] += h;
                let mut qm = q.clone();
                qm[m][b] -= h;
                let num = (loss_from_q(&y, &qp, LossKind::CrossEntropy).unwrap().0
                    - loss_from_q(&y, &qm, LossKind::CrossEntropy).unwrap().0)
                    / (2.0 * h);
                assert!((num - g[m][b]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn views_cut_expected_pixels() {
        let mut f = Frame::new(4, 3);
        f.set_pixel(2, 1, [255, 0, 51]);
        let item = ObsData::Pixels(Arc::new(f));
        let full = obs_batch(&[&item], &View::Full).unwrap();
        let ObsBatch::Pixels(x) = full else { panic!() };
        assert_eq!(x.dim(), (1, 3, 4, 3));
        assert_eq!(x[[0, 1, 2, 0]], 1.0);
        assert_eq!(x[[0, 1, 2, 2]], 0.2);
        let ObsBatch::Pixels(c) = obs_batch(&[&item], &View::Crops(vec![CropOffset { x: 1, y: 1 }], 2)).unwrap() else { panic!() };
        assert_eq!(c.dim(), (1, 2, 2, 3));
        assert_eq!(c[[0, 0, 1, 0]], 1.0);
        assert!(obs_batch(&[&item], &View::Crops(vec![CropOffset { x: 3, y: 0 }], 2)).is_err());
    }

    #[test]
    fn state_views_are_identity() {
        let item = ObsData::State(vec![1.0, 2.0].into());
        let a = obs_batch(&[&item], &View::Full).unwrap();
        let b = obs_batch(&[&item], &View::Crops(vec![CropOffset { x: 5, y: 5 }], 84)).unwrap();
        assert_eq!(a, b);
    }
}
