//! QT-Opt learner: epsilon-greedy CEM acting, augmented targets, Adam and
//! Polyak-averaged target network, one update per collected transition.

use std::path::Path;

use ndarray::Array2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, ObservationMode};
use crate::error::{Error, Result};
use crate::frame::CHANNELS;
use crate::rng::{component_rng, Rng};

use super::adam::Adam;
use super::cem::{cem_maximize_batch, CemConfig};
use super::critic::{Critic, CriticConfig, InputSpec};
use super::drq::{drq_loss, drq_target, obs_batch, AugConfig, AugKind, LossKind, View};
use super::replay::{ObsData, ReplayBuffer, Transition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub aug: AugConfig,
    pub cem: CemConfig,
    pub hidden: usize,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub gamma: f64,
    pub learning_rate: f64,
    pub tau: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Agent steps over which epsilon falls linearly to `epsilon_end`.
    pub epsilon_decay_steps: usize,
    /// Replay size before the first update.
    pub learning_starts: usize,
    pub loss: LossKind,
    pub reward_scale: f64,
    pub max_grad_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            aug: AugConfig::new(AugKind::None, 56),
            cem: CemConfig::default(),
            hidden: 256,
            batch_size: 512,
            replay_capacity: 100_000,
            gamma: 0.99,
            learning_rate: 1e-4,
            tau: 0.01,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            epsilon_decay_steps: 10_000,
            learning_starts: 1_000,
            loss: LossKind::SquaredError,
            reward_scale: 1.0,
            max_grad_norm: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn epsilon(&self, step: usize) -> f64 {
        if self.epsilon_decay_steps == 0 || step >= self.epsilon_decay_steps {
            return self.epsilon_end;
        }
        let f = step as f64 / self.epsilon_decay_steps as f64;
        self.epsilon_start + f * (self.epsilon_end - self.epsilon_start)
    }

    pub fn validate(&self) -> Result<()> {
        self.cem.validate()?;
        if self.batch_size == 0 || !(0.0..=1.0).contains(&self.tau) || !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("batch_size must be positive and tau, gamma in [0, 1]"));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::config("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Online and target critics plus optimizer state.
pub struct QtOpt {
    pub config: TrainConfig,
    online: Critic,
    target: Critic,
    adam: Adam,
    rng: Rng,
    updates: usize,
}

impl QtOpt {
    pub fn new(critic_config: CriticConfig, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let online = Critic::new(critic_config, &mut component_rng(config.seed, "critic"))?;
        Ok(QtOpt {
            target: online.clone(),
            adam: Adam::new(online.num_params(), config.learning_rate),
            online,
            rng: component_rng(config.seed, "qtopt"),
            updates: 0,
            config,
        })
    }

    /// Critic shaped for the environment's observations.
    pub fn for_env(env: &Environment, config: TrainConfig) -> Result<Self> {
        let input = match env.config().observation {
            ObservationMode::State => InputSpec::State { dim: env.task().observation_dim() },
            ObservationMode::Pixels => {
                config.aug.validate(env.config().render_size)?;
                let (width, height) = config.aug.input_size(env.config().render_size);
                InputSpec::Pixels { height, width, channels: CHANNELS }
            }
        };
        let critic = CriticConfig::new(input, env.spec().action_dim).with_hidden(config.hidden);
        Self::new(critic, config)
    }

    pub fn critic(&self) -> &Critic {
        &self.online
    }

    pub fn target_critic(&self) -> &Critic {
        &self.target
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    /// CEM maximizer of the online critic on the deterministic view.
    pub fn greedy_action(&mut self, obs: &ObsData) -> Result<Vec<f64>> {
        let batch = obs_batch(&[obs], &View::deterministic(&self.config.aug))?;
        let emb = self.online.embed(&batch)?;
        let n = self.config.cem.population;
        let repeated = Array2::from_shape_fn((n, emb.ncols()), |(_, j)| emb[[0, j]]);
        let online = &self.online;
        let mut r = cem_maximize_batch(
            |a| online.q_from_embedding(&repeated, a),
            1,
            online.config().action_dim,
            &self.config.cem,
            &mut self.rng,
        )?;
        Ok(r.pop().unwrap().action)
    }

    pub fn act(&mut self, obs: &ObsData, epsilon: f64) -> Result<Vec<f64>> {
        if self.rng.random::<f64>() < epsilon {
            let a = self.online.config().action_dim;
            return Ok((0..a).map(|_| self.rng.random_range(-1.0..=1.0)).collect());
        }
        self.greedy_action(obs)
    }

    /// One gradient step on a sampled batch; returns the loss.
    pub fn update(&mut self, replay: &ReplayBuffer) -> Result<f64> {
        let cfg = &self.config;
        let batch = replay.sample(cfg.batch_size, &mut self.rng)?;
        let targets = drq_target(&batch, &cfg.aug, &self.target, &cfg.cem, cfg.gamma, cfg.loss, &mut self.rng)?;
        let (loss, mut grads) = drq_loss(&self.online, &batch, &cfg.aug, &targets, cfg.loss, &mut self.rng)?;
        if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { step: self.updates, reason: format!("non-finite loss or gradient (loss = {loss})") });
        }
        if let Some(max) = cfg.max_grad_norm {
            let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > max {
                grads.iter_mut().for_each(|g| *g *= max / norm);
            }
        }
        self.adam.step(self.online.params_mut(), &grads);
        self.target.polyak_update(&self.online, cfg.tau);
        self.updates += 1;
        Ok(loss)
    }
}

/// One row of the training log, written when an episode ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// Agent steps taken so far.
    pub step: usize,
    pub episode: usize,
    pub episode_return: f64,
    /// Mean loss over the episode's updates; empty before learning starts.
    pub loss: Option<f64>,
    pub epsilon: f64,
}

pub struct TrainOutcome {
    pub agent: QtOpt,
    pub log: Vec<EpisodeRecord>,
}

/// Runs `steps` agent steps of collection, each followed by one update
/// once the replay holds `learning_starts` transitions.
pub fn train(env: &mut Environment, config: TrainConfig, steps: usize) -> Result<TrainOutcome> {
    train_with_callback(env, config, steps, |_| {})
}

pub fn train_with_callback(
    env: &mut Environment,
    config: TrainConfig,
    steps: usize,
    mut on_episode: impl FnMut(&EpisodeRecord),
) -> Result<TrainOutcome> {
    let mut agent = QtOpt::for_env(env, config)?;
    let mut log = Vec::new();
    if steps == 0 {
        return Ok(TrainOutcome { agent, log });
    }
    let mut replay = ReplayBuffer::new(agent.config.replay_capacity)?;
    let mut obs = ObsData::from(env.reset()?.observation);
    let (mut ret, mut loss_sum, mut loss_n, mut episode) = (0.0, 0.0, 0usize, 0usize);
    for step in 0..steps {
        let epsilon = agent.config.epsilon(step);
        let action = agent.act(&obs, epsilon)?;
        let ts = env.step(&action)?;
        let next = ObsData::from(ts.observation);
        ret += ts.reward;
        replay.push(Transition::new(obs, action, ts.reward * agent.config.reward_scale, ts.discount, next.clone())?);
        if replay.len() >= agent.config.learning_starts.max(1) {
            let loss = agent.update(&replay).map_err(|e| match e {
                Error::Divergence { reason, .. } => Error::Divergence { step, reason },
                other => other,
            })?;
            loss_sum += loss;
            loss_n += 1;
        }
        obs = next;
        if ts.last {
            let record = EpisodeRecord {
                step: step + 1,
                episode,
                episode_return: ret,
                loss: (loss_n > 0).then(|| loss_sum / loss_n as f64),
                epsilon,
            };
            on_episode(&record);
            log.push(record);
            episode += 1;
            (ret, loss_sum, loss_n) = (0.0, 0.0, 0);
            if step + 1 < steps {
                obs = ObsData::from(env.reset()?.observation);
            }
        }
    }
    Ok(TrainOutcome { agent, log })
}

pub fn write_log_csv(path: &Path, log: &[EpisodeRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in log {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Preset;
    use crate::env::{make_env, EnvConfig};
    use crate::physics::TaskName;

    fn small() -> TrainConfig {
        TrainConfig { hidden: 16, batch_size: 8, learning_starts: 8, epsilon_decay_steps: 20, cem: CemConfig { population: 8, iterations: 2, elites: 2, min_std: 1e-3 }, ..Default::default() }
    }

    fn state_env() -> Environment {
        make_env(EnvConfig::from_preset(TaskName::CartpoleSwingup, Preset::None, false, 0).with_observation(ObservationMode::State)).unwrap()
    }

    #[test]
    fn zero_steps_leaves_critic_untouched() {
        let mut env = state_env();
        let out = train(&mut env, small(), 0).unwrap();
        assert!(out.log.is_empty());
        let fresh = QtOpt::for_env(&env, small()).unwrap();
        assert_eq!(out.agent.critic(), fresh.critic());
    }

    #[test]
    fn fixed_seed_fixed_log() {
        let run = || {
            let mut env = state_env();
            train(&mut env, small(), 300).unwrap().log
        };
        let a = run();
        assert_eq!(a.len(), 2);
        assert!(a[1].loss.is_some());
        assert_eq!(a, run());
    }

    #[test]
    fn pixel_training_runs_with_crops() {
        let cfg = EnvConfig::from_preset(TaskName::ReacherEasy, Preset::Easy, true, 0).with_render_size((20, 20));
        let mut env = make_env(cfg).unwrap();
        let mut tc = small();
        tc.aug = AugConfig::new(AugKind::Drq, 16);
        tc.batch_size = 4;
        tc.learning_starts = 4;
        let out = train(&mut env, tc, 10).unwrap();
        assert_eq!(out.agent.updates(), 7);
        assert!(out.log.is_empty());
    }

    #[test]
    fn epsilon_schedule() {
        let c = TrainConfig { epsilon_decay_steps: 10, ..Default::default() };
        assert_eq!(c.epsilon(0), 1.0);
        assert!((c.epsilon(5) - 0.55).abs() < 1e-12);
        assert_eq!(c.epsilon(10), 0.1);
        assert_eq!(c.epsilon(1000), 0.1);
    }
}
