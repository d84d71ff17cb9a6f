//! Transitions and a fixed-capacity ring buffer.

use std::sync::Arc;

use rand::Rng as _;

use crate::env::Observation;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::rng::Rng;

/// Stored observation; frames are shared between consecutive transitions.
#[derive(Debug, Clone, PartialEq)]
pub enum ObsData {
    Pixels(Arc<Frame>),
    State(Arc<[f64]>),
}

impl From<Observation> for ObsData {
    fn from(o: Observation) -> Self {
        match o {
            Observation::Pixels(f) => ObsData::Pixels(Arc::new(f)),
            Observation::State(v) => ObsData::State(v.into()),
        }
    }
}

impl From<&Observation> for ObsData {
    fn from(o: &Observation) -> Self {
        o.clone().into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: ObsData,
    pub action: Vec<f64>,
    pub reward: f64,
    pub discount: f64,
    pub next_obs: ObsData,
}

impl Transition {
    pub fn new(obs: ObsData, action: Vec<f64>, reward: f64, discount: f64, next_obs: ObsData) -> Result<Self> {
        if !reward.is_finite() || action.iter().any(|a| !a.is_finite()) {
            return Err(Error::env("transition with non-finite reward or action"));
        }
        if !(0.0..=1.0).contains(&discount) {
            return Err(Error::env(format!("discount {discount} outside [0, 1]")));
        }
        Ok(Transition { obs, action, reward, discount, next_obs })
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("replay capacity must be positive"));
        }
        Ok(ReplayBuffer { capacity, items: Vec::new(), next: 0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Inserts, overwriting the oldest transition when full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    /// Uniform sample with replacement.
    pub fn sample(&self, batch: usize, rng: &mut Rng) -> Result<Vec<&Transition>> {
        if self.items.is_empty() {
            return Err(Error::env("sampling from an empty replay buffer"));
        }
        Ok((0..batch).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect())
    }
}
