//! Circular experience replay.

use super::Scalar;
use crate::{Error, Result};
use alloc::vec::Vec;
use rand::Rng;

/// One environment transition, observations already preprocessed for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    pub observation: Vec<T>,
    pub action: usize,
    pub reward: T,
    pub next_observation: Vec<T>,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRef<'a, T> {
    pub observation: &'a [T],
    pub action: usize,
    pub reward: T,
    pub next_observation: &'a [T],
    pub done: bool,
}

impl<T: Scalar> TransitionRef<'_, T> {
    pub fn to_owned(&self) -> Transition<T> {
        Transition {
            observation: self.observation.to_vec(),
            action: self.action,
            reward: self.reward,
            next_observation: self.next_observation.to_vec(),
            done: self.done,
        }
    }
}

/// Fixed-capacity store; once full, each push overwrites the oldest entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    obs_len: usize,
    observations: Vec<T>,
    next_observations: Vec<T>,
    actions: Vec<usize>,
    rewards: Vec<T>,
    dones: Vec<bool>,
    /// Slot the next push writes to.
    cursor: usize,
}

impl<T: Scalar> ReplayBuffer<T> {
    pub fn new(capacity: usize, obs_len: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("replay capacity must be positive"));
        }
        Ok(Self {
            capacity,
            obs_len,
            observations: Vec::new(),
            next_observations: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            cursor: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn observation_len(&self) -> usize {
        self.obs_len
    }

    pub fn push(&mut self, observation: &[T], action: usize, reward: T, next_observation: &[T], done: bool) -> Result<()> {
        for o in [observation, next_observation] {
            if o.len() != self.obs_len {
                return Err(Error::ShapeMismatch {
                    expected: self.obs_len,
                    actual: o.len(),
                });
            }
        }
        if self.len() < self.capacity {
            self.observations.extend_from_slice(observation);
            self.next_observations.extend_from_slice(next_observation);
            self.actions.push(action);
            self.rewards.push(reward);
            self.dones.push(done);
        } else {
            let slot = self.cursor;
            let span = slot * self.obs_len..(slot + 1) * self.obs_len;
            self.observations[span.clone()].copy_from_slice(observation);
            self.next_observations[span].copy_from_slice(next_observation);
            self.actions[slot] = action;
            self.rewards[slot] = reward;
            self.dones[slot] = done;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    pub fn push_transition(&mut self, t: &Transition<T>) -> Result<()> {
        self.push(&t.observation, t.action, t.reward, &t.next_observation, t.done)
    }

    /// Entry in storage slot `slot`.
    pub fn slot(&self, slot: usize) -> TransitionRef<'_, T> {
        let span = slot * self.obs_len..(slot + 1) * self.obs_len;
        TransitionRef {
            observation: &self.observations[span.clone()],
            action: self.actions[slot],
            reward: self.rewards[slot],
            next_observation: &self.next_observations[span],
            done: self.dones[slot],
        }
    }

    /// Entries from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = TransitionRef<'_, T>> + '_ {
        let start = if self.len() < self.capacity { 0 } else { self.cursor };
        (0..self.len()).map(move |i| self.slot((start + i) % self.len()))
    }

    /// Fills `out` with `batch` storage slots drawn uniformly with replacement.
    pub fn sample_slots<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        if self.is_empty() {
            return;
        }
        out.extend((0..batch).map(|_| rng.gen_range(0..self.len())));
    }
}
