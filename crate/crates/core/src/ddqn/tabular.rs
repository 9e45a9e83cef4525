use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;

/// Dense state × action table for one-step Q-learning.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    fn index(&self, s: usize, a: usize) -> Result<usize> {
        if s >= self.n_states {
            return Err(Error::IndexOutOfRange { index: s, len: self.n_states });
        }
        if a >= self.n_actions {
            return Err(Error::IndexOutOfRange { index: a, len: self.n_actions });
        }
        Ok(s * self.n_actions + a)
    }

    pub fn get(&self, s: usize, a: usize) -> Result<f64> {
        Ok(self.values[self.index(s, a)?])
    }

    pub fn set(&mut self, s: usize, a: usize, value: f64) -> Result<()> {
        let i = self.index(s, a)?;
        self.values[i] = value;
        Ok(())
    }

    pub fn row(&self, s: usize) -> Result<&[f64]> {
        let start = self.index(s, 0)?;
        Ok(&self.values[start..start + self.n_actions])
    }

    pub fn max_value(&self, s: usize) -> Result<f64> {
        Ok(self.row(s)?.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Q(s,a) ← Q(s,a) + α·(r + γ·maxₐ′ Q(s′,a′) − Q(s,a)).
    pub fn update(&mut self, s: usize, a: usize, reward: f64, next: usize, alpha: f64, gamma: f64) -> Result<()> {
        let i = self.index(s, a)?;
        let bootstrap = self.max_value(next)?;
        self.values[i] += alpha * (reward + gamma * bootstrap - self.values[i]);
        Ok(())
    }
}
