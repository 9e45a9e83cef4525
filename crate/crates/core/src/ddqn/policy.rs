use super::Scalar;
use crate::sensor::Action;
use rand::Rng;

/// Index of the largest value; ties go to the lowest index and NaN never wins.
pub fn argmax<T: Scalar>(q: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] || q[best].is_nan() {
            best = i;
        }
    }
    best
}

/// With probability `epsilon` a uniform action, otherwise the greedy one.
/// Always consumes one uniform draw, plus one more when exploring.
pub fn epsilon_greedy<T: Scalar, R: Rng + ?Sized>(q: &[T], epsilon: f64, rng: &mut R) -> usize {
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..q.len())
    } else {
        argmax(q)
    }
}

pub fn random_action<R: Rng + ?Sized>(n_actions: usize, rng: &mut R) -> usize {
    rng.gen_range(0..n_actions)
}

/// Uniformly random telescope action.
pub fn random_policy<R: Rng + ?Sized>(rng: &mut R) -> Action {
    Action::ALL[random_action(Action::COUNT, rng)]
}

/// Linear decay from `start` to `end` over `decay_steps` gradient steps, then flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn constant(epsilon: f64) -> Self {
        Self {
            start: epsilon,
            end: epsilon,
            decay_steps: 0,
        }
    }

    pub fn value(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_steps: 10_000,
        }
    }
}
