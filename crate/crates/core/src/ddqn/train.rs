//! Training loop: epsilon-greedy collection into the replay buffer, one
//! gradient step per collected transition, hard target syncs, and periodic
//! greedy evaluation on fixed episode seeds.

use super::network::{QNetwork, Workspace};
use super::policy::{argmax, epsilon_greedy, EpsilonSchedule};
use super::replay::{ReplayBuffer, Transition};
use super::{Environment, Gradients, Scalar};
use crate::rng::{derive_seed, rng_from_seed, stream, SimRng};
use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub episodes_per_iteration: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gradient steps between hard copies of the online weights into the target.
    pub target_sync_period: u64,
    pub hidden: Vec<usize>,
    /// Observations are multiplied by this before entering the network.
    pub observation_scale: f64,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            episodes_per_iteration: 10,
            eval_interval: 1000,
            eval_episodes: 10,
            alpha: 1e-3,
            gamma: 0.99,
            epsilon: EpsilonSchedule::default(),
            batch_size: 64,
            buffer_capacity: 100_000,
            target_sync_period: 500,
            hidden: vec![100, 100],
            observation_scale: 1.0 / PI,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let eps = &self.epsilon;
        let checks = [
            (self.episodes_per_iteration > 0, "episodes_per_iteration must be positive"),
            (self.eval_interval > 0, "eval_interval must be positive"),
            (self.eval_episodes > 0, "eval_episodes must be positive"),
            (self.alpha.is_finite() && self.alpha > 0.0, "alpha must be positive"),
            (self.gamma > 0.0 && self.gamma < 1.0, "gamma must lie in (0, 1)"),
            (
                (0.0..=1.0).contains(&eps.start) && (0.0..=1.0).contains(&eps.end),
                "epsilon must lie in [0, 1]",
            ),
            (self.batch_size > 0, "batch_size must be positive"),
            (self.buffer_capacity > 0, "buffer_capacity must be positive"),
            (self.target_sync_period > 0, "target_sync_period must be positive"),
            (!self.hidden.contains(&0), "hidden layers must be non-empty"),
            (
                self.observation_scale.is_finite() && self.observation_scale > 0.0,
                "observation_scale must be positive",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidConfig(msg));
            }
        }
        Ok(())
    }

    pub fn layer_sizes(&self, observation_len: usize, action_count: usize) -> Vec<usize> {
        let mut sizes = vec![observation_len];
        sizes.extend_from_slice(&self.hidden);
        sizes.push(action_count);
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRecord {
    pub iteration: usize,
    pub average_return: f64,
}

/// Handed to the evaluation hook right after the greedy evaluation.
#[derive(Debug)]
pub struct EvalPoint<'a, T> {
    pub iteration: usize,
    pub average_return: f64,
    pub network: &'a QNetwork<T>,
    pub episode_seeds: &'a [u64],
    pub observation_scale: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub network: QNetwork<T>,
    pub metrics: Vec<EvalRecord>,
    pub gradient_steps: u64,
    pub episodes: u64,
}

/// Seeds of the evaluation episodes; identical at every evaluation point.
pub fn eval_episode_seeds(rng_seed: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|k| derive_seed(rng_seed, stream::EVAL_EPISODE, k)).collect()
}

fn scale_into<T: Scalar>(obs: &[f64], scale: f64, out: &mut Vec<T>) {
    out.clear();
    out.extend(obs.iter().map(|&v| T::from_f64(v * scale)));
}

/// Double-DQN regression targets: the online network picks the next action,
/// the target network values it.
pub fn ddqn_targets<T: Scalar>(online: &QNetwork<T>, target: &QNetwork<T>, batch: &[Transition<T>], gamma: T) -> Result<Vec<T>> {
    let mut next = Vec::with_capacity(batch.len() * online.input_len());
    for t in batch {
        next.extend_from_slice(&t.next_observation);
    }
    let rewards: Vec<T> = batch.iter().map(|t| t.reward).collect();
    let dones: Vec<bool> = batch.iter().map(|t| t.done).collect();
    let mut out = Vec::new();
    targets_into(
        online,
        target,
        &next,
        &rewards,
        &dones,
        gamma,
        &mut Workspace::new(),
        &mut Workspace::new(),
        &mut out,
    )?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn targets_into<T: Scalar>(
    online: &QNetwork<T>,
    target: &QNetwork<T>,
    next: &[T],
    rewards: &[T],
    dones: &[bool],
    gamma: T,
    ws_online: &mut Workspace<T>,
    ws_target: &mut Workspace<T>,
    out: &mut Vec<T>,
) -> Result<()> {
    let batch = rewards.len();
    let n_actions = online.output_len();
    let q_online = online.forward_batch(next, batch, ws_online)?;
    let q_target = target.forward_batch(next, batch, ws_target)?;
    out.clear();
    for r in 0..batch {
        let y = if dones[r] {
            rewards[r]
        } else {
            let row = r * n_actions..(r + 1) * n_actions;
            let a = argmax(&q_online[row.clone()]);
            rewards[r] + gamma * q_target[row][a]
        };
        out.push(y);
    }
    Ok(())
}

/// Mean return of `policy` over one episode per seed.
pub fn evaluate_policy<E, F>(env: &mut E, seeds: &[u64], mut policy: F) -> Result<f64>
where
    E: Environment + ?Sized,
    F: FnMut(&[f64]) -> Result<usize>,
{
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("evaluation needs at least one episode"));
    }
    let mut total = 0.0;
    for &seed in seeds {
        let mut obs = env.reset(seed);
        loop {
            let step = env.step(policy(&obs)?)?;
            total += step.reward;
            obs = step.observation;
            if step.done {
                break;
            }
        }
    }
    Ok(total / seeds.len() as f64)
}

/// Mean return of the greedy policy of `net`.
pub fn evaluate_greedy<T, E>(net: &QNetwork<T>, env: &mut E, seeds: &[u64], observation_scale: f64) -> Result<f64>
where
    T: Scalar,
    E: Environment + ?Sized,
{
    let mut ws = Workspace::new();
    let mut input = Vec::new();
    evaluate_policy(env, seeds, |obs| {
        scale_into(obs, observation_scale, &mut input);
        Ok(argmax(net.forward_batch(&input, 1, &mut ws)?))
    })
}

/// Agent state between calls; [`train_with`] drives it over an environment.
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    cfg: TrainConfig,
    online: QNetwork<T>,
    target: QNetwork<T>,
    buffer: ReplayBuffer<T>,
    rng: SimRng,
    gradient_steps: u64,
    episodes: u64,
    grads: Gradients<T>,
    ws_train: Workspace<T>,
    ws_act: Workspace<T>,
    ws_online: Workspace<T>,
    ws_target: Workspace<T>,
    slots: Vec<usize>,
    actions: Vec<usize>,
    rewards: Vec<T>,
    dones: Vec<bool>,
    next: Vec<T>,
    targets: Vec<T>,
    obs: Vec<T>,
    next_obs: Vec<T>,
}

impl<T: Scalar> Trainer<T> {
    pub fn new(cfg: TrainConfig, observation_len: usize, action_count: usize) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng_from_seed(derive_seed(cfg.rng_seed, stream::AGENT, 0));
        let online = QNetwork::new(&cfg.layer_sizes(observation_len, action_count), &mut rng)?;
        let buffer = ReplayBuffer::new(cfg.buffer_capacity, observation_len)?;
        Ok(Self {
            target: online.clone(),
            grads: online.zero_gradients(),
            online,
            buffer,
            rng,
            gradient_steps: 0,
            episodes: 0,
            ws_train: Workspace::new(),
            ws_act: Workspace::new(),
            ws_online: Workspace::new(),
            ws_target: Workspace::new(),
            slots: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            next: Vec::new(),
            targets: Vec::new(),
            obs: Vec::new(),
            next_obs: Vec::new(),
            cfg,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn online(&self) -> &QNetwork<T> {
        &self.online
    }

    pub fn target(&self) -> &QNetwork<T> {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer<T> {
        &self.buffer
    }

    pub fn gradient_steps(&self) -> u64 {
        self.gradient_steps
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn epsilon(&self) -> f64 {
        self.cfg.epsilon.value(self.gradient_steps)
    }

    pub fn into_network(self) -> QNetwork<T> {
        self.online
    }

    pub fn sync_target(&mut self) {
        for (dst, src) in self.target.layers_mut().iter_mut().zip(self.online.layers()) {
            dst.weights.copy_from_slice(&src.weights);
            dst.biases.copy_from_slice(&src.biases);
        }
    }

    /// Rolls out one epsilon-greedy episode into the replay buffer and
    /// returns the number of transitions collected.
    pub fn collect_episode<E: Environment + ?Sized>(&mut self, env: &mut E) -> Result<usize> {
        let seed = derive_seed(self.cfg.rng_seed, stream::TRAIN_EPISODE, self.episodes);
        self.episodes += 1;
        let scale = self.cfg.observation_scale;
        let epsilon = self.epsilon();
        let mut obs = core::mem::take(&mut self.obs);
        let mut next_obs = core::mem::take(&mut self.next_obs);
        scale_into(&env.reset(seed), scale, &mut obs);
        let mut steps = 0;
        loop {
            let q = self.online.forward_batch(&obs, 1, &mut self.ws_act)?;
            let action = epsilon_greedy(q, epsilon, &mut self.rng);
            let step = env.step(action)?;
            scale_into(&step.observation, scale, &mut next_obs);
            self.buffer
                .push(&obs, action, T::from_f64(step.reward), &next_obs, step.done)?;
            steps += 1;
            core::mem::swap(&mut obs, &mut next_obs);
            if step.done {
                break;
            }
        }
        self.obs = obs;
        self.next_obs = next_obs;
        Ok(steps)
    }

    /// One SGD step on a uniformly sampled batch; returns the batch loss.
    /// Sampling is with replacement, so it works from the first transition on.
    pub fn gradient_step(&mut self) -> Result<T> {
        if self.buffer.is_empty() {
            return Err(Error::InvalidConfig("gradient step on an empty replay buffer"));
        }
        let batch = self.cfg.batch_size;
        let n = self.buffer.observation_len();
        self.buffer.sample_slots(batch, &mut self.rng, &mut self.slots);
        self.ws_train.prepare(&self.online, batch);
        self.next.clear();
        self.actions.clear();
        self.rewards.clear();
        self.dones.clear();
        {
            let input = self.ws_train.input_mut();
            for (r, &slot) in self.slots.iter().enumerate() {
                let t = self.buffer.slot(slot);
                input[r * n..(r + 1) * n].copy_from_slice(t.observation);
                self.next.extend_from_slice(t.next_observation);
                self.actions.push(t.action);
                self.rewards.push(t.reward);
                self.dones.push(t.done);
            }
        }
        targets_into(
            &self.online,
            &self.target,
            &self.next,
            &self.rewards,
            &self.dones,
            T::from_f64(self.cfg.gamma),
            &mut self.ws_online,
            &mut self.ws_target,
            &mut self.targets,
        )?;
        let loss = self
            .online
            .mse_gradients(&mut self.ws_train, &self.actions, &self.targets, &mut self.grads);
        self.online.apply_gradients(&self.grads, T::from_f64(self.cfg.alpha));
        self.gradient_steps += 1;
        if self.gradient_steps.is_multiple_of(self.cfg.target_sync_period) {
            self.sync_target();
        }
        Ok(loss)
    }

    /// One training iteration: each episode is followed by as many gradient
    /// steps as it produced transitions.
    pub fn iteration<E: Environment + ?Sized>(&mut self, env: &mut E) -> Result<()> {
        for _ in 0..self.cfg.episodes_per_iteration {
            let steps = self.collect_episode(env)?;
            for _ in 0..steps {
                self.gradient_step()?;
            }
            if !self.online.is_finite() {
                return Err(Error::NonFiniteParameters {
                    gradient_steps: self.gradient_steps,
                });
            }
        }
        Ok(())
    }
}

pub fn train<T, E>(env: &mut E, cfg: &TrainConfig) -> Result<TrainOutcome<T>>
where
    T: Scalar,
    E: Environment + ?Sized,
{
    train_with(env, cfg, |_, _| Ok(()))
}

/// Like [`train`], calling `hook` at every evaluation point with the
/// environment and the current online network.
pub fn train_with<T, E, H>(env: &mut E, cfg: &TrainConfig, mut hook: H) -> Result<TrainOutcome<T>>
where
    T: Scalar,
    E: Environment + ?Sized,
    H: FnMut(&mut E, &EvalPoint<'_, T>) -> Result<()>,
{
    let mut trainer = Trainer::new(cfg.clone(), env.observation_len(), env.action_count())?;
    let seeds = eval_episode_seeds(cfg.rng_seed, cfg.eval_episodes);
    let mut metrics = Vec::new();
    for it in 1..=cfg.iterations {
        trainer.iteration(env)?;
        if it % cfg.eval_interval == 0 {
            let average_return = evaluate_greedy(&trainer.online, env, &seeds, cfg.observation_scale)?;
            metrics.push(EvalRecord {
                iteration: it,
                average_return,
            });
            let point = EvalPoint {
                iteration: it,
                average_return,
                network: &trainer.online,
                episode_seeds: &seeds,
                observation_scale: cfg.observation_scale,
            };
            hook(env, &point)?;
        }
    }
    Ok(TrainOutcome {
        gradient_steps: trainer.gradient_steps,
        episodes: trainer.episodes,
        network: trainer.into_network(),
        metrics,
    })
}
