//! The interleaved generate/update training loop.

use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::replay::{Episode, ReplayBuffer};
use super::rollout::{EpisodeSource, GenerationSpec};
use super::update::{actor_update, compute_targets, critic_update, soft_update};
use crate::dynamics::MAX_STEP_BOUND;
use crate::env::EnvConfig;
use crate::neural::{ActorNet, Adam, CriticNet, Network, HIDDEN};
use crate::{Error, Result};

/// Consecutive non-finite updates tolerated before training aborts.
pub const MAX_CONSECUTIVE_SKIPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub n_lstm: usize,
    pub hidden: usize,
    /// Window length L.
    pub window: usize,
    /// Windows per minibatch, B.
    pub batch: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub gamma: f64,
    pub tau: f64,
    pub sigma_explore: f64,
    pub n_updates: usize,
    pub buffer_capacity: usize,
    pub episodes_per_round: usize,
    pub updates_per_round: usize,
    pub checkpoint_every: usize,
    /// Zero the bootstrap term on the final transition of an episode.
    pub mask_terminal: bool,
    /// Integrator step bound used while generating episodes.
    pub step_bound: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_lstm: 2,
            hidden: HIDDEN,
            window: 10,
            batch: 256,
            lr_actor: 1e-4,
            lr_critic: 1e-3,
            gamma: 0.99,
            tau: 0.005,
            sigma_explore: 0.1,
            n_updates: 10_000,
            buffer_capacity: 100_000,
            episodes_per_round: 16,
            updates_per_round: 50,
            checkpoint_every: 1000,
            mask_terminal: true,
            step_bound: MAX_STEP_BOUND,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_lstm != 2 || self.hidden != HIDDEN {
            return Err(Error::Invalid(alloc::format!(
                "architecture is fixed at n_lstm=2, hidden={HIDDEN}; got n_lstm={}, hidden={}",
                self.n_lstm,
                self.hidden
            )));
        }
        let counts = [
            ("window", self.window),
            ("batch", self.batch),
            ("buffer_capacity", self.buffer_capacity),
            ("episodes_per_round", self.episodes_per_round),
            ("updates_per_round", self.updates_per_round),
            ("checkpoint_every", self.checkpoint_every),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::domain(name, "> 0", 0.0));
            }
        }
        for (name, v) in [("lr_actor", self.lr_actor), ("lr_critic", self.lr_critic)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(name, "finite and > 0", v));
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::domain("gamma", "in (0, 1)", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::domain("tau", "in (0, 1]", self.tau));
        }
        if !(self.sigma_explore >= 0.0 && self.sigma_explore.is_finite()) {
            return Err(Error::domain(
                "sigma_explore",
                "finite and >= 0",
                self.sigma_explore,
            ));
        }
        if !(self.step_bound > 0.0 && self.step_bound <= MAX_STEP_BOUND) {
            return Err(Error::domain("step_bound", "in (0, 0.02]", self.step_bound));
        }
        Ok(())
    }
}

/// One logged update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    /// 1-based update index.
    pub update: usize,
    pub critic_loss: f64,
    pub actor_loss: f64,
    /// Mean per-step reward over the most recent generation round.
    pub mean_episode_reward: f64,
}

/// Hooks invoked by [`Trainer::run`]. Every method has a no-op default.
pub trait TrainObserver {
    fn metrics(&mut self, _row: &MetricsRow) {}

    fn checkpoint(&mut self, _trainer: &Trainer) -> Result<()> {
        Ok(())
    }

    /// Called on each locally generated episode before it enters the buffer.
    fn refine_rewards(&mut self, _episode: &mut Episode) {}

    fn episode_failed(&mut self, _seed: u64, _error: &Error) {}

    fn update_skipped(&mut self, _update: usize, _error: &Error) {}
}

impl TrainObserver for () {}

/// Live and target networks, optimizers, replay and the training stream.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    pub env: EnvConfig,
    pub seed: u64,
    pub actor: ActorNet,
    pub critic: CriticNet,
    pub target_actor: ActorNet,
    pub target_critic: CriticNet,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    update_count: usize,
    episodes_generated: usize,
    last_round_reward: f64,
    consecutive_skips: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig, env: EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        env.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = ActorNet::new(&mut rng);
        let critic = CriticNet::new(&mut rng);
        Ok(Self {
            actor_opt: Adam::new(actor.n_params(), config.lr_actor),
            critic_opt: Adam::new(critic.n_params(), config.lr_critic),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            config,
            env,
            seed,
            rng,
            update_count: 0,
            episodes_generated: 0,
            last_round_reward: f64::NAN,
            consecutive_skips: 0,
        })
    }

    pub fn update_count(&self) -> usize {
        self.update_count
    }

    pub fn episodes_generated(&self) -> usize {
        self.episodes_generated
    }

    pub fn generation_spec(&self) -> GenerationSpec {
        GenerationSpec {
            env: self.env,
            sigma: self.config.sigma_explore,
            step_bound: self.config.step_bound,
        }
    }

    fn can_sample(&self) -> bool {
        self.buffer.eligible_transitions(self.config.window)
            >= self.config.batch * self.config.window
    }

    /// Generates one round of episodes with the current actor and stores them.
    pub fn generate_round<S, O>(&mut self, source: &mut S, observer: &mut O) -> Result<()>
    where
        S: EpisodeSource + ?Sized,
        O: TrainObserver + ?Sized,
    {
        let seeds: Vec<u64> = (0..self.config.episodes_per_round)
            .map(|_| self.rng.next_u64())
            .collect();
        let spec = self.generation_spec();
        let results = source.generate(&self.actor, &spec, &seeds);
        let mut reward_sum = 0.0;
        let mut stored = 0usize;
        for (&seed, result) in seeds.iter().zip(results) {
            match result {
                Ok(mut episode) => {
                    observer.refine_rewards(&mut episode);
                    reward_sum += episode.mean_reward();
                    self.buffer.push(episode)?;
                    stored += 1;
                }
                Err(e) => observer.episode_failed(seed, &e),
            }
        }
        self.episodes_generated += stored;
        if stored == 0 {
            return Err(Error::Invalid(
                "every episode of a generation round failed".into(),
            ));
        }
        self.last_round_reward = reward_sum / stored as f64;
        Ok(())
    }

    /// One critic step, one actor step and both soft updates. Returns `None`
    /// when the update was skipped for a non-finite loss or gradient.
    pub fn update_step<O: TrainObserver + ?Sized>(
        &mut self,
        observer: &mut O,
    ) -> Result<Option<MetricsRow>> {
        let batch = self
            .buffer
            .sample(self.config.batch, self.config.window, &mut self.rng)?;
        let targets = compute_targets(
            &batch,
            &self.target_actor,
            &self.target_critic,
            self.config.gamma,
            self.config.mask_terminal,
        );
        let losses = critic_update(&batch, &targets, &mut self.critic, &mut self.critic_opt)
            .and_then(|c| {
                actor_update(&batch, &mut self.actor, &self.critic, &mut self.actor_opt)
                    .map(|a| (c, a))
            });
        let (critic_loss, actor_loss) = match losses {
            Ok(l) => l,
            Err(e @ Error::NonFinite(_)) => {
                self.consecutive_skips += 1;
                observer.update_skipped(self.update_count + 1, &e);
                if self.consecutive_skips >= MAX_CONSECUTIVE_SKIPS {
                    return Err(Error::Diverged {
                        update: self.update_count + 1,
                        consecutive: self.consecutive_skips,
                    });
                }
                return Ok(None);
            }
            Err(e) => return Err(e),
        };
        self.consecutive_skips = 0;
        soft_update(
            self.actor.params(),
            self.target_actor.params_mut(),
            self.config.tau,
        )?;
        soft_update(
            self.critic.params(),
            self.target_critic.params_mut(),
            self.config.tau,
        )?;
        self.update_count += 1;
        Ok(Some(MetricsRow {
            update: self.update_count,
            critic_loss,
            actor_loss,
            mean_episode_reward: self.last_round_reward,
        }))
    }

    /// Trains until `n_updates` updates have been applied.
    pub fn run<S, O>(&mut self, source: &mut S, observer: &mut O) -> Result<()>
    where
        S: EpisodeSource + ?Sized,
        O: TrainObserver + ?Sized,
    {
        while self.update_count < self.config.n_updates {
            self.generate_round(source, observer)?;
            while !self.can_sample() {
                self.generate_round(source, observer)?;
            }
            let mut done = 0;
            while done < self.config.updates_per_round && self.update_count < self.config.n_updates
            {
                if let Some(row) = self.update_step(observer)? {
                    done += 1;
                    observer.metrics(&row);
                    if row.update % self.config.checkpoint_every == 0 {
                        observer.checkpoint(self)?;
                    }
                }
            }
        }
        Ok(())
    }
}
