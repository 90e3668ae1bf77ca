//! Episode generation with a stateful actor and Gaussian exploration.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::replay::{Episode, Transition};
use crate::dynamics::DEFAULT_STEP_BOUND;
use crate::env::{ControlSignal, EnvConfig, EnvParams, Environment, StepResult, ACT_DIM};
use crate::neural::{ActorNet, RecurrentState};
use crate::{Error, Result};

/// Everything a worker needs besides the actor snapshot and its seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationSpec {
    pub env: EnvConfig,
    /// Standard deviation of the noise added to raw actions.
    pub sigma: f64,
    pub step_bound: f64,
}

impl GenerationSpec {
    pub fn new(env: EnvConfig, sigma: f64) -> Self {
        Self {
            env,
            sigma,
            step_bound: DEFAULT_STEP_BOUND,
        }
    }
}

/// Runs one exploratory episode. The seed alone fixes the sampled bath
/// parameters and the noise sequence.
pub fn generate_episode(actor: &ActorNet, spec: &GenerationSpec, seed: u64) -> Result<Episode> {
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(Error::domain(
            "sigma_explore",
            "finite and >= 0",
            spec.sigma,
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = spec.env.param_ranges.sample(&mut rng);
    let noise = Normal::new(0.0, spec.sigma)
        .map_err(|_| Error::domain("sigma_explore", "finite and >= 0", spec.sigma))?;
    let mut env = Environment::new(spec.env, params)?;
    env.set_step_bound(spec.step_bound);
    let mut obs = env.observation();
    let mut state = RecurrentState::zeros(1);
    let mut transitions = Vec::with_capacity(env.n_steps());
    while !env.done() {
        let mut a = actor.act(&obs.0, &mut state);
        if spec.sigma > 0.0 {
            for x in a.iter_mut() {
                *x += noise.sample(&mut rng);
            }
        }
        let step = env.step(&a)?;
        transitions.push(Transition {
            s: obs,
            a,
            r: step.reward,
            s_next: step.observation,
            done: step.done,
        });
        obs = step.observation;
    }
    Ok(Episode {
        seed,
        params,
        transitions,
    })
}

/// Noise-free rollout of `actor` on fixed parameters.
pub fn run_policy(
    actor: &ActorNet,
    config: &EnvConfig,
    params: EnvParams,
    step_bound: f64,
) -> Result<Vec<StepResult>> {
    let mut env = Environment::new(*config, params)?;
    env.set_step_bound(step_bound);
    let mut obs = env.observation();
    let mut state = RecurrentState::zeros(1);
    let mut out = Vec::with_capacity(env.n_steps());
    while !env.done() {
        let a: [f64; ACT_DIM] = actor.act(&obs.0, &mut state);
        let step = env.step(&a)?;
        obs = step.observation;
        out.push(step);
    }
    Ok(out)
}

/// Rollout with constant controls.
pub fn run_static(
    config: &EnvConfig,
    params: EnvParams,
    control: ControlSignal,
    step_bound: f64,
) -> Result<Vec<StepResult>> {
    let mut env = Environment::new(*config, params)?;
    env.set_step_bound(step_bound);
    let mut out = Vec::with_capacity(env.n_steps());
    while !env.done() {
        out.push(env.step_control(control)?);
    }
    Ok(out)
}

/// Produces episodes for a list of per-episode seeds. Results must come
/// back in seed order so training stays independent of scheduling.
pub trait EpisodeSource {
    fn generate(
        &mut self,
        actor: &ActorNet,
        spec: &GenerationSpec,
        seeds: &[u64],
    ) -> Vec<Result<Episode>>;
}

/// Generates on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl EpisodeSource for Sequential {
    fn generate(
        &mut self,
        actor: &ActorNet,
        spec: &GenerationSpec,
        seeds: &[u64],
    ) -> Vec<Result<Episode>> {
        seeds
            .iter()
            .map(|&s| generate_episode(actor, spec, s))
            .collect()
    }
}
