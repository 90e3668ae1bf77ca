//! Losses, gradient steps and target-network tracking.

use alloc::vec;
use alloc::vec::Vec;

use super::replay::SequenceBatch;
use crate::neural::{ActorNet, Adam, CriticNet, Network, SeqTensor};
use crate::{Error, Result};

/// TD targets y = r + γ(1 − d)Q'(s', π'(s')); the target networks see the
/// shifted window from a zero hidden state. With `mask_terminal == false`
/// the bootstrap term is kept at the episode end.
pub fn compute_targets(
    batch: &SequenceBatch,
    target_actor: &ActorNet,
    target_critic: &CriticNet,
    gamma: f64,
    mask_terminal: bool,
) -> Vec<f64> {
    let (next_actions, _) = target_actor.forward(&batch.next_obs, None);
    let q_next = target_critic.forward(&batch.next_obs, &next_actions);
    batch
        .rewards
        .data
        .iter()
        .zip(&batch.done.data)
        .zip(&q_next.data)
        .map(|((&r, &d), &q)| {
            let keep = if mask_terminal { 1.0 - d } else { 1.0 };
            r + gamma * keep * q
        })
        .collect()
}

/// Mean squared error over all B·L entries.
pub fn mse(q: &[f64], y: &[f64]) -> f64 {
    assert_eq!(q.len(), y.len());
    q.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / q.len() as f64
}

/// One critic step on (Q(s,a) − y)²; returns the pre-step loss.
pub fn critic_update(
    batch: &SequenceBatch,
    targets: &[f64],
    critic: &mut CriticNet,
    opt: &mut Adam,
) -> Result<f64> {
    let cache = critic.forward_cached(&batch.obs, &batch.actions);
    let q = &cache.q.data;
    if targets.len() != q.len() {
        return Err(Error::Shape {
            context: "critic targets",
            expected: q.len(),
            got: targets.len(),
        });
    }
    let loss = mse(q, targets);
    if !loss.is_finite() {
        return Err(Error::NonFinite("critic loss"));
    }
    let scale = 2.0 / q.len() as f64;
    let dq: Vec<f64> = q
        .iter()
        .zip(targets)
        .map(|(a, b)| scale * (a - b))
        .collect();
    let mut grads = vec![0.0; critic.n_params()];
    critic.backward(&cache, &dq, Some(&mut grads));
    if !opt.update(critic.params_mut(), &grads) {
        return Err(Error::NonFinite("critic gradient"));
    }
    Ok(loss)
}

/// One actor step on −mean Q(s, π(s)) with the critic held fixed; returns
/// the pre-step loss.
pub fn actor_update(
    batch: &SequenceBatch,
    actor: &mut ActorNet,
    critic: &CriticNet,
    opt: &mut Adam,
) -> Result<f64> {
    let cache = actor.forward_cached(&batch.obs, None);
    let ccache = critic.forward_cached(&batch.obs, &cache.actions);
    let n = ccache.q.data.len();
    let loss = -ccache.q.data.iter().sum::<f64>() / n as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite("actor loss"));
    }
    let dq = vec![-1.0 / n as f64; n];
    let d_actions = critic.backward(&ccache, &dq, None);
    let mut grads = vec![0.0; actor.n_params()];
    actor.backward(&cache, &d_actions, &mut grads);
    if !opt.update(actor.params_mut(), &grads) {
        return Err(Error::NonFinite("actor gradient"));
    }
    Ok(loss)
}

/// θ' ← τθ + (1 − τ)θ'.
pub fn soft_update(main: &[f64], target: &mut [f64], tau: f64) -> Result<()> {
    if main.len() != target.len() {
        return Err(Error::Shape {
            context: "soft update",
            expected: main.len(),
            got: target.len(),
        });
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::domain("tau", "in (0, 1]", tau));
    }
    for (t, &m) in target.iter_mut().zip(main) {
        *t = tau * m + (1.0 - tau) * *t;
    }
    Ok(())
}

/// Σₖ γᵏ rₖ over one window.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, &r| r + gamma * acc)
}

/// Per-window discounted returns of a batch, one per column.
pub fn batch_returns(batch: &SequenceBatch, gamma: f64) -> Vec<f64> {
    (0..batch.batch())
        .map(|b| {
            let r: Vec<f64> = (0..batch.window())
                .map(|t| batch.rewards.at(t, b)[0])
                .collect();
            discounted_return(&r, gamma)
        })
        .collect()
}

/// Q(s, a) of a batch under `critic`, for diagnostics.
pub fn batch_q(batch: &SequenceBatch, critic: &CriticNet) -> SeqTensor {
    critic.forward(&batch.obs, &batch.actions)
}
