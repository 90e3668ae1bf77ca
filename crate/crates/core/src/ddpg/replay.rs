//! Whole-episode replay storage and fixed-length window sampling.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;

use crate::env::{EnvParams, Observation, ACT_DIM, OBS_DIM};
use crate::neural::SeqTensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub s: Observation,
    /// Raw (pre-squash) action including exploration noise.
    pub a: [f64; ACT_DIM],
    pub r: f64,
    pub s_next: Observation,
    pub done: bool,
}

/// A complete rollout together with the bath it was generated under.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub seed: u64,
    pub params: EnvParams,
    pub transitions: Vec<Transition>,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.transitions.iter().map(|t| t.r).sum()
    }

    pub fn mean_reward(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.total_reward() / self.len() as f64
        }
    }
}

/// L×B windows laid out time-major, with `(dim, L, B)` shape accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBatch {
    pub obs: SeqTensor,
    pub actions: SeqTensor,
    pub rewards: SeqTensor,
    pub next_obs: SeqTensor,
    pub done: SeqTensor,
}

impl SequenceBatch {
    pub fn window(&self) -> usize {
        self.obs.len
    }

    pub fn batch(&self) -> usize {
        self.obs.batch
    }

    pub fn obs_shape(&self) -> (usize, usize, usize) {
        (self.obs.dim, self.obs.len, self.obs.batch)
    }

    pub fn action_shape(&self) -> (usize, usize, usize) {
        (self.actions.dim, self.actions.len, self.actions.batch)
    }

    pub fn reward_shape(&self) -> (usize, usize, usize) {
        (self.rewards.dim, self.rewards.len, self.rewards.batch)
    }

    /// Builds a batch from explicit windows, each a slice of L transitions.
    pub fn from_windows(windows: &[&[Transition]]) -> Result<Self> {
        let batch = windows.len();
        let len = windows.first().map_or(0, |w| w.len());
        if batch == 0 || len == 0 {
            return Err(Error::Invalid("empty sequence batch".into()));
        }
        let mut out = Self {
            obs: SeqTensor::zeros(len, batch, OBS_DIM),
            actions: SeqTensor::zeros(len, batch, ACT_DIM),
            rewards: SeqTensor::zeros(len, batch, 1),
            next_obs: SeqTensor::zeros(len, batch, OBS_DIM),
            done: SeqTensor::zeros(len, batch, 1),
        };
        for (b, w) in windows.iter().enumerate() {
            if w.len() != len {
                return Err(Error::Shape {
                    context: "sequence window",
                    expected: len,
                    got: w.len(),
                });
            }
            for (t, tr) in w.iter().enumerate() {
                out.obs.at_mut(t, b).copy_from_slice(&tr.s.0);
                out.actions.at_mut(t, b).copy_from_slice(&tr.a);
                out.rewards.at_mut(t, b)[0] = tr.r;
                out.next_obs.at_mut(t, b).copy_from_slice(&tr.s_next.0);
                out.done.at_mut(t, b)[0] = if tr.done { 1.0 } else { 0.0 };
            }
        }
        Ok(out)
    }
}

/// FIFO of complete episodes bounded by a transition count.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    episodes: VecDeque<Episode>,
    transitions: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            episodes: VecDeque::new(),
            transitions: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stored transitions.
    pub fn len(&self) -> usize {
        self.transitions
    }

    pub fn is_empty(&self) -> bool {
        self.transitions == 0
    }

    pub fn episodes(&self) -> impl Iterator<Item = &Episode> {
        self.episodes.iter()
    }

    pub fn n_episodes(&self) -> usize {
        self.episodes.len()
    }

    /// Appends an episode, evicting the oldest whole episodes to make room.
    pub fn push(&mut self, episode: Episode) -> Result<()> {
        if episode.len() > self.capacity {
            return Err(Error::domain(
                "episode length",
                "<= buffer capacity",
                episode.len() as f64,
            ));
        }
        while self.transitions + episode.len() > self.capacity {
            let old = self
                .episodes
                .pop_front()
                .expect("non-empty while over capacity");
            self.transitions -= old.len();
        }
        self.transitions += episode.len();
        self.episodes.push_back(episode);
        Ok(())
    }

    /// Transitions held by episodes long enough to yield a window of `len`.
    pub fn eligible_transitions(&self, len: usize) -> usize {
        self.episodes
            .iter()
            .filter(|e| e.len() >= len)
            .map(Episode::len)
            .sum()
    }

    /// Samples `batch` windows of `len` steps, uniform over (episode, start).
    pub fn sample<R: Rng + ?Sized>(
        &self,
        batch: usize,
        len: usize,
        rng: &mut R,
    ) -> Result<SequenceBatch> {
        if batch == 0 || len == 0 {
            return Err(Error::Invalid("batch and window must be positive".into()));
        }
        let available = self.eligible_transitions(len);
        if available < batch * len {
            return Err(Error::InsufficientData {
                needed: batch * len,
                available,
            });
        }
        let mut cumulative = Vec::with_capacity(self.episodes.len());
        let mut total = 0usize;
        for e in &self.episodes {
            if e.len() >= len {
                total += e.len() - len + 1;
            }
            cumulative.push(total);
        }
        let mut windows = Vec::with_capacity(batch);
        for _ in 0..batch {
            let u = rng.random_range(0..total);
            let k = cumulative.partition_point(|&c| c <= u);
            let start = u - if k == 0 { 0 } else { cumulative[k - 1] };
            windows.push(&self.episodes[k].transitions[start..start + len]);
        }
        SequenceBatch::from_windows(&windows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn episode(id: u64, len: usize) -> Episode {
        let transitions = (0..len)
            .map(|k| {
                let mut s = [0.0; OBS_DIM];
                s[0] = id as f64;
                s[1] = k as f64;
                let mut s_next = s;
                s_next[1] += 1.0;
                Transition {
                    s: Observation(s),
                    a: [k as f64, 0.0, 0.0],
                    r: 0.5,
                    s_next: Observation(s_next),
                    done: k + 1 == len,
                }
            })
            .collect();
        Episode {
            seed: id,
            params: EnvParams::new(0.0, 0.1, 0.1, 2.0),
            transitions,
        }
    }

    #[test]
    fn eviction_is_whole_and_oldest_first() {
        let mut buf = ReplayBuffer::new(250);
        for id in 0..5 {
            buf.push(episode(id, 100)).unwrap();
            assert!(buf.len() <= 250);
        }
        let ids: Vec<u64> = buf.episodes().map(|e| e.seed).collect();
        assert_eq!(ids, [3, 4]);
        assert_eq!(buf.len(), 200);
        assert!(buf.push(episode(9, 251)).is_err());
    }

    #[test]
    fn windows_are_contiguous_and_in_range() {
        let mut buf = ReplayBuffer::new(1000);
        buf.push(episode(0, 100)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = [false; 91];
        for _ in 0..200 {
            let batch = buf.sample(10, 10, &mut rng).unwrap();
            for b in 0..10 {
                let start = batch.obs.at(0, b)[1] as usize;
                assert!(start <= 90);
                seen[start] = true;
                for t in 0..10 {
                    assert_eq!(batch.obs.at(t, b)[1] as usize, start + t);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn windows_never_straddle_episodes() {
        let mut buf = ReplayBuffer::new(10_000);
        for id in 0..20 {
            buf.push(episode(id, 30 + id as usize)).unwrap();
        }
        let batch = buf
            .sample(64, 10, &mut ChaCha8Rng::seed_from_u64(5))
            .unwrap();
        for b in 0..64 {
            let id = batch.obs.at(0, b)[0];
            for t in 1..10 {
                assert_eq!(batch.obs.at(t, b)[0], id);
                assert_eq!(batch.obs.at(t, b)[1], batch.obs.at(t - 1, b)[1] + 1.0);
            }
            assert!(
                batch.done.at(9, b)[0] == 0.0 || batch.obs.at(9, b)[1] as usize == 29 + id as usize
            );
        }
    }

    #[test]
    fn shapes_and_determinism() {
        let mut buf = ReplayBuffer::new(10_000);
        for id in 0..40 {
            buf.push(episode(id, 100)).unwrap();
        }
        let a = buf
            .sample(32, 10, &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        let b = buf
            .sample(32, 10, &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.obs_shape(), (24, 10, 32));
        assert_eq!(a.action_shape(), (3, 10, 32));
        assert_eq!(a.reward_shape(), (1, 10, 32));
    }

    #[test]
    fn short_episodes_are_ineligible() {
        let mut buf = ReplayBuffer::new(1000);
        buf.push(episode(0, 5)).unwrap();
        buf.push(episode(1, 12)).unwrap();
        assert_eq!(buf.eligible_transitions(10), 12);
        let err = buf
            .sample(2, 10, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientData {
                needed: 20,
                available: 12
            }
        ));
        let batch = buf
            .sample(1, 10, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(batch.obs.at(0, 0)[0], 1.0);
    }
}
