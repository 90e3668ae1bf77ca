//! Recurrent actor and critic.
//!
//! Actor: LSTM(24→32) → LSTM(32→32) → Dense(32→32, ReLU) → Dense(32→3).
//! The output is the raw pre-activation action; squashing into physical
//! controls happens in [`ControlSignal::decode`](crate::env::ControlSignal::decode).
//!
//! Critic: a state branch LSTM(24→32) → LSTM(32→32) → Dense(32→32, ReLU), an
//! action branch Dense(3→32, ReLU) → Dense(32→32, ReLU), and a head
//! Dense(64→32, ReLU) → Dense(32→1) on the concatenated features. The action
//! branch sees the raw action through [`squash_action`], so Q is flat wherever
//! the decoded controls saturate.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::layers::{Dense, Lstm, LstmCache, ParamLayout};
use super::tensor::SeqTensor;
use crate::env::{sigmoid, ACT_DIM, OBS_DIM};
#[allow(unused_imports)]
use crate::prelude::*;

pub const HIDDEN: usize = 32;

/// Anything backed by a flat parameter vector with a named layout.
pub trait Network {
    fn layout(&self) -> &ParamLayout;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    fn n_params(&self) -> usize {
        self.layout().len()
    }
}

/// Hidden and cell states of both stacked LSTM layers, each batch × H.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentState {
    pub batch: usize,
    pub h1: Vec<f64>,
    pub c1: Vec<f64>,
    pub h2: Vec<f64>,
    pub c2: Vec<f64>,
}

impl RecurrentState {
    pub fn zeros(batch: usize) -> Self {
        let z = vec![0.0; batch * HIDDEN];
        Self {
            batch,
            h1: z.clone(),
            c1: z.clone(),
            h2: z.clone(),
            c2: z,
        }
    }
}

/// Parameter-free map from a raw action to normalized controls
/// (tanh a₁, σ(a₂)σ(a₃), σ(a₃)), i.e. the drive, coupling and gate on unit
/// scales. Returns the values and the Jacobian's nonzero entries
/// (∂u₁/∂a₁, ∂u₂/∂a₂, ∂u₂/∂a₃, ∂u₃/∂a₃).
pub fn squash_action(a: &[f64]) -> ([f64; ACT_DIM], [f64; 4]) {
    let u1 = a[0].tanh();
    let s2 = sigmoid(a[1]);
    let s3 = sigmoid(a[2]);
    let ds2 = s2 * (1.0 - s2);
    let ds3 = s3 * (1.0 - s3);
    ([u1, s2 * s3, s3], [1.0 - u1 * u1, ds2 * s3, s2 * ds3, ds3])
}

#[derive(Debug, Clone, PartialEq)]
struct RecurrentTrunk {
    lstm1: Lstm,
    lstm2: Lstm,
    fc: Dense,
}

#[derive(Debug, Clone, PartialEq)]
struct TrunkCache {
    l1: LstmCache,
    l2: LstmCache,
    features: Vec<f64>,
}

impl RecurrentTrunk {
    fn register(layout: &mut ParamLayout, prefix: &str) -> Self {
        Self {
            lstm1: Lstm::register(layout, &alloc::format!("{prefix}lstm1"), OBS_DIM, HIDDEN),
            lstm2: Lstm::register(layout, &alloc::format!("{prefix}lstm2"), HIDDEN, HIDDEN),
            fc: Dense::register(layout, &alloc::format!("{prefix}fc1"), HIDDEN, HIDDEN, true),
        }
    }

    fn forward(&self, params: &[f64], obs: &SeqTensor, state: &RecurrentState) -> TrunkCache {
        assert_eq!(obs.dim, OBS_DIM, "observation width");
        assert_eq!(obs.batch, state.batch, "recurrent state batch");
        let l1 = self.lstm1.forward(params, obs, &state.h1, &state.c1);
        let l2 = self.lstm2.forward(params, &l1.h, &state.h2, &state.c2);
        let features = self.fc.forward(params, &l2.h.data, obs.rows());
        TrunkCache { l1, l2, features }
    }

    fn final_state(cache: &TrunkCache) -> RecurrentState {
        let (h1, c1) = cache.l1.final_state();
        let (h2, c2) = cache.l2.final_state();
        RecurrentState {
            batch: cache.l1.h.batch,
            h1,
            c1,
            h2,
            c2,
        }
    }

    fn backward(
        &self,
        params: &[f64],
        cache: &TrunkCache,
        mut d_features: Vec<f64>,
        grads: &mut [f64],
    ) {
        let rows = cache.l2.h.rows();
        let d_h2 = self
            .fc
            .backward(
                params,
                &cache.l2.h.data,
                &cache.features,
                &mut d_features,
                rows,
                Some(&mut *grads),
                true,
            )
            .expect("input gradient requested");
        let d_h2 = SeqTensor::from_vec(cache.l2.h.len, cache.l2.h.batch, HIDDEN, d_h2);
        let d_h1 = self
            .lstm2
            .backward(params, &cache.l2, &d_h2, grads, true)
            .expect("input gradient requested");
        self.lstm1.backward(params, &cache.l1, &d_h1, grads, false);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorNet {
    layout: ParamLayout,
    trunk: RecurrentTrunk,
    out: Dense,
    params: Vec<f64>,
}

/// Forward intermediates of the actor.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCache {
    trunk: TrunkCache,
    /// Raw actions (L, B, 3).
    pub actions: SeqTensor,
}

impl ActorCache {
    pub fn final_state(&self) -> RecurrentState {
        RecurrentTrunk::final_state(&self.trunk)
    }
}

impl ActorNet {
    fn build() -> (ParamLayout, RecurrentTrunk, Dense) {
        let mut layout = ParamLayout::new();
        let trunk = RecurrentTrunk::register(&mut layout, "");
        let out = Dense::register(&mut layout, "fc2", HIDDEN, ACT_DIM, false);
        (layout, trunk, out)
    }

    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let (layout, trunk, out) = Self::build();
        let params = layout.initialize(rng);
        Self {
            layout,
            trunk,
            out,
            params,
        }
    }

    /// All parameters zero.
    pub fn zeroed() -> Self {
        let (layout, trunk, out) = Self::build();
        let params = vec![0.0; layout.len()];
        Self {
            layout,
            trunk,
            out,
            params,
        }
    }

    pub fn forward_cached(&self, obs: &SeqTensor, state: Option<&RecurrentState>) -> ActorCache {
        let zero;
        let state = match state {
            Some(s) => s,
            None => {
                zero = RecurrentState::zeros(obs.batch);
                &zero
            }
        };
        let trunk = self.trunk.forward(&self.params, obs, state);
        let raw = self.out.forward(&self.params, &trunk.features, obs.rows());
        ActorCache {
            trunk,
            actions: SeqTensor::from_vec(obs.len, obs.batch, ACT_DIM, raw),
        }
    }

    /// Raw actions for every step plus the final recurrent state. `None`
    /// starts from zeros.
    pub fn forward(
        &self,
        obs: &SeqTensor,
        state: Option<&RecurrentState>,
    ) -> (SeqTensor, RecurrentState) {
        let cache = self.forward_cached(obs, state);
        let final_state = cache.final_state();
        (cache.actions, final_state)
    }

    /// Single-step stateful evaluation for one environment.
    pub fn act(&self, obs: &[f64; OBS_DIM], state: &mut RecurrentState) -> [f64; ACT_DIM] {
        let input = SeqTensor::from_vec(1, 1, OBS_DIM, obs.to_vec());
        let (a, next) = self.forward(&input, Some(state));
        *state = next;
        [a.data[0], a.data[1], a.data[2]]
    }

    /// Accumulates dLoss/dθ into `grads` given dLoss/d(raw action).
    pub fn backward(&self, cache: &ActorCache, d_actions: &SeqTensor, grads: &mut [f64]) {
        assert_eq!(grads.len(), self.params.len(), "actor gradient length");
        let rows = d_actions.rows();
        let mut d_out = d_actions.data.clone();
        let d_features = self
            .out
            .backward(
                &self.params,
                &cache.trunk.features,
                &cache.actions.data,
                &mut d_out,
                rows,
                Some(&mut *grads),
                true,
            )
            .expect("input gradient requested");
        self.trunk
            .backward(&self.params, &cache.trunk, d_features, grads);
    }
}

impl Network for ActorNet {
    fn layout(&self) -> &ParamLayout {
        &self.layout
    }
    fn params(&self) -> &[f64] {
        &self.params
    }
    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticNet {
    layout: ParamLayout,
    state_branch: RecurrentTrunk,
    action_fc1: Dense,
    action_fc2: Dense,
    head_fc1: Dense,
    head_fc2: Dense,
    params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticCache {
    state: TrunkCache,
    squashed: Vec<f64>,
    jacobian: Vec<[f64; 4]>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    joint: Vec<f64>,
    head1: Vec<f64>,
    /// Q values (L, B, 1).
    pub q: SeqTensor,
}

impl CriticNet {
    fn build() -> (ParamLayout, RecurrentTrunk, [Dense; 4]) {
        let mut layout = ParamLayout::new();
        let state_branch = RecurrentTrunk::register(&mut layout, "state.");
        let a1 = Dense::register(&mut layout, "action.fc1", ACT_DIM, HIDDEN, true);
        let a2 = Dense::register(&mut layout, "action.fc2", HIDDEN, HIDDEN, true);
        let h1 = Dense::register(&mut layout, "head.fc1", 2 * HIDDEN, HIDDEN, true);
        let h2 = Dense::register(&mut layout, "head.fc2", HIDDEN, 1, false);
        (layout, state_branch, [a1, a2, h1, h2])
    }

    fn assemble(
        layout: ParamLayout,
        state_branch: RecurrentTrunk,
        d: [Dense; 4],
        params: Vec<f64>,
    ) -> Self {
        Self {
            layout,
            state_branch,
            action_fc1: d[0],
            action_fc2: d[1],
            head_fc1: d[2],
            head_fc2: d[3],
            params,
        }
    }

    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let (layout, s, d) = Self::build();
        let params = layout.initialize(rng);
        Self::assemble(layout, s, d, params)
    }

    pub fn zeroed() -> Self {
        let (layout, s, d) = Self::build();
        let params = vec![0.0; layout.len()];
        Self::assemble(layout, s, d, params)
    }

    /// Q(s, a) for every step of the window; the state branch starts from zeros.
    pub fn forward_cached(&self, obs: &SeqTensor, actions: &SeqTensor) -> CriticCache {
        assert_eq!(
            (actions.len, actions.batch, actions.dim),
            (obs.len, obs.batch, ACT_DIM),
            "action shape"
        );
        let rows = obs.rows();
        let p = &self.params;
        let state = self
            .state_branch
            .forward(p, obs, &RecurrentState::zeros(obs.batch));
        let mut squashed = Vec::with_capacity(rows * ACT_DIM);
        let mut jacobian = Vec::with_capacity(rows);
        for a in actions.data.chunks_exact(ACT_DIM) {
            let (u, j) = squash_action(a);
            squashed.extend_from_slice(&u);
            jacobian.push(j);
        }
        let a1 = self.action_fc1.forward(p, &squashed, rows);
        let a2 = self.action_fc2.forward(p, &a1, rows);
        let mut joint = vec![0.0; rows * 2 * HIDDEN];
        for r in 0..rows {
            joint[r * 2 * HIDDEN..r * 2 * HIDDEN + HIDDEN]
                .copy_from_slice(&state.features[r * HIDDEN..(r + 1) * HIDDEN]);
            joint[r * 2 * HIDDEN + HIDDEN..(r + 1) * 2 * HIDDEN]
                .copy_from_slice(&a2[r * HIDDEN..(r + 1) * HIDDEN]);
        }
        let head1 = self.head_fc1.forward(p, &joint, rows);
        let q = self.head_fc2.forward(p, &head1, rows);
        CriticCache {
            state,
            squashed,
            jacobian,
            a1,
            a2,
            joint,
            head1,
            q: SeqTensor::from_vec(obs.len, obs.batch, 1, q),
        }
    }

    pub fn forward(&self, obs: &SeqTensor, actions: &SeqTensor) -> SeqTensor {
        self.forward_cached(obs, actions).q
    }

    /// Backward pass from dLoss/dQ. With `grads`, parameter gradients are
    /// accumulated; the returned tensor is dLoss/d(action). When `grads` is
    /// `None` the state branch is skipped entirely.
    pub fn backward(
        &self,
        cache: &CriticCache,
        dq: &[f64],
        grads: Option<&mut [f64]>,
    ) -> SeqTensor {
        let rows = cache.q.rows();
        assert_eq!(dq.len(), rows, "critic upstream gradient length");
        let p = &self.params;
        let mut grads = grads;
        if let Some(g) = grads.as_deref() {
            assert_eq!(g.len(), p.len(), "critic gradient length");
        }
        let mut d_q = dq.to_vec();
        let mut d_head1 = self
            .head_fc2
            .backward(
                p,
                &cache.head1,
                &cache.q.data,
                &mut d_q,
                rows,
                grads.as_deref_mut(),
                true,
            )
            .expect("input gradient requested");
        let d_joint = self
            .head_fc1
            .backward(
                p,
                &cache.joint,
                &cache.head1,
                &mut d_head1,
                rows,
                grads.as_deref_mut(),
                true,
            )
            .expect("input gradient requested");
        let mut d_state = vec![0.0; rows * HIDDEN];
        let mut d_a2 = vec![0.0; rows * HIDDEN];
        for r in 0..rows {
            d_state[r * HIDDEN..(r + 1) * HIDDEN]
                .copy_from_slice(&d_joint[r * 2 * HIDDEN..r * 2 * HIDDEN + HIDDEN]);
            d_a2[r * HIDDEN..(r + 1) * HIDDEN]
                .copy_from_slice(&d_joint[r * 2 * HIDDEN + HIDDEN..(r + 1) * 2 * HIDDEN]);
        }
        let mut d_a1 = self
            .action_fc2
            .backward(
                p,
                &cache.a1,
                &cache.a2,
                &mut d_a2,
                rows,
                grads.as_deref_mut(),
                true,
            )
            .expect("input gradient requested");
        let d_u = self
            .action_fc1
            .backward(
                p,
                &cache.squashed,
                &cache.a1,
                &mut d_a1,
                rows,
                grads.as_deref_mut(),
                true,
            )
            .expect("input gradient requested");
        let mut d_actions = vec![0.0; rows * ACT_DIM];
        for ((da, du), j) in d_actions
            .chunks_exact_mut(ACT_DIM)
            .zip(d_u.chunks_exact(ACT_DIM))
            .zip(&cache.jacobian)
        {
            da[0] = du[0] * j[0];
            da[1] = du[1] * j[1];
            da[2] = du[1] * j[2] + du[2] * j[3];
        }
        if let Some(g) = grads {
            self.state_branch.backward(p, &cache.state, d_state, g);
        }
        SeqTensor::from_vec(cache.q.len, cache.q.batch, ACT_DIM, d_actions)
    }
}

impl Network for CriticNet {
    fn layout(&self) -> &ParamLayout {
        &self.layout
    }
    fn params(&self) -> &[f64] {
        &self.params
    }
    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ControlSignal, EnvConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn squash_jacobian_matches_central_differences() {
        let h = 1e-6;
        for a in [[0.3, -1.2, 0.7], [-2.0, 0.0, 3.5], [4.0, 2.5, -4.0]] {
            let (u, j) = squash_action(&a);
            let d = |k: usize, m: usize| {
                let (mut p, mut q) = (a, a);
                p[k] += h;
                q[k] -= h;
                (squash_action(&p).0[m] - squash_action(&q).0[m]) / (2.0 * h)
            };
            let cfg = EnvConfig::default();
            let c = ControlSignal::decode(&a, &cfg).unwrap();
            assert!(
                (u[1] * cfg.kappa_max - c.kappa).abs() < 1e-12 && (u[2] - c.gate).abs() < 1e-15
            );
            for (fd, exact) in [
                (d(0, 0), j[0]),
                (d(1, 1), j[1]),
                (d(2, 1), j[2]),
                (d(2, 2), j[3]),
            ] {
                assert!((fd - exact).abs() < 1e-8, "{fd} vs {exact}");
            }
            for (k, m) in [(1, 0), (2, 0), (0, 1), (0, 2), (1, 2)] {
                assert_eq!(d(k, m), 0.0);
            }
        }
    }

    fn random_seq(rng: &mut ChaCha8Rng, len: usize, batch: usize, dim: usize) -> SeqTensor {
        let data = (0..len * batch * dim)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        SeqTensor::from_vec(len, batch, dim, data)
    }

    #[test]
    fn zero_actor_outputs_zero_actions() {
        let actor = ActorNet::zeroed();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let obs = random_seq(&mut rng, 5, 2, OBS_DIM);
        let (a, _) = actor.forward(&obs, None);
        assert!(a.data.iter().all(|&v| v == 0.0));
        let c = ControlSignal::decode(&[a.data[0], a.data[1], a.data[2]], &EnvConfig::default())
            .unwrap();
        assert_eq!((c.eta, c.kappa, c.gate), (50.0, 25.0, 0.5));
    }

    #[test]
    fn zero_critic_outputs_zero_q() {
        let critic = CriticNet::zeroed();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let obs = random_seq(&mut rng, 4, 3, OBS_DIM);
        let act = random_seq(&mut rng, 4, 3, ACT_DIM);
        assert!(critic.forward(&obs, &act).data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batch_permutation_permutes_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let actor = ActorNet::new(&mut rng);
        let critic = CriticNet::new(&mut rng);
        let obs = random_seq(&mut rng, 6, 4, OBS_DIM);
        let act = random_seq(&mut rng, 6, 4, ACT_DIM);
        let perm = [2, 0, 3, 1];
        let (a, _) = actor.forward(&obs, None);
        let (ap, _) = actor.forward(&obs.select_batch(&perm), None);
        assert_eq!(a.select_batch(&perm), ap);
        let q = critic.forward(&obs, &act);
        let qp = critic.forward(&obs.select_batch(&perm), &act.select_batch(&perm));
        assert_eq!(q.select_batch(&perm), qp);
    }

    #[test]
    fn stateful_acting_matches_windowed_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let actor = ActorNet::new(&mut rng);
        let obs = random_seq(&mut rng, 100, 1, OBS_DIM);
        let mut state = RecurrentState::zeros(1);
        let mut stepped = Vec::new();
        for t in 0..100 {
            let o: [f64; OBS_DIM] = obs.at(t, 0).try_into().unwrap();
            stepped.extend_from_slice(&actor.act(&o, &mut state));
        }
        // Two windows of 50 with the state threaded between them.
        let first = SeqTensor::from_vec(50, 1, OBS_DIM, obs.data[..50 * OBS_DIM].to_vec());
        let second = SeqTensor::from_vec(50, 1, OBS_DIM, obs.data[50 * OBS_DIM..].to_vec());
        let (a1, mid) = actor.forward(&first, None);
        let (a2, end) = actor.forward(&second, Some(&mid));
        let windowed: Vec<f64> = a1.data.iter().chain(&a2.data).copied().collect();
        for (x, y) in stepped.iter().zip(&windowed) {
            assert!((x - y).abs() <= 1e-12);
        }
        assert_eq!(end, state);
    }

    #[test]
    fn critic_depends_on_actions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let critic = CriticNet::new(&mut rng);
        let obs = random_seq(&mut rng, 3, 2, OBS_DIM);
        let act = random_seq(&mut rng, 3, 2, ACT_DIM);
        let cache = critic.forward_cached(&obs, &act);
        let da = critic.backward(&cache, &[1.0; 6], None);
        assert!(da.data.iter().any(|v| v.abs() > 1e-6));
        let mut bumped = act.clone();
        bumped.at_mut(1, 0)[0] += 0.5;
        let q2 = critic.forward(&obs, &bumped);
        assert!((q2.at(1, 0)[0] - cache.q.at(1, 0)[0]).abs() > 0.0);
        // Earlier steps are unaffected by a later action.
        assert_eq!(q2.at(0, 0), cache.q.at(0, 0));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let actor = ActorNet::new(&mut rng);
        let obs = random_seq(&mut rng, 4, 2, OBS_DIM);
        let cache = actor.forward_cached(&obs, None);
        let mut g = vec![0.0; actor.n_params()];
        actor.backward(&cache, &SeqTensor::zeros(4, 2, ACT_DIM), &mut g);
        assert!(g.iter().all(|&v| v == 0.0));
    }
}
