//! Episodic charging environment: parameter sampling, observation encoding,
//! action decoding with the coupling gate, and the backflow-penalized reward.

use rand::Rng;

use crate::bath::BathSpec;
use crate::dynamics::Propagator;
use crate::error::{Error, Result};
use crate::prelude::*;
use crate::state::{DensityMatrix, Mat4};
use crate::thermo::{self, WorkRecord};

/// Observation length: 10 real parts, 10 imaginary parts, 4 env parameters.
pub const OBS_DIM: usize = 24;
/// Raw action length.
pub const ACT_DIM: usize = 3;

/// Upper triangle of a 4×4 matrix, row-major, diagonal included.
pub const UPPER_TRIANGLE: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Min-max normalization onto [0, 1]. A degenerate range maps to 0.
    pub fn normalize(&self, x: f64) -> f64 {
        let width = self.hi - self.lo;
        if width > 0.0 {
            (x - self.lo) / width
        } else {
            0.0
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.hi > self.lo {
            // Closed interval: both endpoints are admissible values.
            self.lo + (self.hi - self.lo) * rng.random::<f64>()
        } else {
            self.lo
        }
    }
}

/// Sampling ranges of the environment parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamRanges {
    pub temperature: Range,
    pub lambda: Range,
    pub gamma0: Range,
    pub delta: Range,
}

impl Default for ParamRanges {
    fn default() -> Self {
        Self {
            temperature: Range::new(0.0, 1.0),
            lambda: Range::new(0.1, 1.0),
            gamma0: Range::new(0.1, 1.0),
            delta: Range::new(2.0, 4.0),
        }
    }
}

impl ParamRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("temperature range", self.temperature),
            ("lambda range", self.lambda),
            ("gamma0 range", self.gamma0),
            ("delta range", self.delta),
        ] {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi) {
                return Err(Error::domain(name, "finite with lo <= hi", r.lo));
            }
        }
        if self.temperature.lo < 0.0 || self.lambda.lo <= 0.0 || self.gamma0.lo <= 0.0 {
            return Err(Error::Invalid(
                "parameter ranges must keep T >= 0, lambda > 0, gamma0 > 0".into(),
            ));
        }
        Ok(())
    }

    /// Independent uniform draws on each range.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> EnvParams {
        EnvParams {
            temperature: self.temperature.sample(rng),
            lambda: self.lambda.sample(rng),
            gamma0: self.gamma0.sample(rng),
            delta: self.delta.sample(rng),
        }
    }
}

/// Environment parameters of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnvParams {
    pub temperature: f64,
    pub lambda: f64,
    pub gamma0: f64,
    pub delta: f64,
}

impl EnvParams {
    pub fn new(temperature: f64, lambda: f64, gamma0: f64, delta: f64) -> Self {
        Self {
            temperature,
            lambda,
            gamma0,
            delta,
        }
    }

    pub fn bath(&self) -> Result<BathSpec> {
        BathSpec::new(self.gamma0, self.lambda, self.delta, self.temperature)
    }

    pub fn check_within(&self, ranges: &ParamRanges) -> Result<()> {
        for (name, x, r) in [
            ("temperature", self.temperature, ranges.temperature),
            ("lambda", self.lambda, ranges.lambda),
            ("gamma0", self.gamma0, ranges.gamma0),
            ("delta", self.delta, ranges.delta),
        ] {
            if !r.contains(x) {
                return Err(Error::domain(name, "inside its configured range", x));
            }
        }
        Ok(())
    }

    /// (T, λ, γ₀, Δ) min-max normalized.
    pub fn normalized(&self, ranges: &ParamRanges) -> [f64; 4] {
        [
            ranges.temperature.normalize(self.temperature),
            ranges.lambda.normalize(self.lambda),
            ranges.gamma0.normalize(self.gamma0),
            ranges.delta.normalize(self.delta),
        ]
    }
}

/// Draws one set of environment parameters with the default ranges.
pub fn sample_env_params<R: Rng + ?Sized>(rng: &mut R) -> EnvParams {
    ParamRanges::default().sample(rng)
}

/// Environment configuration; serialized as the environment JSON document.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EnvConfig {
    pub t_end: f64,
    pub dt_ctrl: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub kappa_max: f64,
    #[cfg_attr(feature = "serde", serde(rename = "penalty_B"))]
    pub penalty_b: f64,
    /// +1 penalizes when Im tr(ρσ₊ᴬσ₋ᴮ) < 0, −1 when it is > 0.
    pub backflow_sign: f64,
    pub param_ranges: ParamRanges,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            dt_ctrl: 0.1,
            eta_min: 0.0,
            eta_max: 100.0,
            kappa_max: 100.0,
            penalty_b: 1.0,
            backflow_sign: 1.0,
            param_ranges: ParamRanges::default(),
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_ctrl > 0.0 && self.dt_ctrl.is_finite()) {
            return Err(Error::domain("dt_ctrl", "finite and > 0", self.dt_ctrl));
        }
        if !(self.t_end >= self.dt_ctrl && self.t_end.is_finite()) {
            return Err(Error::domain("t_end", "finite and >= dt_ctrl", self.t_end));
        }
        if !(self.eta_min >= 0.0 && self.eta_max >= self.eta_min && self.eta_max.is_finite()) {
            return Err(Error::domain(
                "eta_max",
                "finite and >= eta_min >= 0",
                self.eta_max,
            ));
        }
        if !(self.kappa_max >= 0.0 && self.kappa_max.is_finite()) {
            return Err(Error::domain(
                "kappa_max",
                "finite and >= 0",
                self.kappa_max,
            ));
        }
        if !(self.penalty_b >= 0.0 && self.penalty_b.is_finite()) {
            return Err(Error::domain(
                "penalty_B",
                "finite and >= 0",
                self.penalty_b,
            ));
        }
        if self.backflow_sign != 1.0 && self.backflow_sign != -1.0 {
            return Err(Error::domain(
                "backflow_sign",
                "+1 or -1",
                self.backflow_sign,
            ));
        }
        self.param_ranges.validate()
    }

    /// Control steps per episode, `round(t_end / dt_ctrl)`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt_ctrl).round() as usize
    }
}

/// The agent's state: a fixed-layout real vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    /// Real parts, then imaginary parts, of the upper triangle, then the
    /// normalized environment parameters.
    pub fn encode(rho: &DensityMatrix, normalized_params: [f64; 4]) -> Self {
        let mut v = [0.0; OBS_DIM];
        for (k, &(i, j)) in UPPER_TRIANGLE.iter().enumerate() {
            let z = rho.get(i, j);
            v[k] = z.re;
            v[10 + k] = if i == j { 0.0 } else { z.im };
        }
        v[20..].copy_from_slice(&normalized_params);
        Self(v)
    }

    /// Rebuilds the Hermitian matrix from the 20 state slots.
    pub fn density_matrix(&self) -> DensityMatrix {
        let mut m = Mat4::zeros();
        for (k, &(i, j)) in UPPER_TRIANGLE.iter().enumerate() {
            let z = C64::new(self.0[k], self.0[10 + k]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        DensityMatrix::from_raw(m)
    }

    pub fn env_slots(&self) -> &[f64] {
        &self.0[20..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn encode_observation(
    rho: &DensityMatrix,
    env: &EnvParams,
    ranges: &ParamRanges,
) -> Observation {
    Observation::encode(rho, env.normalized(ranges))
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Physical controls decoded from a raw action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSignal {
    pub eta: f64,
    pub kappa: f64,
    pub gate: f64,
}

impl ControlSignal {
    /// η = η_min + ½(η_max − η_min)(tanh a₁ + 1), κ = κ_max·sig(a₃)·sig(a₂), gate = sig(a₃).
    pub fn decode(a: &[f64; ACT_DIM], config: &EnvConfig) -> Result<Self> {
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("raw action"));
        }
        let eta_val = a[0].tanh();
        let kappa_raw = sigmoid(a[1]);
        let gate = sigmoid(a[2]);
        let kappa_val = gate * kappa_raw;
        let eta = config.eta_min + 0.5 * (config.eta_max - config.eta_min) * (eta_val + 1.0);
        Ok(Self {
            eta: eta.clamp(config.eta_min, config.eta_max),
            kappa: (config.kappa_max * kappa_val).clamp(0.0, config.kappa_max),
            gate,
        })
    }

    /// Fixed controls for static protocols; the gate is reported as fully open.
    pub fn fixed(eta: f64, kappa: f64) -> Self {
        Self {
            eta,
            kappa,
            gate: 1.0,
        }
    }
}

pub fn decode_action(a: &[f64; ACT_DIM], config: &EnvConfig) -> Result<ControlSignal> {
    ControlSignal::decode(a, config)
}

/// Reward components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reward {
    /// W_max, less B·gate² when penalized.
    pub raw: f64,
    /// clamp((raw + 1)/2, 0, 1).
    pub normalized: f64,
    pub penalized: bool,
}

/// Backflow-penalized reward mapped onto [0, 1].
pub fn reward_breakdown(w_max: f64, backflow: f64, gate: f64, sign: f64, penalty_b: f64) -> Reward {
    let penalized = sign * backflow < 0.0;
    let raw = if penalized {
        w_max - penalty_b * gate * gate
    } else {
        w_max
    };
    let normalized = ((raw + 1.0) * 0.5).clamp(0.0, 1.0);
    Reward {
        raw,
        normalized: if normalized.is_nan() { 0.0 } else { normalized },
        penalized,
    }
}

pub fn compute_reward(w_max: f64, backflow: f64, gate: f64, sign: f64) -> f64 {
    reward_breakdown(w_max, backflow, gate, sign, 1.0).normalized
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub t: f64,
    pub w_max: f64,
    pub entropy: f64,
    pub population: f64,
    pub backflow: f64,
    pub power_ab: f64,
    pub eta: f64,
    pub kappa: f64,
    pub gate: f64,
    pub penalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// One charger–battery–bath episode.
#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    params: EnvParams,
    propagator: Propagator,
    rho: DensityMatrix,
    step_index: usize,
    n_steps: usize,
}

impl Environment {
    pub fn new(config: EnvConfig, params: EnvParams) -> Result<Self> {
        config.validate()?;
        params.check_within(&config.param_ranges)?;
        let propagator = Propagator::new(params.bath()?);
        Ok(Self {
            config,
            params,
            propagator,
            rho: DensityMatrix::ground(),
            step_index: 0,
            n_steps: config.n_steps(),
        })
    }

    /// Starts a new episode with `params`; ρ ← |g_A g_B⟩⟨g_A g_B|, t ← 0.
    pub fn reset(&mut self, params: EnvParams) -> Result<Observation> {
        params.check_within(&self.config.param_ranges)?;
        self.propagator =
            Propagator::new(params.bath()?).with_step_bound(self.propagator.step_bound);
        self.params = params;
        self.rho = DensityMatrix::ground();
        self.step_index = 0;
        Ok(self.observation())
    }

    /// Overrides the integrator's step bound (≤ 0.02).
    pub fn set_step_bound(&mut self, bound: f64) {
        self.propagator.step_bound = bound;
    }

    pub fn observation(&self) -> Observation {
        encode_observation(&self.rho, &self.params, &self.config.param_ranges)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.config.dt_ctrl
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn done(&self) -> bool {
        self.step_index >= self.n_steps
    }

    /// Observables of the current state at coupling κ.
    pub fn observables(&self, kappa: f64) -> Result<WorkRecord> {
        thermo::observables(&self.rho, self.params.temperature, kappa)
    }

    /// Decodes a raw action and advances one control interval.
    pub fn step(&mut self, action: &[f64; ACT_DIM]) -> Result<StepResult> {
        if self.done() {
            return Err(Error::EpisodeFinished);
        }
        let control = ControlSignal::decode(action, &self.config)?;
        self.step_control(control)
    }

    /// Advances one control interval with explicit controls.
    pub fn step_control(&mut self, control: ControlSignal) -> Result<StepResult> {
        if self.done() {
            return Err(Error::EpisodeFinished);
        }
        let t0 = self.time();
        self.rho = self.propagator.step(
            &self.rho,
            control.eta,
            control.kappa,
            t0,
            self.config.dt_ctrl,
        )?;
        self.step_index += 1;
        let work = self.observables(control.kappa)?;
        let reward = reward_breakdown(
            work.w_max,
            work.backflow,
            control.gate,
            self.config.backflow_sign,
            self.config.penalty_b,
        );
        Ok(StepResult {
            observation: self.observation(),
            reward: reward.normalized,
            done: self.done(),
            info: StepInfo {
                t: self.time(),
                w_max: work.w_max,
                entropy: work.entropy,
                population: work.population,
                backflow: work.backflow,
                power_ab: work.power_ab,
                eta: control.eta,
                kappa: control.kappa,
                gate: control.gate,
                penalized: reward.penalized,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let a = sample_env_params(&mut ChaCha8Rng::seed_from_u64(7));
        let b = sample_env_params(&mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ranges = ParamRanges::default();
        for _ in 0..1000 {
            sample_env_params(&mut rng).check_within(&ranges).unwrap();
        }
    }

    #[test]
    fn zero_temperature_is_admissible() {
        let cfg = EnvConfig::default();
        let params = EnvParams::new(0.0, 0.1, 0.1, 2.0);
        params.check_within(&cfg.param_ranges).unwrap();
        assert!(Environment::new(cfg, params).is_ok());
    }

    #[test]
    fn ground_state_observation() {
        let obs = encode_observation(
            &DensityMatrix::ground(),
            &EnvParams::new(0.0, 0.1, 0.1, 2.0),
            &ParamRanges::default(),
        );
        let mut expected = [0.0; OBS_DIM];
        expected[9] = 1.0;
        assert_eq!(obs.0, expected);
    }

    #[test]
    fn env_normalization() {
        let r = ParamRanges::default();
        let mid = EnvParams::new(0.5, 0.55, 0.55, 3.0).normalized(&r);
        for v in mid {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);
        }
        assert_eq!(EnvParams::new(1.0, 1.0, 1.0, 4.0).normalized(&r), [1.0; 4]);
    }

    #[test]
    fn decode_reference_actions() {
        let cfg = EnvConfig::default();
        let c = decode_action(&[0.0, 0.0, 0.0], &cfg).unwrap();
        assert_eq!((c.eta, c.kappa, c.gate), (50.0, 25.0, 0.5));
        let c = decode_action(&[-20.0, 0.0, 0.0], &cfg).unwrap();
        assert!(c.eta < 1e-10);
        let c = decode_action(&[0.0, 20.0, 20.0], &cfg).unwrap();
        assert_abs_diff_eq!(c.kappa, 100.0, epsilon = 1e-5);
        assert_abs_diff_eq!(c.gate, 1.0, epsilon = 1e-8);
        assert!(decode_action(&[f64::NAN, 0.0, 0.0], &cfg).is_err());
        assert!(decode_action(&[0.0, f64::INFINITY, 0.0], &cfg).is_err());
    }

    #[test]
    fn reward_reference_values() {
        assert_abs_diff_eq!(compute_reward(0.4, -0.1, 0.5, 1.0), 0.575, epsilon = 1e-15);
        assert_abs_diff_eq!(compute_reward(0.4, 0.1, 0.5, 1.0), 0.7, epsilon = 1e-15);
        for gate in [0.01, 0.5, 0.99] {
            assert_eq!(compute_reward(0.0, 0.0, gate, 1.0), 0.5);
        }
        // Flipped convention penalizes positive backflow instead.
        assert!(reward_breakdown(0.4, 0.1, 0.5, -1.0, 1.0).penalized);
        assert!(!reward_breakdown(0.4, -0.1, 0.5, -1.0, 1.0).penalized);
    }

    #[test]
    fn reset_and_episode_length() {
        let cfg = EnvConfig::default();
        let params = EnvParams::new(0.0, 0.5, 0.5, 3.0);
        let mut env = Environment::new(cfg, params).unwrap();
        let o1 = env.reset(params).unwrap();
        let o2 = env.reset(params).unwrap();
        assert_eq!(o1, o2);
        assert!(!env.done());
        assert_eq!(env.observables(0.0).unwrap().w_max, 0.0);
        let mut dones = 0;
        for k in 0..100 {
            let r = env.step(&[-20.0, -20.0, -20.0]).unwrap();
            if r.done {
                dones += 1;
                assert_eq!(k, 99);
            }
            assert!(r.info.w_max.abs() < 1e-6);
            assert_abs_diff_eq!(r.reward, 0.5, epsilon = 1e-6);
        }
        assert_eq!(dones, 1);
        assert!(matches!(env.step(&[0.0; 3]), Err(Error::EpisodeFinished)));
    }

    #[test]
    fn config_validation() {
        let mut cfg = EnvConfig::default();
        assert_eq!(cfg.n_steps(), 100);
        cfg.backflow_sign = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = EnvConfig::default();
        cfg.dt_ctrl = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = EnvConfig::default();
        assert!(Environment::new(cfg, EnvParams::new(2.0, 0.5, 0.5, 3.0)).is_err());
    }
}
