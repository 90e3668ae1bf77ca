//! Lorentzian reservoir: spectral density, exact memory kernel and the
//! time-dependent heating/dissipation rates it induces on the battery.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::prelude::*;

/// Below this |d| the kernel is evaluated by its analytic limit.
pub const DEGENERATE_D: f64 = 1e-10;
/// |C(t)| below this is treated as a revival zero.
pub const KERNEL_ZERO: f64 = 1e-12;
/// Magnitude returned for f(t) at a revival zero.
pub const CLAMPED_RATE: f64 = 1e6;

/// Reservoir parameters, all in units of ω₀ (k_B = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BathSpec {
    /// Effective coupling rate γ₀.
    pub gamma0: f64,
    /// Spectral width λ.
    pub lambda: f64,
    /// Detuning Δ = ω₀ − ν_c.
    pub delta: f64,
    /// Temperature T.
    pub temperature: f64,
}

impl BathSpec {
    pub fn new(gamma0: f64, lambda: f64, delta: f64, temperature: f64) -> Result<Self> {
        let bath = Self {
            gamma0,
            lambda,
            delta,
            temperature,
        };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(Error::domain("gamma0", "finite and > 0", self.gamma0));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::domain("lambda", "finite and > 0", self.lambda));
        }
        if !self.delta.is_finite() {
            return Err(Error::domain("delta", "finite", self.delta));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::domain(
                "temperature",
                "finite and >= 0",
                self.temperature,
            ));
        }
        Ok(())
    }

    /// R = γ₀/λ. R ≫ 1 is the strong-coupling regime.
    pub fn coupling_ratio(&self) -> f64 {
        self.gamma0 / self.lambda
    }

    /// Mean thermal photon number at this bath's temperature.
    pub fn occupation(&self) -> f64 {
        thermal_occupation(self.temperature)
    }

    fn z(&self) -> C64 {
        C64::new(self.lambda, -self.delta)
    }

    /// d = sqrt((λ − iΔ)² − 2γ₀λ), principal branch.
    fn d(&self) -> C64 {
        let z = self.z();
        (z * z - C64::new(2.0 * self.gamma0 * self.lambda, 0.0)).sqrt()
    }
}

/// Decay rates at one instant. Negative values are physical (non-Markovian
/// intervals) and are kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub f: f64,
    /// Heating rate γ₁ = 2·N·f.
    pub gamma1: f64,
    /// Dissipation rate γ₂ = 2·(N+1)·f.
    pub gamma2: f64,
    /// Mean thermal occupation N.
    pub occupation: f64,
    /// Set when f was clamped at a revival zero of C(t).
    pub clamped: bool,
}

impl RateSample {
    pub fn zero() -> Self {
        Self {
            f: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            occupation: 0.0,
            clamped: false,
        }
    }

    /// Builds a sample from a given f(t) and occupation N.
    pub fn from_f(f: f64, occupation: f64) -> Self {
        Self {
            f,
            gamma1: 2.0 * occupation * f,
            gamma2: 2.0 * (occupation + 1.0) * f,
            occupation,
            clamped: false,
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("time", "finite and >= 0", t))
    }
}

/// Splits C(t)/C(0) = e^{−zt/2}·bracket and returns (prefactor, bracket, sinh(dt/2)/(dt/2)).
fn kernel_parts(t: f64, bath: &BathSpec) -> (C64, C64, C64) {
    let z = bath.z();
    let d = bath.d();
    let half_t = C64::new(0.5 * t, 0.0);
    let prefactor = (-z * half_t).exp();
    if d.norm() < DEGENERATE_D {
        // cosh → 1, sinh(x)/x → 1
        (
            prefactor,
            C64::new(1.0, 0.0) + z * half_t,
            C64::new(1.0, 0.0),
        )
    } else {
        let x = d * half_t;
        let sinhc = if t == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x.sinh() / x
        };
        (prefactor, x.cosh() + z * half_t * sinhc, sinhc)
    }
}

/// Normalized reservoir correlation amplitude C(t)/C(0).
pub fn memory_kernel(t: f64, bath: &BathSpec) -> Result<C64> {
    check_time(t)?;
    let (prefactor, bracket, _) = kernel_parts(t, bath);
    Ok(prefactor * bracket)
}

/// Closed-form dC/dt (normalized by C(0)).
///
/// Differentiating the kernel gives Ċ = −(γ₀λt/2)·e^{−zt/2}·sinh(dt/2)/(dt/2).
pub fn memory_kernel_derivative(t: f64, bath: &BathSpec) -> Result<C64> {
    check_time(t)?;
    let (prefactor, _, sinhc) = kernel_parts(t, bath);
    Ok(-prefactor * sinhc * (0.5 * bath.gamma0 * bath.lambda * t))
}

/// f(t) = −2·Re(Ċ/C), with a flag set when |C| vanished and the value was clamped.
pub fn decay_f_flagged(t: f64, bath: &BathSpec) -> Result<(f64, bool)> {
    check_time(t)?;
    let (prefactor, bracket, sinhc) = kernel_parts(t, bath);
    // The exponential prefactor cancels in the ratio.
    let numerator = -sinhc * (0.5 * bath.gamma0 * bath.lambda * t);
    if (prefactor * bracket).norm() < KERNEL_ZERO {
        let raw = -2.0 * (numerator / bracket).re;
        let sign = if raw < 0.0 { -1.0 } else { 1.0 };
        return Ok((sign * CLAMPED_RATE, true));
    }
    Ok((-2.0 * (numerator / bracket).re, false))
}

/// Decay function f(t) = −2·Re(Ċ(t)/C(t)); negative in non-Markovian intervals.
pub fn decay_f(t: f64, bath: &BathSpec) -> Result<f64> {
    decay_f_flagged(t, bath).map(|(f, _)| f)
}

/// Bose–Einstein occupation 1/(e^{1/T} − 1); exactly 0 at T = 0.
pub fn thermal_occupation(temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (1.0 / temperature).exp_m1()
}

pub fn decay_rates(t: f64, bath: &BathSpec) -> Result<RateSample> {
    let (f, clamped) = decay_f_flagged(t, bath)?;
    let mut sample = RateSample::from_f(f, bath.occupation());
    sample.clamped = clamped;
    Ok(sample)
}

/// Lorentzian J(ω) = γ₀λ² / (2π[(ω₀ − Δ − ω)² + λ²]).
pub fn spectral_density(omega: f64, bath: &BathSpec) -> f64 {
    let detuned = 1.0 - bath.delta - omega;
    bath.gamma0 * bath.lambda * bath.lambda
        / (2.0 * PI * (detuned * detuned + bath.lambda * bath.lambda))
}

/// Asymptotic decay rate λ − Re(d): the long-time limit of f(t) when the slow
/// exponential dominates.
pub fn markovian_limit(bath: &BathSpec) -> f64 {
    bath.lambda - bath.d().re
}

/// Evaluates rates on a regular time grid; used by the propagator to share the
/// kernel evaluations between consecutive substeps.
pub(crate) struct RateCursor<'a> {
    bath: &'a BathSpec,
    occupation: f64,
}

impl<'a> RateCursor<'a> {
    pub(crate) fn new(bath: &'a BathSpec) -> Self {
        Self {
            bath,
            occupation: bath.occupation(),
        }
    }

    pub(crate) fn at(&self, t: f64) -> Result<RateSample> {
        let (f, clamped) = decay_f_flagged(t, self.bath)?;
        let mut sample = RateSample::from_f(f, self.occupation);
        sample.clamped = clamped;
        Ok(sample)
    }
}
