//! Interaction-picture master equation for the driven charger–battery pair and
//! its fixed-substep Runge–Kutta propagator.

use crate::bath::{BathSpec, RateCursor, RateSample};
use crate::error::{Error, Result};
use crate::prelude::*;
use crate::state::{DensityMatrix, Mat4, EE, EG, GE, GG};

/// Largest admissible h·max(1, κ+η, |γ₁|+|γ₂|).
pub const MAX_STEP_BOUND: f64 = 0.02;
/// Bound used by default. Tighter than [`MAX_STEP_BOUND`] so that halving the
/// substep moves a κ=10, η=100 trajectory by well under 1e-6.
pub const DEFAULT_STEP_BOUND: f64 = 0.005;
/// Upper limit on substeps per control interval.
pub const MAX_SUBSTEPS: f64 = 1e7;
/// Trace drift above which the state is renormalized after a step.
pub const TRACE_TOLERANCE: f64 = 1e-12;

const I: C64 = C64::new(0.0, 1.0);

/// dρ/dt for the master equation
///
/// ```text
/// −i[κ(σ₊ᴬσ₋ᴮ + σ₋ᴬσ₊ᴮ) + η(σ₊ᴬ + σ₋ᴬ), ρ]
///   + (γ₁/2)(σ₊ᴮρσ₋ᴮ − ½{σ₋ᴮσ₊ᴮ, ρ})
///   + (γ₂/2)(σ₋ᴮρσ₊ᴮ − ½{σ₊ᴮσ₋ᴮ, ρ})
/// ```
///
/// expanded on the sparse structure of the fixed basis.
pub fn lindblad_rhs(rho: &Mat4, eta: f64, kappa: f64, rates: &RateSample) -> Mat4 {
    let mut out = Mat4::zeros();
    lindblad_rhs_into(rho, eta, kappa, rates.gamma1, rates.gamma2, &mut out);
    out
}

/// Same as [`lindblad_rhs`] on a [`DensityMatrix`].
pub fn lindblad_rhs_state(rho: &DensityMatrix, eta: f64, kappa: f64, rates: &RateSample) -> Mat4 {
    lindblad_rhs(rho.entries(), eta, kappa, rates)
}

#[inline]
fn lindblad_rhs_into(rho: &Mat4, eta: f64, kappa: f64, gamma1: f64, gamma2: f64, out: &mut Mat4) {
    // H has η on (EE,GE), (EG,GG) and κ on (EG,GE), plus transposes.
    // Row i of H: list of (column, value).
    let h_row = |i: usize| -> [(usize, f64); 2] {
        match i {
            EE => [(GE, eta), (GE, 0.0)],
            EG => [(GG, eta), (GE, kappa)],
            GE => [(EE, eta), (EG, kappa)],
            _ => [(EG, eta), (EG, 0.0)],
        }
    };
    // ½ (occupation of B-excited) weights for the anticommutators.
    let excited_b = [1.0, 0.0, 1.0, 0.0];
    let ground_b = [0.0, 1.0, 0.0, 1.0];
    let half_g1 = 0.5 * gamma1;
    let half_g2 = 0.5 * gamma2;

    for i in 0..4 {
        let hi = h_row(i);
        for j in 0..4 {
            let hj = h_row(j);
            // (Hρ)_ij − (ρH)_ij, H real symmetric.
            let h_rho = rho[(hi[0].0, j)] * hi[0].1 + rho[(hi[1].0, j)] * hi[1].1;
            let rho_h = rho[(i, hj[0].0)] * hj[0].1 + rho[(i, hj[1].0)] * hj[1].1;
            let mut v = -I * (h_rho - rho_h);
            // Anticommutator parts: {P, ρ}_ij = (p_i + p_j) ρ_ij.
            v -= rho[(i, j)]
                * (0.5
                    * (half_g1 * (ground_b[i] + ground_b[j])
                        + half_g2 * (excited_b[i] + excited_b[j])));
            out[(i, j)] = v;
        }
    }
    // Jump terms. σ₊ᴮρσ₋ᴮ maps the g_B block {EG, GG} onto {EE, GE};
    // σ₋ᴮρσ₊ᴮ maps the e_B block {EE, GE} onto {EG, GG}.
    const RAISE: [(usize, usize); 2] = [(EG, EE), (GG, GE)];
    const LOWER: [(usize, usize); 2] = [(EE, EG), (GE, GG)];
    for &(si, ti) in &RAISE {
        for &(sj, tj) in &RAISE {
            out[(ti, tj)] += rho[(si, sj)] * half_g1;
        }
    }
    for &(si, ti) in &LOWER {
        for &(sj, tj) in &LOWER {
            out[(ti, tj)] += rho[(si, sj)] * half_g2;
        }
    }
}

/// Fixed-substep classic RK4 propagator for one bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub bath: BathSpec,
    /// Target value of h·max(1, κ+η, |γ₁|+|γ₂|); must not exceed [`MAX_STEP_BOUND`].
    pub step_bound: f64,
    /// Forces γ₁ = γ₂ = 0 (closed, unitary evolution).
    pub closed: bool,
}

/// Diagnostics from one control interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub substeps: usize,
    /// max |ρ − ρ†| before re-Hermitization.
    pub hermitian_drift: f64,
    /// |tr ρ − 1| before renormalization.
    pub trace_drift: f64,
    /// A revival zero of C(t) was hit and a rate was clamped.
    pub clamped_rate: bool,
}

impl Propagator {
    pub fn new(bath: BathSpec) -> Self {
        Self {
            bath,
            step_bound: DEFAULT_STEP_BOUND,
            closed: false,
        }
    }

    pub fn with_step_bound(mut self, bound: f64) -> Self {
        self.step_bound = bound;
        self
    }

    pub fn closed_system(mut self) -> Self {
        self.closed = true;
        self
    }

    /// Number of equal substeps used for an interval of length `dt` starting at `t`.
    pub fn substeps(&self, eta: f64, kappa: f64, t: f64, dt: f64) -> Result<usize> {
        let rate_scale = if self.closed {
            0.0
        } else {
            let cursor = RateCursor::new(&self.bath);
            let a = cursor.at(t)?;
            let b = cursor.at(t + dt)?;
            (a.gamma1.abs() + a.gamma2.abs()).max(b.gamma1.abs() + b.gamma2.abs())
        };
        let scale = 1.0f64.max(kappa + eta).max(rate_scale);
        let n = (dt * scale / self.step_bound).ceil().max(1.0);
        if !(n <= MAX_SUBSTEPS) {
            return Err(Error::StepUnderflow { substeps: n });
        }
        Ok(n as usize)
    }

    /// Advances ρ from `t` to `t + dt` with (η, κ) frozen.
    pub fn step(
        &self,
        rho: &DensityMatrix,
        eta: f64,
        kappa: f64,
        t: f64,
        dt: f64,
    ) -> Result<DensityMatrix> {
        self.step_with_report(rho, eta, kappa, t, dt)
            .map(|(r, _)| r)
    }

    pub fn step_with_report(
        &self,
        rho: &DensityMatrix,
        eta: f64,
        kappa: f64,
        t: f64,
        dt: f64,
    ) -> Result<(DensityMatrix, StepReport)> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain("dt_ctrl", "finite and > 0", dt));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::domain("eta", "finite and >= 0", eta));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::domain("kappa", "finite and >= 0", kappa));
        }
        if !(self.step_bound > 0.0 && self.step_bound <= MAX_STEP_BOUND) {
            return Err(Error::domain("step bound", "in (0, 0.02]", self.step_bound));
        }
        let n = self.substeps(eta, kappa, t, dt)?;
        self.integrate(rho, eta, kappa, t, dt, n)
    }

    /// RK4 with exactly `n` substeps; the bound is not enforced. Exposed for
    /// self-convergence studies.
    pub fn integrate(
        &self,
        rho: &DensityMatrix,
        eta: f64,
        kappa: f64,
        t: f64,
        dt: f64,
        n: usize,
    ) -> Result<(DensityMatrix, StepReport)> {
        let h = dt / n as f64;
        let cursor = RateCursor::new(&self.bath);
        let rates_at = |time: f64| -> Result<RateSample> {
            if self.closed {
                Ok(RateSample::zero())
            } else {
                cursor.at(time)
            }
        };
        let mut clamped = false;
        let mut y = *rho.entries();
        let mut k1 = Mat4::zeros();
        let mut k2 = Mat4::zeros();
        let mut k3 = Mat4::zeros();
        let mut k4 = Mat4::zeros();
        let mut r_start = rates_at(t)?;
        for s in 0..n {
            let ts = t + s as f64 * h;
            let r_mid = rates_at(ts + 0.5 * h)?;
            let r_end = rates_at(if s + 1 == n { t + dt } else { ts + h })?;
            clamped |= r_start.clamped | r_mid.clamped | r_end.clamped;

            lindblad_rhs_into(&y, eta, kappa, r_start.gamma1, r_start.gamma2, &mut k1);
            let y2 = y + k1 * C64::new(0.5 * h, 0.0);
            lindblad_rhs_into(&y2, eta, kappa, r_mid.gamma1, r_mid.gamma2, &mut k2);
            let y3 = y + k2 * C64::new(0.5 * h, 0.0);
            lindblad_rhs_into(&y3, eta, kappa, r_mid.gamma1, r_mid.gamma2, &mut k3);
            let y4 = y + k3 * C64::new(h, 0.0);
            lindblad_rhs_into(&y4, eta, kappa, r_end.gamma1, r_end.gamma2, &mut k4);
            y += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
            r_start = r_end;
        }
        let mut out = DensityMatrix::from_raw(y);
        let hermitian_drift = out.hermitian_defect();
        let trace_drift = (out.trace() - C64::new(1.0, 0.0)).norm();
        out.hermitize();
        if (out.trace().re - 1.0).abs() > TRACE_TOLERANCE {
            out.normalize_trace();
        }
        Ok((
            out,
            StepReport {
                substeps: n,
                hermitian_drift,
                trace_drift,
                clamped_rate: clamped,
            },
        ))
    }
}
