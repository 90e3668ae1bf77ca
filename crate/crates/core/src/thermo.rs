//! Thermodynamic observables: entropy, extractable work, free energy,
//! activity-operator work, backflow and charging power.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::prelude::*;
use crate::state::{DensityMatrix, Mat2, EG, GE};

/// Eigenvalues in [−NEGATIVITY_TOLERANCE, 0) are clamped to zero before the log.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-6;
const TRACE_TOLERANCE: f64 = 1e-6;

/// All scalar observables of one joint state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkRecord {
    /// Extractable work (ρ₁₁ + ρ₃₃) − T·S.
    pub w_max: f64,
    /// Von Neumann entropy of the reduced battery state, in nats.
    pub entropy: f64,
    /// Battery excited population ρ₁₁ + ρ₃₃.
    pub population: f64,
    /// Im tr(ρ σ₊ᴬσ₋ᴮ).
    pub backflow: f64,
    /// Charging power 2κ·Im(ρ₂₃).
    pub power_ab: f64,
}

fn entropy_from_eigenvalues(eigenvalues: impl IntoIterator<Item = f64>) -> Result<f64> {
    let mut s = 0.0;
    for p in eigenvalues {
        if p < -NEGATIVITY_TOLERANCE {
            return Err(Error::domain("eigenvalue", ">= -1e-6", p));
        }
        if p > 0.0 {
            s -= p * p.ln();
        }
    }
    Ok(s)
}

/// S(ρ) = −Σ pᵢ ln pᵢ for a density matrix of any dimension.
pub fn von_neumann_entropy(rho: &DMatrix<C64>) -> Result<f64> {
    let tr = rho.trace();
    if !((tr.re - 1.0).abs() <= TRACE_TOLERANCE) {
        return Err(Error::domain("trace", "1 within 1e-6", tr.re));
    }
    entropy_from_eigenvalues(rho.symmetric_eigenvalues().iter().copied())
}

/// Eigenvalues of a 2×2 Hermitian matrix, closed form.
pub fn qubit_eigenvalues(rho: &Mat2) -> [f64; 2] {
    let a = rho[(0, 0)].re;
    let d = rho[(1, 1)].re;
    let b = rho[(0, 1)];
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - half_gap, mean + half_gap]
}

/// Entropy of a single-qubit state.
pub fn qubit_entropy(rho: &Mat2) -> Result<f64> {
    let tr = rho.trace().re;
    if !((tr - 1.0).abs() <= TRACE_TOLERANCE) {
        return Err(Error::domain("trace", "1 within 1e-6", tr));
    }
    entropy_from_eigenvalues(qubit_eigenvalues(rho))
}

/// Im tr(ρ σ₊ᴬσ₋ᴮ) = Im ρ₃₂ (1-based labels), since σ₊ᴬσ₋ᴮ = |2⟩⟨3|.
pub fn backflow(rho: &DensityMatrix) -> f64 {
    rho.get(GE, EG).im
}

/// P_AB = 2κ·Im⟨σ₋ᴬσ₊ᴮ⟩ = 2κ·Im ρ₂₃ (ω₀ = 1).
pub fn charging_power(rho: &DensityMatrix, kappa: f64) -> f64 {
    2.0 * kappa * rho.get(EG, GE).im
}

/// Extractable work with the entropy of the reduced battery state.
pub fn extractable_work(rho: &DensityMatrix, temperature: f64) -> Result<WorkRecord> {
    observables(rho, temperature, 0.0)
}

/// [`extractable_work`] plus the charging power at coupling κ.
pub fn observables(rho: &DensityMatrix, temperature: f64, kappa: f64) -> Result<WorkRecord> {
    let population = rho.battery_population();
    let entropy = qubit_entropy(&rho.battery_state())?;
    Ok(WorkRecord {
        w_max: population - temperature * entropy,
        entropy,
        population,
        backflow: backflow(rho),
        power_ab: charging_power(rho, kappa),
    })
}

/// Gibbs state of the battery Hamiltonian H_B = (σ_z + 1)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalState {
    /// Diagonal in (excited, ground) order.
    pub tau_beta: Mat2,
    pub partition_z: f64,
}

/// τ_β = e^{−βH_B}/Z with Z = 1 + e^{−β}. `beta = f64::INFINITY` gives |g⟩⟨g|.
pub fn thermal_state(beta: f64) -> Result<ThermalState> {
    if !(beta >= 0.0) {
        return Err(Error::domain("beta", ">= 0", beta));
    }
    let boltzmann = (-beta).exp();
    let z = 1.0 + boltzmann;
    let mut tau = Mat2::zeros();
    tau[(0, 0)] = C64::new(boltzmann / z, 0.0);
    tau[(1, 1)] = C64::new(1.0 / z, 0.0);
    Ok(ThermalState {
        tau_beta: tau,
        partition_z: z,
    })
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("beta", "finite and > 0", beta))
    }
}

/// F(ρ) = tr(ρH_B) − S(ρ)/β for a battery state.
pub fn free_energy(rho: &Mat2, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let energy = rho[(0, 0)].re;
    Ok(energy - qubit_entropy(rho)? / beta)
}

/// β⁻¹·tr(ρ(ln ρ − ln τ_β)), the expectation of the activity operator.
pub fn activity_work(rho: &Mat2, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let tr = rho.trace().re;
    if !((tr - 1.0).abs() <= TRACE_TOLERANCE) {
        return Err(Error::domain("trace", "1 within 1e-6", tr));
    }
    let thermal = thermal_state(beta)?;
    // tr(ρ ln ρ) from the spectrum; ln τ_β is diagonal.
    let mut rho_log_rho = 0.0;
    for p in qubit_eigenvalues(rho) {
        if p < -NEGATIVITY_TOLERANCE {
            return Err(Error::domain("eigenvalue", ">= -1e-6", p));
        }
        if p > 0.0 {
            rho_log_rho += p * p.ln();
        }
    }
    let rho_log_tau = rho[(0, 0)].re * thermal.tau_beta[(0, 0)].re.ln()
        + rho[(1, 1)].re * thermal.tau_beta[(1, 1)].re.ln();
    Ok((rho_log_rho - rho_log_tau) / beta)
}
