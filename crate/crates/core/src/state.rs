//! Charger ⊗ battery density matrices and the fixed two-qubit operator basis.
//!
//! Basis ordering (0-based indices):
//!
//! | index | state          |
//! |-------|----------------|
//! | 0     | `|e_A e_B⟩`    |
//! | 1     | `|e_A g_B⟩`    |
//! | 2     | `|g_A e_B⟩`    |
//! | 3     | `|g_A g_B⟩`    |
//!
//! With this ordering the battery excited population is `ρ[0][0] + ρ[2][2]`.

use nalgebra::{DMatrix, Matrix2, Matrix4};

use crate::error::{Error, Result};
use crate::prelude::*;

/// Index of `|e_A e_B⟩`.
pub const EE: usize = 0;
/// Index of `|e_A g_B⟩`.
pub const EG: usize = 1;
/// Index of `|g_A e_B⟩`.
pub const GE: usize = 2;
/// Index of `|g_A g_B⟩`.
pub const GG: usize = 3;

pub type Mat4 = Matrix4<C64>;
pub type Mat2 = Matrix2<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// 4×4 Hermitian, unit-trace state of the charger (A) and battery (B).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    entries: Mat4,
}

impl DensityMatrix {
    /// Wraps a matrix after checking Hermiticity (1e-10) and unit trace (1e-8).
    pub fn new(entries: Mat4) -> Result<Self> {
        let herm = hermitian_defect(&entries);
        if !(herm <= 1e-10) {
            return Err(Error::domain("density matrix", "Hermitian", herm));
        }
        let tr = entries.trace();
        if !((tr.re - 1.0).abs() <= 1e-8 && tr.im.abs() <= 1e-8) {
            return Err(Error::domain("density matrix trace", "1", tr.re));
        }
        Ok(Self { entries })
    }

    /// Wraps a matrix without any check. Callers are responsible for the invariants.
    pub fn from_raw(entries: Mat4) -> Self {
        Self { entries }
    }

    /// Projector onto a basis state.
    pub fn basis_state(index: usize) -> Self {
        let mut entries = Mat4::zeros();
        entries[(index, index)] = ONE;
        Self { entries }
    }

    /// Both qubits in their ground state; the charging start.
    pub fn ground() -> Self {
        Self::basis_state(GG)
    }

    pub fn maximally_mixed() -> Self {
        Self {
            entries: Mat4::identity() * C64::new(0.25, 0.0),
        }
    }

    pub fn entries(&self) -> &Mat4 {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// `trace(ρ²)`.
    pub fn purity(&self) -> f64 {
        (self.entries * self.entries).trace().re
    }

    /// Battery excited-state population `ρ₁₁ + ρ₃₃` (1-based labels).
    pub fn battery_population(&self) -> f64 {
        self.entries[(EE, EE)].re + self.entries[(GE, GE)].re
    }

    /// Reduced battery state `tr_A ρ`, in (excited, ground) order.
    pub fn battery_state(&self) -> Mat2 {
        let r = &self.entries;
        Mat2::new(
            r[(EE, EE)] + r[(GE, GE)],
            r[(EE, EG)] + r[(GE, GG)],
            r[(EG, EE)] + r[(GG, GE)],
            r[(EG, EG)] + r[(GG, GG)],
        )
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let ev = self.entries.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `max |ρ - ρ†|` elementwise.
    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.entries)
    }

    /// Replaces ρ by (ρ + ρ†)/2 so that Hermiticity holds exactly.
    pub fn hermitize(&mut self) {
        for i in 0..4 {
            self.entries[(i, i)].im = 0.0;
            for j in (i + 1)..4 {
                let avg = (self.entries[(i, j)] + self.entries[(j, i)].conj()) * 0.5;
                self.entries[(i, j)] = avg;
                self.entries[(j, i)] = avg.conj();
            }
        }
    }

    /// Rescales to unit trace. Only the real part of the trace is used; the
    /// diagonal is real after [`hermitize`](Self::hermitize).
    pub fn normalize_trace(&mut self) {
        let tr = self.entries.trace().re;
        if tr != 0.0 {
            self.entries /= C64::new(tr, 0.0);
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(4, 4, |i, j| self.entries[(i, j)])
    }
}

impl Default for DensityMatrix {
    fn default() -> Self {
        Self::ground()
    }
}

fn hermitian_defect(m: &Mat4) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Dense single- and two-qubit operators in the fixed basis.
///
/// The propagator uses a sparse hand-expanded right-hand side; these dense
/// forms exist for cross-checking and for observables.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub sigma_plus_a: Mat4,
    pub sigma_minus_a: Mat4,
    pub sigma_plus_b: Mat4,
    pub sigma_minus_b: Mat4,
    pub sigma_z_a: Mat4,
    pub sigma_z_b: Mat4,
}

impl OperatorSet {
    pub fn new() -> Self {
        // σ₊ = |e⟩⟨g|, σ_z = |e⟩⟨e| - |g⟩⟨g| on a single qubit, (e, g) order.
        let sp = Mat2::new(ZERO, ONE, ZERO, ZERO);
        let sz = Mat2::new(ONE, ZERO, ZERO, -ONE);
        let id = Mat2::identity();
        let sigma_plus_a = sp.kronecker(&id);
        let sigma_plus_b = id.kronecker(&sp);
        Self {
            sigma_minus_a: sigma_plus_a.adjoint(),
            sigma_minus_b: sigma_plus_b.adjoint(),
            sigma_plus_a,
            sigma_plus_b,
            sigma_z_a: sz.kronecker(&id),
            sigma_z_b: id.kronecker(&sz),
        }
    }

    /// Charger drive `η(σ₊ᴬ + σ₋ᴬ)`.
    pub fn h_drive(&self, eta: f64) -> Mat4 {
        (self.sigma_plus_a + self.sigma_minus_a) * C64::new(eta, 0.0)
    }

    /// Exchange coupling `κ(σ₊ᴬσ₋ᴮ + σ₋ᴬσ₊ᴮ)`.
    pub fn h_coupling(&self, kappa: f64) -> Mat4 {
        (self.sigma_plus_a * self.sigma_minus_b + self.sigma_minus_a * self.sigma_plus_b)
            * C64::new(kappa, 0.0)
    }

    /// Battery Hamiltonian `(σ_zᴮ + 1)/2` (ω₀ = 1) on the joint space.
    pub fn h_battery(&self) -> Mat4 {
        (self.sigma_z_b + Mat4::identity()) * C64::new(0.5, 0.0)
    }
}

impl Default for OperatorSet {
    fn default() -> Self {
        Self::new()
    }
}
