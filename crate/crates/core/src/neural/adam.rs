use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::prelude::*;

/// Bias-corrected adaptive-moment optimizer state for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Applied updates.
    pub step: u64,
    /// Updates rejected because a gradient was non-finite.
    pub skipped: u64,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
            skipped: 0,
        }
    }

    /// Applies one update. Returns `false` (and leaves everything untouched)
    /// when any gradient is non-finite.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> bool {
        assert_eq!(params.len(), self.m.len(), "optimizer/parameter length");
        assert_eq!(grads.len(), self.m.len(), "optimizer/gradient length");
        if grads.iter().any(|g| !g.is_finite()) {
            self.skipped += 1;
            return false;
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let step_size = self.lr / bc1;
        let inv_sqrt_bc2 = 1.0 / bc2.sqrt();
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= step_size * *m / ((*v).sqrt() * inv_sqrt_bc2 + self.eps);
        }
        true
    }
}

pub fn adam_step(params: &mut [f64], grads: &[f64], opt: &mut Adam) -> bool {
    opt.update(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_and_decays_moments() {
        let mut opt = Adam::new(2, 1e-3);
        let mut p = [1.0, -2.0];
        opt.update(&mut p, &[0.5, -0.5]);
        let m_before = opt.m.clone();
        let v_before = opt.v.clone();
        let p_before = p;
        // Moments are nonzero, so a zero gradient still moves the parameters
        // through momentum; the moments themselves shrink geometrically.
        opt.update(&mut p, &[0.0, 0.0]);
        for k in 0..2 {
            assert_eq!(opt.m[k], 0.9 * m_before[k]);
            assert_eq!(opt.v[k], 0.999 * v_before[k]);
        }
        let mut fresh = Adam::new(2, 1e-3);
        let mut q = p_before;
        fresh.update(&mut q, &[0.0, 0.0]);
        assert_eq!(q, p_before);
    }

    #[test]
    fn constant_gradient_steps_by_lr() {
        let mut opt = Adam::new(3, 1e-2);
        let mut p = [0.0; 3];
        let g = [2.0, -0.3, 1e-3];
        for _ in 0..200 {
            let before = p;
            opt.update(&mut p, &g);
            for k in 0..3 {
                let step = p[k] - before[k];
                assert!((step.abs() - 1e-2).abs() < 1e-4, "step {step}");
                assert_eq!(step.signum(), -g[k].signum());
            }
        }
    }

    #[test]
    fn non_finite_gradients_are_rejected() {
        let mut opt = Adam::new(2, 1e-3);
        let mut p = [1.0, 1.0];
        assert!(!opt.update(&mut p, &[f64::NAN, 0.0]));
        assert_eq!(p, [1.0, 1.0]);
        assert_eq!((opt.step, opt.skipped), (0, 1));
    }

    #[test]
    fn identical_inputs_identical_trajectories() {
        let run = || {
            let mut opt = Adam::new(4, 1e-3);
            let mut p = [0.1, 0.2, 0.3, 0.4];
            for k in 0..50 {
                let g: Vec<f64> = p.iter().map(|x| x * (k as f64).sin()).collect();
                opt.update(&mut p, &g);
            }
            p
        };
        assert_eq!(run(), run());
    }
}
