use serde::{Deserialize, Serialize};

use super::gradients::SurrogateGrads;
use crate::error::{Error, Result};
use crate::surrogate::SurrogateParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, one entry per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(parameter_count: usize) -> Self {
        Self {
            m: vec![0.0; parameter_count],
            v: vec![0.0; parameter_count],
            step: 0,
        }
    }

    /// One bias-corrected update of `params` in place.
    ///
    /// Returns the index of the first non-finite gradient without touching any
    /// parameter or moment if one is found.
    pub fn update<'a>(
        &mut self,
        params: impl Iterator<Item = &'a mut f64>,
        grads: &[f64],
        lr: f64,
        cfg: &AdamConfig,
    ) -> std::result::Result<(), usize> {
        assert_eq!(grads.len(), self.m.len(), "gradient length does not match optimizer state");
        if let Some(bad) = grads.iter().position(|g| !g.is_finite()) {
            return Err(bad);
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        let mut n = 0;
        for (k, p) in params.enumerate() {
            let g = grads[k];
            let m = cfg.beta1 * self.m[k] + (1.0 - cfg.beta1) * g;
            let v = cfg.beta2 * self.v[k] + (1.0 - cfg.beta2) * g * g;
            self.m[k] = m;
            self.v[k] = v;
            *p -= lr * (m / c1) / ((v / c2).sqrt() + cfg.epsilon);
            n += 1;
        }
        assert_eq!(n, grads.len(), "parameter count does not match optimizer state");
        Ok(())
    }
}

/// Applies one Adam step to every weight and bias of both kernels.
pub fn adam_step(
    params: &mut SurrogateParams,
    grads: &SurrogateGrads,
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<()> {
    let flat = grads.flatten();
    let SurrogateParams { h_theta2, g_theta3, .. } = params;
    let iter = h_theta2.parameters_mut().chain(g_theta3.parameters_mut());
    state.update(iter, &flat, lr, cfg).map_err(|k| Error::NonFinite(format!("gradient of {}", grads.parameter_path(k))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_from_fresh_state_is_a_no_op() {
        let mut p = SurrogateParams::initialize([0.05; 3], 5.0, 1).unwrap();
        let before = p.clone();
        let g = SurrogateGrads::zeros_like(&p);
        let mut s = AdamState::new(p.parameter_count());
        adam_step(&mut p, &g, &mut s, 1e-3, &AdamConfig::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig::default();
        for g in [3.7, -0.02, 1e4] {
            let mut w = 1.0;
            let mut s = AdamState::new(1);
            s.update(std::iter::once(&mut w), &[g], 0.01, &cfg).unwrap();
            // closed form: lr * g / (|g| + eps)
            let expect = 1.0 - 0.01 * g / (g.abs() + cfg.epsilon);
            assert!((w - expect).abs() < 1e-15, "{w} vs {expect}");
            assert!(((1.0 - w).abs() - 0.01).abs() < 1e-8);
        }
    }

    #[test]
    fn quadratic_bowl_converges() {
        let cfg = AdamConfig::default();
        let mut w = 1.0;
        let mut s = AdamState::new(1);
        for _ in 0..500 {
            let g = 2.0 * w;
            s.update(std::iter::once(&mut w), &[g], 0.01, &cfg).unwrap();
        }
        assert!(w.abs() < 0.1, "w = {w}");
    }

    #[test]
    fn non_finite_gradient_names_the_parameter() {
        let mut p = SurrogateParams::initialize([0.05; 3], 5.0, 1).unwrap();
        let before = p.clone();
        let mut g = SurrogateGrads::zeros_like(&p);
        g.g_theta3.layers_mut()[1].bias[4] = f64::NAN;
        let mut s = AdamState::new(p.parameter_count());
        match adam_step(&mut p, &g, &mut s, 1e-3, &AdamConfig::default()) {
            Err(Error::NonFinite(msg)) => assert!(msg.contains("g_theta3.layer1.bias[4]"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(p, before);
        assert_eq!(s.step, 0);
    }
}
