//! Adaptive-moment (Adam) optimizer.

use serde::{Deserialize, Serialize};

use super::{DenseGrads, DenseParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0 < beta && beta < 1.0) {
                return Err(Error::Config(format!(
                    "{name} must lie in (0,1), got {beta}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments for one flat parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamTensor {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamTensor {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    /// Applies the update for step `t` (1-based) in place.
    pub fn step(&mut self, t: u64, cfg: &AdamConfig, params: &mut [f64], grads: &[f64]) {
        let bias1 = 1.0 - cfg.beta1.powi(t as i32);
        let bias2 = 1.0 - cfg.beta2.powi(t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().chain(&self.v).all(|x| x.is_finite())
    }
}

/// Per-parameter moment state plus the step counter for one [`DenseParams`].
#[derive(Debug, Clone)]
pub struct OptimizerState {
    config: AdamConfig,
    step: u64,
    w1: AdamTensor,
    b1: AdamTensor,
    w2: AdamTensor,
    b2: AdamTensor,
}

impl OptimizerState {
    pub fn new(params: &DenseParams, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            w1: AdamTensor::new(params.w1.len()),
            b1: AdamTensor::new(params.b1.len()),
            w2: AdamTensor::new(params.w2.len()),
            b2: AdamTensor::new(params.b2.len()),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> AdamConfig {
        self.config
    }

    /// One bias-corrected adaptive-moment update. Rejects non-finite
    /// gradients, naming the offending block.
    pub fn step(&mut self, params: &mut DenseParams, grads: &DenseGrads) -> Result<()> {
        for (name, block) in grads.blocks() {
            if block.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient { block: name });
            }
        }
        self.step += 1;
        let t = self.step;
        let cfg = self.config;
        self.w1.step(t, &cfg, &mut params.w1, &grads.w1);
        self.b1.step(t, &cfg, &mut params.b1, &grads.b1);
        self.w2.step(t, &cfg, &mut params.w2, &grads.w2);
        self.b2.step(t, &cfg, &mut params.b2, &grads.b2);

        debug_assert!(params.is_finite());
        Ok(())
    }
}
