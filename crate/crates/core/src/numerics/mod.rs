//! Minimal dense-network engine: two-layer perceptrons with GeLU and
//! dropout, binary cross-entropy with optional soft targets, an
//! adaptive-moment optimizer, and finite-difference gradient verification.
//!
//! Everything here is plain `Vec<f64>` arithmetic. Weight matrices are
//! stored row-major with shape `(out_dim, in_dim)`, so `w[o * in_dim + i]`
//! is the weight from input `i` to output `o`. No autodiff, no GPU, no
//! architectures beyond the two-layer shape.

mod gradcheck;
mod optimizer;

pub use gradcheck::{finite_diff_check, BlockCheck, GradCheckReport, FD_STEP};
pub use optimizer::{AdamConfig, AdamTensor, OptimizerState};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Predictions are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before any log.
pub const PROB_CLAMP: f64 = 1e-7;

/// Standard normal CDF via the error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + statrs::function::erf::erf(x / std::f64::consts::SQRT_2))
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Exact GeLU: `x * Phi(x)` with `Phi` the standard normal CDF.
///
/// The exact form (not the tanh approximation) keeps finite-difference
/// gradient checks unambiguous.
pub fn gelu(x: f64) -> f64 {
    x * normal_cdf(x)
}

/// Derivative of [`gelu`]: `Phi(x) + x * phi(x)`.
pub fn gelu_grad(x: f64) -> f64 {
    normal_cdf(x) + x * normal_pdf(x)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Mean binary cross-entropy over components; targets may be soft values
/// in `[0, 1]`.
pub fn bce_loss(pred_prob: &[f64], target: &[f64]) -> Result<f64> {
    if pred_prob.len() != target.len() {
        return Err(Error::Shape(format!(
            "bce_loss: {} predictions vs {} targets",
            pred_prob.len(),
            target.len()
        )));
    }
    if pred_prob.is_empty() {
        return Err(Error::Shape("bce_loss: empty prediction vector".into()));
    }
    let sum: f64 = pred_prob
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let p = clamp_prob(p);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum();
    Ok(sum / pred_prob.len() as f64)
}

/// Parameters of a two-layer dense network `in -> hidden -> out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams {
    in_dim: usize,
    hidden_dim: usize,
    out_dim: usize,
    /// Row-major `(hidden_dim, in_dim)`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Row-major `(out_dim, hidden_dim)`.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Gradients shaped like [`DenseParams`].
#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl DenseGrads {
    pub fn zeros_like(params: &DenseParams) -> Self {
        Self {
            w1: vec![0.0; params.w1.len()],
            b1: vec![0.0; params.b1.len()],
            w2: vec![0.0; params.w2.len()],
            b2: vec![0.0; params.b2.len()],
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for block in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            for g in block.iter_mut() {
                *g *= factor;
            }
        }
    }

    pub fn add(&mut self, other: &DenseGrads) {
        for (dst, src) in [
            (&mut self.w1, &other.w1),
            (&mut self.b1, &other.b1),
            (&mut self.w2, &other.w2),
            (&mut self.b2, &other.b2),
        ] {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn blocks(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("w1", &self.w1),
            ("b1", &self.b1),
            ("w2", &self.w2),
            ("b2", &self.b2),
        ]
    }
}

impl DenseParams {
    pub fn zeros(in_dim: usize, hidden_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            hidden_dim,
            out_dim,
            w1: vec![0.0; hidden_dim * in_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; out_dim * hidden_dim],
            b2: vec![0.0; out_dim],
        }
    }

    /// Trainable head initialization: hidden weights Glorot-uniform
    /// (`±sqrt(6/(fan_in+fan_out))`), output layer all zeros, biases zero.
    ///
    /// Zeroing the output layer makes an untrained head predict exactly
    /// `sigmoid(0) = 0.5` everywhere.
    pub fn head_init<R: Rng + ?Sized>(
        in_dim: usize,
        hidden_dim: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Self {
        let mut params = Self::zeros(in_dim, hidden_dim, out_dim);
        let limit = (6.0 / (in_dim + hidden_dim) as f64).sqrt();
        for w in params.w1.iter_mut() {
            *w = rng.random_range(-limit..limit);
        }
        params
    }

    /// Fully random Glorot-uniform initialization of both layers.
    /// Used by gradient checks and tests that need nonzero weights everywhere.
    pub fn random<R: Rng + ?Sized>(
        in_dim: usize,
        hidden_dim: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Self {
        let mut params = Self::head_init(in_dim, hidden_dim, out_dim, rng);
        let limit = (6.0 / (hidden_dim + out_dim) as f64).sqrt();
        for w in params.w2.iter_mut() {
            *w = rng.random_range(-limit..limit);
        }
        params
    }

    /// Rebuilds parameters from raw blocks, validating lengths.
    pub fn from_parts(
        in_dim: usize,
        hidden_dim: usize,
        out_dim: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self> {
        if w1.len() != hidden_dim * in_dim
            || b1.len() != hidden_dim
            || w2.len() != out_dim * hidden_dim
            || b2.len() != out_dim
        {
            return Err(Error::Shape(format!(
                "parameter blocks do not match dims {in_dim}x{hidden_dim}x{out_dim}"
            )));
        }
        Ok(Self {
            in_dim,
            hidden_dim,
            out_dim,
            w1,
            b1,
            w2,
            b2,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// Exact number of scalar parameters, biases included.
    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks()
            .iter()
            .all(|(_, block)| block.iter().all(|v| v.is_finite()))
    }

    pub fn blocks(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("w1", &self.w1),
            ("b1", &self.b1),
            ("w2", &self.w2),
            ("b2", &self.b2),
        ]
    }

    pub fn blocks_mut(&mut self) -> [(&'static str, &mut Vec<f64>); 4] {
        [
            ("w1", &mut self.w1),
            ("b1", &mut self.b1),
            ("w2", &mut self.w2),
            ("b2", &mut self.b2),
        ]
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.in_dim {
            return Err(Error::Shape(format!(
                "input length {} does not match in_dim {}",
                input.len(),
                self.in_dim
            )));
        }
        Ok(())
    }

    /// Inference forward pass: no dropout, no trace allocation.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut hidden = vec![0.0; self.hidden_dim];
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = j * self.in_dim;
            let mut z = self.b1[j];
            for (i, &x) in input.iter().enumerate() {
                z += self.w1[row + i] * x;
            }
            *h = gelu(z);
        }
        let mut output = vec![0.0; self.out_dim];
        for (o, out) in output.iter_mut().enumerate() {
            let row = o * self.hidden_dim;
            let mut z = self.b2[o];
            for (j, &h) in hidden.iter().enumerate() {
                z += self.w2[row + j] * h;
            }
            *out = z;
        }
        Ok(output)
    }

    /// Training forward pass recording everything backprop needs.
    ///
    /// `output = W2 * dropout(gelu(W1 * input + b1)) + b2`. Dropout uses
    /// inverted scaling (kept units multiplied by `1/(1-p)`), so inference
    /// needs no rescaling. With `training` off the pass is deterministic and
    /// the mask is all-keep.
    pub fn forward_traced<R: Rng + ?Sized>(
        &self,
        input: &[f64],
        dropout_p: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<ForwardTrace> {
        self.check_input(input)?;
        if !(0.0..1.0).contains(&dropout_p) {
            return Err(Error::Value(format!(
                "dropout probability {dropout_p} outside [0, 1)"
            )));
        }
        let apply_dropout = training && dropout_p > 0.0;
        let keep_scale = if apply_dropout {
            1.0 / (1.0 - dropout_p)
        } else {
            1.0
        };

        let mut pre_hidden = vec![0.0; self.hidden_dim];
        for (j, z) in pre_hidden.iter_mut().enumerate() {
            let row = j * self.in_dim;
            let mut acc = self.b1[j];
            for (i, &x) in input.iter().enumerate() {
                acc += self.w1[row + i] * x;
            }
            *z = acc;
        }

        let mut mask = vec![true; self.hidden_dim];
        if apply_dropout {
            for kept in mask.iter_mut() {
                *kept = rng.random::<f64>() >= dropout_p;
            }
        }

        let hidden: Vec<f64> = pre_hidden
            .iter()
            .zip(&mask)
            .map(|(&z, &kept)| if kept { gelu(z) * keep_scale } else { 0.0 })
            .collect();

        let mut output = vec![0.0; self.out_dim];
        for (o, out) in output.iter_mut().enumerate() {
            let row = o * self.hidden_dim;
            let mut z = self.b2[o];
            for (j, &h) in hidden.iter().enumerate() {
                z += self.w2[row + j] * h;
            }
            *out = z;
        }

        Ok(ForwardTrace {
            input: input.to_vec(),
            pre_hidden,
            hidden,
            mask,
            keep_scale,
            output,
        })
    }

    /// Backward pass. `trace` must come from [`Self::forward_traced`] with
    /// these same parameters; `output_grad` is the loss gradient at the
    /// output. Honors the stored dropout mask.
    pub fn backward(&self, trace: &ForwardTrace, output_grad: &[f64]) -> Result<DenseGrads> {
        if output_grad.len() != self.out_dim {
            return Err(Error::Shape(format!(
                "output_grad length {} does not match out_dim {}",
                output_grad.len(),
                self.out_dim
            )));
        }
        if trace.input.len() != self.in_dim || trace.hidden.len() != self.hidden_dim {
            return Err(Error::Shape(
                "trace shapes do not match these parameters".into(),
            ));
        }

        let mut grads = DenseGrads::zeros_like(self);

        // Output layer.
        for (o, &d_out) in output_grad.iter().enumerate() {
            grads.b2[o] = d_out;
            let row = o * self.hidden_dim;
            for (j, &h) in trace.hidden.iter().enumerate() {
                grads.w2[row + j] = d_out * h;
            }
        }

        // Backprop into the hidden activations, then through dropout + GeLU.
        for j in 0..self.hidden_dim {
            let mut d_hidden = 0.0;
            for (o, &d_out) in output_grad.iter().enumerate() {
                d_hidden += d_out * self.w2[o * self.hidden_dim + j];
            }
            let d_pre = if trace.mask[j] {
                d_hidden * trace.keep_scale * gelu_grad(trace.pre_hidden[j])
            } else {
                0.0
            };
            grads.b1[j] = d_pre;
            let row = j * self.in_dim;
            for (i, &x) in trace.input.iter().enumerate() {
                grads.w1[row + i] = d_pre * x;
            }
        }

        Ok(grads)
    }
}

/// Everything recorded during one training forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    /// Pre-activation of the hidden layer (`W1 x + b1`).
    pub pre_hidden: Vec<f64>,
    /// Post-GeLU, post-dropout hidden activations as fed to layer two.
    pub hidden: Vec<f64>,
    /// Dropout keep mask (all `true` when dropout was off).
    pub mask: Vec<bool>,
    /// Inverted-dropout scale applied to kept units.
    pub keep_scale: f64,
    pub output: Vec<f64>,
}

impl ForwardTrace {
    /// Recomputes the forward pass from the stored input and mask. Must
    /// reproduce the stored output exactly.
    pub fn replay(&self, params: &DenseParams) -> Result<Vec<f64>> {
        params.check_input(&self.input)?;
        let hidden: Vec<f64> = (0..params.hidden_dim)
            .map(|j| {
                if !self.mask[j] {
                    return 0.0;
                }
                let row = j * params.in_dim;
                let mut z = params.b1[j];
                for (i, &x) in self.input.iter().enumerate() {
                    z += params.w1[row + i] * x;
                }
                gelu(z) * self.keep_scale
            })
            .collect();
        let mut output = vec![0.0; params.out_dim];
        for (o, out) in output.iter_mut().enumerate() {
            let row = o * params.hidden_dim;
            let mut z = params.b2[o];
            for (j, &h) in hidden.iter().enumerate() {
                z += params.w2[row + j] * h;
            }
            *out = z;
        }
        Ok(output)
    }
}
