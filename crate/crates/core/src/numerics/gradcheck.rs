//! Central finite-difference verification of analytic gradients.

use super::{DenseGrads, DenseParams};

/// Central-difference step size used by [`finite_diff_check`].
pub const FD_STEP: f64 = 1e-4;

/// Result for one parameter block.
#[derive(Debug, Clone)]
pub struct BlockCheck {
    pub block: &'static str,
    pub max_rel_error: f64,
    /// Flat index of the worst parameter within the block.
    pub worst_index: usize,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub step: f64,
    pub blocks: Vec<BlockCheck>,
}

impl GradCheckReport {
    pub fn pass(&self) -> bool {
        self.blocks.iter().all(|b| b.pass)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.max_rel_error)
            .fold(0.0, f64::max)
    }
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares `grad_fn`'s analytic gradient against central finite
/// differences of `loss_fn`, block by block.
///
/// `loss_fn` must be deterministic (dropout disabled); `grad_fn` must
/// return the gradient of the same loss at the same point.
pub fn finite_diff_check<L, G>(
    params: &DenseParams,
    loss_fn: L,
    grad_fn: G,
    tolerance: f64,
) -> GradCheckReport
where
    L: Fn(&DenseParams) -> f64,
    G: Fn(&DenseParams) -> DenseGrads,
{
    let analytic = grad_fn(params);
    let mut probe = params.clone();
    let mut blocks = Vec::with_capacity(4);

    for block_idx in 0..4 {
        let block_name = params.blocks()[block_idx].0;
        let len = params.blocks()[block_idx].1.len();
        let mut max_rel = 0.0;
        let mut worst = 0;
        for i in 0..len {
            let original = probe.blocks_mut()[block_idx].1[i];
            probe.blocks_mut()[block_idx].1[i] = original + FD_STEP;
            let plus = loss_fn(&probe);
            probe.blocks_mut()[block_idx].1[i] = original - FD_STEP;
            let minus = loss_fn(&probe);
            probe.blocks_mut()[block_idx].1[i] = original;

            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let a = analytic.blocks()[block_idx].1[i];
            let rel = rel_error(a, numeric);
            if rel > max_rel {
                max_rel = rel;
                worst = i;
            }
        }
        blocks.push(BlockCheck {
            block: block_name,
            max_rel_error: max_rel,
            worst_index: worst,
            pass: max_rel < tolerance,
        });
    }

    GradCheckReport {
        tolerance,
        step: FD_STEP,
        blocks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{bce_loss, sigmoid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dummy_rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn linear_loss_on_bias_is_exact_up_to_float_noise() {
        // loss = sum(output); d loss / d b2 = 1 exactly, higher layers via GeLU.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = DenseParams::random(3, 4, 2, &mut rng);
        let input = vec![0.3, -0.6, 0.9];
        let loss = |p: &DenseParams| p.forward(&input).unwrap().iter().sum::<f64>();
        let grad = |p: &DenseParams| {
            let trace = p
                .forward_traced(&input, 0.0, false, &mut dummy_rng())
                .unwrap();
            p.backward(&trace, &[1.0, 1.0]).unwrap()
        };
        let report = finite_diff_check(&params, loss, grad, 1e-3);
        assert!(report.pass(), "report: {report:?}");
        let b2 = report.blocks.iter().find(|b| b.block == "b2").unwrap();
        assert!(b2.max_rel_error < 1e-9, "bias gradient should be exact");
    }

    #[test]
    fn random_net_with_bce_head_passes_at_1e3() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let params = DenseParams::random(8, 4, 3, &mut rng);
        let input: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let target = vec![1.0, 0.0, 0.5];
        let loss = |p: &DenseParams| {
            let out = p.forward(&input).unwrap();
            let probs: Vec<f64> = out.iter().map(|&z| sigmoid(z)).collect();
            bce_loss(&probs, &target).unwrap()
        };
        let grad = |p: &DenseParams| {
            let trace = p
                .forward_traced(&input, 0.0, false, &mut dummy_rng())
                .unwrap();
            let m = trace.output.len() as f64;
            let d_out: Vec<f64> = trace
                .output
                .iter()
                .zip(&target)
                .map(|(&z, &t)| (sigmoid(z) - t) / m)
                .collect();
            p.backward(&trace, &d_out).unwrap()
        };
        let report = finite_diff_check(&params, loss, grad, 1e-3);
        assert!(report.pass(), "max rel error {}", report.max_rel_error());
    }

    #[test]
    fn corrupted_gradient_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let params = DenseParams::random(4, 3, 2, &mut rng);
        let input = vec![0.1, 0.4, -0.2, 0.8];
        let loss = |p: &DenseParams| p.forward(&input).unwrap().iter().sum::<f64>();
        let grad = |p: &DenseParams| {
            let trace = p
                .forward_traced(&input, 0.0, false, &mut dummy_rng())
                .unwrap();
            let mut g = p.backward(&trace, &[1.0, 1.0]).unwrap();
            g.w1[0] += 0.5; // deliberate corruption
            g
        };
        let report = finite_diff_check(&params, loss, grad, 1e-3);
        assert!(!report.pass());
        let w1 = report.blocks.iter().find(|b| b.block == "w1").unwrap();
        assert!(!w1.pass);
        assert_eq!(w1.worst_index, 0);
    }
}
