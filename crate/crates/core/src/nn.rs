//! Minimal feedforward machinery shared by the recognition models: dense
//! layers with ReLU, loss heads, and a slice-based Adam optimizer. Everything
//! is f64, single-threaded, and deterministic given a seeded generator.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Linear {
    /// (out, in)
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn new(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (input + output) as f64).sqrt();
        let weight =
            Array2::from_shape_fn((output, input), |_| rng.gen_range(-bound..bound));
        Linear {
            weight,
            bias: Array1::zeros(output),
        }
    }
}

/// Dense layers with ReLU between them and a linear final layer.
#[derive(Debug, Clone)]
pub struct Feedforward {
    pub layers: Vec<Linear>,
}

/// Per-layer inputs kept from the forward pass for backprop.
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pub logits: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct LinearGrad {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Feedforward {
    /// `dims` lists layer widths input-first, e.g. `[512, 64, 128, 256, 100]`.
    pub fn new(dims: &[usize], rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "need at least input and output widths");
        let layers = dims
            .windows(2)
            .map(|w| Linear::new(w[0], w[1], rng))
            .collect();
        Feedforward { layers }
    }

    pub fn forward(&self, x: &Array2<f64>) -> ForwardCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for (li, layer) in self.layers.iter().enumerate() {
            inputs.push(cur.clone());
            let mut z = cur.dot(&layer.weight.t());
            z += &layer.bias;
            if li + 1 < self.layers.len() {
                z.mapv_inplace(|v| v.max(0.0));
            }
            cur = z;
        }
        ForwardCache { inputs, logits: cur }
    }

    pub fn logits(&self, x: &Array2<f64>) -> Array2<f64> {
        self.forward(x).logits
    }

    /// Backpropagates `dlogits` (already scaled by the loss), returning
    /// per-layer gradients and the gradient at the network input.
    pub fn backward(&self, cache: &ForwardCache, dlogits: &Array2<f64>) -> (Vec<LinearGrad>, Array2<f64>) {
        let mut grads: Vec<Option<LinearGrad>> = (0..self.layers.len()).map(|_| None).collect();
        let mut delta = dlogits.clone();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = &cache.inputs[li];
            if li + 1 < self.layers.len() {
                // delta entering layer li+1 was post-ReLU of layer li's output;
                // that output is exactly cache.inputs[li + 1].
                let post = &cache.inputs[li + 1];
                delta.zip_mut_with(post, |d, &p| {
                    if p <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            let gw = delta.t().dot(input);
            let gb = delta.sum_axis(Axis(0));
            let dinput = delta.dot(&layer.weight);
            grads[li] = Some(LinearGrad {
                weight: gw,
                bias: gb,
            });
            delta = dinput;
        }
        (grads.into_iter().map(Option::unwrap).collect(), delta)
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().bias.len()
    }
}

/// Softmax rows in place, numerically stable.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Mean cross-entropy over the batch; returns the loss and `d(loss)/d(logits)`.
pub fn softmax_cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> (f64, Array2<f64>) {
    let batch = logits.nrows() as f64;
    let probs = softmax_rows(logits);
    let mut loss = 0.0;
    let mut grad = probs.clone();
    for (i, &label) in labels.iter().enumerate() {
        loss -= probs[(i, label)].max(1e-300).ln();
        grad[(i, label)] -= 1.0;
    }
    grad.mapv_inplace(|v| v / batch);
    (loss / batch, grad)
}

/// Mean (over the batch) of the summed per-output binary cross-entropy with
/// logits; targets are 0/1.
pub fn sigmoid_bce(logits: &Array2<f64>, targets: &Array2<f64>) -> (f64, Array2<f64>) {
    let batch = logits.nrows() as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.raw_dim());
    for ((i, j), &z) in logits.indexed_iter() {
        let t = targets[(i, j)];
        // log(1 + e^{-|z|}) + max(z, 0) - z t, the stable form
        loss += (1.0 + (-z.abs()).exp()).ln() + z.max(0.0) - z * t;
        let p = 1.0 / (1.0 + (-z).exp());
        grad[(i, j)] = (p - t) / batch;
    }
    (loss / batch, grad)
}

/// Cross-entropy applied independently to each contiguous logit group
/// (softmax per group). `labels[example][group]` is the in-group target index,
/// `None` masking the group out of the loss.
pub fn grouped_cross_entropy(
    logits: &Array2<f64>,
    groups: &[std::ops::Range<usize>],
    labels: &[Vec<Option<usize>>],
) -> (f64, Array2<f64>) {
    let batch = logits.nrows() as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.raw_dim());
    for (i, row_labels) in labels.iter().enumerate() {
        for (gi, range) in groups.iter().enumerate() {
            let Some(target) = row_labels[gi] else {
                continue;
            };
            let slice: Vec<f64> = (range.start..range.end).map(|j| logits[(i, j)]).collect();
            let max = slice.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = slice.iter().map(|&v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            loss -= (exps[target] / sum).max(1e-300).ln();
            for (k, j) in (range.start..range.end).enumerate() {
                let p = exps[k] / sum;
                grad[(i, j)] = (p - f64::from(u8::from(k == target))) / batch;
            }
        }
    }
    (loss / batch, grad)
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment buffers for one parameter tensor, flattened.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One Adam update; `t` is the 1-based step count shared by all tensors.
pub fn adam_step(p: &AdamParams, t: usize, param: &mut [f64], grad: &[f64], state: &mut AdamState) {
    debug_assert_eq!(param.len(), grad.len());
    let bc1 = 1.0 - p.beta1.powi(t as i32);
    let bc2 = 1.0 - p.beta2.powi(t as i32);
    for i in 0..param.len() {
        state.m[i] = p.beta1 * state.m[i] + (1.0 - p.beta1) * grad[i];
        state.v[i] = p.beta2 * state.v[i] + (1.0 - p.beta2) * grad[i] * grad[i];
        let mhat = state.m[i] / bc1;
        let vhat = state.v[i] / bc2;
        param[i] -= p.lr * mhat / (vhat.sqrt() + p.eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;

    #[test]
    fn forward_shapes_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Feedforward::new(&[5, 8, 3], &mut rng);
        let x = Array2::zeros((4, 5));
        assert_eq!(net.logits(&x).dim(), (4, 3));
    }

    #[test]
    fn softmax_ce_uniform_logits() {
        let logits = Array2::zeros((2, 4));
        let (loss, grad) = softmax_cross_entropy(&logits, &[0, 1]);
        assert!((loss - 4.0f64.ln()).abs() < 1e-12);
        // gradient rows sum to zero
        for row in grad.rows() {
            assert!(row.sum().abs() < 1e-12);
        }
    }

    #[test]
    fn bce_zero_logits() {
        let logits = Array2::zeros((1, 3));
        let targets = array![[1.0, 0.0, 1.0]];
        let (loss, grad) = sigmoid_bce(&logits, &targets);
        assert!((loss - 3.0 * 2.0f64.ln()).abs() < 1e-12);
        assert!((grad[(0, 0)] + 0.5).abs() < 1e-12);
        assert!((grad[(0, 1)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grouped_ce_masks_missing_groups() {
        let logits = Array2::zeros((1, 5));
        let groups = vec![0..2, 2..5];
        let labels = vec![vec![Some(1), None]];
        let (loss, grad) = grouped_cross_entropy(&logits, &groups, &labels);
        assert!((loss - 2.0f64.ln()).abs() < 1e-12);
        for j in 2..5 {
            assert_eq!(grad[(0, j)], 0.0);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = Feedforward::new(&[3, 4, 2], &mut rng);
        let x = Array2::from_shape_fn((5, 3), |_| rng.gen_range(-1.0..1.0));
        let labels = vec![0, 1, 1, 0, 1];

        let cache = net.forward(&x);
        let (_, dlogits) = softmax_cross_entropy(&cache.logits, &labels);
        let (grads, _) = net.backward(&cache, &dlogits);

        let eps = 1e-6;
        for li in 0..2 {
            for &(i, j) in &[(0usize, 0usize), (1, net.layers[li].weight.ncols() - 1)] {
                let analytic = grads[li].weight[(i, j)];
                let mut probe = net.clone();
                let orig = probe.layers[li].weight[(i, j)];
                probe.layers[li].weight[(i, j)] = orig + eps;
                let up = softmax_cross_entropy(&probe.logits(&x), &labels).0;
                probe.layers[li].weight[(i, j)] = orig - eps;
                let down = softmax_cross_entropy(&probe.logits(&x), &labels).0;
                let numeric = (up - down) / (2.0 * eps);
                let denom = analytic.abs().max(numeric.abs()).max(1e-8);
                assert!(
                    (analytic - numeric).abs() / denom < 1e-5,
                    "layer {li} w[{i},{j}]: {analytic} vs {numeric}"
                );
            }
        }
    }

    #[test]
    fn adam_reduces_quadratic() {
        let p = AdamParams {
            lr: 0.1,
            ..AdamParams::default()
        };
        let mut x = vec![3.0, -2.0];
        let mut st = AdamState::new(2);
        for t in 1..=200 {
            let grad: Vec<f64> = x.iter().map(|&v| 2.0 * v).collect();
            adam_step(&p, t, &mut x, &grad, &mut st);
        }
        assert!(x.iter().all(|v| v.abs() < 0.05), "{x:?}");
    }
}
