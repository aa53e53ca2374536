//! Sequential GRU decoder.
//!
//! A stack of GRU layers is unrolled over the `n` codeword positions. At step
//! `i` the first layer reads `(1 - 2 b_{i-1}, y_1, ..., y_n)`, where `b` is the
//! previous source bit (ground truth under teacher forcing, the network's own
//! decision otherwise). At information positions a small fully connected head
//! maps the top hidden state to `P(m_i = 1)`.
//!
//! Gate equations, per layer:
//!
//! ```text
//! z = sigmoid(W_z [a; h] + b_z)
//! r = sigmoid(W_r [a; h] + b_r)
//! c = tanh(W_h [a; r * h] + b_h)
//! h' = (1 - z) * h + z * c
//! ```
//!
//! All arithmetic is `f64`. Gradients are computed by hand in [`backward`].

mod backward;
mod checkpoint;
mod forward;

use ndarray::{s, Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::{rng, Error, Result};

pub use backward::{crisp_loss_and_grads, gradient_check};
pub use checkpoint::{load_params, save_params, Checkpoint, FORMAT_VERSION};
pub use forward::{crisp_forward, hard_decide, Feedback, ForwardTrace, NeuralDecoder};

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruLayer {
    /// `hidden x (input + hidden)`
    pub w_z: Array2<f64>,
    pub w_r: Array2<f64>,
    pub w_h: Array2<f64>,
    pub b_z: Array1<f64>,
    pub b_r: Array1<f64>,
    pub b_h: Array1<f64>,
}

impl GruLayer {
    fn zeros(input: usize, hidden: usize) -> Self {
        let w = Array2::zeros((hidden, input + hidden));
        let b = Array1::zeros(hidden);
        Self {
            w_z: w.clone(),
            w_r: w.clone(),
            w_h: w,
            b_z: b.clone(),
            b_r: b.clone(),
            b_h: b,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.ncols() - self.hidden_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_z.nrows()
    }
}

/// Fully connected head `hidden -> head_dim -> 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruDecoderParams {
    pub n: usize,
    pub layers: Vec<GruLayer>,
    pub head: Head,
}

impl GruDecoderParams {
    pub fn zeros(n: usize, hidden: usize, num_layers: usize, head_dim: usize) -> Self {
        let layers = (0..num_layers)
            .map(|l| GruLayer::zeros(if l == 0 { n + 1 } else { hidden }, hidden))
            .collect();
        Self {
            n,
            layers,
            head: Head {
                w1: Array2::zeros((head_dim, hidden)),
                b1: Array1::zeros(head_dim),
                w2: Array1::zeros(head_dim),
                b2: Array1::zeros(1),
            },
        }
    }

    /// Weights uniform in `+-1/sqrt(fan_in)`, biases zero.
    pub fn init(n: usize, hidden: usize, num_layers: usize, head_dim: usize, seed: u64) -> Self {
        let mut p = Self::zeros(n, hidden, num_layers, head_dim);
        let mut rng = rng::derive(seed, &[0x1417]);
        let fill = |w: &mut [f64], fan_in: usize, rng: &mut rng::StreamRng| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            for x in w.iter_mut() {
                *x = dist.sample(rng);
            }
        };
        for layer in &mut p.layers {
            let fan_in = layer.w_z.ncols();
            for w in [&mut layer.w_z, &mut layer.w_r, &mut layer.w_h] {
                fill(w.as_slice_mut().unwrap(), fan_in, &mut rng);
            }
        }
        fill(p.head.w1.as_slice_mut().unwrap(), hidden, &mut rng);
        fill(p.head.w2.as_slice_mut().unwrap(), head_dim, &mut rng);
        p
    }

    pub fn hidden_dim(&self) -> usize {
        self.layers[0].hidden_dim()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn head_dim(&self) -> usize {
        self.head.w1.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.n + 1
    }

    /// Zero tensor with the same shapes.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.n, self.hidden_dim(), self.num_layers(), self.head_dim())
    }

    /// Named tensors in a fixed order: `(name, shape, values)`.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            for (name, w) in [("w_z", &layer.w_z), ("w_r", &layer.w_r), ("w_h", &layer.w_h)] {
                out.push((format!("layer{l}.{name}"), w.shape().to_vec(), w.as_slice().unwrap()));
            }
            for (name, b) in [("b_z", &layer.b_z), ("b_r", &layer.b_r), ("b_h", &layer.b_h)] {
                out.push((format!("layer{l}.{name}"), b.shape().to_vec(), b.as_slice().unwrap()));
            }
        }
        let h = &self.head;
        out.push(("head.w1".into(), h.w1.shape().to_vec(), h.w1.as_slice().unwrap()));
        out.push(("head.b1".into(), h.b1.shape().to_vec(), h.b1.as_slice().unwrap()));
        out.push(("head.w2".into(), h.w2.shape().to_vec(), h.w2.as_slice().unwrap()));
        out.push(("head.b2".into(), h.b2.shape().to_vec(), h.b2.as_slice().unwrap()));
        out
    }

    /// Mutable views in the same order as [`Self::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.w_z.as_slice_mut().unwrap());
            out.push(layer.w_r.as_slice_mut().unwrap());
            out.push(layer.w_h.as_slice_mut().unwrap());
            out.push(layer.b_z.as_slice_mut().unwrap());
            out.push(layer.b_r.as_slice_mut().unwrap());
            out.push(layer.b_h.as_slice_mut().unwrap());
        }
        out.push(self.head.w1.as_slice_mut().unwrap());
        out.push(self.head.b1.as_slice_mut().unwrap());
        out.push(self.head.w2.as_slice_mut().unwrap());
        out.push(self.head.b2.as_slice_mut().unwrap());
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, _, v)| v.len()).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.tensors()
            .iter()
            .zip(other.tensors())
            .flat_map(|((_, _, a), (_, _, b))| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Random perturbation of every parameter (tests and restarts).
    pub fn jitter<R: Rng>(&mut self, scale: f64, rng: &mut R) {
        for t in self.tensors_mut() {
            for x in t.iter_mut() {
                *x += scale * rng.random_range(-1.0..1.0);
            }
        }
    }
}

/// One GRU step for a single input vector.
pub fn gru_cell(h_prev: &Array1<f64>, input: &Array1<f64>, layer: &GruLayer) -> Result<Array1<f64>> {
    let hidden = layer.hidden_dim();
    let in_dim = layer.input_dim();
    if h_prev.len() != hidden || input.len() != in_dim {
        return Err(Error::Shape(format!(
            "GRU cell expects input {in_dim} and hidden {hidden}, got {} and {}",
            input.len(),
            h_prev.len()
        )));
    }
    let gate = |w: &Array2<f64>, b: &Array1<f64>, hid: &Array1<f64>| {
        w.slice(s![.., ..in_dim]).dot(input) + w.slice(s![.., in_dim..]).dot(hid) + b
    };
    let z = gate(&layer.w_z, &layer.b_z, h_prev).mapv(sigmoid);
    let r = gate(&layer.w_r, &layer.b_r, h_prev).mapv(sigmoid);
    let c = gate(&layer.w_h, &layer.b_h, &(&r * h_prev)).mapv(f64::tanh);
    Ok((1.0 - &z) * h_prev + &z * &c)
}

/// Multiply-accumulate count of one layer's forward pass over `n` steps, as
/// implemented here: three gates, each an `h x input` and an `h x h` product
/// per step.
pub fn layer_forward_macs(n: usize, input_dim: usize, hidden: usize) -> usize {
    n * 3 * hidden * (input_dim + hidden)
}

/// Published operation count `n (2h(n+1) + 6h^2)` for the decoder with input
/// size `n + 1`. It charges the input side differently from
/// [`layer_forward_macs`]; throughput reports print both.
pub fn reference_complexity(n: usize, hidden: usize) -> usize {
    n * (2 * hidden * (n + 1) + 6 * hidden * hidden)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_params_halve_hidden_state() {
        let layer = GruLayer::zeros(3, 2);
        let h = array![0.8, -0.4];
        let out = gru_cell(&h, &array![1.0, 2.0, 3.0], &layer).unwrap();
        assert_eq!(out, array![0.4, -0.2]);
        let out = gru_cell(&Array1::zeros(2), &array![1.0, 2.0, 3.0], &layer).unwrap();
        assert_eq!(out, Array1::<f64>::zeros(2));
    }

    #[test]
    fn gru_cell_rejects_bad_dims() {
        let layer = GruLayer::zeros(3, 2);
        assert!(gru_cell(&Array1::zeros(3), &Array1::zeros(3), &layer).is_err());
        assert!(gru_cell(&Array1::zeros(2), &Array1::zeros(2), &layer).is_err());
    }

    #[test]
    fn gru_cell_jacobian_matches_central_differences() {
        let mut p = GruDecoderParams::init(3, 5, 1, 5, 17);
        let mut rng = crate::rng::derive(17, &[1]);
        p.jitter(0.3, &mut rng);
        let layer = &p.layers[0];
        let h0: Array1<f64> = (0..5).map(|_| rng.random_range(-0.9..0.9)).collect();
        let x: Array1<f64> = (0..4).map(|_| rng.random_range(-1.5..1.5)).collect();

        // analytic Jacobian dh'/dh_prev
        let in_dim = 4;
        let wz = layer.w_z.slice(s![.., ..in_dim]).dot(&x) + layer.w_z.slice(s![.., in_dim..]).dot(&h0) + &layer.b_z;
        let wr = layer.w_r.slice(s![.., ..in_dim]).dot(&x) + layer.w_r.slice(s![.., in_dim..]).dot(&h0) + &layer.b_r;
        let z = wz.mapv(sigmoid);
        let r = wr.mapv(sigmoid);
        let uh = layer.w_h.slice(s![.., in_dim..]);
        let c = (layer.w_h.slice(s![.., ..in_dim]).dot(&x) + uh.dot(&(&r * &h0)) + &layer.b_h).mapv(f64::tanh);
        let uz = layer.w_z.slice(s![.., in_dim..]);
        let ur = layer.w_r.slice(s![.., in_dim..]);
        let hd = 5;
        let mut jac = Array2::<f64>::zeros((hd, hd));
        for i in 0..hd {
            for j in 0..hd {
                let dz = z[i] * (1.0 - z[i]) * uz[[i, j]];
                let mut dpre_c = 0.0;
                for m in 0..hd {
                    let dr_m = r[m] * (1.0 - r[m]) * ur[[m, j]];
                    let d_rh = dr_m * h0[m] + if m == j { r[m] } else { 0.0 };
                    dpre_c += uh[[i, m]] * d_rh;
                }
                let dc = (1.0 - c[i] * c[i]) * dpre_c;
                jac[[i, j]] = -dz * h0[i] + if i == j { 1.0 - z[i] } else { 0.0 } + dz * c[i] + z[i] * dc;
            }
        }
        let step = 1e-6;
        for j in 0..hd {
            let mut hp = h0.clone();
            hp[j] += step;
            let mut hm = h0.clone();
            hm[j] -= step;
            let fd = (gru_cell(&hp, &x, layer).unwrap() - gru_cell(&hm, &x, layer).unwrap()) / (2.0 * step);
            for i in 0..hd {
                let rel = (jac[[i, j]] - fd[i]).abs() / (fd[i].abs() + 1e-8);
                assert!(rel < 1e-5, "({i},{j}) analytic {} fd {}", jac[[i, j]], fd[i]);
            }
        }
    }

    #[test]
    fn parameter_count() {
        let (n, h, fc) = (8, 16, 16);
        let p = GruDecoderParams::zeros(n, h, 1, fc);
        let head = fc * h + fc + fc + 1;
        assert_eq!(p.param_count(), 3 * h * (n + 1 + h) + 3 * h + head);
        let p2 = GruDecoderParams::zeros(n, h, 2, fc);
        assert_eq!(p2.param_count(), p.param_count() + 3 * h * (2 * h) + 3 * h);
    }

    #[test]
    fn complexity_counts() {
        assert_eq!(layer_forward_macs(4, 5, 8), 4 * 3 * 8 * 13);
        let (n, h) = (64, 512);
        assert_eq!(reference_complexity(n, h), n * (2 * h * (n + 1) + 6 * h * h));
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = GruDecoderParams::init(8, 16, 2, 16, 3);
        let b = GruDecoderParams::init(8, 16, 2, 16, 3);
        let c = GruDecoderParams::init(8, 16, 2, 16, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let bound = 1.0 / ((9 + 16) as f64).sqrt();
        assert!(a.layers[0].w_z.iter().all(|w| w.abs() <= bound));
        assert!(a.layers[0].b_z.iter().all(|&b| b == 0.0));
    }
}
