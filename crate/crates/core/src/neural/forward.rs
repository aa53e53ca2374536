use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};

use super::{sigmoid, GruDecoderParams};
use crate::channels::{ChannelModel, ReceivedWord};
use crate::construction::CodeSpec;
use crate::decoders::BlockDecoder;
use crate::{Error, Result};

/// Source of the previous-bit input.
#[derive(Debug, Clone, Copy)]
pub enum Feedback<'a> {
    /// Ground-truth source vectors `m`, one per batch item.
    Teacher(&'a [Vec<u8>]),
    /// The network's own thresholded outputs.
    Student,
}

/// Cached activations of a batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub(crate) spec: CodeSpec,
    /// `batch x n` received samples.
    pub(crate) y: Array2<f64>,
    /// `batch x n`: the previous-bit signal fed at each step.
    pub(crate) prev_bits: Array2<f64>,
    /// `[layer][step]`, steps `0..=n`, entry 0 is the zero initial state.
    pub(crate) hs: Vec<Vec<Array2<f64>>>,
    pub(crate) zs: Vec<Vec<Array2<f64>>>,
    pub(crate) rs: Vec<Vec<Array2<f64>>>,
    pub(crate) cs: Vec<Vec<Array2<f64>>>,
    /// Head hidden activations per information index.
    pub(crate) head_q: Vec<Array2<f64>>,
    /// `batch x k`: `P(m_i = 1)` at each information index.
    pub probs: Array2<f64>,
}

impl ForwardTrace {
    pub fn batch(&self) -> usize {
        self.y.nrows()
    }

    pub fn steps(&self) -> usize {
        self.hs[0].len() - 1
    }
}

#[inline]
fn matmul_t(a: &ArrayView2<f64>, w: &ArrayView2<f64>) -> Array2<f64> {
    a.dot(&w.t())
}

fn outer(col: &ArrayView1<f64>, row: &ArrayView1<f64>) -> Array2<f64> {
    &col.view().insert_axis(Axis(1)) * &row.view().insert_axis(Axis(0))
}

/// Run the decoder over a batch of received words.
pub fn crisp_forward(
    ys: &[ReceivedWord],
    spec: &CodeSpec,
    params: &GruDecoderParams,
    feedback: Feedback<'_>,
) -> Result<ForwardTrace> {
    let n = spec.n;
    if params.n != n {
        return Err(Error::Shape(format!("decoder built for n={}, spec has n={n}", params.n)));
    }
    if let Feedback::Teacher(ms) = feedback {
        if ms.len() != ys.len() || ms.iter().any(|m| m.len() != n) {
            return Err(Error::Shape("teacher bits must be one length-n vector per item".into()));
        }
    }
    let batch = ys.len();
    let mut y = Array2::zeros((batch, n));
    for (mut row, word) in y.rows_mut().into_iter().zip(ys) {
        if word.samples.len() != n {
            return Err(Error::Length {
                expected: n,
                got: word.samples.len(),
            });
        }
        row.assign(&ArrayView1::from(&word.samples[..]));
    }

    let hidden = params.hidden_dim();
    let num_layers = params.num_layers();
    let mask = spec.info_mask();
    let k = spec.k;

    // First-layer input projections of y (constant over time) plus biases.
    let l0 = &params.layers[0];
    let yv = y.view();
    let y_proj = |w: &Array2<f64>, b: &Array1<f64>| matmul_t(&yv, &w.slice(s![.., 1..=n])) + b;
    let (yz, yr, yc) = (y_proj(&l0.w_z, &l0.b_z), y_proj(&l0.w_r, &l0.b_r), y_proj(&l0.w_h, &l0.b_h));

    let mut hs: Vec<Vec<Array2<f64>>> = (0..num_layers)
        .map(|_| {
            let mut v = Vec::with_capacity(n + 1);
            v.push(Array2::zeros((batch, hidden)));
            v
        })
        .collect();
    let mut zs = vec![Vec::with_capacity(n); num_layers];
    let mut rs = vec![Vec::with_capacity(n); num_layers];
    let mut cs = vec![Vec::with_capacity(n); num_layers];
    let mut head_q = Vec::with_capacity(k);
    let mut probs = Array2::zeros((batch, k));
    let mut prev_bits = Array2::zeros((batch, n));
    let mut signal = Array1::from_elem(batch, 1.0);
    let mut info_col = 0;

    for t in 0..n {
        prev_bits.column_mut(t).assign(&signal);
        for (l, layer) in params.layers.iter().enumerate() {
            let in_dim = layer.input_dim();
            let h_prev = hs[l][t].view();
            let (mut pre_z, mut pre_r, mut pre_c) = if l == 0 {
                let sv = signal.view();
                (
                    &yz + &outer(&sv, &layer.w_z.column(0)),
                    &yr + &outer(&sv, &layer.w_r.column(0)),
                    &yc + &outer(&sv, &layer.w_h.column(0)),
                )
            } else {
                let a = hs[l - 1][t + 1].view();
                (
                    matmul_t(&a, &layer.w_z.slice(s![.., ..in_dim])) + &layer.b_z,
                    matmul_t(&a, &layer.w_r.slice(s![.., ..in_dim])) + &layer.b_r,
                    matmul_t(&a, &layer.w_h.slice(s![.., ..in_dim])) + &layer.b_h,
                )
            };
            pre_z += &matmul_t(&h_prev, &layer.w_z.slice(s![.., in_dim..]));
            pre_r += &matmul_t(&h_prev, &layer.w_r.slice(s![.., in_dim..]));
            let z = pre_z.mapv_into(sigmoid);
            let r = pre_r.mapv_into(sigmoid);
            let rh = &r * &h_prev;
            pre_c += &matmul_t(&rh.view(), &layer.w_h.slice(s![.., in_dim..]));
            let c = pre_c.mapv_into(f64::tanh);
            let mut h = Array2::zeros((batch, hidden));
            Zip::from(&mut h)
                .and(&z)
                .and(&c)
                .and(&h_prev)
                .for_each(|h, &z, &c, &hp| *h = (1.0 - z) * hp + z * c);
            hs[l].push(h);
            zs[l].push(z);
            rs[l].push(r);
            cs[l].push(c);
        }

        if mask[t] {
            let top = hs[num_layers - 1][t + 1].view();
            let q = (matmul_t(&top, &params.head.w1.view()) + &params.head.b1).mapv_into(f64::tanh);
            let out = q.dot(&params.head.w2) + params.head.b2[0];
            let p = out.mapv_into(sigmoid);
            probs.column_mut(info_col).assign(&p);
            head_q.push(q);
            match feedback {
                Feedback::Teacher(ms) => {
                    for (s, m) in signal.iter_mut().zip(ms) {
                        *s = 1.0 - 2.0 * f64::from(m[t]);
                    }
                }
                Feedback::Student => {
                    for (s, &p) in signal.iter_mut().zip(&p) {
                        *s = if p > 0.5 { -1.0 } else { 1.0 };
                    }
                }
            }
            info_col += 1;
        } else {
            signal.fill(1.0);
        }
    }

    Ok(ForwardTrace {
        spec: spec.clone(),
        y,
        prev_bits,
        hs,
        zs,
        rs,
        cs,
        head_q,
        probs,
    })
}

/// Thresholded messages per batch item; `p = 0.5` decides 0. CRC-aided codes
/// return the payload only.
pub fn hard_decide(trace: &ForwardTrace) -> Vec<Vec<u8>> {
    let len = trace.spec.message_len();
    trace
        .probs
        .rows()
        .into_iter()
        .map(|row| row.iter().take(len).map(|&p| u8::from(p > 0.5)).collect())
        .collect()
}

/// Trained decoder usable wherever a [`BlockDecoder`] is expected. It reads
/// raw channel samples, so the channel argument is ignored.
#[derive(Debug, Clone)]
pub struct NeuralDecoder {
    pub spec: CodeSpec,
    pub params: GruDecoderParams,
}

impl NeuralDecoder {
    pub fn new(spec: CodeSpec, params: GruDecoderParams) -> Result<Self> {
        if params.n != spec.n {
            return Err(Error::Shape(format!(
                "decoder built for n={}, spec has n={}",
                params.n, spec.n
            )));
        }
        Ok(Self { spec, params })
    }
}

impl BlockDecoder for NeuralDecoder {
    fn name(&self) -> String {
        format!("gru-h{}x{}", self.params.hidden_dim(), self.params.num_layers())
    }

    fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    fn decode(&self, y: &ReceivedWord, channel: &ChannelModel) -> Result<Vec<u8>> {
        Ok(self.decode_batch(std::slice::from_ref(y), channel)?.remove(0))
    }

    fn decode_batch(&self, ys: &[ReceivedWord], _channel: &ChannelModel) -> Result<Vec<Vec<u8>>> {
        if ys.is_empty() {
            return Ok(Vec::new());
        }
        let trace = crisp_forward(ys, &self.spec, &self.params, Feedback::Student)?;
        Ok(hard_decide(&trace))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::build_polar_spec;
    use crate::neural::gru_cell;
    use rand::Rng;

    fn random_words(n: usize, count: usize, seed: u64) -> Vec<ReceivedWord> {
        let mut rng = crate::rng::derive(seed, &[]);
        (0..count)
            .map(|_| ReceivedWord {
                samples: (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
                fading_gains: None,
            })
            .collect()
    }

    #[test]
    fn zero_network_outputs_one_half() {
        let spec = build_polar_spec(8, 4, 0.5, None).unwrap();
        let p = GruDecoderParams::zeros(8, 4, 2, 4);
        let trace = crisp_forward(&random_words(8, 3, 1), &spec, &p, Feedback::Student).unwrap();
        assert_eq!(trace.probs.shape(), &[3, 4]);
        assert!(trace.probs.iter().all(|&p| p == 0.5));
        assert_eq!(trace.steps(), 8);
        assert!(hard_decide(&trace).iter().all(|u| u == &vec![0; 4]));
    }

    #[test]
    fn matches_single_item_cell_composition() {
        let spec = build_polar_spec(4, 2, 0.5, None).unwrap();
        let mut params = GruDecoderParams::init(4, 6, 2, 5, 8);
        params.jitter(0.2, &mut crate::rng::derive(8, &[]));
        let words = random_words(4, 2, 3);
        let teacher = vec![vec![0, 0, 1, 0], vec![0, 0, 1, 1]];
        let trace = crisp_forward(&words, &spec, &params, Feedback::Teacher(&teacher)).unwrap();
        for (b, word) in words.iter().enumerate() {
            let mut h = vec![Array1::<f64>::zeros(6); 2];
            let mut prev = 0u8;
            let mut col = 0;
            for t in 0..4 {
                let mut input = vec![1.0 - 2.0 * f64::from(prev)];
                input.extend(&word.samples);
                let mut a = Array1::from(input);
                for l in 0..2 {
                    h[l] = gru_cell(&h[l], &a, &params.layers[l]).unwrap();
                    a = h[l].clone();
                }
                if spec.info_mask()[t] {
                    let q = (params.head.w1.dot(&h[1]) + &params.head.b1).mapv(f64::tanh);
                    let p = sigmoid(q.dot(&params.head.w2) + params.head.b2[0]);
                    assert!((p - trace.probs[[b, col]]).abs() < 1e-13);
                    col += 1;
                    prev = teacher[b][t];
                } else {
                    prev = 0;
                }
            }
        }
    }

    #[test]
    fn batch_items_are_independent() {
        let spec = build_polar_spec(8, 4, 0.5, None).unwrap();
        let params = GruDecoderParams::init(8, 8, 2, 8, 2);
        let words = random_words(8, 5, 4);
        let all = crisp_forward(&words, &spec, &params, Feedback::Student).unwrap();
        for (b, w) in words.iter().enumerate() {
            let one = crisp_forward(std::slice::from_ref(w), &spec, &params, Feedback::Student).unwrap();
            for j in 0..4 {
                assert!((one.probs[[0, j]] - all.probs[[b, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let spec = build_polar_spec(8, 4, 0.5, None).unwrap();
        let params = GruDecoderParams::init(8, 8, 2, 8, 2);
        let words = random_words(8, 7, 5);
        let m = vec![vec![0u8; 8]; 7];
        let a = crisp_forward(&words, &spec, &params, Feedback::Teacher(&m)).unwrap();
        let b = crisp_forward(&words, &spec, &params, Feedback::Teacher(&m)).unwrap();
        assert_eq!(a.probs, b.probs);
    }

    #[test]
    fn shape_errors() {
        let spec = build_polar_spec(8, 4, 0.5, None).unwrap();
        let params = GruDecoderParams::zeros(4, 4, 1, 4);
        assert!(crisp_forward(&random_words(8, 1, 1), &spec, &params, Feedback::Student).is_err());
        let params = GruDecoderParams::zeros(8, 4, 1, 4);
        assert!(crisp_forward(&random_words(4, 1, 1), &spec, &params, Feedback::Student).is_err());
        let m = vec![vec![0u8; 8]; 2];
        assert!(crisp_forward(&random_words(8, 1, 1), &spec, &params, Feedback::Teacher(&m)).is_err());
    }

    #[test]
    fn tie_decides_zero() {
        let spec = build_polar_spec(4, 2, 0.5, Some(&[2, 4])).unwrap();
        let mut trace = crisp_forward(
            &random_words(4, 1, 1),
            &spec,
            &GruDecoderParams::zeros(4, 2, 1, 2),
            Feedback::Student,
        )
        .unwrap();
        assert_eq!(hard_decide(&trace), vec![vec![0, 0]]);
        trace.probs[[0, 0]] = 0.9;
        trace.probs[[0, 1]] = 0.2;
        assert_eq!(hard_decide(&trace), vec![vec![1, 0]]);
    }
}
