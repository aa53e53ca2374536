use super::{hard, lse, BlockDecoder, DecodeResult, LseMode};
use crate::channels::{ChannelModel, ReceivedWord};
use crate::construction::CodeSpec;
use crate::encoding::message_from_source;
use crate::{Error, Result};

/// Successive-cancellation state for one decoding path.
///
/// Level `l` of the Plotkin tree holds nodes of size `n >> l`; only the node
/// on the path to the current leaf is stored per level. `alpha` keeps the
/// node LLRs, `beta` the re-encoded left/right children.
#[derive(Debug, Clone)]
pub(crate) struct ScState {
    n: usize,
    depth: usize,
    alpha: Vec<f64>,
    beta: Vec<u8>,
}

impl ScState {
    pub(crate) fn new(llrs: &[f64]) -> Self {
        let n = llrs.len();
        let mut alpha = vec![0.0; 2 * n - 1];
        alpha[..n].copy_from_slice(llrs);
        Self {
            n,
            depth: n.trailing_zeros() as usize,
            alpha,
            beta: vec![0; 2 * (2 * n - 1)],
        }
    }

    #[inline]
    fn offset(&self, level: usize) -> usize {
        2 * self.n - 2 * (self.n >> level)
    }

    /// Conditional LLR of leaf `i`, given every earlier leaf was committed.
    pub(crate) fn leaf_llr(&mut self, i: usize, mode: LseMode) -> f64 {
        let first = if i == 0 {
            1
        } else {
            let level = self.depth - i.trailing_zeros() as usize;
            let size = self.n >> level;
            let parent = self.offset(level - 1);
            let child = self.offset(level);
            let left = 2 * child;
            for j in 0..size {
                let a = self.alpha[parent + j];
                let b = self.alpha[parent + j + size];
                self.alpha[child + j] = if self.beta[left + j] == 0 { b + a } else { b - a };
            }
            level + 1
        };
        for level in first..=self.depth {
            let size = self.n >> level;
            let parent = self.offset(level - 1);
            let child = self.offset(level);
            for j in 0..size {
                self.alpha[child + j] = lse(self.alpha[parent + j], self.alpha[parent + j + size], mode);
            }
        }
        self.alpha[self.offset(self.depth)]
    }

    /// Record the tree-level bit at leaf `i` and propagate partial sums.
    pub(crate) fn commit(&mut self, i: usize, bit: u8) {
        let mut level = self.depth;
        let mut idx = i;
        let leaf = 2 * self.offset(level) + (idx & 1);
        self.beta[leaf] = bit;
        while idx & 1 == 1 && level > 0 {
            let size = self.n >> level;
            let base = 2 * self.offset(level);
            let parent_side = (idx >> 1) & 1;
            let parent = 2 * self.offset(level - 1) + parent_side * 2 * size;
            for j in 0..size {
                let l = self.beta[base + j];
                let r = self.beta[base + size + j];
                self.beta[parent + j] = l ^ r;
                self.beta[parent + size + j] = r;
            }
            level -= 1;
            idx >>= 1;
        }
    }
}

/// XOR of the kernel taps over earlier source bits: `v_i = m_i ^ conv_tail`.
#[inline]
pub(crate) fn conv_tail(kernel: &[u8], m: &[u8], i: usize) -> u8 {
    kernel
        .iter()
        .enumerate()
        .skip(1)
        .take(i)
        .fold(0, |acc, (j, &c)| acc ^ (c & m[i - j]))
}

pub(crate) fn check_llrs(llrs: &[f64], spec: &CodeSpec) -> Result<()> {
    if llrs.len() != spec.n {
        return Err(Error::Length {
            expected: spec.n,
            got: llrs.len(),
        });
    }
    Ok(())
}

/// Successive-cancellation decoding. PAC specs are handled by running the
/// convolution forward from the decided source bits.
pub fn sc_decode(llrs: &[f64], spec: &CodeSpec, mode: LseMode) -> Result<DecodeResult> {
    check_llrs(llrs, spec)?;
    let mask = spec.info_mask();
    let kernel = spec.kernel();
    let mut state = ScState::new(llrs);
    let mut m = vec![0u8; spec.n];
    let mut bit_llrs = Vec::with_capacity(spec.k);
    for i in 0..spec.n {
        let l = state.leaf_llr(i, mode);
        let tail = conv_tail(kernel, &m, i);
        let v = if mask[i] {
            bit_llrs.push(l);
            let v = hard(l);
            m[i] = v ^ tail;
            v
        } else {
            tail
        };
        state.commit(i, v);
    }
    Ok(DecodeResult {
        u_hat: message_from_source(&m, spec),
        m_hat: m,
        bit_llrs,
        path_metric: None,
    })
}

#[derive(Debug, Clone)]
pub struct ScDecoder {
    pub spec: CodeSpec,
    pub lse: LseMode,
}

impl ScDecoder {
    pub fn new(spec: CodeSpec, lse: LseMode) -> Self {
        Self { spec, lse }
    }
}

impl BlockDecoder for ScDecoder {
    fn name(&self) -> String {
        format!("sc-{:?}", self.lse).to_lowercase()
    }

    fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    fn decode(&self, y: &ReceivedWord, channel: &ChannelModel) -> Result<Vec<u8>> {
        Ok(sc_decode(&channel.llr(y)?, &self.spec, self.lse)?.u_hat)
    }
}
