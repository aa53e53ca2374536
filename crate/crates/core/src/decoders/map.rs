use super::{BlockDecoder, DecodeResult};
use crate::channels::{ChannelModel, ReceivedWord};
use crate::construction::CodeSpec;
use crate::encoding::{encode, source_vector};
use crate::{Error, Result};

/// Largest message length accepted by the exhaustive oracle.
pub const MAX_ORACLE_BITS: usize = 20;

/// Messages in lexicographic order (first bit most significant).
fn message(index: u64, len: usize) -> Vec<u8> {
    (0..len).map(|i| ((index >> (len - 1 - i)) & 1) as u8).collect()
}

/// Exhaustive minimum-distance decoder with a precomputed codebook.
#[derive(Debug, Clone)]
pub struct MapDecoder {
    spec: CodeSpec,
    codebook: Vec<Vec<f64>>,
}

impl MapDecoder {
    pub fn new(spec: CodeSpec) -> Result<Self> {
        let len = spec.message_len();
        if len > MAX_ORACLE_BITS {
            return Err(Error::TooManyMessages(len));
        }
        let codebook = (0..1u64 << len)
            .map(|w| encode(&message(w, len), &spec).map(|x| x.symbols))
            .collect::<Result<_>>()?;
        Ok(Self { spec, codebook })
    }

    /// Index of the closest codeword; the smallest message wins ties.
    fn nearest(&self, y: &ReceivedWord) -> Result<(usize, f64)> {
        if y.samples.len() != self.spec.n {
            return Err(Error::Length {
                expected: self.spec.n,
                got: y.samples.len(),
            });
        }
        let gains = y.fading_gains.as_deref();
        let mut best = (0, f64::INFINITY);
        for (idx, x) in self.codebook.iter().enumerate() {
            let d: f64 = match gains {
                Some(a) => y.samples.iter().zip(x).zip(a).map(|((s, x), a)| (s - a * x).powi(2)).sum(),
                None => y.samples.iter().zip(x).map(|(s, x)| (s - x).powi(2)).sum(),
            };
            if d < best.1 {
                best = (idx, d);
            }
        }
        Ok(best)
    }

    pub fn decode_full(&self, y: &ReceivedWord) -> Result<DecodeResult> {
        let (idx, _) = self.nearest(y)?;
        let u = message(idx as u64, self.spec.message_len());
        Ok(DecodeResult {
            m_hat: source_vector(&u, &self.spec)?,
            u_hat: u,
            bit_llrs: Vec::new(),
            path_metric: None,
        })
    }

    /// Squared distances from `y` to the best and second-best codewords.
    pub fn best_two_distances(&self, y: &ReceivedWord) -> (f64, f64) {
        let mut best = [f64::INFINITY; 2];
        for x in &self.codebook {
            let d: f64 = y.samples.iter().zip(x).map(|(s, x)| (s - x).powi(2)).sum();
            if d < best[0] {
                best = [d, best[0]];
            } else if d < best[1] {
                best[1] = d;
            }
        }
        (best[0], best[1])
    }
}

/// Maximum-likelihood decoding by enumerating all messages. Equivalent to
/// MAP for equiprobable messages on AWGN (and coherent Rayleigh) channels.
pub fn map_oracle(y: &ReceivedWord, spec: &CodeSpec, _channel: &ChannelModel) -> Result<DecodeResult> {
    MapDecoder::new(spec.clone())?.decode_full(y)
}

impl BlockDecoder for MapDecoder {
    fn name(&self) -> String {
        "map".into()
    }

    fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    fn decode(&self, y: &ReceivedWord, _channel: &ChannelModel) -> Result<Vec<u8>> {
        Ok(self.decode_full(y)?.u_hat)
    }
}
