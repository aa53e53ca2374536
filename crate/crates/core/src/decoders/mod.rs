//! Classical decoders: successive cancellation, list decoding and an
//! exhaustive maximum-likelihood oracle.

mod list;
mod map;
mod sc;

use serde::{Deserialize, Serialize};

use crate::channels::{ChannelModel, ReceivedWord};
use crate::construction::CodeSpec;
use crate::Result;

pub use list::{pac_sc_decode, path_penalty, scl_decode, SclDecoder};
pub use map::{map_oracle, MapDecoder, MAX_ORACLE_BITS};
pub use sc::{sc_decode, ScDecoder};

/// Inputs to the exact `lse` are clamped to this magnitude.
pub const LLR_CLAMP: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LseMode {
    #[default]
    Exact,
    MinSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMode {
    #[default]
    Exact,
    Approx,
}

/// Check-node combination `log((1 + e^(a+b)) / (e^a + e^b))`.
#[inline]
pub fn lse(a: f64, b: f64, mode: LseMode) -> f64 {
    match mode {
        LseMode::MinSum => a.abs().min(b.abs()) * a.signum() * b.signum(),
        LseMode::Exact => {
            let a = a.clamp(-LLR_CLAMP, LLR_CLAMP);
            let b = b.clamp(-LLR_CLAMP, LLR_CLAMP);
            if a == 0.0 || b == 0.0 {
                return 0.0;
            }
            let sign = a.signum() * b.signum();
            sign * a.abs().min(b.abs()) + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
        }
    }
}

/// Hard decision on an LLR; `L = 0` decides 0.
#[inline]
pub fn hard(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// User message (CRC payload for CRC-aided codes).
    pub u_hat: Vec<u8>,
    /// Decoded source vector, before precoding.
    pub m_hat: Vec<u8>,
    /// Conditional LLR at each information index (successive cancellation only).
    pub bit_llrs: Vec<f64>,
    /// Path metric of the selected candidate (list decoding only).
    pub path_metric: Option<f64>,
}

/// Anything that turns a channel observation into a message estimate.
pub trait BlockDecoder: Send + Sync {
    fn name(&self) -> String;

    fn spec(&self) -> &CodeSpec;

    fn decode(&self, y: &ReceivedWord, channel: &ChannelModel) -> Result<Vec<u8>>;

    fn decode_batch(&self, ys: &[ReceivedWord], channel: &ChannelModel) -> Result<Vec<Vec<u8>>> {
        ys.iter().map(|y| self.decode(y, channel)).collect()
    }
}
