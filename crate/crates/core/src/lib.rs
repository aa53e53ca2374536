//! Polar and PAC channel codes with classical and learned decoders.
//!
//! The crate covers the whole pipeline of a decoding experiment:
//!
//! - [`construction`]: reliability ranking, information sets, PAC and CRC profiles.
//! - [`encoding`]: the Plotkin transform, message embedding, convolutional
//!   precoding, CRC attachment and BPSK modulation.
//! - [`channels`]: AWGN, Rayleigh and Student-t channels plus LLR demodulation.
//! - [`decoders`]: successive cancellation, list decoding and an exhaustive
//!   maximum-likelihood oracle.
//! - [`neural`]: a sequential two-layer GRU decoder with hand-written
//!   backpropagation and checkpoint files.
//! - [`curriculum`]: subcode curricula, training data, AdamW and the training loop.
//! - [`analysis`]: noiseless decoding rules, learning difficulty and per-bit
//!   error diagnostics.
//! - [`harness`]: Monte Carlo BER/BLER sweeps, SNR gaps and throughput.

pub mod analysis;
pub mod channels;
pub mod construction;
pub mod curriculum;
pub mod decoders;
pub mod encoding;
mod error;
pub mod harness;
pub mod neural;
pub mod rng;

pub use channels::{ChannelKind, ChannelModel, ReceivedWord};
pub use construction::{CodeFamily, CodeSpec, CrcPoly};
pub use decoders::{BlockDecoder, DecodeResult, LseMode, MetricMode};
pub use encoding::Codeword;
pub use error::{Error, Result};
pub use neural::GruDecoderParams;

