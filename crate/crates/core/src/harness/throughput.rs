use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelModel, ReceivedWord};
use crate::decoders::BlockDecoder;
use crate::encoding::encode;
use crate::{rng, Error, Result};

const TRIALS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub decoder: String,
    pub batch_size: usize,
    /// Information bits per second, in Mbps, one entry per trial.
    pub trials_mbps: Vec<f64>,
    pub mean_mbps: f64,
    pub std_mbps: f64,
}

/// Decoded information bits per second. Each of five trials decodes the same
/// pre-generated batch repeatedly for at least `duration`.
pub fn throughput_bench(
    decoder: &dyn BlockDecoder,
    channel: &ChannelModel,
    batch_size: usize,
    duration: Duration,
    seed: u64,
) -> Result<ThroughputReport> {
    if duration.is_zero() {
        return Err(Error::Config("benchmark duration must be positive".into()));
    }
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be >= 1".into()));
    }
    let spec = decoder.spec();
    let k = spec.message_len();
    let mut rng = rng::derive(seed, &[]);
    let ys: Vec<ReceivedWord> = (0..batch_size)
        .map(|_| {
            let u: Vec<u8> = (0..k).map(|_| rng.random_range(0..2u8)).collect();
            Ok(channel.transmit(&encode(&u, spec)?, &mut rng))
        })
        .collect::<Result<_>>()?;
    decoder.decode_batch(&ys, channel)?;

    let mut trials_mbps = Vec::with_capacity(TRIALS);
    for _ in 0..TRIALS {
        let start = Instant::now();
        let mut blocks = 0usize;
        while start.elapsed() < duration {
            std::hint::black_box(decoder.decode_batch(&ys, channel)?);
            blocks += batch_size;
        }
        let secs = start.elapsed().as_secs_f64();
        trials_mbps.push((blocks * k) as f64 / secs / 1e6);
    }
    let mean = trials_mbps.iter().sum::<f64>() / TRIALS as f64;
    let var = trials_mbps.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (TRIALS - 1) as f64;
    Ok(ThroughputReport {
        decoder: decoder.name(),
        batch_size,
        trials_mbps,
        mean_mbps: mean,
        std_mbps: var.sqrt(),
    })
}
