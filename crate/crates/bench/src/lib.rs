//! Shared fixtures for the decoder benchmarks.

use polarcraft::channels::{ChannelModel, ReceivedWord};
use polarcraft::construction::build_polar_spec;
use polarcraft::encoding::encode;
use polarcraft::{rng, CodeSpec, Result};

/// A polar code with `count` noisy observations of random messages.
pub struct Workload {
    pub spec: CodeSpec,
    pub channel: ChannelModel,
    pub words: Vec<ReceivedWord>,
    pub llrs: Vec<Vec<f64>>,
}

pub fn polar_workload(n: usize, k: usize, snr_db: f64, count: usize, seed: u64) -> Result<Workload> {
    let spec = build_polar_spec(n, k, 0.5, None)?;
    let channel = ChannelModel::awgn_snr(snr_db);
    let mut r = rng::derive(seed, &[]);
    let mut words = Vec::with_capacity(count);
    for _ in 0..count {
        let u: Vec<u8> = (0..k).map(|_| rand::Rng::random_range(&mut r, 0..2u8)).collect();
        words.push(channel.transmit(&encode(&u, &spec)?, &mut r));
    }
    let llrs = words.iter().map(|y| channel.llr(y)).collect::<Result<_>>()?;
    Ok(Workload {
        spec,
        channel,
        words,
        llrs,
    })
}
