use std::fs::File;
use std::io::{BufWriter, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{env_threads, ExperimentConfig};
use crate::channels::ChannelModel;
use crate::construction::CodeSpec;
use crate::decoders::BlockDecoder;
use crate::encoding::encode;
use crate::{rng, Error, Result};

/// Blocks per shard; each shard draws from its own random stream.
pub const SHARD_BLOCKS: usize = 1024;
pub const CSV_HEADER: &str = "snr_db,blocks,bit_errors,block_errors,ber,bler";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MinBlockErrors,
    MaxBlocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPoint {
    pub snr_db: f64,
    pub blocks: usize,
    pub bit_errors: usize,
    pub block_errors: usize,
    pub ber: f64,
    pub bler: f64,
    pub stopped_by: StopReason,
}

impl SimPoint {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.snr_db, self.blocks, self.bit_errors, self.block_errors, self.ber, self.bler
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub decoder: String,
    pub code: CodeSpec,
    pub config_hash: String,
    pub seed: u64,
    pub points: Vec<SimPoint>,
    pub wall_time_s: f64,
    /// False when the run was stopped before the last point.
    pub complete: bool,
}

impl SimResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&p.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn bers(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.snr_db, p.ber)).collect()
    }
}

/// Run-time knobs that do not change the result.
#[derive(Debug, Default, Clone, Copy)]
pub struct SimOptions<'a> {
    /// Worker threads; falls back to `POLARCRAFT_THREADS`, then rayon's default.
    pub threads: Option<usize>,
    /// Checked between batches of shards; completed points are kept.
    pub stop: Option<&'a AtomicBool>,
}

#[derive(Default)]
struct Counts {
    blocks: usize,
    bit_errors: usize,
    block_errors: usize,
}

fn run_shard(
    decoder: &dyn BlockDecoder,
    spec: &CodeSpec,
    channel: &ChannelModel,
    seed: u64,
    point: usize,
    shard: usize,
    size: usize,
) -> Result<Counts> {
    let k = spec.message_len();
    let mut rng = rng::derive(seed, &[point as u64, shard as u64]);
    let mut messages = Vec::with_capacity(size);
    let mut ys = Vec::with_capacity(size);
    for _ in 0..size {
        let u: Vec<u8> = (0..k).map(|_| rng.random_range(0..2u8)).collect();
        ys.push(channel.transmit(&encode(&u, spec)?, &mut rng));
        messages.push(u);
    }
    let mut c = Counts {
        blocks: size,
        ..Default::default()
    };
    for (u, d) in messages.iter().zip(decoder.decode_batch(&ys, channel)?) {
        let wrong = u.iter().zip(&d).filter(|(a, b)| a != b).count();
        c.bit_errors += wrong;
        c.block_errors += usize::from(wrong > 0);
    }
    Ok(c)
}

/// Build the decoder from `config` and run the sweep.
pub fn simulate(config: &ExperimentConfig) -> Result<SimResult> {
    config.validate()?;
    let spec = config.code.build()?;
    let decoder = config.decoder.build(&spec)?;
    simulate_with(config, decoder.as_ref(), SimOptions::default())
}

/// Run the sweep of `config` with an existing decoder.
///
/// Shards are consumed in index order and the stopping rule is checked after
/// each one, so the counts depend only on the seed, never on the number of
/// workers. Rows are appended to the CSV output as points finish.
pub fn simulate_with(config: &ExperimentConfig, decoder: &dyn BlockDecoder, opts: SimOptions<'_>) -> Result<SimResult> {
    config.validate()?;
    let spec = config.code.build()?;
    if decoder.spec() != &spec {
        return Err(Error::Config(format!("decoder {} is built for a different code", decoder.name())));
    }
    let threads = opts.threads.or_else(env_threads).unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let mut csv = match &config.output.csv {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            writeln!(w, "{CSV_HEADER}")?;
            w.flush()?;
            Some(w)
        }
        None => None,
    };

    let start = Instant::now();
    let rule = config.stopping;
    let k = spec.message_len();
    let mut points = Vec::new();
    let mut complete = true;
    'sweep: for (pi, snr) in config.sweep.points()?.into_iter().enumerate() {
        let channel = config.channel.at_snr(snr)?;
        let mut total = Counts::default();
        let mut shard = 0;
        let stopped_by = loop {
            if opts.stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
                complete = false;
                break 'sweep;
            }
            let sizes: Vec<(usize, usize)> = (0..threads)
                .map(|i| shard + i)
                .map(|s| (s, SHARD_BLOCKS.min(rule.max_blocks.saturating_sub(s * SHARD_BLOCKS))))
                .filter(|&(_, size)| size > 0)
                .collect();
            let batch: Vec<Counts> = pool.install(|| {
                sizes
                    .par_iter()
                    .map(|&(s, size)| run_shard(decoder, &spec, &channel, config.seed, pi, s, size))
                    .collect::<Result<_>>()
            })?;
            let mut reason = None;
            for c in batch {
                shard += 1;
                total.blocks += c.blocks;
                total.bit_errors += c.bit_errors;
                total.block_errors += c.block_errors;
                if total.block_errors >= rule.min_block_errors {
                    reason = Some(StopReason::MinBlockErrors);
                } else if total.blocks >= rule.max_blocks {
                    reason = Some(StopReason::MaxBlocks);
                }
                if reason.is_some() {
                    break;
                }
            }
            if let Some(r) = reason {
                break r;
            }
        };
        let p = SimPoint {
            snr_db: snr,
            blocks: total.blocks,
            bit_errors: total.bit_errors,
            block_errors: total.block_errors,
            ber: total.bit_errors as f64 / (total.blocks * k) as f64,
            bler: total.block_errors as f64 / total.blocks as f64,
            stopped_by,
        };
        log::info!("{} snr {snr} dB: ber {:.3e} bler {:.3e} over {} blocks", decoder.name(), p.ber, p.bler, p.blocks);
        if let Some(w) = csv.as_mut() {
            writeln!(w, "{}", p.csv_row())?;
            w.flush()?;
        }
        points.push(p);
    }

    let result = SimResult {
        decoder: decoder.name(),
        code: spec,
        config_hash: config.hash(),
        seed: config.seed,
        points,
        wall_time_s: start.elapsed().as_secs_f64(),
        complete,
    };
    if let Some(path) = &config.output.json {
        std::fs::write(path, serde_json::to_string_pretty(&result)?)?;
    }
    Ok(result)
}

/// SNR at which a BER curve crosses `target`, interpolating linearly in
/// `log10(BER)` between the first pair of points that brackets it.
pub fn snr_at_ber(curve: &[(f64, f64)], target: f64) -> Result<f64> {
    for w in curve.windows(2) {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        if b0 >= target && target >= b1 && b1 > 0.0 {
            if b0 == b1 {
                return Ok(s0);
            }
            let t = (b0.log10() - target.log10()) / (b0.log10() - b1.log10());
            return Ok(s0 + t * (s1 - s0));
        }
    }
    Err(Error::NotBracketed(target))
}

/// How much more SNR `a` needs than `b` to reach `target_ber`.
pub fn gap_at_ber(a: &SimResult, b: &SimResult, target_ber: f64) -> Result<f64> {
    Ok(snr_at_ber(&a.bers(), target_ber)? - snr_at_ber(&b.bers(), target_ber)?)
}
