//! Noiseless decoding rules, learning difficulty and per-bit error statistics.
//!
//! Rules are XOR supports over codeword bits. Under BPSK the XOR of bits
//! `x_j` over `S` is the product of the symbols `1 - 2 x_j` over `S`, so the
//! same support describes the product form of a rule.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelModel, ReceivedWord};
use crate::construction::{CodeFamily, CodeSpec};
use crate::curriculum::CurriculumSchedule;
use crate::decoders::BlockDecoder;
use crate::encoding::{encode, encode_source, pac_unprecode, plotkin_tree};
use crate::{rng, Error, Result};

const SHARD_BLOCKS: usize = 1024;

/// For each information index, the codeword coordinates whose XOR recovers
/// that bit on the noiseless subcode. Inactive bits have an empty support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiselessRule {
    pub info_set: Vec<usize>,
    pub active_set: Vec<usize>,
    /// One sorted, 1-based support per entry of `info_set`.
    pub supports: Vec<Vec<usize>>,
}

impl NoiselessRule {
    pub fn support(&self, index: usize) -> Option<&[usize]> {
        let pos = self.info_set.iter().position(|&i| i == index)?;
        Some(&self.supports[pos])
    }

    /// Apply every rule to the codeword bits `x`, one estimate per information index.
    pub fn apply(&self, x: &[u8]) -> Vec<u8> {
        self.supports
            .iter()
            .map(|s| s.iter().fold(0u8, |acc, &j| acc ^ x[j - 1]))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("info_index,active,difficulty,support\n");
        for (i, s) in self.info_set.iter().zip(&self.supports) {
            let support: Vec<String> = s.iter().map(|j| j.to_string()).collect();
            let _ = writeln!(
                out,
                "{i},{},{},{}",
                u8::from(self.active_set.contains(i)),
                s.len(),
                support.join(" ")
            );
        }
        out
    }
}

fn check_active(spec: &CodeSpec, active: &[usize]) -> Result<Vec<usize>> {
    let mut a = active.to_vec();
    a.sort_unstable();
    a.dedup();
    if a.len() != active.len() {
        return Err(Error::IndexSet("duplicate index in active set".into()));
    }
    if let Some(i) = a.iter().find(|i| !spec.info_set.contains(i)) {
        return Err(Error::IndexSet(format!("index {i} is not an information index")));
    }
    Ok(a)
}

fn unit(n: usize, j: usize) -> Vec<u8> {
    let mut e = vec![0u8; n];
    e[j - 1] = 1;
    e
}

/// Map codeword bits back to the source vector: the Plotkin transform is its
/// own inverse, followed by feedback division for PAC codes.
fn invert(x: &[u8], spec: &CodeSpec) -> Result<Vec<u8>> {
    let v = plotkin_tree(x)?;
    Ok(match spec.family {
        CodeFamily::Pac => pac_unprecode(&v, spec.kernel()),
        _ => v,
    })
}

/// Decoding rules of the subcode where only `active` bits vary.
///
/// The inverse map is probed with unit vectors; coordinates that are zero on
/// every codeword of the subcode are dropped from each support.
pub fn noiseless_rules(spec: &CodeSpec, active: &[usize]) -> Result<NoiselessRule> {
    let active = check_active(spec, active)?;
    let n = spec.n;
    // column j of the inverse: which source bits depend on x_j
    let columns: Vec<Vec<u8>> = (1..=n).map(|j| invert(&unit(n, j), spec)).collect::<Result<_>>()?;
    let mut live = vec![false; n];
    for &a in &active {
        for (l, b) in live.iter_mut().zip(encode_source(&unit(n, a), spec)?) {
            *l |= b == 1;
        }
    }
    let supports = spec
        .info_set
        .iter()
        .map(|&i| {
            if !active.contains(&i) {
                return Vec::new();
            }
            (1..=n).filter(|&j| live[j - 1] && columns[j - 1][i - 1] == 1).collect()
        })
        .collect();
    Ok(NoiselessRule {
        info_set: spec.info_set.clone(),
        active_set: active,
        supports,
    })
}

/// Rule sizes per curriculum step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifficultyTrace {
    pub info_set: Vec<usize>,
    /// `difficulty[t][c]`: support size of information bit `info_set[c]` at step `t`.
    pub difficulty: Vec<Vec<usize>>,
}

impl DifficultyTrace {
    /// Difficulty of one information index over the steps.
    pub fn bit_trace(&self, index: usize) -> Option<Vec<usize>> {
        let c = self.info_set.iter().position(|&i| i == index)?;
        Some(self.difficulty.iter().map(|row| row[c]).collect())
    }

    pub fn max_per_step(&self) -> Vec<usize> {
        self.difficulty
            .iter()
            .map(|row| row.iter().copied().max().unwrap_or(0))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,info_index,difficulty\n");
        for (t, row) in self.difficulty.iter().enumerate() {
            for (i, d) in self.info_set.iter().zip(row) {
                let _ = writeln!(out, "{t},{i},{d}");
            }
        }
        out
    }
}

pub fn learning_difficulty(spec: &CodeSpec, schedule: &CurriculumSchedule) -> Result<DifficultyTrace> {
    let difficulty = schedule
        .steps
        .iter()
        .map(|step| {
            let rule = noiseless_rules(spec, &step.active_set)?;
            Ok(rule.supports.iter().map(Vec::len).collect())
        })
        .collect::<Result<_>>()?;
    Ok(DifficultyTrace {
        info_set: spec.info_set.clone(),
        difficulty,
    })
}

fn all_messages(k: usize) -> impl Iterator<Item = Vec<u8>> {
    (0u64..(1u64 << k)).map(move |w| (0..k).map(|i| ((w >> (k - 1 - i)) & 1) as u8).collect())
}

fn random_message<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<u8> {
    (0..k).map(|_| rng.random_range(0..2u8)).collect()
}

/// BER of `decoder` on noiseless codewords. Every message is tried when there
/// are at most `num_blocks` of them, otherwise `num_blocks` random ones.
pub fn noiseless_ber(decoder: &dyn BlockDecoder, spec: &CodeSpec, num_blocks: usize, seed: u64) -> Result<f64> {
    let k = spec.message_len();
    let channel = ChannelModel::noiseless();
    let messages: Vec<Vec<u8>> = if k < 63 && (1u64 << k) <= num_blocks as u64 {
        all_messages(k).collect()
    } else {
        let mut rng = rng::derive(seed, &[0]);
        (0..num_blocks).map(|_| random_message(k, &mut rng)).collect()
    };
    if messages.is_empty() {
        return Err(Error::Config("num_blocks must be >= 1".into()));
    }
    let ys: Vec<ReceivedWord> = messages
        .iter()
        .map(|u| Ok(ReceivedWord::noiseless(&encode(u, spec)?)))
        .collect::<Result<_>>()?;
    let decoded = decoder.decode_batch(&ys, &channel)?;
    let errors: usize = messages
        .iter()
        .zip(&decoded)
        .map(|(u, d)| u.iter().zip(d).filter(|(a, b)| a != b).count())
        .sum();
    Ok(errors as f64 / (messages.len() * k) as f64)
}

/// Per-bit error statistics over a fixed sample of blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitwiseDiagnostics {
    /// Information indices carrying message bits, in decoding order.
    pub info_indices: Vec<usize>,
    pub blocks: usize,
    pub bit_errors: Vec<usize>,
    /// Blocks whose first wrong message bit is this one.
    pub first_errors: Vec<usize>,
    pub block_errors: usize,
}

impl BitwiseDiagnostics {
    pub fn marginal_ber(&self) -> Vec<f64> {
        self.bit_errors.iter().map(|&e| e as f64 / self.blocks as f64).collect()
    }

    /// `P[bit wrong and every earlier bit right]`; these partition the block errors.
    pub fn conditional_bler_share(&self) -> Vec<f64> {
        self.first_errors.iter().map(|&e| e as f64 / self.blocks as f64).collect()
    }

    pub fn bler(&self) -> f64 {
        self.block_errors as f64 / self.blocks as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bit_index,marginal_ber,conditional_bler_share\n");
        for ((i, b), c) in self
            .info_indices
            .iter()
            .zip(self.marginal_ber())
            .zip(self.conditional_bler_share())
        {
            let _ = writeln!(out, "{i},{b},{c}");
        }
        out
    }
}

/// Error counts of `decoder` on `num_blocks` random messages through `channel`.
/// Blocks are drawn in shards of 1024 with per-shard streams, so the result
/// depends only on `seed`.
pub fn bitwise_diagnostics(
    decoder: &dyn BlockDecoder,
    spec: &CodeSpec,
    channel: &ChannelModel,
    num_blocks: usize,
    seed: u64,
) -> Result<BitwiseDiagnostics> {
    if num_blocks == 0 {
        return Err(Error::Config("num_blocks must be >= 1".into()));
    }
    let k = spec.message_len();
    let shards = num_blocks.div_ceil(SHARD_BLOCKS);
    let counts = (0..shards)
        .into_par_iter()
        .map(|s| {
            let size = SHARD_BLOCKS.min(num_blocks - s * SHARD_BLOCKS);
            let mut rng = rng::derive(seed, &[s as u64]);
            let mut bit_errors = vec![0usize; k];
            let mut first_errors = vec![0usize; k];
            let mut messages = Vec::with_capacity(size);
            let mut ys = Vec::with_capacity(size);
            for _ in 0..size {
                let u = random_message(k, &mut rng);
                ys.push(channel.transmit(&encode(&u, spec)?, &mut rng));
                messages.push(u);
            }
            for (u, d) in messages.iter().zip(decoder.decode_batch(&ys, channel)?) {
                let mut first = true;
                for c in 0..k {
                    if u[c] != d[c] {
                        bit_errors[c] += 1;
                        if first {
                            first_errors[c] += 1;
                            first = false;
                        }
                    }
                }
            }
            Ok((bit_errors, first_errors))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = BitwiseDiagnostics {
        info_indices: spec.info_set[..k].to_vec(),
        blocks: num_blocks,
        bit_errors: vec![0; k],
        first_errors: vec![0; k],
        block_errors: 0,
    };
    for (b, f) in counts {
        for c in 0..k {
            out.bit_errors[c] += b[c];
            out.first_errors[c] += f[c];
        }
    }
    out.block_errors = out.first_errors.iter().sum();
    Ok(out)
}
