use rand::Rng;

use crate::channels::{ChannelModel, ReceivedWord};
use crate::construction::{CodeFamily, CodeSpec};
use crate::decoders::{sc_decode, LseMode};
use crate::encoding::{encode_source, modulate, source_vector};
use crate::{rng, Error, Result};

const SNR_GRID_START: f64 = -4.0;
const SNR_GRID_STEP: f64 = 0.25;
const SNR_GRID_POINTS: usize = 49;
const PROBE_BLOCKS: usize = 10_000;
const TARGET_BER: f64 = 3e-2;

/// Received words with their source vectors.
#[derive(Debug, Clone)]
pub struct TrainingBatch {
    pub ys: Vec<ReceivedWord>,
    /// Source vectors `m`, the decoder's targets.
    pub ms: Vec<Vec<u8>>,
}

/// A seeded, fixed subset of message patterns; the rest are held out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookSubset {
    pub seed: u64,
    pub keep_fraction: f64,
}

impl CodebookSubset {
    pub fn contains(&self, pattern: &[u8]) -> bool {
        let word = pattern
            .iter()
            .fold(0xcbf2_9ce4_8422_2325_u64, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3));
        let mut r = rng::derive(self.seed, &[word]);
        r.random::<f64>() < self.keep_fraction
    }
}

/// Channel observation of the codeword for source vector `m`.
pub fn source_to_received<R: Rng + ?Sized>(
    m: &[u8],
    spec: &CodeSpec,
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<ReceivedWord> {
    let x = modulate(&encode_source(m, spec)?);
    Ok(channel.transmit(&x, rng))
}

/// Training data for the subcode with active set `active`: those bits are
/// uniform, every other source bit is zero. On a CRC-aided code the full
/// active set yields CRC-consistent codewords.
pub fn gen_training_batch<R: Rng + ?Sized>(
    spec: &CodeSpec,
    active: &[usize],
    snr_db: f64,
    batch_size: usize,
    rng: &mut R,
    subset: Option<&CodebookSubset>,
) -> Result<TrainingBatch> {
    if active.is_empty() {
        return Err(Error::IndexSet("empty active set".into()));
    }
    if let Some(&bad) = active.iter().find(|i| !spec.info_set.contains(i)) {
        return Err(Error::IndexSet(format!("index {bad} is not an information index")));
    }
    let full_crc = spec.family == CodeFamily::CrcPolar && active.len() == spec.k;
    let pattern_len = if full_crc { spec.message_len() } else { active.len() };
    let channel = ChannelModel::awgn_snr(snr_db);
    let mut ys = Vec::with_capacity(batch_size);
    let mut ms = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        let mut pattern = vec![0u8; pattern_len];
        let mut tries = 0;
        loop {
            for b in pattern.iter_mut() {
                *b = rng.random_range(0..2);
            }
            match subset {
                Some(s) if !s.contains(&pattern) => {
                    tries += 1;
                    if tries > 10_000 {
                        return Err(Error::Config("codebook subset admits no messages".into()));
                    }
                }
                _ => break,
            }
        }
        let m = if full_crc {
            source_vector(&pattern, spec)?
        } else {
            let mut m = vec![0u8; spec.n];
            for (&i, &b) in active.iter().zip(&pattern) {
                m[i - 1] = b;
            }
            m
        };
        ys.push(source_to_received(&m, spec, &channel, rng)?);
        ms.push(m);
    }
    Ok(TrainingBatch { ys, ms })
}

/// SC bit error rate on the subcode `active` at one SNR.
fn probe_ber(sub: &CodeSpec, snr_db: f64, seed: u64) -> Result<f64> {
    let mut rng = rng::derive(seed, &[0x5e1ec7]);
    let channel = ChannelModel::awgn_snr(snr_db);
    let mut errors = 0usize;
    for _ in 0..PROBE_BLOCKS {
        let u: Vec<u8> = (0..sub.k).map(|_| rng.random_range(0..2)).collect();
        let m = source_vector(&u, sub)?;
        let y = source_to_received(&m, sub, &channel, &mut rng)?;
        let dec = sc_decode(&channel.llr(&y)?, sub, LseMode::Exact)?;
        errors += dec.u_hat.iter().zip(&u).filter(|(a, b)| a != b).count();
    }
    Ok(errors as f64 / (PROBE_BLOCKS * sub.k) as f64)
}

/// Training SNR for a subcode: the point of a 0.25 dB grid over -4..8 dB
/// whose SC bit error rate is closest to 3e-2 (in log scale), found by binary
/// search. Falls back to a grid edge when the target is not bracketed.
pub fn select_train_snr(spec: &CodeSpec, active: &[usize], seed: u64) -> Result<f64> {
    let sub = spec.with_info_set(active)?;
    let grid = |i: usize| SNR_GRID_START + SNR_GRID_STEP * i as f64;
    let ber = |i: usize| probe_ber(&sub, grid(i), seed);
    let (mut lo, mut hi) = (0, SNR_GRID_POINTS - 1);
    let (ber_lo, ber_hi) = (ber(lo)?, ber(hi)?);
    if ber_lo < TARGET_BER {
        log::warn!("SC BER {ber_lo:.3e} already below target at {} dB", grid(lo));
        return Ok(grid(lo));
    }
    if ber_hi >= TARGET_BER {
        log::warn!("SC BER {ber_hi:.3e} still above target at {} dB", grid(hi));
        return Ok(grid(hi));
    }
    let (mut b_lo, mut b_hi) = (ber_lo, ber_hi);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let b = ber(mid)?;
        if b >= TARGET_BER {
            lo = mid;
            b_lo = b;
        } else {
            hi = mid;
            b_hi = b;
        }
    }
    let dist = |b: f64| (b.max(1e-12).log10() - TARGET_BER.log10()).abs();
    let (pick, b) = if dist(b_lo) <= dist(b_hi) { (lo, b_lo) } else { (hi, b_hi) };
    if !(1e-2..=1e-1).contains(&b) {
        log::warn!("training SNR {} dB gives SC BER {b:.3e}, outside [1e-2, 1e-1]", grid(pick));
    }
    log::debug!("active set {active:?}: training SNR {} dB (SC BER {b:.3e})", grid(pick));
    Ok(grid(pick))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_crc_polar_spec, build_polar_spec, CrcPoly};
    use crate::encoding::{crc_check, extract};

    #[test]
    fn inactive_bits_stay_frozen() {
        let spec = build_polar_spec(4, 2, 0.5, Some(&[2, 4])).unwrap();
        let mut rng = rng::derive(1, &[]);
        let batch = gen_training_batch(&spec, &[2], 3.0, 500, &mut rng, None).unwrap();
        assert!(batch.ms.iter().all(|m| m[0] == 0 && m[2] == 0 && m[3] == 0));
        assert!(batch.ms.iter().any(|m| m[1] == 1));
    }

    #[test]
    fn full_batch_bits_are_balanced() {
        let spec = build_polar_spec(16, 8, 0.5, None).unwrap();
        let mut rng = rng::derive(2, &[]);
        let batch = gen_training_batch(&spec, &spec.info_set, 1.0, 4096, &mut rng, None).unwrap();
        for &i in &spec.info_set {
            let mean = batch.ms.iter().map(|m| f64::from(m[i - 1])).sum::<f64>() / 4096.0;
            assert!((mean - 0.5).abs() < 0.02, "index {i}: {mean}");
        }
    }

    #[test]
    fn crc_code_batches_pass_crc() {
        let spec = build_crc_polar_spec(32, 16, CrcPoly::crc3(), 0.5).unwrap();
        let mut rng = rng::derive(3, &[]);
        let batch = gen_training_batch(&spec, &spec.info_set, 1.0, 100, &mut rng, None).unwrap();
        let poly = spec.crc_poly.as_ref().unwrap();
        assert!(batch.ms.iter().all(|m| crc_check(&extract(m, &spec), poly)));
    }

    #[test]
    fn subset_filter_excludes_held_out_messages() {
        let spec = build_polar_spec(16, 8, 0.5, None).unwrap();
        let subset = CodebookSubset {
            seed: 9,
            keep_fraction: 0.5,
        };
        let kept = (0u32..256)
            .filter(|w| subset.contains(&(0..8).map(|i| ((w >> i) & 1) as u8).collect::<Vec<_>>()))
            .count();
        assert!((80..=176).contains(&kept), "kept {kept}");
        let mut rng = rng::derive(4, &[]);
        for _ in 0..20 {
            let batch = gen_training_batch(&spec, &spec.info_set, 1.0, 5000, &mut rng, Some(&subset)).unwrap();
            assert!(batch.ms.iter().all(|m| subset.contains(&extract(m, &spec))));
        }
    }

    #[test]
    fn rejects_bad_active_sets() {
        let spec = build_polar_spec(8, 4, 0.5, None).unwrap();
        let mut rng = rng::derive(5, &[]);
        assert!(gen_training_batch(&spec, &[], 1.0, 4, &mut rng, None).is_err());
        assert!(gen_training_batch(&spec, &[1], 1.0, 4, &mut rng, None).is_err());
    }

    #[test]
    fn reliable_single_bit_gets_lowest_grid_point() {
        let spec = build_polar_spec(16, 8, 0.5, None).unwrap();
        assert_eq!(select_train_snr(&spec, &[16], 1).unwrap(), SNR_GRID_START);
    }
}
