//! Monte Carlo experiments: configuration, BER/BLER sweeps, SNR gaps and
//! decoder throughput.

mod simulate;
mod throughput;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::{ChannelKind, ChannelModel, DEFAULT_NU};
use crate::construction::{
    build_crc_polar_spec, build_pac_spec, build_polar_spec, CodeFamily, CodeSpec, CrcPoly, DEFAULT_PAC_KERNEL,
    DEFAULT_Z0,
};
use crate::decoders::{BlockDecoder, LseMode, MapDecoder, MetricMode, ScDecoder, SclDecoder};
use crate::neural::{Checkpoint, NeuralDecoder};
use crate::{Error, Result};

pub use simulate::{gap_at_ber, simulate, simulate_with, snr_at_ber, SimOptions, SimPoint, SimResult, StopReason, CSV_HEADER, SHARD_BLOCKS};
pub use throughput::{throughput_bench, ThroughputReport};

/// Environment variable capping the number of simulation worker threads.
pub const THREADS_ENV: &str = "POLARCRAFT_THREADS";

fn default_z0() -> f64 {
    DEFAULT_Z0
}

/// Code description as written in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeConfig {
    pub family: CodeFamily,
    pub n: usize,
    pub k: usize,
    #[serde(default = "default_z0")]
    pub z0: f64,
    /// Explicit information set (polar only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info_set: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pac_kernel: Option<Vec<u8>>,
    /// CRC generator as an integer, bit `i` holding the coefficient of `x^i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crc_poly: Option<u64>,
}

impl CodeConfig {
    pub fn polar(n: usize, k: usize) -> Self {
        Self {
            family: CodeFamily::Polar,
            n,
            k,
            z0: DEFAULT_Z0,
            info_set: None,
            pac_kernel: None,
            crc_poly: None,
        }
    }

    pub fn build(&self) -> Result<CodeSpec> {
        match self.family {
            CodeFamily::Polar => build_polar_spec(self.n, self.k, self.z0, self.info_set.as_deref()),
            CodeFamily::Pac => build_pac_spec(
                self.n,
                self.k,
                self.pac_kernel.as_deref().unwrap_or(&DEFAULT_PAC_KERNEL),
            ),
            CodeFamily::CrcPolar => {
                let poly = match self.crc_poly {
                    Some(bits) => CrcPoly::from_bits(bits)?,
                    None => CrcPoly::crc8(),
                };
                build_crc_polar_spec(self.n, self.k, poly, self.z0)
            }
        }
    }
}

fn default_nu() -> f64 {
    DEFAULT_NU
}

/// Channel type for a sweep; the noise level comes from the SNR points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepChannel {
    pub kind: ChannelKind,
    #[serde(default = "default_nu")]
    pub nu: f64,
    /// Transmit without noise at every point.
    #[serde(default)]
    pub noiseless: bool,
}

impl Default for SweepChannel {
    fn default() -> Self {
        Self {
            kind: ChannelKind::Awgn,
            nu: DEFAULT_NU,
            noiseless: false,
        }
    }
}

impl SweepChannel {
    pub fn at_snr(&self, snr_db: f64) -> Result<ChannelModel> {
        if self.noiseless {
            return Ok(ChannelModel {
                kind: self.kind,
                ..ChannelModel::noiseless()
            });
        }
        let nu = (self.kind == ChannelKind::StudentT).then_some(self.nu);
        ChannelModel::new(self.kind, crate::channels::snr_to_sigma(snr_db), nu)
    }
}

fn default_list_size() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecoderConfig {
    Sc {
        #[serde(default)]
        lse: LseMode,
    },
    Scl {
        #[serde(default = "default_list_size")]
        list_size: usize,
        #[serde(default)]
        metric: MetricMode,
        #[serde(default)]
        lse: LseMode,
    },
    Map,
    Neural {
        checkpoint: PathBuf,
    },
}

impl DecoderConfig {
    /// Instantiate the decoder for `spec`.
    pub fn build(&self, spec: &CodeSpec) -> Result<Box<dyn BlockDecoder>> {
        Ok(match self {
            DecoderConfig::Sc { lse } => Box::new(ScDecoder::new(spec.clone(), *lse)),
            DecoderConfig::Scl { list_size, metric, lse } => {
                Box::new(SclDecoder::new(spec.clone(), *list_size, *metric, *lse)?)
            }
            DecoderConfig::Map => Box::new(MapDecoder::new(spec.clone())?),
            DecoderConfig::Neural { checkpoint } => {
                let ckpt = Checkpoint::load(checkpoint)?;
                if &ckpt.spec != spec {
                    return Err(Error::Config(format!(
                        "checkpoint {} was trained for a different code",
                        checkpoint.display()
                    )));
                }
                Box::new(NeuralDecoder::new(ckpt.spec, ckpt.params)?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn single(snr_db: f64) -> Self {
        Self {
            start: snr_db,
            stop: snr_db,
            step: 1.0,
        }
    }

    /// SNR points from `start` to `stop` inclusive.
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !self.start.is_finite() || !self.stop.is_finite() || self.stop < self.start {
            return Err(Error::Config("sweep needs finite start <= stop and step > 0".into()));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub min_block_errors: usize,
    pub max_blocks: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            min_block_errors: 100,
            max_blocks: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// JSON sidecar with the full result and config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub code: CodeConfig,
    #[serde(default)]
    pub channel: SweepChannel,
    pub decoder: DecoderConfig,
    pub sweep: Sweep,
    #[serde(default)]
    pub stopping: StoppingRule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.sweep.points()?;
        if self.stopping.min_block_errors == 0 || self.stopping.max_blocks == 0 {
            return Err(Error::Config("min_block_errors and max_blocks must be >= 1".into()));
        }
        self.code.build()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, output paths excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputPaths::default();
        let text = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Worker count from `POLARCRAFT_THREADS`, if set to a positive integer.
pub fn env_threads() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&t: &usize| t > 0)
}
