//! Binary-input channels and LLR demodulation.
//!
//! SNR is per BPSK symbol: `SNR = -10 log10(sigma^2)`. A channel with
//! `sigma = 0` is the noiseless channel; its LLRs use `sigma = 1e-3` so they
//! stay finite while carrying the correct signs.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::encoding::Codeword;
use crate::{Error, Result};

/// Degrees of freedom used for Student-t noise when none is given.
pub const DEFAULT_NU: f64 = 3.0;
const NOISELESS_LLR_SIGMA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Awgn,
    Rayleigh,
    StudentT,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    pub sigma: f64,
    /// Degrees of freedom; only read for Student-t noise.
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedWord {
    pub samples: Vec<f64>,
    /// Fading amplitudes, present for Rayleigh channels only.
    pub fading_gains: Option<Vec<f64>>,
}

impl ReceivedWord {
    /// Noiseless observation of a codeword.
    pub fn noiseless(x: &Codeword) -> Self {
        Self {
            samples: x.symbols.clone(),
            fading_gains: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn snr_to_sigma(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

pub fn sigma_to_snr(sigma: f64) -> f64 {
    -20.0 * sigma.log10()
}

impl ChannelModel {
    pub fn new(kind: ChannelKind, sigma: f64, nu: Option<f64>) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Channel(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        let nu = nu.unwrap_or(DEFAULT_NU);
        if kind == ChannelKind::StudentT && !(nu > 2.0) {
            return Err(Error::Channel(format!("Student-t needs nu > 2, got {nu}")));
        }
        Ok(Self { kind, sigma, nu })
    }

    pub fn awgn(sigma: f64) -> Result<Self> {
        Self::new(ChannelKind::Awgn, sigma, None)
    }

    pub fn awgn_snr(snr_db: f64) -> Self {
        Self {
            kind: ChannelKind::Awgn,
            sigma: snr_to_sigma(snr_db),
            nu: DEFAULT_NU,
        }
    }

    pub fn noiseless() -> Self {
        Self {
            kind: ChannelKind::Awgn,
            sigma: 0.0,
            nu: DEFAULT_NU,
        }
    }

    /// Same channel type at a different SNR.
    pub fn at_snr(&self, snr_db: f64) -> Self {
        Self {
            sigma: snr_to_sigma(snr_db),
            ..*self
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma == 0.0
    }

    fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            ChannelKind::StudentT => {
                let t: f64 = StudentT::new(self.nu).expect("nu > 2").sample(rng);
                t * ((self.nu - 2.0) / self.nu).sqrt()
            }
            _ => StandardNormal.sample(rng),
        }
    }

    pub fn transmit<R: Rng + ?Sized>(&self, x: &Codeword, rng: &mut R) -> ReceivedWord {
        let n = x.len();
        let mut samples = Vec::with_capacity(n);
        let mut gains = (self.kind == ChannelKind::Rayleigh).then(|| Vec::with_capacity(n));
        for &s in &x.symbols {
            let gain = match gains.as_mut() {
                Some(g) => {
                    // Rayleigh amplitude with E[a^2] = 1
                    let u: f64 = 1.0 - rng.random::<f64>();
                    let a = (-u.ln()).sqrt();
                    g.push(a);
                    a
                }
                None => 1.0,
            };
            let z = if self.sigma == 0.0 { 0.0 } else { self.sigma * self.noise(rng) };
            samples.push(gain * s + z);
        }
        ReceivedWord {
            samples,
            fading_gains: gains,
        }
    }

    /// Bit LLRs `log P(x=0|y) / P(x=1|y)`. Student-t observations use the
    /// Gaussian LLR.
    pub fn llr(&self, y: &ReceivedWord) -> Result<Vec<f64>> {
        let sigma = if self.sigma == 0.0 { NOISELESS_LLR_SIGMA } else { self.sigma };
        let scale = 2.0 / (sigma * sigma);
        match self.kind {
            ChannelKind::Rayleigh => {
                let gains = y
                    .fading_gains
                    .as_ref()
                    .ok_or_else(|| Error::Channel("Rayleigh LLR needs fading gains".into()))?;
                if gains.len() != y.samples.len() {
                    return Err(Error::Length {
                        expected: y.samples.len(),
                        got: gains.len(),
                    });
                }
                Ok(y.samples.iter().zip(gains).map(|(s, a)| scale * a * s).collect())
            }
            _ => Ok(y.samples.iter().map(|s| scale * s).collect()),
        }
    }
}

/// Channel configuration as stored in JSON files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ChannelConfig {
    pub fn model(&self) -> Result<ChannelModel> {
        let sigma = match (self.snr_db, self.sigma) {
            (Some(snr), None) => snr_to_sigma(snr),
            (None, Some(s)) => s,
            (None, None) => 1.0,
            (Some(_), Some(_)) => {
                return Err(Error::Channel("give either snr_db or sigma, not both".into()))
            }
        };
        ChannelModel::new(self.kind, sigma, self.nu)
    }
}
