//! Code construction: information sets for polar, PAC and CRC-aided polar codes.
//!
//! Indices are 1-based throughout this module and in serialized specs.
//! Polar reliabilities come from the Bhattacharyya recursion over the Plotkin
//! tree (left child `2z - z^2`, right child `z^2`); PAC codes use the
//! Reed-Muller profile, ranking index `i` by the Hamming weight of `i - 1`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default PAC convolution kernel `c = (1,0,1,1,0,1,1)`.
pub const DEFAULT_PAC_KERNEL: [u8; 7] = [1, 0, 1, 1, 0, 1, 1];
/// Default design parameter for the Bhattacharyya recursion.
pub const DEFAULT_Z0: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeFamily {
    Polar,
    Pac,
    CrcPolar,
}

/// CRC generator polynomial over GF(2).
///
/// `coeffs[i]` is the coefficient of `x^i`; both the constant and the leading
/// coefficient are 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CrcPoly {
    coeffs: Vec<u8>,
}

impl CrcPoly {
    pub fn new(coeffs: Vec<u8>) -> Result<Self> {
        if coeffs.len() < 2
            || coeffs.iter().any(|&b| b > 1)
            || coeffs[0] != 1
            || *coeffs.last().unwrap() != 1
        {
            return Err(Error::Config(
                "CRC polynomial needs degree >= 1 and nonzero constant term".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    /// Polynomial from an integer whose bit `i` is the coefficient of `x^i`,
    /// so `0b1011` is `x^3 + x + 1`.
    pub fn from_bits(word: u64) -> Result<Self> {
        if word == 0 {
            return Err(Error::Config("zero CRC polynomial".into()));
        }
        let degree = 63 - word.leading_zeros() as usize;
        Self::new((0..=degree).map(|i| ((word >> i) & 1) as u8).collect())
    }

    /// `x^3 + x + 1`
    pub fn crc3() -> Self {
        Self::from_bits(0b1011).unwrap()
    }

    /// `x^8 + x^2 + x + 1`
    pub fn crc8() -> Self {
        Self::from_bits(0x107).unwrap()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[u8] {
        &self.coeffs
    }
}

/// Immutable description of a code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub family: CodeFamily,
    pub n: usize,
    pub k: usize,
    /// Sorted, 1-based information indices.
    pub info_set: Vec<usize>,
    /// Permutation of `1..=n`, least reliable first.
    pub reliability_order: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pac_kernel: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crc_poly: Option<CrcPoly>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_m: Option<usize>,
    pub z0: f64,
}

/// Per-index Bhattacharyya parameters for a design value `z0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityTable {
    pub z_values: Vec<f64>,
    pub design_param: f64,
}

impl ReliabilityTable {
    pub fn new(n: usize, z0: f64) -> Result<Self> {
        check_block_length(n)?;
        if !(z0 > 0.0 && z0 < 1.0) {
            return Err(Error::Config(format!("z0 must lie in (0,1), got {z0}")));
        }
        let depth = n.trailing_zeros();
        let z_values = (0..n)
            .map(|leaf| {
                (0..depth).rev().fold(z0, |z, level| {
                    if (leaf >> level) & 1 == 0 {
                        2.0 * z - z * z
                    } else {
                        z * z
                    }
                })
            })
            .collect();
        Ok(Self {
            z_values,
            design_param: z0,
        })
    }

    /// 1-based indices, least reliable (largest z) first; among equal z the
    /// larger index counts as more reliable.
    pub fn reliability_order(&self) -> Vec<usize> {
        rank_by(&self.z_values, |a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal))
    }
}

fn rank_by(keys: &[f64], least_first: impl Fn(&f64, &f64) -> Ordering) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=keys.len()).collect();
    order.sort_by(|&a, &b| least_first(&keys[a - 1], &keys[b - 1]).then(a.cmp(&b)));
    order
}

fn check_block_length(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::BlockLength(n));
    }
    Ok(())
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::MessageLength { n, k });
    }
    Ok(())
}

fn top_k(order: &[usize], k: usize) -> Vec<usize> {
    let mut set = order[order.len() - k..].to_vec();
    set.sort_unstable();
    set
}

fn validate_override(n: usize, k: usize, set: &[usize]) -> Result<Vec<usize>> {
    if set.len() != k {
        return Err(Error::InfoSet(format!("expected {k} indices, got {}", set.len())));
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InfoSet("duplicate index".into()));
    }
    if sorted.iter().any(|&i| i == 0 || i > n) {
        return Err(Error::InfoSet(format!("indices must lie in 1..={n}")));
    }
    Ok(sorted)
}

/// Polar code with information set from the Bhattacharyya ranking, or from
/// `override_set` when given.
pub fn build_polar_spec(
    n: usize,
    k: usize,
    z0: f64,
    override_set: Option<&[usize]>,
) -> Result<CodeSpec> {
    check_block_length(n)?;
    check_k(n, k)?;
    let table = ReliabilityTable::new(n, z0)?;
    let reliability_order = table.reliability_order();
    let info_set = match override_set {
        Some(set) => validate_override(n, k, set)?,
        None => top_k(&reliability_order, k),
    };
    Ok(CodeSpec {
        family: CodeFamily::Polar,
        n,
        k,
        info_set,
        reliability_order,
        pac_kernel: None,
        crc_poly: None,
        k_m: None,
        z0,
    })
}

/// PAC code on the Reed-Muller rate profile with convolution kernel `kernel`.
pub fn build_pac_spec(n: usize, k: usize, kernel: &[u8]) -> Result<CodeSpec> {
    check_block_length(n)?;
    check_k(n, k)?;
    if kernel.first() != Some(&1) || kernel.iter().any(|&b| b > 1) {
        return Err(Error::Kernel);
    }
    let weights: Vec<f64> = (0..n).map(|i| i.count_ones() as f64).collect();
    let reliability_order = rank_by(&weights, |a, b| a.partial_cmp(b).unwrap());
    let info_set = top_k(&reliability_order, k);
    Ok(CodeSpec {
        family: CodeFamily::Pac,
        n,
        k,
        info_set,
        reliability_order,
        pac_kernel: Some(kernel.to_vec()),
        crc_poly: None,
        k_m: None,
        z0: DEFAULT_Z0,
    })
}

/// Polar code whose `k` information bits carry `k - deg(poly)` payload bits
/// followed by their CRC.
pub fn build_crc_polar_spec(n: usize, k: usize, poly: CrcPoly, z0: f64) -> Result<CodeSpec> {
    if poly.degree() >= k {
        return Err(Error::CrcDegree {
            degree: poly.degree(),
            k,
        });
    }
    let mut spec = build_polar_spec(n, k, z0, None)?;
    spec.family = CodeFamily::CrcPolar;
    spec.k_m = Some(k - poly.degree());
    spec.crc_poly = Some(poly);
    Ok(spec)
}

/// Information indices from least to most reliable.
pub fn n2c_order(spec: &CodeSpec) -> Vec<usize> {
    let mut is_info = vec![false; spec.n + 1];
    for &i in &spec.info_set {
        is_info[i] = true;
    }
    spec.reliability_order
        .iter()
        .copied()
        .filter(|&i| is_info[i])
        .collect()
}

impl CodeSpec {
    /// Number of user bits per block (`k_m` for CRC-aided codes, else `k`).
    pub fn message_len(&self) -> usize {
        self.k_m.unwrap_or(self.k)
    }

    /// 0-based information positions.
    pub fn info_positions(&self) -> Vec<usize> {
        self.info_set.iter().map(|&i| i - 1).collect()
    }

    /// `mask[j]` is true when 0-based position `j` carries information.
    pub fn info_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for &i in &self.info_set {
            mask[i - 1] = true;
        }
        mask
    }

    /// Kernel applied before the polar transform; `[1]` for plain polar codes.
    pub fn kernel(&self) -> &[u8] {
        self.pac_kernel.as_deref().unwrap_or(&[1])
    }

    /// The same code with a different information set (a subcode when
    /// `active` is a subset of `info_set`). CRC structure is dropped.
    pub fn with_info_set(&self, active: &[usize]) -> Result<CodeSpec> {
        let info_set = validate_override(self.n, active.len(), active)?;
        if info_set.is_empty() {
            return Err(Error::IndexSet("empty index set".into()));
        }
        let family = match self.family {
            CodeFamily::CrcPolar => CodeFamily::Polar,
            f => f,
        };
        Ok(CodeSpec {
            family,
            k: info_set.len(),
            info_set,
            crc_poly: None,
            k_m: None,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_block_length(self.n)?;
        check_k(self.n, self.k)?;
        let sorted = validate_override(self.n, self.k, &self.info_set)?;
        if sorted != self.info_set {
            return Err(Error::InfoSet("information set must be increasing".into()));
        }
        let mut perm = self.reliability_order.clone();
        perm.sort_unstable();
        if perm != (1..=self.n).collect::<Vec<_>>() {
            return Err(Error::InfoSet("reliability order is not a permutation".into()));
        }
        match self.family {
            CodeFamily::Pac => {
                let kernel = self.pac_kernel.as_ref().ok_or(Error::Kernel)?;
                if kernel.first() != Some(&1) || kernel.iter().any(|&b| b > 1) {
                    return Err(Error::Kernel);
                }
            }
            CodeFamily::CrcPolar => {
                let poly = self
                    .crc_poly
                    .as_ref()
                    .ok_or_else(|| Error::Family("CRC-polar spec without polynomial".into()))?;
                if self.k_m != Some(self.k.saturating_sub(poly.degree())) || poly.degree() >= self.k {
                    return Err(Error::CrcDegree {
                        degree: poly.degree(),
                        k: self.k,
                    });
                }
            }
            CodeFamily::Polar => {}
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: CodeSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}
