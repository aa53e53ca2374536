//! Polar transform, message embedding, PAC precoding, CRC and BPSK.
//!
//! Bits are stored one per byte with values 0 or 1. The Plotkin tree uses
//! natural leaf order (no bit reversal): `x = (u ^ v, v)` where `u` is the
//! encoding of the first half of the leaves and `v` of the second half.

use crate::construction::{CodeFamily, CodeSpec, CrcPoly};
use crate::{Error, Result};

/// BPSK symbols, `1 - 2x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    pub symbols: Vec<f64>,
}

impl Codeword {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Hard bits recovered from the symbol signs.
    pub fn bits(&self) -> Vec<u8> {
        self.symbols.iter().map(|&s| u8::from(s < 0.0)).collect()
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Length { expected, got });
    }
    Ok(())
}

/// `(u ^ v, v)`
pub fn plotkin(u: &[u8], v: &[u8]) -> Result<Vec<u8>> {
    check_len(u.len(), v.len())?;
    let mut out: Vec<u8> = u.iter().zip(v).map(|(a, b)| a ^ b).collect();
    out.extend_from_slice(v);
    Ok(out)
}

/// In-place Plotkin tree over a power-of-two block. The transform is its own
/// inverse.
pub fn plotkin_tree_in_place(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in bits.chunks_exact_mut(2 * half) {
            let (left, right) = block.split_at_mut(half);
            for (l, r) in left.iter_mut().zip(right.iter()) {
                *l ^= r;
            }
        }
        half *= 2;
    }
}

pub fn plotkin_tree(m: &[u8]) -> Result<Vec<u8>> {
    if m.is_empty() || !m.len().is_power_of_two() {
        return Err(Error::BlockLength(m.len()));
    }
    let mut x = m.to_vec();
    plotkin_tree_in_place(&mut x);
    Ok(x)
}

/// Scatter `u` into the information positions of an otherwise zero block.
pub fn embed(u: &[u8], spec: &CodeSpec) -> Result<Vec<u8>> {
    check_len(spec.k, u.len())?;
    let mut m = vec![0u8; spec.n];
    for (&bit, &idx) in u.iter().zip(&spec.info_set) {
        m[idx - 1] = bit;
    }
    Ok(m)
}

/// Read the information positions of `m` in index order.
pub fn extract(m: &[u8], spec: &CodeSpec) -> Vec<u8> {
    spec.info_set.iter().map(|&i| m[i - 1]).collect()
}

/// Rate-1 convolution `v_i = XOR_j c_j m_{i-j+1}` with zero initial state.
pub fn pac_precode(m: &[u8], kernel: &[u8]) -> Vec<u8> {
    (0..m.len())
        .map(|i| {
            kernel
                .iter()
                .take(i + 1)
                .enumerate()
                .fold(0u8, |acc, (j, &c)| acc ^ (c & m[i - j]))
        })
        .collect()
}

/// Inverse of [`pac_precode`] by feedback division; needs `kernel[0] == 1`.
pub fn pac_unprecode(v: &[u8], kernel: &[u8]) -> Vec<u8> {
    let mut m = vec![0u8; v.len()];
    for i in 0..v.len() {
        let feedback = kernel
            .iter()
            .enumerate()
            .skip(1)
            .take(i)
            .fold(0u8, |acc, (j, &c)| acc ^ (c & m[i - j]));
        m[i] = v[i] ^ feedback;
    }
    m
}

/// Remainder of `u(x) * x^deg` modulo `poly`, where `u[i]` is the coefficient
/// of `x^i`. Returned with `r[i]` the coefficient of `x^i`.
pub fn crc_remainder(u: &[u8], poly: &CrcPoly) -> Vec<u8> {
    let deg = poly.degree();
    let g = poly.coeffs();
    let mut work = vec![0u8; u.len() + deg];
    work[deg..].copy_from_slice(u);
    for top in (deg..work.len()).rev() {
        if work[top] == 1 {
            for (j, &c) in g.iter().enumerate() {
                work[top - deg + j] ^= c;
            }
        }
    }
    work.truncate(deg);
    work
}

/// Systematic CRC codeword `(u, r)`.
pub fn crc_attach(u: &[u8], poly: &CrcPoly) -> Vec<u8> {
    let mut out = u.to_vec();
    out.extend(crc_remainder(u, poly));
    out
}

pub fn crc_check(word: &[u8], poly: &CrcPoly) -> bool {
    let deg = poly.degree();
    if word.len() < deg {
        return false;
    }
    let (payload, remainder) = word.split_at(word.len() - deg);
    crc_remainder(payload, poly) == remainder
}

pub fn modulate(x: &[u8]) -> Codeword {
    Codeword {
        symbols: x.iter().map(|&b| 1.0 - 2.0 * f64::from(b)).collect(),
    }
}

/// Source vector `m` (before precoding) for user message `u`.
pub fn source_vector(u: &[u8], spec: &CodeSpec) -> Result<Vec<u8>> {
    match spec.family {
        CodeFamily::CrcPolar => {
            let poly = spec
                .crc_poly
                .as_ref()
                .ok_or_else(|| Error::Family("missing CRC polynomial".into()))?;
            check_len(spec.message_len(), u.len())?;
            embed(&crc_attach(u, poly), spec)
        }
        _ => embed(u, spec),
    }
}

/// Codeword bits `x` for a source vector `m`.
pub fn encode_source(m: &[u8], spec: &CodeSpec) -> Result<Vec<u8>> {
    check_len(spec.n, m.len())?;
    let mut x = match spec.family {
        CodeFamily::Pac => pac_precode(m, spec.kernel()),
        _ => m.to_vec(),
    };
    plotkin_tree_in_place(&mut x);
    Ok(x)
}

/// Codeword bits `x` for user message `u`.
pub fn encode_bits(u: &[u8], spec: &CodeSpec) -> Result<Vec<u8>> {
    encode_source(&source_vector(u, spec)?, spec)
}

pub fn encode(u: &[u8], spec: &CodeSpec) -> Result<Codeword> {
    Ok(modulate(&encode_bits(u, spec)?))
}

/// Message `u` from a source vector `m`, stripping the CRC for CRC-aided codes.
pub fn message_from_source(m: &[u8], spec: &CodeSpec) -> Vec<u8> {
    let mut u = extract(m, spec);
    u.truncate(spec.message_len());
    u
}
