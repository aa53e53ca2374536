use std::path::Path;

use anyhow::{bail, Context, Result};
use polarcraft::harness::CodeConfig;
use polarcraft::CodeSpec;

/// Message bits from `0x`-prefixed hex or a plain 0/1 string.
///
/// Hex digits expand most significant bit first; surplus leading bits must be
/// zero.
pub fn parse_message(text: &str, k: usize) -> Result<Vec<u8>> {
    let text: String = text.chars().filter(|c| !c.is_whitespace() && *c != '_').collect();
    let bits: Vec<u8> = if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        let mut bits = Vec::with_capacity(4 * hex.len());
        for c in hex.chars() {
            let d = c.to_digit(16).with_context(|| format!("invalid hex digit '{c}'"))?;
            bits.extend((0..4).rev().map(|s| ((d >> s) & 1) as u8));
        }
        bits
    } else {
        text.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => bail!("invalid binary digit '{c}'"),
            })
            .collect::<Result<_>>()?
    };
    if bits.len() < k {
        bail!("message has {} bits, code needs {k}", bits.len());
    }
    let (extra, msg) = bits.split_at(bits.len() - k);
    if extra.contains(&1) {
        bail!("message has more than {k} significant bits");
    }
    Ok(msg.to_vec())
}

/// LLR vectors from a JSON array (flat, or one array per word) or whitespace
/// separated numbers, one word per line.
pub fn parse_llrs(text: &str, n: usize) -> Result<Vec<Vec<f64>>> {
    let trimmed = text.trim();
    let words: Vec<Vec<f64>> = if trimmed.starts_with('[') {
        let value: serde_json::Value = serde_json::from_str(trimmed).context("invalid JSON LLR input")?;
        match value.as_array() {
            Some(items) if items.iter().all(|v| v.is_array()) => serde_json::from_value(value)?,
            _ => vec![serde_json::from_value(value).context("LLR array must hold numbers")?],
        }
    } else {
        trimmed
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(|t| t.parse::<f64>().with_context(|| format!("invalid LLR '{t}'")))
                    .collect()
            })
            .collect::<Result<_>>()?
    };
    if words.is_empty() {
        bail!("no LLR values in input");
    }
    // a single flat list may hold several words back to back
    let words = if words.len() == 1 && words[0].len() > n && words[0].len() % n == 0 {
        words[0].chunks(n).map(<[f64]>::to_vec).collect()
    } else {
        words
    };
    for w in &words {
        if w.len() != n {
            bail!("LLR word has {} values, code length is {n}", w.len());
        }
        if w.iter().any(|v| !v.is_finite()) {
            bail!("LLR input contains a non-finite value");
        }
    }
    Ok(words)
}

/// A code from a JSON file holding either a full spec or a code config.
pub fn load_code(path: &Path) -> Result<CodeSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if let Ok(spec) = CodeSpec::from_json(&text) {
        return Ok(spec);
    }
    let cfg: CodeConfig =
        serde_json::from_str(&text).with_context(|| format!("{} is neither a code spec nor a code config", path.display()))?;
    Ok(cfg.build()?)
}

pub fn parse_index_list(text: &str) -> Result<Vec<usize>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().with_context(|| format!("invalid index '{t}'")))
        .collect()
}

pub fn parse_bits(text: &str) -> Result<Vec<u8>> {
    text.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => bail!("invalid bit '{c}'"),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn messages() {
        assert_eq!(parse_message("1011", 4).unwrap(), vec![1, 0, 1, 1]);
        assert_eq!(parse_message("0xB", 4).unwrap(), vec![1, 0, 1, 1]);
        assert_eq!(parse_message("0x0b", 4).unwrap(), vec![1, 0, 1, 1]);
        assert_eq!(parse_message("0x5", 3).unwrap(), vec![1, 0, 1]);
        assert!(parse_message("0xF", 3).is_err());
        assert!(parse_message("101", 4).is_err());
        assert!(parse_message("10a1", 4).is_err());
    }

    #[test]
    fn llr_formats() {
        assert_eq!(parse_llrs("[1, -2.5]", 2).unwrap(), vec![vec![1.0, -2.5]]);
        assert_eq!(parse_llrs("[[1,2],[3,4]]", 2).unwrap().len(), 2);
        assert_eq!(parse_llrs("1 2\n3 4\n", 2).unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(parse_llrs("1 2 3 4", 2).unwrap().len(), 2);
        assert!(parse_llrs("1 2 3", 2).is_err());
        assert!(parse_llrs("", 2).is_err());
        assert!(parse_llrs("1 x", 2).is_err());
    }

    #[test]
    fn index_lists() {
        assert_eq!(parse_index_list("2,4").unwrap(), vec![2, 4]);
        assert_eq!(parse_index_list("1 3, 5").unwrap(), vec![1, 3, 5]);
        assert!(parse_index_list("1,a").is_err());
    }
}
