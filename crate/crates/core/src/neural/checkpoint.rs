//! Checkpoint files.
//!
//! A checkpoint is one JSON document: a header (format version, code spec,
//! architecture, seed, curriculum step) and an ordered list of named arrays.
//! Array data is base64 of little-endian IEEE-754 binary64 values in
//! row-major order, so a save/load/save cycle is byte-identical.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::GruDecoderParams;
use crate::construction::CodeSpec;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArrayRecord {
    name: String,
    shape: Vec<usize>,
    data: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    code_spec: CodeSpec,
    hidden_dim: usize,
    num_layers: usize,
    head_dims: Vec<usize>,
    seed: u64,
    curriculum_step: usize,
    arrays: Vec<ArrayRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: CodeSpec,
    pub params: GruDecoderParams,
    pub seed: u64,
    pub curriculum_step: usize,
}

fn encode_f64(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode_f64(text: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD
        .decode(text)
        .map_err(|e| Error::Checkpoint(format!("bad base64 payload: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Checkpoint("payload is not a whole number of f64 values".into()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        let p = &self.params;
        let file = CheckpointFile {
            format_version: FORMAT_VERSION,
            code_spec: self.spec.clone(),
            hidden_dim: p.hidden_dim(),
            num_layers: p.num_layers(),
            head_dims: vec![p.head_dim(), 1],
            seed: self.seed,
            curriculum_step: self.curriculum_step,
            arrays: p
                .tensors()
                .into_iter()
                .map(|(name, shape, values)| ArrayRecord {
                    name,
                    shape,
                    data: encode_f64(values),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CheckpointFile =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("malformed checkpoint: {e}")))?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "format version {} is not supported (expected {FORMAT_VERSION})",
                file.format_version
            )));
        }
        file.code_spec.validate()?;
        if file.num_layers == 0 || file.head_dims.len() != 2 || file.head_dims[1] != 1 {
            return Err(Error::Checkpoint("unsupported architecture header".into()));
        }
        let mut params = GruDecoderParams::zeros(
            file.code_spec.n,
            file.hidden_dim,
            file.num_layers,
            file.head_dims[0],
        );
        let expected: Vec<(String, Vec<usize>)> =
            params.tensors().into_iter().map(|(name, shape, _)| (name, shape)).collect();
        if expected.len() != file.arrays.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} arrays, found {}",
                expected.len(),
                file.arrays.len()
            )));
        }
        for (((name, shape), record), slot) in expected.iter().zip(&file.arrays).zip(params.tensors_mut()) {
            if &record.name != name || &record.shape != shape {
                return Err(Error::Checkpoint(format!(
                    "array {} {:?} does not match expected {name} {shape:?}",
                    record.name, record.shape
                )));
            }
            let values = decode_f64(&record.data)?;
            if values.len() != slot.len() {
                return Err(Error::Checkpoint(format!(
                    "array {name} holds {} values, header implies {}",
                    values.len(),
                    slot.len()
                )));
            }
            slot.copy_from_slice(&values);
        }
        Ok(Self {
            spec: file.code_spec,
            params,
            seed: file.seed,
            curriculum_step: file.curriculum_step,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn save_params(
    path: impl AsRef<Path>,
    spec: &CodeSpec,
    params: &GruDecoderParams,
    seed: u64,
    curriculum_step: usize,
) -> Result<()> {
    Checkpoint {
        spec: spec.clone(),
        params: params.clone(),
        seed,
        curriculum_step,
    }
    .save(path)
}

pub fn load_params(path: impl AsRef<Path>) -> Result<GruDecoderParams> {
    Ok(Checkpoint::load(path)?.params)
}
