//! Dataset generators and binary-matrix readers.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, RbmError, Result};
use crate::rbm::{BinaryBatch, BinaryVector};
use crate::rng::{tags, RngStream};

/// Largest side accepted by [`generate_bars_and_stripes`].
pub const MAX_BARS_AND_STRIPES_SIDE: usize = 16;

/// All `2·2^side` bars-and-stripes images, row-major.
///
/// Stripes (constant rows) come first, then bars (constant columns); within
/// each orientation bit `r` of the pattern index sets line `r`. The all-off
/// and all-on images appear once per orientation.
pub fn generate_bars_and_stripes(side: usize) -> Result<BinaryBatch> {
    if side == 0 {
        return Err(invalid("side must be at least 1"));
    }
    if side > MAX_BARS_AND_STRIPES_SIDE {
        return Err(RbmError::Capacity {
            units: side,
            limit: MAX_BARS_AND_STRIPES_SIDE,
        });
    }
    let mut samples = Vec::with_capacity(2 << side);
    for columns in [false, true] {
        for pattern in 0..1u64 << side {
            let mut bits = vec![0u8; side * side];
            for r in 0..side {
                for c in 0..side {
                    let line = if columns { c } else { r };
                    bits[r * side + c] = ((pattern >> line) & 1) as u8;
                }
            }
            samples.push(BinaryVector::from_raw(bits));
        }
    }
    BinaryBatch::new(samples)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    pub dimension: usize,
    pub num_modes: usize,
    /// Independent per-bit flip probability.
    pub flip_prob: f64,
    pub dataset_size: usize,
    pub seed: u64,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self {
            dimension: 16,
            num_modes: 4,
            flip_prob: 0.001,
            dataset_size: 2000,
            seed: 0,
        }
    }
}

/// Block modes: block `b` is ones on `[b·s, (b+1)·s)` with `s = d / num_modes`.
/// Modes come in pairs of a block and its complement; an odd count adds one
/// more plain block.
pub fn block_modes(dimension: usize, num_modes: usize) -> Result<Vec<BinaryVector>> {
    if num_modes == 0 || num_modes > dimension {
        return Err(invalid(format!(
            "block modes need 1 <= num_modes <= dimension, got {num_modes} modes in dimension {dimension}"
        )));
    }
    let block = dimension / num_modes;
    let block_vector = |b: usize| {
        let bits = (0..dimension).map(|i| (i / block == b) as u8).collect();
        BinaryVector::from_raw(bits)
    };
    let mut modes = Vec::with_capacity(num_modes);
    for b in 0..num_modes / 2 {
        let v = block_vector(b);
        let complement = v.as_slice().iter().map(|&x| 1 - x).collect();
        modes.push(v);
        modes.push(BinaryVector::from_raw(complement));
    }
    if num_modes % 2 == 1 {
        modes.push(block_vector(num_modes / 2));
    }
    Ok(modes)
}

/// Samples `(data, modes)` with the block modes of [`block_modes`].
pub fn generate_artificial_modes(cfg: &ModesConfig) -> Result<(BinaryBatch, BinaryBatch)> {
    let modes = block_modes(cfg.dimension, cfg.num_modes)?;
    generate_from_modes(modes, cfg.flip_prob, cfg.dataset_size, cfg.seed)
}

/// Picks a mode uniformly per sample and flips each bit with `flip_prob`.
pub fn generate_from_modes(modes: Vec<BinaryVector>, flip_prob: f64, dataset_size: usize, seed: u64) -> Result<(BinaryBatch, BinaryBatch)> {
    if !(0.0..=0.5).contains(&flip_prob) {
        return Err(invalid("flip_prob must lie in [0, 0.5]"));
    }
    let modes = BinaryBatch::new(modes)?;
    if dataset_size < modes.len() {
        return Err(invalid("dataset_size must be at least the number of modes"));
    }
    let mut rng = RngStream::new(seed).child(tags::DATA).rng(0, 0);
    let data = (0..dataset_size)
        .map(|_| {
            let mode = &modes[rng.random_range(0..modes.len())];
            let bits = mode
                .as_slice()
                .iter()
                .map(|&b| b ^ (rng.random::<f64>() < flip_prob) as u8)
                .collect();
            BinaryVector::from_raw(bits)
        })
        .collect();
    Ok((BinaryBatch::new(data)?, modes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryFormat {
    /// One sample per line of `0`/`1` characters.
    Lines01,
    /// IDX3 unsigned-byte images, pixel >= 128 maps to 1.
    IdxImagesThreshold,
}

fn parse_error(location: String, message: impl Into<String>) -> RbmError {
    RbmError::Parse {
        location,
        message: message.into(),
    }
}

pub fn parse_lines01(text: &str) -> Result<BinaryBatch> {
    let mut samples = Vec::new();
    let body = text.strip_suffix('\n').unwrap_or(text);
    for (i, line) in body.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let mut bits = Vec::with_capacity(line.len());
        for (col, ch) in line.chars().enumerate() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                other => return Err(parse_error(format!("line {}, column {}", i + 1, col + 1), format!("unexpected character {other:?}"))),
            }
        }
        if let Some(first) = samples.first().map(BinaryVector::len) {
            if bits.len() != first {
                return Err(parse_error(format!("line {}", i + 1), format!("row has {} bits, expected {first}", bits.len())));
            }
        } else if bits.is_empty() {
            return Err(parse_error(format!("line {}", i + 1), "empty row"));
        }
        samples.push(BinaryVector::from_raw(bits));
    }
    if samples.is_empty() {
        return Err(parse_error("line 1".into(), "no samples"));
    }
    BinaryBatch::new(samples)
}

pub fn write_lines01(samples: &[BinaryVector]) -> String {
    let mut out = String::with_capacity(samples.len() * (samples.first().map_or(0, BinaryVector::len) + 1));
    for v in samples {
        for &b in v.as_slice() {
            out.push(if b == 1 { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

const IDX3_MAGIC: u32 = 0x0000_0803;

pub fn parse_idx3_threshold(bytes: &[u8]) -> Result<BinaryBatch> {
    let word = |k: usize| -> Result<usize> {
        let at = 4 * k;
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]) as usize)
            .ok_or_else(|| parse_error(format!("byte {at}"), "truncated header"))
    };
    if word(0)? as u32 != IDX3_MAGIC {
        return Err(parse_error("byte 0".into(), format!("magic number is not {IDX3_MAGIC:#010x}")));
    }
    let (count, rows, cols) = (word(1)?, word(2)?, word(3)?);
    let dim = rows * cols;
    if count == 0 || dim == 0 {
        return Err(parse_error("byte 4".into(), "empty image set"));
    }
    let body = &bytes[16..];
    if body.len() != count * dim {
        return Err(parse_error(
            format!("byte {}", 16 + body.len().min(count * dim)),
            format!("expected {} pixel bytes, found {}", count * dim, body.len()),
        ));
    }
    let samples = body
        .chunks_exact(dim)
        .map(|img| BinaryVector::from_raw(img.iter().map(|&p| (p >= 128) as u8).collect()))
        .collect();
    BinaryBatch::new(samples)
}

pub fn load_binary_matrix(path: impl AsRef<Path>, format: BinaryFormat) -> Result<BinaryBatch> {
    match format {
        BinaryFormat::Lines01 => parse_lines01(&std::fs::read_to_string(path)?),
        BinaryFormat::IdxImagesThreshold => parse_idx3_threshold(&std::fs::read(path)?),
    }
}

pub fn save_lines01(path: impl AsRef<Path>, samples: &[BinaryVector]) -> Result<()> {
    std::fs::write(path, write_lines01(samples))?;
    Ok(())
}
