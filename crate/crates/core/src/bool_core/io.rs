//! JSON and plain-text encodings for Boolean arrays.
//!
//! JSON: `{"shape":[...],"data":"<base64>"}` where the payload packs the
//! row-major entries LSB-first within each byte. Plain text: one line of
//! whitespace-separated dimension sizes, then the entries as `0`/`1`
//! characters in row-major order (whitespace between them is ignored).

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{BitMatrix, BitTensor, BitVector};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Packed {
    shape: Vec<usize>,
    data: String,
}

fn pack(bits: &BitVector) -> String {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for i in bits.iter_ones() {
        bytes[i / 8] |= 1 << (i % 8);
    }
    STANDARD.encode(bytes)
}

fn unpack(data: &str, len: usize) -> Result<BitVector> {
    let bytes = STANDARD
        .decode(data.trim())
        .map_err(|e| Error::Parse(format!("bad base64 payload: {e}")))?;
    if bytes.len() != len.div_ceil(8) {
        return Err(Error::Parse(format!(
            "payload has {} bytes, shape needs {}",
            bytes.len(),
            len.div_ceil(8)
        )));
    }
    let mut v = BitVector::zeros(len);
    for (bi, &byte) in bytes.iter().enumerate() {
        for k in 0..8 {
            if (byte >> k) & 1 == 1 {
                let i = bi * 8 + k;
                if i >= len {
                    return Err(Error::Parse("padding bits must be zero".into()));
                }
                v.set(i, true);
            }
        }
    }
    Ok(v)
}

fn shape_len(shape: &[usize]) -> Result<usize> {
    shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::Parse("shape overflows".into()))
}

impl Serialize for BitTensor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Packed {
            shape: self.shape().to_vec(),
            data: pack(self.bits()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitTensor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let p = Packed::deserialize(d)?;
        let len = shape_len(&p.shape).map_err(D::Error::custom)?;
        let bits = unpack(&p.data, len).map_err(D::Error::custom)?;
        BitTensor::from_bits(&p.shape, bits).map_err(D::Error::custom)
    }
}

impl Serialize for BitMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Packed {
            shape: vec![self.rows(), self.cols()],
            data: pack(&self.to_row_major()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let p = Packed::deserialize(d)?;
        let [rows, cols] = p.shape[..] else {
            return Err(D::Error::custom(format!(
                "matrix shape must have two entries, got {:?}",
                p.shape
            )));
        };
        let len = shape_len(&p.shape).map_err(D::Error::custom)?;
        let bits = unpack(&p.data, len).map_err(D::Error::custom)?;
        BitMatrix::from_row_major(rows, cols, &bits).map_err(D::Error::custom)
    }
}

impl Serialize for BitVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Packed {
            shape: vec![self.len()],
            data: pack(self),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let p = Packed::deserialize(d)?;
        let [len] = p.shape[..] else {
            return Err(D::Error::custom("vector shape must have one entry"));
        };
        unpack(&p.data, len).map_err(D::Error::custom)
    }
}

/// Renders a tensor in the plain-text format.
pub fn tensor_to_text(t: &BitTensor) -> String {
    let dims: Vec<String> = t.shape().iter().map(|n| n.to_string()).collect();
    let mut out = dims.join(" ");
    out.push('\n');
    for b in t.bits().iter() {
        out.push(if b { '1' } else { '0' });
    }
    out.push('\n');
    out
}

pub fn tensor_from_text(text: &str) -> Result<BitTensor> {
    let mut lines = text.lines().skip_while(|l| l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty input".into()))?;
    let shape = header
        .split(|c: char| c.is_whitespace() || c == ',' || c == 'x')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad dimension {s:?} in shape line")))
        })
        .collect::<Result<Vec<_>>>()?;
    let len = shape_len(&shape)?;
    let mut bits = BitVector::zeros(len);
    let mut k = 0;
    for c in lines.flat_map(str::chars).filter(|c| !c.is_whitespace()) {
        let value = match c {
            '0' => false,
            '1' => true,
            other => return Err(Error::Parse(format!("unexpected character {other:?}"))),
        };
        if k >= len {
            return Err(Error::Parse(format!("more than {len} entries")));
        }
        bits.set(k, value);
        k += 1;
    }
    if k != len {
        return Err(Error::Parse(format!("expected {len} entries, found {k}")));
    }
    BitTensor::from_bits(&shape, bits).map_err(|e| Error::Parse(e.to_string()))
}

/// Parses either encoding, choosing JSON when the first non-blank character is `{`.
pub fn parse_tensor(text: &str) -> Result<BitTensor> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    } else {
        tensor_from_text(text)
    }
}

pub fn read_tensor(path: &Path) -> Result<BitTensor> {
    parse_tensor(&std::fs::read_to_string(path)?)
}

/// Reads a matrix from either encoding; a tensor of order 2 is accepted as-is.
pub fn read_matrix(path: &Path) -> Result<BitMatrix> {
    let t = read_tensor(path)?;
    match t.shape() {
        &[rows, cols] => BitMatrix::from_row_major(rows, cols, t.bits()),
        other => Err(Error::Parse(format!("expected a matrix, got shape {other:?}"))),
    }
}
