//! Model files.
//!
//! The text format is a JSON document:
//!
//! ```json
//! { "format": "lff-model", "version": 1, "d": 2, "m": 1,
//!   "basis": [{"kind": "cosine", "size": 3}, ...],
//!   "normalized": true, "transform": null | {...},
//!   "a": [...], "B": [[[row], ...], ...] }
//! ```
//!
//! with each `B^k` stored row-major as `m_k` rows of `m` numbers. Floats are
//! written in shortest round-trip form. The binary format stores the same
//! fields little-endian behind the magic `LFFB`.

use std::io::{Cursor, Read};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;
use serde_json::{json, Map, Value};

use super::Lff;
use crate::basis::{BasisKind, BasisSpec};
use crate::error::{Error, Result};
use crate::harness::InputTransform;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"LFFB";
const FORMAT_TAG: &str = "lff-model";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Text,
    Binary,
}

impl ModelFormat {
    /// Binary models are recognised by their magic bytes.
    pub fn detect(bytes: &[u8]) -> Self {
        if bytes.starts_with(MAGIC) {
            ModelFormat::Binary
        } else {
            ModelFormat::Text
        }
    }
}

impl Lff {
    pub fn serialize(&self, format: ModelFormat) -> Vec<u8> {
        match format {
            ModelFormat::Text => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("model is valid JSON");
                s.push('\n');
                s.into_bytes()
            }
            ModelFormat::Binary => self.to_binary(),
        }
    }

    /// Decodes either format, chosen by [`ModelFormat::detect`].
    pub fn deserialize(bytes: &[u8]) -> Result<Lff> {
        match ModelFormat::detect(bytes) {
            ModelFormat::Binary => Self::from_binary(bytes),
            ModelFormat::Text => {
                let text = std::str::from_utf8(bytes)
                    .map_err(|e| Error::parse("document", format!("not UTF-8: {e}")))?;
                let value: Value = serde_json::from_str(text)
                    .map_err(|e| Error::parse("document", e.to_string()))?;
                Self::from_json(&value)
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let basis: Vec<Value> = self
            .specs
            .iter()
            .map(|s| json!({"kind": s.kind(), "size": s.size()}))
            .collect();
        let b: Vec<Value> = self
            .factors
            .iter()
            .map(|mat| {
                Value::Array(
                    mat.row_iter()
                        .map(|row| Value::Array(row.iter().map(|v| json!(v)).collect()))
                        .collect(),
                )
            })
            .collect();
        json!({
            "format": FORMAT_TAG,
            "version": FORMAT_VERSION,
            "d": self.dim(),
            "m": self.num_bases(),
            "basis": basis,
            "normalized": self.normalized,
            "transform": self.transform,
            "a": self.weights,
            "B": b,
        })
    }

    pub fn from_json(value: &Value) -> Result<Lff> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse("document", "expected an object"))?;
        let tag = field(obj, "format")?
            .as_str()
            .ok_or_else(|| Error::parse("format", "expected a string"))?;
        if tag != FORMAT_TAG {
            return Err(Error::parse("format", format!("unknown format `{tag}`")));
        }
        let version = as_usize(field(obj, "version")?, "version")?;
        if version as u32 != FORMAT_VERSION {
            return Err(Error::parse("version", format!("unsupported version {version}")));
        }
        let d = as_usize(field(obj, "d")?, "d")?;
        let m = as_usize(field(obj, "m")?, "m")?;
        let basis = field(obj, "basis")?
            .as_array()
            .ok_or_else(|| Error::parse("basis", "expected an array"))?;
        if basis.len() != d {
            return Err(Error::parse("basis", format!("{} entries for d = {d}", basis.len())));
        }
        let mut specs = Vec::with_capacity(d);
        for (k, entry) in basis.iter().enumerate() {
            let name = format!("basis[{k}]");
            let kind: BasisKind = serde_json::from_value(
                entry.get("kind").cloned().ok_or_else(|| Error::parse(&name, "missing kind"))?,
            )
            .map_err(|e| Error::parse(format!("{name}.kind"), e.to_string()))?;
            let size = as_usize(
                entry.get("size").ok_or_else(|| Error::parse(&name, "missing size"))?,
                &format!("{name}.size"),
            )?;
            let spec = match kind {
                BasisKind::Cosine => BasisSpec::cosine(size),
            }
            .map_err(|e| Error::parse(format!("{name}.size"), e.to_string()))?;
            specs.push(spec);
        }
        let normalized = field(obj, "normalized")?
            .as_bool()
            .ok_or_else(|| Error::parse("normalized", "expected a boolean"))?;
        let transform: Option<InputTransform> = serde_json::from_value(field(obj, "transform")?.clone())
            .map_err(|e| Error::parse("transform", e.to_string()))?;
        if let Some(tf) = &transform {
            tf.validate()?;
            if tf.dim() != d {
                return Err(Error::parse("transform", "dimension does not match d"));
            }
        }
        let weights = float_array(field(obj, "a")?, "a")?;
        if weights.len() != m {
            return Err(Error::parse("a", format!("{} weights for m = {m}", weights.len())));
        }
        let bs = field(obj, "B")?
            .as_array()
            .ok_or_else(|| Error::parse("B", "expected an array"))?;
        if bs.len() != d {
            return Err(Error::parse("B", format!("{} matrices for d = {d}", bs.len())));
        }
        let mut factors = Vec::with_capacity(d);
        for (k, mat) in bs.iter().enumerate() {
            let name = format!("B[{k}]");
            let rows = mat
                .as_array()
                .ok_or_else(|| Error::parse(&name, "expected an array of rows"))?;
            let mk = specs[k].size();
            if rows.len() != mk {
                return Err(Error::parse(&name, format!("{} rows, expected {mk}", rows.len())));
            }
            let mut data = Vec::with_capacity(mk * m);
            for (j, row) in rows.iter().enumerate() {
                let row = float_array(row, &format!("{name}[{j}]"))?;
                if row.len() != m {
                    return Err(Error::parse(format!("{name}[{j}]"), format!("{} entries, expected {m}", row.len())));
                }
                data.extend(row);
            }
            factors.push(DMatrix::from_row_slice(mk, m, &data));
        }
        Ok(Lff {
            weights,
            factors,
            specs,
            transform,
            normalized,
        })
    }

    fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        let w = &mut out;
        w.write_u32::<LittleEndian>(FORMAT_VERSION).unwrap();
        w.write_u32::<LittleEndian>(self.dim() as u32).unwrap();
        w.write_u32::<LittleEndian>(self.num_bases() as u32).unwrap();
        for s in &self.specs {
            w.write_u32::<LittleEndian>(s.size() as u32).unwrap();
        }
        w.write_u8(self.normalized as u8).unwrap();
        match &self.transform {
            None => w.write_u8(0).unwrap(),
            Some(tf) => {
                w.write_u8(1).unwrap();
                w.write_f64::<LittleEndian>(tf.center).unwrap();
                w.write_f64::<LittleEndian>(tf.margin).unwrap();
                for v in tf.shift.iter().chain(&tf.scale) {
                    w.write_f64::<LittleEndian>(*v).unwrap();
                }
            }
        }
        for a in &self.weights {
            w.write_f64::<LittleEndian>(*a).unwrap();
        }
        for mat in &self.factors {
            for row in mat.row_iter() {
                for v in row.iter() {
                    w.write_f64::<LittleEndian>(*v).unwrap();
                }
            }
        }
        out
    }

    fn from_binary(bytes: &[u8]) -> Result<Lff> {
        let mut r = Cursor::new(bytes);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| Error::parse("magic", e.to_string()))?;
        if &magic != MAGIC {
            return Err(Error::parse("magic", "not a binary model"));
        }
        let version = read_u32(&mut r, "version")?;
        if version != FORMAT_VERSION {
            return Err(Error::parse("version", format!("unsupported version {version}")));
        }
        let d = read_u32(&mut r, "d")? as usize;
        let m = read_u32(&mut r, "m")? as usize;
        let mut specs = Vec::with_capacity(d.min(1 << 16));
        for k in 0..d {
            let size = read_u32(&mut r, &format!("basis[{k}].size"))? as usize;
            specs.push(BasisSpec::cosine(size).map_err(|e| Error::parse(format!("basis[{k}].size"), e.to_string()))?);
        }
        let normalized = match read_u8(&mut r, "normalized")? {
            0 => false,
            1 => true,
            v => return Err(Error::parse("normalized", format!("invalid flag {v}"))),
        };
        let transform = match read_u8(&mut r, "transform")? {
            0 => None,
            1 => {
                let center = read_f64(&mut r, "transform.center")?;
                let margin = read_f64(&mut r, "transform.margin")?;
                let shift = (0..d)
                    .map(|k| read_f64(&mut r, &format!("transform.shift[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                let scale = (0..d)
                    .map(|k| read_f64(&mut r, &format!("transform.scale[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                let tf = InputTransform { shift, scale, center, margin };
                tf.validate()?;
                Some(tf)
            }
            v => return Err(Error::parse("transform", format!("invalid flag {v}"))),
        };
        let weights = (0..m)
            .map(|i| read_f64(&mut r, &format!("a[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let mut factors = Vec::with_capacity(d);
        for (k, spec) in specs.iter().enumerate() {
            let mk = spec.size();
            let mut data = Vec::with_capacity(mk * m);
            for j in 0..mk {
                for i in 0..m {
                    data.push(read_f64(&mut r, &format!("B[{k}][{j}][{i}]"))?);
                }
            }
            factors.push(DMatrix::from_row_slice(mk, m, &data));
        }
        if (r.position() as usize) != bytes.len() {
            return Err(Error::parse("trailer", "unexpected bytes after the last field"));
        }
        Ok(Lff {
            weights,
            factors,
            specs,
            transform,
            normalized,
        })
    }
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name).ok_or_else(|| Error::parse(name, "missing"))
}

fn as_usize(v: &Value, name: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::parse(name, "expected a non-negative integer"))
}

fn float_array(v: &Value, name: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| Error::parse(name, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| x.as_f64().ok_or_else(|| Error::parse(format!("{name}[{i}]"), "expected a number")))
        .collect()
}

fn read_u32(r: &mut Cursor<&[u8]>, name: &str) -> Result<u32> {
    r.read_u32::<LittleEndian>().map_err(|_| Error::parse(name, "truncated"))
}

fn read_u8(r: &mut Cursor<&[u8]>, name: &str) -> Result<u8> {
    r.read_u8().map_err(|_| Error::parse(name, "truncated"))
}

fn read_f64(r: &mut Cursor<&[u8]>, name: &str) -> Result<f64> {
    r.read_f64::<LittleEndian>().map_err(|_| Error::parse(name, "truncated"))
}
