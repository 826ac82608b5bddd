//! Binary checkpoint format, all integers and floats little-endian:
//!
//! ```text
//! "MLKITCKPT"  u32 version  u8 arch tag  u64 widths...
//! per layer: weight (row-major f64), bias (f64)
//! u8 has_class_weights  [u64 classes  u64 dim  f64 values...]
//! ```

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::model::{Architecture, EmbedderModel, Layer};
use crate::error::{Error, Result};
use crate::losses::ClassWeights;

pub const MAGIC: &[u8; 9] = b"MLKITCKPT";
pub const FORMAT_VERSION: u32 = 1;

const TAG_LINEAR: u8 = 0;
const TAG_MLP: u8 = 1;

/// A model plus the class weights of a classification loss, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: EmbedderModel,
    pub class_weights: Option<ClassWeights>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let arch = self.model.architecture();
        out.push(match arch {
            Architecture::Linear { .. } => TAG_LINEAR,
            Architecture::Mlp { .. } => TAG_MLP,
        });
        for w in arch.widths() {
            out.extend_from_slice(&(w as u64).to_le_bytes());
        }
        let mut put = |v: &f64| out.extend_from_slice(&v.to_le_bytes());
        for layer in self.model.layers() {
            layer.weight.iter().for_each(&mut put);
            layer.bias.iter().for_each(&mut put);
        }
        match &self.class_weights {
            None => out.push(0),
            Some(w) => {
                out.push(1);
                out.extend_from_slice(&(w.classes() as u64).to_le_bytes());
                out.extend_from_slice(&(w.dim() as u64).to_le_bytes());
                for v in w.as_array() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::CorruptCheckpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::CorruptCheckpoint(format!(
                "format version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let arch = match r.u8()? {
            TAG_LINEAR => Architecture::Linear {
                d_in: r.dim()?,
                d_out: r.dim()?,
            },
            TAG_MLP => Architecture::Mlp {
                d_in: r.dim()?,
                hidden: r.dim()?,
                d_out: r.dim()?,
            },
            tag => {
                return Err(Error::CorruptCheckpoint(format!(
                    "unknown architecture tag {tag}"
                )))
            }
        };
        let widths = arch.widths();
        let mut layers = Vec::new();
        for w in widths.windows(2) {
            let weight = r.matrix(w[0], w[1])?;
            let bias = Array1::from(r.floats(w[1])?);
            layers.push(Layer { weight, bias });
        }
        let model = EmbedderModel::from_layers(arch, layers)
            .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        let class_weights = match r.u8()? {
            0 => None,
            1 => {
                let (c, d) = (r.dim()?, r.dim()?);
                let w = r.matrix(c, d)?;
                Some(ClassWeights::new(w).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?)
            }
            flag => {
                return Err(Error::CorruptCheckpoint(format!(
                    "bad class-weight flag {flag}"
                )))
            }
        };
        if r.pos != bytes.len() {
            return Err(Error::CorruptCheckpoint(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Self {
            model,
            class_weights,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub fn checkpoint_save(model: &EmbedderModel, path: impl AsRef<Path>) -> Result<()> {
    Checkpoint {
        model: model.clone(),
        class_weights: None,
    }
    .save(path)
}

pub fn checkpoint_load(path: impl AsRef<Path>) -> Result<EmbedderModel> {
    Ok(Checkpoint::load(path)?.model)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::CorruptCheckpoint(format!(
                    "truncated at byte {} of {}",
                    self.pos,
                    self.bytes.len()
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn dim(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v)
            .ok()
            .filter(|&d| d > 0 && d <= self.bytes.len())
            .ok_or_else(|| Error::CorruptCheckpoint(format!("implausible dimension {v}")))
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n
            .checked_mul(8)
            .ok_or_else(|| Error::CorruptCheckpoint("size overflow".into()))?;
        Ok(self
            .take(len)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::CorruptCheckpoint("size overflow".into()))?;
        Ok(Array2::from_shape_vec((rows, cols), self.floats(n)?).expect("length checked"))
    }
}
