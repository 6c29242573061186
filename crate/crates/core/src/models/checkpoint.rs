use std::io::{Read, Write};
use std::path::Path;

use super::model::{build_model, Model};
use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::graph::SparseGraph;

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"RGCN1";

/// Writes `RGCN1`, the spec text, and every parameter tensor with its shape.
pub fn write_checkpoint<W: Write>(model: &Model, mut w: W) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    let text = model.spec.to_text();
    w.write_all(&(text.len() as u64).to_le_bytes())?;
    w.write_all(text.as_bytes())?;
    let shapes = model.param_shapes();
    w.write_all(&(shapes.len() as u64).to_le_bytes())?;
    for (shape, values) in shapes.iter().zip(model.param_slices()) {
        w.write_all(&(shape.len() as u64).to_le_bytes())?;
        for &d in shape {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(model, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Parsed checkpoint contents, before a model is rebuilt from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub tensors: Vec<(Vec<usize>, Vec<f64>)>,
}

impl Checkpoint {
    /// Class count implied by the head bias (the last tensor).
    pub fn num_classes(&self) -> Option<usize> {
        self.tensors.last().map(|(s, _)| s.iter().product())
    }

    /// Rebuilds the model on `graphs` and loads the stored parameters.
    pub fn into_model(self, graphs: &[SparseGraph]) -> Result<Model> {
        let classes = self
            .num_classes()
            .ok_or_else(|| Error::InvalidData("checkpoint holds no tensors".into()))?;
        let mut model = build_model(&self.spec, graphs, classes)?;
        let shapes = model.param_shapes();
        if shapes.len() != self.tensors.len() || shapes.iter().zip(&self.tensors).any(|(a, (b, _))| a != b) {
            return Err(Error::InvalidData(
                "checkpoint shapes do not match the model built from its spec and graphs".into(),
            ));
        }
        for (dst, (_, src)) in model.param_slices_mut().into_iter().zip(&self.tensors) {
            dst.copy_from_slice(src);
        }
        Ok(model)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(Error::Parse {
                offset: self.at,
                msg: format!("truncated {what}"),
            });
        };
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self, what: &str) -> Result<usize> {
        let at = self.at;
        let v = self.u64(what)?;
        let v = usize::try_from(v).ok().filter(|&v| v <= self.bytes.len());
        v.ok_or_else(|| Error::Parse {
            offset: at,
            msg: format!("implausible {what}"),
        })
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(5, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            msg: "not an RGCN1 checkpoint".into(),
        });
    }
    let len = r.len("spec length")?;
    let at = r.at;
    let text = std::str::from_utf8(r.take(len, "spec text")?).map_err(|e| Error::Parse {
        offset: at,
        msg: e.to_string(),
    })?;
    let spec = ModelSpec::from_text(text)?;
    let count = r.len("tensor count")?;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let ndim = r.len("tensor rank")?;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.len("tensor dimension")?);
        }
        let numel = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let at = r.at;
        let numel = numel.filter(|&n| n.saturating_mul(8) <= bytes.len()).ok_or(Error::Parse {
            offset: at,
            msg: "tensor too large".into(),
        })?;
        let values = r
            .take(numel * 8, "tensor values")?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        tensors.push((shape, values));
    }
    if r.at != bytes.len() {
        return Err(Error::Parse {
            offset: r.at,
            msg: "trailing bytes after the last tensor".into(),
        });
    }
    Ok(Checkpoint { spec, tensors })
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_checkpoint(&bytes)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&std::fs::read(path)?)
}
