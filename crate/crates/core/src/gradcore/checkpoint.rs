//! Named-tensor checkpoints.
//!
//! Layout: a UTF-8 manifest with one line per parameter,
//! `name<TAB>d0,d1,...<TAB>f32<LF>`, terminated by an empty line, followed by
//! the little-endian `f32` payload of every tensor concatenated in manifest
//! order. Optimizer moments are not stored.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{ParamStore, Tensor};
use crate::error::{Error, Result};

pub const DTYPE_TAG: &str = "f32";

pub fn write_checkpoint<W: Write>(store: &ParamStore, mut w: W) -> Result<()> {
    let mut manifest = String::new();
    for p in store.iter() {
        if p.name.contains(['\t', '\n']) || p.name.is_empty() {
            return Err(Error::Checkpoint(format!(
                "unencodable parameter name {:?}",
                p.name
            )));
        }
        let dims: Vec<String> = p.tensor.shape().iter().map(|d| d.to_string()).collect();
        manifest.push_str(&format!("{}\t{}\t{}\n", p.name, dims.join(","), DTYPE_TAG));
    }
    manifest.push('\n');
    w.write_all(manifest.as_bytes())?;
    for p in store.iter() {
        for v in p.tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(r: R) -> Result<Vec<(String, Tensor)>> {
    let mut reader = BufReader::new(r);
    let mut records = Vec::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::Checkpoint(
                "manifest not terminated by an empty line".into(),
            ));
        }
        let line = line
            .strip_suffix('\n')
            .ok_or_else(|| Error::Checkpoint("truncated manifest".into()))?;
        if line.is_empty() {
            break;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [name, dims, dtype] = fields[..] else {
            return Err(Error::Checkpoint(format!(
                "malformed manifest record {line:?}"
            )));
        };
        if dtype != DTYPE_TAG {
            return Err(Error::Checkpoint(format!(
                "unsupported dtype {dtype:?} for `{name}`"
            )));
        }
        let shape = if dims.is_empty() {
            Vec::new()
        } else {
            dims.split(',')
                .map(|d| d.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Checkpoint(format!("bad shape {dims:?} for `{name}`: {e}")))?
        };
        records.push((name.to_string(), shape));
    }
    let mut out = Vec::with_capacity(records.len());
    for (name, shape) in records {
        let numel: usize = shape.iter().product();
        let mut bytes = vec![0u8; numel * 4];
        reader
            .read_exact(&mut bytes)
            .map_err(|_| Error::Checkpoint(format!("payload truncated in `{name}`")))?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        out.push((name, Tensor::new(&shape, data)?));
    }
    let mut rest = Vec::new();
    reader.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes after payload",
            rest.len()
        )));
    }
    Ok(out)
}

pub fn save(store: &ParamStore, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_checkpoint(store, std::io::BufWriter::new(file))
}

pub fn load(path: &Path) -> Result<Vec<(String, Tensor)>> {
    read_checkpoint(std::fs::File::open(path)?)
}

/// Overwrites every parameter of `store` from checkpoint records. The
/// checkpoint must name exactly the parameters `store` holds.
pub fn restore(store: &mut ParamStore, records: Vec<(String, Tensor)>) -> Result<()> {
    if records.len() != store.len() {
        return Err(Error::Checkpoint(format!(
            "checkpoint holds {} parameters, model expects {}",
            records.len(),
            store.len()
        )));
    }
    for (name, t) in records {
        store.set(&name, t).map_err(|e| match e {
            Error::UnknownParameter(n) => Error::Checkpoint(format!("unexpected parameter `{n}`")),
            Error::ShapeMismatch { lhs, rhs } => {
                Error::Checkpoint(format!("`{name}` has shape {rhs:?}, model expects {lhs:?}"))
            }
            other => other,
        })?;
    }
    Ok(())
}
