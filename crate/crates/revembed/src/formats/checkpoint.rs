//! Model checkpoints: `EKNN`, u32 version, u32 length + UTF-8 config
//! record, u32 tensor count, then per tensor a u32 name length, the name,
//! u32 rank, u32 dims and the f64 payload. Everything is little-endian.

use std::io::{Read, Write};

use super::{eof_as, FormatError};
use revembed_core::neural::{ParamSet, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"EKNN";
pub const CHECKPOINT_VERSION: u32 = 1;
const MAX_RECORD: u32 = 1 << 26;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Free-form configuration record, JSON by convention.
    pub config: String,
    pub params: ParamSet,
}

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<(), FormatError> {
    let v = u32::try_from(v).map_err(|_| FormatError::Oversized(v.to_string()))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn write_checkpoint<W: Write>(mut w: W, config: &str, params: &ParamSet) -> Result<(), FormatError> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    put_u32(&mut w, config.len())?;
    w.write_all(config.as_bytes())?;
    put_u32(&mut w, params.len())?;
    for (name, t) in params.iter() {
        put_u32(&mut w, name.len())?;
        w.write_all(name.as_bytes())?;
        put_u32(&mut w, t.shape.len())?;
        for &d in &t.shape {
            put_u32(&mut w, d)?;
        }
        for x in &t.data {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32, FormatError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(eof_as("checkpoint"))?;
    Ok(u32::from_le_bytes(b))
}

fn get_string<R: Read>(r: &mut R) -> Result<String, FormatError> {
    let len = get_u32(r)?;
    if len > MAX_RECORD {
        return Err(FormatError::Checkpoint(format!("record of {len} bytes")));
    }
    let mut b = vec![0u8; len as usize];
    r.read_exact(&mut b).map_err(eof_as("checkpoint"))?;
    String::from_utf8(b).map_err(|_| FormatError::Checkpoint("record is not UTF-8".into()))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint, FormatError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(eof_as("checkpoint"))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(FormatError::BadMagic {
            expected: "EKNN",
            found: String::from_utf8_lossy(&magic).into_owned(),
        });
    }
    let version = get_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(FormatError::Version {
            found: version,
            supported: CHECKPOINT_VERSION,
        });
    }
    let config = get_string(&mut r)?;
    let count = get_u32(&mut r)?;
    let mut params = ParamSet::new();
    for _ in 0..count {
        let name = get_string(&mut r)?;
        let rank = get_u32(&mut r)?;
        if rank == 0 || rank > 8 {
            return Err(FormatError::Checkpoint(format!("{name}: rank {rank}")));
        }
        let shape = (0..rank)
            .map(|_| get_u32(&mut r).map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let size = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .filter(|&s| s <= MAX_RECORD as usize);
        let size = size.ok_or_else(|| FormatError::Checkpoint(format!("{name}: shape {shape:?} too large")))?;
        let mut raw = vec![0u8; 8 * size];
        r.read_exact(&mut raw).map_err(eof_as("checkpoint"))?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        params.push(name, Tensor::new(shape, data, true)?);
    }
    Ok(Checkpoint { config, params })
}
