//! Binary field snapshots.
//!
//! Layout, all integers u32 little-endian:
//!
//! ```text
//! "NSKG" version=1 N field_count
//! repeat field_count: name_len name_bytes(ASCII) N*N f64 LE, row-major
//! ```

use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spectral::ScalarField;

pub const MAGIC: &[u8; 4] = b"NSKG";
pub const VERSION: u32 = 1;

/// Named fields of one grid size.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub fields: Vec<(String, ScalarField)>,
}

impl Snapshot {
    pub fn n(&self) -> Option<usize> {
        self.fields.first().map(|(_, f)| f.n())
    }

    pub fn get(&self, name: &str) -> Option<&ScalarField> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

pub fn write_snapshot<W: Write>(mut w: W, snap: &Snapshot) -> Result<()> {
    let n = snap
        .n()
        .ok_or_else(|| Error::Format("snapshot has no fields".into()))?;
    let mut buf = Vec::with_capacity(16 + snap.fields.len() * (n * n * 8 + 16));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&u32_of(n)?.to_le_bytes());
    buf.extend_from_slice(&u32_of(snap.fields.len())?.to_le_bytes());
    for (name, field) in &snap.fields {
        if !name.is_ascii() {
            return Err(Error::Format(format!("field name {name:?} is not ASCII")));
        }
        if field.n() != n {
            return Err(Error::Format(format!(
                "field {name} has size {} but snapshot size is {n}",
                field.n()
            )));
        }
        buf.extend_from_slice(&u32_of(name.len())?.to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        for v in field.values().iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn u32_of(x: usize) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::Format(format!("{x} does not fit in u32")))
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Snapshot> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let count = read_u32(&mut r)? as usize;
    let mut fields = Vec::with_capacity(count);
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .ok()
            .filter(|s| s.is_ascii())
            .ok_or_else(|| Error::Format("field name is not ASCII".into()))?;
        let mut raw = vec![0u8; n * n * 8];
        r.read_exact(&mut raw)?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let arr = Array2::from_shape_vec((n, n), values).map_err(|e| Error::Format(e.to_string()))?;
        fields.push((name, ScalarField::from_array(arr)?));
    }
    Ok(Snapshot { fields })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
