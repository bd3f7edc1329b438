//! FBGF: a small binary container for grid functions.
//!
//! Layout (little-endian): `b"FBGF"`, `u32` version (1), `u32` dim,
//! `dim × u64` nodes per axis, `dim × f64` origin, `dim × f64` extent,
//! then the node values as `f64` in row-major order.

use std::io::{Read, Write};
use std::path::Path;

use freebound::lattice::{GridDomain, GridFunction};

use crate::error::{LabError, Result};

pub const MAGIC: &[u8; 4] = b"FBGF";
pub const VERSION: u32 = 1;

pub fn encode(u: &GridFunction) -> Vec<u8> {
    let d = u.domain();
    let dim = d.dim();
    let mut out = Vec::with_capacity(12 + dim * 24 + 8 * u.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for &n in d.nodes_per_axis() {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for &o in d.origin() {
        out.extend_from_slice(&o.to_le_bytes());
    }
    for &e in d.extent() {
        out.extend_from_slice(&e.to_le_bytes());
    }
    for &v in u.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice =
            self.bytes.get(self.pos..end).ok_or_else(|| LabError::Format(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(slice.try_into().unwrap())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn decode(bytes: &[u8]) -> Result<GridFunction> {
    let mut c = Cursor { bytes, pos: 0 };
    if &c.take::<4>()? != MAGIC {
        return Err(LabError::Format("wrong magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(LabError::Format(format!("unsupported version {version}")));
    }
    let dim = c.u32()? as usize;
    if !(2..=3).contains(&dim) {
        return Err(LabError::Format(format!("unsupported dimension {dim}")));
    }
    let mut nodes = Vec::with_capacity(dim);
    for _ in 0..dim {
        let n = c.u64()?;
        nodes.push(usize::try_from(n).map_err(|_| LabError::Format(format!("node count {n} too large")))?);
    }
    let origin = (0..dim).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let extent = (0..dim).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let domain = GridDomain::new(&origin, &extent, &nodes)?;
    let count = domain.node_count();
    if bytes.len() - c.pos != 8 * count {
        return Err(LabError::Format(format!("expected {count} values, found {} bytes", bytes.len() - c.pos)));
    }
    let values = (0..count).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    Ok(GridFunction::new(domain, values)?)
}

pub fn write(path: &Path, u: &GridFunction) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    f.write_all(&encode(u)).map_err(|e| LabError::io(path, e))
}

pub fn read(path: &Path) -> Result<GridFunction> {
    let mut bytes = Vec::new();
    std::fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| LabError::io(path, e))?;
    decode(&bytes)
}
