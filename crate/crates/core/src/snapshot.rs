//! Binary state snapshots.
//!
//! Layout, all little-endian: `b"PFLD"`, `u32` version, `u32` n1, `u32` n2,
//! `f64` L, `f64` time, then `ρ+` and `ρ-` row-major as `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, PlasmaState};

pub const MAGIC: [u8; 4] = *b"PFLD";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 8;

pub fn write_snapshot(mut w: impl Write, state: &PlasmaState) -> Result<()> {
    let g = state.grid();
    let n1 = u32::try_from(g.n1()).map_err(|_| Error::Format("n1 exceeds u32".into()))?;
    let n2 = u32::try_from(g.n2()).map_err(|_| Error::Format("n2 exceeds u32".into()))?;
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * g.len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&n1.to_le_bytes());
    buf.extend_from_slice(&n2.to_le_bytes());
    buf.extend_from_slice(&g.box_len().to_le_bytes());
    buf.extend_from_slice(&state.time.to_le_bytes());
    for v in state.rho_plus.data().iter().chain(state.rho_minus.data()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(mut r: impl Read) -> Result<PlasmaState> {
    let mut header = [0u8; HEADER_LEN];
    read_exact(&mut r, &mut header, "header")?;
    if header[0..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &header[0..4])));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let (n1, n2) = (u32_at(8) as usize, u32_at(12) as usize);
    let (box_len, time) = (f64_at(16), f64_at(24));
    let grid = Grid::new(n1, n2, box_len).map_err(|e| Error::Format(format!("header: {e}")))?;

    let mut body = vec![0u8; 16 * grid.len()];
    read_exact(&mut r, &mut body, "density data")?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after density data".into()));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (plus, minus) = values.split_at(grid.len());
    let rho_plus =
        Field::from_vec(grid, plus.to_vec()).map_err(|e| Error::Format(e.to_string()))?;
    let rho_minus =
        Field::from_vec(grid, minus.to_vec()).map_err(|e| Error::Format(e.to_string()))?;
    PlasmaState::new(rho_plus, rho_minus, time).map_err(|e| Error::Format(e.to_string()))
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

pub fn save(path: impl AsRef<Path>, state: &PlasmaState) -> Result<()> {
    write_snapshot(BufWriter::new(File::create(path)?), state)
}

pub fn load(path: impl AsRef<Path>) -> Result<PlasmaState> {
    read_snapshot(BufReader::new(File::open(path)?))
}
