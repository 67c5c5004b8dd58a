//! Binary file formats.
//!
//! Alias table: `"ALT1"`, `N: u64`, `W: f64`, then `N` rows of
//! `(threshold: f64, alias: u64)` with 1-based aliases.
//! Weights: `"WTS1"`, `N: u64`, then `N` weights as `f64`.
//! All numbers are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{AliasTable, Row, WeightSet};

pub const TABLE_MAGIC: &[u8; 4] = b"ALT1";
pub const WEIGHTS_MAGIC: &[u8; 4] = b"WTS1";

pub fn write_table(t: &AliasTable, mut out: impl Write) -> Result<()> {
    out.write_all(TABLE_MAGIC)?;
    out.write_all(&(t.n() as u64).to_le_bytes())?;
    out.write_all(&t.total().to_le_bytes())?;
    for r in t.rows() {
        out.write_all(&r.weight.to_le_bytes())?;
        out.write_all(&(r.alias as u64 + 1).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_table(mut input: impl Read) -> Result<AliasTable> {
    expect_magic(&mut input, TABLE_MAGIC)?;
    let n = read_len(&mut input)?;
    let total = f64::from_le_bytes(read8(&mut input)?);
    let mut rows = Vec::with_capacity(n.min(1 << 24));
    for i in 0..n {
        let weight = f64::from_le_bytes(read8(&mut input)?);
        let alias = u64::from_le_bytes(read8(&mut input)?);
        if alias == 0 || alias > n as u64 {
            return Err(Error::Format(format!("row {} has alias {alias} outside 1..={n}", i + 1)));
        }
        rows.push(Row {
            weight,
            alias: (alias - 1) as usize,
        });
    }
    Ok(AliasTable::from_rows(rows, total))
}

pub fn write_weights(w: &WeightSet, mut out: impl Write) -> Result<()> {
    out.write_all(WEIGHTS_MAGIC)?;
    out.write_all(&(w.n() as u64).to_le_bytes())?;
    for x in w.weights() {
        out.write_all(&x.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_weights(mut input: impl Read) -> Result<WeightSet> {
    expect_magic(&mut input, WEIGHTS_MAGIC)?;
    let n = read_len(&mut input)?;
    let mut ws = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        ws.push(f64::from_le_bytes(read8(&mut input)?));
    }
    WeightSet::new(ws)
}

pub fn save_table(t: &AliasTable, path: impl AsRef<Path>) -> Result<()> {
    write_table(t, BufWriter::new(File::create(path)?))
}

pub fn load_table(path: impl AsRef<Path>) -> Result<AliasTable> {
    read_table(BufReader::new(File::open(path)?))
}

pub fn save_weights(w: &WeightSet, path: impl AsRef<Path>) -> Result<()> {
    write_weights(w, BufWriter::new(File::create(path)?))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightSet> {
    read_weights(BufReader::new(File::open(path)?))
}

/// Which binary format a file holds, judged by its magic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Table,
    Weights,
    Other,
}

pub fn sniff(path: impl AsRef<Path>) -> Result<FileKind> {
    let mut magic = [0u8; 4];
    let mut f = File::open(path)?;
    let got = f.read(&mut magic)?;
    Ok(match &magic[..got] {
        m if m == TABLE_MAGIC => FileKind::Table,
        m if m == WEIGHTS_MAGIC => FileKind::Weights,
        _ => FileKind::Other,
    })
}

fn expect_magic(input: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut got = [0u8; 4];
    input.read_exact(&mut got).map_err(truncated)?;
    if &got != magic {
        return Err(Error::Format(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&got)
        )));
    }
    Ok(())
}

fn read_len(input: &mut impl Read) -> Result<usize> {
    let n = u64::from_le_bytes(read8(input)?);
    usize::try_from(n).map_err(|_| Error::Format(format!("length {n} does not fit in memory")))
}

fn read8(input: &mut impl Read) -> Result<[u8; 8]> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b).map_err(truncated)?;
    Ok(b)
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("file is truncated".into())
    } else {
        Error::Io(e)
    }
}
