//! `WEF1` field snapshots.
//!
//! ```text
//! WEF1 d=<d> n=<n> fields=<count> time=<t>\n
//! <name> <scalar|vector|symtensor>\n
//! <little-endian f64 samples, row-major, components interleaved last>
//! ...
//! ```
//!
//! Symmetric tensors store the packed upper triangle (`00 01 11` in 2D,
//! `00 01 02 11 12 22` in 3D).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{sym_len, FieldError, ScalarField, SymTensorField, TorusGrid, VectorField};

#[derive(Clone, Debug, PartialEq)]
pub enum WefBlock {
    Scalar(ScalarField),
    Vector(VectorField),
    SymTensor(SymTensorField),
}

impl WefBlock {
    fn kind(&self) -> &'static str {
        match self {
            WefBlock::Scalar(_) => "scalar",
            WefBlock::Vector(_) => "vector",
            WefBlock::SymTensor(_) => "symtensor",
        }
    }

    fn grid(&self) -> TorusGrid {
        match self {
            WefBlock::Scalar(f) => f.grid(),
            WefBlock::Vector(f) => f.grid(),
            WefBlock::SymTensor(f) => f.grid(),
        }
    }

    fn components(&self) -> Vec<&[f64]> {
        match self {
            WefBlock::Scalar(f) => vec![f.values()],
            WefBlock::Vector(f) => (0..f.dim()).map(|c| f.component(c)).collect(),
            WefBlock::SymTensor(f) => f.packed().iter().map(Vec::as_slice).collect(),
        }
    }
}

impl From<ScalarField> for WefBlock {
    fn from(f: ScalarField) -> Self {
        WefBlock::Scalar(f)
    }
}

impl From<VectorField> for WefBlock {
    fn from(f: VectorField) -> Self {
        WefBlock::Vector(f)
    }
}

impl From<SymTensorField> for WefBlock {
    fn from(f: SymTensorField) -> Self {
        WefBlock::SymTensor(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WefFile {
    pub grid: TorusGrid,
    pub time: f64,
    pub blocks: Vec<(String, WefBlock)>,
}

impl WefFile {
    pub fn new(grid: TorusGrid, time: f64) -> Self {
        Self {
            grid,
            time,
            blocks: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, block: impl Into<WefBlock>) -> Result<(), FieldError> {
        let block = block.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(FieldError::Wef(format!("invalid block name {name:?}")));
        }
        if block.grid() != self.grid {
            return Err(FieldError::GridMismatch(format!("block {name} is on another grid")));
        }
        self.blocks.push((name.to_string(), block));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&WefBlock> {
        self.blocks.iter().find(|(n, _)| n == name).map(|(_, b)| b)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), FieldError> {
        writeln!(
            w,
            "WEF1 d={} n={} fields={} time={}",
            self.grid.dim(),
            self.grid.n(),
            self.blocks.len(),
            self.time
        )?;
        for (name, block) in &self.blocks {
            writeln!(w, "{name} {}", block.kind())?;
            let comps = block.components();
            let mut buf = Vec::with_capacity(self.grid.len() * comps.len() * 8);
            for k in 0..self.grid.len() {
                for c in &comps {
                    buf.extend_from_slice(&c[k].to_le_bytes());
                }
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<Self, FieldError> {
        let header = read_line(&mut r)?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("WEF1") {
            return Err(FieldError::Wef("missing WEF1 magic".into()));
        }
        let (mut d, mut n, mut count, mut time) = (None, None, None, None);
        for kv in parts {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| FieldError::Wef(format!("bad header token {kv:?}")))?;
            let bad = || FieldError::Wef(format!("bad header value {kv:?}"));
            match k {
                "d" => d = Some(v.parse::<usize>().map_err(|_| bad())?),
                "n" => n = Some(v.parse::<usize>().map_err(|_| bad())?),
                "fields" => count = Some(v.parse::<usize>().map_err(|_| bad())?),
                "time" => time = Some(v.parse::<f64>().map_err(|_| bad())?),
                _ => return Err(FieldError::Wef(format!("unknown header key {k:?}"))),
            }
        }
        let missing = || FieldError::Wef("incomplete header".into());
        let grid = TorusGrid::new(d.ok_or_else(missing)?, n.ok_or_else(missing)?)?;
        let mut file = WefFile::new(grid, time.ok_or_else(missing)?);
        for _ in 0..count.ok_or_else(missing)? {
            let line = read_line(&mut r)?;
            let (name, kind) = line
                .split_once(' ')
                .ok_or_else(|| FieldError::Wef(format!("bad block header {line:?}")))?;
            let ncomp = match kind {
                "scalar" => 1,
                "vector" => grid.dim(),
                "symtensor" => sym_len(grid.dim()),
                _ => return Err(FieldError::Wef(format!("unknown field kind {kind:?}"))),
            };
            let mut bytes = vec![0u8; grid.len() * ncomp * 8];
            r.read_exact(&mut bytes)
                .map_err(|e| FieldError::Wef(format!("truncated block {name}: {e}")))?;
            let mut comps = vec![Vec::with_capacity(grid.len()); ncomp];
            for (i, chunk) in bytes.chunks_exact(8).enumerate() {
                comps[i % ncomp].push(f64::from_le_bytes(chunk.try_into().unwrap()));
            }
            let block = match kind {
                "scalar" => WefBlock::Scalar(ScalarField::new(grid, comps.pop().unwrap())?),
                "vector" => WefBlock::Vector(VectorField::from_raw(grid, comps)?),
                _ => WefBlock::SymTensor(SymTensorField::from_raw(grid, comps)?),
            };
            file.push(name, block)?;
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<(), FieldError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self, FieldError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_line<R: BufRead>(r: &mut R) -> Result<String, FieldError> {
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(FieldError::Wef("unexpected end of file".into()));
    }
    line.pop();
    String::from_utf8(line).map_err(|_| FieldError::Wef("header is not UTF-8".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_layout_are_bit_exact() {
        let g = TorusGrid::new(2, 8).unwrap();
        let mut f = WefFile::new(g, 0.25);
        f.push("v", VectorField::from_fn(g, |x| [x[0], 10.0 + x[1], 0.0]))
            .unwrap();
        let mut bytes = Vec::new();
        f.write_to(&mut bytes).unwrap();
        let head = b"WEF1 d=2 n=8 fields=1 time=0.25\nv vector\n";
        assert_eq!(&bytes[..head.len()], head);
        let body = &bytes[head.len()..];
        assert_eq!(body.len(), 64 * 2 * 8);
        // first point (-1,-1): components interleaved
        assert_eq!(f64::from_le_bytes(body[0..8].try_into().unwrap()), -1.0);
        assert_eq!(f64::from_le_bytes(body[8..16].try_into().unwrap()), 9.0);
        // second point advances the last axis
        assert_eq!(f64::from_le_bytes(body[24..32].try_into().unwrap()), 9.25);
    }

    #[test]
    fn round_trip_all_kinds() {
        let g = TorusGrid::new(3, 8).unwrap();
        let mut f = WefFile::new(g, 1e-7);
        f.push("rho", ScalarField::from_fn(g, |x| 1.0 + x[0] * x[2])).unwrap();
        f.push("m", VectorField::from_fn(g, |x| [x[0], x[1], x[2]])).unwrap();
        f.push(
            "H",
            SymTensorField::from_fn(g, |x| [1.0, x[0], 2.0, 3.0, x[1], -4.0]),
        )
        .unwrap();
        let mut bytes = Vec::new();
        f.write_to(&mut bytes).unwrap();
        let back = WefFile::read_from(&bytes[..]).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_garbage() {
        assert!(WefFile::read_from(&b"WEF2 d=2 n=8 fields=0 time=0\n"[..]).is_err());
        assert!(WefFile::read_from(&b"WEF1 d=2 n=8 fields=1 time=0\nx scalar\n\0\0"[..]).is_err());
        assert!(WefFile::read_from(&b"WEF1 d=2 n=8 time=0\n"[..]).is_err());
    }
}
