//! Binary field files.
//!
//! Layout: a 32 byte header of little endian `u32`s
//! `CIFD | version | dim | rank | shape[0] | shape[1] | shape[2] | ncomp`
//! followed by the values as little endian `f64`, components innermost.
//! Fields are assumed to live on the unit cube.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Grid, GridField, Rank};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CIFD";
const VERSION: u32 = 1;

fn rank_code(r: Rank) -> u32 {
    match r {
        Rank::Scalar => 0,
        Rank::Vector => 1,
        Rank::Sym => 2,
        Rank::Tuple(_) => 3,
    }
}

pub fn write_field(path: &Path, f: &GridField) -> Result<()> {
    let g = &f.grid;
    let mut shape = [0u32; 3];
    for (a, s) in g.shape().iter().enumerate() {
        shape[a] = *s as u32;
    }
    let mut buf = Vec::with_capacity(32 + 8 * f.values.len());
    buf.extend_from_slice(MAGIC);
    for v in [VERSION, g.dim() as u32, rank_code(f.rank), shape[0], shape[1], shape[2], f.ncomp() as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in &f.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<GridField> {
    let bytes = fs::read(path)?;
    if bytes.len() < 32 || &bytes[..4] != MAGIC {
        return Err(Error::format("field file", "missing CIFD header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    let (version, dim, rank, ncomp) = (word(1), word(2) as usize, word(3), word(7) as usize);
    if version != VERSION {
        return Err(Error::format("field file", format!("unsupported version {version}")));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::format("field file", format!("bad dimension {dim}")));
    }
    let shape: Vec<usize> = (0..dim).map(|a| word(4 + a) as usize).collect();
    if shape.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::format("field file", "only cubic grids are supported"));
    }
    let rank = match rank {
        0 => Rank::Scalar,
        1 => Rank::Vector,
        2 => Rank::Sym,
        3 => Rank::Tuple(ncomp),
        r => return Err(Error::format("field file", format!("bad rank code {r}"))),
    };
    let grid = Grid::unit(dim, shape[0])?;
    if rank.ncomp(dim) != ncomp {
        return Err(Error::format("field file", "component count does not match rank"));
    }
    let expect = grid.len() * ncomp;
    if bytes.len() != 32 + 8 * expect {
        return Err(Error::format("field file", format!("expected {expect} values")));
    }
    let values = bytes[32..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    GridField::from_values(&grid, rank, values)
}

/// `x,y,value` rows for one component of a two dimensional field.
pub fn write_csv_2d(path: &Path, f: &GridField, comp: usize) -> Result<()> {
    if f.grid.dim() != 2 || comp >= f.ncomp() {
        return Err(Error::invalid("write_csv_2d needs a 2d field and a valid component"));
    }
    let mut s = String::from("x,y,value\n");
    for idx in 0..f.grid.len() {
        let x = f.grid.coord(idx);
        s.push_str(&format!("{},{},{:e}\n", x[0], x[1], f.at(idx)[comp]));
    }
    fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::unit(2, 7).unwrap();
        let f = GridField::from_fn(&g, Rank::Sym, |x, o| {
            o[0] = x[0].sin();
            o[1] = 1.0 / 3.0;
            o[2] = x[1] * 1e-300;
        });
        let p = dir.path().join("f.cifd");
        write_field(&p, &f).unwrap();
        let back = read_field(&p).unwrap();
        assert_eq!(back.rank, Rank::Sym);
        assert!(back.values.iter().zip(&f.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad");
        fs::write(&p, b"not a field").unwrap();
        assert!(read_field(&p).is_err());
    }
}
