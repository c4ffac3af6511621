//! Self-describing field files.
//!
//! Both formats carry the dimension, one `(name, lo, hi, n)` record per axis
//! and the values in row-major order.
//!
//! CSV layout:
//!
//! ```text
//! # diffbench field v1
//! dim,2
//! axis,t,0,4,128
//! axis,x,-15,15,256
//! values
//! 0.0012
//! ...
//! ```
//!
//! Binary layout (little endian): the 8-byte magic `DBFIELD1`, `u32` dim,
//! then per axis `u32` name length, name bytes, `f64` lo, `f64` hi, `u64` n,
//! then the `f64` values.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::{AxisRange, Field, Grid};
use crate::error::{Error, Result};

const CSV_HEADER: &str = "# diffbench field v1";
const MAGIC: &[u8; 8] = b"DBFIELD1";

pub fn write_csv<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let grid = field.grid();
    writeln!(w, "{CSV_HEADER}")?;
    writeln!(w, "dim,{}", grid.dim())?;
    for (r, name) in grid.ranges().iter().zip(grid.names()) {
        writeln!(w, "axis,{name},{},{},{}", r.lo, r.hi, r.n)?;
    }
    writeln!(w, "values")?;
    for v in field.as_slice() {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Field> {
    let mut lines = BufReader::new(r).lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Format("unexpected end of field file".into()))?
            .map_err(Error::from)
    };
    if next()?.trim() != CSV_HEADER {
        return Err(Error::Format("missing field header".into()));
    }
    let dim_line = next()?;
    let dim: usize = dim_line
        .strip_prefix("dim,")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Format(format!("bad dim line `{dim_line}`")))?;
    let mut ranges = Vec::with_capacity(dim);
    let mut names = Vec::with_capacity(dim);
    for _ in 0..dim {
        let line = next()?;
        let parts: Vec<&str> = line.trim().split(',').collect();
        if parts.len() != 5 || parts[0] != "axis" {
            return Err(Error::Format(format!("bad axis line `{line}`")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Format(format!("bad number `{s}`")))
        };
        let n: usize = parts[4]
            .parse()
            .map_err(|_| Error::Format(format!("bad axis length `{}`", parts[4])))?;
        names.push(parts[1].to_string());
        ranges.push(AxisRange::new(parse(parts[2])?, parse(parts[3])?, n));
    }
    if next()?.trim() != "values" {
        return Err(Error::Format("missing values marker".into()));
    }
    let grid = Arc::new(Grid::uniform(&ranges)?.with_names(names)?);
    let mut values = Vec::with_capacity(grid.len());
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(
            t.parse::<f64>()
                .map_err(|_| Error::Format(format!("bad value `{t}`")))?,
        );
    }
    if values.len() != grid.len() {
        return Err(Error::Format(format!(
            "expected {} values, found {}",
            grid.len(),
            values.len()
        )));
    }
    Field::from_vec(grid, values)
}

pub fn write_binary<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for (r, name) in grid.ranges().iter().zip(grid.names()) {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&r.lo.to_le_bytes())?;
        w.write_all(&r.hi.to_le_bytes())?;
        w.write_all(&(r.n as u64).to_le_bytes())?;
    }
    for v in field.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Field> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a binary field file".into()));
    }
    let dim = read_u32(&mut r)? as usize;
    if dim == 0 || dim > 16 {
        return Err(Error::Format(format!("implausible dimension {dim}")));
    }
    let mut ranges = Vec::with_capacity(dim);
    let mut names = Vec::with_capacity(dim);
    for _ in 0..dim {
        let len = read_u32(&mut r)? as usize;
        if len > 256 {
            return Err(Error::Format("axis name too long".into()));
        }
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        names.push(String::from_utf8(name).map_err(|e| Error::Format(e.to_string()))?);
        let lo = read_f64(&mut r)?;
        let hi = read_f64(&mut r)?;
        let n = read_u64(&mut r)? as usize;
        ranges.push(AxisRange::new(lo, hi, n));
    }
    let grid = Arc::new(Grid::uniform(&ranges)?.with_names(names)?);
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(read_f64(&mut r)?);
    }
    Field::from_vec(grid, values)
}

/// Writes by file extension: `.csv` as text, anything else binary.
pub fn save(field: &Field, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    if path.extension().is_some_and(|e| e == "csv") {
        write_csv(field, file)
    } else {
        write_binary(field, file)
    }
}

pub fn load(path: &Path) -> Result<Field> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    if path.extension().is_some_and(|e| e == "csv") {
        read_csv(file)
    } else {
        read_binary(file)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_uniform_grid;
    use proptest::prelude::*;

    fn sample(nt: usize, nx: usize, phase: f64) -> Field {
        let g = make_uniform_grid(&[(0.0, 1.5, nt), (-2.0, 3.0, nx)])
            .unwrap()
            .with_names(["t", "x"])
            .unwrap();
        Field::from_fn(Arc::new(g), |c| (c[0] * 3.1 + c[1] + phase).sin() * 1e3).unwrap()
    }

    proptest! {
        #[test]
        fn both_formats_round_trip(nt in 5usize..12, nx in 5usize..12, phase in -3.0f64..3.0) {
            let f = sample(nt, nx, phase);

            let mut text = Vec::new();
            write_csv(&f, &mut text).unwrap();
            let g = read_csv(text.as_slice()).unwrap();
            prop_assert_eq!(g.as_slice(), f.as_slice());
            prop_assert_eq!(g.grid().names(), f.grid().names());
            prop_assert!(g.grid().same_as(f.grid()));

            let mut bin = Vec::new();
            write_binary(&f, &mut bin).unwrap();
            let h = read_binary(bin.as_slice()).unwrap();
            prop_assert_eq!(h.as_slice(), f.as_slice());
            prop_assert!(h.grid().same_as(f.grid()));
        }
    }

    #[test]
    fn truncated_inputs_fail() {
        let f = sample(5, 6, 0.0);
        let mut bin = Vec::new();
        write_binary(&f, &mut bin).unwrap();
        assert!(read_binary(&bin[..bin.len() - 3]).is_err());
        let mut text = Vec::new();
        write_csv(&f, &mut text).unwrap();
        let cut = String::from_utf8(text).unwrap();
        let cut: String = cut.lines().take(8).collect::<Vec<_>>().join("\n");
        assert!(read_csv(cut.as_bytes()).is_err());
    }
}
