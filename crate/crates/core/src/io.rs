//! Field serialisation: a self-describing binary container and CSV export
//! for one-dimensional slices.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::GridSpec;

const MAGIC: &[u8; 4] = b"SBLF";
const VERSION: u32 = 1;

/// Layout: magic, version, dimension, components, per-axis (extent, points),
/// representation flag (0 = samples, 1 = coefficients), row-major complex
/// data as little-endian f64 pairs.
pub fn write_field<P: AsRef<Path>>(field: &SpectralField, path: P) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    let grid = field.grid();
    out.write_all(MAGIC)?;
    out.write_u32::<LittleEndian>(VERSION)?;
    out.write_u32::<LittleEndian>(grid.dimension() as u32)?;
    out.write_u32::<LittleEndian>(grid.components() as u32)?;
    for a in 0..grid.dimension() {
        out.write_f64::<LittleEndian>(grid.extents()[a])?;
        out.write_u64::<LittleEndian>(grid.points()[a] as u64)?;
    }
    out.write_u32::<LittleEndian>(0)?; // samples
    for v in field.values() {
        out.write_f64::<LittleEndian>(v.re)?;
        out.write_f64::<LittleEndian>(v.im)?;
    }
    Ok(())
}

pub fn read_field<P: AsRef<Path>>(path: P) -> Result<SpectralField> {
    let mut inp = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    inp.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a field container".into()));
    }
    let version = inp.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let dim = inp.read_u32::<LittleEndian>()? as usize;
    let m = inp.read_u32::<LittleEndian>()? as usize;
    let mut extents = Vec::with_capacity(dim);
    let mut points = Vec::with_capacity(dim);
    for _ in 0..dim {
        extents.push(inp.read_f64::<LittleEndian>()?);
        points.push(inp.read_u64::<LittleEndian>()? as usize);
    }
    let grid = if dim == 0 {
        GridSpec::point(m)
    } else {
        GridSpec::new(&extents, &points, m)?
    };
    let flag = inp.read_u32::<LittleEndian>()?;
    let mut data = vec![Complex64::default(); grid.total_len()];
    for v in &mut data {
        let re = inp.read_f64::<LittleEndian>()?;
        let im = inp.read_f64::<LittleEndian>()?;
        *v = Complex64::new(re, im);
    }
    match flag {
        0 => SpectralField::from_values(grid, data),
        1 => SpectralField::from_fourier(grid, data),
        other => Err(Error::Format(format!("unknown representation flag {other}"))),
    }
}

/// CSV export of a 1D field (or 1D slice already extracted): columns
/// x, re_0, im_0, ..., with fixed scientific formatting so identical runs
/// produce identical bytes.
pub fn write_csv_1d<P: AsRef<Path>>(field: &SpectralField, path: P) -> Result<()> {
    let grid = field.grid();
    if grid.dimension() != 1 {
        return Err(Error::Format(format!(
            "CSV export takes 1D fields, got dimension {}",
            grid.dimension()
        )));
    }
    let m = grid.components();
    let n = grid.points()[0];
    let vals = field.values();
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    let mut header = String::from("x");
    for c in 0..m {
        header.push_str(&format!(",re_{c},im_{c}"));
    }
    writeln!(out, "{header}")?;
    for i in 0..n {
        let mut line = format!("{:.12e}", grid.coord(0, i));
        for c in 0..m {
            let v = vals[c * n + i];
            line.push_str(&format!(",{:.12e},{:.12e}", v.re, v.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
