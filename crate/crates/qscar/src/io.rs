//! QWF binary snapshot format and CSV helpers.
//!
//! Layout (little-endian): magic `QWF1`, u32 version = 1, u32 nx, u32 ny,
//! f64 x_min, x_max, y_min, y_max, f64 t0, f64 dt, u64 n_frames, then the
//! frames in order; each frame is nx*ny (f64 re, f64 im) pairs, row-major
//! with x as the outer index.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64 as C64;

use crate::domain::{Grid, WaveSeries, Wavefunction};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"QWF1";
const VERSION: u32 = 1;

/// Header + frame sizes for a series, in bytes. Useful for sanity checks.
pub fn file_size(nx: usize, ny: usize, n_frames: usize) -> usize {
    let header = 4 + 4 + 4 + 4 + 6 * 8 + 8;
    header + n_frames * nx * ny * 16
}

pub fn write_series(path: impl AsRef<Path>, series: &WaveSeries) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(series.grid.nx as u32)?;
    w.write_u32::<LittleEndian>(series.grid.ny as u32)?;
    w.write_f64::<LittleEndian>(series.grid.x_min)?;
    w.write_f64::<LittleEndian>(series.grid.x_max)?;
    w.write_f64::<LittleEndian>(series.grid.y_min)?;
    w.write_f64::<LittleEndian>(series.grid.y_max)?;
    w.write_f64::<LittleEndian>(series.t0)?;
    w.write_f64::<LittleEndian>(series.dt)?;
    w.write_u64::<LittleEndian>(series.frames.len() as u64)?;
    for frame in &series.frames {
        for a in frame {
            w.write_f64::<LittleEndian>(a.re)?;
            w.write_f64::<LittleEndian>(a.im)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_series(path: impl AsRef<Path>) -> Result<WaveSeries> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|e| truncated(path, format!("while reading magic: {e}")))?;
    if &magic != MAGIC {
        return Err(Error::BadMagic { path: path.into(), expected: "QWF1" });
    }
    let version = r.read_u32::<LittleEndian>().map_err(|e| truncated(path, e.to_string()))?;
    if version != VERSION {
        return Err(Error::BadVersion { path: path.into(), version });
    }
    let nx = r.read_u32::<LittleEndian>().map_err(|e| truncated(path, e.to_string()))? as usize;
    let ny = r.read_u32::<LittleEndian>().map_err(|e| truncated(path, e.to_string()))? as usize;
    let x_min = r.read_f64::<LittleEndian>().map_err(|e| truncated(path, e.to_string()))?;
    let x_max = r.read_f64::<LittleEndian>().map_err(|e| truncated(path, e.to_string()))?;
    let y_min = r.read_f64::<LittleEndian>().map_err(|e| truncated(path, e.to_string()))?;
    let y_max = r.read_f64::<LittleEndian>().map_err(|e| truncated(path, e.to_string()))?;
    let t0 = r.read_f64::<LittleEndian>().map_err(|e| truncated(path, e.to_string()))?;
    let dt = r.read_f64::<LittleEndian>().map_err(|e| truncated(path, e.to_string()))?;
    let n_frames = r.read_u64::<LittleEndian>().map_err(|e| truncated(path, e.to_string()))?;

    let grid = Grid::new(nx, ny, x_min, x_max, y_min, y_max)
        .map_err(|e| Error::DimensionOverflow { path: path.into(), detail: e.to_string() })?;
    let frame_len = nx
        .checked_mul(ny)
        .filter(|&n| n <= (1usize << 32))
        .ok_or_else(|| Error::DimensionOverflow {
            path: path.into(),
            detail: format!("{nx}x{ny} grid"),
        })?;
    let total = (n_frames as usize)
        .checked_mul(frame_len)
        .filter(|&n| n.checked_mul(16).is_some())
        .ok_or_else(|| Error::DimensionOverflow {
            path: path.into(),
            detail: format!("{n_frames} frames of {frame_len} points"),
        })?;
    let _ = total;

    let mut series = WaveSeries { grid, dt, t0, frames: Vec::with_capacity(n_frames as usize) };
    let mut buf = vec![0u8; frame_len * 16];
    for k in 0..n_frames {
        r.read_exact(&mut buf)
            .map_err(|_| truncated(path, format!("frame {k} of {n_frames}")))?;
        let mut frame = Vec::with_capacity(frame_len);
        for chunk in buf.chunks_exact(16) {
            let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
            frame.push(C64::new(re, im));
        }
        series.frames.push(frame);
    }
    Ok(series)
}

/// Writes a single field as a one-frame series with dt = 1.
pub fn write_field(path: impl AsRef<Path>, psi: &Wavefunction) -> Result<()> {
    let mut series = WaveSeries::new(psi.grid, 1.0, 0.0)?;
    series.push(psi.amps.clone())?;
    write_series(path, &series)
}

pub fn read_field(path: impl AsRef<Path>) -> Result<Wavefunction> {
    let path = path.as_ref();
    let series = read_series(path)?;
    if series.frames.is_empty() {
        return Err(Error::EmptyInput(format!("{} holds no frames", path.display())));
    }
    Ok(series.frame_as_wavefunction(0, path.display().to_string()))
}

fn truncated(path: &Path, detail: String) -> Error {
    Error::Truncated { path: path.into(), detail }
}
