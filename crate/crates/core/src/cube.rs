//! The video cube container and its `.vcube` binary format.
//!
//! A [`VideoCube`] is a dense `rows × cols × ticks` scalar field stored in
//! row-major `(row, col, tick)` order, so the time series of one pixel is a
//! contiguous slice. Cubes are immutable once built; every transform in this
//! crate returns a new cube.
//!
//! The file layout is a 32-byte little-endian header followed by the payload:
//!
//! | offset | field    | type |
//! |--------|----------|------|
//! | 0      | magic    | `b"VCUB"` |
//! | 4      | version  | u32 = 1 |
//! | 8      | rows     | u32 |
//! | 12     | cols     | u32 |
//! | 16     | ticks    | u32 |
//! | 20     | tick_us  | u32 |
//! | 24     | reserved | u32 = 0 |
//! | 28     | (pad)    | u32 = 0 |
//! | 32     | payload  | `rows*cols*ticks` × f32 LE |

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const VCUBE_MAGIC: [u8; 4] = *b"VCUB";
pub const VCUBE_VERSION: u32 = 1;
pub const VCUBE_HEADER_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct VideoCube {
    rows: usize,
    cols: usize,
    ticks: usize,
    tick_us: u32,
    data: Vec<f32>,
}

fn tick_ms_to_us(tick_ms: f64) -> Result<u32> {
    if !tick_ms.is_finite() || tick_ms <= 0.0 {
        return Err(Error::Validation(format!(
            "tick duration must be positive, got {tick_ms} ms"
        )));
    }
    let us = (tick_ms * 1000.0).round();
    if us < 1.0 || us > u32::MAX as f64 {
        return Err(Error::Validation(format!(
            "tick duration {tick_ms} ms is not representable in whole microseconds"
        )));
    }
    Ok(us as u32)
}

impl VideoCube {
    /// Builds a cube from row-major `(row, col, tick)` data, checking every invariant.
    pub fn new(rows: usize, cols: usize, ticks: usize, tick_ms: f64, data: Vec<f32>) -> Result<Self> {
        let tick_us = tick_ms_to_us(tick_ms)?;
        Self::from_parts(rows, cols, ticks, tick_us, data)
    }

    fn from_parts(rows: usize, cols: usize, ticks: usize, tick_us: u32, data: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 || ticks == 0 {
            return Err(Error::Validation(format!(
                "cube dimensions must be positive, got {rows}x{cols}x{ticks}"
            )));
        }
        if tick_us == 0 {
            return Err(Error::Validation("tick duration must be positive".into()));
        }
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(ticks))
            .ok_or_else(|| Error::Validation("cube dimensions overflow".into()))?;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "data length {} does not match {rows}x{cols}x{ticks} = {expected}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value {} at flat index {i}",
                data[i]
            )));
        }
        Ok(Self {
            rows,
            cols,
            ticks,
            tick_us,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize, ticks: usize, tick_ms: f64) -> Result<Self> {
        Self::filled(rows, cols, ticks, tick_ms, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, ticks: usize, tick_ms: f64, value: f32) -> Result<Self> {
        Self::new(rows, cols, ticks, tick_ms, vec![value; rows * cols * ticks])
    }

    /// Builds a cube by evaluating `f(row, col, tick)` at every sample.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        ticks: usize,
        tick_ms: f64,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols * ticks);
        for r in 0..rows {
            for c in 0..cols {
                for t in 0..ticks {
                    data.push(f(r, c, t));
                }
            }
        }
        Self::new(rows, cols, ticks, tick_ms, data)
    }

    /// A cube with the same geometry and tick duration as `self` but new data.
    pub fn with_data(&self, data: Vec<f32>) -> Result<Self> {
        Self::from_parts(self.rows, self.cols, self.ticks, self.tick_us, data)
    }

    /// Applies `f` to every sample.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<Self> {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn ticks(&self) -> usize {
        self.ticks
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.ticks)
    }

    pub fn tick_ms(&self) -> f64 {
        self.tick_us as f64 / 1000.0
    }

    pub fn tick_us(&self) -> u32 {
        self.tick_us
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, tick: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols && tick < self.ticks);
        (row * self.cols + col) * self.ticks + tick
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, tick: usize) -> f32 {
        self.data[self.index(row, col, tick)]
    }

    /// The time series of one pixel.
    pub fn pixel(&self, row: usize, col: usize) -> &[f32] {
        let start = self.index(row, col, 0);
        &self.data[start..start + self.ticks]
    }

    pub fn frame(&self, tick: usize) -> Frame {
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                data.push(self.get(r, c, tick) as f64);
            }
        }
        Frame {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Same-geometry check used by every binary operation.
    pub fn ensure_same_dims(&self, other: &VideoCube, what: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Shape(format!(
                "{what}: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }

    /// Extracts the sub-cube starting at `origin` with the given size.
    pub fn crop(&self, origin: (usize, usize, usize), size: (usize, usize, usize)) -> Result<Self> {
        let (r0, c0, t0) = origin;
        let (nr, nc, nt) = size;
        if r0 + nr > self.rows || c0 + nc > self.cols || t0 + nt > self.ticks {
            return Err(Error::Size(format!(
                "crop {size:?} at {origin:?} exceeds cube {:?}",
                self.dims()
            )));
        }
        let mut data = Vec::with_capacity(nr * nc * nt);
        for r in r0..r0 + nr {
            for c in c0..c0 + nc {
                let px = self.pixel(r, c);
                data.extend_from_slice(&px[t0..t0 + nt]);
            }
        }
        Self::from_parts(nr, nc, nt, self.tick_us, data)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(VCUBE_HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(&VCUBE_MAGIC);
        for field in [
            VCUBE_VERSION,
            self.rows as u32,
            self.cols as u32,
            self.ticks as u32,
            self.tick_us,
            0,
            0,
        ] {
            out.extend_from_slice(&field.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != VCUBE_MAGIC {
            return Err(Error::Format("missing VCUB magic".into()));
        }
        if bytes.len() < VCUBE_HEADER_LEN {
            return Err(Error::Truncated {
                expected: VCUBE_HEADER_LEN,
                actual: bytes.len(),
            });
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
        let version = word(1);
        if version != VCUBE_VERSION {
            return Err(Error::Format(format!("unsupported vcube version {version}")));
        }
        let (rows, cols, ticks, tick_us) = (word(2) as usize, word(3) as usize, word(4) as usize, word(5));
        if rows == 0 || cols == 0 || ticks == 0 {
            return Err(Error::Validation(format!(
                "header declares empty cube {rows}x{cols}x{ticks}"
            )));
        }
        let count = rows * cols * ticks;
        let payload = &bytes[VCUBE_HEADER_LEN..];
        if payload.len() != count * 4 {
            return Err(Error::Truncated {
                expected: count * 4,
                actual: payload.len(),
            });
        }
        let data = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Self::from_parts(rows, cols, ticks, tick_us, data)
    }
}

/// Writes `cube` to `path` in the `.vcube` format.
pub fn save_vcube(cube: &VideoCube, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&cube.to_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_vcube(path: impl AsRef<Path>) -> Result<VideoCube> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    VideoCube::from_bytes(&bytes)
}

/// A single 2-D frame in f64, used by the spatial metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Frame {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "frame data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }
}
