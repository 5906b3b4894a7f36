//! Loading external HDR frame sequences.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cube::{load_vcube, Frame, VideoCube};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestFormat {
    /// One `.pfm` file per tick.
    Pfm,
    /// `.vcube` files concatenated along time.
    Vcube,
}

impl FromStr for IngestFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pfm" | "pfm_sequence" => Ok(Self::Pfm),
            "vcube" => Ok(Self::Vcube),
            other => Err(Error::Usage(format!("unknown ingest format `{other}` (pfm, vcube)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub cube: VideoCube,
    /// Negative samples raised to zero.
    pub clamped: usize,
}

fn ingest_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Ingestion(format!("{}: {msg}", path.display()))
}

/// Parses a PFM image (`PF` colour or `Pf` grey); colour is averaged to grey.
/// Rows are returned top to bottom.
pub fn parse_pfm(bytes: &[u8]) -> Result<Frame> {
    // Three whitespace-terminated header tokens, then one separator byte.
    let mut tokens = Vec::with_capacity(4);
    let mut pos = 0;
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos || pos >= bytes.len() {
            return Err(Error::Format("truncated PFM header".into()));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| Error::Format("non-ASCII PFM header".into()))?);
    }
    pos += 1;
    let channels = match tokens[0] {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::Format(format!("bad PFM magic `{other}`"))),
    };
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad PFM dimension `{s}`")));
    let (cols, rows) = (num(tokens[1])?, num(tokens[2])?);
    let scale: f64 = tokens[3]
        .parse()
        .map_err(|_| Error::Format(format!("bad PFM scale `{}`", tokens[3])))?;
    if rows == 0 || cols == 0 || scale == 0.0 {
        return Err(Error::Format("PFM with empty dims or zero scale".into()));
    }
    let little = scale < 0.0;
    let count = rows * cols * channels;
    let payload = &bytes[pos.min(bytes.len())..];
    if payload.len() < 4 * count {
        return Err(Error::Truncated {
            expected: 4 * count,
            actual: payload.len(),
        });
    }
    let vals: Vec<f32> = payload[..4 * count]
        .chunks_exact(4)
        .map(|b| {
            let b: [u8; 4] = b.try_into().unwrap();
            if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    Ok(Frame::from_fn(rows, cols, |r, c| {
        let base = ((rows - 1 - r) * cols + c) * channels;
        vals[base..base + channels].iter().map(|&v| v as f64).sum::<f64>() / channels as f64
    }))
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pfm(&bytes).map_err(|e| ingest_err(path, e))
}

/// Writes a greyscale little-endian PFM.
pub fn write_pfm(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("Pf\n{} {}\n-1.0\n", frame.cols, frame.rows).into_bytes();
    for r in (0..frame.rows).rev() {
        for c in 0..frame.cols {
            out.extend_from_slice(&(frame.get(r, c) as f32).to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn sorted_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case(ext)))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Ingestion(format!("no .{ext} files in {}", dir.display())));
    }
    Ok(files)
}

/// Stacks the frames in `dir` in lexicographic file order. PFM sequences use
/// `tick_ms`; `.vcube` inputs must agree on size and tick and keep their own.
/// Negative samples are clamped to zero and counted.
pub fn ingest_hdr_sequence(dir: impl AsRef<Path>, format: IngestFormat, tick_ms: f64) -> Result<Ingested> {
    let dir = dir.as_ref();
    let (rows, cols, tick_ms, frames) = match format {
        IngestFormat::Pfm => {
            let files = sorted_files(dir, "pfm")?;
            let mut frames = Vec::with_capacity(files.len());
            for f in &files {
                frames.push((f.clone(), read_pfm(f)?));
            }
            let (r, c) = (frames[0].1.rows, frames[0].1.cols);
            for (f, fr) in &frames {
                if (fr.rows, fr.cols) != (r, c) {
                    return Err(ingest_err(f, format!("frame is {}x{}, expected {r}x{c}", fr.rows, fr.cols)));
                }
            }
            let frames: Vec<Vec<f32>> = frames
                .into_iter()
                .map(|(_, fr)| fr.data.into_iter().map(|v| v as f32).collect())
                .collect();
            (r, c, tick_ms, frames)
        }
        IngestFormat::Vcube => {
            let files = sorted_files(dir, "vcube")?;
            let mut frames = Vec::new();
            let mut shape = None;
            for f in &files {
                let cube = load_vcube(f).map_err(|e| ingest_err(f, e))?;
                let key = (cube.rows(), cube.cols(), cube.tick_us());
                match shape {
                    None => shape = Some(key),
                    Some(s) if s != key => {
                        return Err(ingest_err(
                            f,
                            format!("{}x{} @ {} µs differs from {}x{} @ {} µs", key.0, key.1, key.2, s.0, s.1, s.2),
                        ))
                    }
                    _ => {}
                }
                for t in 0..cube.ticks() {
                    frames.push(cube.frame(t).data.into_iter().map(|v| v as f32).collect());
                }
            }
            let (r, c, us) = shape.expect("at least one file");
            (r, c, us as f64 / 1000.0, frames)
        }
    };
    let ticks = frames.len();
    let mut clamped = 0;
    let mut data = vec![0.0f32; rows * cols * ticks];
    for (t, frame) in frames.iter().enumerate() {
        for (i, &v) in frame.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Ingestion(format!("non-finite sample at tick {t}, pixel {i}")));
            }
            data[i * ticks + t] = if v < 0.0 {
                clamped += 1;
                0.0
            } else {
                v
            };
        }
    }
    Ok(Ingested {
        cube: VideoCube::new(rows, cols, ticks, tick_ms, data)?,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb_pfm(rows: usize, cols: usize, px: [f32; 3]) -> Vec<u8> {
        let mut b = format!("PF\n{cols} {rows}\n1.0\n").into_bytes();
        for _ in 0..rows * cols {
            for v in px {
                b.extend_from_slice(&v.to_be_bytes());
            }
        }
        b
    }

    #[test]
    fn pfm_round_trip_and_orientation() {
        let dir = tempfile::tempdir().unwrap();
        let f = Frame::from_fn(3, 2, |r, c| (r * 2 + c) as f64);
        let path = dir.path().join("a.pfm");
        write_pfm(&f, &path).unwrap();
        assert_eq!(read_pfm(&path).unwrap(), f);
        // First stored row is the bottom row.
        let bytes = fs::read(&path).unwrap();
        let first = f32::from_le_bytes(bytes[bytes.len() - 24..bytes.len() - 20].try_into().unwrap());
        assert_eq!(first, 4.0);
    }

    #[test]
    fn rgb_is_channel_mean() {
        let f = parse_pfm(&rgb_pfm(2, 2, [0.2, 0.4, 0.6])).unwrap();
        assert!(f.data.iter().all(|&v| (v - 0.4).abs() < 1e-7));
    }

    #[test]
    fn sequence_ingestion() {
        let dir = tempfile::tempdir().unwrap();
        for t in 0..8 {
            let f = Frame::from_fn(64, 64, |r, c| if r == 0 && c == 0 { -0.01 } else { t as f64 });
            write_pfm(&f, dir.path().join(format!("frame_{t:03}.pfm"))).unwrap();
        }
        let got = ingest_hdr_sequence(dir.path(), IngestFormat::Pfm, 1.0).unwrap();
        assert_eq!(got.cube.dims(), (64, 64, 8));
        assert_eq!(got.clamped, 8);
        assert_eq!(got.cube.get(0, 0, 3), 0.0);
        assert_eq!(got.cube.get(5, 5, 3), 3.0);

        write_pfm(&Frame::from_fn(32, 64, |_, _| 0.0), dir.path().join("frame_999.pfm")).unwrap();
        let err = ingest_hdr_sequence(dir.path(), IngestFormat::Pfm, 1.0).unwrap_err();
        assert!(matches!(err, Error::Ingestion(ref m) if m.contains("frame_999.pfm")));
    }

    #[test]
    fn unreadable_frame_is_named() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("bad.pfm"), b"P6\n1 1\n255\n").unwrap();
        let err = ingest_hdr_sequence(dir.path(), IngestFormat::Pfm, 1.0).unwrap_err();
        assert!(err.to_string().contains("bad.pfm"));
    }

    #[test]
    fn vcube_concatenation() {
        let dir = tempfile::tempdir().unwrap();
        let a = VideoCube::filled(4, 4, 3, 2.0, 1.0).unwrap();
        let b = VideoCube::filled(4, 4, 2, 2.0, 2.0).unwrap();
        crate::cube::save_vcube(&a, dir.path().join("0.vcube")).unwrap();
        crate::cube::save_vcube(&b, dir.path().join("1.vcube")).unwrap();
        let got = ingest_hdr_sequence(dir.path(), IngestFormat::Vcube, 1.0).unwrap();
        assert_eq!(got.cube.dims(), (4, 4, 5));
        assert_eq!(got.cube.tick_ms(), 2.0);
        assert_eq!(got.cube.pixel(1, 1), &[1.0, 1.0, 1.0, 2.0, 2.0]);
    }
}
