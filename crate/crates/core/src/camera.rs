//! Camera response function, noise parameters and ADC bit depth.

use std::path::{Path, PathBuf};

use crate::config::KeyValues;
use crate::error::{Error, Result};

/// A monotone CRF sampled at knots, linearly interpolated between them.
///
/// Knots must start at `(0, 0)`, end at `(1, 1)`, and be strictly increasing
/// in both coordinates so the curve is invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl CrfTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Config("CRF table needs at least two (x, y) knots".into()));
        }
        if xs[0] != 0.0 || ys[0] != 0.0 || *xs.last().unwrap() != 1.0 || *ys.last().unwrap() != 1.0 {
            return Err(Error::Config("CRF table must run from (0, 0) to (1, 1)".into()));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&xs) || !increasing(&ys) {
            return Err(Error::Config("CRF table must be strictly increasing".into()));
        }
        Ok(Self { xs, ys })
    }

    /// Tabulates `f` on `n` uniform knots over [0, 1].
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    /// Two whitespace-separated columns `x y` per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => {
                    xs.push(x);
                    ys.push(y);
                }
                _ => return Err(Error::Config(format!("bad CRF table line `{line}`"))),
            }
        }
        Self::new(xs, ys)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    fn lookup(from: &[f64], to: &[f64], v: f64) -> f64 {
        // partition_point gives the first knot strictly above v.
        let i = from.partition_point(|&k| k <= v).clamp(1, from.len() - 1);
        let (x0, x1) = (from[i - 1], from[i]);
        let (y0, y1) = (to[i - 1], to[i]);
        y0 + (y1 - y0) * (v - x0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Crf {
    /// `R(x) = min(x, 1)^(1/gamma)`.
    Gamma(f64),
    Table(CrfTable),
}

impl Crf {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Crf::Gamma(g) => {
                if *g == 1.0 {
                    x
                } else {
                    x.powf(1.0 / g)
                }
            }
            Crf::Table(t) => CrfTable::lookup(&t.xs, &t.ys, x),
        }
    }

    /// `R⁻¹(y)` for `y ∈ [0, 1]`; callers validate the range.
    #[inline]
    pub fn invert_unchecked(&self, y: f64) -> f64 {
        match self {
            Crf::Gamma(g) => {
                if *g == 1.0 {
                    y
                } else {
                    y.powf(*g)
                }
            }
            Crf::Table(t) => CrfTable::lookup(&t.ys, &t.xs, y),
        }
    }

    pub fn invert(&self, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::Validation(format!("CRF input {y} outside [0, 1]")));
        }
        Ok(self.invert_unchecked(y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorNoise {
    pub full_well_electrons: f64,
    pub read_noise_electrons: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub crf: Crf,
    /// `None` disables the noise stage entirely.
    pub noise: Option<SensorNoise>,
    pub bit_depth: u32,
}

impl Default for CameraModel {
    /// Gamma 2.2, 10 000 e⁻ full well, 2 e⁻ read noise, 10-bit ADC.
    fn default() -> Self {
        Self {
            crf: Crf::Gamma(2.2),
            noise: Some(SensorNoise {
                full_well_electrons: 10_000.0,
                read_noise_electrons: 2.0,
            }),
            bit_depth: 10,
        }
    }
}

impl CameraModel {
    pub fn noiseless(gamma: f64) -> Self {
        Self {
            crf: Crf::Gamma(gamma),
            noise: None,
            bit_depth: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Crf::Gamma(g) = self.crf {
            if !g.is_finite() || g <= 0.0 {
                return Err(Error::Config(format!("gamma must be positive, got {g}")));
            }
        }
        if let Some(n) = self.noise {
            if !(n.full_well_electrons.is_finite() && n.full_well_electrons > 0.0) {
                return Err(Error::Config("full well must be positive".into()));
            }
            if !(n.read_noise_electrons.is_finite() && n.read_noise_electrons >= 0.0) {
                return Err(Error::Config("read noise must be non-negative".into()));
            }
        }
        if self.bit_depth == 0 || self.bit_depth > 24 {
            return Err(Error::Config(format!("unsupported bit depth {}", self.bit_depth)));
        }
        Ok(())
    }

    /// Largest code value, `2^bits − 1`.
    pub fn max_code(&self) -> f64 {
        ((1u64 << self.bit_depth) - 1) as f64
    }

    /// Readings at or above this level are treated as clipped.
    pub fn saturation_threshold(&self) -> f64 {
        1.0 - 1.0 / (1u64 << self.bit_depth) as f64
    }

    /// Reads `gamma` or `crf_table`, `full_well`, `read_noise`, `bit_depth`.
    /// A zero full well disables noise. Relative table paths resolve against `base_dir`.
    pub fn from_key_values(kv: &KeyValues, base_dir: Option<&Path>) -> Result<Self> {
        let crf = match kv.get("crf_table") {
            Some(p) => {
                let mut path = PathBuf::from(p);
                if path.is_relative() {
                    if let Some(dir) = base_dir {
                        path = dir.join(path);
                    }
                }
                Crf::Table(CrfTable::read(path)?)
            }
            None => Crf::Gamma(kv.parse_or("gamma", 2.2)?),
        };
        let full_well: f64 = kv.parse_or("full_well", 10_000.0)?;
        let read_noise: f64 = kv.parse_or("read_noise", 2.0)?;
        let noise = if full_well == 0.0 {
            None
        } else {
            Some(SensorNoise {
                full_well_electrons: full_well,
                read_noise_electrons: read_noise,
            })
        };
        let camera = Self {
            crf,
            noise,
            bit_depth: kv.parse_or("bit_depth", 10u32)?,
        };
        camera.validate()?;
        Ok(camera)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_key_values(&KeyValues::read(path)?, path.parent())
    }

    /// Parameter record for run logs. Table CRFs are summarized by knot count.
    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        match &self.crf {
            Crf::Gamma(g) => kv.insert("gamma", g),
            Crf::Table(t) => kv.insert("crf_table_knots", t.xs.len()),
        }
        let (fw, rn) = self
            .noise
            .map(|n| (n.full_well_electrons, n.read_noise_electrons))
            .unwrap_or((0.0, 0.0));
        kv.insert("full_well", fw);
        kv.insert("read_noise", rn);
        kv.insert("bit_depth", self.bit_depth);
        kv
    }
}
