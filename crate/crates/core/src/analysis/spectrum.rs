//! Spectra of box exposures sampled at staggered phases.
//!
//! Times are in milliseconds and frequencies in kHz throughout.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default truncation `|n| ≤ 16` of the replica sums.
pub const DEFAULT_REPLICA_RANGE: usize = 16;

/// `sin(πx)/(πx)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Continuous transform of the unit box on `[0, T]`: `T·sinc(fT)·e^{−jπfT}`.
pub fn exposure_spectrum(t_e_ms: f64, f_khz: f64) -> Complex64 {
    let x = f_khz * t_e_ms;
    Complex64::from_polar(t_e_ms * sinc(x), -PI * x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRequest {
    pub t_e_ms: f64,
    pub num_phases: usize,
    pub replica_range: usize,
    pub freq_grid_khz: Vec<f64>,
}

impl SpectrumRequest {
    pub fn new(t_e_ms: f64, freq_grid_khz: Vec<f64>) -> Result<Self> {
        let req = Self {
            t_e_ms,
            num_phases: 4,
            replica_range: DEFAULT_REPLICA_RANGE,
            freq_grid_khz,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn with_replica_range(mut self, replica_range: usize) -> Result<Self> {
        self.replica_range = replica_range;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_e_ms.is_finite() && self.t_e_ms > 0.0) {
            return Err(Error::Validation(format!("T_E must be positive, got {}", self.t_e_ms)));
        }
        if self.num_phases == 0 {
            return Err(Error::Validation("at least one phase required".into()));
        }
        if self.replica_range == 0 {
            return Err(Error::Validation("replica range must be at least 1".into()));
        }
        let g = &self.freq_grid_khz;
        if g.iter().any(|f| !f.is_finite()) || g.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Validation("frequency grid must be finite and sorted".into()));
        }
        Ok(())
    }
}

/// `e^{−j2π·n(k−1)/K}`, reduced modulo `K` first so quarter turns are exact.
pub fn phase_factor(n: i64, k: usize, num_phases: usize) -> Complex64 {
    let kk = num_phases as i64;
    let m = (n * (k as i64 - 1)).rem_euclid(kk);
    if kk % 4 == 0 {
        let quarter = kk / 4;
        if m % quarter == 0 {
            return [
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, 1.0),
            ][(m / quarter) as usize];
        }
    }
    Complex64::from_polar(1.0, -2.0 * PI * m as f64 / kk as f64)
}

/// One term `(1/T)·E(f − n/T)·e^{−j2πn(k−1)/K}` of the phase-`k` replica sum.
pub fn replica_term(req: &SpectrumRequest, k: usize, n: i64, f_khz: f64) -> Complex64 {
    let t = req.t_e_ms;
    exposure_spectrum(t, f_khz - n as f64 / t) * phase_factor(n, k, req.num_phases) / t
}

fn check_phase(req: &SpectrumRequest, k: usize) -> Result<()> {
    req.validate()?;
    if k == 0 || k > req.num_phases {
        return Err(Error::Validation(format!(
            "phase index {k} outside 1..={}",
            req.num_phases
        )));
    }
    Ok(())
}

/// Spectrum of the pixel sampled at phase `k` (1-based), truncated at `replica_range`.
pub fn phase_pixel_spectrum(req: &SpectrumRequest, k: usize) -> Result<Vec<Complex64>> {
    check_phase(req, k)?;
    let n_max = req.replica_range as i64;
    Ok(req
        .freq_grid_khz
        .iter()
        .map(|&f| (-n_max..=n_max).map(|n| replica_term(req, k, n, f)).sum())
        .collect())
}

/// Mean of the `K` phase spectra.
pub fn averaged_spectrum(req: &SpectrumRequest) -> Result<Vec<Complex64>> {
    req.validate()?;
    let mut acc = vec![Complex64::new(0.0, 0.0); req.freq_grid_khz.len()];
    for k in 1..=req.num_phases {
        for (a, y) in acc.iter_mut().zip(phase_pixel_spectrum(req, k)?) {
            *a += y;
        }
    }
    let scale = 1.0 / req.num_phases as f64;
    Ok(acc.into_iter().map(|a| a * scale).collect())
}

/// Closed form of the average: only every `K`-th replica survives, and its
/// phase factors sum to `K`, leaving `(1/T)·Σ E(f − K·n/T)` over the same
/// truncation `|K·n| ≤ replica_range`.
pub fn averaged_spectrum_closed_form(req: &SpectrumRequest) -> Result<Vec<Complex64>> {
    req.validate()?;
    let kk = req.num_phases as i64;
    let n_max = req.replica_range as i64 / kk;
    let t = req.t_e_ms;
    let scale = 1.0 / t;
    Ok(req
        .freq_grid_khz
        .iter()
        .map(|&f| {
            let s: Complex64 = (-n_max..=n_max)
                .map(|n| exposure_spectrum(t, f - (kk * n) as f64 / t))
                .sum();
            s * scale
        })
        .collect())
}

/// `(frequency_khz, magnitude)` rows.
pub fn spectrum_csv(freq_grid_khz: &[f64], values: &[Complex64]) -> String {
    let mut out = String::from("frequency_khz,magnitude\n");
    for (f, v) in freq_grid_khz.iter().zip(values) {
        out.push_str(&format!("{f},{}\n", v.norm()));
    }
    out
}
