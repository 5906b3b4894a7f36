//! Sampling spectra, PSF spectra and the exposure-SNR model.

pub mod psf;
pub mod snr;
pub mod spectrum;

pub use psf::{find_zeros, mpve_psf_transfer, psf_spectrum};
pub use snr::{optimal_exposure, snr_curve, OptimalExposure, SnrCurve};
pub use spectrum::{averaged_spectrum, exposure_spectrum, phase_pixel_spectrum, SpectrumRequest};

/// Parses `start:stop:step` into an inclusive ascending grid.
pub fn parse_grid(spec: &str) -> crate::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || crate::Error::Usage(format!("grid `{spec}` is not start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<crate::Result<_>>()?;
    let (start, stop, step) = (v[0], v[1], v[2]);
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    // Tolerate floating error so `0.1:20:0.01` includes 20.
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0.1:20:0.01").unwrap();
        assert_eq!(g.len(), 1991);
        assert!((g.last().unwrap() - 20.0).abs() < 1e-9);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("1:2:0").is_err());
        assert!(parse_grid("3:2:1").is_err());
    }
}
