//! Image- and time-domain quality metrics.

pub mod edge;
pub mod ssim;
pub mod temporal;

pub use edge::{slanted_edge_mtf, EdgeAnalysis, Roi};
pub use ssim::{mssim, mssim_cube};
pub use temporal::{full_duration, onset_time, temporal_contrast, TimeSeries, FD_FRACTION};

use crate::cube::VideoCube;
use crate::error::Result;

/// `10·log10(peak²/MSE)` over all samples; identical inputs give `+∞`.
pub fn psnr(a: &VideoCube, b: &VideoCube, peak: f64) -> Result<f64> {
    a.ensure_same_dims(b, "psnr")?;
    let sse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    let mse = sse / a.len() as f64;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psnr_examples() {
        let a = VideoCube::filled(3, 3, 2, 1.0, 0.5).unwrap();
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        // f32 storage leaves the 0.1 offset off by a few ulps.
        let b = a.map(|v| v - 0.1).unwrap();
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-5);
        let c = VideoCube::filled(3, 3, 3, 1.0, 0.5).unwrap();
        assert!(psnr(&a, &c, 1.0).is_err());
    }

    #[test]
    fn psnr_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = VideoCube::from_fn(5, 4, 3, 1.0, |_, _, _| rng.random::<f32>()).unwrap();
        let b = VideoCube::from_fn(5, 4, 3, 1.0, |_, _, _| rng.random::<f32>()).unwrap();
        let mut sse = 0.0;
        for r in 0..5 {
            for c in 0..4 {
                for t in 0..3 {
                    sse += (a.get(r, c, t) as f64 - b.get(r, c, t) as f64).powi(2);
                }
            }
        }
        let expected = 10.0 * (1.0 / (sse / 60.0)).log10();
        assert!((psnr(&a, &b, 1.0).unwrap() - expected).abs() < 1e-9);
    }
}
