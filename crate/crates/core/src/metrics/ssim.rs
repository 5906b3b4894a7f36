//! Gaussian-windowed SSIM averaged over valid window positions.

use crate::cube::{Frame, VideoCube};
use crate::error::{Error, Result};

pub const WINDOW: usize = 11;
pub const SIGMA: f64 = 1.5;
pub const C1: f64 = 1e-4;
pub const C2: f64 = 9e-4;

fn gaussian_kernel() -> [f64; WINDOW] {
    let mut k = [0.0; WINDOW];
    let half = (WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - half;
        *v = (-x * x / (2.0 * SIGMA * SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

/// Separable weighted sum over every valid 11×11 placement.
fn filter_valid(data: &[f64], rows: usize, cols: usize, k: &[f64; WINDOW]) -> Vec<f64> {
    let out_c = cols - WINDOW + 1;
    let out_r = rows - WINDOW + 1;
    let mut horiz = vec![0.0; rows * out_c];
    for r in 0..rows {
        for c in 0..out_c {
            horiz[r * out_c + c] = (0..WINDOW).map(|i| k[i] * data[r * cols + c + i]).sum();
        }
    }
    let mut out = vec![0.0; out_r * out_c];
    for r in 0..out_r {
        for c in 0..out_c {
            out[r * out_c + c] = (0..WINDOW).map(|i| k[i] * horiz[(r + i) * out_c + c]).sum();
        }
    }
    out
}

/// Mean SSIM of two frames.
pub fn mssim(a: &Frame, b: &Frame) -> Result<f64> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::Shape(format!(
            "frames {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    if a.rows < WINDOW || a.cols < WINDOW {
        return Err(Error::Size(format!(
            "frame {}x{} smaller than the {WINDOW}x{WINDOW} window",
            a.rows, a.cols
        )));
    }
    let k = gaussian_kernel();
    let (rows, cols) = (a.rows, a.cols);
    let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mu_a = filter_valid(&a.data, rows, cols, &k);
    let mu_b = filter_valid(&b.data, rows, cols, &k);
    let aa = filter_valid(&prod(&a.data, &a.data), rows, cols, &k);
    let bb = filter_valid(&prod(&b.data, &b.data), rows, cols, &k);
    let ab = filter_valid(&prod(&a.data, &b.data), rows, cols, &k);
    let n = mu_a.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2))
        })
        .sum();
    Ok(total / n as f64)
}

/// Mean of per-frame MSSIM over all ticks.
pub fn mssim_cube(a: &VideoCube, b: &VideoCube) -> Result<f64> {
    a.ensure_same_dims(b, "mssim")?;
    let mut total = 0.0;
    for t in 0..a.ticks() {
        total += mssim(&a.frame(t), &b.frame(t))?;
    }
    Ok(total / a.ticks() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(rng: &mut ChaCha8Rng, n: usize) -> Frame {
        Frame::from_fn(n, n, |_, _| rng.random::<f64>())
    }

    #[test]
    fn identical_frames_score_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_frame(&mut rng, 16);
        assert_eq!(mssim(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn constant_frames() {
        let a = Frame::from_fn(12, 12, |_, _| 0.5);
        let b = Frame::from_fn(12, 12, |_, _| 0.6);
        let expected = (2.0 * 0.3 + C1) / (0.25 + 0.36 + C1);
        assert!((mssim(&a, &b).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.983609).abs() < 1e-6);
    }

    #[test]
    fn symmetric_and_size_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_frame(&mut rng, 14);
        let b = random_frame(&mut rng, 14);
        assert!((mssim(&a, &b).unwrap() - mssim(&b, &a).unwrap()).abs() < 1e-15);
        let small = Frame::from_fn(10, 20, |_, _| 0.0);
        assert!(matches!(mssim(&small, &small), Err(Error::Size(_))));
    }

    #[test]
    fn matches_direct_window_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_frame(&mut rng, 13);
        let b = random_frame(&mut rng, 13);
        // Two-dimensional weights built directly, without the separable pass.
        let g = |i: usize| (-((i as f64 - 5.0).powi(2)) / 4.5).exp();
        let norm: f64 = (0..11).map(g).sum::<f64>().powi(2);
        let mut total = 0.0;
        for r0 in 0..3 {
            for c0 in 0..3 {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let w = g(i) * g(j) / norm;
                        let (x, y) = (a.get(r0 + i, c0 + j), b.get(r0 + i, c0 + j));
                        ma += w * x;
                        mb += w * y;
                        saa += w * x * x;
                        sbb += w * y * y;
                        sab += w * x * y;
                    }
                }
                let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
                total += (2.0 * ma * mb + C1) * (2.0 * cov + C2) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
            }
        }
        assert!((mssim(&a, &b).unwrap() - total / 9.0).abs() < 1e-12);
    }
}
