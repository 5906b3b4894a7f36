//! Spectra of box point-spread functions of length `L_mult·L` and their
//! tile average, with frequencies in cycles per `L`.

use super::spectrum::sinc;
use crate::error::{Error, Result};

/// Kernel lengths of the short, mid, mid and long pixels of a tile.
pub const TILE_LENGTHS: [u32; 4] = [2, 4, 4, 8];

/// `|sinc(f·L_mult)|`.
pub fn psf_spectrum(length_multiple: u32, f: f64) -> f64 {
    sinc(f * length_multiple as f64).abs()
}

/// Signed transfer of a zero-phase (centered) box of length `L_mult`.
pub fn psf_transfer(length_multiple: u32, f: f64) -> f64 {
    sinc(f * length_multiple as f64)
}

/// Equal-weight average of the four tile kernels. Centering makes every
/// kernel's transfer real, so the average is a plain sum of sincs.
pub fn mpve_psf_transfer(f: f64) -> f64 {
    TILE_LENGTHS.iter().map(|&l| psf_transfer(l, f)).sum::<f64>() / TILE_LENGTHS.len() as f64
}

/// Roots of `g` on the grid: exact zeros at grid points plus sign changes
/// between neighbours, refined by bisection to `tol`.
pub fn find_zeros(g: impl Fn(f64) -> f64, grid: &[f64], tol: f64) -> Result<Vec<f64>> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("grid must be strictly increasing".into()));
    }
    // Values below this count as exact zeros; sinc at integers is ~1e-17, not 0.
    const ZERO: f64 = 1e-12;
    let vals: Vec<f64> = grid.iter().map(|&f| g(f)).collect();
    let mut zeros = Vec::new();
    for i in 0..grid.len() {
        if vals[i].abs() <= ZERO {
            zeros.push(grid[i]);
            continue;
        }
        if i + 1 < grid.len() && vals[i + 1].abs() > ZERO && vals[i].signum() != vals[i + 1].signum() {
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            let lo_sign = vals[i].signum();
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if g(mid).signum() == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
    }
    Ok(zeros)
}

/// `(frequency, |2L|, |4L|, |8L|, |average|)` rows.
pub fn psf_csv(grid: &[f64]) -> String {
    let mut out = String::from("frequency,psf_2l,psf_4l,psf_8l,mpve_average\n");
    for &f in grid {
        out.push_str(&format!(
            "{f},{},{},{},{}\n",
            psf_spectrum(2, f),
            psf_spectrum(4, f),
            psf_spectrum(8, f),
            mpve_psf_transfer(f).abs()
        ));
    }
    out
}
