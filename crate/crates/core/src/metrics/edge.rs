//! Slanted-edge MTF of a near-vertical edge.

use std::f64::consts::PI;

use crate::analysis::spectrum::sinc;
use crate::cube::Frame;
use crate::error::{Error, Result};

/// ESF bins per pixel.
pub const OVERSAMPLING: usize = 4;
/// MTF frequency step in cycles per pixel; the grid spans 0..=1.
pub const MTF_STEP: f64 = 0.005;
/// Accepted slant from vertical, in degrees.
pub const SLANT_RANGE_DEG: (f64, f64) = (2.0, 10.0);
/// Upper bound on the derivative-filter correction factor.
const MAX_CORRECTION: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roi {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Roi {
    pub fn full(frame: &Frame) -> Self {
        Self {
            row: 0,
            col: 0,
            rows: frame.rows,
            cols: frame.cols,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAnalysis {
    /// `(distance_px, value)` with distance measured along the edge normal.
    pub esf: Vec<(f64, f64)>,
    pub lsf: Vec<(f64, f64)>,
    /// `(cycles_per_px, modulation)`, 1 at DC.
    pub mtf: Vec<(f64, f64)>,
    pub mtf50: f64,
    pub rise_10_90_px: f64,
    /// Signed slant from vertical.
    pub edge_angle_deg: f64,
    pub slant_warning: Option<String>,
}

impl EdgeAnalysis {
    pub fn esf_csv(&self) -> String {
        curve_csv("distance_px,esf", &self.esf)
    }

    pub fn lsf_csv(&self) -> String {
        curve_csv("distance_px,lsf", &self.lsf)
    }

    pub fn mtf_csv(&self) -> String {
        curve_csv("cycles_per_px,mtf", &self.mtf)
    }
}

fn curve_csv(header: &str, points: &[(f64, f64)]) -> String {
    let mut out = format!("{header}\n");
    for (x, y) in points {
        out.push_str(&format!("{x},{y}\n"));
    }
    out
}

/// First `x` where `ys` crosses `level` going in `ys[0]`'s opposite direction,
/// linearly interpolated.
fn first_crossing(points: &[(f64, f64)], level: f64) -> Option<f64> {
    let above = points.first()?.1 >= level;
    points.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let crossed = if above { y1 < level } else { y1 >= level };
        crossed.then(|| if y1 == y0 { x1 } else { x0 + (level - y0) / (y1 - y0) * (x1 - x0) })
    })
}

/// Slanted-edge analysis: per-row gradient centroids give the edge line;
/// pixels projected onto its normal form a 4× oversampled ESF, whose
/// windowed derivative is transformed to the MTF.
pub fn slanted_edge_mtf(frame: &Frame, roi: Roi) -> Result<EdgeAnalysis> {
    if roi.rows < 4 || roi.cols < 8 || roi.row + roi.rows > frame.rows || roi.col + roi.cols > frame.cols {
        return Err(Error::Geometry(format!("ROI {roi:?} does not fit a {}x{} frame", frame.rows, frame.cols)));
    }
    let px = |r: usize, c: usize| frame.get(roi.row + r, roi.col + c);

    // Edge polarity from the mean row step.
    let mut total_step = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in 0..roi.rows {
        total_step += px(r, roi.cols - 1) - px(r, 0);
        for c in 0..roi.cols {
            lo = lo.min(px(r, c));
            hi = hi.max(px(r, c));
        }
    }
    let contrast = hi - lo;
    if !(contrast > 1e-6) || (total_step / roi.rows as f64).abs() < 0.2 * contrast {
        return Err(Error::Detection("no dominant vertical edge in the ROI".into()));
    }
    let sign = total_step.signum();

    // Gradient centroid per row; differences sit half-way between pixels.
    let mut ys = Vec::with_capacity(roi.rows);
    let mut xs = Vec::with_capacity(roi.rows);
    for r in 0..roi.rows {
        let (mut m0, mut m1) = (0.0, 0.0);
        for c in 0..roi.cols - 1 {
            let g = (sign * (px(r, c + 1) - px(r, c))).max(0.0);
            m0 += g;
            m1 += g * (c as f64 + 0.5);
        }
        if m0 > 0.05 * contrast {
            ys.push(r as f64);
            xs.push(m1 / m0);
        }
    }
    if ys.len() < roi.rows / 2 || ys.len() < 3 {
        return Err(Error::Detection("edge gradient too weak in most rows".into()));
    }

    // Least squares x = a + b·y.
    let n = ys.len() as f64;
    let my = ys.iter().sum::<f64>() / n;
    let mx = xs.iter().sum::<f64>() / n;
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = ys.iter().zip(&xs).map(|(y, x)| (y - my) * (x - mx)).sum();
    let b = sxy / syy;
    let a = mx - b * my;
    let angle_deg = b.atan().to_degrees();
    let slant_warning = (!(SLANT_RANGE_DEG.0..=SLANT_RANGE_DEG.1).contains(&angle_deg.abs())).then(|| {
        format!(
            "edge slant {:.2}° outside {}°–{}°; MTF may alias",
            angle_deg.abs(),
            SLANT_RANGE_DEG.0,
            SLANT_RANGE_DEG.1
        )
    });
    let cos = b.atan().cos();

    // Keep only distances every row reaches, so all bins are well populated.
    let x_top = a;
    let x_bottom = a + b * (roi.rows - 1) as f64;
    let reach = (x_top.min(x_bottom)).min((roi.cols - 1) as f64 - x_top.max(x_bottom)) * cos;
    let half_bins = (reach * OVERSAMPLING as f64).floor() as i64 - 1;
    if half_bins < 2 * OVERSAMPLING as i64 {
        return Err(Error::Geometry("edge too close to the ROI border".into()));
    }
    let nbins = (2 * half_bins) as usize;
    let mut sums = vec![0.0; nbins];
    let mut counts = vec![0usize; nbins];
    for r in 0..roi.rows {
        let xe = a + b * r as f64;
        for c in 0..roi.cols {
            let d = (c as f64 - xe) * cos;
            let k = (d * OVERSAMPLING as f64).floor() as i64 + half_bins;
            if (0..nbins as i64).contains(&k) {
                sums[k as usize] += px(r, c);
                counts[k as usize] += 1;
            }
        }
    }
    let mut esf: Vec<Option<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| (n > 0).then(|| s / n as f64))
        .collect();
    fill_gaps(&mut esf)?;
    let step = 1.0 / OVERSAMPLING as f64;
    let centre = |i: usize| (i as f64 - half_bins as f64 + 0.5) * step;
    let esf: Vec<(f64, f64)> = esf.iter().enumerate().map(|(i, v)| (centre(i), v.unwrap())).collect();

    // Central difference over bins, Hann window over the support.
    let m = nbins - 2;
    let lsf_raw: Vec<f64> = (1..nbins - 1)
        .map(|i| sign * (esf[i + 1].1 - esf[i - 1].1) / 2.0)
        .collect();
    let lsf: Vec<(f64, f64)> = lsf_raw
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (m - 1) as f64).cos();
            (centre(i + 1), v * w)
        })
        .collect();

    let dtft = |f: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (x, v) in &lsf {
            let ph = -2.0 * PI * f * x;
            re += v * ph.cos();
            im += v * ph.sin();
        }
        (re * re + im * im).sqrt()
    };
    let dc = dtft(0.0);
    if !(dc > 0.0) {
        return Err(Error::Detection("flat line-spread function".into()));
    }
    let nfreq = (1.0 / MTF_STEP).round() as usize;
    let mtf: Vec<(f64, f64)> = (0..=nfreq)
        .map(|i| {
            let f = i as f64 * MTF_STEP;
            // The two-bin central difference attenuates by sinc(2·f·step).
            let correction = (1.0 / sinc(2.0 * f * step)).min(MAX_CORRECTION);
            (f, dtft(f) / dc * correction)
        })
        .collect();
    let mtf50 = first_crossing(&mtf, 0.5)
        .ok_or_else(|| Error::Undefined("MTF never falls to 0.5 below 1 cycle/pixel".into()))?;

    // 10–90% rise on the ESF normalized to its end levels (rising orientation).
    let rising: Vec<(f64, f64)> = esf.iter().map(|&(x, v)| (x, sign * v)).collect();
    let lo = rising.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = rising.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let norm: Vec<(f64, f64)> = rising.iter().map(|&(x, v)| (x, (v - lo) / (hi - lo))).collect();
    let x10 = first_crossing(&norm, 0.1);
    let x90 = first_crossing(&norm, 0.9);
    let rise_10_90_px = match (x10, x90) {
        (Some(a), Some(b)) => b - a,
        _ => return Err(Error::Detection("edge spread never spans 10–90%".into())),
    };

    Ok(EdgeAnalysis {
        esf,
        lsf,
        mtf,
        mtf50,
        rise_10_90_px,
        edge_angle_deg: angle_deg,
        slant_warning,
    })
}

/// Linear fill of empty bins from their neighbours.
fn fill_gaps(v: &mut [Option<f64>]) -> Result<()> {
    let known: Vec<usize> = (0..v.len()).filter(|&i| v[i].is_some()).collect();
    if known.is_empty() {
        return Err(Error::Detection("no samples near the edge".into()));
    }
    for i in 0..v.len() {
        if v[i].is_some() {
            continue;
        }
        let next = known.partition_point(|&k| k < i);
        let val = match (next.checked_sub(1).map(|p| known[p]), known.get(next)) {
            (Some(l), Some(&r)) => {
                let (vl, vr) = (v[l].unwrap(), v[r].unwrap());
                vl + (vr - vl) * (i - l) as f64 / (r - l) as f64
            }
            (Some(l), None) => v[l].unwrap(),
            (None, Some(&r)) => v[r].unwrap(),
            (None, None) => unreachable!(),
        };
        v[i] = Some(val);
    }
    Ok(())
}
