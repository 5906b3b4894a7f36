//! Synthetic irradiance scenes, dataset generation and HDR sequence ingestion.
//!
//! Generators are deterministic: the same spec always renders the same cube.
//! Values are linear irradiance per tick.

mod dataset;
mod ingest;

pub use dataset::{
    augment_rotations, crop_cubes, downsample_half, make_dataset, rotate90, Augmented, Crop, DatasetManifest,
    DatasetOptions, ManifestEntry, MANIFEST_VERSION,
};
pub use ingest::{ingest_hdr_sequence, parse_pfm, read_pfm, write_pfm, IngestFormat, Ingested};

use std::f64::consts::PI;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::KeyValues;
use crate::cube::{Frame, VideoCube};
use crate::error::{Error, Result};

/// Default LED onset delay.
pub const DEFAULT_LED_DELAY_MS: f64 = 2.0;
/// Default fan speed.
pub const DEFAULT_RPM: f64 = 300.0;

/// A filled circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub row: f64,
    pub col: f64,
    pub radius: f64,
    pub level: f64,
}

impl Disk {
    fn contains(&self, y: f64, x: f64) -> bool {
        (y - self.row).powi(2) + (x - self.col).powi(2) <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedPair {
    /// Onset of the left LED.
    pub onset_ms: f64,
    /// The right LED turns on this much later.
    pub delay_ms: f64,
    pub left: (f64, f64),
    pub right: (f64, f64),
    pub radius_px: f64,
    pub level: f64,
    pub background: f64,
}

impl LedPair {
    /// LEDs at a quarter and three quarters of the width, mid height.
    pub fn centered(rows: usize, cols: usize, onset_ms: f64) -> Self {
        let (r, c) = (rows as f64, cols as f64);
        Self {
            onset_ms,
            delay_ms: DEFAULT_LED_DELAY_MS,
            left: (r / 2.0, c / 4.0),
            right: (r / 2.0, 3.0 * c / 4.0),
            radius_px: r.min(c) / 8.0,
            level: 1.0,
            background: 0.01,
        }
    }

    pub fn left_disk(&self) -> Disk {
        Disk {
            row: self.left.0,
            col: self.left.1,
            radius: self.radius_px,
            level: self.level,
        }
    }

    pub fn right_disk(&self) -> Disk {
        Disk {
            row: self.right.0,
            col: self.right.1,
            radius: self.radius_px,
            level: self.level,
        }
    }
}

/// An "H" printed on a fan blade, orbiting the rotation centre and turning
/// with it. The H's uprights run radially, so a pixel on the orbit sees
/// upright, gap, upright as the letter sweeps past.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatingLetter {
    pub rpm: f64,
    /// Rotation centre `(row, col)`; the frame centre when `None`.
    pub center: Option<(f64, f64)>,
    pub orbit_radius_px: f64,
    pub letter_size_px: f64,
    pub start_angle_deg: f64,
    pub ambient: f64,
    pub letter_level: f64,
    /// Stationary bright disk behind the fan; the letter occludes it.
    pub hotspot: Option<Disk>,
}

impl RotatingLetter {
    pub fn new(rows: usize, cols: usize) -> Self {
        let m = rows.min(cols) as f64;
        Self {
            rpm: DEFAULT_RPM,
            center: None,
            orbit_radius_px: m * 0.3,
            letter_size_px: m * 0.25,
            start_angle_deg: 0.0,
            ambient: 0.05,
            letter_level: 0.5,
            hotspot: None,
        }
    }

    fn centre(&self, rows: usize, cols: usize) -> (f64, f64) {
        self.center.unwrap_or(((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0))
    }

    /// Rotation angle in degrees at time `t_ms`.
    pub fn angle_deg(&self, t_ms: f64) -> f64 {
        self.start_angle_deg + self.rpm * 360.0 / 60_000.0 * t_ms
    }

    /// Letter-local coordinates `(tangential, radial offset)` of point `(y, x)`.
    fn local(&self, cy: f64, cx: f64, angle_rad: f64, y: f64, x: f64) -> (f64, f64) {
        let (dy, dx) = (y - cy, x - cx);
        let (s, c) = angle_rad.sin_cos();
        let radial = dx * c + dy * s - self.orbit_radius_px;
        let tangential = -dx * s + dy * c;
        (tangential, radial)
    }

    /// Whether letter-local `(u, v)` lies on the H (stroke width = size/5).
    pub fn h_mask(size: f64, u: f64, v: f64) -> bool {
        let half = size / 2.0;
        let stroke = size / 5.0;
        if u.abs() > half || v.abs() > half {
            return false;
        }
        u <= -half + stroke || u >= half - stroke || v.abs() <= stroke / 2.0
    }

    /// Point on the orbit crossing the letter's uprights at radial offset
    /// `size/4`, where the letter first arrives at angle `at_angle_deg`.
    pub fn probe_pixel(&self, rows: usize, cols: usize, at_angle_deg: f64) -> (usize, usize) {
        let (cy, cx) = self.centre(rows, cols);
        let r = self.orbit_radius_px + self.letter_size_px / 4.0;
        let a = at_angle_deg.to_radians();
        ((cy + r * a.sin()).round() as usize, (cx + r * a.cos()).round() as usize)
    }

    /// Milliseconds for the letter to advance one letter width along the orbit.
    pub fn letter_pass_ms(&self) -> f64 {
        let speed = 2.0 * PI * self.rpm / 60_000.0 * self.orbit_radius_px;
        self.letter_size_px / speed
    }

    fn check_fits(&self, rows: usize, cols: usize) -> Result<()> {
        let (cy, cx) = self.centre(rows, cols);
        let reach = self.orbit_radius_px + self.letter_size_px / 2.0 * 2f64.sqrt();
        if self.letter_size_px <= 0.0
            || cy - reach < 0.0
            || cx - reach < 0.0
            || cy + reach > rows as f64 - 1.0
            || cx + reach > cols as f64 - 1.0
        {
            return Err(Error::Geometry(format!(
                "letter of size {} on orbit {} does not fit a {rows}x{cols} frame",
                self.letter_size_px, self.orbit_radius_px
            )));
        }
        Ok(())
    }
}

/// A dark bar target, a bright bulb and a rotating letter, in scene units
/// spanning 0.01 to 4.0, multiplied by `exposure_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrComposite {
    pub exposure_scale: f64,
    pub rpm: f64,
}

impl HdrComposite {
    pub const TARGET_DARK: f64 = 0.01;
    pub const TARGET_LIGHT: f64 = 0.04;
    pub const AMBIENT: f64 = 0.2;
    pub const LETTER: f64 = 1.0;
    pub const BULB: f64 = 4.0;

    pub fn new(exposure_scale: f64) -> Self {
        Self {
            exposure_scale,
            rpm: DEFAULT_RPM,
        }
    }

    /// Region `(row0, col0, row1, col1)` of the bar target, exclusive ends.
    pub fn target_region(rows: usize, cols: usize) -> (usize, usize, usize, usize) {
        (rows / 16, cols / 16, rows * 5 / 16, cols * 7 / 16)
    }

    pub fn bulb(rows: usize, cols: usize) -> Disk {
        Disk {
            row: rows as f64 * 0.75,
            col: cols as f64 * 0.72,
            radius: rows.min(cols) as f64 / 9.0,
            level: Self::BULB,
        }
    }

    pub fn letter(&self, rows: usize, cols: usize) -> RotatingLetter {
        let m = rows.min(cols) as f64;
        RotatingLetter {
            rpm: self.rpm,
            center: Some((rows as f64 * 0.3, cols as f64 * 0.72)),
            orbit_radius_px: m * 0.1,
            letter_size_px: m * 0.12,
            start_angle_deg: 0.0,
            ambient: Self::AMBIENT,
            letter_level: Self::LETTER,
            hotspot: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneKind {
    /// Whole frame at `level` for one tick, zero elsewhere.
    Impulse { tick: usize, level: f64 },
    LedPair(LedPair),
    RotatingLetter(RotatingLetter),
    /// Static step `dark | bright` slanted `angle_deg` from vertical.
    SlantedEdge { angle_deg: f64, dark: f64, bright: f64 },
    HdrComposite(HdrComposite),
}

impl SceneKind {
    pub fn name(&self) -> &'static str {
        match self {
            SceneKind::Impulse { .. } => "impulse",
            SceneKind::LedPair(_) => "led_pair",
            SceneKind::RotatingLetter(_) => "rotating_letter",
            SceneKind::SlantedEdge { .. } => "slanted_edge",
            SceneKind::HdrComposite(_) => "hdr_composite",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub rows: usize,
    pub cols: usize,
    pub ticks: usize,
    pub tick_ms: f64,
    pub kind: SceneKind,
}

/// Kind names accepted by [`SceneSpec::from_key_values`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKindName {
    Impulse,
    LedPair,
    RotatingLetter,
    SlantedEdge,
    HdrComposite,
}

impl FromStr for SceneKindName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "impulse" => Self::Impulse,
            "led_pair" => Self::LedPair,
            "rotating_letter" => Self::RotatingLetter,
            "slanted_edge" => Self::SlantedEdge,
            "hdr_composite" => Self::HdrComposite,
            other => return Err(Error::Usage(format!("unknown scene kind `{other}`"))),
        })
    }
}

fn parse_pair(kv: &KeyValues, key: &str, default: (f64, f64)) -> Result<(f64, f64)> {
    match kv.get(key) {
        None => Ok(default),
        Some(s) => {
            let (a, b) = s
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("{key} must be `row,col`")))?;
            let p = |v: &str| v.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number in {key}")));
            Ok((p(a)?, p(b)?))
        }
    }
}

impl SceneSpec {
    /// Builds a spec from kind-specific `key=value` parameters; unknown keys are rejected.
    pub fn from_key_values(kind: SceneKindName, rows: usize, cols: usize, ticks: usize, tick_ms: f64, kv: &KeyValues) -> Result<Self> {
        let allowed: &[&str] = match kind {
            SceneKindName::Impulse => &["tick", "level"],
            SceneKindName::LedPair => &["onset_ms", "delay_ms", "left", "right", "radius", "level", "background"],
            SceneKindName::RotatingLetter => &[
                "rpm", "center", "orbit_radius", "letter_size", "start_angle_deg", "ambient", "letter_level",
                "hotspot_center", "hotspot_radius", "hotspot_level",
            ],
            SceneKindName::SlantedEdge => &["angle_deg", "dark", "bright"],
            SceneKindName::HdrComposite => &["exposure_scale", "rpm"],
        };
        if let Some(k) = kv.keys().find(|k| !allowed.contains(k)) {
            return Err(Error::Config(format!("unknown parameter `{k}` (allowed: {})", allowed.join(", "))));
        }
        let kind = match kind {
            SceneKindName::Impulse => SceneKind::Impulse {
                tick: kv.parse_or("tick", ticks / 2)?,
                level: kv.parse_or("level", 1.0)?,
            },
            SceneKindName::LedPair => {
                let d = LedPair::centered(rows, cols, kv.parse_or("onset_ms", 0.0)?);
                SceneKind::LedPair(LedPair {
                    delay_ms: kv.parse_or("delay_ms", d.delay_ms)?,
                    left: parse_pair(kv, "left", d.left)?,
                    right: parse_pair(kv, "right", d.right)?,
                    radius_px: kv.parse_or("radius", d.radius_px)?,
                    level: kv.parse_or("level", d.level)?,
                    background: kv.parse_or("background", d.background)?,
                    ..d
                })
            }
            SceneKindName::RotatingLetter => {
                let d = RotatingLetter::new(rows, cols);
                let hotspot = match kv.get("hotspot_center") {
                    None => None,
                    Some(_) => {
                        let (row, col) = parse_pair(kv, "hotspot_center", (0.0, 0.0))?;
                        Some(Disk {
                            row,
                            col,
                            radius: kv.parse_or("hotspot_radius", rows.min(cols) as f64 / 8.0)?,
                            level: kv.parse_or("hotspot_level", 4.0)?,
                        })
                    }
                };
                SceneKind::RotatingLetter(RotatingLetter {
                    rpm: kv.parse_or("rpm", d.rpm)?,
                    center: match kv.get("center") {
                        Some(_) => Some(parse_pair(kv, "center", (0.0, 0.0))?),
                        None => None,
                    },
                    orbit_radius_px: kv.parse_or("orbit_radius", d.orbit_radius_px)?,
                    letter_size_px: kv.parse_or("letter_size", d.letter_size_px)?,
                    start_angle_deg: kv.parse_or("start_angle_deg", d.start_angle_deg)?,
                    ambient: kv.parse_or("ambient", d.ambient)?,
                    letter_level: kv.parse_or("letter_level", d.letter_level)?,
                    hotspot,
                })
            }
            SceneKindName::SlantedEdge => SceneKind::SlantedEdge {
                angle_deg: kv.parse_or("angle_deg", 5.0)?,
                dark: kv.parse_or("dark", 0.1)?,
                bright: kv.parse_or("bright", 0.9)?,
            },
            SceneKindName::HdrComposite => {
                let mut h = HdrComposite::new(kv.parse_or("exposure_scale", 0.1)?);
                h.rpm = kv.parse_or("rpm", h.rpm)?;
                SceneKind::HdrComposite(h)
            }
        };
        let spec = Self {
            rows,
            cols,
            ticks,
            tick_ms,
            kind,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.ticks == 0 {
            return Err(Error::Validation("scene dims must be positive".into()));
        }
        if !(self.tick_ms > 0.0 && self.tick_ms.is_finite()) {
            return Err(Error::Validation("tick_ms must be positive".into()));
        }
        let non_neg = |v: f64, what: &str| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("{what} must be non-negative, got {v}")))
            }
        };
        match &self.kind {
            SceneKind::Impulse { tick, level } => {
                non_neg(*level, "level")?;
                if *tick >= self.ticks {
                    return Err(Error::Validation(format!("impulse tick {tick} outside {} ticks", self.ticks)));
                }
            }
            SceneKind::LedPair(l) => {
                non_neg(l.level, "level")?;
                non_neg(l.background, "background")?;
                non_neg(l.delay_ms, "delay_ms")?;
                non_neg(l.radius_px, "radius")?;
            }
            SceneKind::RotatingLetter(l) => {
                non_neg(l.ambient, "ambient")?;
                non_neg(l.letter_level, "letter_level")?;
                if let Some(h) = l.hotspot {
                    non_neg(h.level, "hotspot_level")?;
                }
                l.check_fits(self.rows, self.cols)?;
            }
            SceneKind::SlantedEdge { angle_deg, dark, bright } => {
                non_neg(*dark, "dark")?;
                non_neg(*bright, "bright")?;
                if angle_deg.abs() >= 45.0 {
                    return Err(Error::Geometry("edge must be closer to vertical than 45°".into()));
                }
            }
            SceneKind::HdrComposite(h) => {
                non_neg(h.exposure_scale, "exposure_scale")?;
                h.letter(self.rows, self.cols).check_fits(self.rows, self.cols)?;
            }
        }
        Ok(())
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.insert("kind", self.kind.name());
        kv.insert("rows", self.rows);
        kv.insert("cols", self.cols);
        kv.insert("ticks", self.ticks);
        kv.insert("tick_ms", self.tick_ms);
        match &self.kind {
            SceneKind::Impulse { tick, level } => {
                kv.insert("tick", tick);
                kv.insert("level", level);
            }
            SceneKind::LedPair(l) => {
                kv.insert("onset_ms", l.onset_ms);
                kv.insert("delay_ms", l.delay_ms);
                kv.insert("left", format!("{},{}", l.left.0, l.left.1));
                kv.insert("right", format!("{},{}", l.right.0, l.right.1));
                kv.insert("radius", l.radius_px);
                kv.insert("level", l.level);
                kv.insert("background", l.background);
            }
            SceneKind::RotatingLetter(l) => {
                kv.insert("rpm", l.rpm);
                let (cy, cx) = l.centre(self.rows, self.cols);
                kv.insert("center", format!("{cy},{cx}"));
                kv.insert("orbit_radius", l.orbit_radius_px);
                kv.insert("letter_size", l.letter_size_px);
                kv.insert("start_angle_deg", l.start_angle_deg);
                kv.insert("ambient", l.ambient);
                kv.insert("letter_level", l.letter_level);
                if let Some(h) = l.hotspot {
                    kv.insert("hotspot_center", format!("{},{}", h.row, h.col));
                    kv.insert("hotspot_radius", h.radius);
                    kv.insert("hotspot_level", h.level);
                }
            }
            SceneKind::SlantedEdge { angle_deg, dark, bright } => {
                kv.insert("angle_deg", angle_deg);
                kv.insert("dark", dark);
                kv.insert("bright", bright);
            }
            SceneKind::HdrComposite(h) => {
                kv.insert("exposure_scale", h.exposure_scale);
                kv.insert("rpm", h.rpm);
            }
        }
        kv
    }
}

/// Spatial sub-samples per pixel side for anti-aliased rendering.
const SUPERSAMPLE: usize = 4;
/// Temporal sub-samples per tick for moving content.
const TIME_SUPERSAMPLE: usize = 2;

fn sub_offsets() -> impl Iterator<Item = (f64, f64)> {
    let n = SUPERSAMPLE;
    (0..n * n).map(move |k| {
        let o = |i: usize| (i as f64 + 0.5) / n as f64 - 0.5;
        (o(k / n), o(k % n))
    })
}

/// Disk coverage fraction of each pixel (pixel `(r, c)` spans `r ± ½`, `c ± ½`).
fn disk_coverage(disk: &Disk, rows: usize, cols: usize) -> Vec<f64> {
    let n = (SUPERSAMPLE * SUPERSAMPLE) as f64;
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let hits = sub_offsets()
                .filter(|(dy, dx)| disk.contains(r as f64 + dy, c as f64 + dx))
                .count();
            out[r * cols + c] = hits as f64 / n;
        }
    }
    out
}

/// Exact area fraction of each pixel right of the line through the frame
/// centre slanted `angle_deg` from vertical, mapped to `dark..bright`.
pub fn render_slanted_edge(rows: usize, cols: usize, angle_deg: f64, dark: f64, bright: f64) -> Frame {
    let (cy, cx) = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
    let slope = angle_deg.to_radians().tan();
    // Midpoint rule in y; the x-coverage is piecewise linear in y, so 256
    // strips leave only kink error far below f32 resolution.
    const STRIPS: usize = 256;
    Frame::from_fn(rows, cols, |r, c| {
        let mut acc = 0.0;
        for k in 0..STRIPS {
            let y = r as f64 - 0.5 + (k as f64 + 0.5) / STRIPS as f64;
            let x_edge = cx + slope * (y - cy);
            acc += (c as f64 + 0.5 - x_edge).clamp(0.0, 1.0);
        }
        let frac = acc / STRIPS as f64;
        dark + (bright - dark) * frac
    })
}

fn letter_frame(l: &RotatingLetter, rows: usize, cols: usize, t_tick: usize, tick_ms: f64, under: &[f64]) -> Vec<f64> {
    let (cy, cx) = l.centre(rows, cols);
    let angles: Vec<f64> = (0..TIME_SUPERSAMPLE)
        .map(|k| l.angle_deg((t_tick as f64 + (k as f64 + 0.5) / TIME_SUPERSAMPLE as f64) * tick_ms).to_radians())
        .collect();
    let reach = l.orbit_radius_px + l.letter_size_px;
    let n = (SUPERSAMPLE * SUPERSAMPLE * TIME_SUPERSAMPLE) as f64;
    let mut out = under.to_vec();
    for r in 0..rows {
        for c in 0..cols {
            if ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)).sqrt() > reach + 2.0 {
                continue;
            }
            let mut hits = 0usize;
            for &a in &angles {
                for (dy, dx) in sub_offsets() {
                    let (u, v) = l.local(cy, cx, a, r as f64 + dy, c as f64 + dx);
                    hits += usize::from(RotatingLetter::h_mask(l.letter_size_px, u, v));
                }
            }
            let f = hits as f64 / n;
            let i = r * cols + c;
            out[i] = (1.0 - f) * under[i] + f * l.letter_level;
        }
    }
    out
}

fn stack_frames(spec: &SceneSpec, frames: Vec<Vec<f64>>) -> Result<VideoCube> {
    let (rows, cols, ticks) = (spec.rows, spec.cols, spec.ticks);
    let mut data = vec![0.0f32; rows * cols * ticks];
    for (t, f) in frames.iter().enumerate() {
        for (i, v) in f.iter().enumerate() {
            data[i * ticks + t] = *v as f32;
        }
    }
    VideoCube::new(rows, cols, ticks, spec.tick_ms, data)
}

/// Renders the scene's irradiance cube.
pub fn gen_scene(spec: &SceneSpec) -> Result<VideoCube> {
    spec.validate()?;
    let (rows, cols, ticks, dt) = (spec.rows, spec.cols, spec.ticks, spec.tick_ms);
    match &spec.kind {
        SceneKind::Impulse { tick, level } => {
            let (tick, level) = (*tick, *level as f32);
            VideoCube::from_fn(rows, cols, ticks, dt, |_, _, t| if t == tick { level } else { 0.0 })
        }
        SceneKind::LedPair(l) => {
            let left = disk_coverage(&l.left_disk(), rows, cols);
            let right = disk_coverage(&l.right_disk(), rows, cols);
            let frames = (0..ticks)
                .map(|t| {
                    // A tick is lit once its start reaches the onset.
                    let now = t as f64 * dt;
                    let on_l = f64::from(u8::from(now >= l.onset_ms - 1e-9));
                    let on_r = f64::from(u8::from(now >= l.onset_ms + l.delay_ms - 1e-9));
                    (0..rows * cols)
                        .map(|i| {
                            let cover = (left[i] * on_l + right[i] * on_r).min(1.0);
                            l.background * (1.0 - cover) + l.level * cover
                        })
                        .collect()
                })
                .collect();
            stack_frames(spec, frames)
        }
        SceneKind::RotatingLetter(l) => {
            let under: Vec<f64> = match &l.hotspot {
                Some(h) => disk_coverage(h, rows, cols)
                    .into_iter()
                    .map(|f| l.ambient * (1.0 - f) + h.level * f)
                    .collect(),
                None => vec![l.ambient; rows * cols],
            };
            let frames = (0..ticks)
                .into_par_iter()
                .map(|t| letter_frame(l, rows, cols, t, dt, &under))
                .collect();
            stack_frames(spec, frames)
        }
        SceneKind::SlantedEdge { angle_deg, dark, bright } => {
            let f = render_slanted_edge(rows, cols, *angle_deg, *dark, *bright);
            VideoCube::from_fn(rows, cols, ticks, dt, |r, c, _| f.get(r, c) as f32)
        }
        SceneKind::HdrComposite(h) => {
            let (r0, c0, r1, c1) = HdrComposite::target_region(rows, cols);
            let bulb = disk_coverage(&HdrComposite::bulb(rows, cols), rows, cols);
            let mut under = vec![HdrComposite::AMBIENT; rows * cols];
            for r in 0..rows {
                for c in 0..cols {
                    let i = r * cols + c;
                    if (r0..r1).contains(&r) && (c0..c1).contains(&c) {
                        // Bar groups of period 8, 6, 4 px from left to right.
                        let x = c - c0;
                        let third = (c1 - c0) / 3;
                        let period = [8, 6, 4][(x / third.max(1)).min(2)];
                        under[i] = if (x / (period / 2)) % 2 == 0 {
                            HdrComposite::TARGET_DARK
                        } else {
                            HdrComposite::TARGET_LIGHT
                        };
                    }
                    under[i] = under[i] * (1.0 - bulb[i]) + HdrComposite::BULB * bulb[i];
                }
            }
            let letter = h.letter(rows, cols);
            let frames = (0..ticks)
                .into_par_iter()
                .map(|t| {
                    letter_frame(&letter, rows, cols, t, dt, &under)
                        .into_iter()
                        .map(|v| v * h.exposure_scale)
                        .collect()
                })
                .collect();
            stack_frames(spec, frames)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: SceneKind) -> SceneSpec {
        SceneSpec {
            rows: 32,
            cols: 32,
            ticks: 12,
            tick_ms: 1.0,
            kind,
        }
    }

    #[test]
    fn impulse_is_a_single_frame() {
        let cube = gen_scene(&spec(SceneKind::Impulse { tick: 5, level: 1.0 })).unwrap();
        for t in 0..12 {
            let expected = if t == 5 { 1.0 } else { 0.0 };
            assert!(cube.frame(t).data.iter().all(|&v| v == expected));
        }
    }

    #[test]
    fn leds_turn_on_one_tick_apart() {
        let mut s = spec(SceneKind::LedPair(LedPair::centered(32, 32, 4.0)));
        s.tick_ms = 2.0;
        let cube = gen_scene(&s).unwrap();
        let (l, r) = ((16, 8), (16, 24));
        let first_on = |(row, col): (usize, usize)| (0..12).find(|&t| cube.get(row, col, t) > 0.5).unwrap();
        assert_eq!(first_on(l), 2);
        assert_eq!(first_on(r), 3);
    }

    #[test]
    fn letter_advances_per_tick() {
        let l = RotatingLetter::new(64, 64);
        assert!((l.angle_deg(1.0) - l.angle_deg(0.0) - 1.8).abs() < 1e-12);
    }

    #[test]
    fn oversized_letter_is_rejected() {
        let mut l = RotatingLetter::new(32, 32);
        l.letter_size_px = 40.0;
        assert!(matches!(gen_scene(&spec(SceneKind::RotatingLetter(l))), Err(Error::Geometry(_))));
    }

    #[test]
    fn letter_scene_is_deterministic_and_bounded() {
        let mut l = RotatingLetter::new(32, 32);
        l.hotspot = Some(Disk { row: 16.0, col: 26.0, radius: 3.0, level: 4.0 });
        let s = spec(SceneKind::RotatingLetter(l.clone()));
        let a = gen_scene(&s).unwrap();
        assert_eq!(a, gen_scene(&s).unwrap());
        let max = a.data().iter().cloned().fold(0.0f32, f32::max);
        assert!(max <= 4.0 && max > 3.9);
        assert!(a.data().iter().all(|&v| v >= l.ambient as f32 - 1e-6 || v >= 0.0));
    }

    #[test]
    fn h_mask_shape() {
        let s = 10.0;
        assert!(RotatingLetter::h_mask(s, -4.5, 3.0));
        assert!(RotatingLetter::h_mask(s, 0.0, 0.0));
        assert!(!RotatingLetter::h_mask(s, 0.0, 3.0));
        assert!(!RotatingLetter::h_mask(s, 6.0, 0.0));
    }

    #[test]
    fn slanted_edge_coverage() {
        let f = render_slanted_edge(16, 16, 0.0, 0.0, 1.0);
        // Vertical edge through x = 7.5: columns ≤ 7 dark, ≥ 8 bright.
        assert_eq!(f.get(3, 7), 0.0);
        assert_eq!(f.get(3, 8), 1.0);
        let g = render_slanted_edge(16, 16, 5.0, 0.0, 1.0);
        let mean: f64 = g.data.iter().sum::<f64>() / 256.0;
        assert!((mean - 0.5).abs() < 1e-9);
    }

    #[test]
    fn composite_spans_dynamic_range() {
        let s = SceneSpec {
            rows: 64,
            cols: 64,
            ticks: 4,
            tick_ms: 1.0,
            kind: SceneKind::HdrComposite(HdrComposite::new(1.0)),
        };
        let cube = gen_scene(&s).unwrap();
        let min = cube.data().iter().cloned().fold(f32::INFINITY, f32::min);
        let max = cube.data().iter().cloned().fold(0.0f32, f32::max);
        assert!((min - 0.01).abs() < 1e-6);
        assert!((max - 4.0).abs() < 1e-6);
    }

    #[test]
    fn spec_from_key_values() {
        let kv = KeyValues::parse("delay_ms = 4\nlevel = 2").unwrap();
        let s = SceneSpec::from_key_values(SceneKindName::LedPair, 32, 32, 10, 2.0, &kv).unwrap();
        match &s.kind {
            SceneKind::LedPair(l) => assert_eq!((l.delay_ms, l.level), (4.0, 2.0)),
            _ => unreachable!(),
        }
        let bad = KeyValues::parse("rpmm = 4").unwrap();
        assert!(SceneSpec::from_key_values(SceneKindName::RotatingLetter, 32, 32, 10, 1.0, &bad).is_err());
        assert!("spiral".parse::<SceneKindName>().is_err());
    }
}
