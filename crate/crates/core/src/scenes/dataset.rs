//! Training-set preparation: cropping, rotation augmentation, and on-disk
//! datasets of ground truth, measurements and LDR targets.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::camera::{CameraModel, Crf};
use crate::cube::{save_vcube, VideoCube};
use crate::error::{Error, Result};
use crate::pattern::{ExposureClass, SamplingPattern};
use crate::sensor::{self, splitmix64};

pub const MANIFEST_VERSION: u32 = 1;
const MANIFEST_MAGIC: &str = "# vcube-dataset v";
const MANIFEST_COLUMNS: [&str; 10] = [
    "y_mea", "p", "pattern", "camera", "source", "origin", "augment", "y_low", "y_mid", "y_high",
];
pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const PATTERN_FILE: &str = "pattern.txt";
pub const CAMERA_FILE: &str = "camera.txt";
const CRF_TABLE_FILE: &str = "crf_table.txt";

/// A crop and its `(row, col, tick)` origin in the source video.
#[derive(Debug, Clone, PartialEq)]
pub struct Crop {
    pub origin: (usize, usize, usize),
    pub cube: VideoCube,
}

/// Non-overlapping spatial tiles (remainder dropped) at a temporal stride of
/// `size.2 · (1 − temporal_overlap)` ticks, rounded, at least one.
pub fn crop_cubes(video: &VideoCube, size: (usize, usize, usize), temporal_overlap: f64) -> Result<Vec<Crop>> {
    let (nr, nc, nt) = size;
    if nr == 0 || nc == 0 || nt == 0 {
        return Err(Error::Size("crop size must be positive".into()));
    }
    if !(0.0..1.0).contains(&temporal_overlap) {
        return Err(Error::Validation(format!("temporal overlap {temporal_overlap} outside [0, 1)")));
    }
    let (rows, cols, ticks) = video.dims();
    if rows < nr || cols < nc || ticks < nt {
        return Err(Error::Size(format!(
            "video {rows}x{cols}x{ticks} is smaller than one {nr}x{nc}x{nt} crop"
        )));
    }
    let stride = ((nt as f64 * (1.0 - temporal_overlap)).round() as usize).max(1);
    let mut out = Vec::new();
    for r0 in (0..=rows - nr).step_by(nr) {
        for c0 in (0..=cols - nc).step_by(nc) {
            for t0 in (0..=ticks - nt).step_by(stride) {
                let origin = (r0, c0, t0);
                out.push(Crop {
                    origin,
                    cube: video.crop(origin, size)?,
                });
            }
        }
    }
    Ok(out)
}

/// Rotates every frame 90° counter-clockwise: `new[i][j] = old[j][n−1−i]`.
pub fn rotate90(cube: &VideoCube) -> Result<VideoCube> {
    let (rows, cols, ticks) = cube.dims();
    if rows != cols {
        return Err(Error::Geometry(format!("rotation needs a square cube, got {rows}x{cols}")));
    }
    let n = rows;
    let mut data = Vec::with_capacity(cube.len());
    for i in 0..n {
        for j in 0..n {
            data.extend_from_slice(cube.pixel(j, n - 1 - i));
        }
    }
    debug_assert_eq!(data.len(), n * n * ticks);
    cube.with_data(data)
}

/// A rotated cube with the tile layout a measurement would show after the
/// same rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub cube: VideoCube,
    /// Counter-clockwise quarter turns, 0..4.
    pub quarter_turns: u8,
    pub pattern: SamplingPattern,
}

impl Augmented {
    pub fn tag(&self) -> String {
        format!("rot{}", 90 * self.quarter_turns as u32)
    }
}

/// Each cube followed by its 90°, 180° and 270° rotations.
pub fn augment_rotations(cubes: &[VideoCube], pattern: &SamplingPattern) -> Result<Vec<Augmented>> {
    let mut out = Vec::with_capacity(cubes.len() * 4);
    for cube in cubes {
        let mut cur = cube.clone();
        let mut pat = pattern.clone();
        for q in 0..4u8 {
            if q > 0 {
                cur = rotate90(&cur)?;
                pat = pat.rotated90();
            } else if cube.rows() != cube.cols() {
                return Err(Error::Geometry(format!(
                    "rotation needs a square cube, got {}x{}",
                    cube.rows(),
                    cube.cols()
                )));
            }
            out.push(Augmented {
                cube: cur.clone(),
                quarter_turns: q,
                pattern: pat.clone(),
            });
        }
    }
    Ok(out)
}

/// 2×2 box average; an odd last row or column is dropped.
pub fn downsample_half(cube: &VideoCube) -> Result<VideoCube> {
    let (rows, cols, ticks) = cube.dims();
    let (nr, nc) = (rows / 2, cols / 2);
    if nr == 0 || nc == 0 {
        return Err(Error::Size(format!("cannot halve a {rows}x{cols} cube")));
    }
    let mut data = Vec::with_capacity(nr * nc * ticks);
    for r in 0..nr {
        for c in 0..nc {
            let px = [
                cube.pixel(2 * r, 2 * c),
                cube.pixel(2 * r, 2 * c + 1),
                cube.pixel(2 * r + 1, 2 * c),
                cube.pixel(2 * r + 1, 2 * c + 1),
            ];
            data.extend((0..ticks).map(|t| px.iter().map(|p| p[t]).sum::<f32>() / 4.0));
        }
    }
    VideoCube::new(nr, nc, ticks, cube.tick_ms(), data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOptions {
    pub crop_size: (usize, usize, usize),
    pub temporal_overlap: f64,
    pub augment: bool,
    pub downsample: bool,
    pub overwrite: bool,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            crop_size: (128, 128, 8),
            temporal_overlap: 0.5,
            augment: false,
            downsample: false,
            overwrite: false,
        }
    }
}

/// One training sample. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub y_mea: PathBuf,
    pub p: PathBuf,
    pub pattern_id: String,
    pub camera_id: String,
    /// Index of the source video in the input list.
    pub source: usize,
    pub origin: (usize, usize, usize),
    pub augmentation: String,
    pub y_low: PathBuf,
    pub y_mid: PathBuf,
    pub y_high: PathBuf,
}

impl ManifestEntry {
    pub fn files(&self) -> [&Path; 5] {
        [&self.p, &self.y_mea, &self.y_low, &self.y_mid, &self.y_high]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub version: u32,
    pub crop_size: (usize, usize, usize),
    /// Downsampling filter applied to sources: `none` or `box2x2`.
    pub downsample: String,
    pub entries: Vec<ManifestEntry>,
}

fn parse_triple(s: &str, sep: char, what: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<_> = s.split(sep).map(|v| v.trim().parse::<usize>()).collect();
    match parts.as_slice() {
        [Ok(a), Ok(b), Ok(c)] => Ok((*a, *b, *c)),
        _ => Err(Error::Format(format!("bad {what} `{s}`"))),
    }
}

impl DatasetManifest {
    pub fn to_text(&self) -> String {
        let (r, c, t) = self.crop_size;
        let mut s = format!("{MANIFEST_MAGIC}{}\n", self.version);
        let _ = writeln!(s, "# crop: {r}x{c}x{t}");
        let _ = writeln!(s, "# downsample: {}", self.downsample);
        let _ = writeln!(s, "# hold: window");
        let _ = writeln!(s, "# {}", MANIFEST_COLUMNS.join("\t"));
        for e in &self.entries {
            let (r0, c0, t0) = e.origin;
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{r0},{c0},{t0}\t{}\t{}\t{}\t{}",
                e.y_mea.display(),
                e.p.display(),
                e.pattern_id,
                e.camera_id,
                e.source,
                e.augmentation,
                e.y_low.display(),
                e.y_mid.display(),
                e.y_high.display()
            );
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let version = lines
            .next()
            .and_then(|l| l.strip_prefix(MANIFEST_MAGIC))
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or_else(|| Error::Format("missing `# vcube-dataset v<N>` header".into()))?;
        if version != MANIFEST_VERSION {
            return Err(Error::Format(format!("unsupported manifest version {version}")));
        }
        let mut crop_size = None;
        let mut downsample = "none".to_string();
        let mut entries = Vec::new();
        for line in lines {
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("crop:") {
                    crop_size = Some(parse_triple(v.trim(), 'x', "crop size")?);
                } else if let Some(v) = comment.strip_prefix("downsample:") {
                    downsample = v.trim().to_string();
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != MANIFEST_COLUMNS.len() {
                return Err(Error::Format(format!(
                    "manifest record has {} fields, expected {}",
                    f.len(),
                    MANIFEST_COLUMNS.len()
                )));
            }
            entries.push(ManifestEntry {
                y_mea: f[0].into(),
                p: f[1].into(),
                pattern_id: f[2].to_string(),
                camera_id: f[3].to_string(),
                source: f[4].parse().map_err(|_| Error::Format(format!("bad source `{}`", f[4])))?,
                origin: parse_triple(f[5], ',', "origin")?,
                augmentation: f[6].to_string(),
                y_low: f[7].into(),
                y_mid: f[8].into(),
                y_high: f[9].into(),
            });
        }
        Ok(Self {
            version,
            crop_size: crop_size.ok_or_else(|| Error::Format("missing `# crop:` line".into()))?,
            downsample,
            entries,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Checks every referenced cube under `root` exists with the crop dims.
    pub fn verify_files(&self, root: impl AsRef<Path>) -> Result<()> {
        let root = root.as_ref();
        for e in &self.entries {
            for f in e.files() {
                let cube = crate::cube::load_vcube(root.join(f))?;
                if cube.dims() != self.crop_size {
                    return Err(Error::Shape(format!(
                        "{} is {:?}, manifest says {:?}",
                        f.display(),
                        cube.dims(),
                        self.crop_size
                    )));
                }
            }
        }
        Ok(())
    }
}

struct Job {
    entry: ManifestEntry,
    cube: VideoCube,
    /// The crop's region over a longer span, for the sensor to run on.
    context: VideoCube,
    /// Offset of the crop's first tick within `context`.
    lead: usize,
    seed: u64,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Tick span `[start, end)` around a crop that the sensor simulates: up to
/// `min_ticks` of lead-in and run-out, with `start` on a multiple of every
/// window length so the exposure schedule matches the source timeline.
fn sensor_span(pattern: &SamplingPattern, t0: usize, nt: usize, ticks: usize) -> (usize, usize) {
    let period = ExposureClass::ALL
        .iter()
        .map(|&c| pattern.duration(c))
        .fold(1, |l, d| l / gcd(l, d) * d);
    let margin = pattern.min_ticks();
    let start = t0.saturating_sub(margin) / period * period;
    (start, (t0 + nt + margin).min(ticks))
}

fn camera_files(camera: &CameraModel) -> (String, Option<String>) {
    let mut kv = camera.to_key_values();
    match &camera.crf {
        Crf::Table(t) => {
            kv = crate::config::KeyValues::parse(
                &kv.iter()
                    .filter(|(k, _)| *k != "crf_table_knots")
                    .map(|(k, v)| format!("{k} = {v}\n"))
                    .collect::<String>(),
            )
            .expect("re-parsing own key-values");
            kv.insert("crf_table", CRF_TABLE_FILE);
            let (xs, ys) = t.knots();
            let table = xs.iter().zip(ys).map(|(x, y)| format!("{x} {y}\n")).collect();
            (kv.to_text(), Some(table))
        }
        Crf::Gamma(_) => (kv.to_text(), None),
    }
}

/// Crops (and optionally downsamples and rotates) each video, simulates the
/// measurement and the three LDR targets per crop, and writes them as
/// `.vcube` files plus `manifest.tsv`, `pattern.txt` and `camera.txt`.
///
/// The sensor runs on the crop's region over a span extending up to
/// [`SamplingPattern::min_ticks`] before and after it, so crops shorter than
/// one full exposure cycle still get complete windows, as a free-running
/// sensor would give them.
///
/// Nothing is written if any output already exists and `overwrite` is off.
/// Crop noise seeds derive from `seed` and the crop's position in the
/// manifest, so output is independent of thread scheduling.
pub fn make_dataset(
    videos: &[VideoCube],
    pattern: &SamplingPattern,
    camera: &CameraModel,
    seed: u64,
    out_dir: impl AsRef<Path>,
    opts: &DatasetOptions,
) -> Result<DatasetManifest> {
    let out_dir = out_dir.as_ref();
    camera.validate()?;
    let pattern_id = PATTERN_FILE.to_string();
    let camera_id = CAMERA_FILE.to_string();

    let mut jobs = Vec::new();
    for (vi, video) in videos.iter().enumerate() {
        let video = if opts.downsample {
            downsample_half(video)?
        } else {
            video.clone()
        };
        for crop in crop_cubes(&video, opts.crop_size, opts.temporal_overlap)? {
            let (r0, c0, t0) = crop.origin;
            let (nr, nc, nt) = opts.crop_size;
            let (start, end) = sensor_span(pattern, t0, nt, video.ticks());
            let context = video.crop((r0, c0, start), (nr, nc, end - start))?;
            let variants = if opts.augment {
                augment_rotations(&[crop.cube, context], pattern)?
            } else {
                vec![
                    Augmented {
                        cube: crop.cube,
                        quarter_turns: 0,
                        pattern: pattern.clone(),
                    },
                    Augmented {
                        cube: context,
                        quarter_turns: 0,
                        pattern: pattern.clone(),
                    },
                ]
            };
            // Crop rotations come first, then the matching context rotations.
            let half = variants.len() / 2;
            let (crops, contexts) = variants.split_at(half);
            for (aug, ctx) in crops.iter().zip(contexts) {
                let stem = format!("v{vi:03}_r{r0:05}_c{c0:05}_t{t0:05}_{}", aug.tag());
                let name = |kind: &str| PathBuf::from(format!("{stem}_{kind}.vcube"));
                let index = jobs.len() as u64;
                jobs.push(Job {
                    entry: ManifestEntry {
                        y_mea: name("y_mea"),
                        p: name("p"),
                        pattern_id: pattern_id.clone(),
                        camera_id: camera_id.clone(),
                        source: vi,
                        origin: crop.origin,
                        augmentation: aug.tag(),
                        y_low: name("y_low"),
                        y_mid: name("y_mid"),
                        y_high: name("y_high"),
                    },
                    seed: splitmix64(seed ^ splitmix64(index)),
                    cube: aug.cube.clone(),
                    context: ctx.cube.clone(),
                    lead: t0 - start,
                });
            }
        }
    }

    let mut targets: Vec<PathBuf> = [MANIFEST_FILE, PATTERN_FILE, CAMERA_FILE, CRF_TABLE_FILE]
        .iter()
        .map(|f| out_dir.join(f))
        .collect();
    targets.extend(jobs.iter().flat_map(|j| j.entry.files().map(|f| out_dir.join(f))));
    if !opts.overwrite {
        if let Some(hit) = targets.iter().find(|p| p.exists()) {
            return Err(Error::Collision(hit.clone()));
        }
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    jobs.par_iter().try_for_each(|job| -> Result<()> {
        let e = &job.entry;
        let (nr, nc, nt) = job.cube.dims();
        let y_mea = sensor::sample(&job.context, pattern, camera, job.seed)?.crop((0, 0, job.lead), (nr, nc, nt))?;
        save_vcube(&job.cube, out_dir.join(&e.p))?;
        save_vcube(&y_mea, out_dir.join(&e.y_mea))?;
        for (class, path) in ExposureClass::ALL.into_iter().zip([&e.y_low, &e.y_mid, &e.y_high]) {
            save_vcube(&sensor::ldr_target(&job.cube, class, pattern, camera)?, out_dir.join(path))?;
        }
        Ok(())
    })?;

    let write = |name: &str, text: &str| {
        let path = out_dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    };
    write(PATTERN_FILE, &pattern.to_key_values().to_text())?;
    let (camera_text, table) = camera_files(camera);
    write(CAMERA_FILE, &camera_text)?;
    if let Some(table) = table {
        write(CRF_TABLE_FILE, &table)?;
    }
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        crop_size: opts.crop_size,
        downsample: if opts.downsample { "box2x2" } else { "none" }.into(),
        entries: jobs.into_iter().map(|j| j.entry).collect(),
    };
    write(MANIFEST_FILE, &manifest.to_text())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::ExposureClass::*;

    fn ramp(rows: usize, cols: usize, ticks: usize) -> VideoCube {
        VideoCube::from_fn(rows, cols, ticks, 1.0, |r, c, t| (r * 1000 + c * 10 + t) as f32).unwrap()
    }

    #[test]
    fn crop_counts() {
        let origins = |v: &VideoCube| -> Vec<_> {
            crop_cubes(v, (128, 128, 8), 0.5).unwrap().into_iter().map(|c| c.origin).collect()
        };
        assert_eq!(origins(&ramp(128, 128, 16)), vec![(0, 0, 0), (0, 0, 4), (0, 0, 8)]);
        assert_eq!(origins(&ramp(256, 128, 8)), vec![(0, 0, 0), (128, 0, 0)]);
        assert!(matches!(
            crop_cubes(&ramp(127, 128, 8), (128, 128, 8), 0.5),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn rotation_moves_pixels_and_tile() {
        let v = ramp(4, 4, 2);
        let r = rotate90(&v).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(r.pixel(i, j), v.pixel(j, 3 - i));
            }
        }
        let r2 = rotate90(&rotate90(&r).unwrap()).unwrap();
        assert_eq!(rotate90(&r2).unwrap(), v);

        let pattern = SamplingPattern::mpve(1.0).unwrap();
        let aug = augment_rotations(&[v], &pattern).unwrap();
        assert_eq!(aug.len(), 4);
        let t = aug[1].pattern.tile();
        let classes = [[t[0][0].class, t[0][1].class], [t[1][0].class, t[1][1].class]];
        assert_eq!(classes, [[Mid, Long], [Short, Mid]]);
        assert!(matches!(augment_rotations(&[ramp(4, 6, 2)], &pattern), Err(Error::Geometry(_))));
    }

    #[test]
    fn rotated_pattern_matches_rotated_measurement() {
        // Sampling then rotating equals sampling the rotated scene with the rotated pattern.
        let p = VideoCube::from_fn(8, 8, 16, 1.0, |r, c, t| 0.01 * ((r * 7 + c * 3 + t) % 11) as f32).unwrap();
        let pattern = SamplingPattern::mpve(1.0).unwrap();
        let cam = CameraModel::noiseless(1.0);
        let lhs = rotate90(&sensor::sample(&p, &pattern, &cam, 0).unwrap()).unwrap();
        let rhs = sensor::sample(&rotate90(&p).unwrap(), &pattern.rotated90(), &cam, 0).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn crop_measurements_match_the_free_running_sensor() {
        let video = VideoCube::from_fn(16, 16, 30, 1.0, |r, c, t| 0.01 * ((r * 5 + c * 3 + t * 7) % 13) as f32).unwrap();
        let pattern = SamplingPattern::mpve(1.0).unwrap();
        let cam = CameraModel::noiseless(2.2);
        let dir = tempfile::tempdir().unwrap();
        let opts = DatasetOptions {
            crop_size: (8, 8, 8),
            augment: true,
            ..DatasetOptions::default()
        };
        let m = make_dataset(&[video.clone()], &pattern, &cam, 1, dir.path(), &opts).unwrap();
        // 4 spatial tiles × 6 temporal starts × 4 rotations.
        assert_eq!(m.entries.len(), 4 * 6 * 4);
        m.verify_files(dir.path()).unwrap();
        let full = sensor::sample(&video, &pattern, &cam, 0).unwrap();
        for e in m.entries.iter().filter(|e| e.augmentation == "rot0") {
            let y = crate::cube::load_vcube(dir.path().join(&e.y_mea)).unwrap();
            assert_eq!(y, full.crop(e.origin, (8, 8, 8)).unwrap(), "{:?}", e.origin);
        }
    }

    #[test]
    fn downsample_averages() {
        let v = VideoCube::from_fn(3, 4, 1, 1.0, |r, c, _| (r * 4 + c) as f32).unwrap();
        let d = downsample_half(&v).unwrap();
        assert_eq!(d.dims(), (1, 2, 1));
        assert_eq!(d.data(), &[2.5, 4.5]);
    }

    #[test]
    fn manifest_round_trip() {
        let m = DatasetManifest {
            version: MANIFEST_VERSION,
            crop_size: (64, 64, 8),
            downsample: "box2x2".into(),
            entries: vec![ManifestEntry {
                y_mea: "a_y_mea.vcube".into(),
                p: "a_p.vcube".into(),
                pattern_id: "pattern.txt".into(),
                camera_id: "camera.txt".into(),
                source: 2,
                origin: (0, 64, 4),
                augmentation: "rot270".into(),
                y_low: "a_y_low.vcube".into(),
                y_mid: "a_y_mid.vcube".into(),
                y_high: "a_y_high.vcube".into(),
            }],
        };
        assert_eq!(DatasetManifest::parse(&m.to_text()).unwrap(), m);
        assert!(DatasetManifest::parse("no header").is_err());
    }
}
