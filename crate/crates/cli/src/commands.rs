use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};

use mpve::analysis::psf::{find_zeros, mpve_psf_transfer, psf_csv};
use mpve::analysis::spectrum::{averaged_spectrum, phase_pixel_spectrum, spectrum_csv, SpectrumRequest};
use mpve::analysis::{optimal_exposure, snr_curve};
use mpve::camera::CameraModel;
use mpve::config::KeyValues;
use mpve::cube::{load_vcube, save_vcube, VideoCube};
use mpve::metrics::{
    full_duration, mssim_cube, onset_time, psnr, slanted_edge_mtf, temporal_contrast, Roi, TimeSeries,
};
use mpve::pattern::SamplingPattern;
use mpve::report::MetricsReport;
use mpve::scenes::{gen_scene as render_scene, ingest_hdr_sequence, make_dataset, DatasetOptions, SceneSpec};
use mpve::sensor::{normalize_hdr, sample};
use mpve::signal::TransientSignalModel;
use mpve::synthesis::{export_png_frames, reconstruct};

use crate::args::*;
use crate::runlog::{check_not_input, create_dir_atomic, write_atomic, RunLog};

/// A runtime error tagged with the pipeline stage that raised it.
#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub error: anyhow::Error,
}

pub type Outcome = Result<(), Failure>;

pub trait Stage<T> {
    fn stage(self, name: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Stage<T> for Result<T, E> {
    fn stage(self, name: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            stage: name,
            error: e.into(),
        })
    }
}

/// Output location context shared by every subcommand.
pub struct Ctx {
    pub log_path: Option<PathBuf>,
    pub threads: usize,
}

impl Ctx {
    fn finish(&self, mut log: RunLog, default_log: PathBuf) -> Outcome {
        log.set("threads", self.threads);
        let path = self.log_path.clone().unwrap_or(default_log);
        log.write(&path).stage("write run log")
    }
}

fn file_log(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".log");
    out.with_file_name(name)
}

fn load_cube(path: &Path, name: &str, log: &mut RunLog) -> Result<VideoCube, Failure> {
    log.input(name, path).stage("read input")?;
    load_vcube(path).with_context(|| format!("loading {}", path.display())).stage("read input")
}

fn save_cube(cube: &VideoCube, out: &Path, log: &mut RunLog) -> Outcome {
    write_atomic(out, |tmp| Ok(save_vcube(cube, tmp)?)).stage("write output")?;
    log.output("cube", out).stage("write output")
}

fn load_sensor(args: &SensorArgs, tick_ms: f64, log: &mut RunLog) -> Result<(SamplingPattern, CameraModel), Failure> {
    let pattern = match &args.pattern {
        Some(p) => {
            log.input("pattern", p).stage("load pattern")?;
            SamplingPattern::read(p).stage("load pattern")?
        }
        None => SamplingPattern::mpve(tick_ms).stage("load pattern")?,
    };
    let camera = match &args.camera {
        Some(p) => {
            log.input("camera", p).stage("load camera")?;
            CameraModel::read(p).stage("load camera")?
        }
        None => CameraModel::default(),
    };
    log.set_all("pattern", pattern.to_key_values().iter());
    log.set_all("camera", camera.to_key_values().iter());
    Ok((pattern, camera))
}

pub fn gen_scene(a: &GenScene, ctx: &Ctx) -> Outcome {
    let mut log = RunLog::new("gen-scene");
    let mut cube = if let Some(kind) = a.kind {
        let mut kv = match &a.params_file {
            Some(p) => {
                log.input("params", p).stage("scene parameters")?;
                KeyValues::read(p).stage("scene parameters")?
            }
            None => KeyValues::new(),
        };
        for (k, v) in &a.params {
            kv.insert(k.clone(), v);
        }
        let spec = SceneSpec::from_key_values(kind.into(), a.rows, a.cols, a.ticks, a.tick_ms, &kv)
            .stage("scene parameters")?;
        log.set_all("scene", spec.to_key_values().iter());
        render_scene(&spec).stage("render")?
    } else {
        let dir = a.ingest.as_ref().expect("clap requires a source");
        log.set("ingest.dir", dir.display());
        log.set("ingest.format", format!("{:?}", a.format).to_lowercase());
        log.set("ingest.tick_ms", a.tick_ms);
        let got = ingest_hdr_sequence(dir, a.format.into(), a.tick_ms).stage("ingest")?;
        log.set("ingest.clamped_negative", got.clamped);
        got.cube
    };
    log.set("normalize", a.normalize);
    if a.normalize {
        cube = normalize_hdr(&cube).stage("normalize")?;
    }
    save_cube(&cube, &a.out, &mut log)?;
    ctx.finish(log, file_log(&a.out))
}

pub fn simulate(a: &Simulate, ctx: &Ctx) -> Outcome {
    let mut log = RunLog::new("simulate");
    check_not_input(&a.out, &[&a.input]).stage("check outputs")?;
    let p = load_cube(&a.input, "scene", &mut log)?;
    let (pattern, camera) = load_sensor(&a.sensor, p.tick_ms(), &mut log)?;
    log.set("seed", a.seed);
    let y = sample(&p, &pattern, &camera, a.seed).stage("sample")?;
    save_cube(&y, &a.out, &mut log)?;
    ctx.finish(log, file_log(&a.out))
}

pub fn reconstruct_cmd(a: &Reconstruct, ctx: &Ctx) -> Outcome {
    let mut log = RunLog::new("reconstruct");
    check_not_input(&a.out, &[&a.input]).stage("check outputs")?;
    let y = load_cube(&a.input, "measurement", &mut log)?;
    let (pattern, camera) = load_sensor(&a.sensor, y.tick_ms(), &mut log)?;
    log.set("method", method_name(a.method));
    let p_hat = reconstruct(&y, &pattern, &camera, a.method).stage("reconstruct")?;
    save_cube(&p_hat, &a.out, &mut log)?;
    ctx.finish(log, file_log(&a.out))
}

fn method_name(m: mpve::synthesis::Method) -> String {
    use mpve::synthesis::Method;
    match m {
        Method::Box => "box".into(),
        Method::Fused => "fused".into(),
        Method::Single(c) => c.name().into(),
    }
}

fn probe_series(cube: &VideoCube, probe: &Probe) -> anyhow::Result<TimeSeries> {
    let (rows, cols, _) = cube.dims();
    if probe.row >= rows || probe.col >= cols {
        bail!("probe {} at ({}, {}) is outside the {rows}x{cols} frame", probe.name, probe.row, probe.col);
    }
    let r2 = probe.radius * probe.radius;
    let pixels: Vec<(usize, usize)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .filter(|&(r, c)| {
            let (dr, dc) = (r as f64 - probe.row as f64, c as f64 - probe.col as f64);
            dr * dr + dc * dc <= r2
        })
        .collect();
    Ok(TimeSeries::from_region(cube, &pixels)?)
}

pub fn metrics(a: &Metrics, ctx: &Ctx) -> Outcome {
    let mut log = RunLog::new("metrics");
    let mut inputs: Vec<&Path> = vec![&a.input];
    if let Some(r) = &a.reference {
        inputs.push(r);
    }
    check_not_input(&a.out, &inputs).stage("check outputs")?;
    let cube = load_cube(&a.input, "cube", &mut log)?;
    let reference = match &a.reference {
        Some(r) => Some(load_cube(r, "reference", &mut log)?),
        None => None,
    };
    let mut report = MetricsReport::new();
    let no_params: [(&str, &str); 0] = [];

    if let Some(gt) = &reference {
        if a.psnr {
            let v = psnr(&cube, gt, a.peak).stage("psnr")?;
            report.insert("psnr_db", v, [("peak", a.peak)]);
        }
        if a.ssim {
            report.insert("mssim", mssim_cube(&cube, gt).stage("ssim")?, no_params);
        }
    }

    if a.tc || a.fd || a.onset {
        let window = a.window.unwrap_or((0, cube.ticks()));
        log.set("window", format!("{}:{}", window.0, window.1));
        log.set("frac", a.frac);
        let default_probe = [Probe {
            name: "centre".into(),
            row: cube.rows() / 2,
            col: cube.cols() / 2,
            radius: 0.0,
        }];
        let probes = if a.probes.is_empty() { &default_probe[..] } else { &a.probes[..] };
        for p in probes {
            log.set(format!("probe.{}", p.name), format!("{},{},{}", p.row, p.col, p.radius));
            let s = probe_series(&cube, p).stage("probe")?;
            let w = window.0..window.1;
            let params = [("probe", p.name.clone()), ("window", format!("{}:{}", window.0, window.1))];
            if a.tc {
                let v = temporal_contrast(&s, w.clone()).stage("temporal contrast")?;
                report.insert(&format!("tc.{}", p.name), v, params.clone());
            }
            if a.fd {
                let v = full_duration(&s, w.clone(), a.frac).stage("full duration")?;
                report.insert(&format!("fd_ms.{}", p.name), v, params.clone());
            }
            if a.onset {
                let v = onset_time(&s, w.clone(), a.frac).stage("onset")?;
                report.insert(&format!("onset_ms.{}", p.name), v, params.clone());
            }
        }
    }

    if a.edge {
        if a.tick >= cube.ticks() {
            return Err(anyhow!("tick {} outside a {}-tick cube", a.tick, cube.ticks())).stage("edge");
        }
        let frame = cube.frame(a.tick);
        let roi = match a.roi {
            Some([row, col, rows, cols]) => Roi { row, col, rows, cols },
            None => Roi::full(&frame),
        };
        log.set("edge.tick", a.tick);
        log.set("edge.roi", format!("{},{},{},{}", roi.row, roi.col, roi.rows, roi.cols));
        let e = slanted_edge_mtf(&frame, roi).stage("edge")?;
        let params = [("tick", a.tick.to_string())];
        report.insert("mtf50", e.mtf50, params.clone());
        report.insert("rise_10_90_px", e.rise_10_90_px, params.clone());
        report.insert("edge_angle_deg", e.edge_angle_deg, params);
        if let Some(w) = &e.slant_warning {
            eprintln!("warning: {w}");
        }
        if let Some(path) = &a.mtf_csv {
            write_atomic(path, |tmp| Ok(fs::write(tmp, e.mtf_csv())?)).stage("write output")?;
            log.output("mtf_csv", path).stage("write output")?;
        }
    }

    if report.entries.is_empty() {
        return Err(anyhow!("no metric selected (--psnr, --ssim, --tc, --fd, --onset, --edge)")).stage("select metrics");
    }
    print!("{}", report.to_table());
    write_atomic(&a.out, |tmp| Ok(fs::write(tmp, report.to_records())?)).stage("write output")?;
    log.output("report", &a.out).stage("write output")?;
    ctx.finish(log, file_log(&a.out))
}

fn write_text(path: &Path, text: &str, log: &mut RunLog) -> Outcome {
    write_atomic(path, |tmp| Ok(fs::write(tmp, text)?)).stage("write output")?;
    log.output("csv", path).stage("write output")
}

pub fn analyze_spectrum(a: &AnalyzeSpectrum, ctx: &Ctx) -> Outcome {
    let mut log = RunLog::new("analyze-spectrum");
    log.set("te_ms", a.te_ms);
    log.set("grid", &a.grid.spec);
    log.set("replicas", a.replicas);
    let req = SpectrumRequest::new(a.te_ms, a.grid.values.clone())
        .and_then(|r| r.with_replica_range(a.replicas))
        .stage("spectrum request")?;
    let values = match a.phase {
        Some(k) => {
            log.set("phase", k);
            phase_pixel_spectrum(&req, k).stage("spectrum")?
        }
        None => averaged_spectrum(&req).stage("spectrum")?,
    };
    write_text(&a.out, &spectrum_csv(&a.grid.values, &values), &mut log)?;
    ctx.finish(log, file_log(&a.out))
}

pub fn analyze_snr(a: &AnalyzeSnr, ctx: &Ctx) -> Outcome {
    let mut log = RunLog::new("analyze-snr");
    log.set("A", a.a);
    log.set("B", a.b);
    log.set("tau_ms", a.tau_ms);
    log.set("grid", &a.grid.spec);
    let model = TransientSignalModel::new(a.a, a.b, a.tau_ms).stage("signal model")?;
    let curve = snr_curve(&model, &a.grid.values).stage("snr curve")?;
    let (lo, hi) = (a.grid.values[0], a.grid.values[a.grid.values.len() - 1]);
    let best = optimal_exposure(&model, lo, hi, 1e-9).stage("optimal exposure")?;
    println!(
        "argmax on grid: {} ms; continuous optimum: {:.6} ms (snr {:.6}){}",
        curve.argmax_ms,
        best.t_e_ms,
        best.snr,
        if best.at_boundary { ", at the interval boundary" } else { "" }
    );
    log.set("argmax_ms", curve.argmax_ms);
    log.set("optimum_ms", best.t_e_ms);
    write_text(&a.out, &curve.to_csv(), &mut log)?;
    ctx.finish(log, file_log(&a.out))
}

pub fn analyze_psf(a: &AnalyzePsf, ctx: &Ctx) -> Outcome {
    let mut log = RunLog::new("analyze-psf");
    log.set("grid", &a.grid.spec);
    let zeros = find_zeros(mpve_psf_transfer, &a.grid.values, 1e-12).stage("zeros")?;
    let listed: Vec<String> = zeros.iter().map(|z| format!("{z:.6}")).collect();
    println!("zeros of the tile-averaged transfer: [{}]", listed.join(", "));
    log.set("zeros", listed.join(","));
    write_text(&a.out, &psf_csv(&a.grid.values), &mut log)?;
    ctx.finish(log, file_log(&a.out))
}

pub fn make_dataset_cmd(a: &MakeDataset, ctx: &Ctx) -> Outcome {
    let mut log = RunLog::new("make-dataset");
    if a.inputs.is_empty() && a.ingest.is_empty() {
        return Err(anyhow!("no source videos (--input or --ingest)")).stage("read input");
    }
    let mut videos = Vec::new();
    for (i, path) in a.inputs.iter().enumerate() {
        videos.push(load_cube(path, &format!("video{i}"), &mut log)?);
    }
    for (i, dir) in a.ingest.iter().enumerate() {
        log.set(format!("ingest{i}.dir"), dir.display());
        let got = ingest_hdr_sequence(dir, a.format.into(), a.tick_ms).stage("ingest")?;
        log.set(format!("ingest{i}.clamped_negative"), got.clamped);
        videos.push(got.cube);
    }
    log.set("normalize", a.normalize);
    if a.normalize {
        for v in &mut videos {
            *v = normalize_hdr(v).stage("normalize")?;
        }
    }
    let (pattern, camera) = load_sensor(&a.sensor, videos[0].tick_ms(), &mut log)?;
    let opts = DatasetOptions {
        crop_size: a.crop,
        temporal_overlap: a.overlap,
        augment: a.augment,
        downsample: a.downsample,
        overwrite: a.overwrite,
    };
    log.set("seed", a.seed);
    log.set("crop", format!("{}x{}x{}", a.crop.0, a.crop.1, a.crop.2));
    log.set("overlap", a.overlap);
    log.set("augment", a.augment);
    log.set("downsample", a.downsample);
    let build = |dir: &Path| -> anyhow::Result<usize> {
        let manifest = make_dataset(&videos, &pattern, &camera, a.seed, dir, &opts)?;
        Ok(manifest.entries.len())
    };
    let mut count = 0;
    if a.overwrite && a.out.is_dir() {
        count = build(&a.out).stage("build dataset")?;
    } else {
        create_dir_atomic(&a.out, |tmp| {
            count = build(tmp)?;
            Ok(())
        })
        .stage("build dataset")?;
    }
    log.set("entries", count);
    log.output("manifest", &a.out.join("manifest.tsv")).stage("write output")?;
    println!("{count} samples in {}", a.out.display());
    ctx.finish(log, a.out.join("run.log"))
}

pub fn export_png(a: &ExportPng, ctx: &Ctx) -> Outcome {
    let mut log = RunLog::new("export-png");
    let cube = load_cube(&a.input, "cube", &mut log)?;
    let (from, to) = a.ticks.unwrap_or((0, cube.ticks()));
    log.set("ticks", format!("{from}:{to}"));
    log.set("prefix", &a.prefix);
    if let Some(mu) = a.mu {
        log.set("mu", mu);
    }
    let mut written = Vec::new();
    let mut fill = |dir: &Path| -> anyhow::Result<()> {
        written = export_png_frames(&cube, dir, &a.prefix, from..to, a.mu)?;
        Ok(())
    };
    if a.out.is_dir() && fs::read_dir(&a.out).map(|mut d| d.next().is_some()).unwrap_or(false) {
        // Adding frames to an existing directory; each file is complete when written.
        fill(&a.out).stage("export")?;
    } else {
        create_dir_atomic(&a.out, fill).stage("export")?;
    }
    log.set("frames", written.len());
    log.output("dir", &a.out).stage("write output")?;
    ctx.finish(log, a.out.join(format!("{}.log", a.prefix)))
}
