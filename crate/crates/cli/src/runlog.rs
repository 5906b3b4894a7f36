//! Plain `key=value` run logs and atomic output writing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

/// Parameters, inputs and outputs of one invocation, in insertion order.
#[derive(Debug, Default)]
pub struct RunLog {
    entries: Vec<(String, String)>,
}

impl RunLog {
    pub fn new(command: &str) -> Self {
        let mut log = Self::default();
        log.set("command", command);
        log.set("version", env!("CARGO_PKG_VERSION"));
        log
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        // Values stay on one line so the log remains one record per line.
        let value = value.to_string().replace(['\n', '\r'], " ");
        self.entries.push((key.into(), value));
    }

    pub fn set_all<'a>(&mut self, prefix: &str, kv: impl IntoIterator<Item = (&'a str, &'a str)>) {
        for (k, v) in kv {
            self.set(format!("{prefix}.{k}"), v);
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) -> Result<()> {
        self.set(format!("input.{name}"), path.display());
        let hash = sha256_file(path)?;
        self.set(format!("input.{name}.sha256"), hash);
        Ok(())
    }

    pub fn output(&mut self, name: &str, path: &Path) -> Result<()> {
        self.set(format!("output.{name}"), path.display());
        if path.is_file() {
            let hash = sha256_file(path)?;
            self.set(format!("output.{name}.sha256"), hash);
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k}={v}");
            s
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, |tmp| Ok(fs::write(tmp, self.to_text())?))
    }
}

/// Resolves a path that may not exist yet, for comparison against inputs.
fn resolve(path: &Path) -> PathBuf {
    if let Ok(p) = path.canonicalize() {
        return p;
    }
    match (path.parent(), path.file_name()) {
        (Some(parent), Some(name)) => {
            let parent = if parent.as_os_str().is_empty() { Path::new(".") } else { parent };
            parent.canonicalize().map(|p| p.join(name)).unwrap_or_else(|_| path.to_path_buf())
        }
        _ => path.to_path_buf(),
    }
}

/// Refuses outputs that would replace one of the inputs.
pub fn check_not_input(out: &Path, inputs: &[&Path]) -> Result<()> {
    let o = resolve(out);
    for i in inputs {
        if resolve(i) == o {
            bail!("output {} would overwrite an input", out.display());
        }
    }
    Ok(())
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.partial-{}", std::process::id()))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(())
}

/// Writes through a temporary sibling then renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    ensure_parent(path)?;
    let tmp = temp_sibling(path);
    let result = write(&tmp).and_then(|_| {
        fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
    });
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Fills a fresh directory under a temporary name, then renames it into place.
/// An existing non-empty `dir` is an error.
pub fn create_dir_atomic(dir: &Path, fill: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    if dir.exists() {
        let empty = fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .next()
            .is_none();
        if !empty {
            bail!("output directory {} exists and is not empty", dir.display());
        }
        fs::remove_dir(dir)?;
    }
    ensure_parent(dir)?;
    let tmp = temp_sibling(dir);
    fs::create_dir(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    let result = fill(&tmp).and_then(|_| {
        fs::rename(&tmp, dir).with_context(|| format!("renaming into {}", dir.display()))
    });
    if result.is_err() {
        let _ = fs::remove_dir_all(&tmp);
    }
    result
}
