//! Output directory ownership, atomic artifact writes and the run manifest.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";
pub const LOCK: &str = ".lock";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageRecord {
    pub seconds: f64,
    /// Path relative to the output directory to its SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: serde_json::Value,
    pub stages: BTreeMap<String, StageRecord>,
}

/// Exclusive handle on an output directory. The lock file is removed on
/// drop.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    lock: PathBuf,
}

impl OutDir {
    pub fn acquire(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let lock = root.join(LOCK);
        let mut f = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => anyhow!(
                    "{} is in use by another run (delete {} if that run is gone)",
                    root.display(),
                    lock.display()
                ),
                _ => anyhow!("creating {}: {e}", lock.display()),
            })?;
        writeln!(f, "{}", std::process::id())?;
        Ok(OutDir {
            root: root.to_path_buf(),
            lock,
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Fails with a pointer to the producing subcommand if `rel` is absent.
    pub fn require(&self, rel: &str, stage: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if !p.exists() {
            bail!("missing {}: run `{stage}` first", p.display());
        }
        Ok(p)
    }

    /// Starts a stage. Artifacts go to a scratch directory that replaces
    /// `<root>/<stage>` on [`StageWriter::commit`]; a stage that fails
    /// leaves the previous artifacts untouched.
    pub fn stage(&self, stage: &str) -> Result<StageWriter<'_>> {
        let scratch = tempfile::Builder::new()
            .prefix(&format!(".{stage}-"))
            .tempdir_in(&self.root)
            .with_context(|| format!("scratch directory in {}", self.root.display()))?;
        Ok(StageWriter {
            out: self,
            stage: stage.to_owned(),
            scratch,
            artifacts: BTreeMap::new(),
        })
    }

    pub fn read_manifest(&self) -> RunManifest {
        fs::read(self.path(MANIFEST))
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or_default()
    }

    pub fn record(&self, stage: &str, record: StageRecord, config: &serde_json::Value) -> Result<()> {
        let mut m = self.read_manifest();
        m.tool_version = env!("CARGO_PKG_VERSION").to_owned();
        m.config = config.clone();
        m.stages.insert(stage.to_owned(), record);
        let bytes = serde_json::to_vec_pretty(&m)?;
        write_atomic(&self.path(MANIFEST), &bytes)
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

pub struct StageWriter<'a> {
    out: &'a OutDir,
    stage: String,
    scratch: tempfile::TempDir,
    artifacts: BTreeMap<String, String>,
}

impl StageWriter<'_> {
    /// Writes `bytes` to `<stage>/<name>`; `name` may contain subdirectories.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let rel = format!("{}/{name}", self.stage);
        let path = self.scratch.path().join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        write_atomic(&path, bytes)?;
        self.artifacts.insert(rel, hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Moves the stage's artifacts into place.
    pub fn commit(self, seconds: f64) -> Result<StageRecord> {
        let dir = self.out.path(&self.stage);
        if dir.exists() {
            fs::remove_dir_all(&dir).with_context(|| format!("clearing {}", dir.display()))?;
        }
        let scratch = self.scratch.keep();
        fs::rename(&scratch, &dir).with_context(|| format!("moving artifacts into {}", dir.display()))?;
        Ok(StageRecord {
            seconds,
            artifacts: self.artifacts,
        })
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| anyhow!("writing {}: {}", path.display(), e.error))?;
    Ok(())
}
