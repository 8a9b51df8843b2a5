use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{MeasureStatus, PackageMeasurement, PipelineError, ReleaseMeasurement};
use crate::debsrc::PackageId;

/// Results root: `packages/<name>_<version>.json` per package and
/// `releases/<id>.json` per release run.
#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub package: PackageId,
    pub status: MeasureStatus,
    /// Path of the package record relative to the cache root.
    pub record: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseManifest {
    pub release_id: String,
    pub plan_digest: String,
    pub tool_version: String,
    pub packages: Vec<ManifestEntry>,
}

fn file_stem(id: &PackageId) -> String {
    format!("{}_{}", id.name, id.version)
        .chars()
        .map(|c| if c == '/' || c == ':' || c == '\\' { '_' } else { c })
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("cache documents serialize");
    out.push(b'\n');
    out
}

impl Cache {
    /// Open (creating if needed) a cache rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Cache, PipelineError> {
        let root = root.into();
        for sub in ["packages", "releases"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(|e| PipelineError::cache(&dir, e))?;
        }
        // Fail early on a read-only root rather than after the first fetch.
        tempfile::NamedTempFile::new_in(root.join("packages")).map_err(|e| PipelineError::cache(&root, e))?;
        Ok(Cache { root })
    }

    /// Open an existing cache without creating anything.
    pub fn open_existing(root: impl Into<PathBuf>) -> Result<Cache, PipelineError> {
        let root = root.into();
        if !root.join("releases").is_dir() {
            return Err(PipelineError::EmptyCache(root.display().to_string()));
        }
        Ok(Cache { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn record_rel(&self, id: &PackageId) -> String {
        format!("packages/{}.json", file_stem(id))
    }

    pub fn record_path(&self, id: &PackageId) -> PathBuf {
        self.root.join(self.record_rel(id))
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
        let dir = path.parent().expect("cache paths have a parent");
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| PipelineError::cache(dir, e))?;
        tmp.write_all(bytes).map_err(|e| PipelineError::cache(path, e))?;
        tmp.persist(path).map_err(|e| PipelineError::cache(path, e.error))?;
        Ok(())
    }

    fn read_json<T: for<'de> Deserialize<'de>>(&self, path: &Path) -> Result<T, PipelineError> {
        let bytes = fs::read(path).map_err(|e| PipelineError::cache(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| PipelineError::CacheFormat {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// The stored measurement of `id`, if any.
    pub fn load(&self, id: &PackageId) -> Result<Option<PackageMeasurement>, PipelineError> {
        let path = self.record_path(id);
        if !path.exists() {
            return Ok(None);
        }
        self.read_json(&path).map(Some)
    }

    pub fn store(&self, m: &PackageMeasurement) -> Result<String, PipelineError> {
        let rel = self.record_rel(&m.package);
        self.write_atomic(&self.root.join(&rel), &to_json(m))?;
        Ok(rel)
    }

    pub fn manifest_path(&self, release_id: &str) -> PathBuf {
        self.root.join("releases").join(format!("{release_id}.json"))
    }

    pub fn store_manifest(&self, manifest: &ReleaseManifest) -> Result<(), PipelineError> {
        self.write_atomic(&self.manifest_path(&manifest.release_id), &to_json(manifest))
    }

    pub fn load_manifest(&self, release_id: &str) -> Result<ReleaseManifest, PipelineError> {
        let path = self.manifest_path(release_id);
        if !path.exists() {
            return Err(PipelineError::MissingRelease(release_id.to_string()));
        }
        self.read_json(&path)
    }

    /// Release ids with a manifest, sorted.
    pub fn releases(&self) -> Result<Vec<String>, PipelineError> {
        let dir = self.root.join("releases");
        let mut out = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| PipelineError::cache(&dir, e))? {
            let entry = entry.map_err(|e| PipelineError::cache(&dir, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(id) = name.strip_suffix(".json") {
                out.push(id.to_string());
            }
        }
        out.sort();
        Ok(out)
    }

    /// Rebuild a release measurement from its manifest and package records,
    /// without touching any mirror.
    pub fn load_release(&self, release_id: &str) -> Result<ReleaseMeasurement, PipelineError> {
        let manifest = self.load_manifest(release_id)?;
        let mut packages = Vec::new();
        for entry in &manifest.packages {
            packages.push(self.read_json(&self.root.join(&entry.record))?);
        }
        Ok(ReleaseMeasurement::assemble(release_id, packages))
    }
}
