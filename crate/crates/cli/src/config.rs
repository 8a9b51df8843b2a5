use std::path::{Path, PathBuf};

use debsloc::estimator::{CocomoParams, ScheduleBasis};
use debsloc::pipeline::NativeUpstream;
use serde::Deserialize;

/// Settings read from `--config`. Command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub release_id: Option<String>,
    pub index: Option<String>,
    pub mirror: Option<String>,
    pub cache: Option<PathBuf>,
    pub overrides: Option<PathBuf>,
    pub languages: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub format: Option<String>,
    pub quota: Option<u64>,
    pub native_upstream: Option<NativeUpstream>,
    pub schedule_basis: Option<ScheduleBasis>,
    pub cocomo: Option<CocomoParams>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if cfg.jobs == Some(0) {
            return Err(format!("{}: jobs must be at least 1", path.display()));
        }
        Ok(cfg)
    }
}
