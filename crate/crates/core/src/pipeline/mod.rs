//! Per-package measurement (fetch, stages, counts), the result cache and
//! release aggregation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curation::{apply_plan, CurationError, FamilyPlan};
use crate::debsrc::{
    apply_debian_diff, fetch_package, parse_dsc, strip_debian_dir, unpack_native, unpack_upstream, DebsrcError,
    DigestAlgo, FetchOptions, FileEntry, MirrorLocator, PackageId, PackageKind, Phase, SourcePackageRecord,
};
use crate::sloc::{Registry, TreeCount, TreeOptions};

mod cache;

pub use cache::{Cache, ManifestEntry, ReleaseManifest};

pub const TOOL_VERSION: &str = concat!("debsloc/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("cache {path}: {source}")]
    Cache {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cache record {path} is unreadable: {message}")]
    CacheFormat { path: String, message: String },
    #[error("no measurements under {0}")]
    EmptyCache(String),
    #[error("no release `{0}` in the cache")]
    MissingRelease(String),
    #[error("mirror unreachable: {0}")]
    MirrorUnreachable(String),
    #[error(transparent)]
    Curation(#[from] CurationError),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl PipelineError {
    pub(crate) fn cache(path: &Path, source: std::io::Error) -> PipelineError {
        PipelineError::Cache {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureStatus {
    Ok,
    FetchFailed,
    PatchFailed,
    Corrupt,
}

impl std::fmt::Display for MeasureStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MeasureStatus::Ok => "ok",
            MeasureStatus::FetchFailed => "fetch_failed",
            MeasureStatus::PatchFailed => "patch_failed",
            MeasureStatus::Corrupt => "corrupt",
        })
    }
}

/// What phase U means for a native package, which has no upstream tarball.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NativeUpstream {
    /// No U count; the package adds nothing to the upstream total.
    #[default]
    Absent,
    /// Use the D count as U.
    SubstituteDebian,
}

/// Everything a cached measurement depends on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub digest_algo: DigestAlgo,
    pub files: Vec<FileEntry>,
    pub tool_version: String,
    /// Fingerprint of the language table used for counting.
    pub languages: String,
    pub native_upstream: NativeUpstream,
}

impl Provenance {
    pub fn new(record: &SourcePackageRecord, registry: &Registry, native_upstream: NativeUpstream) -> Provenance {
        Provenance {
            digest_algo: record.digest_algo,
            files: record.files.clone(),
            tool_version: TOOL_VERSION.to_string(),
            languages: registry.fingerprint(),
            native_upstream,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageMeasurement {
    pub package: PackageId,
    pub kind: PackageKind,
    pub status: MeasureStatus,
    pub detail: Option<String>,
    /// The distribution source had no `debian/` directory.
    #[serde(default)]
    pub debian_missing: bool,
    /// The failure depends on the environment (disk, quota) and must not be
    /// served from the cache.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub retry: bool,
    pub phases: BTreeMap<Phase, TreeCount>,
    pub provenance: Provenance,
}

impl PackageMeasurement {
    pub fn is_ok(&self) -> bool {
        self.status == MeasureStatus::Ok
    }

    pub fn sloc(&self, phase: Phase) -> Option<u64> {
        self.phases.get(&phase).map(|t| t.total_sloc)
    }

    /// SLOC of the `debian/` subtree of the D count.
    pub fn debian_sloc(&self) -> Option<u64> {
        self.phases.get(&Phase::D).map(|t| t.subtree_sloc("debian"))
    }

    fn reusable(&self) -> bool {
        self.status != MeasureStatus::FetchFailed && !self.retry
    }

    /// Check the per-package invariants; the error names the first one
    /// that fails.
    pub fn check(&self) -> Result<(), String> {
        if !self.is_ok() {
            return Ok(());
        }
        let (Some(d), Some(s)) = (self.sloc(Phase::D), self.sloc(Phase::S)) else {
            return Err("ok measurement without D and S counts".into());
        };
        let has_u = self.phases.contains_key(&Phase::U);
        let wants_u = self.kind == PackageKind::UpstreamPlusDiff
            || self.provenance.native_upstream == NativeUpstream::SubstituteDebian;
        if has_u != wants_u {
            return Err(format!("U count present = {has_u} for a {:?} package", self.kind));
        }
        if d < s {
            return Err(format!("D ({d}) < S ({s})"));
        }
        let debian = self.debian_sloc().unwrap_or(0);
        if d - s != debian {
            return Err(format!("D - S = {} but debian/ holds {debian}", d - s));
        }
        if !self.phases.values().all(TreeCount::is_consistent) {
            return Err("inconsistent tree count".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MeasureOptions {
    pub fetch: FetchOptions,
    /// Byte limit for an unpacked tarball.
    pub quota: Option<u64>,
    /// Leave each package's scratch directory behind (its path is logged).
    pub keep_scratch: bool,
    /// Parent of the scratch directories; the system temp dir by default.
    pub scratch_root: Option<PathBuf>,
    pub tree: TreeOptions,
    pub native_upstream: NativeUpstream,
    /// Worker threads for `measure_release`; 0 means one per processor.
    pub jobs: usize,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions {
            fetch: FetchOptions::default(),
            quota: None,
            keep_scratch: false,
            scratch_root: None,
            tree: TreeOptions::default(),
            native_upstream: NativeUpstream::Absent,
            jobs: 0,
        }
    }
}

/// How a single `measure_package` call was served.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PackageRun {
    pub cache_hit: bool,
    pub fetched: bool,
    /// The fetch failed because the mirror could not be read (as opposed
    /// to a bad file).
    pub transfer_error: bool,
}

struct Failure {
    status: MeasureStatus,
    retry: bool,
    transfer: bool,
    error: String,
}

impl Failure {
    fn from(err: DebsrcError) -> Failure {
        let (status, retry, transfer) = match &err {
            DebsrcError::Transfer(_) => (MeasureStatus::FetchFailed, false, true),
            DebsrcError::Integrity { .. } | DebsrcError::DescriptorMismatch { .. } => {
                (MeasureStatus::FetchFailed, false, false)
            }
            DebsrcError::Patch(_) => (MeasureStatus::PatchFailed, false, false),
            DebsrcError::Parse(_) | DebsrcError::CorruptArchive(_) | DebsrcError::Security(_) => {
                (MeasureStatus::Corrupt, false, false)
            }
            DebsrcError::Quota { .. } | DebsrcError::Io { .. } | DebsrcError::WrongPhase { .. } => {
                (MeasureStatus::Corrupt, true, false)
            }
        };
        Failure { status, retry, transfer, error: err.to_string() }
    }
}

fn relabel(mut tree: TreeCount, id: &PackageId, phase: Phase) -> TreeCount {
    tree.root = format!("{id}/{phase}");
    tree
}

fn run_stages(
    record: &SourcePackageRecord,
    mirror: &MirrorLocator,
    scratch: &Path,
    registry: &Registry,
    opts: &MeasureOptions,
) -> Result<(BTreeMap<Phase, TreeCount>, bool), Failure> {
    let id = record.id();
    let files = fetch_package(record, mirror, &scratch.join("dl"), &opts.fetch).map_err(Failure::from)?;
    let dsc_text = fs::read(&files.dsc).map_err(|e| Failure::from(DebsrcError::io(&files.dsc, e)))?;
    parse_dsc(&String::from_utf8_lossy(&dsc_text))
        .and_then(|dsc| dsc.verify_against(record))
        .map_err(Failure::from)?;

    let mut stages = Vec::new();
    let debian = match record.kind {
        PackageKind::UpstreamPlusDiff => {
            let u = unpack_upstream(id.clone(), &files.tarball, &scratch.join("u"), opts.quota).map_err(Failure::from)?;
            let diff = files.diff.as_ref().expect("upstream_plus_diff records carry a diff");
            let d = apply_debian_diff(&u, diff, &scratch.join("d")).map_err(Failure::from)?;
            stages.push(u);
            d
        }
        PackageKind::Native => {
            unpack_native(id.clone(), &files.tarball, &scratch.join("d"), opts.quota).map_err(Failure::from)?
        }
    };
    let (sans, missing) = strip_debian_dir(&debian, &scratch.join("s")).map_err(Failure::from)?;
    stages.push(debian);
    stages.push(sans);

    let mut phases = BTreeMap::new();
    for stage in &stages {
        let tree = registry.count_tree(&stage.root, &opts.tree).map_err(|e| Failure {
            status: MeasureStatus::Corrupt,
            retry: true,
            transfer: false,
            error: e.to_string(),
        })?;
        phases.insert(stage.phase, relabel(tree, &id, stage.phase));
    }
    if record.kind == PackageKind::Native && opts.native_upstream == NativeUpstream::SubstituteDebian {
        let d = phases[&Phase::D].clone();
        phases.insert(Phase::U, relabel(d, &id, Phase::U));
    }
    Ok((phases, missing))
}

/// Measure one package, or return its cached measurement when the cache
/// holds one for the same inputs. Stage failures come back as a failed
/// measurement; only cache I/O errors are returned as `Err`.
pub fn measure_package(
    record: &SourcePackageRecord,
    mirror: &MirrorLocator,
    cache: &Cache,
    registry: &Registry,
    opts: &MeasureOptions,
) -> Result<(PackageMeasurement, PackageRun), PipelineError> {
    let id = record.id();
    let provenance = Provenance::new(record, registry, opts.native_upstream);
    match cache.load(&id) {
        Ok(Some(m)) if m.package == id && m.provenance == provenance && m.reusable() => {
            log::debug!("{id}: cached");
            return Ok((m, PackageRun { cache_hit: true, ..PackageRun::default() }));
        }
        Ok(_) => {}
        Err(e) => log::warn!("{id}: ignoring cache record ({e})"),
    }

    let parent = opts.scratch_root.clone().unwrap_or_else(std::env::temp_dir);
    fs::create_dir_all(&parent).map_err(|e| PipelineError::cache(&parent, e))?;
    let scratch = tempfile::Builder::new()
        .prefix(&format!("debsloc-{}-", id.name))
        .tempdir_in(&parent)
        .map_err(|e| PipelineError::cache(&parent, e))?;

    let outcome = run_stages(record, mirror, scratch.path(), registry, opts);
    let scratch_str = scratch.path().display().to_string();
    let mut run = PackageRun { fetched: true, ..PackageRun::default() };
    let m = match outcome {
        Ok((phases, debian_missing)) => PackageMeasurement {
            package: id.clone(),
            kind: record.kind,
            status: MeasureStatus::Ok,
            detail: None,
            debian_missing,
            retry: false,
            phases,
            provenance,
        },
        Err(f) => {
            log::warn!("{id}: {} ({})", f.status, f.error);
            run.transfer_error = f.transfer;
            PackageMeasurement {
                package: id.clone(),
                kind: record.kind,
                status: f.status,
                // Scratch paths differ between runs; keep records comparable.
                detail: Some(f.error.replace(&scratch_str, "<scratch>")),
                debian_missing: false,
                retry: f.retry,
                phases: BTreeMap::new(),
                provenance,
            }
        }
    };
    if let Err(broken) = m.check() {
        log::error!("{id}: {broken}");
    }
    if opts.keep_scratch {
        log::info!("{id}: scratch kept at {}", scratch.keep().display());
    }
    cache.store(&m)?;
    Ok((m, run))
}

/// SLOC total and per-language split of one phase.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTotals {
    pub total_sloc: u64,
    pub per_language: BTreeMap<String, u64>,
    /// Packages contributing a count for this phase.
    pub packages: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub package: PackageId,
    pub status: MeasureStatus,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseMeasurement {
    pub release_id: String,
    /// Every disposition, ok or not, sorted by package.
    pub packages: Vec<PackageMeasurement>,
    pub totals: BTreeMap<Phase, PhaseTotals>,
    pub skipped: Vec<SkipRecord>,
}

/// Per-phase totals over the ok packages of `m`. All three phases are
/// present, with zero totals where no package has a count.
pub fn phase_totals(packages: &[PackageMeasurement]) -> BTreeMap<Phase, PhaseTotals> {
    let mut totals: BTreeMap<Phase, PhaseTotals> = Phase::ALL.iter().map(|p| (*p, PhaseTotals::default())).collect();
    for pkg in packages.iter().filter(|p| p.is_ok()) {
        for (phase, tree) in &pkg.phases {
            let t = totals.get_mut(phase).expect("all phases present");
            t.total_sloc += tree.total_sloc;
            t.packages += 1;
            for (lang, n) in &tree.per_language {
                *t.per_language.entry(lang.clone()).or_insert(0) += n;
            }
        }
    }
    totals
}

impl ReleaseMeasurement {
    pub fn assemble(release_id: &str, mut packages: Vec<PackageMeasurement>) -> ReleaseMeasurement {
        packages.sort_by(|a, b| a.package.cmp(&b.package));
        let skipped = packages
            .iter()
            .filter(|p| !p.is_ok())
            .map(|p| SkipRecord {
                package: p.package.clone(),
                status: p.status,
                detail: p.detail.clone(),
            })
            .collect();
        ReleaseMeasurement {
            release_id: release_id.to_string(),
            totals: phase_totals(&packages),
            packages,
            skipped,
        }
    }

    pub fn ok_packages(&self) -> impl Iterator<Item = &PackageMeasurement> {
        self.packages.iter().filter(|p| p.is_ok())
    }

    pub fn total(&self, phase: Phase) -> u64 {
        self.totals.get(&phase).map_or(0, |t| t.total_sloc)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub packages: usize,
    pub cache_hits: usize,
    /// Packages that were downloaded in this run.
    pub fetches: usize,
    pub ok: usize,
    pub failed: usize,
}

/// Measure the curated part of `records` and write the release manifest.
pub fn measure_release(
    release_id: &str,
    records: &[SourcePackageRecord],
    plan: &FamilyPlan,
    mirror: &MirrorLocator,
    cache: &Cache,
    registry: &Registry,
    opts: &MeasureOptions,
) -> Result<(ReleaseMeasurement, RunStats), PipelineError> {
    let curated = apply_plan(plan, records)?;
    if !curated.is_empty() {
        mirror.check().map_err(|e| PipelineError::MirrorUnreachable(e.to_string()))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let results: Vec<_> = pool.install(|| {
        curated
            .par_iter()
            .map(|r| measure_package(r, mirror, cache, registry, opts))
            .collect()
    });

    let mut stats = RunStats { packages: curated.len(), ..RunStats::default() };
    let mut packages = Vec::with_capacity(results.len());
    let mut transfer_errors = 0;
    for res in results {
        let (m, run) = res?;
        stats.cache_hits += run.cache_hit as usize;
        stats.fetches += run.fetched as usize;
        transfer_errors += run.transfer_error as usize;
        if m.is_ok() {
            stats.ok += 1;
        } else {
            stats.failed += 1;
        }
        packages.push(m);
    }
    if !curated.is_empty() && transfer_errors == curated.len() {
        return Err(PipelineError::MirrorUnreachable(format!("{mirror}: every transfer failed")));
    }

    let release = ReleaseMeasurement::assemble(release_id, packages);
    let manifest = ReleaseManifest {
        release_id: release_id.to_string(),
        plan_digest: plan.digest(),
        tool_version: TOOL_VERSION.to_string(),
        packages: release
            .packages
            .iter()
            .map(|p| ManifestEntry {
                package: p.package.clone(),
                status: p.status,
                record: cache.record_rel(&p.package),
            })
            .collect(),
    };
    cache.store_manifest(&manifest)?;
    Ok((release, stats))
}
