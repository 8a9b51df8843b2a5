use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use super::index::PackageId;
use super::patch::Patch;
use super::unpack::unpack_tarball;
use super::DebsrcError;

/// The three measured states of a source package.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    /// Upstream tarball as released.
    U,
    /// Full distribution source: upstream plus the packager's diff.
    D,
    /// `D` without its top-level `debian/` directory.
    S,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::U, Phase::D, Phase::S];

    pub fn describe(self) -> &'static str {
        match self {
            Phase::U => "upstream",
            Phase::D => "debian source",
            Phase::S => "sans-debian",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::U => "U",
            Phase::D => "D",
            Phase::S => "S",
        })
    }
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "U" | "u" | "upstream" => Ok(Phase::U),
            "D" | "d" | "debian" => Ok(Phase::D),
            "S" | "s" | "sans-debian" => Ok(Phase::S),
            _ => Err(format!("unknown phase `{s}` (expected U, D or S)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceStage {
    pub package: PackageId,
    pub phase: Phase,
    pub root: PathBuf,
}

/// Recursive copy that keeps symlinks as symlinks.
pub fn copy_tree(src: &Path, dst: &Path) -> Result<(), DebsrcError> {
    fs::create_dir_all(dst).map_err(|e| DebsrcError::io(dst, e))?;
    for entry in walkdir::WalkDir::new(src).min_depth(1).follow_links(false) {
        let entry = entry.map_err(|e| DebsrcError::io(src, std::io::Error::other(e)))?;
        let rel = entry.path().strip_prefix(src).expect("walk stays under src");
        let target = dst.join(rel);
        let ft = entry.file_type();
        if ft.is_dir() {
            fs::create_dir_all(&target).map_err(|e| DebsrcError::io(&target, e))?;
        } else if ft.is_symlink() {
            #[cfg(unix)]
            {
                let link = fs::read_link(entry.path()).map_err(|e| DebsrcError::io(entry.path(), e))?;
                std::os::unix::fs::symlink(&link, &target).map_err(|e| DebsrcError::io(&target, e))?;
            }
        } else {
            fs::copy(entry.path(), &target).map_err(|e| DebsrcError::io(&target, e))?;
        }
    }
    Ok(())
}

/// Unpack the upstream tarball of an upstream-plus-diff package.
pub fn unpack_upstream(
    package: PackageId,
    tarball: &Path,
    dest: &Path,
    quota: Option<u64>,
) -> Result<SourceStage, DebsrcError> {
    let root = unpack_tarball(tarball, dest, quota)?;
    Ok(SourceStage { package, phase: Phase::U, root })
}

/// Unpack a native package's tarball; it is already the distribution
/// source.
pub fn unpack_native(
    package: PackageId,
    tarball: &Path,
    dest: &Path,
    quota: Option<u64>,
) -> Result<SourceStage, DebsrcError> {
    let root = unpack_tarball(tarball, dest, quota)?;
    Ok(SourceStage { package, phase: Phase::D, root })
}

/// Copy the upstream stage to `dest` and apply the gzip-compressed diff to
/// the copy. Diff paths carry one leading directory, which is stripped.
pub fn apply_debian_diff(upstream: &SourceStage, diff: &Path, dest: &Path) -> Result<SourceStage, DebsrcError> {
    if upstream.phase != Phase::U {
        return Err(DebsrcError::WrongPhase { expected: Phase::U, found: upstream.phase });
    }
    let mut raw = Vec::new();
    let file = fs::File::open(diff).map_err(|e| DebsrcError::io(diff, e))?;
    GzDecoder::new(file)
        .read_to_end(&mut raw)
        .map_err(|e| DebsrcError::CorruptArchive(format!("{}: {e}", diff.display())))?;
    let patch = Patch::parse(&raw)?;
    copy_tree(&upstream.root, dest)?;
    patch.apply_to_dir(dest, 1)?;
    Ok(SourceStage {
        package: upstream.package.clone(),
        phase: Phase::D,
        root: dest.to_path_buf(),
    })
}

/// Copy `stage` to `dest` without its top-level `debian/` directory.
///
/// Returns the new stage and whether `debian/` was absent, which is an
/// anomaly for a distribution source tree. Stripping an already stripped
/// tree yields the same tree.
pub fn strip_debian_dir(stage: &SourceStage, dest: &Path) -> Result<(SourceStage, bool), DebsrcError> {
    if stage.phase == Phase::U {
        return Err(DebsrcError::WrongPhase { expected: Phase::D, found: stage.phase });
    }
    copy_tree(&stage.root, dest)?;
    let debian = dest.join("debian");
    let meta = fs::symlink_metadata(&debian);
    let anomaly = match meta {
        Ok(m) if m.is_dir() => {
            fs::remove_dir_all(&debian).map_err(|e| DebsrcError::io(&debian, e))?;
            false
        }
        Ok(_) => {
            fs::remove_file(&debian).map_err(|e| DebsrcError::io(&debian, e))?;
            false
        }
        Err(_) => true,
    };
    if anomaly && stage.phase == Phase::D {
        log::warn!("{}: no debian/ directory to strip", stage.package);
    }
    Ok((
        SourceStage {
            package: stage.package.clone(),
            phase: Phase::S,
            root: dest.to_path_buf(),
        },
        anomaly,
    ))
}
