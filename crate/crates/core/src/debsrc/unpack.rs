use std::fs;
use std::io::{self, BufReader};
use std::path::{Component, Path, PathBuf};

use flate2::read::GzDecoder;
use tar::{Archive, EntryType};

use super::DebsrcError;

/// True when `path` stays below the directory it is resolved against.
pub(crate) fn is_contained(path: &Path) -> bool {
    path.components().all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
}

/// Lexically resolve a symlink target relative to the link's directory and
/// check it does not climb out of the tree.
fn link_stays_inside(entry_path: &Path, target: &Path) -> bool {
    if target.is_absolute() {
        return false;
    }
    let mut depth: i64 = entry_path.components().count() as i64 - 1;
    for c in target.components() {
        match c {
            Component::Normal(_) => depth += 1,
            Component::CurDir => {}
            Component::ParentDir => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}

fn corrupt(tarball: &Path, e: impl std::fmt::Display) -> DebsrcError {
    DebsrcError::CorruptArchive(format!("{}: {e}", tarball.display()))
}

fn make_owner_writable(root: &Path) -> io::Result<()> {
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        for entry in walkdir::WalkDir::new(root).follow_links(false) {
            let entry = entry.map_err(io::Error::other)?;
            let ft = entry.file_type();
            if ft.is_symlink() {
                continue;
            }
            let meta = entry.metadata().map_err(io::Error::other)?;
            let mode = meta.permissions().mode();
            let want = if ft.is_dir() { mode | 0o700 } else { mode | 0o600 };
            if want != mode {
                fs::set_permissions(entry.path(), fs::Permissions::from_mode(want))?;
            }
        }
    }
    #[cfg(not(unix))]
    let _ = root;
    Ok(())
}

/// Extract a gzip-compressed tarball into `dest` and return the source root:
/// the single top-level directory when the archive has one, `dest` itself
/// otherwise.
///
/// Entries with absolute paths or `..` components abort with
/// [`DebsrcError::Security`]. Symlinks that point outside the tree and
/// special files are skipped. `quota` caps the summed size of regular files.
pub fn unpack_tarball(tarball: &Path, dest: &Path, quota: Option<u64>) -> Result<PathBuf, DebsrcError> {
    fs::create_dir_all(dest).map_err(|e| DebsrcError::io(dest, e))?;
    let file = fs::File::open(tarball).map_err(|e| DebsrcError::io(tarball, e))?;
    let mut archive = Archive::new(GzDecoder::new(BufReader::new(file)));
    archive.set_preserve_permissions(false);
    archive.set_overwrite(true);

    let mut used = 0u64;
    for entry in archive.entries().map_err(|e| corrupt(tarball, e))? {
        let mut entry = entry.map_err(|e| corrupt(tarball, e))?;
        let path = entry.path().map_err(|e| corrupt(tarball, e))?.into_owned();
        if !is_contained(&path) {
            return Err(DebsrcError::Security(format!(
                "{}: entry `{}` escapes the extraction directory",
                tarball.display(),
                path.display()
            )));
        }
        match entry.header().entry_type() {
            EntryType::Regular | EntryType::Continuous | EntryType::GNUSparse => {
                used += entry.size();
                if let Some(limit) = quota {
                    if used > limit {
                        return Err(DebsrcError::Quota { limit, needed: used });
                    }
                }
            }
            EntryType::Directory => {}
            EntryType::Symlink => {
                let target = entry
                    .link_name()
                    .map_err(|e| corrupt(tarball, e))?
                    .map(|t| t.into_owned())
                    .unwrap_or_default();
                if !link_stays_inside(&path, &target) {
                    log::warn!(
                        "{}: skipping symlink {} -> {}",
                        tarball.display(),
                        path.display(),
                        target.display()
                    );
                    continue;
                }
            }
            EntryType::Link => {
                let target = entry.link_name().map_err(|e| corrupt(tarball, e))?;
                if !target.as_deref().is_some_and(is_contained) {
                    return Err(DebsrcError::Security(format!(
                        "{}: hard link `{}` escapes the extraction directory",
                        tarball.display(),
                        path.display()
                    )));
                }
            }
            other => {
                log::debug!("{}: skipping {:?} entry {}", tarball.display(), other, path.display());
                continue;
            }
        }
        entry.unpack_in(dest).map_err(|e| corrupt(tarball, e))?;
    }
    make_owner_writable(dest).map_err(|e| DebsrcError::io(dest, e))?;

    let mut top = fs::read_dir(dest)
        .map_err(|e| DebsrcError::io(dest, e))?
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| DebsrcError::io(dest, e))?;
    if top.len() == 1 {
        let only = top.pop().expect("one entry");
        if only.file_type().map(|t| t.is_dir()).unwrap_or(false) {
            return Ok(only.path());
        }
    }
    Ok(dest.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn containment() {
        assert!(is_contained(Path::new("a/b/c")));
        assert!(is_contained(Path::new("./a")));
        assert!(!is_contained(Path::new("../evil")));
        assert!(!is_contained(Path::new("a/../../b")));
        assert!(!is_contained(Path::new("/etc/passwd")));
    }

    #[test]
    fn symlink_targets() {
        assert!(link_stays_inside(Path::new("pkg/lib/x"), Path::new("../include/y")));
        assert!(!link_stays_inside(Path::new("pkg/x"), Path::new("../../etc")));
        assert!(!link_stays_inside(Path::new("x"), Path::new("/usr/share/doc")));
    }
}
