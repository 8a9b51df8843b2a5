use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::thread;
use std::time::Duration;

use super::index::{FileEntry, FileRole, SourcePackageRecord};
use super::DebsrcError;

/// Where package files come from. Files live at `base/directory/filename`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MirrorLocator {
    Local(PathBuf),
    Http(String),
}

impl FromStr for MirrorLocator {
    type Err = DebsrcError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(MirrorLocator::Http(s.trim_end_matches('/').to_string()));
        }
        let path = s
            .strip_prefix("file://")
            .or_else(|| s.strip_prefix("file:"))
            .unwrap_or(s);
        if path.is_empty() {
            return Err(DebsrcError::Parse(format!("empty mirror locator `{s}`")));
        }
        Ok(MirrorLocator::Local(PathBuf::from(path)))
    }
}

impl fmt::Display for MirrorLocator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MirrorLocator::Local(p) => write!(f, "file:{}", p.display()),
            MirrorLocator::Http(u) => f.write_str(u),
        }
    }
}

impl MirrorLocator {
    fn join(&self, directory: &str, filename: &str) -> String {
        let mut parts = Vec::new();
        if !directory.is_empty() {
            parts.push(directory.trim_matches('/'));
        }
        parts.push(filename);
        let rel = parts.join("/");
        match self {
            MirrorLocator::Local(p) => p.join(rel).display().to_string(),
            MirrorLocator::Http(base) => format!("{base}/{rel}"),
        }
    }

    /// Cheap reachability check: local mirrors must be directories.
    pub fn check(&self) -> Result<(), DebsrcError> {
        match self {
            MirrorLocator::Local(p) if !p.is_dir() => Err(DebsrcError::Transfer(format!(
                "mirror {} is not a directory",
                p.display()
            ))),
            _ => Ok(()),
        }
    }

    /// Copy one archive file to `dest` (no verification).
    fn download(&self, directory: &str, filename: &str, dest: &Path) -> Result<(), DebsrcError> {
        let src = self.join(directory, filename);
        match self {
            MirrorLocator::Local(_) => {
                fs::copy(&src, dest).map_err(|e| DebsrcError::Transfer(format!("{src}: {e}")))?;
            }
            MirrorLocator::Http(_) => {
                let resp = ureq::get(&src)
                    .call()
                    .map_err(|e| DebsrcError::Transfer(format!("{src}: {e}")))?;
                let mut out = fs::File::create(dest).map_err(|e| DebsrcError::io(dest, e))?;
                io::copy(&mut resp.into_reader(), &mut out)
                    .map_err(|e| DebsrcError::Transfer(format!("{src}: {e}")))?;
            }
        }
        Ok(())
    }
}

/// Read an index from a local path or an `http(s)` URL.
pub fn read_index_source(location: &str) -> Result<Vec<u8>, DebsrcError> {
    if location.starts_with("http://") || location.starts_with("https://") {
        let resp = ureq::get(location)
            .call()
            .map_err(|e| DebsrcError::Transfer(format!("{location}: {e}")))?;
        let mut buf = Vec::new();
        io::copy(&mut resp.into_reader(), &mut buf)
            .map_err(|e| DebsrcError::Transfer(format!("{location}: {e}")))?;
        return Ok(buf);
    }
    let path = location
        .strip_prefix("file://")
        .or_else(|| location.strip_prefix("file:"))
        .unwrap_or(location);
    fs::read(path).map_err(|e| DebsrcError::io(Path::new(path), e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FetchOptions {
    /// Attempts per file after the first one, for transfer failures only.
    pub retries: u32,
    pub backoff: Duration,
}

impl Default for FetchOptions {
    fn default() -> Self {
        FetchOptions {
            retries: 2,
            backoff: Duration::from_millis(200),
        }
    }
}

/// Verified local copies of a package's files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalFiles {
    pub dsc: PathBuf,
    pub tarball: PathBuf,
    pub diff: Option<PathBuf>,
    /// Number of files transferred.
    pub transfers: usize,
}

fn verify(record: &SourcePackageRecord, entry: &FileEntry, path: &Path) -> Result<(), DebsrcError> {
    let (digest, size) = record
        .digest_algo
        .digest_file(path)
        .map_err(|e| DebsrcError::io(path, e))?;
    if size != entry.size {
        return Err(DebsrcError::Integrity {
            file: entry.filename.clone(),
            detail: format!("size {size}, index says {}", entry.size),
        });
    }
    if digest != entry.digest {
        return Err(DebsrcError::Integrity {
            file: entry.filename.clone(),
            detail: format!("{:?} {digest}, index says {}", record.digest_algo, entry.digest),
        });
    }
    Ok(())
}

fn fetch_one(
    record: &SourcePackageRecord,
    entry: &FileEntry,
    mirror: &MirrorLocator,
    dest_dir: &Path,
    opts: &FetchOptions,
) -> Result<PathBuf, DebsrcError> {
    let final_path = dest_dir.join(&entry.filename);
    let partial = dest_dir.join(format!("{}.part", entry.filename));
    let mut attempt = 0;
    loop {
        match mirror.download(&record.directory, &entry.filename, &partial) {
            Ok(()) => break,
            Err(err @ DebsrcError::Transfer(_)) if attempt < opts.retries => {
                attempt += 1;
                log::warn!("{}: {err}; retry {attempt}/{}", record.id(), opts.retries);
                thread::sleep(opts.backoff);
            }
            Err(err) => return Err(err),
        }
    }
    if let Err(e) = verify(record, entry, &partial) {
        let _ = fs::remove_file(&partial);
        return Err(e);
    }
    fs::rename(&partial, &final_path).map_err(|e| DebsrcError::io(&final_path, e))?;
    Ok(final_path)
}

/// Download every file of `record` into `dest_dir`, checking size and digest
/// before the file gets its final name.
pub fn fetch_package(
    record: &SourcePackageRecord,
    mirror: &MirrorLocator,
    dest_dir: &Path,
    opts: &FetchOptions,
) -> Result<LocalFiles, DebsrcError> {
    fs::create_dir_all(dest_dir).map_err(|e| DebsrcError::io(dest_dir, e))?;
    let (mut dsc, mut tarball, mut diff) = (None, None, None);
    for entry in &record.files {
        let path = fetch_one(record, entry, mirror, dest_dir, opts)?;
        match FileRole::of(&entry.filename) {
            Some(FileRole::Dsc) => dsc = Some(path),
            Some(FileRole::Tarball) => tarball = Some(path),
            Some(FileRole::Diff) => diff = Some(path),
            None => {}
        }
    }
    let missing = |what: &str| DebsrcError::Parse(format!("{}: no {what} in record", record.id()));
    Ok(LocalFiles {
        dsc: dsc.ok_or_else(|| missing(".dsc"))?,
        tarball: tarball.ok_or_else(|| missing("tarball"))?,
        diff,
        transfers: record.files.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locator_parsing() {
        assert_eq!(
            "file:///srv/mirror".parse::<MirrorLocator>().unwrap(),
            MirrorLocator::Local("/srv/mirror".into())
        );
        assert_eq!(
            "file:rel/m".parse::<MirrorLocator>().unwrap(),
            MirrorLocator::Local("rel/m".into())
        );
        assert_eq!(
            "https://archive.example.org/debian/".parse::<MirrorLocator>().unwrap(),
            MirrorLocator::Http("https://archive.example.org/debian".into())
        );
        assert!("file:".parse::<MirrorLocator>().is_err());
    }

    #[test]
    fn join_layout() {
        let m = MirrorLocator::Http("http://h/debian".into());
        assert_eq!(m.join("pool/main/h/hello/", "x.dsc"), "http://h/debian/pool/main/h/hello/x.dsc");
    }
}
