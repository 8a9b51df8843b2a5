use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::classify::{Classification, HEAD_BYTES};
use super::count::{count_lines, Scanner};
use super::generated::is_generated;
use super::language::{Registry, UNCLASSIFIED};
use super::SlocError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    Generated,
    Unclassified,
    Binary,
    Unreadable,
    Duplicate,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SkipReason::Generated => "generated",
            SkipReason::Unclassified => "unclassified",
            SkipReason::Binary => "binary",
            SkipReason::Unreadable => "unreadable",
            SkipReason::Duplicate => "duplicate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileCount {
    /// Path relative to the tree root, `/`-separated.
    pub path: String,
    pub language: String,
    pub sloc: u64,
    pub total_lines: u64,
    pub bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<SkipReason>,
    /// Matched generated marker, first path of a duplicate, or I/O error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl FileCount {
    fn skipped(path: String, reason: SkipReason, detail: Option<String>) -> FileCount {
        FileCount {
            path,
            language: UNCLASSIFIED.to_string(),
            sloc: 0,
            total_lines: 0,
            bytes: 0,
            skipped: Some(reason),
            detail,
        }
    }

    pub fn is_counted(&self) -> bool {
        self.skipped.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeCount {
    pub root: String,
    pub files: Vec<FileCount>,
    pub per_language: BTreeMap<String, u64>,
    pub total_sloc: u64,
}

impl TreeCount {
    pub fn from_files(root: impl Into<String>, files: Vec<FileCount>) -> TreeCount {
        let mut per_language = BTreeMap::new();
        let mut total_sloc = 0;
        for f in files.iter().filter(|f| f.is_counted()) {
            *per_language.entry(f.language.clone()).or_insert(0) += f.sloc;
            total_sloc += f.sloc;
        }
        TreeCount {
            root: root.into(),
            files,
            per_language,
            total_sloc,
        }
    }

    pub fn empty(root: impl Into<String>) -> TreeCount {
        TreeCount::from_files(root, Vec::new())
    }

    /// Number of skipped files per reason.
    pub fn skip_totals(&self) -> BTreeMap<SkipReason, usize> {
        let mut out = BTreeMap::new();
        for reason in self.files.iter().filter_map(|f| f.skipped) {
            *out.entry(reason).or_insert(0) += 1;
        }
        out
    }

    /// Bytes of the files that were counted.
    pub fn counted_bytes(&self) -> u64 {
        self.files.iter().filter(|f| f.is_counted()).map(|f| f.bytes).sum()
    }

    /// SLOC of the counted files under `prefix/`.
    pub fn subtree_sloc(&self, prefix: &str) -> u64 {
        let prefix = format!("{}/", prefix.trim_end_matches('/'));
        self.files
            .iter()
            .filter(|f| f.is_counted() && f.path.starts_with(&prefix))
            .map(|f| f.sloc)
            .sum()
    }

    /// Checks the aggregate invariants: totals agree with the per-language
    /// map and with the counted files, and no file has more SLOC than lines.
    pub fn is_consistent(&self) -> bool {
        let by_lang: u64 = self.per_language.values().sum();
        let by_file: u64 = self.files.iter().filter(|f| f.is_counted()).map(|f| f.sloc).sum();
        self.total_sloc == by_lang
            && by_lang == by_file
            && self.files.iter().all(|f| f.sloc <= f.total_lines)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeOptions {
    /// Count byte-identical files once; later paths become `duplicate` skips.
    pub dedup_identical: bool,
    pub follow_symlinks: bool,
    /// Spread per-file work over the current rayon pool.
    pub parallel: bool,
}

impl Default for TreeOptions {
    fn default() -> Self {
        TreeOptions {
            dedup_identical: false,
            follow_symlinks: false,
            parallel: true,
        }
    }
}

enum Entry {
    File(PathBuf, String),
    Broken(String, String),
}

struct Measured {
    count: FileCount,
    digest: Option<[u8; 32]>,
}

fn relative(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn collect_entries(root: &Path, follow_symlinks: bool) -> Vec<Entry> {
    let mut entries = Vec::new();
    for item in walkdir::WalkDir::new(root).follow_links(follow_symlinks) {
        match item {
            Ok(e) if e.file_type().is_file() => {
                let rel = relative(root, e.path());
                entries.push(Entry::File(e.path().to_path_buf(), rel));
            }
            Ok(_) => {}
            Err(err) => {
                let rel = err
                    .path()
                    .map(|p| relative(root, p))
                    .unwrap_or_default();
                entries.push(Entry::Broken(rel, err.to_string()));
            }
        }
    }
    let key = |e: &Entry| match e {
        Entry::File(_, r) | Entry::Broken(r, _) => r.clone(),
    };
    entries.sort_by_key(key);
    entries
}

impl Registry {
    fn measure_file(&self, scanners: &[Scanner], path: &Path, rel: String, dedup: bool) -> Measured {
        let mut content = Vec::new();
        if let Err(err) = fs::File::open(path).and_then(|mut f| f.read_to_end(&mut content)) {
            return Measured {
                count: FileCount::skipped(rel, SkipReason::Unreadable, Some(err.to_string())),
                digest: None,
            };
        }
        let bytes = content.len() as u64;
        let head = &content[..content.len().min(HEAD_BYTES)];
        let lang = match self.classify(path, head) {
            Classification::Binary => {
                let mut c = FileCount::skipped(rel, SkipReason::Binary, None);
                c.bytes = bytes;
                return Measured { count: c, digest: None };
            }
            Classification::Unclassified => {
                let mut c = FileCount::skipped(rel, SkipReason::Unclassified, None);
                c.bytes = bytes;
                c.total_lines = count_lines(&content);
                return Measured { count: c, digest: None };
            }
            Classification::Language(id) => id,
        };
        if let Some(marker) = is_generated(head) {
            log::debug!("{rel}: generated ({marker})");
            let mut c = FileCount::skipped(rel, SkipReason::Generated, Some(marker.to_string()));
            c.language = lang;
            c.bytes = bytes;
            c.total_lines = count_lines(&content);
            return Measured { count: c, digest: None };
        }
        let idx = self.index_of(&lang).expect("classifier returns registered ids");
        let lc = scanners[idx].count(&content);
        Measured {
            count: FileCount {
                path: rel,
                language: lang,
                sloc: lc.sloc,
                total_lines: lc.total_lines,
                bytes,
                skipped: None,
                detail: None,
            },
            digest: dedup.then(|| Sha256::digest(&content).into()),
        }
    }

    /// Walk `root` in lexicographic path order, classify every regular file
    /// and count the ones that are source.
    ///
    /// Per-file failures are recorded as skips; only a missing or unreadable
    /// root is an error. The result does not depend on `options.parallel`.
    pub fn count_tree(&self, root: &Path, options: &TreeOptions) -> Result<TreeCount, SlocError> {
        let meta = fs::metadata(root).map_err(|e| SlocError::Io {
            path: root.display().to_string(),
            source: e,
        })?;
        if !meta.is_dir() {
            return Err(SlocError::NotADirectory(root.display().to_string()));
        }
        fs::read_dir(root).map_err(|e| SlocError::Io {
            path: root.display().to_string(),
            source: e,
        })?;

        let scanners: Vec<Scanner> = self.languages().iter().map(Scanner::new).collect();
        let entries = collect_entries(root, options.follow_symlinks);
        let dedup = options.dedup_identical;
        let measure = |e: &Entry| match e {
            Entry::File(path, rel) => self.measure_file(&scanners, path, rel.clone(), dedup),
            Entry::Broken(rel, err) => Measured {
                count: FileCount::skipped(rel.clone(), SkipReason::Unreadable, Some(err.clone())),
                digest: None,
            },
        };
        let measured: Vec<Measured> = if options.parallel {
            entries.par_iter().map(measure).collect()
        } else {
            entries.iter().map(measure).collect()
        };

        let mut seen: HashMap<[u8; 32], String> = HashMap::new();
        let files = measured
            .into_iter()
            .map(|m| {
                let mut count = m.count;
                if let Some(digest) = m.digest {
                    if let Some(first) = seen.get(&digest) {
                        count.skipped = Some(SkipReason::Duplicate);
                        count.detail = Some(first.clone());
                        count.sloc = 0;
                    } else {
                        seen.insert(digest, count.path.clone());
                    }
                }
                count
            })
            .collect();
        Ok(TreeCount::from_files(root.display().to_string(), files))
    }
}

/// [`Registry::count_tree`] with the builtin registry.
pub fn count_tree(root: &Path, options: &TreeOptions) -> Result<TreeCount, SlocError> {
    super::builtin_registry().count_tree(root, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(root: &Path, rel: &str, content: &[u8]) {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, content).unwrap();
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let tc = count_tree(dir.path(), &TreeOptions::default()).unwrap();
        assert_eq!(tc.total_sloc, 0);
        assert!(tc.files.is_empty());
    }

    #[test]
    fn generated_file_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "main.c", b"int a;\nint b;\n/* c */\nint d;\n");
        write(
            dir.path(),
            "parse.c",
            b"/* A Bison parser, made by GNU Bison. Generated by bison. */\nint x;\n",
        );
        let tc = count_tree(dir.path(), &TreeOptions::default()).unwrap();
        assert_eq!(tc.total_sloc, 3);
        let skips = tc.skip_totals();
        assert_eq!(skips.get(&SkipReason::Generated), Some(&1));
        assert_eq!(skips.len(), 1);
        assert!(tc.is_consistent());
    }

    #[test]
    fn lexicographic_order_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a/b.c", b"x;\n");
        write(dir.path(), "a.c", b"x;\n");
        write(dir.path(), "Z.c", b"x;\n");
        let tc = count_tree(dir.path(), &TreeOptions::default()).unwrap();
        let paths: Vec<_> = tc.files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, ["Z.c", "a.c", "a/b.c"]);
    }

    #[test]
    fn dedup_keeps_first_path() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.c", b"int a;\n");
        write(dir.path(), "b/copy.c", b"int a;\n");
        let on = TreeOptions { dedup_identical: true, ..Default::default() };
        let tc = count_tree(dir.path(), &on).unwrap();
        assert_eq!(tc.total_sloc, 1);
        assert_eq!(tc.files[1].skipped, Some(SkipReason::Duplicate));
        assert_eq!(tc.files[1].detail.as_deref(), Some("a.c"));
        let off = count_tree(dir.path(), &TreeOptions::default()).unwrap();
        assert_eq!(off.total_sloc, 2);
    }

    #[test]
    fn missing_root_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(count_tree(&dir.path().join("nope"), &TreeOptions::default()).is_err());
    }

    #[cfg(unix)]
    #[test]
    fn unreadable_file_is_recorded() {
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "ok.c", b"int a;\n");
        write(dir.path(), "secret.c", b"int b;\n");
        let p = dir.path().join("secret.c");
        fs::set_permissions(&p, fs::Permissions::from_mode(0o000)).unwrap();
        if fs::read(&p).is_ok() {
            // Running as root: permissions are not enforced.
            return;
        }
        let tc = count_tree(dir.path(), &TreeOptions::default()).unwrap();
        assert_eq!(tc.total_sloc, 1);
        assert_eq!(tc.files[1].skipped, Some(SkipReason::Unreadable));
    }

    #[cfg(unix)]
    #[test]
    fn symlinks_followed_only_on_request() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "real/a.c", b"int a;\n");
        std::os::unix::fs::symlink(dir.path().join("real"), dir.path().join("link")).unwrap();
        let tc = count_tree(dir.path(), &TreeOptions::default()).unwrap();
        assert_eq!(tc.total_sloc, 1);
        let follow = TreeOptions { follow_symlinks: true, ..Default::default() };
        let tc = count_tree(dir.path(), &follow).unwrap();
        assert_eq!(tc.total_sloc, 2);
    }
}
