//! Unified diffs: parsing and exact application onto a directory tree.
//!
//! Hunks must match at the line numbers their headers give, with every
//! context and removed line identical (no fuzz, no offset search).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::unpack::is_contained;
use super::DebsrcError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub text: Vec<u8>,
    pub newline: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HunkLine {
    Context(Line),
    Remove(Line),
    Add(Line),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: usize,
    pub old_count: usize,
    pub new_start: usize,
    pub new_count: usize,
    pub lines: Vec<HunkLine>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilePatch {
    pub old_path: String,
    pub new_path: String,
    pub hunks: Vec<Hunk>,
}

impl FilePatch {
    pub fn is_deletion(&self) -> bool {
        self.new_path == "/dev/null"
    }

    /// Path the patch applies to, with `strip` leading components removed.
    pub fn target(&self, strip: usize) -> Result<PathBuf, DebsrcError> {
        let raw = if self.is_deletion() { &self.old_path } else { &self.new_path };
        let stripped: PathBuf = raw.split('/').filter(|c| !c.is_empty()).skip(strip).collect();
        if stripped.as_os_str().is_empty() || !is_contained(&stripped) || raw.starts_with('/') {
            return Err(DebsrcError::Security(format!("patch path `{raw}` is not usable")));
        }
        Ok(stripped)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Patch {
    pub files: Vec<FilePatch>,
}

fn malformed(lineno: usize, what: impl std::fmt::Display) -> DebsrcError {
    DebsrcError::Patch(format!("diff line {lineno}: {what}"))
}

fn header_path(rest: &[u8]) -> String {
    let s = String::from_utf8_lossy(rest);
    let s = s.trim_end_matches(['\n', '\r']);
    // A tab separates the name from an optional timestamp.
    s.split('\t').next().unwrap_or("").trim_end().to_string()
}

fn parse_range(s: &str) -> Option<(usize, usize)> {
    match s.split_once(',') {
        Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
        None => Some((s.parse().ok()?, 1)),
    }
}

fn parse_hunk_header(line: &[u8]) -> Option<(usize, usize, usize, usize)> {
    let s = std::str::from_utf8(line).ok()?;
    let body = s.strip_prefix("@@ -")?;
    let (ranges, _) = body.split_once(" @@")?;
    let (old, new) = ranges.split_once(" +")?;
    let (os, oc) = parse_range(old)?;
    let (ns, nc) = parse_range(new)?;
    Some((os, oc, ns, nc))
}

fn split_lines(data: &[u8]) -> Vec<Line> {
    data.split_inclusive(|&b| b == b'\n')
        .map(|l| match l.strip_suffix(b"\n") {
            Some(t) => Line { text: t.to_vec(), newline: true },
            None => Line { text: l.to_vec(), newline: false },
        })
        .collect()
}

fn join_lines(lines: &[Line]) -> Vec<u8> {
    let mut out = Vec::new();
    for l in lines {
        out.extend_from_slice(&l.text);
        if l.newline {
            out.push(b'\n');
        }
    }
    out
}

impl Patch {
    /// Parse a unified diff. Text outside file sections (`diff -urN ...`,
    /// `Only in ...`) is ignored.
    pub fn parse(data: &[u8]) -> Result<Patch, DebsrcError> {
        let raw: Vec<&[u8]> = data.split_inclusive(|&b| b == b'\n').collect();
        let mut files = Vec::new();
        let mut i = 0;
        while i < raw.len() {
            let line = raw[i];
            if !line.starts_with(b"--- ") {
                i += 1;
                continue;
            }
            let Some(next) = raw.get(i + 1).filter(|l| l.starts_with(b"+++ ")) else {
                return Err(malformed(i + 1, "`---` header without `+++`"));
            };
            let mut fp = FilePatch {
                old_path: header_path(&line[4..]),
                new_path: header_path(&next[4..]),
                hunks: Vec::new(),
            };
            i += 2;
            while i < raw.len() && raw[i].starts_with(b"@@ ") {
                let header_line = i + 1;
                let (old_start, old_count, new_start, new_count) = parse_hunk_header(raw[i])
                    .ok_or_else(|| malformed(header_line, "bad hunk header"))?;
                i += 1;
                let mut hunk = Hunk { old_start, old_count, new_start, new_count, lines: Vec::new() };
                let (mut old_seen, mut new_seen) = (0, 0);
                while old_seen < old_count || new_seen < new_count {
                    let Some(&l) = raw.get(i) else {
                        return Err(malformed(header_line, "hunk truncated"));
                    };
                    let (tag, body) = match l.split_first() {
                        Some((b'\n', _)) => (b' ', &l[..0]),
                        Some((&t, rest)) => (t, rest),
                        None => return Err(malformed(i + 1, "empty line")),
                    };
                    let text = body.strip_suffix(b"\n").unwrap_or(body).to_vec();
                    let line = Line { text, newline: true };
                    match tag {
                        b' ' => {
                            old_seen += 1;
                            new_seen += 1;
                            hunk.lines.push(HunkLine::Context(line));
                        }
                        b'-' => {
                            old_seen += 1;
                            hunk.lines.push(HunkLine::Remove(line));
                        }
                        b'+' => {
                            new_seen += 1;
                            hunk.lines.push(HunkLine::Add(line));
                        }
                        b'\\' => {}
                        _ => return Err(malformed(i + 1, "unexpected line inside hunk")),
                    }
                    i += 1;
                    Self::absorb_no_newline(&raw, &mut i, &mut hunk);
                }
                if old_seen != old_count || new_seen != new_count {
                    return Err(malformed(header_line, "hunk line counts disagree with header"));
                }
                fp.hunks.push(hunk);
            }
            files.push(fp);
        }
        Ok(Patch { files })
    }

    /// Handle `\ No newline at end of file`, which refers to the line just
    /// read.
    fn absorb_no_newline(raw: &[&[u8]], i: &mut usize, hunk: &mut Hunk) {
        while raw.get(*i).is_some_and(|l| l.starts_with(b"\\")) {
            if let Some(last) = hunk.lines.last_mut() {
                let (HunkLine::Context(l) | HunkLine::Remove(l) | HunkLine::Add(l)) = last;
                l.newline = false;
            }
            *i += 1;
        }
    }

    /// Apply every file section under `root`, stripping `strip` leading path
    /// components. All hunks are checked before anything is written.
    pub fn apply_to_dir(&self, root: &Path, strip: usize) -> Result<(), DebsrcError> {
        // Pending state per target: None = deleted.
        let mut pending: BTreeMap<PathBuf, Option<Vec<Line>>> = BTreeMap::new();
        for fp in &self.files {
            let target = fp.target(strip)?;
            let current = match pending.get(&target) {
                Some(state) => state.clone(),
                None => {
                    let full = root.join(&target);
                    if full.is_file() {
                        Some(split_lines(&fs::read(&full).map_err(|e| DebsrcError::io(&full, e))?))
                    } else {
                        None
                    }
                }
            };
            let original = current.unwrap_or_default();
            let patched = apply_hunks(&original, &fp.hunks)
                .map_err(|m| DebsrcError::Patch(format!("{}: {m}", target.display())))?;
            let state = if fp.is_deletion() {
                if !patched.is_empty() {
                    return Err(DebsrcError::Patch(format!(
                        "{}: deletion leaves content behind",
                        target.display()
                    )));
                }
                None
            } else {
                Some(patched)
            };
            pending.insert(target, state);
        }
        for (target, state) in pending {
            let full = root.join(&target);
            match state {
                Some(lines) => {
                    if let Some(parent) = full.parent() {
                        fs::create_dir_all(parent).map_err(|e| DebsrcError::io(parent, e))?;
                    }
                    fs::write(&full, join_lines(&lines)).map_err(|e| DebsrcError::io(&full, e))?;
                }
                None => {
                    if full.exists() {
                        fs::remove_file(&full).map_err(|e| DebsrcError::io(&full, e))?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Apply `hunks` to `original` at their exact positions.
pub fn apply_hunks(original: &[Line], hunks: &[Hunk]) -> Result<Vec<Line>, String> {
    let mut out = Vec::with_capacity(original.len());
    let mut cursor = 0usize;
    for (n, hunk) in hunks.iter().enumerate() {
        // A pure insertion `-l,0` goes after line l.
        let at = if hunk.old_count == 0 { hunk.old_start } else { hunk.old_start.saturating_sub(1) };
        if at < cursor || at + hunk.old_count > original.len() {
            return Err(format!("hunk {} (at line {}) out of range", n + 1, hunk.old_start));
        }
        out.extend_from_slice(&original[cursor..at]);
        let mut pos = at;
        for hl in &hunk.lines {
            match hl {
                HunkLine::Context(l) | HunkLine::Remove(l) => {
                    if original[pos] != *l {
                        return Err(format!(
                            "hunk {} does not match at line {}",
                            n + 1,
                            pos + 1
                        ));
                    }
                    if let HunkLine::Context(_) = hl {
                        out.push(l.clone());
                    }
                    pos += 1;
                }
                HunkLine::Add(l) => out.push(l.clone()),
            }
        }
        cursor = pos;
    }
    out.extend_from_slice(&original[cursor..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(s: &str) -> Vec<Line> {
        split_lines(s.as_bytes())
    }

    fn apply(orig: &str, diff: &str) -> Result<String, String> {
        let p = Patch::parse(diff.as_bytes()).map_err(|e| e.to_string())?;
        let out = apply_hunks(&lines(orig), &p.files[0].hunks)?;
        Ok(String::from_utf8(join_lines(&out)).unwrap())
    }

    #[test]
    fn modify_middle_line() {
        let diff = "--- a/f\n+++ b/f\n@@ -1,3 +1,4 @@\n one\n two\n+two and a half\n three\n";
        assert_eq!(apply("one\ntwo\nthree\n", diff).unwrap(), "one\ntwo\ntwo and a half\nthree\n");
    }

    #[test]
    fn create_file_from_nothing() {
        let diff = "--- pkg.orig/debian/rules\n+++ pkg/debian/rules\n@@ -0,0 +1,2 @@\n+a\n+b\n";
        assert_eq!(apply("", diff).unwrap(), "a\nb\n");
        let p = Patch::parse(diff.as_bytes()).unwrap();
        assert_eq!(p.files[0].target(1).unwrap(), PathBuf::from("debian/rules"));
    }

    #[test]
    fn context_mismatch_fails() {
        let diff = "--- a/f\n+++ b/f\n@@ -1,2 +1,2 @@\n one\n-TWO\n+2\n";
        assert!(apply("one\ntwo\n", diff).is_err());
    }

    #[test]
    fn offset_is_not_tolerated() {
        let diff = "--- a/f\n+++ b/f\n@@ -1,1 +1,1 @@\n-b\n+B\n";
        assert!(apply("a\nb\n", diff).is_err());
    }

    #[test]
    fn no_newline_markers() {
        let diff = "--- a/f\n+++ b/f\n@@ -1 +1 @@\n-old\n\\ No newline at end of file\n+new\n\\ No newline at end of file\n";
        assert_eq!(apply("old", diff).unwrap(), "new");
        assert!(apply("old\n", diff).is_err());
    }

    #[test]
    fn insertion_after_line() {
        let diff = "--- a/f\n+++ b/f\n@@ -2,0 +3 @@\n+inserted\n";
        assert_eq!(apply("1\n2\n3\n", diff).unwrap(), "1\n2\ninserted\n3\n");
    }

    #[test]
    fn garbage_between_files_is_skipped() {
        let diff = "diff -urN a/x b/x\n--- a/x\n+++ b/x\n@@ -0,0 +1 @@\n+x\nOnly in b: y\n--- a/z\n+++ b/z\n@@ -0,0 +1 @@\n+z\n";
        let p = Patch::parse(diff.as_bytes()).unwrap();
        assert_eq!(p.files.len(), 2);
    }

    #[test]
    fn truncated_hunk_is_malformed() {
        let diff = "--- a/f\n+++ b/f\n@@ -1,3 +1,3 @@\n a\n";
        assert!(Patch::parse(diff.as_bytes()).is_err());
    }

    #[test]
    fn escaping_paths_rejected() {
        let p = Patch::parse(b"--- a/../../etc/x\n+++ b/../../etc/x\n@@ -0,0 +1 @@\n+x\n").unwrap();
        assert!(matches!(p.files[0].target(1), Err(DebsrcError::Security(_))));
    }

    #[test]
    fn apply_to_dir_creates_modifies_deletes() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("main.c"), "int a;\n").unwrap();
        fs::write(dir.path().join("gone.c"), "x\n").unwrap();
        let diff = "\
--- p.orig/main.c
+++ p/main.c
@@ -1 +1,2 @@
 int a;
+int b;
--- p.orig/gone.c
+++ /dev/null
@@ -1 +0,0 @@
-x
--- p.orig/debian/rules
+++ p/debian/rules
@@ -0,0 +1 @@
+all:
";
        Patch::parse(diff.as_bytes()).unwrap().apply_to_dir(dir.path(), 1).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("main.c")).unwrap(), "int a;\nint b;\n");
        assert!(!dir.path().join("gone.c").exists());
        assert_eq!(fs::read_to_string(dir.path().join("debian/rules")).unwrap(), "all:\n");
    }

    #[test]
    fn failed_patch_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.c"), "1\n").unwrap();
        let diff = "--- p/a.c\n+++ p/a.c\n@@ -1 +1 @@\n-1\n+one\n--- p/b.c\n+++ p/b.c\n@@ -1 +1 @@\n-zz\n+x\n";
        assert!(Patch::parse(diff.as_bytes()).unwrap().apply_to_dir(dir.path(), 1).is_err());
        assert_eq!(fs::read_to_string(dir.path().join("a.c")).unwrap(), "1\n");
    }
}
