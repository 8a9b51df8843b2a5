use std::fmt;
use std::io::Read;

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use super::digest::DigestAlgo;
use super::stanza::{parse_stanzas, Stanza};
use super::DebsrcError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PackageId {
    pub name: String,
    pub version: String,
}

impl PackageId {
    pub fn new(name: impl Into<String>, version: impl Into<String>) -> PackageId {
        PackageId {
            name: name.into(),
            version: version.into(),
        }
    }
}

impl fmt::Display for PackageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.name, self.version)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FileEntry {
    pub digest: String,
    pub size: u64,
    pub filename: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PackageKind {
    /// Developed for the distribution itself: one tarball, no diff.
    Native,
    /// Upstream tarball plus the packager's `.diff.gz`.
    UpstreamPlusDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileRole {
    Dsc,
    Tarball,
    Diff,
}

impl FileRole {
    pub fn of(filename: &str) -> Option<FileRole> {
        if filename.ends_with(".dsc") {
            Some(FileRole::Dsc)
        } else if filename.ends_with(".diff.gz") {
            Some(FileRole::Diff)
        } else if filename.ends_with(".tar.gz") {
            Some(FileRole::Tarball)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcePackageRecord {
    pub name: String,
    pub version: String,
    /// Archive-relative directory holding the files.
    pub directory: String,
    pub files: Vec<FileEntry>,
    pub kind: PackageKind,
    pub digest_algo: DigestAlgo,
}

impl SourcePackageRecord {
    pub fn id(&self) -> PackageId {
        PackageId::new(&self.name, &self.version)
    }

    fn file(&self, role: FileRole) -> Option<&FileEntry> {
        self.files
            .iter()
            .find(|f| FileRole::of(&f.filename) == Some(role))
    }

    pub fn dsc(&self) -> &FileEntry {
        self.file(FileRole::Dsc).expect("validated at parse time")
    }

    pub fn tarball(&self) -> &FileEntry {
        self.file(FileRole::Tarball).expect("validated at parse time")
    }

    pub fn diff(&self) -> Option<&FileEntry> {
        self.file(FileRole::Diff)
    }
}

/// Work out the package kind from its file set.
pub fn derive_kind(files: &[FileEntry]) -> Result<PackageKind, String> {
    let (mut dsc, mut tar, mut diff) = (0, 0, 0);
    for f in files {
        match FileRole::of(&f.filename) {
            Some(FileRole::Dsc) => dsc += 1,
            Some(FileRole::Tarball) => tar += 1,
            Some(FileRole::Diff) => diff += 1,
            None => return Err(format!("unsupported file `{}`", f.filename)),
        }
    }
    match (dsc, tar, diff) {
        (1, 1, 0) => Ok(PackageKind::Native),
        (1, 1, 1) => Ok(PackageKind::UpstreamPlusDiff),
        _ => Err(format!(
            "expected one .dsc, one tarball and at most one .diff.gz, found {dsc}/{tar}/{diff}"
        )),
    }
}

/// Parse the rows of a `Files:`-style field.
pub fn parse_file_rows(value: &str, algo: DigestAlgo) -> Result<Vec<FileEntry>, String> {
    let mut files = Vec::new();
    for row in value.lines().map(str::trim).filter(|r| !r.is_empty()) {
        let parts: Vec<&str> = row.split_whitespace().collect();
        let [digest, size, filename] = parts[..] else {
            return Err(format!("malformed file row `{row}`"));
        };
        if !algo.is_valid_hex(digest) {
            return Err(format!("bad {algo:?} digest in row `{row}`"));
        }
        let size = size
            .parse::<u64>()
            .map_err(|_| format!("bad size in row `{row}`"))?;
        if filename.contains('/') || filename == ".." {
            return Err(format!("file name with path separator in row `{row}`"));
        }
        files.push(FileEntry {
            digest: digest.to_ascii_lowercase(),
            size,
            filename: filename.to_string(),
        });
    }
    if files.is_empty() {
        return Err("empty file list".into());
    }
    Ok(files)
}

/// Files from the strongest digest field present in `st`.
pub(crate) fn stanza_files(st: &Stanza) -> Result<(Vec<FileEntry>, DigestAlgo), String> {
    if let Some(v) = st.get("Checksums-Sha256") {
        return Ok((parse_file_rows(v, DigestAlgo::Sha256)?, DigestAlgo::Sha256));
    }
    match st.get("Files") {
        Some(v) => Ok((parse_file_rows(v, DigestAlgo::Md5)?, DigestAlgo::Md5)),
        None => Err("missing field `Files`".into()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexError {
    pub line: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub package: Option<String>,
    pub message: String,
}

impl fmt::Display for IndexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.package {
            Some(p) => write!(f, "line {} ({}): {}", self.line, p, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexParse {
    pub records: Vec<SourcePackageRecord>,
    pub errors: Vec<IndexError>,
}

fn record_from_stanza(st: &Stanza) -> Result<SourcePackageRecord, String> {
    let name = st.get("Package").ok_or("missing field `Package`")?;
    let version = st.get("Version").ok_or("missing field `Version`")?;
    let (files, digest_algo) = stanza_files(st)?;
    let kind = derive_kind(&files)?;
    Ok(SourcePackageRecord {
        name: name.to_string(),
        version: version.to_string(),
        directory: st.get("Directory").unwrap_or("").trim_matches('/').to_string(),
        files,
        kind,
        digest_algo,
    })
}

/// Parse a `Sources` index. Bad stanzas become [`IndexError`]s and parsing
/// carries on with the next one.
pub fn parse_sources_index(text: &str) -> IndexParse {
    let (stanzas, syntax) = parse_stanzas(text);
    let mut out = IndexParse {
        records: Vec::new(),
        errors: syntax
            .into_iter()
            .map(|e| IndexError {
                line: e.line,
                package: None,
                message: e.message,
            })
            .collect(),
    };
    for st in &stanzas {
        match record_from_stanza(st) {
            Ok(r) => out.records.push(r),
            Err(message) => out.errors.push(IndexError {
                line: st.line,
                package: st.get("Package").map(str::to_string),
                message,
            }),
        }
    }
    out.errors.sort_by_key(|e| e.line);
    out
}

/// Index bytes as text, gunzipping when the gzip magic is present.
pub fn decode_index(bytes: &[u8]) -> Result<String, DebsrcError> {
    let raw = if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut out)
            .map_err(|e| DebsrcError::CorruptArchive(format!("index: {e}")))?;
        out
    } else {
        bytes.to_vec()
    };
    String::from_utf8(raw).map_err(|e| DebsrcError::Parse(format!("index is not UTF-8: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HELLO: &str = "\
Package: hello
Binary: hello
Version: 2.1.1-4
Maintainer: Someone <someone@example.org>
Directory: pool/main/h/hello
Files:
 0123456789abcdef0123456789abcdef 590 hello_2.1.1-4.dsc
 fedcba9876543210fedcba9876543210 287275 hello_2.1.1.orig.tar.gz
 00112233445566778899aabbccddeeff 4532 hello_2.1.1-4.diff.gz
";

    #[test]
    fn upstream_plus_diff_record() {
        let parsed = parse_sources_index(HELLO);
        assert!(parsed.errors.is_empty());
        let r = &parsed.records[0];
        assert_eq!(r.id(), PackageId::new("hello", "2.1.1-4"));
        assert_eq!(r.directory, "pool/main/h/hello");
        assert_eq!(r.kind, PackageKind::UpstreamPlusDiff);
        assert_eq!(r.files.len(), 3);
        assert_eq!(r.tarball().size, 287275);
        assert_eq!(r.diff().unwrap().filename, "hello_2.1.1-4.diff.gz");
        assert_eq!(r.digest_algo, DigestAlgo::Md5);
    }

    #[test]
    fn native_record() {
        let text = "Package: apt\nVersion: 0.5.4\nDirectory: pool/main/a/apt\nFiles:\n 0123456789abcdef0123456789abcdef 600 apt_0.5.4.dsc\n 0123456789abcdef0123456789abcdef 1000 apt_0.5.4.tar.gz\n";
        let parsed = parse_sources_index(text);
        assert_eq!(parsed.records[0].kind, PackageKind::Native);
    }

    #[test]
    fn empty_stream() {
        assert_eq!(parse_sources_index(""), IndexParse::default());
    }

    #[test]
    fn missing_fields_and_bad_rows_are_reported() {
        let text = format!(
            "Package: nover\nFiles:\n 0123456789abcdef0123456789abcdef 1 a.dsc\n\n\
             Package: badrow\nVersion: 1\nFiles:\n 0123 notanumber a.dsc\n\n{HELLO}"
        );
        let parsed = parse_sources_index(&text);
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.errors.len(), 2);
        assert_eq!(parsed.errors[0].package.as_deref(), Some("nover"));
        assert!(parsed.errors[0].message.contains("Version"));
        assert_eq!(parsed.errors[1].package.as_deref(), Some("badrow"));
    }

    #[test]
    fn sha256_field_preferred() {
        let sha = "a".repeat(64);
        let text = format!(
            "Package: p\nVersion: 1\nFiles:\n {md5} 1 p_1.dsc\n {md5} 2 p_1.tar.gz\nChecksums-Sha256:\n {sha} 1 p_1.dsc\n {sha} 2 p_1.tar.gz\n",
            md5 = "b".repeat(32)
        );
        let r = &parse_sources_index(&text).records[0];
        assert_eq!(r.digest_algo, DigestAlgo::Sha256);
        assert_eq!(r.files[0].digest, sha);
    }

    #[test]
    fn gzip_index_detected() {
        use flate2::{write::GzEncoder, Compression};
        use std::io::Write;
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(HELLO.as_bytes()).unwrap();
        let gz = enc.finish().unwrap();
        assert_eq!(decode_index(&gz).unwrap(), HELLO);
        assert_eq!(decode_index(HELLO.as_bytes()).unwrap(), HELLO);
        assert!(decode_index(&gz[..gz.len() / 2]).is_err());
    }
}
