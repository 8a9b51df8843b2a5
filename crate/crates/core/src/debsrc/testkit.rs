//! Builders for synthetic mirrors: gzip'd tarballs, unified diffs, `.dsc`
//! files and the `Sources` stanzas that describe them.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression;

use super::digest::DigestAlgo;
use super::index::{parse_sources_index, SourcePackageRecord};

pub fn gzip(data: &[u8]) -> Vec<u8> {
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(data).expect("in-memory write");
    enc.finish().expect("in-memory write")
}

/// Gzip'd tar of regular files; parent directories are implied.
pub fn tar_gz(files: &[(&str, &[u8])]) -> Vec<u8> {
    let mut builder = tar::Builder::new(Vec::new());
    for (path, data) in files {
        let mut header = tar::Header::new_gnu();
        header.set_size(data.len() as u64);
        header.set_mode(0o644);
        header.set_mtime(0);
        builder
            .append_data(&mut header, path, *data)
            .expect("valid fixture path");
    }
    gzip(&builder.into_inner().expect("in-memory tar"))
}

/// Gzip'd tar with one entry whose name is written verbatim, bypassing the
/// checks `tar::Builder` applies (for path traversal fixtures).
pub fn tar_gz_raw_name(name: &str, data: &[u8]) -> Vec<u8> {
    let mut header = tar::Header::new_old();
    {
        let old = header.as_old_mut();
        old.name[..name.len()].copy_from_slice(name.as_bytes());
    }
    header.set_size(data.len() as u64);
    header.set_mode(0o644);
    header.set_entry_type(tar::EntryType::Regular);
    header.set_cksum();
    let mut out = Vec::new();
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(data);
    out.resize(512 + data.len().div_ceil(512) * 512, 0);
    out.extend_from_slice(&[0u8; 1024]);
    gzip(&out)
}

fn hunk_body(prefix: char, text: &str, out: &mut String) -> usize {
    let mut n = 0;
    for line in text.split_inclusive('\n') {
        n += 1;
        out.push(prefix);
        out.push_str(line);
        if !line.ends_with('\n') {
            out.push_str("\n\\ No newline at end of file\n");
        }
    }
    n
}

fn count_lines(text: &str) -> usize {
    text.split_inclusive('\n').count()
}

/// Unified diff in the layout of a `.diff.gz`: old paths under
/// `<top>.orig/`, new paths under `<top>/`.
#[derive(Debug, Clone)]
pub struct DiffBuilder {
    top: String,
    out: String,
}

impl DiffBuilder {
    pub fn new(top: &str) -> DiffBuilder {
        DiffBuilder {
            top: top.to_string(),
            out: String::new(),
        }
    }

    fn headers(&mut self, path: &str) {
        let _ = writeln!(self.out, "--- {}.orig/{path}", self.top);
        let _ = writeln!(self.out, "+++ {}/{path}", self.top);
    }

    pub fn add_file(mut self, path: &str, content: &str) -> Self {
        self.headers(path);
        let _ = writeln!(self.out, "@@ -0,0 +1,{} @@", count_lines(content));
        let mut body = String::new();
        hunk_body('+', content, &mut body);
        self.out.push_str(&body);
        self
    }

    /// One hunk replacing the whole of `old` with `new`.
    pub fn replace_file(mut self, path: &str, old: &str, new: &str) -> Self {
        self.headers(path);
        let (o, n) = (count_lines(old), count_lines(new));
        let _ = writeln!(self.out, "@@ -{},{o} +{},{n} @@", o.min(1), n.min(1));
        let mut body = String::new();
        hunk_body('-', old, &mut body);
        hunk_body('+', new, &mut body);
        self.out.push_str(&body);
        self
    }

    /// Insert `lines` after line `after` (1-based; 0 = at the top).
    pub fn insert_after(mut self, path: &str, after: usize, lines: &str) -> Self {
        self.headers(path);
        let n = count_lines(lines);
        let _ = writeln!(self.out, "@@ -{after},0 +{},{n} @@", after + 1);
        let mut body = String::new();
        hunk_body('+', lines, &mut body);
        self.out.push_str(&body);
        self
    }

    pub fn raw(mut self, text: &str) -> Self {
        self.out.push_str(text);
        self
    }

    pub fn build(self) -> String {
        self.out
    }
}

/// Upstream part of a version: no epoch, no distribution revision.
pub fn upstream_version(version: &str) -> &str {
    let no_epoch = version.split_once(':').map_or(version, |(_, v)| v);
    no_epoch.rsplit_once('-').map_or(no_epoch, |(u, _)| u)
}

fn no_epoch(version: &str) -> &str {
    version.split_once(':').map_or(version, |(_, v)| v)
}

/// Writes package files into a local mirror and collects the index.
#[derive(Debug)]
pub struct MirrorBuilder {
    root: PathBuf,
    stanzas: Vec<String>,
}

impl MirrorBuilder {
    pub fn new(root: impl Into<PathBuf>) -> MirrorBuilder {
        MirrorBuilder {
            root: root.into(),
            stanzas: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn directory(name: &str) -> String {
        let first = if name.starts_with("lib") && name.len() > 3 { &name[..4] } else { &name[..1] };
        format!("pool/main/{first}/{name}")
    }

    fn put(&self, directory: &str, filename: &str, data: &[u8]) -> String {
        let dir = self.root.join(directory);
        fs::create_dir_all(&dir).expect("mirror directory");
        fs::write(dir.join(filename), data).expect("mirror file");
        format!(" {} {} {}", DigestAlgo::Md5.digest_bytes(data), data.len(), filename)
    }

    fn finish(&mut self, name: &str, version: &str, directory: &str, rows: &[String]) -> SourcePackageRecord {
        let dsc_name = format!("{name}_{}.dsc", no_epoch(version));
        let mut dsc = format!("Format: 1.0\nSource: {name}\nVersion: {version}\nFiles:\n");
        for r in rows {
            dsc.push_str(r);
            dsc.push('\n');
        }
        let dsc_row = self.put(directory, &dsc_name, dsc.as_bytes());
        let mut stanza = format!("Package: {name}\nBinary: {name}\nVersion: {version}\nDirectory: {directory}\nFiles:\n{dsc_row}\n");
        for r in rows {
            stanza.push_str(r);
            stanza.push('\n');
        }
        let record = parse_sources_index(&stanza).records.pop().expect("builder emits valid stanzas");
        self.stanzas.push(stanza);
        record
    }

    /// Package with an upstream tarball (rooted at `<name>-<upstream>/`) and
    /// a diff given as plain unified-diff text.
    pub fn upstream(&mut self, name: &str, version: &str, files: &[(&str, &str)], diff: &str) -> SourcePackageRecord {
        let up = upstream_version(version);
        let top = format!("{name}-{up}");
        let entries: Vec<(String, &[u8])> = files
            .iter()
            .map(|(p, c)| (format!("{top}/{p}"), c.as_bytes()))
            .collect();
        let refs: Vec<(&str, &[u8])> = entries.iter().map(|(p, c)| (p.as_str(), *c)).collect();
        let directory = Self::directory(name);
        let tar_row = self.put(&directory, &format!("{name}_{up}.orig.tar.gz"), &tar_gz(&refs));
        let diff_row = self.put(
            &directory,
            &format!("{name}_{}.diff.gz", no_epoch(version)),
            &gzip(diff.as_bytes()),
        );
        self.finish(name, version, &directory, &[tar_row, diff_row])
    }

    /// Native package: a single tarball rooted at `<name>-<version>/`.
    pub fn native(&mut self, name: &str, version: &str, files: &[(&str, &str)]) -> SourcePackageRecord {
        let top = format!("{name}-{}", no_epoch(version));
        let entries: Vec<(String, &[u8])> = files
            .iter()
            .map(|(p, c)| (format!("{top}/{p}"), c.as_bytes()))
            .collect();
        let refs: Vec<(&str, &[u8])> = entries.iter().map(|(p, c)| (p.as_str(), *c)).collect();
        let directory = Self::directory(name);
        let tar_row = self.put(&directory, &format!("{name}_{}.tar.gz", no_epoch(version)), &tar_gz(&refs));
        self.finish(name, version, &directory, &[tar_row])
    }

    /// Overwrite a file already in the mirror without touching the index, so
    /// its digest no longer matches.
    pub fn tamper(&self, record: &SourcePackageRecord, filename: &str, data: &[u8]) {
        fs::write(self.root.join(&record.directory).join(filename), data).expect("mirror file");
    }

    pub fn index_text(&self) -> String {
        self.stanzas.join("\n")
    }

    /// Write the index as `<root>/Sources.gz` and return its path.
    pub fn write_index(&self) -> PathBuf {
        let path = self.root.join("Sources.gz");
        fs::create_dir_all(&self.root).expect("mirror root");
        fs::write(&path, gzip(self.index_text().as_bytes())).expect("index");
        path
    }
}

pub const HELLO_C: &str = "#include <stdio.h>\nint main(void)\n{\n  return 0;\n}\n";
pub const HELLO_RULES: &str = "#!/usr/bin/make -f\nbuild:\n\tcc -o hello main.c\nclean:\n";

/// Three-package archive: `hello` (upstream plus diff: one added C line and
/// a three-line `debian/rules`), `tools` (native, with `debian/`) and
/// `broken` (a diff that does not apply).
#[derive(Debug, Clone)]
pub struct MiniArchive {
    pub mirror: PathBuf,
    pub index: PathBuf,
    pub records: Vec<SourcePackageRecord>,
}

pub fn mini_archive(root: &Path) -> MiniArchive {
    let mut m = MirrorBuilder::new(root);
    let hello_diff = DiffBuilder::new("hello-2.1")
        .insert_after("main.c", 3, "  puts(\"hello\");\n")
        .add_file("debian/rules", HELLO_RULES)
        .build();
    let hello = m.upstream("hello", "2.1-3", &[("main.c", HELLO_C)], &hello_diff);
    let tools = m.native(
        "tools",
        "1.4",
        &[
            ("src/tool.c", "/* tool */\nint tool(void)\n{ return 1; }\nint x;\n"),
            ("debian/rules", "#!/usr/bin/make -f\nbinary:\n\tinstall tool\n"),
        ],
    );
    let broken_diff = DiffBuilder::new("broken-0.9")
        .replace_file("lib.c", "int not_what_is_there;\n", "int y;\n")
        .build();
    let broken = m.upstream("broken", "0.9-1", &[("lib.c", "int x;\n")], &broken_diff);
    let index = m.write_index();
    MiniArchive {
        mirror: root.to_path_buf(),
        index,
        records: vec![hello, tools, broken],
    }
}
