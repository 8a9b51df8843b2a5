use super::digest::DigestAlgo;
use super::index::{stanza_files, FileEntry, SourcePackageRecord};
use super::stanza::parse_stanzas;
use super::DebsrcError;

/// The parts of a `.dsc` that can be cross-checked against the index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Descriptor {
    pub name: String,
    pub version: String,
    pub files: Vec<FileEntry>,
    pub digest_algo: DigestAlgo,
}

/// Drop OpenPGP clear-signature armor, keeping the signed body.
fn strip_armor(content: &str) -> String {
    if !content.trim_start().starts_with("-----BEGIN PGP SIGNED MESSAGE-----") {
        return content.to_string();
    }
    let mut body = String::new();
    let mut lines = content.lines().skip_while(|l| !l.starts_with("-----BEGIN PGP SIGNED MESSAGE-----"));
    lines.next();
    // Armor headers (Hash: ...) run until the first blank line.
    for l in lines.by_ref() {
        if l.trim().is_empty() {
            break;
        }
    }
    for l in lines {
        if l.starts_with("-----BEGIN PGP SIGNATURE-----") {
            break;
        }
        body.push_str(l.strip_prefix("- ").unwrap_or(l));
        body.push('\n');
    }
    body
}

pub fn parse_dsc(content: &str) -> Result<Descriptor, DebsrcError> {
    let text = strip_armor(content);
    let (stanzas, errors) = parse_stanzas(&text);
    if let Some(e) = errors.first() {
        return Err(DebsrcError::Parse(format!("dsc line {}: {}", e.line, e.message)));
    }
    let st = match stanzas.as_slice() {
        [st] => st,
        [] => return Err(DebsrcError::Parse("dsc: no fields".into())),
        _ => return Err(DebsrcError::Parse("dsc: more than one paragraph".into())),
    };
    let field = |name: &str| {
        st.get(name)
            .map(str::to_string)
            .ok_or_else(|| DebsrcError::Parse(format!("dsc: missing field `{name}`")))
    };
    let (files, digest_algo) = stanza_files(st).map_err(|m| DebsrcError::Parse(format!("dsc: {m}")))?;
    Ok(Descriptor {
        name: field("Source")?,
        version: field("Version")?,
        files,
        digest_algo,
    })
}

impl Descriptor {
    /// The descriptor must name the same package and version as the index,
    /// and every non-`.dsc` file it lists must match the index entry.
    pub fn verify_against(&self, record: &SourcePackageRecord) -> Result<(), DebsrcError> {
        let mismatch = |what: String| DebsrcError::DescriptorMismatch {
            package: record.id().to_string(),
            detail: what,
        };
        if self.name != record.name {
            return Err(mismatch(format!("Source `{}` != `{}`", self.name, record.name)));
        }
        if self.version != record.version {
            return Err(mismatch(format!("Version `{}` != `{}`", self.version, record.version)));
        }
        let others: Vec<&FileEntry> = record
            .files
            .iter()
            .filter(|f| !f.filename.ends_with(".dsc"))
            .collect();
        for f in &others {
            let found = self.files.iter().find(|d| d.filename == f.filename);
            match found {
                None => return Err(mismatch(format!("`{}` not listed in dsc", f.filename))),
                Some(d) if d.size != f.size => {
                    return Err(mismatch(format!("size of `{}` differs", f.filename)))
                }
                Some(d) if self.digest_algo == record.digest_algo && d.digest != f.digest => {
                    return Err(mismatch(format!("digest of `{}` differs", f.filename)))
                }
                _ => {}
            }
        }
        if self.files.len() != others.len() {
            return Err(mismatch("file lists differ".into()));
        }
        Ok(())
    }
}
