use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::language::{Registry, BINARY, UNCLASSIFIED};

/// Largest prefix of a file the classifier looks at.
pub const HEAD_BYTES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Language(String),
    Unclassified,
    Binary,
}

impl Classification {
    pub fn as_str(&self) -> &str {
        match self {
            Classification::Language(id) => id,
            Classification::Unclassified => UNCLASSIFIED,
            Classification::Binary => BINARY,
        }
    }

    pub fn language(&self) -> Option<&str> {
        match self {
            Classification::Language(id) => Some(id),
            _ => None,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Interpreter name from a `#!` line: basename of the program, or of its
/// first argument when the program is `env`.
pub fn shebang_interpreter(head: &[u8]) -> Option<String> {
    let rest = head.strip_prefix(b"#!")?;
    let line_end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
    let line = String::from_utf8_lossy(&rest[..line_end]);
    let mut tokens = line.split_whitespace();
    let basename = |t: &str| t.rsplit('/').next().unwrap_or(t).to_string();
    let program = basename(tokens.next()?);
    if program != "env" {
        return Some(program);
    }
    tokens
        .find(|t| !t.starts_with('-') && !t.contains('='))
        .map(basename)
}

fn has_prolog_directive(head: &[u8]) -> bool {
    head.split(|&b| b == b'\n')
        .any(|line| line.starts_with(b":-"))
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    hay.windows(needle.len()).any(|w| w == needle)
}

impl Registry {
    /// Decide what a file is from its name and first bytes.
    ///
    /// A NUL byte in `head` means binary. Shebang evidence wins over the file
    /// name. `.inc` is PHP only when the head contains `<?`, and `.pl` is
    /// Perl unless a Prolog `:-` directive starts a line.
    pub fn classify(&self, path: impl AsRef<Path>, head: &[u8]) -> Classification {
        let head = &head[..head.len().min(HEAD_BYTES)];
        if head.contains(&0) {
            return Classification::Binary;
        }
        if let Some(interp) = shebang_interpreter(head) {
            if let Some(idx) = self.by_interpreter(&interp) {
                return Classification::Language(self.spec_at(idx).id.clone());
            }
        }
        let name = match path.as_ref().file_name() {
            Some(n) => n.to_string_lossy(),
            None => return Classification::Unclassified,
        };
        let Some((idx, matched)) = self.by_file_name(&name) else {
            return Classification::Unclassified;
        };
        let id = &self.spec_at(idx).id;
        let rejected = match (matched, id.as_str()) {
            (".inc", "php") => !contains(head, b"<?"),
            (".pl", "perl") => has_prolog_directive(head),
            _ => false,
        };
        if rejected {
            log::debug!(
                "{}: {} rejected as {} by content rule",
                path.as_ref().display(),
                matched,
                id
            );
            return Classification::Unclassified;
        }
        Classification::Language(id.clone())
    }
}
