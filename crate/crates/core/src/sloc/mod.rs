//! Language classification and physical SLOC counting.
//!
//! A physical source line ends in a newline or at end of file and holds at
//! least one character that is neither whitespace nor part of a comment.

use std::sync::OnceLock;

mod classify;
mod count;
mod generated;
mod language;
mod tree;

pub use classify::{shebang_interpreter, Classification, HEAD_BYTES};
pub use count::{count_file, count_lines, LineCount, Scanner};
pub use generated::{is_generated, GENERATED_HEAD_LINES, GENERATED_MARKERS};
pub use language::{LanguageSpec, Registry, BINARY, UNCLASSIFIED};
pub use tree::{count_tree, FileCount, SkipReason, TreeCount, TreeOptions};

#[derive(Debug, thiserror::Error)]
pub enum SlocError {
    #[error("language `{id}`: {reason}")]
    InvalidLanguage { id: String, reason: String },
    #[error("language `{0}` registered twice")]
    DuplicateLanguage(String),
    #[error("extension `{extension}` claimed by both `{first}` and `{second}`")]
    ExtensionConflict {
        extension: String,
        first: String,
        second: String,
    },
    #[error("language override file: {0}")]
    OverrideParse(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: not a directory")]
    NotADirectory(String),
}

/// Shared instance of [`Registry::builtin`].
pub fn builtin_registry() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(Registry::builtin)
}

/// [`Registry::classify`] with the builtin registry.
pub fn classify_file(path: impl AsRef<std::path::Path>, head: &[u8]) -> Classification {
    builtin_registry().classify(path, head)
}
