//! Source packages: index and descriptor parsing, verified fetching,
//! unpacking, patching and stripping into the measured stages.

use std::path::Path;

mod digest;
mod dsc;
mod fetch;
mod index;
mod patch;
mod stage;
mod stanza;
#[cfg(feature = "testkit")]
pub mod testkit;
mod unpack;

pub use digest::DigestAlgo;
pub use dsc::{parse_dsc, Descriptor};
pub use fetch::{fetch_package, read_index_source, FetchOptions, LocalFiles, MirrorLocator};
pub use index::{
    decode_index, derive_kind, parse_sources_index, FileEntry, FileRole, IndexError, IndexParse,
    PackageId, PackageKind, SourcePackageRecord,
};
pub use patch::{FilePatch, Hunk, HunkLine, Line, Patch};
pub use stage::{
    apply_debian_diff, copy_tree, strip_debian_dir, unpack_native, unpack_upstream, Phase, SourceStage,
};
pub use stanza::{parse_stanzas, Stanza};
pub use unpack::unpack_tarball;

#[derive(Debug, thiserror::Error)]
pub enum DebsrcError {
    #[error("{0}")]
    Parse(String),
    #[error("transfer failed: {0}")]
    Transfer(String),
    #[error("integrity check failed for {file}: {detail}")]
    Integrity { file: String, detail: String },
    #[error("descriptor of {package} disagrees with the index: {detail}")]
    DescriptorMismatch { package: String, detail: String },
    #[error("corrupt archive: {0}")]
    CorruptArchive(String),
    #[error("unsafe archive: {0}")]
    Security(String),
    #[error("scratch quota of {limit} bytes exceeded ({needed} needed)")]
    Quota { limit: u64, needed: u64 },
    #[error("patch failed: {0}")]
    Patch(String),
    #[error("expected a phase {expected} stage, got {found}")]
    WrongPhase { expected: Phase, found: Phase },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DebsrcError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> DebsrcError {
        DebsrcError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
