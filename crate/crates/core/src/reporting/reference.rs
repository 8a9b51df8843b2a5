use serde::{Deserialize, Serialize};

/// Published size estimate of another system, in lines of code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeReference {
    pub system: String,
    pub lines: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeComparison {
    pub rows: Vec<SizeReference>,
    /// The measured release, placed among the references.
    pub measured: Option<SizeReference>,
}

const REFERENCES: &[(&str, u64)] = &[
    ("Microsoft Windows 3.1", 3_000_000),
    ("Sun Solaris", 7_500_000),
    ("Microsoft Windows 95", 15_000_000),
    ("Red Hat Linux 6.2", 17_000_000),
    ("Microsoft Windows 2000", 29_000_000),
    ("Red Hat Linux 7.1", 30_000_000),
    ("Microsoft XP", 40_000_000),
    ("Red Hat Linux 8.0", 50_000_000),
    ("Debian 2.2", 55_000_000),
    ("Debian 3.0", 105_000_000),
];

/// Approximate sizes of other operating systems (ascending), for context.
pub fn size_references() -> Vec<SizeReference> {
    REFERENCES
        .iter()
        .map(|(system, lines)| SizeReference { system: system.to_string(), lines: *lines })
        .collect()
}

impl SizeComparison {
    pub fn with_measured(release_id: &str, sloc: u64) -> SizeComparison {
        SizeComparison {
            rows: size_references(),
            measured: Some(SizeReference { system: release_id.to_string(), lines: sloc }),
        }
    }
}
