//! The guide under `book/src`, one module per chapter, so that
//! `cargo test` runs every code listing.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/physical-sloc.md")]
pub mod physical_sloc {}
#[doc = include_str!("../../../book/src/languages.md")]
pub mod languages {}
#[doc = include_str!("../../../book/src/source-packages.md")]
pub mod source_packages {}
#[doc = include_str!("../../../book/src/curation.md")]
pub mod curation {}
#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
#[doc = include_str!("../../../book/src/cocomo.md")]
pub mod cocomo {}
#[doc = include_str!("../../../book/src/reports.md")]
pub mod reports {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
