//! Measure the physical size of a source-package distribution.
//!
//! The crate follows one workflow: choose the packages of a release
//! ([`curation`]), fetch and unpack each one into its upstream, patched and
//! sans-`debian/` states ([`debsrc`]), count physical SLOC in every state
//! ([`sloc`]), cache and aggregate the results ([`pipeline`]), and turn them
//! into language tables, size distributions ([`reporting`]) and basic COCOMO
//! estimates ([`estimator`]).

pub mod curation;
pub mod debsrc;
pub mod estimator;
pub mod pipeline;
pub mod reporting;
pub mod sloc;

pub use sloc::{count_file, count_tree, Classification, LanguageSpec, Registry, TreeCount};
