//! Coupled evolution of metamodels and their instance models.
//!
//! A metamodel's evolution is recorded as a [`history::History`] of coupled
//! operations: each one adapts the metamodel and knows how to migrate
//! conforming models along with it. Models stamped with the namespace URI of
//! any recorded release can then be carried forward to the newest release
//! with [`migrate::migrate`].
//!
//! Module map:
//! - [`meta`]: the metametamodel, qualified-name resolution, validation
//! - [`model`]: multi-file instance models, loading/saving, conformance
//! - [`catalog`]: the reusable coupled operations
//! - [`history`]: releases, recording, reconstruction, undo, release detection
//! - [`migrate`]: the migration executor and custom migration hooks
//! - [`diff`]: structural differences between metamodels and between models
//! - [`scenario`]: the bundled miniature graphical-definition scenario

pub mod catalog;
pub mod diff;
pub mod history;
pub mod meta;
pub mod migrate;
pub mod model;
pub mod scenario;

use serde::Serialize;

/// Serializes with lexicographically sorted object keys and a trailing
/// newline, so that output files are stable and diffable.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let tree = serde_json::to_value(value).expect("in-memory documents always serialize");
    let mut s = serde_json::to_string_pretty(&tree).expect("json values always serialize");
    s.push('\n');
    s
}
