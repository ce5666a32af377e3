//! File formats, reports, charts and the command-line interface around
//! `srcbias-core`.
//!
//! Corpora, queries and relevance pairs are JSON lines; rank tables, training
//! histories and projections are CSV; parameter files and delta reports are
//! JSON. Every float is written in its shortest round-trip form, so reading a
//! file back reproduces the values bit for bit.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod svg;

pub use error::{Error, Result};
