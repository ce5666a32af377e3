//! Source-bias analysis for text-video retrieval.
//!
//! The crate measures how strongly a retrieval model prefers AI-generated
//! videos over semantically equivalent real ones, and carries the tools used
//! to probe and reverse that preference:
//!
//! * [`corpus`]: validated video/query/relevance containers.
//! * [`ranking`]: frame sampling, pooling, shuffling and rank tables over
//!   single-source and mixed candidate pools.
//! * [`metrics`]: R@k, MedR, MeanR and the Relative/Location/Normalized
//!   deltas with their MixR aggregate.
//! * [`scorer`] and [`train`]: a linear retrieval scorer trained with an
//!   in-batch contrastive loss plus a hinged real-vs-AI score penalty.
//! * [`pvector`]: debiasing shift extraction, application and cluster
//!   statistics, including a deterministic PCA projection.
//! * [`stats`]: paired t-tests and optical-flow entropy summaries.
//! * [`synth`]: a seeded generator for corpora with an injected bias
//!   direction.
//!
//! Everything here is `no_std` + `alloc`; file formats and the command-line
//! front end live in the `srcbias` crate.
#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod ablation;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod metrics;
pub mod pvector;
pub mod ranking;
pub mod rng;
pub mod scorer;
pub mod stats;
pub mod synth;
pub mod train;
pub mod vector;

pub use error::{Error, Result};
