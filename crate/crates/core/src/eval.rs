//! End-to-end bias evaluation of a real and an AI corpus against one query
//! set.

use alloc::vec::Vec;

use crate::corpus::{Corpus, QueryRecord, RelevanceMap};
use crate::error::Result;
use crate::metrics::{location_delta, relative_delta, DeltaReport, MetricBundle, DEFAULT_KS};
use crate::ranking::{pool_corpus, rank_mixed, rank_relevant, PooledEmbedding, Pooling, RankTable};

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub ks: Vec<u32>,
    /// Seed of the Location delta interleaving.
    pub seed: u64,
    /// Number of interleavings averaged for Location delta.
    pub runs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            ks: DEFAULT_KS.to_vec(),
            seed: 42,
            runs: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankTables {
    pub real: RankTable,
    pub ai: RankTable,
    pub mixed_real: RankTable,
    pub mixed_ai: RankTable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bundles {
    pub real: MetricBundle,
    pub ai: MetricBundle,
    pub mixed_real: MetricBundle,
    pub mixed_ai: MetricBundle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub ranks: RankTables,
    pub bundles: Bundles,
    pub deltas: DeltaReport,
}

/// Rank both corpora separately and mixed, then derive every bundle and
/// delta.
pub fn evaluate_pooled(
    real: &[PooledEmbedding],
    ai: &[PooledEmbedding],
    queries: &[QueryRecord],
    rel: &RelevanceMap,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let real_ranks = rank_relevant(real, queries, rel)?;
    let ai_ranks = rank_relevant(ai, queries, rel)?;
    let (mixed_real, mixed_ai) = rank_mixed(real, ai, queries, rel)?;
    let ks = &opts.ks;
    let bundles = Bundles {
        real: MetricBundle::compute(&real_ranks, ks)?,
        ai: MetricBundle::compute(&ai_ranks, ks)?,
        mixed_real: MetricBundle::compute(&mixed_real, ks)?,
        mixed_ai: MetricBundle::compute(&mixed_ai, ks)?,
    };
    let relative = relative_delta(&bundles.mixed_real, &bundles.mixed_ai)?;
    let location = location_delta(&real_ranks, &ai_ranks, ks, opts.seed, opts.runs)?;
    Ok(EvalReport {
        ranks: RankTables {
            real: real_ranks,
            ai: ai_ranks,
            mixed_real,
            mixed_ai,
        },
        bundles,
        deltas: DeltaReport::new(relative, location)?,
    })
}

/// Pool both corpora and evaluate them.
pub fn evaluate(
    real: &Corpus,
    ai: &Corpus,
    queries: &[QueryRecord],
    rel: &RelevanceMap,
    pooling: Pooling,
    frames: Option<usize>,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let real = pool_corpus(real, pooling, frames)?;
    let ai = pool_corpus(ai, pooling, frames)?;
    evaluate_pooled(&real, &ai, queries, rel, opts)
}
