//! Frame sampling and pooling, frame-order ablations, and relevant-item rank
//! tables over single-source and mixed candidate pools.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Corpus, QueryRecord, RelevanceMap, Source, VideoRecord};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Xoshiro256};
use crate::vector::{dot, normalized};

/// Default number of uniformly sampled frames per video.
pub const DEFAULT_FRAMES: usize = 10;

/// Frame indices picked by [`sample_frames`] for `n` frames sampled down (or
/// up) to `f`.
pub fn sample_indices(n: usize, f: usize) -> Vec<usize> {
    assert!(n >= 1 && f >= 1);
    if f == 1 {
        return alloc::vec![n / 2];
    }
    // round(j (n-1) / (f-1)), half away from zero, in integers
    let den = f - 1;
    (0..f).map(|j| (2 * j * (n - 1) + den) / (2 * den)).collect()
}

/// Uniformly resample a video to `f` frames.
pub fn sample_frames(video: &VideoRecord, f: usize) -> VideoRecord {
    let frames = sample_indices(video.frames.len(), f)
        .into_iter()
        .map(|i| video.frames[i].clone())
        .collect();
    VideoRecord {
        id: video.id.clone(),
        source: video.source,
        frames,
    }
}

/// How a frame sequence becomes one video vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pooling {
    /// Mean of all frames. Order-invariant.
    UniformMean,
    /// Weighted mean with weights `2j / (f (f + 1))`, `j = 1..=f`, so later
    /// frames count more and frame order matters.
    PositionalRamp,
    /// A single frame treated as a still image.
    SingleFrame(usize),
}

impl Pooling {
    /// Single-frame pooling on the middle frame of an `f`-frame video.
    pub fn middle_frame(f: usize) -> Self {
        Pooling::SingleFrame(f / 2)
    }

    /// Whether permuting the frames can change the pooled vector.
    pub fn is_order_sensitive(self) -> bool {
        !matches!(self, Pooling::UniformMean)
    }
}

/// An L2-normalized video vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PooledEmbedding {
    pub video_id: String,
    pub source: Source,
    pub vector: Vec<f64>,
}

pub fn pool(video: &VideoRecord, mode: Pooling) -> Result<PooledEmbedding> {
    let f = video.frames.len();
    if f == 0 {
        return Err(Error::NoFrames {
            id: video.id.clone(),
        });
    }
    let d = video.frames[0].len();
    let raw = match mode {
        Pooling::UniformMean => {
            let mut acc = alloc::vec![0.0; d];
            for frame in &video.frames {
                acc.iter_mut().zip(frame).for_each(|(a, x)| *a += x);
            }
            acc.iter_mut().for_each(|a| *a /= f as f64);
            acc
        }
        Pooling::PositionalRamp => {
            let denom = (f * (f + 1)) as f64;
            let mut acc = alloc::vec![0.0; d];
            for (j, frame) in video.frames.iter().enumerate() {
                let w = 2.0 * (j + 1) as f64 / denom;
                acc.iter_mut().zip(frame).for_each(|(a, x)| *a += w * x);
            }
            acc
        }
        Pooling::SingleFrame(k) => video
            .frames
            .get(k)
            .ok_or_else(|| Error::FrameIndex {
                id: video.id.clone(),
                index: k,
                len: f,
            })?
            .clone(),
    };
    let vector = normalized(&raw).ok_or_else(|| Error::DegenerateEmbedding(video.id.clone()))?;
    Ok(PooledEmbedding {
        video_id: video.id.clone(),
        source: video.source,
        vector,
    })
}

/// Resample every video to `frames` (when given) and pool it.
pub fn pool_corpus(corpus: &Corpus, mode: Pooling, frames: Option<usize>) -> Result<Vec<PooledEmbedding>> {
    corpus
        .videos()
        .iter()
        .map(|v| match frames {
            Some(f) => pool(&sample_frames(v, f), mode),
            None => pool(v, mode),
        })
        .collect()
}

/// Resample every video of a corpus to `f` frames.
pub fn resample_corpus(corpus: &Corpus, f: usize) -> Result<Corpus> {
    if f == 0 {
        return Err(Error::InvalidParameter("frame count must be at least 1"));
    }
    corpus.map_videos(|v| sample_frames(v, f))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShuffleMode {
    Identity,
    Reverse,
    /// Fisher-Yates with the toolkit generator seeded by this value.
    Random(u64),
}

pub fn shuffle_frames(video: &VideoRecord, mode: ShuffleMode) -> VideoRecord {
    let mut frames = video.frames.clone();
    match mode {
        ShuffleMode::Identity => {}
        ShuffleMode::Reverse => frames.reverse(),
        ShuffleMode::Random(seed) => Xoshiro256::seed_from_u64(seed).shuffle(&mut frames),
    }
    VideoRecord {
        id: video.id.clone(),
        source: video.source,
        frames,
    }
}

/// Shuffle every video in a corpus. Random mode derives one seed per video
/// from the base seed and the video id.
pub fn shuffle_corpus(corpus: &Corpus, mode: ShuffleMode) -> Result<Corpus> {
    corpus.map_videos(|v| {
        let mode = match mode {
            ShuffleMode::Random(seed) => ShuffleMode::Random(derive_seed(seed, &v.id)),
            m => m,
        };
        shuffle_frames(v, mode)
    })
}

/// 1-based rank of each query's relevant item.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankTable {
    ranks: BTreeMap<String, u32>,
    corpus_size: usize,
}

impl RankTable {
    pub fn new(ranks: BTreeMap<String, u32>, corpus_size: usize) -> Self {
        Self { ranks, corpus_size }
    }

    pub fn from_pairs<I, S>(pairs: I, corpus_size: usize) -> Self
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        Self {
            ranks: pairs.into_iter().map(|(q, r)| (q.into(), r)).collect(),
            corpus_size,
        }
    }

    pub fn get(&self, query: &str) -> Option<u32> {
        self.ranks.get(query).copied()
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    /// `(query_id, rank)` in query-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.ranks.iter().map(|(q, r)| (q.as_str(), *r))
    }

    pub fn ranks(&self) -> impl Iterator<Item = u32> + '_ {
        self.ranks.values().copied()
    }

    pub fn same_queries(&self, other: &RankTable) -> bool {
        self.ranks.len() == other.ranks.len() && self.ranks.keys().eq(other.ranks.keys())
    }
}

struct Candidate<'a> {
    id: &'a str,
    source: Source,
    sim: f64,
}

/// 1 + (strictly more similar) + (equally similar and ordered before the
/// target by `(id, source)`).
fn rank_among(candidates: &[Candidate<'_>], id: &str, source: Source, sim: f64) -> u32 {
    let ahead = candidates
        .iter()
        .filter(|c| c.sim > sim || (c.sim == sim && (c.id, c.source) < (id, source)))
        .count();
    ahead as u32 + 1
}

fn unit_query(q: &QueryRecord) -> Result<Vec<f64>> {
    normalized(&q.embedding).ok_or_else(|| Error::DegenerateEmbedding(q.id.clone()))
}

fn check_dim(pooled: &[PooledEmbedding], q: &QueryRecord) -> Result<()> {
    if let Some(p) = pooled.first() {
        if p.vector.len() != q.embedding.len() {
            return Err(Error::DimensionMismatch {
                id: q.id.clone(),
                expected: p.vector.len(),
                found: q.embedding.len(),
            });
        }
    }
    Ok(())
}

fn find<'a>(pooled: &'a [PooledEmbedding], query: &str, video: &str) -> Result<&'a PooledEmbedding> {
    pooled
        .iter()
        .find(|p| p.video_id == video)
        .ok_or_else(|| Error::RelevantNotFound {
            query: query.into(),
            video: video.into(),
        })
}

/// Rank of each query's relevant video within one corpus, by cosine
/// similarity of unit vectors.
pub fn rank_relevant(
    corpus: &[PooledEmbedding],
    queries: &[QueryRecord],
    rel: &RelevanceMap,
) -> Result<RankTable> {
    let mut ranks = BTreeMap::new();
    for q in queries {
        check_dim(corpus, q)?;
        let t = unit_query(q)?;
        let target = find(corpus, &q.id, rel.relevant(&q.id)?)?;
        let candidates: Vec<Candidate<'_>> = corpus
            .iter()
            .map(|p| Candidate {
                id: &p.video_id,
                source: p.source,
                sim: dot(&p.vector, &t),
            })
            .collect();
        let sim = dot(&target.vector, &t);
        ranks.insert(
            q.id.clone(),
            rank_among(&candidates, &target.video_id, target.source, sim),
        );
    }
    Ok(RankTable::new(ranks, corpus.len()))
}

/// Ranks of the real and the AI relevant item within the union of both
/// corpora. Returns `(mixed_real, mixed_ai)`.
pub fn rank_mixed(
    real: &[PooledEmbedding],
    ai: &[PooledEmbedding],
    queries: &[QueryRecord],
    rel: &RelevanceMap,
) -> Result<(RankTable, RankTable)> {
    let mut mixed_real = BTreeMap::new();
    let mut mixed_ai = BTreeMap::new();
    for q in queries {
        check_dim(real, q)?;
        check_dim(ai, q)?;
        let t = unit_query(q)?;
        let vid = rel.relevant(&q.id)?;
        let r = find(real, &q.id, vid)?;
        let g = find(ai, &q.id, vid)?;
        // source tags come from the corpus side, whatever the records say
        let candidates: Vec<Candidate<'_>> = real
            .iter()
            .map(|p| (p, Source::Real))
            .chain(ai.iter().map(|p| (p, Source::Ai)))
            .map(|(p, source)| Candidate {
                id: &p.video_id,
                source,
                sim: dot(&p.vector, &t),
            })
            .collect();
        let rank_r = rank_among(&candidates, &r.video_id, Source::Real, dot(&r.vector, &t));
        let rank_g = rank_among(&candidates, &g.video_id, Source::Ai, dot(&g.vector, &t));
        mixed_real.insert(q.id.clone(), rank_r);
        mixed_ai.insert(q.id.clone(), rank_g);
    }
    let n = real.len() + ai.len();
    Ok((RankTable::new(mixed_real, n), RankTable::new(mixed_ai, n)))
}
