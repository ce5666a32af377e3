//! Embedding corpora: videos with per-frame embeddings, text queries, and the
//! one-relevant-video-per-query ground truth.
//!
//! A real video and its AI-generated counterpart share the same `id` across
//! the two corpora.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Where a video came from.
///
/// The derived order (`Real < Ai`) is the final tie-break in mixed rankings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Real,
    Ai,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Real => "real",
            Source::Ai => "ai",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Source::Real),
            "ai" => Ok(Source::Ai),
            _ => Err(Error::InvalidParameter("source must be `real` or `ai`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoRecord {
    pub id: String,
    pub source: Source,
    pub frames: Vec<Vec<f64>>,
}

impl VideoRecord {
    pub fn new(id: impl Into<String>, source: Source, frames: Vec<Vec<f64>>) -> Self {
        Self {
            id: id.into(),
            source,
            frames,
        }
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    fn check(&self, dim: Option<usize>) -> Result<usize> {
        if self.id.is_empty() {
            return Err(Error::EmptyId);
        }
        let Some(first) = self.frames.first() else {
            return Err(Error::NoFrames {
                id: self.id.clone(),
            });
        };
        let d = dim.unwrap_or(first.len());
        if d == 0 {
            return Err(Error::DimensionMismatch {
                id: self.id.clone(),
                expected: 1,
                found: 0,
            });
        }
        for frame in &self.frames {
            if frame.len() != d {
                return Err(Error::DimensionMismatch {
                    id: self.id.clone(),
                    expected: d,
                    found: frame.len(),
                });
            }
            if frame.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    id: self.id.clone(),
                });
            }
        }
        Ok(d)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryRecord {
    pub id: String,
    pub embedding: Vec<f64>,
}

impl QueryRecord {
    pub fn new(id: impl Into<String>, embedding: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            embedding,
        }
    }
}

/// Check a query list: nonempty, unique nonempty ids, uniform finite
/// embeddings of dimension `dim`.
pub fn validate_queries(queries: &[QueryRecord], dim: usize) -> Result<()> {
    if queries.is_empty() {
        return Err(Error::Empty("query set"));
    }
    let mut seen = BTreeSet::new();
    for q in queries {
        if q.id.is_empty() {
            return Err(Error::EmptyId);
        }
        if !seen.insert(q.id.as_str()) {
            return Err(Error::DuplicateId(q.id.clone()));
        }
        if q.embedding.len() != dim {
            return Err(Error::DimensionMismatch {
                id: q.id.clone(),
                expected: dim,
                found: q.embedding.len(),
            });
        }
        if q.embedding.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { id: q.id.clone() });
        }
    }
    Ok(())
}

/// Query id → id of its single relevant video.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelevanceMap {
    pairs: BTreeMap<String, String>,
}

impl RelevanceMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a pair; a query may only appear once.
    pub fn insert(&mut self, query: impl Into<String>, video: impl Into<String>) -> Result<()> {
        let query = query.into();
        if self.pairs.contains_key(&query) {
            return Err(Error::DuplicateId(query));
        }
        self.pairs.insert(query, video.into());
        Ok(())
    }

    pub fn get(&self, query: &str) -> Option<&str> {
        self.pairs.get(query).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs in query-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(q, v)| (q.as_str(), v.as_str()))
    }

    /// Relevant video for `query`, or a [`Error::MissingRelevance`].
    pub fn relevant(&self, query: &str) -> Result<&str> {
        self.get(query).ok_or_else(|| Error::MissingRelevance {
            query: query.into(),
        })
    }

    /// Every query has an entry and every entry points into `corpus`.
    pub fn check_against(&self, queries: &[QueryRecord], corpus: &Corpus) -> Result<()> {
        for q in queries {
            let v = self.relevant(&q.id)?;
            if corpus.get(v).is_none() {
                return Err(Error::RelevantNotFound {
                    query: q.id.clone(),
                    video: v.into(),
                });
            }
        }
        Ok(())
    }
}

impl FromIterator<(String, String)> for RelevanceMap {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        Self {
            pairs: iter.into_iter().collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FramePolicy {
    Fixed(usize),
    Variable,
}

/// A validated list of videos sharing one embedding dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    videos: Vec<VideoRecord>,
    dim: usize,
    policy: FramePolicy,
    index: BTreeMap<String, usize>,
}

impl Corpus {
    /// Validate `videos`, inferring [`FramePolicy::Fixed`] when every record
    /// has the same frame count.
    pub fn new(videos: Vec<VideoRecord>) -> Result<Self> {
        let counts: BTreeSet<usize> = videos.iter().map(|v| v.frames.len()).collect();
        let policy = match counts.len() {
            1 => FramePolicy::Fixed(*counts.iter().next().unwrap()),
            _ => FramePolicy::Variable,
        };
        Self::with_policy(videos, policy)
    }

    pub fn with_policy(videos: Vec<VideoRecord>, policy: FramePolicy) -> Result<Self> {
        if videos.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        let mut dim = None;
        let mut index = BTreeMap::new();
        for (i, v) in videos.iter().enumerate() {
            dim = Some(v.check(dim)?);
            if let FramePolicy::Fixed(f) = policy {
                if v.frames.len() != f {
                    return Err(Error::FrameCount {
                        id: v.id.clone(),
                        expected: f,
                        found: v.frames.len(),
                    });
                }
            }
            if index.insert(v.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(v.id.clone()));
            }
        }
        Ok(Self {
            videos,
            dim: dim.unwrap(),
            policy,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn policy(&self) -> FramePolicy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn videos(&self) -> &[VideoRecord] {
        &self.videos
    }

    pub fn into_videos(self) -> Vec<VideoRecord> {
        self.videos
    }

    pub fn get(&self, id: &str) -> Option<&VideoRecord> {
        self.index.get(id).map(|&i| &self.videos[i])
    }

    /// Rebuild the corpus with every record passed through `f`.
    pub fn map_videos<F>(&self, f: F) -> Result<Self>
    where
        F: FnMut(&VideoRecord) -> VideoRecord,
    {
        Self::new(self.videos.iter().map(f).collect())
    }
}

/// A real video, its AI-generated counterpart, and the query describing both.
#[derive(Clone, Copy, Debug)]
pub struct Triplet<'a> {
    pub real: &'a VideoRecord,
    pub ai: &'a VideoRecord,
    pub query: &'a QueryRecord,
}

/// One triplet per query, in query order.
pub fn join_triplets<'a>(
    real: &'a Corpus,
    ai: &'a Corpus,
    queries: &'a [QueryRecord],
    rel: &RelevanceMap,
) -> Result<Vec<Triplet<'a>>> {
    let mut out = Vec::with_capacity(queries.len());
    let mut missing = Vec::new();
    for q in queries {
        let vid = rel.relevant(&q.id)?;
        match (real.get(vid), ai.get(vid)) {
            (Some(r), Some(g)) => out.push(Triplet {
                real: r,
                ai: g,
                query: q,
            }),
            _ => missing.push(String::from(vid)),
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(Error::MissingCounterpart(missing));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn video(id: &str, frames: Vec<Vec<f64>>) -> VideoRecord {
        VideoRecord::new(id, Source::Real, frames)
    }

    #[test]
    fn infers_fixed_policy() {
        let c = Corpus::new(vec![
            video("v1", vec![vec![1.0; 4]; 3]),
            video("v2", vec![vec![0.5; 4]; 3]),
        ])
        .unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.dim(), 4);
        assert_eq!(c.policy(), FramePolicy::Fixed(3));
    }

    #[test]
    fn dimension_mismatch_names_the_record() {
        let err = Corpus::new(vec![
            video("v1", vec![vec![1.0; 4]; 3]),
            video("v2", vec![vec![1.0; 4], vec![1.0; 3], vec![1.0; 4]]),
        ])
        .unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                id: "v2".into(),
                expected: 4,
                found: 3
            }
        );
    }

    #[test]
    fn rejects_duplicates_and_empties() {
        let dup = Corpus::new(vec![video("a", vec![vec![1.0]]), video("a", vec![vec![2.0]])]);
        assert_eq!(dup.unwrap_err(), Error::DuplicateId("a".into()));
        assert_eq!(
            Corpus::new(vec![video("", vec![vec![1.0]])]).unwrap_err(),
            Error::EmptyId
        );
        assert!(matches!(
            Corpus::new(vec![video("a", vec![])]).unwrap_err(),
            Error::NoFrames { .. }
        ));
        assert!(matches!(
            Corpus::new(vec![video("a", vec![vec![f64::NAN]])]).unwrap_err(),
            Error::NonFinite { .. }
        ));
    }

    #[test]
    fn fixed_policy_enforced() {
        let err = Corpus::with_policy(
            vec![video("a", vec![vec![1.0]; 2]), video("b", vec![vec![1.0]; 3])],
            FramePolicy::Fixed(2),
        )
        .unwrap_err();
        assert!(matches!(err, Error::FrameCount { found: 3, .. }));
    }

    #[test]
    fn join_single_triplet() {
        let real = Corpus::new(vec![video("v1", vec![vec![1.0, 0.0]])]).unwrap();
        let ai = Corpus::new(vec![VideoRecord::new("v1", Source::Ai, vec![vec![0.0, 1.0]])]).unwrap();
        let queries = vec![QueryRecord::new("q1", vec![1.0, 1.0])];
        let mut rel = RelevanceMap::new();
        rel.insert("q1", "v1").unwrap();
        let t = join_triplets(&real, &ai, &queries, &rel).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].real.source, Source::Real);
        assert_eq!(t[0].ai.source, Source::Ai);
        assert_eq!(t[0].query.id, "q1");
    }

    #[test]
    fn join_reports_missing_counterparts() {
        let real = Corpus::new(vec![video("v1", vec![vec![1.0]]), video("v9", vec![vec![1.0]])]).unwrap();
        let ai = Corpus::new(vec![video("v1", vec![vec![1.0]])]).unwrap();
        let queries = vec![QueryRecord::new("q1", vec![1.0])];
        let mut rel = RelevanceMap::new();
        rel.insert("q1", "v9").unwrap();
        assert_eq!(
            join_triplets(&real, &ai, &queries, &rel).unwrap_err(),
            Error::MissingCounterpart(vec!["v9".into()])
        );
    }

    #[test]
    fn join_matches_id_intersection() {
        // ai covers every third id only
        let ids: Vec<String> = (0..100).map(|i| format!("v{i:03}")).collect();
        let real = Corpus::new(ids.iter().map(|id| video(id, vec![vec![1.0]])).collect()).unwrap();
        let ai_ids: Vec<&String> = ids.iter().step_by(3).collect();
        let ai = Corpus::new(ai_ids.iter().map(|id| video(id, vec![vec![1.0]])).collect()).unwrap();
        let queries: Vec<QueryRecord> = ai_ids
            .iter()
            .map(|id| QueryRecord::new(format!("q{id}"), vec![1.0]))
            .collect();
        let rel: RelevanceMap = ai_ids
            .iter()
            .map(|id| (format!("q{id}"), (*id).clone()))
            .collect();
        let triplets = join_triplets(&real, &ai, &queries, &rel).unwrap();
        let got: BTreeSet<&str> = triplets.iter().map(|t| t.real.id.as_str()).collect();
        let want: BTreeSet<&str> = ids
            .iter()
            .filter(|id| ai.get(id).is_some() && real.get(id).is_some())
            .map(String::as_str)
            .collect();
        assert_eq!(triplets.len(), queries.len());
        assert_eq!(got, want);
    }

    #[test]
    fn query_validation() {
        assert_eq!(validate_queries(&[], 2).unwrap_err(), Error::Empty("query set"));
        let qs = vec![QueryRecord::new("q", vec![1.0])];
        assert!(matches!(
            validate_queries(&qs, 2).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }
}
