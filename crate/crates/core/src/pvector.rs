//! Debiasing shift vectors: `p_i = h_i^d - h_i` between the debiased and the
//! original embedding of each video, their mean `p_avg`, and what happens
//! when `p_avg` is added to a corpus.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metrics::{DeltaReport, MetricValues};
use crate::ranking::PooledEmbedding;
use crate::scorer::ScorerParams;
use crate::vector::{cosine, dot, mean, norm, normalized};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PVariant {
    Standard,
    /// Extracted from a frame-shuffled corpus.
    Random,
}

/// Which embedding the shift is measured in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbeddingSpace {
    /// `h = normalize(W_orig v)`, `h^d = normalize(W_deb v)`.
    Projected,
    /// `h = v`, `h^d = normalize(W_deb v)`.
    Raw,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PVectorSet {
    pub ids: Vec<String>,
    pub p: Vec<Vec<f64>>,
    pub p_avg: Vec<f64>,
    pub variant: PVariant,
}

impl PVectorSet {
    /// Build from per-video shifts; `p_avg` is their mean.
    pub fn from_parts(ids: Vec<String>, p: Vec<Vec<f64>>, variant: PVariant) -> Result<Self> {
        if ids.len() != p.len() {
            return Err(Error::LengthMismatch {
                left: ids.len(),
                right: p.len(),
            });
        }
        if p.is_empty() {
            return Err(Error::Empty("p-vector set"));
        }
        let d = p[0].len();
        if let Some((i, bad)) = p.iter().enumerate().find(|(_, v)| v.len() != d) {
            return Err(Error::DimensionMismatch {
                id: ids[i].clone(),
                expected: d,
                found: bad.len(),
            });
        }
        let p_avg = mean(&p);
        Ok(Self { ids, p, p_avg, variant })
    }

    pub fn dim(&self) -> usize {
        self.p_avg.len()
    }
}

pub fn extract_p(
    original: &ScorerParams,
    debiased: &ScorerParams,
    pooled: &[PooledEmbedding],
    space: EmbeddingSpace,
    variant: PVariant,
) -> Result<PVectorSet> {
    if original.dim() != debiased.dim() {
        return Err(Error::DimensionMismatch {
            id: "debiased params".into(),
            expected: original.dim(),
            found: debiased.dim(),
        });
    }
    let mut ids = Vec::with_capacity(pooled.len());
    let mut p = Vec::with_capacity(pooled.len());
    for e in pooled {
        let h = match space {
            EmbeddingSpace::Projected => original.project(&e.video_id, &e.vector)?,
            EmbeddingSpace::Raw => {
                if e.vector.len() != original.dim() {
                    return Err(Error::DimensionMismatch {
                        id: e.video_id.clone(),
                        expected: original.dim(),
                        found: e.vector.len(),
                    });
                }
                e.vector.clone()
            }
        };
        let hd = debiased.project(&e.video_id, &e.vector)?;
        ids.push(e.video_id.clone());
        p.push(hd.iter().zip(&h).map(|(a, b)| a - b).collect());
    }
    PVectorSet::from_parts(ids, p, variant)
}

/// `normalize(h + p_avg)` for every embedding.
pub fn apply_shift(embeddings: &[PooledEmbedding], p_avg: &[f64]) -> Result<Vec<PooledEmbedding>> {
    embeddings
        .iter()
        .map(|e| {
            if e.vector.len() != p_avg.len() {
                return Err(Error::DimensionMismatch {
                    id: e.video_id.clone(),
                    expected: p_avg.len(),
                    found: e.vector.len(),
                });
            }
            let shifted: Vec<f64> = e.vector.iter().zip(p_avg).map(|(a, b)| a + b).collect();
            Ok(PooledEmbedding {
                video_id: e.video_id.clone(),
                source: e.source,
                vector: normalized(&shifted).ok_or_else(|| Error::DegenerateEmbedding(e.video_id.clone()))?,
            })
        })
        .collect()
}

/// Change of the Normalized deltas from `before` to `after`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftDelta {
    pub per_metric: MetricValues,
    pub mixr: f64,
}

pub fn shift_delta_report(before: &DeltaReport, after: &DeltaReport) -> Result<ShiftDelta> {
    Ok(ShiftDelta {
        per_metric: after.normalized.zip_with(&before.normalized, |_, a, b| a - b)?,
        mixr: after.mixr.normalized - before.mixr.normalized,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterStats {
    pub mean_pairwise_cos_p: f64,
    pub mean_pairwise_cos_h: f64,
    /// Mean silhouette (cosine distance) of the split {p vectors} vs {raw}.
    pub silhouette: f64,
}

/// Mean cosine over all unordered pairs.
pub fn mean_pairwise_cosine(vectors: &[Vec<f64>]) -> f64 {
    let n = vectors.len();
    let norms: Vec<f64> = vectors.iter().map(|v| norm(v)).collect();
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let d = norms[i] * norms[j];
            if d > 0.0 {
                sum += (dot(&vectors[i], &vectors[j]) / d).clamp(-1.0, 1.0);
            }
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

fn silhouette(groups: [&[Vec<f64>]; 2]) -> f64 {
    let dist = |a: &[f64], b: &[f64]| 1.0 - cosine(a, b).clamp(-1.0, 1.0);
    let mut total = 0.0;
    let mut count = 0usize;
    for g in 0..2 {
        let own = groups[g];
        let other = groups[1 - g];
        for (i, x) in own.iter().enumerate() {
            let a = own
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, y)| dist(x, y))
                .sum::<f64>()
                / (own.len() - 1) as f64;
            let b = other.iter().map(|y| dist(x, y)).sum::<f64>() / other.len() as f64;
            let m = libm::fmax(a, b);
            total += if m > 0.0 { (b - a) / m } else { 0.0 };
            count += 1;
        }
    }
    total / count as f64
}

pub fn cluster_stats(p_set: &PVectorSet, raw: &[PooledEmbedding]) -> Result<ClusterStats> {
    if p_set.p.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: p_set.p.len(),
        });
    }
    if raw.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: raw.len(),
        });
    }
    let h: Vec<Vec<f64>> = raw.iter().map(|e| e.vector.clone()).collect();
    Ok(ClusterStats {
        mean_pairwise_cos_p: mean_pairwise_cosine(&p_set.p),
        mean_pairwise_cos_h: mean_pairwise_cosine(&h),
        silhouette: silhouette([&p_set.p, &h]),
    })
}

const PCA_TOL: f64 = 1e-10;
const PCA_MAX_ITER: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedPoint<L> {
    pub x: f64,
    pub y: f64,
    pub label: L,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection2d<L> {
    pub points: Vec<ProjectedPoint<L>>,
    /// Unit principal axes (zero when the variance is degenerate).
    pub components: [Vec<f64>; 2],
    pub variances: [f64; 2],
    /// Set for each axis whose variance vanished.
    pub degenerate: [bool; 2],
}

/// Project onto the top two principal components of the mean-centered set,
/// found by power iteration with deflation.
pub fn pca_project_2d<L: Clone>(vectors: &[Vec<f64>], labels: &[L]) -> Result<Projection2d<L>> {
    if vectors.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: vectors.len(),
            right: labels.len(),
        });
    }
    if vectors.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: vectors.len(),
        });
    }
    let d = vectors[0].len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            id: "pca input".into(),
            expected: d,
            found: bad.len(),
        });
    }
    let center = mean(vectors);
    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&center).map(|(a, c)| a - c).collect())
        .collect();
    let n = centered.len() as f64;
    let mut cov = vec![vec![0.0; d]; d];
    for x in &centered {
        for i in 0..d {
            for j in i..d {
                cov[i][j] += x[i] * x[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= n - 1.0;
            cov[j][i] = cov[i][j];
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    let floor = 1e-12 * libm::fmax(trace, 1e-300);

    let mut components = [vec![0.0; d], vec![0.0; d]];
    let mut variances = [0.0; 2];
    let mut degenerate = [true; 2];
    for k in 0..2 {
        if let Some((vec_k, lambda)) = power_iteration(&cov) {
            if lambda > floor && trace > 0.0 {
                // deflate
                for i in 0..d {
                    for j in 0..d {
                        cov[i][j] -= lambda * vec_k[i] * vec_k[j];
                    }
                }
                components[k] = vec_k;
                variances[k] = lambda;
                degenerate[k] = false;
                continue;
            }
        }
        break;
    }
    let points = centered
        .iter()
        .zip(labels)
        .map(|(x, l)| ProjectedPoint {
            x: dot(x, &components[0]),
            y: dot(x, &components[1]),
            label: l.clone(),
        })
        .collect();
    Ok(Projection2d {
        points,
        components,
        variances,
        degenerate,
    })
}

/// Dominant eigenpair of a symmetric PSD matrix. The start vector is its
/// largest column; the sign is fixed so the largest-magnitude entry is
/// positive.
fn power_iteration(a: &[Vec<f64>]) -> Option<(Vec<f64>, f64)> {
    let d = a.len();
    let start = (0..d)
        .map(|j| (0..d).map(|i| a[i][j]).collect::<Vec<f64>>())
        .max_by(|x, y| norm(x).partial_cmp(&norm(y)).unwrap_or(core::cmp::Ordering::Equal))?;
    let mut v = normalized(&start)?;
    let mut lambda = 0.0;
    for _ in 0..PCA_MAX_ITER {
        let w: Vec<f64> = (0..d).map(|i| dot(&a[i], &v)).collect();
        let next = normalized(&w)?;
        lambda = dot(&v, &w);
        let diff = next.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        v = next;
        if diff < PCA_TOL {
            break;
        }
    }
    let w: Vec<f64> = (0..d).map(|i| dot(&a[i], &v)).collect();
    lambda = libm::fmax(lambda, dot(&v, &w));
    let pivot = v
        .iter()
        .copied()
        .max_by(|x, y| x.abs().partial_cmp(&y.abs()).unwrap_or(core::cmp::Ordering::Equal))
        .unwrap_or(0.0);
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Some((v, lambda))
}
