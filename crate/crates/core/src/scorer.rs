//! A linear retrieval scorer and the debiasing objective it is trained on.
//!
//! The scorer projects a pooled video vector `v` with a square matrix `W`
//! and scores it against a query `t` as `cos(W v, t) / tau`. The objective
//! is a symmetric in-batch InfoNCE loss plus `lambda` times the mean over
//! triplets of `max(0, score(ai) - score(real))`. Gradients with respect to
//! `W` are analytic.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ranking::PooledEmbedding;
use crate::vector::{dot, norm, normalized, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct ScorerParams {
    pub w: Matrix,
    pub tau: f64,
}

impl ScorerParams {
    pub fn identity(dim: usize, tau: f64) -> Result<Self> {
        Self::new(Matrix::identity(dim), tau)
    }

    pub fn new(w: Matrix, tau: f64) -> Result<Self> {
        let p = Self { w, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter("tau must be positive and finite"));
        }
        if self.w.rows() != self.w.cols() {
            return Err(Error::InvalidParameter("projection must be square"));
        }
        if !self.w.is_finite() {
            return Err(Error::InvalidParameter("projection has non-finite entries"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.w.cols()
    }

    /// Normalized projection `W v / |W v|`.
    pub fn project(&self, id: &str, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                id: id.into(),
                expected: self.dim(),
                found: v.len(),
            });
        }
        normalized(&self.w.matvec(v)).ok_or_else(|| Error::DegenerateProjection(id.into()))
    }

    /// Project a pooled corpus; ids and sources carry over.
    pub fn project_all(&self, pooled: &[PooledEmbedding]) -> Result<Vec<PooledEmbedding>> {
        pooled
            .iter()
            .map(|p| {
                Ok(PooledEmbedding {
                    video_id: p.video_id.clone(),
                    source: p.source,
                    vector: self.project(&p.video_id, &p.vector)?,
                })
            })
            .collect()
    }
}

/// `cos(W v, t) / tau`.
pub fn score(params: &ScorerParams, video: &PooledEmbedding, query: &[f64]) -> Result<f64> {
    let t = unit(query)?;
    Ok(Projected::new(params, &video.video_id, &video.vector)?.score(&t, params.tau))
}

fn unit(t: &[f64]) -> Result<Vec<f64>> {
    normalized(t).ok_or(Error::InvalidParameter("zero query embedding"))
}

/// A projected video with what the gradient needs.
struct Projected<'a> {
    input: &'a [f64],
    unit: Vec<f64>,
    norm: f64,
}

impl<'a> Projected<'a> {
    fn new(params: &ScorerParams, id: &str, v: &'a [f64]) -> Result<Self> {
        if v.len() != params.dim() {
            return Err(Error::DimensionMismatch {
                id: id.into(),
                expected: params.dim(),
                found: v.len(),
            });
        }
        let y = params.w.matvec(v);
        let n = norm(&y);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateProjection(id.into()));
        }
        Ok(Self {
            input: v,
            unit: y.iter().map(|x| x / n).collect(),
            norm: n,
        })
    }

    fn score(&self, t: &[f64], tau: f64) -> f64 {
        dot(&self.unit, t) / tau
    }

    /// `grad += coef * d score / d W`, where
    /// `d score / d y = (t - cos * y_hat) / (|y| tau)` and `y = W v`.
    fn accumulate(&self, grad: &mut Matrix, t: &[f64], tau: f64, coef: f64) {
        let c = dot(&self.unit, t);
        let scale = coef / (self.norm * tau);
        let dy: Vec<f64> = t
            .iter()
            .zip(&self.unit)
            .map(|(ti, yi)| scale * (ti - c * yi))
            .collect();
        grad.add_outer(1.0, &dy, self.input);
    }
}

/// A positive (video, query) pair for the retrieval loss.
#[derive(Clone, Copy, Debug)]
pub struct Pair<'a> {
    pub video: &'a [f64],
    pub query: &'a [f64],
}

/// Real video, AI counterpart, and their shared query.
#[derive(Clone, Copy, Debug)]
pub struct TripletVectors<'a> {
    pub real: &'a [f64],
    pub ai: &'a [f64],
    pub query: &'a [f64],
}

/// Loss values of one objective evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveValue {
    pub base: f64,
    /// Unweighted mean hinge `mean(max(0, delta_r))`.
    pub debias: f64,
    /// `base + lambda * debias`
    pub total: f64,
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + libm::log(xs.map(|x| libm::exp(x - m)).sum::<f64>())
}

struct BatchState<'a> {
    videos: Vec<Projected<'a>>,
    queries: Vec<Vec<f64>>,
    // scores[i][j] = score(video j, query i)
    scores: Vec<Vec<f64>>,
}

fn batch_state<'a>(params: &ScorerParams, batch: &[Pair<'a>]) -> Result<BatchState<'a>> {
    if batch.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: batch.len(),
        });
    }
    let videos = batch
        .iter()
        .map(|p| Projected::new(params, "batch video", p.video))
        .collect::<Result<Vec<_>>>()?;
    let queries = batch
        .iter()
        .map(|p| {
            if p.query.len() != params.dim() {
                return Err(Error::DimensionMismatch {
                    id: "batch query".into(),
                    expected: params.dim(),
                    found: p.query.len(),
                });
            }
            unit(p.query)
        })
        .collect::<Result<Vec<_>>>()?;
    let scores = queries
        .iter()
        .map(|t| videos.iter().map(|v| v.score(t, params.tau)).collect())
        .collect();
    Ok(BatchState {
        videos,
        queries,
        scores,
    })
}

/// Symmetric in-batch InfoNCE:
/// `0.5 (mean_i -log softmax_j S[i][j] at j=i + mean_j -log softmax_i S[i][j] at i=j)`.
pub fn base_loss(params: &ScorerParams, batch: &[Pair<'_>]) -> Result<f64> {
    let st = batch_state(params, batch)?;
    Ok(base_from_scores(&st.scores))
}

fn base_from_scores(s: &[Vec<f64>]) -> f64 {
    let b = s.len();
    let mut t2v = 0.0;
    let mut v2t = 0.0;
    for i in 0..b {
        t2v += log_sum_exp(s[i].iter().copied()) - s[i][i];
        v2t += log_sum_exp((0..b).map(|r| s[r][i])) - s[i][i];
    }
    0.5 * (t2v + v2t) / b as f64
}

fn base_with_grad(params: &ScorerParams, st: &BatchState<'_>, coef: f64, grad: &mut Matrix) -> f64 {
    let s = &st.scores;
    let b = s.len();
    let bf = b as f64;
    let row_lse: Vec<f64> = (0..b).map(|i| log_sum_exp(s[i].iter().copied())).collect();
    let col_lse: Vec<f64> = (0..b).map(|j| log_sum_exp((0..b).map(|r| s[r][j]))).collect();
    let mut loss = 0.0;
    for i in 0..b {
        loss += row_lse[i] + col_lse[i] - 2.0 * s[i][i];
    }
    for j in 0..b {
        for i in 0..b {
            let delta = if i == j { 1.0 } else { 0.0 };
            let p_row = libm::exp(s[i][j] - row_lse[i]);
            let p_col = libm::exp(s[i][j] - col_lse[j]);
            let g = 0.5 / bf * ((p_row - delta) + (p_col - delta));
            if g != 0.0 {
                st.videos[j].accumulate(grad, &st.queries[i], params.tau, coef * g);
            }
        }
    }
    0.5 * loss / bf
}

/// `score(ai, query) - score(real, query)`.
pub fn delta_r(params: &ScorerParams, triplet: &TripletVectors<'_>) -> Result<f64> {
    let t = unit(triplet.query)?;
    let r = Projected::new(params, "real", triplet.real)?;
    let g = Projected::new(params, "ai", triplet.ai)?;
    Ok(g.score(&t, params.tau) - r.score(&t, params.tau))
}

/// Value and gradient of `base + lambda * mean(max(0, delta_r))`.
pub fn objective_with_grad(
    params: &ScorerParams,
    batch: &[Pair<'_>],
    triplets: &[TripletVectors<'_>],
    lambda: f64,
) -> Result<(ObjectiveValue, Matrix)> {
    let d = params.dim();
    let mut grad = Matrix::zeros(d, d);
    let st = batch_state(params, batch)?;
    let base = base_with_grad(params, &st, 1.0, &mut grad);
    let mut hinge = 0.0;
    if !triplets.is_empty() {
        let k = triplets.len() as f64;
        for tr in triplets {
            let t = unit(tr.query)?;
            let r = Projected::new(params, "real", tr.real)?;
            let g = Projected::new(params, "ai", tr.ai)?;
            let dr = g.score(&t, params.tau) - r.score(&t, params.tau);
            if dr > 0.0 {
                hinge += dr;
                if lambda != 0.0 {
                    g.accumulate(&mut grad, &t, params.tau, lambda / k);
                    r.accumulate(&mut grad, &t, params.tau, -lambda / k);
                }
            }
        }
        hinge /= k;
    }
    Ok((
        ObjectiveValue {
            base,
            debias: hinge,
            total: base + lambda * hinge,
        },
        grad,
    ))
}

/// `base + lambda * mean(max(0, delta_r))` without the gradient.
pub fn debias_objective(
    params: &ScorerParams,
    batch: &[Pair<'_>],
    triplets: &[TripletVectors<'_>],
    lambda: f64,
) -> Result<ObjectiveValue> {
    let base = base_loss(params, batch)?;
    let mut hinge = 0.0;
    for tr in triplets {
        hinge += libm::fmax(0.0, delta_r(params, tr)?);
    }
    if !triplets.is_empty() {
        hinge /= triplets.len() as f64;
    }
    Ok(ObjectiveValue {
        base,
        debias: hinge,
        total: base + lambda * hinge,
    })
}

/// Zero matrix of the scorer's shape; handy for optimizer state.
pub fn zeros_like(params: &ScorerParams) -> Matrix {
    Matrix::zeros(params.w.rows(), params.w.cols())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::corpus::Source;
    use crate::rng::Xoshiro256;

    fn pooled(v: Vec<f64>) -> PooledEmbedding {
        PooledEmbedding {
            video_id: "v".into(),
            source: Source::Real,
            vector: normalized(&v).unwrap(),
        }
    }

    fn rand_vec(rng: &mut Xoshiro256, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.normal()).collect()
    }

    fn rand_params(rng: &mut Xoshiro256, d: usize, tau: f64) -> ScorerParams {
        let mut w = Matrix::identity(d);
        for x in w.as_mut_slice() {
            *x += 0.3 * rng.normal();
        }
        ScorerParams::new(w, tau).unwrap()
    }

    #[test]
    fn identity_scores() {
        let p = ScorerParams::identity(3, 1.0).unwrap();
        let v = pooled(vec![1.0, 2.0, 2.0]);
        assert!((score(&p, &v, &[1.0, 2.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        let p = ScorerParams::identity(2, 0.5).unwrap();
        assert_eq!(score(&p, &pooled(vec![1.0, 0.0]), &[0.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_projection() {
        let p = ScorerParams::new(Matrix::zeros(2, 2), 1.0).unwrap();
        assert!(matches!(
            score(&p, &pooled(vec![1.0, 0.0]), &[1.0, 0.0]).unwrap_err(),
            Error::DegenerateProjection(_)
        ));
        assert!(ScorerParams::identity(2, 0.0).is_err());
    }

    #[test]
    fn score_matches_straight_line_oracle() {
        let mut rng = Xoshiro256::seed_from_u64(8);
        let d = 8;
        let p = rand_params(&mut rng, d, 0.07);
        for _ in 0..20 {
            let v = pooled(rand_vec(&mut rng, d));
            let t = rand_vec(&mut rng, d);
            // oracle: explicit loops, no shared helpers
            let mut y = [0.0f64; 8];
            for r in 0..d {
                for c in 0..d {
                    y[r] += p.w.get(r, c) * v.vector[c];
                }
            }
            let (mut yy, mut tt, mut yt) = (0.0, 0.0, 0.0);
            for i in 0..d {
                yy += y[i] * y[i];
                tt += t[i] * t[i];
                yt += y[i] * t[i];
            }
            let want = yt / (libm::sqrt(yy) * libm::sqrt(tt)) / 0.07;
            assert!((score(&p, &v, &t).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_and_uniform_losses() {
        // positives cos 1, negatives cos -1, tau 0.05
        let p = ScorerParams::identity(2, 0.05).unwrap();
        let a = [1.0, 0.0];
        let b = [-1.0, 0.0];
        let batch = [Pair { video: &a, query: &a }, Pair { video: &b, query: &b }];
        assert!(base_loss(&p, &batch).unwrap() < 1e-10);

        let v = [0.6, 0.8];
        let q1 = [1.0, 0.0];
        let q2 = [0.0, 1.0];
        let q3 = [1.0, 1.0];
        let batch = [
            Pair { video: &v, query: &q1 },
            Pair { video: &v, query: &q2 },
            Pair { video: &v, query: &q3 },
        ];
        assert!(base_loss(&p, &batch).unwrap().is_finite());
        // identical pairs -> every score equal -> ln B
        let uniform = [Pair { video: &v, query: &q1 }, Pair { video: &v, query: &q1 }, Pair { video: &v, query: &q1 }];
        assert!((base_loss(&p, &uniform).unwrap() - libm::log(3.0)).abs() < 1e-12);
        assert!(base_loss(&p, &batch[..1]).is_err());
    }

    #[test]
    fn base_loss_matches_brute_force() {
        let mut rng = Xoshiro256::seed_from_u64(19);
        let d = 8;
        let p = rand_params(&mut rng, d, 0.1);
        let videos: Vec<Vec<f64>> = (0..4).map(|_| rand_vec(&mut rng, d)).collect();
        let queries: Vec<Vec<f64>> = (0..4).map(|_| rand_vec(&mut rng, d)).collect();
        let batch: Vec<Pair<'_>> = videos
            .iter()
            .zip(&queries)
            .map(|(v, q)| Pair { video: v, query: q })
            .collect();
        // brute force: plain exp/log without max-shift
        let mut s = [[0.0f64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let y = p.w.matvec(&videos[j]);
                s[i][j] = crate::vector::cosine(&y, &queries[i]) / 0.1;
            }
        }
        let mut total = 0.0;
        for i in 0..4 {
            let row: f64 = (0..4).map(|j| libm::exp(s[i][j])).sum();
            let col: f64 = (0..4).map(|r| libm::exp(s[r][i])).sum();
            total += -libm::log(libm::exp(s[i][i]) / row) - libm::log(libm::exp(s[i][i]) / col);
        }
        let want = total / 8.0;
        assert!((base_loss(&p, &batch).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn delta_r_and_hinge() {
        let p = ScorerParams::identity(2, 1.0).unwrap();
        let v = [0.6, 0.8];
        let q = [1.0, 0.0];
        assert_eq!(delta_r(&p, &TripletVectors { real: &v, ai: &v, query: &q }).unwrap(), 0.0);

        // score(ai) = 0.8, score(real) = 0.5
        let ai = [0.8, 0.6];
        let real = [0.5, libm::sqrt(0.75)];
        let dr = delta_r(&p, &TripletVectors { real: &real, ai: &ai, query: &q }).unwrap();
        assert!((dr - 0.3).abs() < 1e-12);
    }

    #[test]
    fn hinge_inactive_when_real_dominates() {
        let mut rng = Xoshiro256::seed_from_u64(4);
        let d = 6;
        let p = rand_params(&mut rng, d, 0.2);
        let vids: Vec<Vec<f64>> = (0..4).map(|_| rand_vec(&mut rng, d)).collect();
        let qs: Vec<Vec<f64>> = (0..4).map(|_| rand_vec(&mut rng, d)).collect();
        let batch: Vec<Pair<'_>> = vids.iter().zip(&qs).map(|(v, q)| Pair { video: v, query: q }).collect();
        // real projects onto the query, ai onto its negation
        let reals: Vec<Vec<f64>> = qs.iter().map(|q| p_inverse_apply(&p, q)).collect();
        let ais: Vec<Vec<f64>> = reals.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
        let trips: Vec<TripletVectors<'_>> = (0..4)
            .map(|i| TripletVectors { real: &reals[i], ai: &ais[i], query: &qs[i] })
            .collect();
        let (val, grad) = objective_with_grad(&p, &batch, &trips, 1.0).unwrap();
        let (val0, grad0) = objective_with_grad(&p, &batch, &[], 0.0).unwrap();
        assert_eq!(val.debias, 0.0);
        assert_eq!(val.total, val.base);
        assert_eq!(val.base, val0.base);
        assert_eq!(grad, grad0);
    }

    // Solve W x = q by Gaussian elimination so that the real video projects
    // exactly onto the query direction.
    fn p_inverse_apply(p: &ScorerParams, q: &[f64]) -> Vec<f64> {
        let d = p.dim();
        let mut a: Vec<Vec<f64>> = (0..d)
            .map(|r| {
                let mut row = p.w.row(r).to_vec();
                row.push(q[r]);
                row
            })
            .collect();
        for c in 0..d {
            let piv = (c..d)
                .max_by(|&x, &y| a[x][c].abs().partial_cmp(&a[y][c].abs()).unwrap())
                .unwrap();
            a.swap(c, piv);
            for r in 0..d {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for k in c..=d {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        (0..d).map(|r| a[r][d] / a[r][r]).collect()
    }

    #[test]
    fn objective_value_matches_plain_evaluation() {
        let mut rng = Xoshiro256::seed_from_u64(31);
        let d = 5;
        let p = rand_params(&mut rng, d, 0.3);
        let vids: Vec<Vec<f64>> = (0..3).map(|_| rand_vec(&mut rng, d)).collect();
        let qs: Vec<Vec<f64>> = (0..3).map(|_| rand_vec(&mut rng, d)).collect();
        let ais: Vec<Vec<f64>> = (0..3).map(|_| rand_vec(&mut rng, d)).collect();
        let batch: Vec<Pair<'_>> = vids.iter().zip(&qs).map(|(v, q)| Pair { video: v, query: q }).collect();
        let trips: Vec<TripletVectors<'_>> = (0..3)
            .map(|i| TripletVectors { real: &vids[i], ai: &ais[i], query: &qs[i] })
            .collect();
        let (v1, _) = objective_with_grad(&p, &batch, &trips, 0.7).unwrap();
        let v2 = debias_objective(&p, &batch, &trips, 0.7).unwrap();
        assert!((v1.total - v2.total).abs() < 1e-12);
        assert!((v1.debias - v2.debias).abs() < 1e-12);
    }

    #[test]
    fn single_triplet_fixture() {
        // delta_r = 0.3 with lambda = 1 adds exactly 0.3 to the base loss
        let p = ScorerParams::identity(2, 1.0).unwrap();
        let q = [1.0, 0.0];
        let ai = [0.8, 0.6];
        let real = [0.5, libm::sqrt(0.75)];
        let other = [0.0, 1.0];
        let batch = [Pair { video: &real, query: &q }, Pair { video: &other, query: &other }];
        let trip = [TripletVectors { real: &real, ai: &ai, query: &q }];
        let base = base_loss(&p, &batch).unwrap();
        let j = debias_objective(&p, &batch, &trip, 1.0).unwrap();
        assert!((j.total - (base + 0.3)).abs() < 1e-12);
        assert_eq!(debias_objective(&p, &batch, &trip, 0.0).unwrap().total, base);
    }

}
