//! Debias training of the linear scorer, and training-set mixing.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{join_triplets, Corpus, QueryRecord, RelevanceMap, VideoRecord};
use crate::error::{Error, Result};
use crate::eval::{evaluate_pooled, EvalOptions};
use crate::metrics::Metric;
use crate::ranking::{pool_corpus, PooledEmbedding, Pooling, DEFAULT_FRAMES};
use crate::rng::{derive_seed, Xoshiro256};
use crate::scorer::{objective_with_grad, zeros_like, ObjectiveValue, Pair, ScorerParams, TripletVectors};
use crate::vector::Matrix;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Share of training videos swapped for their AI counterparts.
    pub mix_ratio: f64,
    /// Weight of the hinge term; 1.0 is the plain sum of the two terms.
    pub debias_weight: f64,
    pub tau: f64,
    /// Fraction of queries held out for the per-epoch bias evaluation. With
    /// 0 the training queries are evaluated instead.
    pub holdout: f64,
    pub pooling: Pooling,
    pub frames: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 50,
            batch_size: 32,
            seed: 42,
            mix_ratio: 0.0,
            debias_weight: 1.0,
            tau: 0.05,
            holdout: 0.25,
            pooling: Pooling::UniformMean,
            frames: Some(DEFAULT_FRAMES),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning rate must be nonnegative"));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidParameter("batch size must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.mix_ratio) {
            return Err(Error::InvalidParameter("mix ratio must lie in [0, 1]"));
        }
        if !(self.debias_weight >= 0.0 && self.debias_weight.is_finite()) {
            return Err(Error::InvalidParameter("debias weight must be nonnegative"));
        }
        if !(0.0..1.0).contains(&self.holdout) {
            return Err(Error::InvalidParameter("holdout must lie in [0, 1)"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter("tau must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub base_loss: f64,
    pub debias_loss: f64,
    pub normalized_delta_r1: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    /// Held-out Normalized delta R@1 of the untrained scorer.
    pub initial_normalized_delta_r1: f64,
    pub epochs: Vec<EpochRecord>,
}

/// Replace `floor(rho * N)` seeded-random records of `real` with their `ai`
/// counterparts. Order and size follow `real`.
pub fn mix_training_set(real: &Corpus, ai: &Corpus, rho: f64, seed: u64) -> Result<Corpus> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter("mix ratio must lie in [0, 1]"));
    }
    let missing: Vec<String> = real
        .videos()
        .iter()
        .filter(|v| ai.get(&v.id).is_none())
        .map(|v| v.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingCounterpart(missing));
    }
    let n = real.len();
    let k = mixed_count(rho, n);
    let chosen: BTreeSet<usize> = Xoshiro256::seed_from_u64(seed)
        .sample_indices(n, k)
        .into_iter()
        .collect();
    let videos: Vec<VideoRecord> = real
        .videos()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if chosen.contains(&i) {
                ai.get(&v.id).expect("checked above").clone()
            } else {
                v.clone()
            }
        })
        .collect();
    Corpus::new(videos)
}

/// `floor(rho * n)`, tolerant of products like `0.29 * 100 = 28.999…`.
pub fn mixed_count(rho: f64, n: usize) -> usize {
    let x = rho * n as f64;
    let k = libm::floor(x + 1e-9) as usize;
    k.min(n)
}

struct Item {
    query: Vec<f64>,
    train_video: Vec<f64>,
    real: Vec<f64>,
    ai: Vec<f64>,
}

/// Pooled training and evaluation material for one configuration.
pub struct TrainingData {
    items: Vec<Item>,
    eval_real: Vec<PooledEmbedding>,
    eval_ai: Vec<PooledEmbedding>,
    eval_queries: Vec<QueryRecord>,
    eval_rel: RelevanceMap,
    dim: usize,
}

impl TrainingData {
    pub fn prepare(
        cfg: &TrainConfig,
        real: &Corpus,
        ai: &Corpus,
        queries: &[QueryRecord],
        rel: &RelevanceMap,
    ) -> Result<Self> {
        cfg.validate()?;
        let triplets = join_triplets(real, ai, queries, rel)?;
        let n_eval = if cfg.holdout > 0.0 {
            let k = libm::ceil(cfg.holdout * triplets.len() as f64) as usize;
            let max_eval = triplets.len().saturating_sub(2);
            if max_eval == 0 {
                return Err(Error::TooFewSamples {
                    needed: 3,
                    got: triplets.len(),
                });
            }
            k.clamp(1, max_eval)
        } else {
            0
        };
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        Xoshiro256::seed_from_u64(derive_seed(cfg.seed, "split")).shuffle(&mut order);
        let (eval_idx, train_idx) = order.split_at(n_eval);
        if train_idx.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: train_idx.len(),
            });
        }
        let mut train_idx = train_idx.to_vec();
        train_idx.sort_unstable();
        let mut eval_idx = eval_idx.to_vec();
        eval_idx.sort_unstable();
        let eval_idx = if eval_idx.is_empty() { train_idx.clone() } else { eval_idx };

        let subset = |idx: &[usize], pick: &dyn Fn(usize) -> VideoRecord| -> Result<Corpus> {
            let mut seen = BTreeSet::new();
            let videos = idx
                .iter()
                .filter(|&&i| seen.insert(triplets[i].real.id.as_str()))
                .map(|&i| pick(i))
                .collect();
            Corpus::new(videos)
        };
        let train_real = subset(&train_idx, &|i| triplets[i].real.clone())?;
        let train_ai = subset(&train_idx, &|i| triplets[i].ai.clone())?;
        let mixed = mix_training_set(&train_real, &train_ai, cfg.mix_ratio, derive_seed(cfg.seed, "mix"))?;

        let pooled_mixed = pool_corpus(&mixed, cfg.pooling, cfg.frames)?;
        let pooled_real = pool_corpus(&train_real, cfg.pooling, cfg.frames)?;
        let pooled_ai = pool_corpus(&train_ai, cfg.pooling, cfg.frames)?;
        let lookup = |set: &[PooledEmbedding], id: &str| -> Vec<f64> {
            set.iter()
                .find(|p| p.video_id == id)
                .map(|p| p.vector.clone())
                .expect("pooled from the same ids")
        };
        let items = train_idx
            .iter()
            .map(|&i| {
                let id = triplets[i].real.id.as_str();
                Item {
                    query: triplets[i].query.embedding.clone(),
                    train_video: lookup(&pooled_mixed, id),
                    real: lookup(&pooled_real, id),
                    ai: lookup(&pooled_ai, id),
                }
            })
            .collect();

        let eval_real = pool_corpus(&subset(&eval_idx, &|i| triplets[i].real.clone())?, cfg.pooling, cfg.frames)?;
        let eval_ai = pool_corpus(&subset(&eval_idx, &|i| triplets[i].ai.clone())?, cfg.pooling, cfg.frames)?;
        let eval_queries: Vec<QueryRecord> = eval_idx.iter().map(|&i| triplets[i].query.clone()).collect();
        let eval_rel: RelevanceMap = eval_idx
            .iter()
            .map(|&i| (triplets[i].query.id.clone(), triplets[i].real.id.clone()))
            .collect();
        Ok(Self {
            items,
            eval_real,
            eval_ai,
            eval_queries,
            eval_rel,
            dim: real.dim(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn train_len(&self) -> usize {
        self.items.len()
    }

    pub fn eval_len(&self) -> usize {
        self.eval_queries.len()
    }

    fn batch_views<'a>(&'a self, idx: &[usize]) -> (Vec<Pair<'a>>, Vec<TripletVectors<'a>>) {
        let pairs = idx
            .iter()
            .map(|&i| Pair {
                video: &self.items[i].train_video,
                query: &self.items[i].query,
            })
            .collect();
        let triplets = idx
            .iter()
            .map(|&i| TripletVectors {
                real: &self.items[i].real,
                ai: &self.items[i].ai,
                query: &self.items[i].query,
            })
            .collect();
        (pairs, triplets)
    }

    /// Objective averaged over the training items cut into consecutive
    /// batches of `batch_size`, in item order.
    pub fn objective(&self, params: &ScorerParams, batch_size: usize, lambda: f64) -> Result<ObjectiveValue> {
        let order: Vec<usize> = (0..self.items.len()).collect();
        let batches = batches(&order, batch_size);
        let mut acc = ObjectiveValue { base: 0.0, debias: 0.0, total: 0.0 };
        for b in &batches {
            let (pairs, trips) = self.batch_views(b);
            let (v, _) = objective_with_grad(params, &pairs, &trips, lambda)?;
            acc.base += v.base;
            acc.debias += v.debias;
            acc.total += v.total;
        }
        let n = batches.len() as f64;
        Ok(ObjectiveValue {
            base: acc.base / n,
            debias: acc.debias / n,
            total: acc.total / n,
        })
    }

    /// Held-out Normalized delta R@1 under `params`.
    pub fn normalized_delta_r1(&self, params: &ScorerParams, seed: u64) -> Result<f64> {
        let real = params.project_all(&self.eval_real)?;
        let ai = params.project_all(&self.eval_ai)?;
        let opts = EvalOptions {
            seed,
            ..EvalOptions::default()
        };
        let report = evaluate_pooled(&real, &ai, &self.eval_queries, &self.eval_rel, &opts)?;
        report
            .deltas
            .normalized
            .get(Metric::RecallAt(1))
            .ok_or(Error::MissingMetric("R@1"))
    }
}

/// Cut `order` into batches of `size`; a trailing singleton joins the
/// previous batch.
fn batches(order: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = order.chunks(size).map(<[usize]>::to_vec).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() < 2) {
        let last = out.pop().unwrap();
        out.last_mut().unwrap().extend(last);
    }
    out
}

struct Adam {
    m: Matrix,
    v: Matrix,
    t: i32,
}

impl Adam {
    fn new(params: &ScorerParams) -> Self {
        Self {
            m: zeros_like(params),
            v: zeros_like(params),
            t: 0,
        }
    }

    fn step(&mut self, w: &mut Matrix, grad: &Matrix, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(ADAM_BETA1, self.t as f64);
        let c2 = 1.0 - libm::pow(ADAM_BETA2, self.t as f64);
        let g = grad.as_slice();
        let m = self.m.as_mut_slice();
        let v = self.v.as_mut_slice();
        for (i, x) in w.as_mut_slice().iter_mut().enumerate() {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            *x -= lr * m_hat / (libm::sqrt(v_hat) + ADAM_EPS);
        }
    }
}

/// Train from the identity projection with Adam on the debias objective.
pub fn train(
    cfg: &TrainConfig,
    real: &Corpus,
    ai: &Corpus,
    queries: &[QueryRecord],
    rel: &RelevanceMap,
) -> Result<(ScorerParams, TrainHistory)> {
    let data = TrainingData::prepare(cfg, real, ai, queries, rel)?;
    train_prepared(cfg, &data)
}

pub fn train_prepared(cfg: &TrainConfig, data: &TrainingData) -> Result<(ScorerParams, TrainHistory)> {
    cfg.validate()?;
    let mut params = ScorerParams::identity(data.dim(), cfg.tau)?;
    let eval_seed = derive_seed(cfg.seed, "eval");
    let mut history = TrainHistory {
        initial_normalized_delta_r1: data.normalized_delta_r1(&params, eval_seed)?,
        epochs: Vec::with_capacity(cfg.epochs),
    };
    let mut rng = Xoshiro256::seed_from_u64(derive_seed(cfg.seed, "batches"));
    let mut adam = Adam::new(&params);
    let mut order: Vec<usize> = (0..data.train_len()).collect();
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let batches = batches(&order, cfg.batch_size);
        let (mut base, mut debias) = (0.0, 0.0);
        for (bi, b) in batches.iter().enumerate() {
            let (pairs, trips) = data.batch_views(b);
            let (value, grad) = objective_with_grad(&params, &pairs, &trips, cfg.debias_weight)?;
            if !value.total.is_finite() || !grad.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: bi });
            }
            base += value.base;
            debias += value.debias;
            adam.step(&mut params.w, &grad, cfg.learning_rate);
        }
        let n = batches.len() as f64;
        history.epochs.push(EpochRecord {
            epoch: epoch + 1,
            base_loss: base / n,
            debias_loss: debias / n,
            normalized_delta_r1: data.normalized_delta_r1(&params, eval_seed)?,
        });
    }
    Ok((params, history))
}
