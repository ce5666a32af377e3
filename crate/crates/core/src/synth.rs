//! Seeded synthetic corpora with an injected bias direction.
//!
//! Each item has a latent unit vector `z`. Its query is
//! `normalize(z + gamma b)`, its real frames are
//! `normalize(alpha z + (1 - alpha) (eps + drift))` and its AI frames add
//! `beta_j b` on top, where `b` is a shared unit direction. `beta_j` ramps
//! linearly over the frames (`temporal_bias` controls the slope, the mean
//! stays `beta`), and the drift term `(j / f) delta u` uses a per-video unit
//! `u`, with AI videos drifting at `delta / 4`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Corpus, QueryRecord, RelevanceMap, Source, VideoRecord};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Xoshiro256};
use crate::stats::FlowGrid;
use crate::vector::normalized;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_items: usize,
    pub dim: usize,
    pub frames: usize,
    /// Share of the latent signal in each frame, in (0, 1).
    pub alpha: f64,
    /// Mean magnitude of the bias direction in AI frames.
    pub beta: f64,
    /// Leak of the bias direction into queries.
    pub gamma: f64,
    /// Norm scale of per-frame noise.
    pub noise_sigma: f64,
    pub drift: f64,
    /// Slope of the AI bias ramp across frames; 0 keeps it constant.
    pub temporal_bias: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_items: 200,
            dim: 32,
            frames: 10,
            alpha: 0.5,
            beta: 0.5,
            gamma: 0.5,
            noise_sigma: 8.0,
            drift: 0.1,
            temporal_bias: 1.0,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_items == 0 || self.dim < 2 || self.frames == 0 {
            return Err(Error::InvalidParameter("n_items, frames must be positive and dim at least 2"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter("alpha must lie in (0, 1)"));
        }
        if !(self.beta >= 0.0 && self.gamma >= 0.0 && self.drift >= 0.0 && self.temporal_bias >= 0.0) {
            return Err(Error::InvalidParameter("beta, gamma, drift and temporal_bias must be nonnegative"));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter("noise_sigma must be positive"));
        }
        if !(self.beta.is_finite() && self.gamma.is_finite() && self.drift.is_finite() && self.temporal_bias.is_finite())
        {
            return Err(Error::InvalidParameter("synthetic parameters must be finite"));
        }
        if self.temporal_bias * (self.frames as f64 - 1.0) > self.frames as f64 + 1.0 {
            return Err(Error::InvalidParameter("temporal_bias makes early-frame bias negative"));
        }
        Ok(())
    }

    /// Bias magnitude on frame `j` (0-based).
    pub fn frame_beta(&self, j: usize) -> f64 {
        let pos = 2.0 * (j + 1) as f64 / (self.frames + 1) as f64 - 1.0;
        self.beta * (1.0 + self.temporal_bias * pos)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthData {
    pub real: Corpus,
    pub ai: Corpus,
    pub queries: Vec<QueryRecord>,
    pub relevance: RelevanceMap,
    pub bias_direction: Vec<f64>,
}

pub fn video_id(i: usize) -> String {
    format!("v{i:05}")
}

pub fn query_id(i: usize) -> String {
    format!("q{i:05}")
}

fn unit(rng: &mut Xoshiro256, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        if let Some(u) = normalized(&v) {
            return u;
        }
    }
}

fn gaussian(rng: &mut Xoshiro256, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.normal()).collect()
}

fn unit_or_first_axis(v: &[f64]) -> Vec<f64> {
    normalized(v).unwrap_or_else(|| {
        let mut e = alloc::vec![0.0; v.len()];
        e[0] = 1.0;
        e
    })
}

struct FrameParams {
    drift: f64,
    bias_scale: f64,
}

fn frames_for(
    cfg: &SynthConfig,
    rng: &mut Xoshiro256,
    z: &[f64],
    b: &[f64],
    p: FrameParams,
) -> Vec<Vec<f64>> {
    let d = cfg.dim;
    let scale = cfg.noise_sigma / libm::sqrt(d as f64);
    let u = unit(rng, d);
    (0..cfg.frames)
        .map(|j| {
            let eps = gaussian(rng, d, scale);
            let drift = (j + 1) as f64 / cfg.frames as f64 * p.drift;
            let bj = p.bias_scale * cfg.frame_beta(j);
            let raw: Vec<f64> = (0..d)
                .map(|k| cfg.alpha * z[k] + (1.0 - cfg.alpha) * (eps[k] + drift * u[k]) + bj * b[k])
                .collect();
            unit_or_first_axis(&raw)
        })
        .collect()
}

/// Generate a paired real/AI corpus with one query per item.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let d = cfg.dim;
    let mut latent = Xoshiro256::seed_from_u64(derive_seed(cfg.seed, "latent"));
    let mut real_rng = Xoshiro256::seed_from_u64(derive_seed(cfg.seed, "real"));
    let mut ai_rng = Xoshiro256::seed_from_u64(derive_seed(cfg.seed, "ai"));

    let b = unit(&mut latent, d);
    let mut real = Vec::with_capacity(cfg.n_items);
    let mut ai = Vec::with_capacity(cfg.n_items);
    let mut queries = Vec::with_capacity(cfg.n_items);
    let mut relevance = RelevanceMap::new();
    for i in 0..cfg.n_items {
        let z = unit(&mut latent, d);
        let q: Vec<f64> = z.iter().zip(&b).map(|(zi, bi)| zi + cfg.gamma * bi).collect();
        queries.push(QueryRecord::new(query_id(i), unit_or_first_axis(&q)));
        relevance.insert(query_id(i), video_id(i))?;
        let rf = frames_for(cfg, &mut real_rng, &z, &b, FrameParams { drift: cfg.drift, bias_scale: 0.0 });
        real.push(VideoRecord::new(video_id(i), Source::Real, rf));
        let af = frames_for(
            cfg,
            &mut ai_rng,
            &z,
            &b,
            FrameParams { drift: cfg.drift / 4.0, bias_scale: 1.0 },
        );
        ai.push(VideoRecord::new(video_id(i), Source::Ai, af));
    }
    Ok(SynthData {
        real: Corpus::new(real)?,
        ai: Corpus::new(ai)?,
        queries,
        relevance,
        bias_direction: b,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSynthConfig {
    pub pairs: usize,
    pub rows: usize,
    pub cols: usize,
    /// Magnitude spread of AI flows; real flows use four times this.
    pub ai_spread: f64,
    pub seed: u64,
}

impl Default for FlowSynthConfig {
    fn default() -> Self {
        Self {
            pairs: 100,
            rows: 16,
            cols: 16,
            ai_spread: 0.1,
            seed: 42,
        }
    }
}

/// Paired `(real, ai)` flow grids with magnitudes `1 + spread |g|`.
pub fn generate_flows(cfg: &FlowSynthConfig) -> Result<(Vec<FlowGrid>, Vec<FlowGrid>)> {
    if cfg.pairs == 0 || cfg.rows == 0 || cfg.cols == 0 {
        return Err(Error::InvalidParameter("flow pairs and grid shape must be positive"));
    }
    if !(cfg.ai_spread > 0.0 && cfg.ai_spread.is_finite()) {
        return Err(Error::InvalidParameter("ai_spread must be positive"));
    }
    let mut rng = Xoshiro256::seed_from_u64(derive_seed(cfg.seed, "flow"));
    let n = cfg.rows * cfg.cols;
    let mut grid = |spread: f64| {
        let mags = (0..n).map(|_| 1.0 + spread * libm::fabs(rng.normal())).collect();
        FlowGrid::new(cfg.rows, cfg.cols, mags)
    };
    let mut real = Vec::with_capacity(cfg.pairs);
    let mut ai = Vec::with_capacity(cfg.pairs);
    for _ in 0..cfg.pairs {
        real.push(grid(4.0 * cfg.ai_spread)?);
        ai.push(grid(cfg.ai_spread)?);
    }
    Ok((real, ai))
}
