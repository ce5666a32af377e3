//! Retrieval metrics over rank tables and the source-bias deltas built on
//! them.
//!
//! Sign convention: every delta is positive when the real item does better
//! than its AI counterpart and negative when the AI item is favored. For
//! recall metrics "better" means larger, for MedR and MeanR smaller.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::ranking::RankTable;
use crate::rng::{SplitMix64, Xoshiro256};

/// Recall cutoffs reported by default.
pub const DEFAULT_KS: [u32; 3] = [1, 5, 10];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    RecallAt(u32),
    MedR,
    MeanR,
}

impl Metric {
    /// +1 for recall metrics, -1 for rank metrics (lower is better).
    pub fn sign(self) -> f64 {
        match self {
            Metric::RecallAt(_) => 1.0,
            Metric::MedR | Metric::MeanR => -1.0,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::RecallAt(k) => write!(f, "R@{k}"),
            Metric::MedR => f.write_str("MedR"),
            Metric::MeanR => f.write_str("MeanR"),
        }
    }
}

impl core::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "MedR" => Ok(Metric::MedR),
            "MeanR" => Ok(Metric::MeanR),
            _ => s
                .strip_prefix("R@")
                .and_then(|k| k.parse().ok())
                .map(Metric::RecallAt)
                .ok_or(Error::InvalidParameter("unknown metric name")),
        }
    }
}

/// One value per metric, in report order (recalls by k, then MedR, MeanR).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricValues(Vec<(Metric, f64)>);

impl MetricValues {
    pub fn new(mut values: Vec<(Metric, f64)>) -> Self {
        values.sort_by_key(|(m, _)| *m);
        Self(values)
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.0.iter().find(|(m, _)| *m == metric).map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Metric, f64)> + '_ {
        self.0.iter().copied()
    }

    pub fn metrics(&self) -> impl Iterator<Item = Metric> + '_ {
        self.0.iter().map(|(m, _)| *m)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Combine two value sets metric by metric; both must list the same
    /// metrics.
    pub fn zip_with(&self, other: &Self, f: impl Fn(Metric, f64, f64) -> f64) -> Result<Self> {
        if self.0.len() != other.0.len() {
            return Err(Error::LengthMismatch {
                left: self.0.len(),
                right: other.0.len(),
            });
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&(m, a), &(n, b))| {
                if m == n {
                    Ok((m, f(m, a, b)))
                } else {
                    Err(Error::MissingMetric("metric lists differ"))
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

/// R@k (percent), MedR and MeanR of one rank table.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricBundle {
    pub r_at: Vec<(u32, f64)>,
    pub med_r: f64,
    pub mean_r: f64,
}

impl MetricBundle {
    pub fn compute(table: &RankTable, ks: &[u32]) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::Empty("rank table"));
        }
        let mut ranks: Vec<u32> = table.ranks().collect();
        ranks.sort_unstable();
        let n = ranks.len();
        let mut ks = ks.to_vec();
        ks.sort_unstable();
        ks.dedup();
        let r_at = ks
            .iter()
            .map(|&k| {
                let hits = ranks.partition_point(|&r| r <= k);
                (k, 100.0 * hits as f64 / n as f64)
            })
            .collect();
        let med_r = if n % 2 == 1 {
            ranks[n / 2] as f64
        } else {
            (ranks[n / 2 - 1] as f64 + ranks[n / 2] as f64) / 2.0
        };
        let mean_r = ranks.iter().map(|&r| r as f64).sum::<f64>() / n as f64;
        Ok(Self { r_at, med_r, mean_r })
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::RecallAt(k) => self.r_at.iter().find(|(kk, _)| *kk == k).map(|(_, v)| *v),
            Metric::MedR => Some(self.med_r),
            Metric::MeanR => Some(self.mean_r),
        }
    }

    pub fn values(&self) -> MetricValues {
        let mut v: Vec<(Metric, f64)> = self
            .r_at
            .iter()
            .map(|&(k, x)| (Metric::RecallAt(k), x))
            .collect();
        v.push((Metric::MedR, self.med_r));
        v.push((Metric::MeanR, self.mean_r));
        MetricValues::new(v)
    }
}

/// Signed, normalized gap between a real-side and an AI-side metric value,
/// in `[-200, 200]`. Zero when both values are zero.
pub fn relative(metric: Metric, real: f64, ai: f64) -> f64 {
    let sum = real + ai;
    if sum == 0.0 {
        return 0.0;
    }
    2.0 * metric.sign() * (real - ai) / sum * 100.0
}

/// Relative delta for every metric of two bundles.
pub fn relative_delta(real: &MetricBundle, ai: &MetricBundle) -> Result<MetricValues> {
    real.values()
        .zip_with(&ai.values(), relative)
}

/// Interleave single-source rank tables into simulated mixed ranks:
/// `2 r_real - c` and `2 r_ai - (1 - c)` with a fair coin `c` drawn per query
/// in query-id order.
pub fn simulate_interleaved(
    real: &RankTable,
    ai: &RankTable,
    seed: u64,
) -> Result<(RankTable, RankTable)> {
    if !real.same_queries(ai) {
        return Err(Error::QuerySetMismatch);
    }
    let mut rng = Xoshiro256::seed_from_u64(seed);
    let mut mixed_real = Vec::with_capacity(real.len());
    let mut mixed_ai = Vec::with_capacity(real.len());
    for ((q, r), (_, g)) in real.iter().zip(ai.iter()) {
        let c = rng.coin();
        mixed_real.push((q, 2 * r - c));
        mixed_ai.push((q, 2 * g - (1 - c)));
    }
    let n = real.corpus_size() + ai.corpus_size();
    Ok((
        RankTable::from_pairs(mixed_real, n),
        RankTable::from_pairs(mixed_ai, n),
    ))
}

/// The per-run seeds used when Location delta is averaged over `runs`
/// interleavings. A single run uses `seed` itself.
pub fn interleave_seeds(seed: u64, runs: usize) -> Vec<u64> {
    if runs <= 1 {
        return alloc::vec![seed];
    }
    let mut sm = SplitMix64::new(seed);
    (0..runs).map(|_| sm.next_u64()).collect()
}

/// Relative delta of the simulated interleaving, averaged over `runs` seeds.
pub fn location_delta(
    real: &RankTable,
    ai: &RankTable,
    ks: &[u32],
    seed: u64,
    runs: usize,
) -> Result<MetricValues> {
    let seeds = interleave_seeds(seed, runs);
    let mut acc: Option<MetricValues> = None;
    for s in &seeds {
        let (mr, ma) = simulate_interleaved(real, ai, *s)?;
        let d = relative_delta(&MetricBundle::compute(&mr, ks)?, &MetricBundle::compute(&ma, ks)?)?;
        acc = Some(match acc {
            None => d,
            Some(a) => a.zip_with(&d, |_, x, y| x + y)?,
        });
    }
    let acc = acc.expect("at least one seed");
    if seeds.len() == 1 {
        return Ok(acc);
    }
    let n = seeds.len() as f64;
    Ok(MetricValues::new(acc.iter().map(|(m, v)| (m, v / n)).collect()))
}

/// `relative - location`, per metric.
pub fn normalized_delta(relative: &MetricValues, location: &MetricValues) -> Result<MetricValues> {
    relative.zip_with(location, |_, r, l| r - l)
}

/// Mean of the R@1, MedR and MeanR components.
pub fn mixr(values: &MetricValues) -> Result<f64> {
    let r1 = values
        .get(Metric::RecallAt(1))
        .ok_or(Error::MissingMetric("R@1"))?;
    let med = values.get(Metric::MedR).ok_or(Error::MissingMetric("MedR"))?;
    let mean = values.get(Metric::MeanR).ok_or(Error::MissingMetric("MeanR"))?;
    Ok((r1 + med + mean) / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixR {
    pub relative: f64,
    pub location: f64,
    pub normalized: f64,
}

/// Relative, Location and Normalized deltas with their MixR aggregates.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaReport {
    pub relative: MetricValues,
    pub location: MetricValues,
    pub normalized: MetricValues,
    pub mixr: MixR,
}

impl DeltaReport {
    pub fn new(relative: MetricValues, location: MetricValues) -> Result<Self> {
        let normalized = normalized_delta(&relative, &location)?;
        let mixr = MixR {
            relative: mixr(&relative)?,
            location: mixr(&location)?,
            normalized: mixr(&normalized)?,
        };
        Ok(Self {
            relative,
            location,
            normalized,
            mixr,
        })
    }
}
