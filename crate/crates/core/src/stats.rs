//! Paired t-tests and optical-flow entropy summaries.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    /// Two-sided.
    pub p_value: f64,
}

/// Paired t-test on `a - b`.
///
/// Zero-variance differences give `t = ±inf, p = 0` when the mean differs
/// from zero, and `t = 0, p = 1` otherwise.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (nf - 1.0);
    let df = n - 1;
    if var == 0.0 {
        return Ok(if mean == 0.0 {
            TTestResult {
                t_statistic: 0.0,
                degrees_of_freedom: df,
                p_value: 1.0,
            }
        } else {
            TTestResult {
                t_statistic: if mean > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY },
                degrees_of_freedom: df,
                p_value: 0.0,
            }
        });
    }
    let t = mean / (libm::sqrt(var) / libm::sqrt(nf));
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: student_t_two_sided(t, df as f64),
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// CDF of Student's t.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_sided(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = core::f64::consts::PI;
        return libm::log(pi / libm::fabs(libm::sin(pi * x))) - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * libm::log(2.0 * core::f64::consts::PI) + (x + 0.5) * libm::log(t) - t + libm::log(acc)
}

const BETA_EPS: f64 = 1e-15;
const BETA_MAX_ITER: usize = 500;

/// `I_x(a, b)` via the continued fraction (modified Lentz).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * libm::log(x) + b * libm::log(1.0 - x);
    let front = libm::exp(ln_front);
    // the fraction converges fast for x < (a + 1) / (a + b + 2)
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if libm::fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if libm::fabs(del - 1.0) < BETA_EPS {
            break;
        }
    }
    h
}

/// A grid of optical-flow magnitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowGrid {
    pub rows: usize,
    pub cols: usize,
    pub magnitudes: Vec<f64>,
}

impl FlowGrid {
    pub fn new(rows: usize, cols: usize, magnitudes: Vec<f64>) -> Result<Self> {
        if magnitudes.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: rows * cols,
                right: magnitudes.len(),
            });
        }
        Ok(Self { rows, cols, magnitudes })
    }

    /// From rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::LengthMismatch {
                left: cols,
                right: bad.len(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }
}

pub const DEFAULT_FLOW_BINS: usize = 16;

/// Shannon entropy (bits) of the magnitude histogram with `bins` uniform
/// bins on `[0, max]`. An all-zero grid has entropy 0.
pub fn flow_entropy(grid: &FlowGrid, bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::InvalidParameter("need at least 2 bins"));
    }
    if grid.magnitudes.is_empty() {
        return Err(Error::Empty("flow grid"));
    }
    if grid.magnitudes.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::InvalidParameter("flow magnitudes must be finite and nonnegative"));
    }
    let max = grid.magnitudes.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0.0);
    }
    let mut counts = alloc::vec![0usize; bins];
    for &m in &grid.magnitudes {
        let b = ((m / max) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let n = grid.magnitudes.len() as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * libm::log2(p)
        })
        .sum::<f64>();
    Ok(h + 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowEntropySummary {
    pub mean_entropy_real: f64,
    pub mean_entropy_ai: f64,
    pub higher_count_real: usize,
    pub higher_count_ai: usize,
    pub n_pairs: usize,
}

/// Per-pair entropies `(real, ai)` plus their summary.
pub fn flow_summary(real: &[FlowGrid], ai: &[FlowGrid], bins: usize) -> Result<(Vec<(f64, f64)>, FlowEntropySummary)> {
    if real.len() != ai.len() {
        return Err(Error::LengthMismatch {
            left: real.len(),
            right: ai.len(),
        });
    }
    if real.is_empty() {
        return Err(Error::Empty("flow pair list"));
    }
    let pairs = real
        .iter()
        .zip(ai)
        .map(|(r, g)| Ok((flow_entropy(r, bins)?, flow_entropy(g, bins)?)))
        .collect::<Result<Vec<_>>>()?;
    let n = pairs.len() as f64;
    let summary = FlowEntropySummary {
        mean_entropy_real: pairs.iter().map(|p| p.0).sum::<f64>() / n,
        mean_entropy_ai: pairs.iter().map(|p| p.1).sum::<f64>() / n,
        higher_count_real: pairs.iter().filter(|p| p.0 > p.1).count(),
        higher_count_ai: pairs.iter().filter(|p| p.1 > p.0).count(),
        n_pairs: pairs.len(),
    };
    Ok((pairs, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn hand_computed_t_test() {
        // diffs 1..5: mean 3, sd sqrt(2.5), t = 3 / (sqrt(2.5) / sqrt 5) = 3 sqrt 2
        let a = [2.0, 4.0, 6.0, 8.0, 10.0];
        let b = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = paired_t_test(&a, &b).unwrap();
        assert!((r.t_statistic - 3.0 * libm::sqrt(2.0)).abs() < 1e-12);
        assert!((r.t_statistic - 4.2426).abs() < 1e-4);
        assert_eq!(r.degrees_of_freedom, 4);
        // t-table: t(0.99, 4) = 3.747, t(0.995, 4) = 4.604, so 0.01 < p < 0.02
        assert!((r.p_value - 0.0132).abs() < 1e-3, "{}", r.p_value);
    }

    #[test]
    fn degenerate_t_tests() {
        let a = [1.0, 2.0, 3.0];
        let r = paired_t_test(&a, &a).unwrap();
        assert_eq!((r.t_statistic, r.p_value), (0.0, 1.0));
        let b = [0.0, 1.0, 2.0];
        let r = paired_t_test(&a, &b).unwrap();
        assert_eq!((r.t_statistic, r.p_value), (f64::INFINITY, 0.0));
        assert!(paired_t_test(&a, &b[..2]).is_err());
        assert!(paired_t_test(&a[..1], &b[..1]).is_err());
    }

    #[test]
    fn t_cdf_reference_points() {
        for df in [1.0, 2.0, 5.0, 30.0] {
            assert!((student_t_two_sided(0.0, df) - 1.0).abs() < 1e-12);
            assert!((student_t_cdf(0.0, df) - 0.5).abs() < 1e-12);
            for t in [0.5, 1.3, 2.7] {
                let s = student_t_cdf(t, df) + student_t_cdf(-t, df);
                assert!((s - 1.0).abs() < 1e-6);
            }
        }
        // Cauchy: P(T <= 1) = 3/4
        assert!((student_t_cdf(1.0, 1.0) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn t_cdf_matches_statrs() {
        use statrs::distribution::{ContinuousCDF, StudentsT};
        for df in [1.0, 2.5, 4.0, 9.0, 49.0, 199.0] {
            let reference = StudentsT::new(0.0, 1.0, df).unwrap();
            for t in [-12.0, -4.2426, -1.0, -0.1, 0.3, 2.0, 6.5] {
                let ours = student_t_cdf(t, df);
                let theirs = reference.cdf(t);
                assert!((ours - theirs).abs() < 1e-10, "df {df} t {t}: {ours} vs {theirs}");
            }
        }
    }

    #[test]
    fn ln_gamma_integers() {
        let mut fact = 1.0f64;
        for n in 1..15 {
            assert!((ln_gamma(n as f64) - libm::log(fact)).abs() < 1e-10, "{n}");
            fact *= n as f64;
        }
        // Gamma(1/2) = sqrt(pi)
        assert!((ln_gamma(0.5) - 0.5 * libm::log(core::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn entropy_bounds() {
        let flat = FlowGrid::new(2, 2, vec![0.7; 4]).unwrap();
        assert_eq!(flow_entropy(&flat, 16).unwrap(), 0.0);
        let zeros = FlowGrid::new(1, 3, vec![0.0; 3]).unwrap();
        assert_eq!(flow_entropy(&zeros, 16).unwrap(), 0.0);
        // 0.5, 1.5, .., 14.5 land in bins 0..14 and the max, 16, in bin 15
        let mut mags: Vec<f64> = (0..15).map(|i| i as f64 + 0.5).collect();
        mags.push(16.0);
        let uniform = FlowGrid::new(4, 4, mags).unwrap();
        assert_eq!(flow_entropy(&uniform, 16).unwrap(), 4.0);
        let two = FlowGrid::new(1, 2, vec![0.0, 1.0]).unwrap();
        assert_eq!(flow_entropy(&two, 16).unwrap(), 1.0);
        assert!(flow_entropy(&flat, 1).is_err());
    }

    #[test]
    fn summary_counts() {
        let same = vec![FlowGrid::new(1, 2, vec![0.1, 0.9]).unwrap(); 3];
        let (_, s) = flow_summary(&same, &same, 16).unwrap();
        assert_eq!((s.higher_count_real, s.higher_count_ai), (0, 0));
        assert_eq!(s.mean_entropy_real, s.mean_entropy_ai);
        assert!(flow_summary(&same, &same[..2], 16).is_err());
    }
}
