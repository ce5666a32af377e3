use proptest::prelude::*;
use srcbias_core::corpus::{QueryRecord, RelevanceMap, Source, VideoRecord};
use srcbias_core::metrics::{relative, simulate_interleaved, DeltaReport, Metric, MetricValues};
use srcbias_core::ranking::{pool, rank_mixed, PooledEmbedding, Pooling, RankTable};
use srcbias_core::stats::{flow_entropy, paired_t_test, FlowGrid};

fn metric_values(v: [f64; 5]) -> MetricValues {
    MetricValues::new(vec![
        (Metric::RecallAt(1), v[0]),
        (Metric::RecallAt(5), v[1]),
        (Metric::RecallAt(10), v[2]),
        (Metric::MedR, v[3]),
        (Metric::MeanR, v[4]),
    ])
}

fn delta() -> impl Strategy<Value = [f64; 5]> {
    prop::array::uniform5(-200.0f64..200.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn normalized_is_relative_minus_location(rel in delta(), loc in delta()) {
        let report = DeltaReport::new(metric_values(rel), metric_values(loc)).unwrap();
        for ((m, n), ((_, r), (_, l))) in report.normalized.iter().zip(report.relative.iter().zip(report.location.iter())) {
            prop_assert_eq!(n.to_bits(), (r - l).to_bits(), "{}", m);
        }
    }
}

proptest! {
    #[test]
    fn relative_is_antisymmetric_and_bounded(a in 0.0f64..1e4, b in 0.0f64..1e4) {
        for m in [Metric::RecallAt(1), Metric::MedR, Metric::MeanR] {
            let x = relative(m, a, b);
            prop_assert!(x.abs() <= 200.0 + 1e-9);
            prop_assert_eq!(x, -relative(m, b, a));
        }
    }

    #[test]
    fn uniform_mean_ignores_frame_order(
        frames in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 2..8),
        seed in any::<u64>(),
    ) {
        prop_assume!(frames.iter().map(|f| f.iter().sum::<f64>()).sum::<f64>().abs() > 1e-3);
        let v = VideoRecord::new("v", Source::Real, frames.clone());
        let mut shuffled = frames;
        srcbias_core::rng::Xoshiro256::seed_from_u64(seed).shuffle(&mut shuffled);
        let w = VideoRecord::new("v", Source::Real, shuffled);
        let (a, b) = (pool(&v, Pooling::UniformMean), pool(&w, Pooling::UniformMean));
        if let (Ok(a), Ok(b)) = (a, b) {
            for (x, y) in a.vector.iter().zip(&b.vector) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interleaved_ranks_are_distinct_and_in_range(ranks in prop::collection::vec((1u32..50, 1u32..50), 1..40), seed in any::<u64>()) {
        let real = RankTable::from_pairs(ranks.iter().enumerate().map(|(i, r)| (format!("q{i:03}"), r.0)), 50);
        let ai = RankTable::from_pairs(ranks.iter().enumerate().map(|(i, r)| (format!("q{i:03}"), r.1)), 50);
        let (mr, ma) = simulate_interleaved(&real, &ai, seed).unwrap();
        prop_assert_eq!(mr.corpus_size(), 100);
        for ((_, a), (_, b)) in mr.iter().zip(ma.iter()) {
            prop_assert!(a != b);
            prop_assert!((1..=100).contains(&a) && (1..=100).contains(&b));
        }
    }

    #[test]
    fn mixed_ranks_are_distinct_and_in_range(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = srcbias_core::rng::Xoshiro256::seed_from_u64(seed);
        let mut vecs = |_| (0..3).map(|_| rng.normal()).collect::<Vec<f64>>();
        let real: Vec<PooledEmbedding> = (0..n).map(|i| PooledEmbedding { video_id: format!("v{i}"), source: Source::Real, vector: vecs(i) }).collect();
        let ai: Vec<PooledEmbedding> = (0..n).map(|i| PooledEmbedding { video_id: format!("v{i}"), source: Source::Ai, vector: vecs(i) }).collect();
        let queries: Vec<QueryRecord> = (0..n).map(|i| QueryRecord::new(format!("q{i}"), vecs(i))).collect();
        let rel: RelevanceMap = (0..n).map(|i| (format!("q{i}"), format!("v{i}"))).collect();
        let (mr, ma) = rank_mixed(&real, &ai, &queries, &rel).unwrap();
        for ((_, a), (_, b)) in mr.iter().zip(ma.iter()) {
            prop_assert!(a != b);
            prop_assert!(a >= 1 && b >= 1 && a as usize <= 2 * n && b as usize <= 2 * n);
        }
    }

    #[test]
    fn t_test_is_antisymmetric(pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..30)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let x = paired_t_test(&a, &b).unwrap();
        let y = paired_t_test(&b, &a).unwrap();
        prop_assert!(x.t_statistic == -y.t_statistic || (x.t_statistic == 0.0 && y.t_statistic == 0.0));
        prop_assert!((x.p_value - y.p_value).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&x.p_value));
    }

    #[test]
    fn entropy_is_bounded(mags in prop::collection::vec(0.0f64..100.0, 1..200), bins in 2usize..64) {
        let n = mags.len();
        let grid = FlowGrid::new(1, n, mags).unwrap();
        let h = flow_entropy(&grid, bins).unwrap();
        prop_assert!(h >= 0.0 && h <= (bins as f64).log2() + 1e-12);
    }
}
