use ndarray::{Array2, Array3};
use proptest::prelude::*;
use xchurn::bo::expected_improvement;
use xchurn::dataio::{draw_bootstrap, TaskKind};
use xchurn::methods::{MethodSpec, OverlapMode};
use xchurn::metrics::{argmax_churn, flip_recall_curve, pairwise_churn, symkl_disagreement, PredictionSet};
use xchurn::nn::{init_mlp, read_checkpoint, write_checkpoint};
use xchurn::stats::{paired_bootstrap_ci, rank_row};

fn probs(raw: &[f64], n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, 2), |(i, c)| {
        let p = 0.02 + 0.96 * raw[i];
        if c == 0 {
            p
        } else {
            1.0 - p
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn churn_is_symmetric_and_bounded(a in prop::collection::vec(0.0..1.0f64, 1..40), seed in 0u64..1000) {
        let n = a.len();
        let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| (v * 7.3 + i as f64 * 0.37 + seed as f64) % 1.0).collect();
        let (pa, pb) = (probs(&a, n), probs(&b, n));
        let ab = argmax_churn(pa.view(), pb.view()).unwrap();
        prop_assert_eq!(ab, argmax_churn(pb.view(), pa.view()).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(argmax_churn(pa.view(), pa.view()).unwrap(), 0.0);
        let s1 = symkl_disagreement(pa.view(), pb.view()).unwrap();
        let s2 = symkl_disagreement(pb.view(), pa.view()).unwrap();
        prop_assert!((s1 - s2).abs() <= 1e-12 * (1.0 + s1));
        prop_assert!(s1 >= 0.0);
    }

    #[test]
    fn per_example_and_per_pair_means_agree(raw in prop::collection::vec(0.0..1.0f64, 4 * 12)) {
        let (s, n) = (4, 12);
        let values = Array3::from_shape_fn((s, n, 2), |(k, i, c)| {
            let p = raw[k * n + i];
            if c == 0 { p } else { 1.0 - p }
        });
        let ids = (0..n).map(|i| format!("e{i}")).collect();
        let ps = PredictionSet::new(ids, (0..s as u64).collect(), "m", TaskKind::BinaryClassification, values).unwrap();
        let pc = pairwise_churn(&ps).unwrap();
        let per_ex = pc.per_example.iter().sum::<f64>() / n as f64;
        prop_assert!((per_ex - pc.mean_churn()).abs() < 1e-12);
    }

    #[test]
    fn ci_stays_within_the_data(v in prop::collection::vec(-5.0..5.0f64, 1..30), seed in 0u64..50) {
        let ci = paired_bootstrap_ci(&v, 300, seed).unwrap();
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= ci.lo && ci.lo <= ci.hi && ci.hi <= hi);
    }

    #[test]
    fn ei_is_nonnegative_and_monotone_in_mean(mu in -3.0..3.0f64, sigma in 0.0..2.0f64, best in -3.0..3.0f64) {
        let e = expected_improvement(mu, sigma, best);
        prop_assert!(e >= 0.0);
        prop_assert!(expected_improvement(mu + 0.1, sigma, best) >= e);
        prop_assert!(e >= (mu - best).max(0.0) - 1e-12);
    }

    #[test]
    fn flip_curves_rise_from_zero_to_one(
        scores in prop::collection::vec(0.0..1.0f64, 2..60),
        mass_seed in 0u64..1000,
    ) {
        let n = scores.len();
        let mut mass: Vec<f64> = (0..n).map(|i| ((i as u64 * 2654435761 + mass_seed) % 5) as f64).collect();
        mass[0] += 1.0;
        let ids: Vec<String> = (0..n).map(|i| format!("r{i}")).collect();
        let c = flip_recall_curve(&scores, &mass, &ids).unwrap();
        prop_assert_eq!(c.points.first().copied(), Some((0.0, 0.0)));
        prop_assert!((c.points.last().unwrap().1 - 1.0).abs() < 1e-12);
        prop_assert!(c.points.windows(2).all(|w| w[1].1 >= w[0].1 && w[1].0 > w[0].0));
        prop_assert!(c.aupc_norm <= 1.0 + 1e-12);
    }

    #[test]
    fn checkpoints_round_trip(h in 1usize..6, d in 1usize..5, seed in 0u64..100) {
        let p = init_mlp(&[d, h, 2], seed).unwrap();
        prop_assert_eq!(read_checkpoint(&write_checkpoint(&p)).unwrap(), p);
    }

    #[test]
    fn ranks_sum_to_triangular(row in prop::collection::vec(0.0..3.0f64, 1..9)) {
        let rounded: Vec<f64> = row.iter().map(|v| v.round()).collect();
        let r = rank_row(&rounded).unwrap();
        let k = r.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - k * (k + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn bootstrap_draws_stay_in_pool(n in 1usize..200, seed in 0u64..1000) {
        let pool: Vec<usize> = (0..n).map(|i| 3 * i + 1).collect();
        let s = draw_bootstrap(&pool, seed).unwrap();
        prop_assert_eq!(s.indices.len(), n);
        prop_assert!(s.indices.iter().all(|i| pool.contains(i)));
        prop_assert!(s.unique_frac() > 0.0 && s.unique_frac() <= 1.0);
    }

    #[test]
    fn method_specs_round_trip(k in 2usize..9, lambda in 0.0..500.0f64, mode in 0usize..3) {
        let mode = [OverlapMode::Disjoint, OverlapMode::Bootstrap, OverlapMode::Shared][mode];
        for spec in [MethodSpec::bagging(k), MethodSpec::deep_ensemble(k), MethodSpec::twin(lambda, mode), MethodSpec::mc_dropout(k)] {
            prop_assert_eq!(spec.to_string().parse::<MethodSpec>().unwrap(), spec);
        }
    }
}
