use xchurn::bo::{bo_lambda_search, BoConfig};
use xchurn::dataio::{generate_synthetic, SyntheticSpec, SyntheticTask};
use xchurn::methods::{MethodSpec, OverlapMode};
use xchurn::nn::TrainConfig;
use xchurn::protocol::{run_comparison, ComparisonConfig};
use xchurn::report::rows_to_csv;

fn tiny() -> (xchurn::dataio::Dataset, ComparisonConfig) {
    let ds = generate_synthetic(
        &SyntheticSpec {
            n: 90,
            d: 5,
            task: SyntheticTask::Classification { class_sep: 1.0 },
        },
        8,
    )
    .unwrap();
    let mut cfg = ComparisonConfig::new(TrainConfig {
        hidden_dims: vec![8],
        epochs: 3,
        batch_size: 16,
        ..TrainConfig::default()
    });
    cfg.seeds = vec![0, 1, 2, 3];
    cfg.canonical_seeds = vec![0, 1];
    cfg.resamples = 500;
    (ds, cfg)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn comparison_is_bit_identical_across_runs_and_thread_counts() {
    let (ds, cfg) = tiny();
    let methods = [MethodSpec::bagging(2), MethodSpec::twin(3.0, OverlapMode::Bootstrap)];
    let a = in_pool(1, || run_comparison(&ds, &methods, &cfg).unwrap());
    let b = in_pool(3, || run_comparison(&ds, &methods, &cfg).unwrap());
    assert_eq!(rows_to_csv(&a.rows).unwrap(), rows_to_csv(&b.rows).unwrap());
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert_eq!(x.predictions, y.predictions);
    }
}

#[test]
fn bo_search_is_reproducible() {
    let (ds, cfg) = tiny();
    let bo = BoConfig {
        trials: 5,
        init_random: 2,
        grid_points: 64,
        ..BoConfig::default()
    };
    let pool: Vec<usize> = (0..72).collect();
    let a = in_pool(1, || bo_lambda_search(&ds, &pool, &cfg.train, 3, &bo).unwrap());
    let b = in_pool(2, || bo_lambda_search(&ds, &pool, &cfg.train, 3, &bo).unwrap());
    assert_eq!(a.trial_log_csv(), b.trial_log_csv());
    assert_eq!(a.lambda_star.to_bits(), b.lambda_star.to_bits());
}
