//! One full-batch SGD step of twin training equals `θ − lr·∇` of the joint
//! objective evaluated on the two training multisets.

use xchurn::dataio::{generate_synthetic, SyntheticSpec, SyntheticTask, TaskKind};
use xchurn::methods::{train_twin, twin_joint_loss, twin_samples, OverlapMode};
use xchurn::nn::{init_mlp, LossSpec, OptimizerKind, TrainConfig};
use xchurn::rng::member_seed;

fn check(task: SyntheticTask, kind: TaskKind, mode: OverlapMode, lambda: f64) {
    let ds = generate_synthetic(&SyntheticSpec { n: 40, d: 3, task }, 11).unwrap();
    let pool: Vec<usize> = (0..40).collect();
    let cfg = TrainConfig {
        hidden_dims: vec![6],
        learning_rate: 0.05,
        weight_decay: 0.0,
        clip_norm: 1e12,
        batch_size: 1000,
        epochs: 1,
        optimizer: OptimizerKind::Sgd,
        task: kind,
        ..TrainConfig::default()
    };
    let seed = 4;
    let trained = train_twin(&ds, &pool, &cfg, seed, lambda, mode).unwrap();

    let dims = cfg.layer_dims(ds.n_features());
    let pa = init_mlp(&dims, member_seed(seed, 0)).unwrap();
    let pb = init_mlp(&dims, member_seed(seed, 1)).unwrap();
    let (sa, sb) = twin_samples(&pool, seed, mode).unwrap();
    let (xa, xb) = (ds.rows(&sa.indices), ds.rows(&sb.indices));
    let (la, lb) = (ds.labels_of(&sa.indices), ds.labels_of(&sb.indices));
    let (ta, tb) = (ds.targets_of(&sa.indices), ds.targets_of(&sb.indices));
    let (spec_a, spec_b) = if kind.is_classification() {
        (LossSpec::CrossEntropy { labels: &la }, LossSpec::CrossEntropy { labels: &lb })
    } else {
        (LossSpec::Mse { targets: &ta }, LossSpec::Mse { targets: &tb })
    };
    let (_, ga, gb) = twin_joint_loss(&pa, &pb, &xa, spec_a, &xb, spec_b, lambda, !kind.is_classification()).unwrap();

    for (p0, g, got) in [(&pa, &ga, &trained.members[0]), (&pb, &gb, &trained.members[1])] {
        let want: Vec<f64> = p0.to_flat().iter().zip(g.to_flat()).map(|(p, g)| p - cfg.learning_rate * g).collect();
        for (w, h) in want.iter().zip(got.to_flat()) {
            assert!((w - h).abs() <= 1e-12 * (1.0 + w.abs()), "{mode:?} λ={lambda}: {w} vs {h}");
        }
    }
}

#[test]
fn classification_step_matches_joint_gradient() {
    for mode in [OverlapMode::Bootstrap, OverlapMode::Shared] {
        check(SyntheticTask::Classification { class_sep: 1.0 }, TaskKind::BinaryClassification, mode, 3.0);
    }
}

#[test]
fn regression_step_matches_joint_gradient() {
    check(SyntheticTask::Regression { noise_sd: 0.3 }, TaskKind::Regression, OverlapMode::Bootstrap, 1.0);
}

#[test]
fn zero_lambda_step_is_two_independent_steps() {
    check(SyntheticTask::Classification { class_sep: 1.0 }, TaskKind::BinaryClassification, OverlapMode::Bootstrap, 0.0);
}
