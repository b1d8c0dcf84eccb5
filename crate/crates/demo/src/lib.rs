//! Browser bindings for three small interactive views: bootstrap overlap,
//! seed stripes of ERM versus twin-bootstrap predictions, and a GP / expected
//! improvement curve. Everything takes and returns plain values so the same
//! functions are testable natively.

use serde_json::json;
use wasm_bindgen::prelude::*;
use xchurn::bo::{expected_improvement, gp_fit, gp_posterior, GpParams};
use xchurn::dataio::{draw_bootstrap, generate_synthetic, make_canonical_split, overlap_stats, SyntheticSpec, SyntheticTask};
use xchurn::methods::{predict, train_erm, train_twin, OverlapMode};
use xchurn::metrics::{pairwise_churn, PredictionSet};
use xchurn::nn::TrainConfig;
use xchurn::rng::derive_key;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Shared-unique fraction of `pairs` independent bootstrap pairs over a pool of `n`.
#[wasm_bindgen]
pub fn bootstrap_overlap(n: usize, pairs: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    if n == 0 || pairs == 0 {
        return Err(js_err("pool size and pair count must be positive"));
    }
    let pool: Vec<usize> = (0..n).collect();
    (0..pairs as u64)
        .map(|p| {
            let a = draw_bootstrap(&pool, derive_key(&[seed as u64, p, 0])).map_err(js_err)?;
            let b = draw_bootstrap(&pool, derive_key(&[seed as u64, p, 1])).map_err(js_err)?;
            Ok(overlap_stats(&a, &b).map_err(js_err)?.shared_unique_frac)
        })
        .collect()
}

/// Small config that trains in well under a second per model in the browser.
pub fn demo_train_config() -> TrainConfig {
    TrainConfig {
        hidden_dims: vec![16],
        epochs: 15,
        batch_size: 32,
        ..TrainConfig::default()
    }
}

/// Test-set predicted classes for `seeds` retrainings of ERM and of the
/// twin-bootstrap at `lambda`, as JSON:
/// `{"ids", "erm": [[class]], "twin": [[class]], "erm_churn", "twin_churn"}`.
#[wasm_bindgen]
pub fn churn_stripes(lambda: f64, sep: f64, seeds: usize, seed: u32) -> Result<String, JsError> {
    if seeds < 2 {
        return Err(js_err("need at least two seeds"));
    }
    let spec = SyntheticSpec {
        n: 300,
        d: 5,
        task: SyntheticTask::Classification { class_sep: sep },
    };
    let ds = generate_synthetic(&spec, seed as u64).map_err(js_err)?;
    let split = make_canonical_split(&ds, 0, 0.2).map_err(js_err)?;
    let test = ds.rows(&split.id_test);
    let ids = ds.ids_of(&split.id_test);
    let cfg = demo_train_config();
    let seed_list: Vec<u64> = (0..seeds as u64).collect();
    let mut erm = Vec::new();
    let mut twin = Vec::new();
    for &s in &seed_list {
        let p = train_erm(&ds, &split.train_pool, &cfg, s).map_err(js_err)?;
        erm.push(predict(&p, &test).map_err(js_err)?);
        let p = train_twin(&ds, &split.train_pool, &cfg, s, lambda, OverlapMode::Bootstrap).map_err(js_err)?;
        twin.push(predict(&p, &test).map_err(js_err)?);
    }
    let summarize = |outs: &[ndarray::Array2<f64>], name: &str| -> Result<(Vec<Vec<usize>>, f64), JsError> {
        let ps = PredictionSet::from_seed_outputs(ids.clone(), seed_list.clone(), name, ds.task, outs).map_err(js_err)?;
        let classes = (0..ps.n_seeds()).map(|s| ps.argmaxes(s)).collect();
        Ok((classes, pairwise_churn(&ps).map_err(js_err)?.mean_churn()))
    };
    let (erm_cls, erm_churn) = summarize(&erm, "erm")?;
    let (twin_cls, twin_churn) = summarize(&twin, "twin")?;
    Ok(json!({
        "ids": ids,
        "erm": erm_cls,
        "twin": twin_cls,
        "erm_churn": erm_churn,
        "twin_churn": twin_churn,
    })
    .to_string())
}

/// GP posterior and expected improvement over `grid` after observing
/// `(xs, ys)`; returns `[mean…, sd…, ei…]`, each `grid.len()` long.
#[wasm_bindgen]
pub fn gp_ei_curve(xs: &[f64], ys: &[f64], grid: &[f64]) -> Result<Vec<f64>, JsError> {
    if xs.len() != ys.len() {
        return Err(js_err("xs and ys differ in length"));
    }
    let model = gp_fit(xs, ys, GpParams::default()).map_err(js_err)?;
    let best = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let post: Vec<(f64, f64)> = grid.iter().map(|&x| gp_posterior(&model, x)).collect();
    let mut out: Vec<f64> = post.iter().map(|p| p.0).collect();
    out.extend(post.iter().map(|p| p.1.max(0.0).sqrt()));
    out.extend(post.iter().map(|&(m, v)| {
        if ys.is_empty() {
            0.0
        } else {
            expected_improvement(m, v.max(0.0).sqrt(), best)
        }
    }));
    Ok(out)
}
