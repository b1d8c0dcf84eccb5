//! Gaussian-process expected-improvement search over λ, and greedy
//! acquisition trajectories.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataio::{canonical_order, Dataset};
use crate::error::{Error, Result};
use crate::methods::{self, MethodSpec, OverlapMode};
use crate::metrics::{argmax_churn, jaccard, rank_by_score, seed_pairs};
use crate::nn::TrainConfig;
use crate::rng::{derive_key, KeyedRng};
use crate::stats::{self, bootstrap_ci_with, mean_std, CiReport, DEFAULT_RESAMPLES};

/// Matérn ν = 5/2 covariance.
pub fn matern52(x: f64, x2: f64, ell: f64, sigma2: f64) -> f64 {
    let s = 5f64.sqrt() * (x - x2).abs() / ell;
    sigma2 * (1.0 + s + s * s / 3.0) * (-s).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GpParams {
    pub ell: f64,
    pub sigma2: f64,
    pub noise: f64,
    /// Largest diagonal jitter tried before giving up.
    pub max_jitter: f64,
    /// Standardize inputs and outputs before fitting.
    pub standardize: bool,
}

impl Default for GpParams {
    fn default() -> Self {
        Self {
            ell: 1.0,
            sigma2: 1.0,
            noise: 1e-4,
            max_jitter: 1e-2,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    pub params: GpParams,
    /// Training inputs and outputs in model units.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub x_shift: f64,
    pub x_scale: f64,
    pub y_shift: f64,
    pub y_scale: f64,
    /// Diagonal term actually used (noise plus any jitter).
    pub diag: f64,
    /// Lower Cholesky factor, row-major `n × n`.
    pub chol: Vec<f64>,
    alpha: Vec<f64>,
}

fn shift_scale(v: &[f64]) -> (f64, f64) {
    if v.len() < 2 {
        return (v.first().copied().unwrap_or(0.0), 1.0);
    }
    let (m, s) = mean_std(v);
    (m, if s > 0.0 { s } else { 1.0 })
}

fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let d = a[i * n + i] - s;
                if !(d > 0.0) {
                    return None;
                }
                l[i * n + i] = d.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn forward_sub(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * x[k]).sum();
        x[i] = (b[i] - s) / l[i * n + i];
    }
    x
}

fn backward_sub_t(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (b[i] - s) / l[i * n + i];
    }
    x
}

/// Condition a GP on `(xs, ys)`. The diagonal term starts at `noise` and
/// grows tenfold until the kernel matrix factorizes or exceeds `max_jitter`.
pub fn gp_fit(xs: &[f64], ys: &[f64], params: GpParams) -> Result<GpModel> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
            context: "GP outputs vs inputs",
        });
    }
    if !(params.ell > 0.0 && params.sigma2 > 0.0 && params.noise >= 0.0) {
        return Err(Error::invalid("GP lengthscale and variance must be positive"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite GP training data"));
    }
    let ((xm, xsd), (ym, ysd)) = if params.standardize {
        (shift_scale(xs), shift_scale(ys))
    } else {
        ((0.0, 1.0), (0.0, 1.0))
    };
    let zx: Vec<f64> = xs.iter().map(|x| (x - xm) / xsd).collect();
    let zy: Vec<f64> = ys.iter().map(|y| (y - ym) / ysd).collect();
    let n = zx.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            k[i * n + j] = matern52(zx[i], zx[j], params.ell, params.sigma2);
        }
    }
    let mut diag = params.noise;
    let chol = loop {
        let mut a = k.clone();
        (0..n).for_each(|i| a[i * n + i] += diag);
        if let Some(l) = cholesky(&a, n) {
            break l;
        }
        let next = if diag > 0.0 { diag * 10.0 } else { 1e-12 };
        if next > params.max_jitter * (1.0 + 1e-12) {
            return Err(Error::NotPositiveDefinite { jitter: diag });
        }
        diag = next;
    };
    let alpha = backward_sub_t(&chol, n, &forward_sub(&chol, n, &zy));
    Ok(GpModel {
        params,
        xs: zx,
        ys: zy,
        x_shift: xm,
        x_scale: xsd,
        y_shift: ym,
        y_scale: ysd,
        diag,
        chol,
        alpha,
    })
}

/// Posterior mean and variance at `xstar`, in the units of the training outputs.
pub fn gp_posterior(model: &GpModel, xstar: f64) -> (f64, f64) {
    let p = model.params;
    let z = (xstar - model.x_shift) / model.x_scale;
    let n = model.xs.len();
    let kstar: Vec<f64> = model.xs.iter().map(|&x| matern52(z, x, p.ell, p.sigma2)).collect();
    let mu: f64 = kstar.iter().zip(&model.alpha).map(|(a, b)| a * b).sum();
    let v = forward_sub(&model.chol, n, &kstar);
    let var = (p.sigma2 - v.iter().map(|x| x * x).sum::<f64>()).max(0.0);
    (
        model.y_shift + model.y_scale * mu,
        var * model.y_scale * model.y_scale,
    )
}

/// Expected improvement over `best` for a maximization problem.
pub fn expected_improvement(mu: f64, sigma: f64, best: f64) -> f64 {
    let d = mu - best;
    if !(sigma > 0.0) {
        return d.max(0.0);
    }
    let z = d / sigma;
    (d * stats::normal_cdf(z) + sigma * stats::normal_pdf(z)).max(0.0)
}

/// `n` points evenly spaced in log10 between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// `−c̄ − C·max(0, a₀ − δ − ā)`.
pub fn bo_score(a0: f64, mean_acc: f64, mean_churn: f64, delta: f64, penalty: f64) -> f64 {
    -mean_churn - penalty * (a0 - delta - mean_acc).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoTrial {
    /// 1-based trial number.
    pub trial: usize,
    pub lambda: f64,
    pub fold_acc: Vec<f64>,
    pub fold_churn: Vec<f64>,
    pub mean_acc: f64,
    pub mean_churn: f64,
    pub score: f64,
}

impl BoTrial {
    pub fn is_baseline(&self) -> bool {
        self.lambda == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoConfig {
    pub trials: usize,
    pub init_random: usize,
    pub folds: usize,
    pub delta: f64,
    pub penalty: f64,
    pub lo: f64,
    pub hi: f64,
    pub grid_points: usize,
    pub fold_seed: u64,
    pub overlap: OverlapMode,
    pub gp: GpParams,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            trials: 50,
            init_random: 5,
            folds: 3,
            delta: 0.02,
            penalty: 100.0,
            lo: 1e-3,
            hi: 1e4,
            grid_points: 512,
            fold_seed: 99,
            overlap: OverlapMode::Bootstrap,
            gp: GpParams::default(),
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("BO needs at least the baseline trial"));
        }
        if self.folds < 2 {
            return Err(Error::invalid("BO needs ≥ 2 folds"));
        }
        if !(self.lo > 0.0 && self.hi > self.lo) {
            return Err(Error::invalid("λ bounds must satisfy 0 < lo < hi"));
        }
        if self.grid_points == 0 {
            return Err(Error::invalid("EI grid must be nonempty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoResult {
    pub lambda_star: f64,
    pub a0: f64,
    pub trials: Vec<BoTrial>,
}

impl BoResult {
    /// `trial,lambda,val_acc,val_churn,score`.
    pub fn trial_log_csv(&self) -> String {
        let mut s = String::from("trial,lambda,val_acc,val_churn,score\n");
        for t in &self.trials {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                t.trial, t.lambda, t.mean_acc, t.mean_churn, t.score
            ));
        }
        s
    }
}

/// Train/validation positions for each fold of a keyed shuffle of `pool`.
pub fn fold_splits(pool: &[usize], folds: usize, fold_seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if folds < 2 || pool.len() < 2 * folds {
        return Err(Error::invalid(format!(
            "pool of {} cannot be split into {folds} folds",
            pool.len()
        )));
    }
    let mut order = pool.to_vec();
    KeyedRng::new("folds", &[fold_seed]).shuffle(&mut order);
    Ok((0..folds)
        .map(|f| {
            let (mut tr, mut va) = (Vec::new(), Vec::new());
            for (i, &r) in order.iter().enumerate() {
                if i % folds == f {
                    va.push(r)
                } else {
                    tr.push(r)
                }
            }
            (tr, va)
        })
        .collect())
}

/// Validation accuracy of the first pair and argmax churn between the two pairs.
fn evaluate_lambda(
    ds: &Dataset,
    splits: &[(Vec<usize>, Vec<usize>)],
    cfg: &TrainConfig,
    train_seed: u64,
    lambda: f64,
    overlap: OverlapMode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let jobs: Vec<(usize, u64)> = (0..splits.len()).flat_map(|f| [(f, 0), (f, 1)]).collect();
    let outs = jobs
        .par_iter()
        .map(|&(f, arm)| {
            let (tr, va) = &splits[f];
            let seed = derive_key(&[train_seed, f as u64, arm]);
            let p = methods::train_twin(ds, tr, cfg, seed, lambda, overlap)?;
            methods::predict(&p, &ds.rows(va))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut accs = Vec::new();
    let mut churns = Vec::new();
    for (f, (_, va)) in splits.iter().enumerate() {
        let (a, b) = (&outs[2 * f], &outs[2 * f + 1]);
        let labels = ds.labels_of(va);
        let hits = a
            .rows()
            .into_iter()
            .zip(&labels)
            .filter(|(r, &y)| crate::metrics::argmax(*r) == y)
            .count();
        accs.push(hits as f64 / va.len() as f64);
        churns.push(argmax_churn(a.view(), b.view())?);
    }
    Ok((accs, churns))
}

/// Search λ for a twin pair: a forced λ=0 baseline, log-uniform random
/// trials, then EI on a GP over log10 λ. Returns the best-scoring λ.
pub fn bo_lambda_search(
    ds: &Dataset,
    pool: &[usize],
    cfg: &TrainConfig,
    train_seed: u64,
    bo: &BoConfig,
) -> Result<BoResult> {
    bo.validate()?;
    if !ds.task.is_classification() {
        return Err(Error::TaskMismatch("λ search scores classification churn".into()));
    }
    let splits = fold_splits(pool, bo.folds, bo.fold_seed)?;
    let mut init = KeyedRng::new("bo-init", &[train_seed]);
    let grid = log_grid(bo.lo, bo.hi, bo.grid_points);
    let mut trials: Vec<BoTrial> = Vec::with_capacity(bo.trials);
    let mut a0 = f64::NAN;
    for t in 1..=bo.trials {
        let lambda = if t == 1 {
            0.0
        } else if t <= bo.init_random + 1 || trials.len() < 2 {
            10f64.powf(init.uniform_range(bo.lo.log10(), bo.hi.log10()))
        } else {
            next_ei_lambda(&trials, &grid, bo.gp)?
        };
        let (fold_acc, fold_churn) = evaluate_lambda(ds, &splits, cfg, train_seed, lambda, bo.overlap)
            .map_err(|e| e.in_cell(format!("trial {t} (λ={lambda})")))?;
        let mean_acc = crate::metrics::mean(&fold_acc);
        let mean_churn = crate::metrics::mean(&fold_churn);
        if t == 1 {
            a0 = mean_acc;
        }
        trials.push(BoTrial {
            trial: t,
            lambda,
            fold_acc,
            fold_churn,
            mean_acc,
            mean_churn,
            score: bo_score(a0, mean_acc, mean_churn, bo.delta, bo.penalty),
        });
    }
    let best = trials
        .iter()
        .fold(&trials[0], |b, t| if t.score > b.score { t } else { b });
    Ok(BoResult {
        lambda_star: best.lambda,
        a0,
        trials,
    })
}

fn next_ei_lambda(trials: &[BoTrial], grid: &[f64], gp: GpParams) -> Result<f64> {
    let obs: Vec<&BoTrial> = trials.iter().filter(|t| !t.is_baseline()).collect();
    let xs: Vec<f64> = obs.iter().map(|t| t.lambda.log10()).collect();
    let ys: Vec<f64> = obs.iter().map(|t| t.score).collect();
    let best = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let model = gp_fit(&xs, &ys, gp)?;
    let mut arg = grid[0];
    let mut top = f64::NEG_INFINITY;
    for &l in grid {
        let (mu, var) = gp_posterior(&model, l.log10());
        let ei = expected_improvement(mu, var.sqrt(), best);
        if ei > top {
            top = ei;
            arg = l;
        }
    }
    Ok(arg)
}

/// Median of per-seed λ* values.
pub fn median_lambda(lambda_stars: &[f64]) -> Result<f64> {
    stats::median(lambda_stars)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub k: u64,
    /// Dataset rows acquired, in order.
    pub acquired: Vec<usize>,
    pub acquired_y: Vec<f64>,
    /// Largest acquired y; `-inf` for an empty budget.
    pub final_best: f64,
}

/// Initial labelled rows shared by every trajectory with this `init_seed`.
pub fn initial_labelled(n: usize, init_size: usize, init_seed: u64) -> Vec<usize> {
    canonical_order(n, derive_key(&[0x1a17, init_seed]))
        .into_iter()
        .take(init_size)
        .collect()
}

/// Greedy top-1 acquisition: at step `t` train on the labelled rows with seed
/// `k·10⁶ + t`, score the unlabelled rows and reveal the highest prediction.
pub fn bo_trajectory(
    ds: &Dataset,
    spec: &MethodSpec,
    cfg: &TrainConfig,
    k: u64,
    budget: usize,
    init_size: usize,
    init_seed: u64,
) -> Result<Trajectory> {
    if ds.task.is_classification() {
        return Err(Error::TaskMismatch("trajectories maximize a regression target".into()));
    }
    if ds.len() < init_size + budget {
        return Err(Error::invalid(format!(
            "pool of {} is exhausted by {init_size} initial + {budget} acquisitions",
            ds.len()
        )));
    }
    if init_size == 0 {
        return Err(Error::Empty("initial labelled set"));
    }
    let mut labelled = initial_labelled(ds.len(), init_size, init_seed);
    let mut taken: HashSet<usize> = labelled.iter().copied().collect();
    let mut acquired = Vec::with_capacity(budget);
    for t in 0..budget {
        let seed = k * 1_000_000 + t as u64;
        let pred = methods::train(spec, ds, &labelled, cfg, seed)
            .map_err(|e| e.in_cell(format!("trajectory {k} step {t}")))?;
        let rest: Vec<usize> = (0..ds.len()).filter(|i| !taken.contains(i)).collect();
        let yhat = methods::predict(&pred, &ds.rows(&rest))?.column(0).to_vec();
        let pick = rest[rank_by_score(&yhat, &ds.ids_of(&rest))[0]];
        taken.insert(pick);
        labelled.push(pick);
        acquired.push(pick);
    }
    let acquired_y = ds.targets_of(&acquired);
    let final_best = acquired_y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Trajectory {
        k,
        acquired,
        acquired_y,
        final_best,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryReport {
    pub n: usize,
    pub final_best_mean: f64,
    pub final_best_std: f64,
    pub mean_ci: CiReport,
    pub std_ci: CiReport,
    /// `100·std / y_range`.
    pub std_over_range_pct: f64,
    pub mean_jaccard: f64,
}

pub fn trajectory_report(trajs: &[Trajectory], y_range: f64, seed: u64) -> Result<TrajectoryReport> {
    trajectory_report_with(trajs, y_range, DEFAULT_RESAMPLES, seed)
}

/// Cross-trajectory spread of the final best, with bootstrap CIs over trajectories.
pub fn trajectory_report_with(
    trajs: &[Trajectory],
    y_range: f64,
    resamples: usize,
    seed: u64,
) -> Result<TrajectoryReport> {
    if trajs.len() < 2 {
        return Err(Error::invalid("trajectory report needs ≥ 2 trajectories"));
    }
    if !(y_range > 0.0) {
        return Err(Error::invalid("y range must be positive"));
    }
    let bests: Vec<f64> = trajs.iter().map(|t| t.final_best).collect();
    let (m, s) = mean_std(&bests);
    let mean_ci = stats::paired_bootstrap_ci(&bests, resamples, seed)?;
    let std_ci = bootstrap_ci_with(&bests, resamples, seed, |v| mean_std(v).1)?;
    let jac: Vec<f64> = seed_pairs(trajs.len())
        .into_iter()
        .map(|(a, b)| jaccard(&trajs[a].acquired, &trajs[b].acquired))
        .collect();
    Ok(TrajectoryReport {
        n: trajs.len(),
        final_best_mean: m,
        final_best_std: s,
        mean_ci,
        std_ci,
        std_over_range_pct: 100.0 * s / y_range,
        mean_jaccard: crate::metrics::mean(&jac),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{generate_synthetic, SyntheticSpec, SyntheticTask};
    use approx::assert_abs_diff_eq;

    fn exact(noise: f64) -> GpParams {
        GpParams {
            noise,
            standardize: false,
            ..GpParams::default()
        }
    }

    #[test]
    fn matern_values() {
        assert_eq!(matern52(0.3, 0.3, 1.0, 2.5), 2.5);
        let s5 = 5f64.sqrt();
        let oracle = (1.0 + s5 + 5.0 / 3.0) * (-s5).exp();
        assert_abs_diff_eq!(matern52(0.0, 1.0, 1.0, 1.0), oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(matern52(0.0, 2.0, 2.0, 1.0), 0.5240, epsilon = 1e-4);
        let mut prev = 1.0;
        for i in 1..50 {
            let v = matern52(0.0, i as f64 * 0.1, 0.7, 1.0);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn gp_interpolates_and_is_symmetric() {
        let xs = [-1.3, -0.2, 0.4, 1.9];
        let ys = [0.5, -1.0, 2.0, 0.25];
        for params in [exact(1e-10), GpParams { noise: 1e-10, ..GpParams::default() }] {
            let m = gp_fit(&xs, &ys, params).unwrap();
            for (x, y) in xs.iter().zip(&ys) {
                let (mu, var) = gp_posterior(&m, *x);
                assert_abs_diff_eq!(mu, *y, epsilon = 1e-6);
                assert!(var >= 0.0 && var < 1e-6);
            }
        }
        let m = gp_fit(&[-1.0, 1.0], &[-1.0, 1.0], exact(1e-4)).unwrap();
        assert_abs_diff_eq!(gp_posterior(&m, 0.0).0, 0.0, epsilon = 1e-15);
        let prior = gp_fit(&[], &[], exact(1e-4)).unwrap();
        assert_eq!(gp_posterior(&prior, 3.0), (0.0, 1.0));
    }

    #[test]
    fn gp_two_point_direct_solve() {
        // Direct 2×2 solve: μ(x*) = [k1 k2]·K⁻¹·y.
        let p = exact(1e-4);
        let (x1, x2, y1, y2, xs) = (0.0, 0.8, 1.5, -0.5, 0.3);
        let k11 = 1.0 + 1e-4;
        let k12 = matern52(x1, x2, 1.0, 1.0);
        let det = k11 * k11 - k12 * k12;
        let a1 = (k11 * y1 - k12 * y2) / det;
        let a2 = (k11 * y2 - k12 * y1) / det;
        let (s1, s2) = (matern52(xs, x1, 1.0, 1.0), matern52(xs, x2, 1.0, 1.0));
        let m = gp_fit(&[x1, x2], &[y1, y2], p).unwrap();
        assert_abs_diff_eq!(gp_posterior(&m, xs).0, s1 * a1 + s2 * a2, epsilon = 1e-10);
    }

    #[test]
    fn duplicate_inputs_need_jitter() {
        let m = gp_fit(&[0.5, 0.5], &[1.0, 1.0], exact(0.0)).unwrap();
        assert!(m.diag > 0.0 && m.diag <= 1e-2);
    }

    #[test]
    fn ei_values() {
        assert_abs_diff_eq!(expected_improvement(1.3, 0.0, 1.0), 0.3, epsilon = 1e-15);
        assert_eq!(expected_improvement(0.7, 0.0, 1.0), 0.0);
        assert_abs_diff_eq!(expected_improvement(2.0, 1.0, 2.0), 0.398_942_280_401_432_7, epsilon = 1e-9);
        assert_abs_diff_eq!(expected_improvement(1.3, 1e-12, 1.0), 0.3, epsilon = 1e-12);
        let mut rng = KeyedRng::new("test", &[1]);
        for _ in 0..1000 {
            let (mu, s, b) = (rng.normal() * 3.0, rng.uniform() * 2.0, rng.normal());
            assert!(expected_improvement(mu, s, b) >= 0.0);
        }
    }

    #[test]
    fn score_penalty() {
        assert_eq!(bo_score(0.8, 0.8, 0.05, 0.02, 100.0), -0.05);
        assert_abs_diff_eq!(bo_score(0.80, 0.75, 0.05, 0.02, 100.0), -0.05 - 3.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e-3, 1e4, 512);
        assert_eq!(g.len(), 512);
        assert_abs_diff_eq!(g[0], 1e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(g[511], 1e4, epsilon = 1e-8);
    }

    #[test]
    fn folds_partition_the_pool() {
        let pool: Vec<usize> = (10..40).collect();
        let f = fold_splits(&pool, 3, 99).unwrap();
        let mut all: Vec<usize> = f.iter().flat_map(|(_, v)| v.clone()).collect();
        all.sort();
        assert_eq!(all, pool);
        for (tr, va) in &f {
            assert_eq!(tr.len() + va.len(), pool.len());
        }
        assert!(fold_splits(&pool[..5], 3, 99).is_err());
    }

    #[test]
    fn small_search_log_is_consistent() {
        let ds = generate_synthetic(
            &SyntheticSpec {
                n: 90,
                d: 3,
                task: SyntheticTask::Classification { class_sep: 1.5 },
            },
            5,
        )
        .unwrap();
        let cfg = TrainConfig {
            hidden_dims: vec![6],
            epochs: 2,
            batch_size: 32,
            ..TrainConfig::default()
        };
        let bo = BoConfig {
            trials: 5,
            init_random: 2,
            grid_points: 32,
            ..BoConfig::default()
        };
        let pool: Vec<usize> = (0..90).collect();
        let r = bo_lambda_search(&ds, &pool, &cfg, 7, &bo).unwrap();
        assert_eq!(r.trials.len(), 5);
        assert_eq!(r.trials[0].lambda, 0.0);
        assert_eq!(r.trials[0].score, -r.trials[0].mean_churn);
        for t in &r.trials {
            let s = bo_score(r.a0, t.mean_acc, t.mean_churn, 0.02, 100.0);
            assert!((s - t.score).abs() <= 1e-12);
            assert!(t.lambda == 0.0 || (1e-3..=1e4).contains(&t.lambda));
        }
        assert!(r.trials.iter().any(|t| t.lambda == r.lambda_star));
        assert_eq!(r.trial_log_csv().lines().count(), 6);
        assert_eq!(r, bo_lambda_search(&ds, &pool, &cfg, 7, &bo).unwrap());
    }

    #[test]
    fn trajectory_contract() {
        let ds = generate_synthetic(
            &SyntheticSpec {
                n: 40,
                d: 3,
                task: SyntheticTask::Regression { noise_sd: 0.1 },
            },
            2,
        )
        .unwrap();
        let cfg = TrainConfig {
            hidden_dims: vec![4],
            epochs: 2,
            ..TrainConfig::for_task(ds.task)
        };
        let spec = MethodSpec::erm();
        let t = bo_trajectory(&ds, &spec, &cfg, 3, 4, 20, 11).unwrap();
        let init: HashSet<usize> = initial_labelled(40, 20, 11).into_iter().collect();
        assert_eq!(t.acquired.len(), 4);
        assert!(t.acquired.iter().all(|i| !init.contains(i)));
        assert_eq!(t.acquired.iter().collect::<HashSet<_>>().len(), 4);
        assert_eq!(t.final_best, t.acquired_y.iter().copied().fold(f64::MIN, f64::max));
        assert_eq!(t, bo_trajectory(&ds, &spec, &cfg, 3, 4, 20, 11).unwrap());
        assert!(bo_trajectory(&ds, &spec, &cfg, 0, 0, 20, 11).unwrap().acquired.is_empty());
        assert!(bo_trajectory(&ds, &spec, &cfg, 0, 30, 20, 11).is_err());
    }

    fn traj(best: f64, acquired: Vec<usize>) -> Trajectory {
        Trajectory {
            k: 0,
            acquired_y: vec![best],
            acquired,
            final_best: best,
        }
    }

    #[test]
    fn report_values() {
        let r = trajectory_report_with(&[traj(1.0, vec![1, 2]), traj(3.0, vec![2, 3])], 10.0, 200, 0).unwrap();
        assert_eq!(r.final_best_mean, 2.0);
        assert_abs_diff_eq!(r.final_best_std, 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.std_over_range_pct, 10.0 * 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.mean_jaccard, 1.0 / 3.0, epsilon = 1e-15);
        let same = trajectory_report_with(&[traj(2.0, vec![4]), traj(2.0, vec![4])], 1.0, 50, 0).unwrap();
        assert_eq!((same.final_best_std, same.mean_jaccard), (0.0, 1.0));
        assert!(trajectory_report_with(&[traj(1.0, vec![])], 1.0, 10, 0).is_err());
        assert_eq!(median_lambda(&[1.0, 3.0, 10.0, 30.0]).unwrap(), 6.5);
    }
}
