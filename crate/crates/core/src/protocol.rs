//! Study designs: paired method comparison, λ selection and sweeps, pool-size
//! scaling, triage convergence, entropy baseline, overlap spectrum and
//! compute accounting.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataio::{make_canonical_split, overlap_stats, Dataset, Split};
use crate::error::{Error, Result};
use crate::methods::{self, MethodKind, MethodSpec, OverlapMode};
use crate::metrics::{
    accuracy_per_seed, flip_recall_curve, mean, pairwise_churn, predictive_entropy, regression_churn,
    seed_pairs, FlipCurve, PairwiseChurn, PredictionSet, RegressionChurn,
};
use crate::nn::TrainConfig;
use crate::report::{replicate_means, ReportRow, MEAN_REPLICATE};
use crate::rng::KeyedRng;
use crate::stats::{paired_bootstrap_ci, CiReport, DEFAULT_RESAMPLES};

pub const DEFAULT_TEST_FRAC: f64 = 0.2;
pub const LAMBDA_GRID: [f64; 6] = [1.0, 3.0, 10.0, 30.0, 100.0, 300.0];
pub const REGRESSION_LAMBDA_GRID: [f64; 2] = [1.0, 3.0];
pub const LAMBDA_TOLERANCE: f64 = 0.02;
pub const REGRESSION_MAE_TOLERANCE: f64 = 0.04;
/// Accuracy drop, in pp, that marks a collapsed operating point.
pub const DAGGER_DROP_PP: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonConfig {
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    pub canonical_seeds: Vec<u64>,
    pub test_frac: f64,
    pub resamples: usize,
    pub ci_seed: u64,
}

impl ComparisonConfig {
    pub fn new(train: TrainConfig) -> Self {
        Self {
            train,
            seeds: (0..10).collect(),
            canonical_seeds: vec![0, 1, 2],
            test_frac: DEFAULT_TEST_FRAC,
            resamples: DEFAULT_RESAMPLES,
            ci_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.len() < 2 {
            return Err(Error::invalid("a comparison needs ≥ 2 train seeds"));
        }
        if self.canonical_seeds.is_empty() {
            return Err(Error::Empty("canonical seed list"));
        }
        let mut s = self.seeds.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != self.seeds.len() {
            return Err(Error::invalid("train seeds must be distinct"));
        }
        self.train.validate()
    }
}

/// A named split used as one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub label: String,
    pub split: Split,
}

pub fn canonical_replicates(ds: &Dataset, cfg: &ComparisonConfig) -> Result<Vec<Replicate>> {
    cfg.canonical_seeds
        .iter()
        .map(|&c| {
            Ok(Replicate {
                label: c.to_string(),
                split: make_canonical_split(ds, c, cfg.test_frac)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaStat {
    pub metric: String,
    /// Per pair for churn-type metrics, per seed for accuracy-type metrics.
    pub values: Vec<f64>,
    pub ci: CiReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCell {
    pub dataset: String,
    pub method: MethodSpec,
    pub replicate: String,
    pub predictions: PredictionSet,
    pub churn: Option<PairwiseChurn>,
    pub regression: Option<RegressionChurn>,
    /// Accuracy per seed, or MAE per seed for regression.
    pub quality_per_seed: Vec<f64>,
    /// Inter-head disagreement per seed, for two-headed methods.
    pub head_disagreement: Option<Vec<f64>>,
    /// Shared-unique fraction of the two training multisets per seed.
    pub sample_overlap: Option<Vec<f64>>,
    pub deltas: Vec<DeltaStat>,
}

impl ComparisonCell {
    pub fn delta(&self, metric: &str) -> Option<&DeltaStat> {
        self.deltas.iter().find(|d| d.metric == metric)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub dataset: String,
    pub n: usize,
    pub cells: Vec<ComparisonCell>,
    /// Per-replicate rows followed by across-replicate means.
    pub rows: Vec<ReportRow>,
}

impl Comparison {
    pub fn row(&self, method: &str, replicate: &str, metric: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.replicate == replicate && r.metric == metric)
    }

    pub fn mean_row(&self, method: &MethodSpec, metric: &str) -> Option<&ReportRow> {
        self.row(&method.to_string(), MEAN_REPLICATE, metric)
    }

    pub fn cells_of(&self, method: MethodSpec) -> impl Iterator<Item = &ComparisonCell> + '_ {
        self.cells.iter().filter(move |c| c.method == method)
    }
}

struct SeedRun {
    output: Array2<f64>,
    head: Option<f64>,
    overlap: Option<f64>,
}

fn run_one(ds: &Dataset, spec: &MethodSpec, pool: &[usize], test: &Array2<f64>, cfg: &TrainConfig, seed: u64) -> Result<SeedRun> {
    let p = methods::train(spec, ds, pool, cfg, seed)?;
    let output = methods::predict(&p, test)?;
    let two = p.members.len() == 2 && spec.kind == MethodKind::Twin;
    let head = if two { Some(methods::head_disagreement(&p, test)?) } else { None };
    let overlap = if p.samples.len() == 2 {
        Some(overlap_stats(&p.samples[0], &p.samples[1])?.shared_unique_frac)
    } else {
        None
    };
    Ok(SeedRun { output, head, overlap })
}

/// Methods in order with plain ERM first, added if absent.
fn with_erm(methods: &[MethodSpec]) -> Vec<MethodSpec> {
    let erm = MethodSpec::erm();
    let mut v = vec![erm];
    v.extend(methods.iter().filter(|m| **m != erm).copied());
    v
}

/// Train every method for every seed on every canonical split and compare
/// each against ERM on identical seed pairs.
pub fn run_comparison(ds: &Dataset, methods: &[MethodSpec], cfg: &ComparisonConfig) -> Result<Comparison> {
    let reps = canonical_replicates(ds, cfg)?;
    run_comparison_on(ds, methods, &reps, cfg)
}

pub fn run_comparison_on(
    ds: &Dataset,
    methods: &[MethodSpec],
    replicates: &[Replicate],
    cfg: &ComparisonConfig,
) -> Result<Comparison> {
    cfg.validate()?;
    if replicates.is_empty() {
        return Err(Error::Empty("replicate list"));
    }
    for m in methods {
        m.validate()?;
    }
    let all = with_erm(methods);
    let tests: Vec<Array2<f64>> = replicates.iter().map(|r| ds.rows(&r.split.id_test)).collect();
    let jobs: Vec<(usize, usize, usize)> = (0..replicates.len())
        .flat_map(|r| (0..all.len()).flat_map(move |m| (0..cfg.seeds.len()).map(move |s| (r, m, s))))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(r, m, s)| {
            let seed = cfg.seeds[s];
            run_one(ds, &all[m], &replicates[r].split.train_pool, &tests[r], &cfg.train, seed).map_err(|e| {
                e.in_cell(format!(
                    "dataset {} / {} / replicate {} / seed {seed}",
                    ds.name, all[m], replicates[r].label
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::with_capacity(replicates.len() * all.len());
    let mut rows = Vec::new();
    let per = cfg.seeds.len();
    for (r, rep) in replicates.iter().enumerate() {
        let ids = ds.ids_of(&rep.split.id_test);
        let mut rep_cells: Vec<ComparisonCell> = Vec::with_capacity(all.len());
        for (m, spec) in all.iter().enumerate() {
            let base = (r * all.len() + m) * per;
            let seed_runs = &runs[base..base + per];
            let outputs: Vec<Array2<f64>> = seed_runs.iter().map(|x| x.output.clone()).collect();
            let ps = PredictionSet::from_seed_outputs(ids.clone(), cfg.seeds.clone(), spec.to_string(), ds.task, &outputs)?;
            rep_cells.push(build_cell(ds, spec, &rep.label, ps, seed_runs, &rep.split.id_test)?);
        }
        let erm = rep_cells[0].clone();
        for cell in &mut rep_cells {
            cell.deltas = deltas_vs(&erm, cell, cfg)?;
            rows.extend(cell_rows(ds, cell, cfg)?);
        }
        cells.extend(rep_cells);
    }
    let means = replicate_means(&rows);
    rows.extend(means);
    Ok(Comparison {
        dataset: ds.name.clone(),
        n: ds.len(),
        cells,
        rows,
    })
}

fn build_cell(
    ds: &Dataset,
    spec: &MethodSpec,
    replicate: &str,
    ps: PredictionSet,
    runs: &[SeedRun],
    test_rows: &[usize],
) -> Result<ComparisonCell> {
    let (churn, regression, quality) = if ds.task.is_classification() {
        let labels = ds.labels_of(test_rows);
        (Some(pairwise_churn(&ps)?), None, accuracy_per_seed(&ps, &labels)?)
    } else {
        let rc = regression_churn(&ps, &ds.targets_of(test_rows))?;
        let q = rc.mae_per_seed.clone();
        (None, Some(rc), q)
    };
    let collect = |f: fn(&SeedRun) -> Option<f64>| runs.iter().map(f).collect::<Option<Vec<f64>>>();
    Ok(ComparisonCell {
        dataset: ds.name.clone(),
        method: *spec,
        replicate: replicate.into(),
        predictions: ps,
        churn,
        regression,
        quality_per_seed: quality,
        head_disagreement: collect(|r| r.head),
        sample_overlap: collect(|r| r.overlap),
        deltas: Vec::new(),
    })
}

fn per_pair_churn(cell: &ComparisonCell) -> Vec<f64> {
    match (&cell.churn, &cell.regression) {
        (Some(c), _) => c.churn.clone(),
        (None, Some(r)) => r.per_pair.clone(),
        _ => Vec::new(),
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn deltas_vs(erm: &ComparisonCell, cell: &ComparisonCell, cfg: &ComparisonConfig) -> Result<Vec<DeltaStat>> {
    let mut out = Vec::new();
    let mut push = |metric: &str, values: Vec<f64>| -> Result<()> {
        let ci = paired_bootstrap_ci(&values, cfg.resamples, cfg.ci_seed)?;
        out.push(DeltaStat {
            metric: metric.into(),
            values,
            ci,
        });
        Ok(())
    };
    push("delta_churn", diff(&per_pair_churn(cell), &per_pair_churn(erm)))?;
    if let (Some(c), Some(e)) = (&cell.churn, &erm.churn) {
        push("delta_symkl", diff(&c.symkl, &e.symkl))?;
        push("delta_acc", diff(&cell.quality_per_seed, &erm.quality_per_seed))?;
    } else {
        push("delta_mae", diff(&cell.quality_per_seed, &erm.quality_per_seed))?;
    }
    Ok(out)
}

fn cell_rows(ds: &Dataset, cell: &ComparisonCell, cfg: &ComparisonConfig) -> Result<Vec<ReportRow>> {
    let make = |metric: &str, ci: &CiReport| ReportRow {
        dataset: ds.name.clone(),
        n: ds.len(),
        method: cell.method.to_string(),
        replicate: cell.replicate.clone(),
        metric: metric.into(),
        mean: ci.mean,
        lo: ci.lo,
        hi: ci.hi,
    };
    let ci = |v: &[f64]| paired_bootstrap_ci(v, cfg.resamples, cfg.ci_seed);
    let mut rows = vec![make("churn", &ci(&per_pair_churn(cell))?)];
    if let Some(c) = &cell.churn {
        rows.push(make("symkl", &ci(&c.symkl)?));
        rows.push(make("acc", &ci(&cell.quality_per_seed)?));
        let q = &cell.quality_per_seed;
        let abs: Vec<f64> = seed_pairs(q.len()).iter().map(|&(a, b)| (q[a] - q[b]).abs()).collect();
        rows.push(make("abs_delta_acc", &ci(&abs)?));
    } else {
        rows.push(make("mae", &ci(&cell.quality_per_seed)?));
    }
    if let Some(h) = &cell.head_disagreement {
        rows.push(make("head_symkl", &ci(h)?));
    }
    if let Some(o) = &cell.sample_overlap {
        rows.push(make("sample_overlap", &ci(o)?));
    }
    for d in &cell.deltas {
        rows.push(make(&d.metric, &d.ci));
    }
    Ok(rows)
}

/// Largest λ whose accuracy is within `tolerance` of ERM; `None` if none qualifies.
pub fn select_lambda(sweep: &[(f64, f64)], erm_acc: f64, tolerance: f64) -> Option<f64> {
    sweep
        .iter()
        .filter(|(_, acc)| *acc >= erm_acc - tolerance)
        .map(|(l, _)| *l)
        .fold(None, |best: Option<f64>, l| Some(best.map_or(l, |b| b.max(l))))
}

/// Largest λ whose MAE is within `tolerance` of ERM's MAE.
pub fn select_lambda_regression(sweep: &[(f64, f64)], erm_mae: f64, tolerance: f64) -> Option<f64> {
    sweep
        .iter()
        .filter(|(_, mae)| *mae <= erm_mae + tolerance)
        .map(|(l, _)| *l)
        .fold(None, |best: Option<f64>, l| Some(best.map_or(l, |b| b.max(l))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    /// Accuracy (MAE for regression), replicate mean.
    pub quality: ReportRow,
    pub churn: ReportRow,
    pub symkl: Option<ReportRow>,
    pub head_symkl: Option<ReportRow>,
    pub delta_churn: ReportRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub erm_quality: f64,
    pub points: Vec<SweepPoint>,
    pub selected: Option<f64>,
    pub comparison: Comparison,
}

impl Sweep {
    pub fn point(&self, lambda: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.lambda == lambda)
    }
}

/// Twin pairs at each λ against ERM, with the λ chosen by the tolerance rule.
pub fn lambda_sweep(
    ds: &Dataset,
    lambdas: &[f64],
    overlap: OverlapMode,
    tolerance: f64,
    cfg: &ComparisonConfig,
) -> Result<Sweep> {
    if lambdas.is_empty() {
        return Err(Error::Empty("λ grid"));
    }
    let specs: Vec<MethodSpec> = lambdas.iter().map(|&l| MethodSpec::twin(l, overlap)).collect();
    let cmp = run_comparison(ds, &specs, cfg)?;
    let cls = ds.task.is_classification();
    let qname = if cls { "acc" } else { "mae" };
    let need = |spec: &MethodSpec, metric: &str| {
        cmp.mean_row(spec, metric)
            .cloned()
            .ok_or_else(|| Error::invalid(format!("missing {metric} row for {spec}")))
    };
    let erm_quality = need(&MethodSpec::erm(), qname)?.mean;
    let points = specs
        .iter()
        .map(|s| {
            Ok(SweepPoint {
                lambda: s.lambda,
                quality: need(s, qname)?,
                churn: need(s, "churn")?,
                symkl: cmp.mean_row(s, "symkl").cloned(),
                head_symkl: cmp.mean_row(s, "head_symkl").cloned(),
                delta_churn: need(s, "delta_churn")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.lambda > 0.0)
        .map(|p| (p.lambda, p.quality.mean))
        .collect();
    let selected = if cls {
        select_lambda(&pairs, erm_quality, tolerance)
    } else {
        select_lambda_regression(&pairs, erm_quality, tolerance)
    };
    Ok(Sweep {
        erm_quality,
        points,
        selected,
        comparison: cmp,
    })
}

/// Indices of points not dominated in (higher accuracy, lower churn).
pub fn pareto_front(points: &[(f64, f64)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let (ai, ci) = points[i];
            !points.iter().any(|&(a, c)| a >= ai && c <= ci && (a > ai || c < ci))
        })
        .collect()
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("log-log fit needs ≥ 2 matched points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("log-log fit needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("log-log fit needs distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub m: usize,
    pub churn: f64,
    pub symkl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NScaling {
    pub points: Vec<ScalingPoint>,
    pub symkl_slope: f64,
    pub churn_slope: Option<f64>,
}

/// ERM churn on nested training pools: the first `M` rows of the canonical
/// training order, tested on the fixed id-test.
pub fn n_scaling(ds: &Dataset, m_grid: &[usize], cfg: &ComparisonConfig) -> Result<NScaling> {
    cfg.validate()?;
    if !ds.task.is_classification() {
        return Err(Error::TaskMismatch("pool-size scaling measures classification churn".into()));
    }
    let split = make_canonical_split(ds, cfg.canonical_seeds[0], cfg.test_frac)?;
    if let Some(&m) = m_grid.iter().find(|&&m| m > split.train_pool.len() || m == 0) {
        return Err(Error::invalid(format!(
            "M={m} outside 1..={} of the training pool",
            split.train_pool.len()
        )));
    }
    let test = ds.rows(&split.id_test);
    let ids = ds.ids_of(&split.id_test);
    let jobs: Vec<(usize, u64)> = m_grid
        .iter()
        .flat_map(|&m| cfg.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let outs = jobs
        .par_iter()
        .map(|&(m, s)| {
            let p = methods::train_erm(ds, &split.train_pool[..m], &cfg.train, s)
                .map_err(|e| e.in_cell(format!("M={m} seed {s}")))?;
            methods::predict(&p, &test)
        })
        .collect::<Result<Vec<_>>>()?;
    let per = cfg.seeds.len();
    let points = m_grid
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let ps = PredictionSet::from_seed_outputs(ids.clone(), cfg.seeds.clone(), "erm", ds.task, &outs[i * per..(i + 1) * per])?;
            let pc = pairwise_churn(&ps)?;
            Ok(ScalingPoint {
                m,
                churn: pc.mean_churn(),
                symkl: pc.mean_symkl(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ms: Vec<f64> = points.iter().map(|p| p.m as f64).collect();
    let sk: Vec<f64> = points.iter().map(|p| p.symkl).collect();
    let ch: Vec<f64> = points.iter().map(|p| p.churn).collect();
    Ok(NScaling {
        symkl_slope: loglog_slope(&ms, &sk)?,
        churn_slope: loglog_slope(&ms, &ch).ok(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriageRow {
    pub k: usize,
    pub mean_recall: f64,
    pub recalls: Vec<f64>,
}

/// Recall at `review_frac` of gold flip-mass (from all seeds) when examples
/// are ranked by churn measured on random subsets of `k` seeds.
pub fn triage_convergence(
    ps: &PredictionSet,
    subset_sizes: &[usize],
    n_subsets: usize,
    review_frac: f64,
    seed: u64,
) -> Result<Vec<TriageRow>> {
    let total = ps.n_seeds();
    if let Some(&k) = subset_sizes.iter().find(|&&k| k > total || k < 2) {
        return Err(Error::invalid(format!("subset size {k} outside 2..={total}")));
    }
    if n_subsets == 0 {
        return Err(Error::invalid("need ≥ 1 subset"));
    }
    let gold = pairwise_churn(ps)?.flip_mass;
    subset_sizes
        .iter()
        .map(|&k| {
            let subsets: Vec<Vec<usize>> = if k == total {
                vec![(0..total).collect()]
            } else {
                (0..n_subsets)
                    .map(|j| {
                        let mut s = KeyedRng::new("triage", &[seed, k as u64, j as u64]).sample_distinct(total, k);
                        s.sort_unstable();
                        s
                    })
                    .collect()
            };
            let recalls = subsets
                .iter()
                .map(|sub| {
                    let score = pairwise_churn(&ps.select_seeds(sub))?.per_example;
                    Ok(flip_recall_curve(&score, &gold, &ps.ids)?.recall_at(review_frac))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(TriageRow {
                k,
                mean_recall: mean(&recalls),
                recalls,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyVsChurn {
    pub churn: FlipCurve,
    pub entropy: FlipCurve,
}

/// Flip-predictor comparison: disagreement of one extra pair of models
/// versus the predictive entropy of a single model, both scored against
/// the gold flip-mass of `gold`.
pub fn entropy_vs_churn(gold: &PredictionSet, pair: &PredictionSet, single: ArrayView2<f64>) -> Result<EntropyVsChurn> {
    if gold.values.dim().2 != 2 {
        return Err(Error::TaskMismatch("entropy baseline is for binary classification".into()));
    }
    if pair.ids != gold.ids || pair.n_seeds() != 2 {
        return Err(Error::invalid("churn pair must be two seeds on the gold id sequence"));
    }
    if single.nrows() != gold.n_examples() {
        return Err(Error::DimensionMismatch {
            expected: gold.n_examples(),
            got: single.nrows(),
            context: "entropy predictions vs gold examples",
        });
    }
    let mass = pairwise_churn(gold)?.flip_mass;
    let churn_score = pairwise_churn(pair)?.per_example;
    let ent: Vec<f64> = single.rows().into_iter().map(|r| predictive_entropy(&r.to_vec())).collect();
    Ok(EntropyVsChurn {
        churn: flip_recall_curve(&churn_score, &mass, &gold.ids)?,
        entropy: flip_recall_curve(&ent, &mass, &gold.ids)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapRow {
    pub mode: OverlapMode,
    pub measured_overlap: f64,
    pub delta_churn: ReportRow,
    pub delta_acc: ReportRow,
    /// Accuracy drop beyond `DAGGER_DROP_PP`.
    pub dagger: bool,
}

pub fn is_dagger(delta_acc: f64) -> bool {
    -100.0 * delta_acc > DAGGER_DROP_PP
}

/// Twin training at one λ under each loader-overlap mode, against ERM.
pub fn overlap_spectrum(ds: &Dataset, lambda: f64, modes: &[OverlapMode], cfg: &ComparisonConfig) -> Result<Vec<OverlapRow>> {
    if !ds.task.is_classification() {
        return Err(Error::TaskMismatch("overlap spectrum reports accuracy".into()));
    }
    let specs: Vec<MethodSpec> = modes.iter().map(|&m| MethodSpec::twin(lambda, m)).collect();
    let cmp = run_comparison(ds, &specs, cfg)?;
    specs
        .iter()
        .map(|s| {
            let get = |metric: &str| {
                cmp.mean_row(s, metric)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("missing {metric} row for {s}")))
            };
            let delta_acc = get("delta_acc")?;
            Ok(OverlapRow {
                mode: s.overlap,
                measured_overlap: get("sample_overlap")?.mean,
                delta_churn: get("delta_churn")?,
                dagger: is_dagger(delta_acc.mean),
                delta_acc,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Footprint {
    pub method: String,
    pub train_fwd: String,
    pub train_bwd: String,
    pub test_models: String,
    pub wallclock: String,
}

/// Per-step training and test cost in units of one ERM step.
pub fn compute_footprint(spec: &MethodSpec) -> Footprint {
    let row = |m: String, f: String, b: String, t: String, w: &str| Footprint {
        method: m,
        train_fwd: f,
        train_bwd: b,
        test_models: t,
        wallclock: w.into(),
    };
    let k = spec.k;
    match spec.kind {
        MethodKind::Erm => row("ERM".into(), "1".into(), "1".into(), "1".into(), "1×"),
        MethodKind::Swa => row("SWA".into(), "1".into(), "1".into(), "1".into(), "1×"),
        MethodKind::McDropout => row(
            format!("MC dropout T={}", spec.t),
            "1".into(),
            "1".into(),
            format!("1 ({} passes)", spec.t),
            "1×",
        ),
        MethodKind::DeepEnsemble => row(
            format!("Deep ensemble K={k}"),
            k.to_string(),
            k.to_string(),
            k.to_string(),
            &format!("{k}× (sequential)"),
        ),
        MethodKind::Bagging => row(
            format!("Bagging K={k}"),
            k.to_string(),
            k.to_string(),
            k.to_string(),
            &format!("{k}× (sequential)"),
        ),
        MethodKind::Twin => row(
            "Twin-bootstrap (K=2, joint)".into(),
            "4".into(),
            "1 (joint)".into(),
            "2".into(),
            "~2×",
        ),
    }
}

/// The standard accounting rows: ERM, deep ensemble K=5, bagging K=2 and K=5, twin.
pub fn standard_footprint() -> Vec<Footprint> {
    [
        MethodSpec::erm(),
        MethodSpec::deep_ensemble(5),
        MethodSpec::bagging(2),
        MethodSpec::bagging(5),
        MethodSpec::twin(300.0, OverlapMode::Bootstrap),
    ]
    .iter()
    .map(compute_footprint)
    .collect()
}

pub fn footprint_markdown(rows: &[Footprint]) -> String {
    let mut s = String::from("| Method | Train fwd/step | Train bwd/step | Test models | Wall-clock vs. ERM |\n");
    s.push_str("|---|:-:|:-:|:-:|:-:|\n");
    for r in rows {
        s.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            r.method, r.train_fwd, r.train_bwd, r.test_models, r.wallclock
        ));
    }
    s
}

pub fn footprint_csv(rows: &[Footprint]) -> String {
    let mut s = String::from("method,train_fwd,train_bwd,test_models,wallclock\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method, r.train_fwd, r.train_bwd, r.test_models, r.wallclock
        ));
    }
    s
}
