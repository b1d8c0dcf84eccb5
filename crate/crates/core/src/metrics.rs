//! Churn and stability measures over per-seed predictions.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use ndarray::{Array2, Array3, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataio::{TaskKind, N_CLASSES};
use crate::error::{Error, Result};
use crate::nn::loss_symkl;

/// Predictions of several retrainings on one fixed test set.
///
/// `values` is `seeds × examples × width`: class probabilities for
/// classification, a single column for regression.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub ids: Vec<String>,
    pub seeds: Vec<u64>,
    pub method: String,
    pub task: TaskKind,
    pub values: Array3<f64>,
}

const SIMPLEX_TOL: f64 = 1e-6;

impl PredictionSet {
    pub fn new(
        ids: Vec<String>,
        seeds: Vec<u64>,
        method: impl Into<String>,
        task: TaskKind,
        values: Array3<f64>,
    ) -> Result<Self> {
        let (s, n, w) = values.dim();
        if s != seeds.len() || n != ids.len() {
            return Err(Error::DimensionMismatch {
                expected: seeds.len() * ids.len(),
                got: s * n,
                context: "prediction tensor vs seeds × ids",
            });
        }
        let width = task.output_dim();
        if w != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                got: w,
                context: "prediction width vs task",
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite prediction"));
        }
        if task.is_classification() {
            for row in values.lanes(Axis(2)) {
                if (row.sum() - 1.0).abs() > SIMPLEX_TOL || row.iter().any(|&p| p < -SIMPLEX_TOL) {
                    return Err(Error::invalid("classification row is not on the simplex"));
                }
            }
        }
        Ok(Self {
            ids,
            seeds,
            method: method.into(),
            task,
            values,
        })
    }

    /// Stack per-seed `n × width` outputs.
    pub fn from_seed_outputs(
        ids: Vec<String>,
        seeds: Vec<u64>,
        method: impl Into<String>,
        task: TaskKind,
        outputs: &[Array2<f64>],
    ) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::Empty("per-seed outputs"));
        }
        let views: Vec<ArrayView2<f64>> = outputs.iter().map(|o| o.view()).collect();
        let values = ndarray::stack(Axis(0), &views)
            .map_err(|e| Error::invalid(format!("per-seed outputs differ in shape: {e}")))?;
        Self::new(ids, seeds, method, task, values)
    }

    pub fn n_seeds(&self) -> usize {
        self.values.dim().0
    }

    pub fn n_examples(&self) -> usize {
        self.values.dim().1
    }

    pub fn seed(&self, s: usize) -> ArrayView2<'_, f64> {
        self.values.index_axis(Axis(0), s)
    }

    /// Predicted classes of seed `s`.
    pub fn argmaxes(&self, s: usize) -> Vec<usize> {
        self.seed(s).rows().into_iter().map(argmax).collect()
    }

    /// Positive-class probability (or the regression value) of seed `s`.
    pub fn scores(&self, s: usize) -> Vec<f64> {
        let col = if self.task.is_classification() { 1 } else { 0 };
        self.seed(s).column(col).to_vec()
    }

    /// Restrict to the given seed positions.
    pub fn select_seeds(&self, positions: &[usize]) -> PredictionSet {
        PredictionSet {
            ids: self.ids.clone(),
            seeds: positions.iter().map(|&p| self.seeds[p]).collect(),
            method: self.method.clone(),
            task: self.task,
            values: self.values.select(Axis(0), positions),
        }
    }

    /// Restrict to the given example positions.
    pub fn select_examples(&self, rows: &[usize]) -> PredictionSet {
        PredictionSet {
            ids: rows.iter().map(|&r| self.ids[r].clone()).collect(),
            seeds: self.seeds.clone(),
            method: self.method.clone(),
            task: self.task,
            values: self.values.select(Axis(1), rows),
        }
    }

    /// `seed,id,p0,p1` (or `seed,id,yhat`) rows, seeds in order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,id");
        if self.task.is_classification() {
            for c in 0..N_CLASSES {
                let _ = write!(out, ",p{c}");
            }
        } else {
            out.push_str(",yhat");
        }
        out.push('\n');
        for (s, &seed) in self.seeds.iter().enumerate() {
            for (i, id) in self.ids.iter().enumerate() {
                let _ = write!(out, "{seed},{id}");
                for v in self.values.slice(ndarray::s![s, i, ..]) {
                    let _ = write!(out, ",{v:?}");
                }
                out.push('\n');
            }
        }
        out
    }

    /// Parse the CSV form. Every seed must list the same ids in the same order.
    pub fn from_csv(text: &str, method: impl Into<String>) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !crate::dataio::skip_line(l));
        let (_, header) = lines.next().ok_or(Error::Header {
            line: 1,
            msg: "empty prediction file".into(),
        })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let task = match cols.as_slice() {
            ["seed", "id", "yhat"] => TaskKind::Regression,
            ["seed", "id", "p0", "p1"] => TaskKind::BinaryClassification,
            _ => {
                return Err(Error::Header {
                    line: 1,
                    msg: format!("expected `seed,id,p0,p1` or `seed,id,yhat`, found `{header}`"),
                })
            }
        };
        let width = cols.len() - 2;
        let mut seeds: Vec<u64> = Vec::new();
        let mut ids: Vec<String> = Vec::new();
        let mut per_seed: Vec<Vec<f64>> = Vec::new();
        let mut cursor = 0usize;
        for (ln, row) in lines {
            let line = ln + 1;
            let f: Vec<&str> = row.split(',').map(str::trim).collect();
            if f.len() != cols.len() {
                return Err(Error::RowLength {
                    line,
                    expected: cols.len(),
                    found: f.len(),
                });
            }
            let seed: u64 = f[0].parse().map_err(|_| Error::NonNumeric {
                line,
                column: "seed".into(),
                value: f[0].into(),
            })?;
            if seeds.last() != Some(&seed) {
                if seeds.contains(&seed) {
                    return Err(Error::invalid(format!("line {line}: seed {seed} is not contiguous")));
                }
                if !seeds.is_empty() && cursor != ids.len() {
                    return Err(Error::invalid(format!("line {line}: seed block has wrong length")));
                }
                seeds.push(seed);
                per_seed.push(Vec::new());
                cursor = 0;
            }
            let id = f[1].to_string();
            if seeds.len() == 1 {
                ids.push(id);
            } else if ids.get(cursor) != Some(&id) {
                return Err(Error::invalid(format!(
                    "line {line}: id `{id}` out of order for seed {seed}"
                )));
            }
            cursor += 1;
            for (j, raw) in f[2..].iter().enumerate() {
                let v: f64 = raw.parse().map_err(|_| Error::NonNumeric {
                    line,
                    column: cols[j + 2].into(),
                    value: (*raw).into(),
                })?;
                per_seed.last_mut().unwrap().push(v);
            }
        }
        if seeds.is_empty() {
            return Err(Error::Empty("prediction file has no rows"));
        }
        if cursor != ids.len() {
            return Err(Error::invalid("last seed block has wrong length"));
        }
        let flat: Vec<f64> = per_seed.into_iter().flatten().collect();
        let values = Array3::from_shape_vec((seeds.len(), ids.len(), width), flat)
            .map_err(|e| Error::invalid(format!("prediction shape: {e}")))?;
        Self::new(ids, seeds, method, task, values)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

fn same_shape(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
            context: "paired prediction matrices",
        });
    }
    if a.nrows() == 0 {
        return Err(Error::Empty("prediction rows"));
    }
    Ok(())
}

/// Fraction of rows whose predicted class differs.
pub fn argmax_churn(pa: ArrayView2<f64>, pb: ArrayView2<f64>) -> Result<f64> {
    same_shape(&pa, &pb)?;
    let flips = pa
        .rows()
        .into_iter()
        .zip(pb.rows())
        .filter(|(a, b)| argmax(*a) != argmax(*b))
        .count();
    Ok(flips as f64 / pa.nrows() as f64)
}

/// Mean symmetric KL between corresponding probability rows.
pub fn symkl_disagreement(pa: ArrayView2<f64>, pb: ArrayView2<f64>) -> Result<f64> {
    same_shape(&pa, &pb)?;
    if pa.ncols() < 2 {
        return Err(Error::TaskMismatch("symmetric KL needs class probabilities".into()));
    }
    let total: f64 = pa
        .rows()
        .into_iter()
        .zip(pb.rows())
        .map(|(a, b)| loss_symkl(&a.to_vec(), &b.to_vec()))
        .sum();
    Ok(total / pa.nrows() as f64)
}

/// All unordered seed-position pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn seed_pairs(n_seeds: usize) -> Vec<(usize, usize)> {
    (0..n_seeds)
        .flat_map(|i| (i + 1..n_seeds).map(move |j| (i, j)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseChurn {
    pub pairs: Vec<(usize, usize)>,
    /// Argmax churn of each pair.
    pub churn: Vec<f64>,
    /// Mean symmetric KL of each pair.
    pub symkl: Vec<f64>,
    /// Per example: fraction of pairs that disagree.
    pub per_example: Vec<f64>,
    /// Per example: number of pairs that disagree.
    pub flip_mass: Vec<f64>,
}

impl PairwiseChurn {
    pub fn mean_churn(&self) -> f64 {
        mean(&self.churn)
    }

    pub fn mean_symkl(&self) -> f64 {
        mean(&self.symkl)
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn require_classification(ps: &PredictionSet) -> Result<()> {
    if !ps.task.is_classification() {
        return Err(Error::TaskMismatch(format!("{} predictions are regression", ps.method)));
    }
    Ok(())
}

/// Churn and symmetric KL over every unordered seed pair.
pub fn pairwise_churn(ps: &PredictionSet) -> Result<PairwiseChurn> {
    require_classification(ps)?;
    let s = ps.n_seeds();
    if s < 2 {
        return Err(Error::invalid(format!("pairwise churn needs ≥ 2 seeds, got {s}")));
    }
    let n = ps.n_examples();
    let classes: Vec<Vec<usize>> = (0..s).map(|k| ps.argmaxes(k)).collect();
    let pairs = seed_pairs(s);
    let mut churn = Vec::with_capacity(pairs.len());
    let mut symkl = Vec::with_capacity(pairs.len());
    let mut mass = vec![0.0; n];
    for &(a, b) in &pairs {
        let mut flips = 0usize;
        for i in 0..n {
            if classes[a][i] != classes[b][i] {
                flips += 1;
                mass[i] += 1.0;
            }
        }
        churn.push(flips as f64 / n as f64);
        symkl.push(symkl_disagreement(ps.seed(a), ps.seed(b))?);
    }
    let np = pairs.len() as f64;
    Ok(PairwiseChurn {
        per_example: mass.iter().map(|m| m / np).collect(),
        flip_mass: mass,
        pairs,
        churn,
        symkl,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerClassChurn {
    pub churn_y0: f64,
    pub churn_y1: f64,
    pub overall: f64,
}

/// Pairwise churn restricted to each true class.
pub fn per_class_churn(ps: &PredictionSet, labels: &[usize]) -> Result<PerClassChurn> {
    check_labels(ps, labels)?;
    let pc = pairwise_churn(ps)?;
    let subset_mean = |class: usize| -> Result<f64> {
        let vals: Vec<f64> = labels
            .iter()
            .zip(&pc.per_example)
            .filter(|(&y, _)| y == class)
            .map(|(_, &c)| c)
            .collect();
        if vals.is_empty() {
            return Err(Error::Undefined(format!("no test examples with y={class}")));
        }
        Ok(mean(&vals))
    };
    Ok(PerClassChurn {
        churn_y0: subset_mean(0)?,
        churn_y1: subset_mean(1)?,
        overall: pc.mean_churn(),
    })
}

fn check_labels(ps: &PredictionSet, labels: &[usize]) -> Result<()> {
    require_classification(ps)?;
    if labels.len() != ps.n_examples() {
        return Err(Error::DimensionMismatch {
            expected: ps.n_examples(),
            got: labels.len(),
            context: "labels vs test examples",
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= N_CLASSES) {
        return Err(Error::LabelOutOfRange {
            line: 0,
            value: bad.to_string(),
            n_classes: N_CLASSES,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMetric {
    Acc,
    Precision,
    Recall,
    F1,
    Ap,
}

impl AggregateMetric {
    pub const ALL: [AggregateMetric; 5] = [
        AggregateMetric::Acc,
        AggregateMetric::Precision,
        AggregateMetric::Recall,
        AggregateMetric::F1,
        AggregateMetric::Ap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AggregateMetric::Acc => "acc",
            AggregateMetric::Precision => "precision",
            AggregateMetric::Recall => "recall",
            AggregateMetric::F1 => "f1",
            AggregateMetric::Ap => "ap",
        }
    }
}

/// A metric value with a flag for an empty denominator (value then 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricValue {
    pub value: f64,
    pub undefined: bool,
}

impl MetricValue {
    fn ratio(num: usize, den: usize) -> Self {
        if den == 0 {
            Self {
                value: 0.0,
                undefined: true,
            }
        } else {
            Self {
                value: num as f64 / den as f64,
                undefined: false,
            }
        }
    }
}

pub fn accuracy(pred: &[usize], labels: &[usize]) -> f64 {
    let hits = pred.iter().zip(labels).filter(|(p, y)| p == y).count();
    hits as f64 / labels.len() as f64
}

fn confusion(pred: &[usize], labels: &[usize]) -> (usize, usize, usize) {
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for (&p, &y) in pred.iter().zip(labels) {
        match (p, y) {
            (1, 1) => tp += 1,
            (1, _) => fp += 1,
            (_, 1) => fn_ += 1,
            _ => {}
        }
    }
    (tp, fp, fn_)
}

pub fn precision(pred: &[usize], labels: &[usize]) -> MetricValue {
    let (tp, fp, _) = confusion(pred, labels);
    MetricValue::ratio(tp, tp + fp)
}

pub fn recall(pred: &[usize], labels: &[usize]) -> MetricValue {
    let (tp, _, fn_) = confusion(pred, labels);
    MetricValue::ratio(tp, tp + fn_)
}

pub fn f1(pred: &[usize], labels: &[usize]) -> MetricValue {
    let p = precision(pred, labels);
    let r = recall(pred, labels);
    if p.value + r.value == 0.0 {
        return MetricValue {
            value: 0.0,
            undefined: true,
        };
    }
    MetricValue {
        value: 2.0 * p.value * r.value / (p.value + r.value),
        undefined: p.undefined || r.undefined,
    }
}

/// Descending by score, ties by id ascending.
pub fn rank_by_score(scores: &[f64], ids: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    order
}

/// Non-interpolated average precision of a positive-class score ranking.
pub fn average_precision(scores: &[f64], labels: &[usize], ids: &[String]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 {
        return Err(Error::Undefined("average precision with no positive examples".into()));
    }
    let mut hits = 0usize;
    let mut total = 0.0;
    for (k, &i) in rank_by_score(scores, ids).iter().enumerate() {
        if labels[i] == 1 {
            hits += 1;
            total += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(total / n_pos as f64)
}

/// The value of `metric` for seed `s`.
pub fn seed_metric(ps: &PredictionSet, s: usize, labels: &[usize], metric: AggregateMetric) -> Result<MetricValue> {
    let pred = ps.argmaxes(s);
    Ok(match metric {
        AggregateMetric::Acc => MetricValue {
            value: accuracy(&pred, labels),
            undefined: false,
        },
        AggregateMetric::Precision => precision(&pred, labels),
        AggregateMetric::Recall => recall(&pred, labels),
        AggregateMetric::F1 => f1(&pred, labels),
        AggregateMetric::Ap => MetricValue {
            value: average_precision(&ps.scores(s), labels, &ps.ids)?,
            undefined: false,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Drift {
    pub metric: AggregateMetric,
    /// Mean |Δ| over pairs, in percentage points.
    pub mean_pp: f64,
    pub per_pair_pp: Vec<f64>,
    /// Number of seeds whose metric hit an empty denominator.
    pub undefined_seeds: usize,
}

/// Mean absolute per-pair difference of an aggregate metric, in pp.
pub fn aggregate_drift(ps: &PredictionSet, labels: &[usize], metric: AggregateMetric) -> Result<Drift> {
    check_labels(ps, labels)?;
    if ps.n_seeds() < 2 {
        return Err(Error::invalid("drift needs ≥ 2 seeds"));
    }
    let vals = (0..ps.n_seeds())
        .map(|s| seed_metric(ps, s, labels, metric))
        .collect::<Result<Vec<_>>>()?;
    let per_pair_pp: Vec<f64> = seed_pairs(ps.n_seeds())
        .into_iter()
        .map(|(a, b)| 100.0 * (vals[a].value - vals[b].value).abs())
        .collect();
    Ok(Drift {
        metric,
        mean_pp: mean(&per_pair_pp),
        per_pair_pp,
        undefined_seeds: vals.iter().filter(|v| v.undefined).count(),
    })
}

/// Accuracy of every seed.
pub fn accuracy_per_seed(ps: &PredictionSet, labels: &[usize]) -> Result<Vec<f64>> {
    check_labels(ps, labels)?;
    Ok((0..ps.n_seeds()).map(|s| accuracy(&ps.argmaxes(s), labels)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionChurn {
    /// Mean |f_A − f_B| over pairs and examples.
    pub churn: f64,
    pub per_pair: Vec<f64>,
    /// MAE averaged over seeds.
    pub mae: f64,
    pub mae_per_seed: Vec<f64>,
    /// `churn / mae`; infinite when the MAE is zero.
    pub ratio: f64,
}

pub fn regression_churn(ps: &PredictionSet, targets: &[f64]) -> Result<RegressionChurn> {
    if ps.task.is_classification() {
        return Err(Error::TaskMismatch("regression churn needs regression predictions".into()));
    }
    if targets.len() != ps.n_examples() {
        return Err(Error::DimensionMismatch {
            expected: ps.n_examples(),
            got: targets.len(),
            context: "targets vs test examples",
        });
    }
    if ps.n_seeds() < 2 {
        return Err(Error::invalid("regression churn needs ≥ 2 seeds"));
    }
    let preds: Vec<Vec<f64>> = (0..ps.n_seeds()).map(|s| ps.scores(s)).collect();
    let per_pair: Vec<f64> = seed_pairs(ps.n_seeds())
        .into_iter()
        .map(|(a, b)| mean(&preds[a].iter().zip(&preds[b]).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>()))
        .collect();
    let mae_per_seed: Vec<f64> = preds
        .iter()
        .map(|p| mean(&p.iter().zip(targets).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>()))
        .collect();
    let churn = mean(&per_pair);
    let mae = mean(&mae_per_seed);
    Ok(RegressionChurn {
        churn,
        per_pair,
        mae,
        mae_per_seed,
        ratio: if mae > 0.0 { churn / mae } else { f64::INFINITY },
    })
}

/// Positions of the top `k` examples by score (ties by id).
pub fn top_k(scores: &[f64], ids: &[String], k: usize) -> Result<Vec<usize>> {
    if k > scores.len() {
        return Err(Error::invalid(format!("K={k} exceeds test size {}", scores.len())));
    }
    let mut r = rank_by_score(scores, ids);
    r.truncate(k);
    Ok(r)
}

/// `|A ∩ B| / |A ∪ B|`; 1 for two empty sets.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let sa: HashSet<usize> = a.iter().copied().collect();
    let sb: HashSet<usize> = b.iter().copied().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

pub fn topk_jaccard(scores_a: &[f64], scores_b: &[f64], ids: &[String], k: usize) -> Result<f64> {
    Ok(jaccard(&top_k(scores_a, ids, k)?, &top_k(scores_b, ids, k)?))
}

/// Fraction of the top `k` that are positives.
pub fn hit_rate(scores: &[f64], labels: &[usize], ids: &[String], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("hit rate needs K ≥ 1"));
    }
    let top = top_k(scores, ids, k)?;
    Ok(top.iter().filter(|&&i| labels[i] == 1).count() as f64 / k as f64)
}

/// `−Σ p ln p` with clamped logs.
pub fn predictive_entropy(p: &[f64]) -> f64 {
    -p.iter()
        .map(|&v| if v > 0.0 { v * v.max(crate::nn::PROB_FLOOR).ln() } else { 0.0 })
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlipCurve {
    /// `(reviewed fraction, captured flip-mass fraction)`, starting at `(0, 0)`.
    pub points: Vec<(f64, f64)>,
    pub recall_at_10: f64,
    pub recall_at_30: f64,
    /// Area under precision(coverage), precision = captured mass / reviewed count.
    pub aupc_raw: f64,
    /// `aupc_raw` divided by the area of the perfect ranking.
    pub aupc_norm: f64,
}

impl FlipCurve {
    /// Captured fraction after reviewing `⌈q·n⌉` examples.
    pub fn recall_at(&self, q: f64) -> f64 {
        let n = self.points.len() - 1;
        let k = ((q * n as f64) - 1e-9).ceil().clamp(0.0, n as f64) as usize;
        self.points[k].1
    }
}

fn aupc(ranked_mass: &[f64]) -> f64 {
    let n = ranked_mass.len() as f64;
    let mut cum = 0.0;
    let mut prev: Option<f64> = None;
    let mut area = 0.0;
    for (i, m) in ranked_mass.iter().enumerate() {
        cum += m;
        let prec = cum / (i + 1) as f64;
        area += match prev {
            // Precision is held at its first value over [0, 1/n].
            None => prec / n,
            Some(p) => 0.5 * (p + prec) / n,
        };
        prev = Some(prec);
    }
    area
}

/// Flip-mass captured as examples are reviewed in descending score order.
pub fn flip_recall_curve(scores: &[f64], flip_mass: &[f64], ids: &[String]) -> Result<FlipCurve> {
    if scores.len() != flip_mass.len() || scores.len() != ids.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: flip_mass.len(),
            context: "scores vs flip mass vs ids",
        });
    }
    if flip_mass.iter().any(|&m| m < 0.0 || !m.is_finite()) {
        return Err(Error::invalid("flip mass must be finite and ≥ 0"));
    }
    let total: f64 = flip_mass.iter().sum();
    if total <= 0.0 {
        return Err(Error::Undefined("total flip mass is zero".into()));
    }
    let n = scores.len();
    let order = rank_by_score(scores, ids);
    let ranked: Vec<f64> = order.iter().map(|&i| flip_mass[i]).collect();
    let mut points = Vec::with_capacity(n + 1);
    points.push((0.0, 0.0));
    let mut cum = 0.0;
    for (i, m) in ranked.iter().enumerate() {
        cum += m;
        points.push(((i + 1) as f64 / n as f64, (cum / total).min(1.0)));
    }
    points[n].1 = 1.0;
    let mut perfect = flip_mass.to_vec();
    perfect.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let raw = aupc(&ranked) / total;
    let best = aupc(&perfect) / total;
    let mut curve = FlipCurve {
        points,
        recall_at_10: 0.0,
        recall_at_30: 0.0,
        aupc_raw: raw,
        aupc_norm: raw / best,
    };
    curve.recall_at_10 = curve.recall_at(0.1);
    curve.recall_at_30 = curve.recall_at(0.3);
    Ok(curve)
}

/// Map ids to positions.
pub fn id_index(ids: &[String]) -> HashMap<&str, usize> {
    ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
}
