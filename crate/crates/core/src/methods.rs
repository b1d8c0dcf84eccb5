//! Training procedures and their inference rules.

use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, s, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataio::{draw_bootstrap, sample_from_indices, BootstrapSample, Dataset, TaskKind};
use crate::error::{Error, Result};
use crate::nn::{
    backward, clip_global_norm, consistency_and_grads, forward, forward_cached, init_mlp,
    loss_and_grad, optimizer_step, pass_dropout_key, softmax_rows, swa_update, train_dropout_key,
    Dropout, LossSpec, MlpParams, OptimizerKind, OptimizerState, SwaAccumulator, TrainConfig,
};
use crate::rng::{member_seed, KeyedRng};

/// Default number of MC dropout passes.
pub const DEFAULT_MC_PASSES: usize = 20;
/// Dropout rate used by MC dropout when the config leaves it at zero.
pub const DEFAULT_MC_DROPOUT_P: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Erm,
    Swa,
    McDropout,
    DeepEnsemble,
    Bagging,
    Twin,
}

impl MethodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::Erm => "erm",
            MethodKind::Swa => "swa",
            MethodKind::McDropout => "mc_dropout",
            MethodKind::DeepEnsemble => "deep_ensemble",
            MethodKind::Bagging => "bagging",
            MethodKind::Twin => "twin",
        }
    }
}

/// How the two twin loaders relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMode {
    /// A random 50/50 partition of the pool, no replacement.
    Disjoint,
    /// Two independent bootstraps.
    Bootstrap,
    /// One bootstrap fed to both heads.
    Shared,
}

impl OverlapMode {
    pub const ALL: [OverlapMode; 3] = [OverlapMode::Disjoint, OverlapMode::Bootstrap, OverlapMode::Shared];

    pub fn as_str(self) -> &'static str {
        match self {
            OverlapMode::Disjoint => "disjoint",
            OverlapMode::Bootstrap => "bootstrap",
            OverlapMode::Shared => "shared",
        }
    }
}

impl FromStr for OverlapMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disjoint" => Ok(OverlapMode::Disjoint),
            "bootstrap" => Ok(OverlapMode::Bootstrap),
            "shared" => Ok(OverlapMode::Shared),
            o => Err(Error::invalid(format!("unknown overlap mode `{o}`"))),
        }
    }
}

/// A method and its method-specific knobs.
///
/// String form: `erm`, `swa`, `mc_dropout[:T[:optimizer]]`,
/// `deep_ensemble:K`, `bagging:K`, `twin:λ[:mode]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub kind: MethodKind,
    pub k: usize,
    pub t: usize,
    pub lambda: f64,
    pub overlap: OverlapMode,
    /// MC dropout trains with SGD unless this says otherwise.
    pub optimizer: Option<OptimizerKind>,
}

impl MethodSpec {
    fn base(kind: MethodKind) -> Self {
        Self {
            kind,
            k: 1,
            t: DEFAULT_MC_PASSES,
            lambda: 0.0,
            overlap: OverlapMode::Bootstrap,
            optimizer: None,
        }
    }

    pub fn erm() -> Self {
        Self::base(MethodKind::Erm)
    }

    pub fn swa() -> Self {
        Self::base(MethodKind::Swa)
    }

    pub fn mc_dropout(t: usize) -> Self {
        Self {
            t,
            ..Self::base(MethodKind::McDropout)
        }
    }

    pub fn deep_ensemble(k: usize) -> Self {
        Self {
            k,
            ..Self::base(MethodKind::DeepEnsemble)
        }
    }

    pub fn bagging(k: usize) -> Self {
        Self {
            k,
            ..Self::base(MethodKind::Bagging)
        }
    }

    pub fn twin(lambda: f64, overlap: OverlapMode) -> Self {
        Self {
            k: 2,
            lambda,
            overlap,
            ..Self::base(MethodKind::Twin)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.t == 0 {
            return Err(Error::invalid(format!("{self}: K and T must be ≥ 1")));
        }
        if self.kind == MethodKind::DeepEnsemble && self.k < 2 {
            return Err(Error::invalid("deep_ensemble needs K ≥ 2"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("{self}: λ must be finite and ≥ 0")));
        }
        Ok(())
    }

    /// Number of parameter sets the trained predictor holds.
    pub fn n_members(&self) -> usize {
        match self.kind {
            MethodKind::Erm | MethodKind::Swa | MethodKind::McDropout => 1,
            MethodKind::DeepEnsemble | MethodKind::Bagging => self.k,
            MethodKind::Twin => 2,
        }
    }

    /// The training config this method actually runs with.
    pub fn resolve_config(&self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        match self.kind {
            MethodKind::McDropout => {
                if cfg.dropout_p == 0.0 {
                    cfg.dropout_p = DEFAULT_MC_DROPOUT_P;
                }
                cfg.optimizer = self.optimizer.unwrap_or(OptimizerKind::Sgd);
            }
            _ => {
                cfg.dropout_p = 0.0;
                if let Some(o) = self.optimizer {
                    cfg.optimizer = o;
                }
            }
        }
        cfg
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            MethodKind::Erm | MethodKind::Swa => f.write_str(self.kind.as_str()),
            MethodKind::McDropout => {
                write!(f, "mc_dropout:{}", self.t)?;
                match self.optimizer {
                    Some(o) => write!(f, ":{o}"),
                    None => Ok(()),
                }
            }
            MethodKind::DeepEnsemble | MethodKind::Bagging => {
                write!(f, "{}:{}", self.kind.as_str(), self.k)
            }
            MethodKind::Twin => {
                write!(f, "twin:{}", self.lambda)?;
                if self.overlap != OverlapMode::Bootstrap {
                    write!(f, ":{}", self.overlap.as_str())?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize, what: &str| -> Result<usize> {
            parts
                .get(i)
                .ok_or_else(|| Error::invalid(format!("method `{s}` needs {what}")))?
                .parse()
                .map_err(|_| Error::invalid(format!("method `{s}`: bad {what}")))
        };
        let too_many = |n: usize| -> Result<()> {
            if parts.len() > n {
                Err(Error::invalid(format!("method `{s}`: too many fields")))
            } else {
                Ok(())
            }
        };
        let spec = match parts[0] {
            "erm" => {
                too_many(1)?;
                Self::erm()
            }
            "swa" => {
                too_many(1)?;
                Self::swa()
            }
            "mc_dropout" => {
                too_many(3)?;
                let t = if parts.len() > 1 { num(1, "T")? } else { DEFAULT_MC_PASSES };
                let mut spec = Self::mc_dropout(t);
                if let Some(o) = parts.get(2) {
                    spec.optimizer = Some(o.parse()?);
                }
                spec
            }
            "deep_ensemble" => {
                too_many(2)?;
                Self::deep_ensemble(if parts.len() > 1 { num(1, "K")? } else { 5 })
            }
            "bagging" => {
                too_many(2)?;
                Self::bagging(if parts.len() > 1 { num(1, "K")? } else { 5 })
            }
            "twin" => {
                too_many(3)?;
                let lambda: f64 = parts
                    .get(1)
                    .ok_or_else(|| Error::invalid(format!("method `{s}` needs λ")))?
                    .parse()
                    .map_err(|_| Error::invalid(format!("method `{s}`: bad λ")))?;
                let mode = match parts.get(2) {
                    Some(m) => m.parse()?,
                    None => OverlapMode::Bootstrap,
                };
                Self::twin(lambda, mode)
            }
            other => return Err(Error::invalid(format!("unknown method `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InferenceRule {
    /// One deterministic pass.
    Single,
    /// Mean of member outputs (softmax for classification).
    MemberMean,
    /// Mean of `passes` dropout-active passes keyed by `(train_seed, pass)`.
    DropoutMean { passes: usize, p: f64, train_seed: u64 },
    /// Mean of the two twin heads.
    HeadMean,
}

/// A trained method instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub spec: MethodSpec,
    pub members: Vec<MlpParams>,
    pub rule: InferenceRule,
    pub task: TaskKind,
    /// The training multisets, one per loader.
    pub samples: Vec<BootstrapSample>,
}

impl Predictor {
    pub fn method_tag(&self) -> String {
        self.spec.to_string()
    }
}

fn member_output(p: &MlpParams, x: &Array2<f64>, task: TaskKind, dropout: Option<Dropout>) -> Result<Array2<f64>> {
    let out = forward(p, x, dropout)?;
    Ok(if task.is_classification() {
        softmax_rows(&out)
    } else {
        out
    })
}

/// Apply the predictor's inference rule: `n × C` probabilities or `n × 1` values.
pub fn predict(pred: &Predictor, x: &Array2<f64>) -> Result<Array2<f64>> {
    let task = pred.task;
    match pred.rule {
        InferenceRule::Single => member_output(&pred.members[0], x, task, None),
        InferenceRule::MemberMean | InferenceRule::HeadMean => {
            // Running mean, so identical members reproduce their output exactly.
            let mut acc = member_output(&pred.members[0], x, task, None)?;
            for (i, m) in pred.members.iter().enumerate().skip(1) {
                let out = member_output(m, x, task, None)?;
                let k = 1.0 / (i + 1) as f64;
                acc.zip_mut_with(&out, |a, &o| *a += (o - *a) * k);
            }
            Ok(acc)
        }
        InferenceRule::DropoutMean {
            passes,
            p,
            train_seed,
        } => {
            let net = &pred.members[0];
            let pass = |t| member_output(net, x, task, Some(Dropout::new(p, pass_dropout_key(train_seed, t))));
            let mut acc = pass(0)?;
            for t in 1..passes {
                acc += &pass(t)?;
            }
            acc.mapv_inplace(|v| v / passes as f64);
            Ok(acc)
        }
    }
}

/// Per-head outputs of a multi-member predictor (softmax rows for classification).
pub fn predict_members(pred: &Predictor, x: &Array2<f64>) -> Result<Vec<Array2<f64>>> {
    pred.members
        .iter()
        .map(|m| member_output(m, x, pred.task, None))
        .collect()
}

fn check_pool(ds: &Dataset, pool: &[usize], cfg: &TrainConfig) -> Result<()> {
    if pool.is_empty() {
        return Err(Error::Empty("training pool"));
    }
    if let Some(&bad) = pool.iter().find(|&&i| i >= ds.len()) {
        return Err(Error::invalid(format!("pool index {bad} outside dataset of {} rows", ds.len())));
    }
    if cfg.task != ds.task {
        return Err(Error::TaskMismatch(format!(
            "config task {} vs dataset task {}",
            cfg.task, ds.task
        )));
    }
    cfg.validate()
}

/// Fixed-order batch source over one training multiset.
struct Loader<'a> {
    ds: &'a Dataset,
    sample: &'a [usize],
    shuffle_key: u64,
    batch: usize,
    order: Vec<usize>,
}

impl<'a> Loader<'a> {
    fn new(ds: &'a Dataset, sample: &'a [usize], shuffle_key: u64, batch: usize) -> Self {
        Self {
            ds,
            sample,
            shuffle_key,
            batch,
            order: Vec::new(),
        }
    }

    fn n_batches(&self) -> usize {
        self.sample.len().div_ceil(self.batch)
    }

    fn start_epoch(&mut self, epoch: usize) {
        self.order = self.sample.to_vec();
        KeyedRng::new("shuffle", &[self.shuffle_key, epoch as u64]).shuffle(&mut self.order);
    }

    /// Batch `b`; indices past the end wrap around to the start of the epoch order.
    fn batch(&self, b: usize) -> Batch {
        let nb = self.n_batches();
        let b = b % nb;
        let lo = b * self.batch;
        let hi = (lo + self.batch).min(self.order.len());
        let rows = &self.order[lo..hi];
        Batch {
            x: self.ds.rows(rows),
            labels: if self.ds.task.is_classification() {
                self.ds.labels_of(rows)
            } else {
                Vec::new()
            },
            targets: self.ds.targets_of(rows),
        }
    }
}

struct Batch {
    x: Array2<f64>,
    labels: Vec<usize>,
    targets: Vec<f64>,
}

fn supervised_spec<'a>(task: TaskKind, b: &'a Batch) -> LossSpec<'a> {
    if task.is_classification() {
        LossSpec::CrossEntropy { labels: &b.labels }
    } else {
        LossSpec::Mse { targets: &b.targets }
    }
}

/// Train one network on one multiset.
fn train_network(
    ds: &Dataset,
    sample: &[usize],
    cfg: &TrainConfig,
    key: u64,
    mut swa: Option<&mut SwaAccumulator>,
) -> Result<MlpParams> {
    let mut params = init_mlp(&cfg.layer_dims(ds.n_features()), key)?;
    let mut opt = OptimizerState::new(&params);
    let mut loader = Loader::new(ds, sample, key, cfg.batch_size);
    let swa_start = cfg.epochs.div_ceil(2);
    for epoch in 0..cfg.epochs {
        loader.start_epoch(epoch);
        for step in 0..loader.n_batches() {
            let batch = loader.batch(step);
            let dropout = (cfg.dropout_p > 0.0)
                .then(|| Dropout::new(cfg.dropout_p, train_dropout_key(key, epoch, step)));
            let cache = forward_cached(&params, &batch.x, dropout)?;
            let (_, dout) = loss_and_grad(supervised_spec(cfg.task, &batch), &cache.output)?;
            let mut grads = backward(&params, &cache, &dout)?;
            clip_global_norm(&mut grads, cfg.clip_norm);
            optimizer_step(&mut opt, &mut params, &grads, cfg)?;
        }
        if epoch >= swa_start {
            if let Some(acc) = swa.as_deref_mut() {
                swa_update(acc, &params)?;
            }
        }
    }
    Ok(params)
}

/// Single network on one bootstrap keyed by `member_seed(train_seed, 0)`.
pub fn train_erm(ds: &Dataset, pool: &[usize], cfg: &TrainConfig, train_seed: u64) -> Result<Predictor> {
    let spec = MethodSpec::erm();
    let cfg = spec.resolve_config(cfg);
    check_pool(ds, pool, &cfg)?;
    let key = member_seed(train_seed, 0);
    let sample = draw_bootstrap(pool, key)?;
    let net = train_network(ds, &sample.indices, &cfg, key, None)?;
    Ok(Predictor {
        spec,
        members: vec![net],
        rule: InferenceRule::Single,
        task: ds.task,
        samples: vec![sample],
    })
}

/// ERM trajectory whose weights are replaced by the mean of end-of-epoch
/// snapshots from the last `⌊epochs/2⌋` epochs.
pub fn train_swa(ds: &Dataset, pool: &[usize], cfg: &TrainConfig, train_seed: u64) -> Result<Predictor> {
    let spec = MethodSpec::swa();
    let cfg = spec.resolve_config(cfg);
    check_pool(ds, pool, &cfg)?;
    if cfg.epochs < 2 {
        return Err(Error::invalid("SWA needs at least 2 epochs"));
    }
    let key = member_seed(train_seed, 0);
    let sample = draw_bootstrap(pool, key)?;
    let mut acc = SwaAccumulator::new(&init_mlp(&cfg.layer_dims(ds.n_features()), key)?);
    train_network(ds, &sample.indices, &cfg, key, Some(&mut acc))?;
    Ok(Predictor {
        spec,
        members: vec![acc.mean],
        rule: InferenceRule::Single,
        task: ds.task,
        samples: vec![sample],
    })
}

/// Number of SWA snapshots taken for `epochs` epochs.
pub fn swa_snapshot_count(epochs: usize) -> usize {
    epochs - epochs.div_ceil(2)
}

pub fn train_mc_dropout(
    ds: &Dataset,
    pool: &[usize],
    cfg: &TrainConfig,
    train_seed: u64,
    spec: MethodSpec,
) -> Result<Predictor> {
    let cfg = spec.resolve_config(cfg);
    check_pool(ds, pool, &cfg)?;
    if cfg.dropout_p <= 0.0 {
        return Err(Error::invalid("MC dropout needs dropout_p > 0"));
    }
    let key = member_seed(train_seed, 0);
    let sample = draw_bootstrap(pool, key)?;
    let net = train_network(ds, &sample.indices, &cfg, key, None)?;
    Ok(Predictor {
        spec,
        members: vec![net],
        rule: InferenceRule::DropoutMean {
            passes: spec.t,
            p: cfg.dropout_p,
            train_seed,
        },
        task: ds.task,
        samples: vec![sample],
    })
}

/// K members on one shared bootstrap, differing only in init and shuffle keys.
pub fn train_deep_ensemble(
    ds: &Dataset,
    pool: &[usize],
    cfg: &TrainConfig,
    train_seed: u64,
    k: usize,
) -> Result<Predictor> {
    deep_ensemble_impl(ds, pool, cfg, train_seed, k, false)
}

/// Deep ensemble whose members all reuse member 0's keys; equals a single
/// model. Exposed for identity checks.
pub fn train_deep_ensemble_same_keys(
    ds: &Dataset,
    pool: &[usize],
    cfg: &TrainConfig,
    train_seed: u64,
    k: usize,
) -> Result<Predictor> {
    deep_ensemble_impl(ds, pool, cfg, train_seed, k, true)
}

fn deep_ensemble_impl(
    ds: &Dataset,
    pool: &[usize],
    cfg: &TrainConfig,
    train_seed: u64,
    k: usize,
    same_keys: bool,
) -> Result<Predictor> {
    let spec = MethodSpec::deep_ensemble(k);
    spec.validate()?;
    let cfg = spec.resolve_config(cfg);
    check_pool(ds, pool, &cfg)?;
    let sample = draw_bootstrap(pool, member_seed(train_seed, 0))?;
    let members = (0..k)
        .map(|m| {
            let key = member_seed(train_seed, if same_keys { 0 } else { m as u64 });
            train_network(ds, &sample.indices, &cfg, key, None)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Predictor {
        spec,
        members,
        rule: InferenceRule::MemberMean,
        task: ds.task,
        samples: vec![sample; k],
    })
}

/// K members, each on its own bootstrap keyed by `member_seed(train_seed, m)`.
pub fn train_bagging(
    ds: &Dataset,
    pool: &[usize],
    cfg: &TrainConfig,
    train_seed: u64,
    k: usize,
) -> Result<Predictor> {
    let spec = MethodSpec::bagging(k);
    spec.validate()?;
    let cfg = spec.resolve_config(cfg);
    check_pool(ds, pool, &cfg)?;
    let mut members = Vec::with_capacity(k);
    let mut samples = Vec::with_capacity(k);
    for m in 0..k {
        let key = member_seed(train_seed, m as u64);
        let sample = draw_bootstrap(pool, key)?;
        members.push(train_network(ds, &sample.indices, &cfg, key, None)?);
        samples.push(sample);
    }
    Ok(Predictor {
        spec,
        members,
        rule: if k == 1 {
            InferenceRule::Single
        } else {
            InferenceRule::MemberMean
        },
        task: ds.task,
        samples,
    })
}

/// The two loader multisets for a twin training.
pub fn twin_samples(pool: &[usize], train_seed: u64, mode: OverlapMode) -> Result<(BootstrapSample, BootstrapSample)> {
    let (ka, kb) = (member_seed(train_seed, 0), member_seed(train_seed, 1));
    match mode {
        OverlapMode::Bootstrap => Ok((draw_bootstrap(pool, ka)?, draw_bootstrap(pool, kb)?)),
        OverlapMode::Shared => {
            let a = draw_bootstrap(pool, ka)?;
            Ok((a.clone(), a))
        }
        OverlapMode::Disjoint => {
            if pool.len() < 2 {
                return Err(Error::invalid("disjoint twin mode needs a pool of at least 2"));
            }
            let mut order = pool.to_vec();
            KeyedRng::new("disjoint", &[train_seed]).shuffle(&mut order);
            let half = order.len().div_ceil(2);
            Ok((
                sample_from_indices(pool, ka, order[..half].to_vec()),
                sample_from_indices(pool, kb, order[half..].to_vec()),
            ))
        }
    }
}

/// Two networks trained jointly with a λ-weighted consistency penalty.
///
/// Per step: `L = sup_A(B_A) + sup_B(B_B) + λ·½[cons(B_A) + cons(B_B)]`
/// where `sup` is cross-entropy (MSE for regression) and `cons` is the mean
/// symmetric KL between the heads' softmax outputs (MSE between the heads'
/// outputs for regression). Gradients are clipped per network. At λ = 0 the
/// consistency term is skipped and each head trains exactly as a bagging
/// member with the same keys.
pub fn train_twin(
    ds: &Dataset,
    pool: &[usize],
    cfg: &TrainConfig,
    train_seed: u64,
    lambda: f64,
    mode: OverlapMode,
) -> Result<Predictor> {
    let spec = MethodSpec::twin(lambda, mode);
    spec.validate()?;
    let cfg = spec.resolve_config(cfg);
    check_pool(ds, pool, &cfg)?;
    let (sa, sb) = twin_samples(pool, train_seed, mode)?;
    let (ka, kb) = (member_seed(train_seed, 0), member_seed(train_seed, 1));
    let dims = cfg.layer_dims(ds.n_features());
    let mut pa = init_mlp(&dims, ka)?;
    let mut pb = init_mlp(&dims, kb)?;
    let mut oa = OptimizerState::new(&pa);
    let mut ob = OptimizerState::new(&pb);
    let mut la = Loader::new(ds, &sa.indices, ka, cfg.batch_size);
    let mut lb = Loader::new(ds, &sb.indices, kb, cfg.batch_size);
    let steps = la.n_batches().max(lb.n_batches());
    if mode != OverlapMode::Disjoint {
        assert_eq!(la.n_batches(), lb.n_batches(), "twin loaders must zip without truncation");
    }
    let regression = !cfg.task.is_classification();
    let half = 0.5 * lambda;
    for epoch in 0..cfg.epochs {
        la.start_epoch(epoch);
        lb.start_epoch(epoch);
        for step in 0..steps {
            let ba = la.batch(step);
            let bb = lb.batch(step);
            let (mut ga, mut gb) = if lambda == 0.0 {
                let ca = forward_cached(&pa, &ba.x, None)?;
                let cb = forward_cached(&pb, &bb.x, None)?;
                let (_, da) = loss_and_grad(supervised_spec(cfg.task, &ba), &ca.output)?;
                let (_, db) = loss_and_grad(supervised_spec(cfg.task, &bb), &cb.output)?;
                (backward(&pa, &ca, &da)?, backward(&pb, &cb, &db)?)
            } else {
                // Each head sees both batches stacked: rows [B_A; B_B].
                let x = concatenate![Axis(0), ba.x, bb.x];
                let na = ba.x.nrows();
                let ca = forward_cached(&pa, &x, None)?;
                let cb = forward_cached(&pb, &x, None)?;
                let (a_on_a, a_on_b) = (ca.output.slice(s![..na, ..]), ca.output.slice(s![na.., ..]));
                let (b_on_a, b_on_b) = (cb.output.slice(s![..na, ..]), cb.output.slice(s![na.., ..]));
                let (_, sup_a) = loss_and_grad(supervised_spec(cfg.task, &ba), &a_on_a.to_owned())?;
                let (_, sup_b) = loss_and_grad(supervised_spec(cfg.task, &bb), &b_on_b.to_owned())?;
                let (_, ca1, cb1) = consistency_and_grads(&a_on_a.to_owned(), &b_on_a.to_owned(), regression);
                let (_, ca2, cb2) = consistency_and_grads(&a_on_b.to_owned(), &b_on_b.to_owned(), regression);
                let da = concatenate![Axis(0), sup_a + ca1 * half, ca2 * half];
                let db = concatenate![Axis(0), cb1 * half, sup_b + cb2 * half];
                (backward(&pa, &ca, &da)?, backward(&pb, &cb, &db)?)
            };
            clip_global_norm(&mut ga, cfg.clip_norm);
            clip_global_norm(&mut gb, cfg.clip_norm);
            optimizer_step(&mut oa, &mut pa, &ga, &cfg)?;
            optimizer_step(&mut ob, &mut pb, &gb, &cfg)?;
        }
    }
    Ok(Predictor {
        spec,
        members: vec![pa, pb],
        rule: InferenceRule::HeadMean,
        task: ds.task,
        samples: vec![sa, sb],
    })
}

/// The joint twin objective and its gradients for one pair of batches,
/// evaluated head by head. Used by gradient checks.
#[allow(clippy::too_many_arguments)]
pub fn twin_joint_loss(
    pa: &MlpParams,
    pb: &MlpParams,
    xa: &Array2<f64>,
    ya: LossSpec<'_>,
    xb: &Array2<f64>,
    yb: LossSpec<'_>,
    lambda: f64,
    regression: bool,
) -> Result<(f64, MlpParams, MlpParams)> {
    let c_aa = forward_cached(pa, xa, None)?;
    let c_ba = forward_cached(pb, xa, None)?;
    let c_ab = forward_cached(pa, xb, None)?;
    let c_bb = forward_cached(pb, xb, None)?;
    let (la, sa) = loss_and_grad(ya, &c_aa.output)?;
    let (lb, sb) = loss_and_grad(yb, &c_bb.output)?;
    let (k1, ga1, gb1) = consistency_and_grads(&c_aa.output, &c_ba.output, regression);
    let (k2, ga2, gb2) = consistency_and_grads(&c_ab.output, &c_bb.output, regression);
    let h = 0.5 * lambda;
    let loss = la + lb + h * (k1 + k2);
    let mut grad_a = backward(pa, &c_aa, &(sa + ga1 * h))?;
    grad_a.add_scaled(1.0, &backward(pa, &c_ab, &(ga2 * h))?);
    let mut grad_b = backward(pb, &c_bb, &(sb + gb2 * h))?;
    grad_b.add_scaled(1.0, &backward(pb, &c_ba, &(gb1 * h))?);
    Ok((loss, grad_a, grad_b))
}

/// Train any method from its spec.
pub fn train(spec: &MethodSpec, ds: &Dataset, pool: &[usize], cfg: &TrainConfig, train_seed: u64) -> Result<Predictor> {
    spec.validate()?;
    let mut p = match spec.kind {
        MethodKind::Erm => train_erm(ds, pool, cfg, train_seed),
        MethodKind::Swa => train_swa(ds, pool, cfg, train_seed),
        MethodKind::McDropout => train_mc_dropout(ds, pool, cfg, train_seed, *spec),
        MethodKind::DeepEnsemble => train_deep_ensemble(ds, pool, cfg, train_seed, spec.k),
        MethodKind::Bagging => train_bagging(ds, pool, cfg, train_seed, spec.k),
        MethodKind::Twin => train_twin(ds, pool, cfg, train_seed, spec.lambda, spec.overlap),
    }?;
    p.spec = *spec;
    Ok(p)
}

/// Mean inter-head disagreement of a two-member predictor on `x`:
/// symmetric KL for classification, mean absolute difference for regression.
pub fn head_disagreement(pred: &Predictor, x: &Array2<f64>) -> Result<f64> {
    if pred.members.len() != 2 {
        return Err(Error::invalid("head disagreement needs exactly two members"));
    }
    let outs = predict_members(pred, x)?;
    Ok(if pred.task.is_classification() {
        crate::nn::mean_symkl_rows(&outs[0], &outs[1])
    } else {
        (&outs[0] - &outs[1]).mapv(f64::abs).mean().unwrap_or(0.0)
    })
}
