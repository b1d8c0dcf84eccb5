use std::fmt;
use std::str::FromStr;

use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::mlp::MlpParams;
use crate::dataio::TaskKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    AdamW,
    Sgd,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::AdamW => "adamw",
            OptimizerKind::Sgd => "sgd",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adamw" => Ok(OptimizerKind::AdamW),
            "sgd" => Ok(OptimizerKind::Sgd),
            o => Err(Error::invalid(format!("unknown optimizer `{o}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_dims: Vec<usize>,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub clip_norm: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout_p: f64,
    pub optimizer: OptimizerKind,
    pub task: TaskKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dims: vec![256, 256],
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            clip_norm: 1.0,
            batch_size: 64,
            epochs: 30,
            dropout_p: 0.0,
            optimizer: OptimizerKind::AdamW,
            task: TaskKind::BinaryClassification,
        }
    }
}

impl TrainConfig {
    pub fn for_task(task: TaskKind) -> Self {
        Self {
            task,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::invalid("weight_decay must be ≥ 0"));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::invalid("clip_norm must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::invalid("dropout_p must lie in [0, 1)"));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::invalid("hidden layer widths must be positive"));
        }
        Ok(())
    }

    /// Full layer widths for an input of width `d`.
    pub fn layer_dims(&self, d: usize) -> Vec<usize> {
        let mut dims = vec![d];
        dims.extend(&self.hidden_dims);
        dims.push(self.task.output_dim());
        dims
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: MlpParams,
    pub v: MlpParams,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimizerState {
    pub fn new(like: &MlpParams) -> Self {
        Self {
            m: like.zeros_like(),
            v: like.zeros_like(),
            step: 0,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
        }
    }
}

/// Rescale `grads` in place so that `‖g‖₂ ≤ max_norm`; returns the norm before clipping.
pub fn clip_global_norm(grads: &mut MlpParams, max_norm: f64) -> f64 {
    let norm = grads.sq_norm().sqrt();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

/// One AdamW (decoupled decay) or plain SGD update, in place.
pub fn optimizer_step(
    state: &mut OptimizerState,
    params: &mut MlpParams,
    grads: &MlpParams,
    cfg: &TrainConfig,
) -> Result<()> {
    params.check_same_shape(grads, "gradients vs parameters")?;
    state.m.check_same_shape(params, "optimizer state vs parameters")?;
    let lr = cfg.learning_rate;
    state.step += 1;
    match cfg.optimizer {
        OptimizerKind::Sgd => params.add_scaled(-lr, grads),
        OptimizerKind::AdamW => {
            let decay = 1.0 - lr * cfg.weight_decay;
            let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
            let c1 = 1.0 - b1.powi(state.step as i32);
            let c2 = 1.0 - b2.powi(state.step as i32);
            for (((p, g), m), v) in params
                .layers
                .iter_mut()
                .zip(&grads.layers)
                .zip(state.m.layers.iter_mut())
                .zip(state.v.layers.iter_mut())
            {
                let upd = |p: &mut f64, &g: &f64, m: &mut f64, v: &mut f64| {
                    *p *= decay;
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                };
                Zip::from(&mut p.w)
                    .and(&g.w)
                    .and(&mut m.w)
                    .and(&mut v.w)
                    .for_each(upd);
                Zip::from(&mut p.b)
                    .and(&g.b)
                    .and(&mut m.b)
                    .and(&mut v.b)
                    .for_each(upd);
            }
        }
    }
    Ok(())
}

/// Running mean of parameter snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct SwaAccumulator {
    pub mean: MlpParams,
    pub count: usize,
}

impl SwaAccumulator {
    pub fn new(like: &MlpParams) -> Self {
        Self {
            mean: like.zeros_like(),
            count: 0,
        }
    }
}

/// `mean ← mean + (p − mean)/(count + 1)`.
pub fn swa_update(acc: &mut SwaAccumulator, p: &MlpParams) -> Result<()> {
    acc.mean.check_same_shape(p, "snapshot vs running mean")?;
    let k = 1.0 / (acc.count + 1) as f64;
    for (m, l) in acc.mean.layers.iter_mut().zip(&p.layers) {
        Zip::from(&mut m.w).and(&l.w).for_each(|m, &x| *m += (x - *m) * k);
        Zip::from(&mut m.b).and(&l.b).for_each(|m, &x| *m += (x - *m) * k);
    }
    acc.count += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::mlp::init_mlp;
    use approx::assert_abs_diff_eq;

    fn filled(dims: &[usize], v: f64) -> MlpParams {
        let mut p = MlpParams::zeros(dims);
        let n = p.n_params();
        p.set_flat(&vec![v; n]);
        p
    }

    #[test]
    fn clipping() {
        let n_entries = MlpParams::zeros(&[1, 2, 1]).n_params() as f64;
        let mut small = filled(&[1, 2, 1], 0.5 / n_entries.sqrt());
        let before = small.clone();
        clip_global_norm(&mut small, 1.0);
        assert_eq!(small, before);

        let mut big = filled(&[1, 2, 1], 2.0 / n_entries.sqrt());
        let norm = clip_global_norm(&mut big, 1.0);
        assert_abs_diff_eq!(norm, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(big.sq_norm().sqrt(), 1.0, epsilon = 1e-12);

        let mut zero = filled(&[1, 2, 1], 0.0);
        clip_global_norm(&mut zero, 1.0);
        assert_eq!(zero.sq_norm(), 0.0);
    }

    #[test]
    fn adamw_zero_grad_is_pure_decay() {
        let cfg = TrainConfig::default();
        let mut p = init_mlp(&[3, 4, 2], 1).unwrap();
        let before = p.clone();
        let mut st = OptimizerState::new(&p);
        let zero = p.zeros_like();
        optimizer_step(&mut st, &mut p, &zero, &cfg).unwrap();
        let f = 1.0 - cfg.learning_rate * cfg.weight_decay;
        for (a, b) in p.to_flat().iter().zip(before.to_flat()) {
            assert_eq!(*a, b * f);
        }
    }

    #[test]
    fn sgd_unit_gradient() {
        let cfg = TrainConfig {
            optimizer: OptimizerKind::Sgd,
            ..TrainConfig::default()
        };
        let mut p = filled(&[1, 1], 0.0);
        let mut st = OptimizerState::new(&p);
        optimizer_step(&mut st, &mut p, &filled(&[1, 1], 1.0), &cfg).unwrap();
        assert_abs_diff_eq!(p.layers[0].w[[0, 0]], -1e-3, epsilon = 1e-18);
    }

    #[test]
    fn adamw_first_step_is_signed_lr() {
        let cfg = TrainConfig {
            weight_decay: 0.0,
            ..TrainConfig::default()
        };
        let mut p = filled(&[1, 1], 0.0);
        let mut g = filled(&[1, 1], 0.0);
        g.layers[0].w[[0, 0]] = 0.37;
        g.layers[0].b[0] = -2.5;
        let mut st = OptimizerState::new(&p);
        optimizer_step(&mut st, &mut p, &g, &cfg).unwrap();
        // m̂ = g, v̂ = g², so the step is −lr·g/(|g| + ε)
        assert_abs_diff_eq!(p.layers[0].w[[0, 0]], -1e-3, epsilon = 1e-10);
        assert_abs_diff_eq!(p.layers[0].b[0], 1e-3, epsilon = 1e-10);
    }

    #[test]
    fn swa_means() {
        let a = init_mlp(&[2, 3, 1], 1).unwrap();
        let b = init_mlp(&[2, 3, 1], 2).unwrap();
        let mut acc = SwaAccumulator::new(&a);
        swa_update(&mut acc, &a).unwrap();
        assert_eq!(acc.mean, a);
        swa_update(&mut acc, &a).unwrap();
        assert_eq!(acc.mean, a);
        assert_eq!(acc.count, 2);

        let mut acc = SwaAccumulator::new(&a);
        swa_update(&mut acc, &a).unwrap();
        swa_update(&mut acc, &b).unwrap();
        for ((m, x), y) in acc.mean.to_flat().iter().zip(a.to_flat()).zip(b.to_flat()) {
            assert_abs_diff_eq!(*m, (x + y) / 2.0, epsilon = 1e-15);
        }
        let wrong = init_mlp(&[2, 4, 1], 1).unwrap();
        assert!(swa_update(&mut acc, &wrong).is_err());
    }
}
