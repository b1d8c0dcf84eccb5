#![allow(dead_code)]

//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numeric code; only parameter containers are shared.

use xchurn::nn::MlpParams;
use xchurn::rng::KeyedRng;

/// Plain-loop forward pass. Returns outputs and the sign pattern of every
/// hidden pre-activation (for kink detection).
pub fn oracle_forward(p: &MlpParams, x: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut pattern = Vec::new();
    let outs = x
        .iter()
        .map(|row| {
            let mut a = row.clone();
            for (li, l) in p.layers.iter().enumerate() {
                let (out, inp) = l.w.dim();
                let mut z = vec![0.0; out];
                for o in 0..out {
                    let mut s = l.b[o];
                    for i in 0..inp {
                        s += l.w[[o, i]] * a[i];
                    }
                    z[o] = s;
                }
                if li + 1 < p.layers.len() {
                    pattern.extend(z.iter().map(|&v| v > 0.0));
                    a = z.into_iter().map(|v| if v > 0.0 { v } else { 0.0 }).collect();
                } else {
                    a = z;
                }
            }
            a
        })
        .collect();
    (outs, pattern)
}

pub fn oracle_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::MIN, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

pub fn oracle_ce(out: &[Vec<f64>], y: &[usize]) -> f64 {
    out.iter()
        .zip(y)
        .map(|(z, &c)| -oracle_softmax(z)[c].ln())
        .sum::<f64>()
        / y.len() as f64
}

pub fn oracle_mse(out: &[Vec<f64>], t: &[f64]) -> f64 {
    out.iter().zip(t).map(|(z, v)| (z[0] - v).powi(2)).sum::<f64>() / t.len() as f64
}

/// ½[KL(p‖q) + KL(q‖p)] from its two KL terms.
pub fn oracle_symkl(p: &[f64], q: &[f64]) -> f64 {
    let kl = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * (x / y).ln()).sum::<f64>();
    0.5 * (kl(p, q) + kl(q, p))
}

pub fn oracle_mean_symkl(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| oracle_symkl(&oracle_softmax(x), &oracle_softmax(y)))
        .sum::<f64>()
        / a.len() as f64
}

pub fn oracle_mean_sqdiff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x[0] - y[0]).powi(2)).sum::<f64>() / a.len() as f64
}

pub fn random_matrix(rng: &mut KeyedRng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.normal()).collect()).collect()
}

pub fn to_array(x: &[Vec<f64>]) -> ndarray::Array2<f64> {
    ndarray::Array2::from_shape_fn((x.len(), x[0].len()), |(i, j)| x[i][j])
}

/// Result of comparing an analytic gradient to central differences.
#[derive(Debug, Default, Clone, Copy)]
pub struct FdReport {
    pub max_rel: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
}

impl FdReport {
    pub fn merge(&mut self, o: FdReport) {
        self.max_rel = self.max_rel.max(o.max_rel);
        self.checked += o.checked;
        self.skipped_kinks += o.skipped_kinks;
    }
}

/// Relative error with a floor on the denominator so that gradients that
/// are zero up to rounding do not dominate.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Central differences of `loss` around `p` along every coordinate.
/// Coordinates whose ±h evaluations change a ReLU sign pattern are skipped,
/// since the loss is not differentiable across a kink.
pub fn fd_check(
    p: &MlpParams,
    analytic: &MlpParams,
    h: f64,
    loss: impl Fn(&MlpParams) -> (f64, Vec<bool>),
) -> FdReport {
    let flat = p.to_flat();
    let g = analytic.to_flat();
    let mut rep = FdReport::default();
    let mut q = p.clone();
    for i in 0..flat.len() {
        let mut v = flat.clone();
        v[i] = flat[i] + h;
        q.set_flat(&v);
        let (lp, pp) = loss(&q);
        v[i] = flat[i] - h;
        q.set_flat(&v);
        let (lm, pm) = loss(&q);
        if pp != pm {
            rep.skipped_kinks += 1;
            continue;
        }
        let fd = (lp - lm) / (2.0 * h);
        rep.max_rel = rep.max_rel.max(rel_err(g[i], fd));
        rep.checked += 1;
    }
    rep
}

/// Brute-force argmax with the lowest index winning ties.
pub fn oracle_argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..row.len() {
        if row[j] > row[best] {
            best = j;
        }
    }
    best
}
