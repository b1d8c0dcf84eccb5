use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

/// Probabilities are clamped here before any logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

#[inline]
fn clamped_ln(p: f64) -> f64 {
    p.max(PROB_FLOOR).ln()
}

/// Max-subtracted softmax of one logit vector.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|z| (z - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    out
}

fn check_len(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            expected,
            got,
            context,
        });
    }
    Ok(())
}

fn check_labels(labels: &[usize], n_classes: usize) -> Result<()> {
    if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::LabelOutOfRange {
            line: 0,
            value: bad.to_string(),
            n_classes,
        });
    }
    Ok(())
}

/// Mean cross-entropy of probability rows against class labels.
pub fn loss_ce(probs: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    check_len(probs.nrows(), labels.len(), "labels vs probability rows")?;
    check_labels(labels, probs.ncols())?;
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -clamped_ln(probs[[i, y]]))
        .sum();
    Ok(total / labels.len() as f64)
}

/// Mean squared error.
pub fn loss_mse(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check_len(preds.len(), targets.len(), "targets vs predictions")?;
    let total: f64 = preds.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(total / preds.len() as f64)
}

/// `KL(p‖q)` in nats with clamped logs.
pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| a * (clamped_ln(a) - clamped_ln(b)))
        .sum()
}

/// `½[KL(p‖q) + KL(q‖p)]` in nats.
pub fn loss_symkl(p: &[f64], q: &[f64]) -> f64 {
    // Written as one symmetric sum so that swapping the arguments is exact.
    let s: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| (a - b) * (clamped_ln(a) - clamped_ln(b)))
        .sum();
    (0.5 * s).max(0.0)
}

fn symkl_view(p: ArrayView1<f64>, q: ArrayView1<f64>) -> f64 {
    let s: f64 = p
        .iter()
        .zip(q.iter())
        .map(|(&a, &b)| (a - b) * (clamped_ln(a) - clamped_ln(b)))
        .sum();
    (0.5 * s).max(0.0)
}

/// Mean symmetric KL between corresponding probability rows.
pub fn mean_symkl_rows(p: &Array2<f64>, q: &Array2<f64>) -> f64 {
    let n = p.nrows();
    p.axis_iter(Axis(0))
        .zip(q.axis_iter(Axis(0)))
        .map(|(a, b)| symkl_view(a, b))
        .sum::<f64>()
        / n as f64
}

/// Gradient of `symKL(softmax(z), q)` with respect to `z`, `q` held fixed.
fn symkl_logit_grad(p: ArrayView1<f64>, q: ArrayView1<f64>, scale: f64, out: &mut [f64]) {
    let lp: Vec<f64> = p.iter().map(|&v| clamped_ln(v)).collect();
    let lq: Vec<f64> = q.iter().map(|&v| clamped_ln(v)).collect();
    let kl_pq: f64 = (0..p.len()).map(|j| p[j] * (lp[j] - lq[j])).sum();
    for j in 0..p.len() {
        out[j] = scale * 0.5 * (p[j] * (lp[j] - lq[j] - kl_pq) + p[j] - q[j]);
    }
}

/// A differentiable objective on network outputs.
#[derive(Debug, Clone, Copy)]
pub enum LossSpec<'a> {
    /// Mean cross-entropy of the softmax of the outputs.
    CrossEntropy { labels: &'a [usize] },
    /// Mean squared error of the single output column.
    Mse { targets: &'a [f64] },
    /// Mean symmetric KL to a frozen partner's probability rows.
    SymKlToPartner { partner: &'a Array2<f64> },
    /// Mean squared difference to a frozen partner's outputs.
    MseToPartner { partner: &'a [f64] },
}

/// Loss value and `∂L/∂outputs`.
pub fn loss_and_grad(spec: LossSpec<'_>, outputs: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
    let n = outputs.nrows();
    let nf = n as f64;
    match spec {
        LossSpec::CrossEntropy { labels } => {
            let probs = softmax_rows(outputs);
            let loss = loss_ce(&probs, labels)?;
            let mut g = probs;
            for (i, &y) in labels.iter().enumerate() {
                g[[i, y]] -= 1.0;
            }
            g.mapv_inplace(|v| v / nf);
            Ok((loss, g))
        }
        LossSpec::Mse { targets } => {
            check_len(1, outputs.ncols(), "regression output width")?;
            let preds = outputs.column(0).to_vec();
            let loss = loss_mse(&preds, targets)?;
            let g = Array2::from_shape_fn((n, 1), |(i, _)| 2.0 * (preds[i] - targets[i]) / nf);
            Ok((loss, g))
        }
        LossSpec::SymKlToPartner { partner } => {
            if partner.dim() != outputs.dim() {
                return Err(Error::DimensionMismatch {
                    expected: outputs.len(),
                    got: partner.len(),
                    context: "partner probabilities vs outputs",
                });
            }
            let probs = softmax_rows(outputs);
            let loss = mean_symkl_rows(&probs, partner);
            let mut g = Array2::zeros(outputs.dim());
            for i in 0..n {
                let row = g.row_mut(i).into_slice().unwrap();
                symkl_logit_grad(probs.row(i), partner.row(i), 1.0 / nf, row);
            }
            Ok((loss, g))
        }
        LossSpec::MseToPartner { partner } => {
            check_len(1, outputs.ncols(), "regression output width")?;
            let preds = outputs.column(0).to_vec();
            let loss = loss_mse(&preds, partner)?;
            let g = Array2::from_shape_fn((n, 1), |(i, _)| 2.0 * (preds[i] - partner[i]) / nf);
            Ok((loss, g))
        }
    }
}

/// Consistency term between two heads evaluated on the same batch, with
/// gradients for both: `symKL` on softmax outputs, or MSE for regression.
pub fn consistency_and_grads(
    out_a: &Array2<f64>,
    out_b: &Array2<f64>,
    regression: bool,
) -> (f64, Array2<f64>, Array2<f64>) {
    let n = out_a.nrows() as f64;
    if regression {
        let diff = out_a - out_b;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        let ga = diff.mapv(|d| 2.0 * d / n);
        let gb = ga.mapv(|v| -v);
        return (loss, ga, gb);
    }
    let pa = softmax_rows(out_a);
    let pb = softmax_rows(out_b);
    let loss = mean_symkl_rows(&pa, &pb);
    let mut ga = Array2::zeros(out_a.dim());
    let mut gb = Array2::zeros(out_b.dim());
    for i in 0..out_a.nrows() {
        symkl_logit_grad(pa.row(i), pb.row(i), 1.0 / n, ga.row_mut(i).into_slice().unwrap());
        symkl_logit_grad(pb.row(i), pa.row(i), 1.0 / n, gb.row_mut(i).into_slice().unwrap());
    }
    (loss, ga, gb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn softmax_basics() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        let a = softmax(&[0.3, -1.2, 2.0]);
        let b = softmax(&[100.3, 98.8, 102.0]);
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        let big = softmax(&[1000.0, 0.0]);
        assert!(big.iter().all(|v| v.is_finite()));
        assert_abs_diff_eq!(big[0], 1.0, epsilon = 1e-300);
        assert_abs_diff_eq!(a.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ce_values() {
        let uniform = array![[0.5, 0.5], [0.5, 0.5]];
        assert_abs_diff_eq!(loss_ce(&uniform, &[0, 1]).unwrap(), 2f64.ln(), epsilon = 1e-15);
        let p = array![[0.9, 0.1]];
        // -ln 0.9 evaluated by hand: 0.105360515657826...
        assert_abs_diff_eq!(loss_ce(&p, &[0]).unwrap(), 0.105_360_515_657_826_3, epsilon = 1e-12);
        assert!(matches!(loss_ce(&p, &[2]), Err(Error::LabelOutOfRange { .. })));
        assert!(loss_ce(&p, &[0, 1]).is_err());
    }

    #[test]
    fn mse_zero_at_targets() {
        assert_eq!(loss_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(loss_mse(&[1.0, 3.0], &[0.0, 1.0]).unwrap(), 2.5);
    }

    #[test]
    fn symkl_values() {
        let p = [0.5, 0.5];
        let q = [0.25, 0.75];
        assert_eq!(loss_symkl(&p, &p), 0.0);
        // ½ Σ (p−q)(ln p − ln q) = ½[0.25 ln 2 − 0.25 ln 1.5] = 0.137327...
        let oracle = 0.5 * (0.25 * 2f64.ln() - 0.25 * (2.0f64 / 3.0).ln());
        assert_abs_diff_eq!(loss_symkl(&p, &q), oracle, epsilon = 1e-15);
        // Independent evaluation gives 0.137327, about 1.3e-4 above the quoted 0.1372.
        assert_abs_diff_eq!(loss_symkl(&p, &q), 0.137_326_536_083_513_7, epsilon = 1e-15);
        assert_abs_diff_eq!(loss_symkl(&p, &q), 0.1372, epsilon = 2e-4);
        assert_eq!(loss_symkl(&p, &q), loss_symkl(&q, &p));
        assert_abs_diff_eq!(
            loss_symkl(&p, &q),
            0.5 * (kl(&p, &q) + kl(&q, &p)),
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_net_bias_gradient_is_mean_residual() {
        let logits = Array2::zeros((4, 2));
        let labels = [0, 1, 1, 0];
        let (_, g) = loss_and_grad(LossSpec::CrossEntropy { labels: &labels }, &logits).unwrap();
        let gb = g.sum_axis(Axis(0));
        // (0.5 − 1)·2/4 + 0.5·2/4 = 0 for each class on a balanced batch
        assert_abs_diff_eq!(gb[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[[0, 0]], -0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(g[[0, 1]], 0.125, epsilon = 1e-15);
    }
}
