//! Bootstrap confidence intervals and rank tests.

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::KeyedRng;

pub const DEFAULT_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CiReport {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub resamples: usize,
    pub seed: u64,
}

impl CiReport {
    pub fn excludes_zero(&self) -> bool {
        self.hi < 0.0 || self.lo > 0.0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Linear-interpolation percentile of sorted data, `q ∈ [0, 1]`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Mean of `values` with a 95% percentile interval from resampling the
/// values themselves (pair-level resampling when the values are per-pair).
pub fn paired_bootstrap_ci(values: &[f64], resamples: usize, seed: u64) -> Result<CiReport> {
    if values.is_empty() {
        return Err(Error::Empty("bootstrap CI input"));
    }
    if resamples == 0 {
        return Err(Error::invalid("resamples must be ≥ 1"));
    }
    let n = values.len();
    let means = resample_stat(values, resamples, seed, |v| v.iter().sum::<f64>() / v.len() as f64);
    let lo_v = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_v = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // A resample mean can never leave [min, max]; clamping removes rounding spill.
    let clamp = |x: f64| x.clamp(lo_v, hi_v);
    Ok(CiReport {
        mean: clamp(values.iter().sum::<f64>() / n as f64),
        lo: clamp(percentile_sorted(&means, 0.025)),
        hi: clamp(percentile_sorted(&means, 0.975)),
        resamples,
        seed,
    })
}

/// Sorted values of `stat` over `resamples` resamples with replacement;
/// resample `r` draws from the stream `("ci", seed, r)`.
pub fn resample_stat(values: &[f64], resamples: usize, seed: u64, stat: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let n = values.len();
    let mut buf = vec![0.0; n];
    let mut out: Vec<f64> = (0..resamples)
        .map(|r| {
            let mut rng = KeyedRng::new("ci", &[seed, r as u64]);
            buf.iter_mut().for_each(|b| *b = values[rng.below(n)]);
            stat(&buf)
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Percentile interval of an arbitrary statistic; `mean` holds the statistic on the full data.
pub fn bootstrap_ci_with(
    values: &[f64],
    resamples: usize,
    seed: u64,
    stat: impl Fn(&[f64]) -> f64,
) -> Result<CiReport> {
    if values.is_empty() {
        return Err(Error::Empty("bootstrap CI input"));
    }
    if resamples == 0 {
        return Err(Error::invalid("resamples must be ≥ 1"));
    }
    let full = stat(values);
    let sorted = resample_stat(values, resamples, seed, stat);
    Ok(CiReport {
        mean: full,
        lo: percentile_sorted(&sorted, 0.025),
        hi: percentile_sorted(&sorted, 0.975),
        resamples,
        seed,
    })
}

/// Ranks within one row, lower value = rank 1, ties averaged.
pub fn rank_row(row: &[f64]) -> Result<Vec<f64>> {
    if row.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("NaN in rank input"));
    }
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    Ok(ranks)
}

/// Datasets × methods values with their per-method mean ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub values: Array2<f64>,
    pub ranks: Array2<f64>,
    pub mean_ranks: Vec<f64>,
}

impl RankTable {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, k) = values.dim();
        if n == 0 || k == 0 {
            return Err(Error::Empty("rank table"));
        }
        let mut ranks = Array2::zeros((n, k));
        for (i, row) in values.rows().into_iter().enumerate() {
            let r = rank_row(&row.to_vec())?;
            ranks.row_mut(i).assign(&ndarray::Array1::from(r));
        }
        let mean_ranks = (0..k).map(|j| ranks.column(j).sum() / n as f64).collect();
        Ok(Self {
            values,
            ranks,
            mean_ranks,
        })
    }

    pub fn n_datasets(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_methods(&self) -> usize {
        self.values.ncols()
    }
}

/// Per-method mean ranks of a datasets × methods matrix.
pub fn mean_ranks(values: &Array2<f64>) -> Result<Vec<f64>> {
    Ok(RankTable::new(values.clone())?.mean_ranks)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Friedman {
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
}

pub fn friedman_test(rt: &RankTable) -> Result<Friedman> {
    friedman_from_mean_ranks(&rt.mean_ranks, rt.n_datasets())
}

/// `χ² = 12N/(k(k+1)) · Σ_j (R̄_j − (k+1)/2)²`, `df = k − 1`.
pub fn friedman_from_mean_ranks(mean_ranks: &[f64], n: usize) -> Result<Friedman> {
    let k = mean_ranks.len();
    if n < 2 || k < 2 {
        return Err(Error::invalid(format!("Friedman test needs N ≥ 2 and k ≥ 2 (N={n}, k={k})")));
    }
    let (nf, kf) = (n as f64, k as f64);
    let centre = (kf + 1.0) / 2.0;
    let ss: f64 = mean_ranks.iter().map(|r| (r - centre).powi(2)).sum();
    let chi2 = 12.0 * nf / (kf * (kf + 1.0)) * ss;
    let df = k - 1;
    Ok(Friedman {
        chi2,
        df,
        p: chi2_sf(chi2, df as f64),
    })
}

/// Two-tailed α = 0.05 studentized-range constants divided by √2, for k = 2..=10.
pub const NEMENYI_Q05: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];

/// `CD = q_α(k) · √(k(k+1)/(6N))`.
pub fn nemenyi_cd(k: usize, n: usize, alpha: f64) -> Result<f64> {
    if (alpha - 0.05).abs() > 1e-12 {
        return Err(Error::invalid("only α = 0.05 is tabulated"));
    }
    if !(2..=10).contains(&k) {
        return Err(Error::invalid(format!("k={k} outside the tabulated range 2..=10")));
    }
    if n == 0 {
        return Err(Error::invalid("N must be ≥ 1"));
    }
    let q = NEMENYI_Q05[k - 2];
    Ok(q * ((k * (k + 1)) as f64 / (6.0 * n as f64)).sqrt())
}

/// Natural log of Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

const GAMMA_EPS: f64 = 1e-15;
const GAMMA_MAX_ITER: usize = 10_000;

/// Lower regularized incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cont_frac(a, x)
    }
}

/// Upper regularized incomplete gamma `Q(a, x) = 1 − P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cont_frac(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cont_frac(a: f64, x: f64) -> f64 {
    // Modified Lentz evaluation.
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Chi-square upper tail `P(X ≥ x)` with `df` degrees of freedom.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    gamma_q(df / 2.0, x / 2.0)
}

pub fn erf(x: f64) -> f64 {
    let v = gamma_p(0.5, x * x);
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    if z < 0.0 {
        // Upper tail through Q keeps precision far into the left tail.
        0.5 * gamma_q(0.5, z * z / 2.0)
    } else {
        0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
    }
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Sample mean and (n−1) standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Median; the mean of the two middle values for even counts.
pub fn median(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Empty("median input"));
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Ok(if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    })
}
