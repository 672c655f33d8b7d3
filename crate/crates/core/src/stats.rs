//! Monte Carlo result records and the small statistics toolbox used by the
//! estimators: batch-means standard errors, Kolmogorov–Smirnov distances,
//! least-squares slopes and seeded bootstrap resampling.

use crate::rng::Stream;
use serde::Serialize;
use std::collections::BTreeMap;

/// A Monte Carlo result: value, standard error, provenance and diagnostics.
///
/// `diagnostics` is an ordered map so serialized output is stable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl McEstimate {
    /// Plain sample mean with batch-means standard error.
    pub fn from_samples(values: &[f64], seed: u64) -> Self {
        let (value, stderr) = batch_means(values);
        McEstimate {
            value,
            stderr,
            n_samples: values.len() as u64,
            seed,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}

/// Mean and standard error of the mean (two-pass, index order; deterministic).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Mean with a batch-means standard error (≈ √n batches).
///
/// The mean is over all samples; the error uses the variance of the batch
/// means, which is robust to heavy-tailed summands near the moment boundary.
pub fn batch_means(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n < 16 {
        return mean_stderr(values);
    }
    let n_batches = (n as f64).sqrt().floor() as usize;
    let m = n / n_batches;
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut ss = 0.0;
    for b in 0..n_batches {
        let bm = values[b * m..(b + 1) * m].iter().sum::<f64>() / m as f64;
        ss += (bm - mean) * (bm - mean);
    }
    let var_bm = ss / (n_batches - 1) as f64;
    (mean, (var_bm / n_batches as f64).sqrt())
}

/// Effective sample size (Σw)²/Σw² of importance weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 == 0.0 {
        0.0
    } else {
        s * s / s2
    }
}

/// Kolmogorov–Smirnov statistic of `samples` against a CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

/// Asymptotic KS critical value at significance `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    ((-(alpha / 2.0).ln()) / 2.0).sqrt() / (n as f64).sqrt()
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Seeded bootstrap: applies `stat` to `n_resamples` with-replacement
/// resamples and returns the standard deviation of the statistic.
pub fn bootstrap_std(
    samples: &[f64],
    n_resamples: usize,
    seed: u64,
    stat: impl Fn(&[f64]) -> f64,
) -> f64 {
    let n = samples.len();
    let mut stats = Vec::with_capacity(n_resamples);
    let mut buf = vec![0.0; n];
    for r in 0..n_resamples {
        let mut stream = Stream::for_sample(seed, r as u64);
        for slot in buf.iter_mut() {
            let idx = (stream.next_u64() % n as u64) as usize;
            *slot = samples[idx];
        }
        stats.push(stat(&buf));
    }
    let (_, se) = mean_stderr(&stats);
    se * (n_resamples as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr_basics() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let (m, se) = mean_stderr(&v);
        assert!((m - 2.5).abs() < 1e-15);
        // sample var = 5/3, se = sqrt(5/12)
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn batch_means_close_to_iid_stderr() {
        let mut s = Stream::for_sample(5, 0);
        let v: Vec<f64> = (0..10_000).map(|_| s.normal()).collect();
        let (_, se_iid) = mean_stderr(&v);
        let (_, se_bm) = batch_means(&v);
        assert!((se_bm / se_iid - 1.0).abs() < 0.25, "{se_bm} vs {se_iid}");
    }

    #[test]
    fn ks_of_exact_uniform_sample_is_small() {
        let mut s = Stream::for_sample(11, 0);
        let v: Vec<f64> = (0..50_000).map(|_| s.uniform()).collect();
        let d = ks_statistic(&v, |x| x.clamp(0.0, 1.0));
        assert!(d < ks_critical(50_000, 0.01), "d = {d}");
    }

    #[test]
    fn fit_recovers_slope() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 1.7 * v).collect();
        let (slope, icpt) = linear_fit(&x, &y);
        assert!((slope + 1.7).abs() < 1e-12);
        assert!((icpt - 3.0).abs() < 1e-12);
    }
}
