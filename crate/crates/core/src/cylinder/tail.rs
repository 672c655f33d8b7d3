//! Survival-function tail fitting for the I(α) power law
//! P(I(α) > t) = R̄(α) t^{−2(Q−α)/γ} + O(t^{−2(Q−α)/γ−η}).

use super::CylinderError;
use crate::stats::{bootstrap_std, linear_fit};
use serde::Serialize;

/// A fitted log–log tail slope with its bootstrap error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    pub slope: f64,
    pub slope_err: f64,
    pub window: (f64, f64),
    /// Exceedance counts at the fit thresholds (decreasing).
    pub n_exceed: Vec<u64>,
    /// The fit thresholds.
    pub thresholds: Vec<f64>,
}

const BOOTSTRAP_RESAMPLES: usize = 200;
const BOOTSTRAP_SEED: u64 = 0xB007;
const N_THRESHOLDS: usize = 25;

fn survival_points(sorted: &[f64], t_lo: f64, t_hi: f64) -> (Vec<f64>, Vec<f64>, Vec<u64>) {
    let n = sorted.len();
    let mut ln_t = Vec::with_capacity(N_THRESHOLDS);
    let mut ln_s = Vec::with_capacity(N_THRESHOLDS);
    let mut counts = Vec::with_capacity(N_THRESHOLDS);
    for k in 0..N_THRESHOLDS {
        let f = k as f64 / (N_THRESHOLDS - 1) as f64;
        let t = t_lo * (t_hi / t_lo).powf(f);
        let exceed = n - sorted.partition_point(|&x| x <= t);
        if exceed == 0 {
            continue;
        }
        ln_t.push(t.ln());
        ln_s.push((exceed as f64 / n as f64).ln());
        counts.push(exceed as u64);
    }
    (ln_t, ln_s, counts)
}

/// Least-squares slope of ln P(X > t) against ln t over the window where
/// exceedance counts lie in [100, n/10], with a seeded bootstrap error.
pub fn tail_fit(samples: &[f64], _expected_slope_hint: f64) -> Result<TailFit, CylinderError> {
    let n = samples.len();
    if n < 200 {
        return Err(CylinderError::WindowEmpty);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Exceedance-count band [100, n/10]: k-th largest value has k exceedances.
    let lo_count = (n / 10).max(101);
    let hi_count = 100.min(n / 20).max(10);
    let t_lo = sorted[n - lo_count];
    let t_hi = sorted[n - hi_count];
    if !(t_lo > 0.0) || t_hi <= t_lo * (1.0 + 1e-12) {
        return Err(CylinderError::WindowEmpty);
    }

    let (ln_t, ln_s, counts) = survival_points(&sorted, t_lo, t_hi);
    if ln_t.len() < 4 {
        return Err(CylinderError::WindowEmpty);
    }
    let (slope, _) = linear_fit(&ln_t, &ln_s);

    let slope_err = bootstrap_std(samples, BOOTSTRAP_RESAMPLES, BOOTSTRAP_SEED, |resample| {
        let mut s = resample.to_vec();
        s.sort_by(f64::total_cmp);
        let (lt, ls, _) = survival_points(&s, t_lo, t_hi);
        if lt.len() < 2 {
            return slope;
        }
        linear_fit(&lt, &ls).0
    });

    Ok(TailFit {
        slope,
        slope_err,
        window: (t_lo, t_hi),
        n_exceed: counts,
        thresholds: ln_t.iter().map(|l| l.exp()).collect(),
    })
}

/// Hill estimator of the tail index over the top k order statistics
/// (cross-check for the survival fit; returns the index, not the slope).
pub fn hill_estimate(samples: &[f64], k: usize) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if k == 0 || k >= sorted.len() || sorted[k] <= 0.0 {
        return f64::NAN;
    }
    let x_k = sorted[k];
    let sum: f64 = sorted[..k].iter().map(|&x| (x / x_k).ln()).sum();
    k as f64 / sum
}
