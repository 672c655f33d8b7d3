//! Drifted Brownian paths and the conditioned-to-stay-negative process.
//!
//! The path with drift −ν conditioned negative is simulated through its
//! h-transform: the negated path is a diffusion on (0, ∞) with drift
//! ν coth(νr), entering from 0 like a 3d Bessel process. Williams' path
//! decomposition and the exact law of the maximum are used to validate the
//! sampler, not to build it.

use super::CylinderError;
use crate::rng::Stream;

/// A path sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftedPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub nu: f64,
    pub conditioned: bool,
}

/// Exact sample of M = sup_s (B_s − νs): Exp(2ν), so P(e^{γM} > t) = t^{−2ν/γ}.
pub fn sample_max(nu: f64, stream: &mut Stream) -> f64 {
    stream.exponential(2.0 * nu)
}

/// Plain drifted Brownian motion B_s − νs on a uniform grid.
pub fn sample_drifted_bm(
    nu: f64,
    horizon: f64,
    step: f64,
    stream: &mut Stream,
) -> Result<DriftedPath, CylinderError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(CylinderError::StepTooCoarse);
    }
    let n = (horizon / step).round() as usize;
    let mut values = Vec::with_capacity(n + 1);
    let mut v = 0.0;
    values.push(v);
    let sd = step.sqrt();
    for _ in 0..n {
        v += sd * stream.normal() - nu * step;
        values.push(v);
    }
    Ok(DriftedPath {
        times: (0..=n).map(|i| i as f64 * step).collect(),
        values,
        nu,
        conditioned: false,
    })
}

fn coth(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 / x + x / 3.0
    } else if x > 20.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// Brownian motion with drift −ν conditioned to stay negative, on the grid
/// {0, step, 2·step, …}. Values are strictly negative after the origin.
///
/// Internal substeps follow h ≈ r²/4 near the origin (capped by the grid
/// step and floored at `step/1024`), so the stiff 1/r part of the h-transform
/// drift is resolved; the entrance step is the 3d-Bessel short-time law.
pub fn sample_conditioned_bm(
    nu: f64,
    horizon: f64,
    step: f64,
    stream: &mut Stream,
) -> Result<DriftedPath, CylinderError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(CylinderError::StepTooCoarse);
    }
    assert!(nu > 0.0, "conditioning needs positive drift");
    let n = (horizon / step).round() as usize;
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);

    // Entrance: radial 3d-Bessel displacement over the first substep.
    let h0 = (step / 1024.0).min(1e-3);
    let (g1, g2, g3) = (stream.normal(), stream.normal(), stream.normal());
    let mut r = (h0 * (g1 * g1 + g2 * g2 + g3 * g3)).sqrt().max(1e-12);
    let mut t = h0;

    for k in 1..=n {
        let target = k as f64 * step;
        while t < target - 1e-12 {
            let h = (0.25 * r * r).clamp(h0, step).min(target - t);
            let drift = nu * coth(nu * r);
            r = (r + drift * h + h.sqrt() * stream.normal()).abs().max(1e-12);
            t += h;
        }
        values.push(-r);
    }
    Ok(DriftedPath {
        times: (0..=n).map(|i| i as f64 * step).collect(),
        values,
        nu,
        conditioned: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_critical, ks_statistic, mean_stderr};

    #[test]
    fn max_law_is_exponential() {
        let nu = 1.0;
        let n = 100_000;
        let mut stream = Stream::for_sample(0xD022, 0);
        let draws: Vec<f64> = (0..n).map(|_| sample_max(nu, &mut stream)).collect();
        let d = ks_statistic(&draws, |m| 1.0 - (-2.0 * nu * m).exp());
        assert!(d < ks_critical(n, 0.01), "KS = {d}");
        // P(e^{γM} > 10) = 10^{−2ν/γ} at γ = 1, α = 1.5 (ν = 1).
        let count = draws.iter().filter(|&&m| m.exp() > 10.0).count();
        let p = count as f64 / n as f64;
        assert!((p - 0.01).abs() < 0.002, "p = {p}");
    }

    #[test]
    fn conditioned_path_is_negative_with_drift_slope() {
        let nu = 0.8;
        let mut stream = Stream::for_sample(3, 1);
        let horizon = 40.0;
        let mut ends = Vec::new();
        for _ in 0..400 {
            let p = sample_conditioned_bm(nu, horizon, 0.05, &mut stream).unwrap();
            assert!(p.values[0] == 0.0);
            assert!(p.values[1..].iter().all(|&v| v < 0.0));
            ends.push(p.values.last().unwrap() / horizon);
        }
        let (m, se) = mean_stderr(&ends);
        // Long-time slope of the conditioned path is −ν.
        assert!((m + nu).abs() < 4.0 * se.max(0.01), "slope {m} vs {}", -nu);
    }

    #[test]
    fn conditioned_law_matches_rejection_sampling() {
        // Rejection oracle: drift −ν Brownian motion started at −δ, kept only
        // if it stays negative long enough; its law at time T approximates
        // the conditioned path entered at 0.
        let nu = 1.0;
        let t_obs = 1.0;
        let delta = 1e-3;
        let step: f64 = 1e-3;
        let mut stream = Stream::for_sample(0xACC3, 0);
        let mut accepted = Vec::new();
        let mut tries = 0u64;
        while accepted.len() < 300 && tries < 3_000_000 {
            tries += 1;
            let mut v: f64 = -delta;
            let mut ok = true;
            let n_steps = ((t_obs + 6.0 / nu) / step) as usize;
            let sd = step.sqrt();
            let mut at_t = 0.0;
            for k in 1..=n_steps {
                v += sd * stream.normal() - nu * step;
                if v >= 0.0 {
                    ok = false;
                    break;
                }
                if (k as f64 * step - t_obs).abs() < step / 2.0 {
                    at_t = v;
                }
            }
            if ok {
                accepted.push(at_t);
            }
        }
        assert!(accepted.len() >= 300, "rejection oracle starved");
        let mut hstream = Stream::for_sample(0xACC4, 0);
        let hsamples: Vec<f64> = (0..2000)
            .map(|_| {
                let p = sample_conditioned_bm(nu, t_obs, t_obs, &mut hstream).unwrap();
                *p.values.last().unwrap()
            })
            .collect();
        let (mo, so) = mean_stderr(&accepted);
        let (mh, sh) = mean_stderr(&hsamples);
        let joint = so.hypot(sh);
        assert!(
            (mo - mh).abs() < 4.0 * joint,
            "rejection {mo}±{so} vs h-transform {mh}±{sh}"
        );
    }
}
