//! I(α), ρ(α), the unit-volume and full reflection coefficients, and the
//! quantum-sphere expectation sampler.
//!
//! I(α) = ∫_0^∞ e^{γ(B_s − (Q−α)s)} Z_s ds with an unconditioned drifted
//! Brownian radial part; ρ(α) = ∫_ℝ e^{γ𝓑^α_s} Z_s ds with two independent
//! conditioned halves sharing one lateral field. R̄(α) = E[ρ(α)^{2(Q−α)/γ}].

use super::paths::{sample_conditioned_bm, sample_drifted_bm};
use super::{CylinderEnsemble, CylinderError};
use crate::gamma;
use crate::params::LiouvilleParams;
use crate::rng::Stream;
use crate::stats::{batch_means, effective_sample_size, McEstimate};
use rayon::prelude::*;

fn check_alpha(params: &LiouvilleParams, alpha: f64) -> Result<f64, CylinderError> {
    if params.closed_form_only {
        return Err(CylinderError::ClosedFormOnlyParams);
    }
    if alpha <= params.gamma / 2.0 || alpha >= params.q {
        return Err(CylinderError::AlphaOutOfRange(alpha));
    }
    Ok(params.q - alpha)
}

/// Horizon rule S = max(10, 12/(γν)): the discarded e^{γ𝓑} tail is below
/// e^{−10} relative in expectation.
pub fn default_horizon(params: &LiouvilleParams, alpha: f64) -> f64 {
    let nu = params.q - alpha;
    (12.0 / (params.gamma * nu)).max(10.0)
}

/// One draw of I(α) on a one-sided ensemble spanning [0, S].
///
/// Returns the integral and the relative weight of its last grid slice, a
/// cheap truncation diagnostic.
pub fn sample_i_alpha(
    params: &LiouvilleParams,
    ens: &CylinderEnsemble,
    alpha: f64,
    stream: &mut Stream,
) -> Result<(f64, f64), CylinderError> {
    let nu = check_alpha(params, alpha)?;
    let horizon = *ens.s_grid.last().unwrap();
    let need = 10.0 / (params.gamma * nu);
    if horizon < need {
        return Err(CylinderError::HorizonTooShort {
            need,
            got: horizon,
        });
    }
    let g = params.gamma;
    let mut lat = stream.substream(1);
    let field = ens.sample_lateral(&mut lat);
    let z = ens.z_process(&field, g);
    let mut rad = stream.substream(2);
    let b = sample_drifted_bm(nu, horizon, ens.ds, &mut rad)?;
    let mut total = 0.0;
    let mut last = 0.0;
    for (k, zk) in z.iter().enumerate() {
        last = (g * b.values[k]).exp() * zk * ens.ds;
        total += last;
    }
    Ok((total, last / total))
}

/// Batch of I(α) samples over counter streams; deterministic in `seed`.
pub fn i_alpha_samples(
    params: &LiouvilleParams,
    alpha: f64,
    n_samples: u64,
    seed: u64,
) -> Result<Vec<f64>, CylinderError> {
    check_alpha(params, alpha)?;
    let s_max = default_horizon(params, alpha);
    let ens = CylinderEnsemble::build(0.0, s_max, super::N_THETA)?;
    let out: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut stream = Stream::for_sample(seed, i);
            sample_i_alpha(params, &ens, alpha, &mut stream)
                .expect("preconditions checked")
                .0
        })
        .collect();
    Ok(out)
}

/// One draw of ρ(α) on a two-sided ensemble, with independent conditioned
/// halves sharing the lateral field. Also returns the per-cell masses of
/// e^{γ𝓑} N_γ when a measure observable needs them.
fn rho_draw(
    params: &LiouvilleParams,
    ens: &CylinderEnsemble,
    alpha: f64,
    stream: &mut Stream,
    want_cells: bool,
) -> (f64, Option<Vec<f64>>) {
    let g = params.gamma;
    let nu = params.q - alpha;
    let n_s = ens.n_s();
    let nt = ens.n_theta;
    let mut lat = stream.substream(1);
    let field = ens.sample_lateral(&mut lat);
    // 𝓑 on the grid: s = 0 sits at index mid; the two halves are independent.
    let mid = ens.s_grid.iter().position(|&s| s.abs() < ens.ds / 2.0).unwrap();
    let horizon_right = ens.s_grid[n_s - 1];
    let horizon_left = -ens.s_grid[0];
    let mut right = stream.substream(2);
    let bp = sample_conditioned_bm(nu, horizon_right, ens.ds, &mut right).expect("step > 0");
    let mut left = stream.substream(3);
    let bm = sample_conditioned_bm(nu, horizon_left, ens.ds, &mut left).expect("step > 0");
    let mut bval = vec![0.0; n_s];
    for k in 0..n_s {
        bval[k] = if k >= mid {
            bp.values[k - mid]
        } else {
            bm.values[mid - k]
        };
    }
    let dtheta = 2.0 * std::f64::consts::PI / nt as f64;
    let norm = -0.5 * g * g * ens.diag_var;
    let mut rho = 0.0;
    let mut cells = if want_cells {
        Some(vec![0.0; n_s * nt])
    } else {
        None
    };
    for i in 0..n_s {
        let drift = (g * bval[i]).exp() * ens.ds * dtheta;
        let row = &field[i * nt..(i + 1) * nt];
        let mut zrow = 0.0;
        for (j, &y) in row.iter().enumerate() {
            let m = drift * (g * y + norm).exp();
            zrow += m;
            if let Some(c) = cells.as_mut() {
                c[i * nt + j] = m;
            }
        }
        rho += zrow;
    }
    (rho, cells)
}

/// One ρ(α) sample (two-sided cylinder integral).
pub fn sample_rho_alpha(
    params: &LiouvilleParams,
    ens: &CylinderEnsemble,
    alpha: f64,
    stream: &mut Stream,
) -> Result<f64, CylinderError> {
    check_alpha(params, alpha)?;
    Ok(rho_draw(params, ens, alpha, stream, false).0)
}

/// Batch of ρ(α) samples.
pub fn rho_samples(
    params: &LiouvilleParams,
    alpha: f64,
    n_samples: u64,
    seed: u64,
) -> Result<Vec<f64>, CylinderError> {
    check_alpha(params, alpha)?;
    let s_max = default_horizon(params, alpha);
    let ens = CylinderEnsemble::build(-s_max, s_max, super::N_THETA)?;
    Ok((0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut stream = Stream::for_sample(seed, i);
            rho_draw(params, &ens, alpha, &mut stream, false).0
        })
        .collect())
}

/// Unit-volume reflection coefficient R̄(α) = E[ρ(α)^{2(Q−α)/γ}].
///
/// When 2·(2/γ)(Q−α) ≥ 4/γ² the estimator variance is infinite; the estimate
/// is still returned, flagged with a `variance_warning` diagnostic.
pub fn rbar_estimate(
    params: &LiouvilleParams,
    alpha: f64,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate, CylinderError> {
    let nu = check_alpha(params, alpha)?;
    let g = params.gamma;
    let p = 2.0 * nu / g;
    let values = rho_samples(params, alpha, n_samples, seed)?;
    let powered: Vec<f64> = values.iter().map(|r| r.powf(p)).collect();
    let (mean, se) = batch_means(&powered);
    let mut est = McEstimate {
        value: mean,
        stderr: se,
        n_samples,
        seed,
        diagnostics: Default::default(),
    }
    .with_diagnostic("exponent", p);
    if 2.0 * p >= 4.0 / (g * g) {
        est = est.with_diagnostic("variance_warning", 1.0);
    }
    Ok(est)
}

/// Full reflection coefficient
/// R(α) = μ^{2(Q−α)/γ} Γ(−2(Q−α)/γ) · (2(Q−α)/γ) · R̄(α).
pub fn full_reflection(
    params: &LiouvilleParams,
    alpha: f64,
    rbar: f64,
) -> Result<f64, CylinderError> {
    let nu = params.q - alpha;
    let p = 2.0 * nu / params.gamma;
    if gamma::is_nonpositive_integer(-p) {
        return Err(CylinderError::PoleOfReflection(alpha));
    }
    Ok(params.mu.powf(p) * gamma::gamma(-p) * p * rbar)
}

/// A sampled cylinder measure handed to quantum-sphere observables:
/// normalized per-cell masses on the (s, θ) grid.
pub struct CylinderMeasure<'a> {
    pub s_grid: &'a [f64],
    pub n_theta: usize,
    /// Row-major n_s × n_θ masses summing to 1.
    pub masses: Vec<f64>,
}

impl CylinderMeasure<'_> {
    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Mass carried by rows with s > 0.
    pub fn positive_side_fraction(&self) -> f64 {
        let nt = self.n_theta;
        self.s_grid
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0.0)
            .map(|(i, _)| self.masses[i * nt..(i + 1) * nt].iter().sum::<f64>())
            .sum()
    }
}

/// Self-normalized importance estimate of E[F(μ̂)] for the unit-volume
/// α-quantum sphere: observables of e^{γ𝓑}N_γ/ρ weighted by ρ^{2(Q−α)/γ},
/// sharing one sample set between numerator and denominator.
pub fn quantum_sphere_expectation(
    params: &LiouvilleParams,
    alpha: f64,
    observable: impl Fn(&CylinderMeasure) -> f64 + Sync,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate, CylinderError> {
    let nu = check_alpha(params, alpha)?;
    let g = params.gamma;
    let p = 2.0 * nu / g;
    let s_max = default_horizon(params, alpha);
    let ens = CylinderEnsemble::build(-s_max, s_max, super::N_THETA)?;
    let pairs: Vec<(f64, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut stream = Stream::for_sample(seed, i);
            let (rho, cells) = rho_draw(params, &ens, alpha, &mut stream, true);
            let mut masses = cells.expect("requested");
            for m in masses.iter_mut() {
                *m /= rho;
            }
            let measure = CylinderMeasure {
                s_grid: &ens.s_grid,
                n_theta: ens.n_theta,
                masses,
            };
            (observable(&measure), rho.powf(p))
        })
        .collect();
    let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let wsum: f64 = weights.iter().sum();
    let value = pairs.iter().map(|(v, w)| v * w).sum::<f64>() / wsum;
    let var_num: f64 = pairs.iter().map(|(v, w)| (w * (v - value)).powi(2)).sum();
    let mut est = McEstimate {
        value,
        stderr: var_num.sqrt() / wsum,
        n_samples,
        seed,
        diagnostics: Default::default(),
    }
    .with_diagnostic("ess", effective_sample_size(&weights))
    .with_diagnostic("exponent", p);
    if 2.0 * p >= 4.0 / (g * g) {
        est = est.with_diagnostic("variance_warning", 1.0);
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_stderr;

    fn params() -> LiouvilleParams {
        LiouvilleParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn alpha_domain_checks() {
        let p = params();
        assert!(matches!(
            i_alpha_samples(&p, 0.4, 10, 0),
            Err(CylinderError::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            i_alpha_samples(&p, 2.5, 10, 0),
            Err(CylinderError::AlphaOutOfRange(_))
        ));
    }

    #[test]
    fn i_alpha_first_moment_matches_disk_integral() {
        // For γα < 2: E[I(α)] = ∫_{|x|≤1} |x|^{−γα} d²x = 2π/(2−γα).
        let p = params();
        let alpha = 1.6;
        let vals = i_alpha_samples(&p, alpha, 6000, 42).unwrap();
        let (m, se) = mean_stderr(&vals);
        let expect = 2.0 * std::f64::consts::PI / (2.0 - p.gamma * alpha);
        // Heavy-ish tail: allow a generous band around the exact mean.
        assert!(
            (m - expect).abs() < 5.0 * se.max(0.02 * expect),
            "E[I] = {m} ± {se}, expect {expect}"
        );
    }

    #[test]
    fn rho_is_positive_and_halves_exchange() {
        let p = params();
        let alpha = 1.7;
        let s_max = default_horizon(&p, alpha);
        let ens = CylinderEnsemble::build(-s_max, s_max, 32).unwrap();
        let mut left_mass = Vec::new();
        let mut right_mass = Vec::new();
        for i in 0..500 {
            let mut stream = Stream::for_sample(9, i);
            let (rho, cells) = rho_draw(&p, &ens, alpha, &mut stream, true);
            assert!(rho > 0.0);
            let cells = cells.unwrap();
            let nt = ens.n_theta;
            let mut lm = 0.0;
            let mut rm = 0.0;
            for (k, &s) in ens.s_grid.iter().enumerate() {
                let row: f64 = cells[k * nt..(k + 1) * nt].iter().sum();
                if s > 0.0 {
                    rm += row;
                } else if s < 0.0 {
                    lm += row;
                }
            }
            left_mass.push(lm / rho);
            right_mass.push(rm / rho);
        }
        let (ml, sl) = mean_stderr(&left_mass);
        let (mr, sr) = mean_stderr(&right_mass);
        assert!(
            (ml - mr).abs() < 3.0 * sl.hypot(sr),
            "halves {ml}±{sl} vs {mr}±{sr}"
        );
    }

    #[test]
    fn full_reflection_prefactor_scaling_and_poles() {
        let p = params();
        let p2 = LiouvilleParams::new(1.0, 2.0).unwrap();
        let rbar = 3.7;
        let alpha = 1.7;
        let a = full_reflection(&p, alpha, rbar).unwrap();
        let b = full_reflection(&p2, alpha, rbar).unwrap();
        let expo = 2.0 * (p.q - alpha) / p.gamma;
        assert!((b / a - 2.0f64.powf(expo)).abs() < 1e-12);
        // α = 2 makes 2(Q−α)/γ = 1 and Γ(−1) blow up.
        assert!(matches!(
            full_reflection(&p, 2.0, rbar),
            Err(CylinderError::PoleOfReflection(_))
        ));
    }

    #[test]
    fn quantum_sphere_is_normalized() {
        let p = params();
        let est = quantum_sphere_expectation(&p, 1.7, |_| 1.0, 200, 5).unwrap();
        assert_eq!(est.value, 1.0);
        let est2 = quantum_sphere_expectation(&p, 1.7, |m| m.total(), 200, 5).unwrap();
        assert!((est2.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantum_sphere_halves_balance() {
        let p = params();
        let est =
            quantum_sphere_expectation(&p, 1.7, |m| m.positive_side_fraction(), 4000, 17).unwrap();
        assert!(
            (est.value - 0.5).abs() < 3.0 * est.stderr.max(0.01),
            "fraction {} ± {}",
            est.value,
            est.stderr
        );
    }

    #[test]
    fn rbar_flags_infinite_variance_region() {
        let p = params();
        // α = 1.6: p = 1.8, 2p = 3.6 < 4 ⇒ fine; α = 1.4: p = 2.2, 2p > 4.
        let a = rbar_estimate(&p, 1.6, 200, 1).unwrap();
        assert!(!a.diagnostics.contains_key("variance_warning"));
        let b = rbar_estimate(&p, 1.4, 200, 1).unwrap();
        assert!(b.diagnostics.contains_key("variance_warning"));
    }
}
