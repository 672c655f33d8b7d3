//! The estimators built on the sphere ensemble: Seiberg-bound bookkeeping,
//! N-point correlation and three-point structure constant estimates, the
//! Girsanov shift identity check and the Liouville volume-form sampler.

use super::{
    coulomb_factors, gamma_prefactor, gmc_weights, SphereEnsemble, SphereError,
};
use crate::params::{check_distinct, Insertion, LiouvilleParams};
use crate::rng::Stream;
use crate::stats::{batch_means, effective_sample_size, McEstimate};
use serde::Serialize;

/// Outcome of the moment/Seiberg bound checks for a weight multiset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    /// s = (Σ α_k − 2Q)/γ.
    pub s: f64,
    /// −s < 4/γ² ∧ min_k (2/γ)(Q−α_k) and every α_k < Q.
    pub extended_ok: bool,
    /// s > 0 and every α_k < Q.
    pub seiberg_ok: bool,
    /// Moment existence threshold 4/γ² ∧ min_k (2/γ)(Q−α_k).
    pub moment_bound: f64,
}

pub fn admissibility(params: &LiouvilleParams, alphas: &[f64]) -> Admissibility {
    let g = params.gamma;
    let q = params.q;
    let s = params.s_exponent(alphas);
    let all_below_q = alphas.iter().all(|&a| a < q);
    let mut bound = 4.0 / (g * g);
    for &a in alphas {
        bound = bound.min(2.0 / g * (q - a));
    }
    Admissibility {
        s,
        extended_ok: all_below_q && -s < bound,
        seiberg_ok: s > 0.0 && all_below_q,
        moment_bound: bound,
    }
}

fn require_probabilistic(params: &LiouvilleParams) -> Result<(), SphereError> {
    if params.closed_form_only {
        return Err(SphereError::ClosedFormOnlyParams);
    }
    Ok(())
}

/// Weights of the ensemble-wide insertion set: finite insertions plus the
/// weight absorbed at infinity.
fn full_alphas(ens: &SphereEnsemble, insertions: &[Insertion]) -> Vec<f64> {
    let mut v: Vec<f64> = insertions.iter().map(|i| i.alpha).collect();
    if ens.alpha_infinity != 0.0 {
        v.push(ens.alpha_infinity);
    }
    v
}

/// Per-sample values of ρ^{−s} for the Coulomb weight of `insertions`.
pub(crate) fn rho_power_samples(
    params: &LiouvilleParams,
    ens: &SphereEnsemble,
    insertions: &[Insertion],
    s: f64,
    n_samples: u64,
    seed: u64,
) -> Vec<f64> {
    let g = params.gamma;
    // Fold F, the mass and the variance normalization into one constant so a
    // sample costs one exp per cell.
    let f = coulomb_factors(ens, insertions, ens.alpha_infinity, g);
    let coef: Vec<f64> = ens
        .cells
        .iter()
        .zip(&f)
        .map(|(c, &fi)| fi * c.mass * (-0.5 * g * g * c.var).exp())
        .collect();
    ens.sample_map(n_samples, seed, |_, field| {
        let rho: f64 = coef
            .iter()
            .zip(field)
            .map(|(&c, &x)| c * (g * x).exp())
            .sum();
        rho.powf(-s)
    })
}

/// Monte Carlo estimate of the N-point correlation
/// 2 μ^{−s} γ^{−1} Γ(s) ∏_{i<j} |z_i−z_j|^{−α_i α_j} E[ρ^{−s}].
pub fn correlation_estimate(
    params: &LiouvilleParams,
    ens: &SphereEnsemble,
    insertions: &[Insertion],
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate, SphereError> {
    require_probabilistic(params)?;
    if !check_distinct(insertions) {
        return Err(SphereError::CoincidentInsertions);
    }
    let alphas = full_alphas(ens, insertions);
    let adm = admissibility(params, &alphas);
    if !adm.extended_ok {
        return Err(SphereError::InadmissibleWeights);
    }
    let s = adm.s;
    let gamma_s = gamma_prefactor(s)?;
    let mut pref = 2.0 * params.mu.powf(-s) / params.gamma * gamma_s;
    for (i, a) in insertions.iter().enumerate() {
        for b in insertions.iter().skip(i + 1) {
            pref *= (a.z - b.z).norm().powf(-a.alpha * b.alpha);
        }
    }
    let values = rho_power_samples(params, ens, insertions, s, n_samples, seed);
    let (mean, se) = batch_means(&values);
    Ok(McEstimate {
        value: pref * mean,
        stderr: pref.abs() * se,
        n_samples,
        seed,
        diagnostics: Default::default(),
    }
    .with_diagnostic("s", s)
    .with_diagnostic("ess", n_samples as f64)
    .with_diagnostic("mean_rho_pow", mean))
}

/// Three-point structure constant C_γ(α₁, α₂, α₃) by Monte Carlo:
/// insertions at 0 and 1 with α₃ absorbed at infinity.
pub fn structure_constant_estimate(
    params: &LiouvilleParams,
    resolution: u32,
    a: [f64; 3],
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate, SphereError> {
    let ens = three_point_ensemble(params, resolution, a)?;
    structure_constant_estimate_with(params, &ens, a, n_samples, seed)
}

/// The ensemble used by [`structure_constant_estimate`].
pub fn three_point_ensemble(
    params: &LiouvilleParams,
    resolution: u32,
    a: [f64; 3],
) -> Result<SphereEnsemble, SphereError> {
    require_probabilistic(params)?;
    let insertions = [Insertion::at(a[0], 0.0, 0.0), Insertion::at(a[1], 1.0, 0.0)];
    SphereEnsemble::build(params, resolution, &insertions, a[2])
}

/// As [`structure_constant_estimate`], reusing a prebuilt ensemble.
pub fn structure_constant_estimate_with(
    params: &LiouvilleParams,
    ens: &SphereEnsemble,
    a: [f64; 3],
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate, SphereError> {
    require_probabilistic(params)?;
    let adm = admissibility(params, &a);
    if !adm.extended_ok {
        return Err(SphereError::InadmissibleWeights);
    }
    let s = adm.s;
    let gamma_s = gamma_prefactor(s)?;
    let insertions = [Insertion::at(a[0], 0.0, 0.0), Insertion::at(a[1], 1.0, 0.0)];
    let values = rho_power_samples(params, ens, &insertions, s, n_samples, seed);
    let (mean, se) = batch_means(&values);
    let pref = 2.0 * params.mu.powf(-s) / params.gamma * gamma_s;
    Ok(McEstimate {
        value: pref * mean,
        stderr: pref.abs() * se,
        n_samples,
        seed,
        diagnostics: Default::default(),
    }
    .with_diagnostic("s", s)
    .with_diagnostic("ess", n_samples as f64))
}

/// Both sides of the chaos Girsanov identity
/// E[(Σ f_i M_i) F(X)] = Σ f_i mass_i E[F(X + C(·, i))].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GirsanovCheck {
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
}

impl GirsanovCheck {
    /// |lhs − rhs| in units of the joint standard error.
    pub fn sigma_distance(&self) -> f64 {
        (self.lhs - self.rhs) / self.lhs_stderr.hypot(self.rhs_stderr)
    }
}

pub fn girsanov_residual(
    params: &LiouvilleParams,
    ens: &SphereEnsemble,
    f_weights: &[f64],
    observable: impl Fn(&[f64]) -> f64 + Sync,
    n_samples: u64,
    seed: u64,
) -> Result<GirsanovCheck, SphereError> {
    require_probabilistic(params)?;
    let n = ens.n_cells();
    assert_eq!(f_weights.len(), n);
    let g = params.gamma;

    // Covariance columns of the cells where f is supported.
    let support: Vec<usize> = (0..n).filter(|&i| f_weights[i] != 0.0).collect();
    let cols: Vec<Vec<f64>> = support
        .iter()
        .map(|&i| (0..n).map(|j| ens.covariance(i, j)).collect())
        .collect();

    let pairs: Vec<(f64, f64)> = ens.sample_map(n_samples, seed, |_, field| {
        let w = gmc_weights(field, ens, g).expect("gamma checked");
        let lhs = support
            .iter()
            .map(|&i| f_weights[i] * w[i])
            .sum::<f64>()
            * observable(field);
        let mut shifted = vec![0.0; n];
        let mut rhs = 0.0;
        for (k, &i) in support.iter().enumerate() {
            for j in 0..n {
                shifted[j] = field[j] + g * cols[k][j];
            }
            rhs += f_weights[i] * ens.cells[i].mass * observable(&shifted);
        }
        (lhs, rhs)
    });
    let lhs_vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let rhs_vals: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (lhs, lhs_se) = batch_means(&lhs_vals);
    let (rhs, rhs_se) = batch_means(&rhs_vals);
    Ok(GirsanovCheck {
        lhs,
        lhs_stderr: lhs_se,
        rhs,
        rhs_stderr: rhs_se,
    })
}

/// Self-normalized importance-sampling estimate of E[F(ν_L)] for the
/// Liouville volume form: the chaos measure with (γ, γ, γ) insertions is
/// reweighted by ρ^{−(3γ−2Q)/γ} and carries an independent Γ-distributed
/// total mass.
pub fn liouville_measure_expectation(
    params: &LiouvilleParams,
    ens: &SphereEnsemble,
    observable: impl Fn(&[f64], &SphereEnsemble) -> f64 + Sync,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate, SphereError> {
    require_probabilistic(params)?;
    let g = params.gamma;
    let a = [g, g, g];
    let adm = admissibility(params, &a);
    if !adm.extended_ok || adm.s <= 0.0 {
        return Err(SphereError::InadmissibleWeights);
    }
    let s3 = adm.s;
    let insertions = [Insertion::at(g, 0.0, 0.0), Insertion::at(g, 1.0, 0.0)];
    let f = coulomb_factors(ens, &insertions, ens.alpha_infinity, g);
    let coef: Vec<f64> = ens
        .cells
        .iter()
        .zip(&f)
        .map(|(c, &fi)| fi * c.mass * (-0.5 * g * g * c.var).exp())
        .collect();
    let mu = params.mu;
    let pairs: Vec<(f64, f64)> = ens.sample_map(n_samples, seed, |idx, field| {
        let masses: Vec<f64> = coef
            .iter()
            .zip(field)
            .map(|(&c, &x)| c * (g * x).exp())
            .collect();
        let rho: f64 = masses.iter().sum();
        let weight = rho.powf(-s3);
        let xi = Stream::for_sample(seed, idx).substream(0x47).gamma(s3, mu);
        let scale = xi / rho;
        let scaled: Vec<f64> = masses.iter().map(|m| m * scale).collect();
        (observable(&scaled, ens), weight)
    });
    let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let wsum: f64 = weights.iter().sum();
    let value: f64 = pairs.iter().map(|(v, w)| v * w).sum::<f64>() / wsum;
    let var_num: f64 = pairs.iter().map(|(v, w)| (w * (v - value)).powi(2)).sum();
    let stderr = var_num.sqrt() / wsum;
    Ok(McEstimate {
        value,
        stderr,
        n_samples,
        seed,
        diagnostics: Default::default(),
    }
    .with_diagnostic("ess", effective_sample_size(&weights))
    .with_diagnostic("s", s3))
}
