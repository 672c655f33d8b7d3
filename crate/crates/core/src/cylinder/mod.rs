//! The cylinder machinery behind GMC tails and the reflection coefficient:
//! the lateral-noise field Y on ℝ × [0, 2π) with covariance
//! ln[(e^{−s} ∨ e^{−t}) / |e^{−s}e^{iθ} − e^{−t}e^{iθ′}|], its total-mass
//! process Z_s, drifted and conditioned radial Brownian paths, the
//! observables I(α) and ρ(α), and the tail/reflection estimators built on
//! them.

mod estimators;
mod paths;
mod tail;

pub use estimators::{
    full_reflection, i_alpha_samples, quantum_sphere_expectation, rbar_estimate, rho_samples,
    sample_i_alpha, sample_rho_alpha, CylinderMeasure,
};
pub use paths::{sample_conditioned_bm, sample_drifted_bm, sample_max, DriftedPath};
pub use tail::{hill_estimate, tail_fit, TailFit};

use crate::linalg::{cholesky_with_jitter, CholeskyFactor, LinalgError};
use crate::rng::Stream;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CylinderError {
    #[error("lateral covariance factorization failed: {0}")]
    FactorizationFailure(#[from] LinalgError),
    #[error("alpha = {0} outside (gamma/2, Q)")]
    AlphaOutOfRange(f64),
    #[error("horizon {got} too short, need at least {need}")]
    HorizonTooShort { need: f64, got: f64 },
    #[error("path step must be positive and finite")]
    StepTooCoarse,
    #[error("tail window is empty (degenerate sample)")]
    WindowEmpty,
    #[error("reflection coefficient pole at alpha = {0}")]
    PoleOfReflection(f64),
    #[error("probabilistic estimators require gamma in (0, 2)")]
    ClosedFormOnlyParams,
}

/// Default angular resolution and s-spacing of the cylinder grid.
pub const N_THETA: usize = 64;
pub const DS: f64 = 0.05;
/// Cell cap per side of the cylinder; the spacing widens to respect it.
pub const MAX_CELLS_PER_SIDE: usize = 16384;

/// The lateral kernel at separation (u, φ), u = |s − t|:
/// −ln |1 − e^{−u + iφ}|.
pub fn lateral_kernel(u: f64, phi: f64) -> f64 {
    let e = (-u.abs()).exp();
    -0.5 * (1.0 - 2.0 * e * phi.cos() + e * e).ln()
}

/// A discretized lateral-noise field: s-grid × n_θ angles, factorized per
/// angular mode (the covariance is stationary in θ, so the angular DFT block-
/// diagonalizes it into independent Toeplitz processes).
pub struct CylinderEnsemble {
    pub s_grid: Vec<f64>,
    pub ds: f64,
    pub n_theta: usize,
    /// Regularization radius in the cylinder metric (half min cell extent).
    pub cell_eps: f64,
    /// Regularized variance of each cell: ln(1/eps) plus the smooth part of
    /// the kernel averaged over the regularization circle.
    pub diag_var: f64,
    /// One factor per angular mode m = 0..=n_θ/2 of the coefficient
    /// covariance c_m(|s−t|).
    mode_factors: Vec<CholeskyFactor>,
    /// c_m lag tables (for covariance reconstruction checks).
    mode_cov: Vec<Vec<f64>>,
    cos_tab: Vec<f64>,
    sin_tab: Vec<f64>,
}

/// Double average of the kernel minus its log singularity over one
/// regularization circle of radius `eps` (the smooth correction to
/// ln(1/eps)).
fn circle_avg_correction(eps: f64) -> f64 {
    let n = 48;
    let mut acc = 0.0;
    for a in 0..n {
        let ta = 2.0 * std::f64::consts::PI * a as f64 / n as f64;
        for b in 0..n {
            if a == b {
                continue;
            }
            let tb = 2.0 * std::f64::consts::PI * b as f64 / n as f64;
            let du = eps * (ta.cos() - tb.cos());
            let dphi = eps * (ta.sin() - tb.sin());
            let dist = du.hypot(dphi);
            acc += lateral_kernel(du, dphi) + dist.ln();
        }
    }
    acc / (n * n) as f64
}

impl CylinderEnsemble {
    /// Grid on [s_min, s_max] with the default spacing, widened if necessary
    /// to respect the per-side cell cap.
    pub fn build(s_min: f64, s_max: f64, n_theta: usize) -> Result<Self, CylinderError> {
        assert!(s_max > s_min);
        let span = s_max - s_min;
        let side = span.max(s_max.abs()).max(s_min.abs());
        let mut ds = DS;
        if (side / ds) * n_theta as f64 > MAX_CELLS_PER_SIDE as f64 {
            ds = side * n_theta as f64 / MAX_CELLS_PER_SIDE as f64;
        }
        let n_s = (span / ds).round() as usize + 1;
        let s_grid: Vec<f64> = (0..n_s).map(|i| s_min + i as f64 * ds).collect();

        let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
        let eps = 0.5 * ds.min(dtheta);
        let var = (1.0 / eps).ln() + circle_avg_correction(eps);

        // Angular eigenvalues per s-lag, then per-mode Toeplitz factors.
        let n_modes = n_theta / 2 + 1;
        let mut lambda = vec![vec![0.0; n_s]; n_modes];
        for lag in 0..n_s {
            let u = lag as f64 * ds;
            for m in 0..n_modes {
                let mut acc = 0.0;
                for d in 0..n_theta {
                    let phi = dtheta * d as f64;
                    let k = if lag == 0 && d == 0 {
                        var
                    } else {
                        lateral_kernel(u, phi)
                    };
                    acc += k * (m as f64 * phi).cos();
                }
                lambda[m][lag] = acc;
            }
        }
        let mut mode_factors = Vec::with_capacity(n_modes);
        let mut mode_cov = Vec::with_capacity(n_modes);
        for (m, lam) in lambda.iter().enumerate() {
            let mult = if m == 0 || m == n_theta / 2 { 1.0 } else { 2.0 };
            let c: Vec<f64> = lam.iter().map(|v| v * mult / n_theta as f64).collect();
            let mut cov = vec![0.0; n_s * n_s];
            for i in 0..n_s {
                for j in 0..n_s {
                    cov[i * n_s + j] = c[(i as isize - j as isize).unsigned_abs()];
                }
            }
            let trace = n_s as f64 * c[0];
            mode_factors.push(cholesky_with_jitter(&cov, n_s, 1e-8 * trace.max(1.0))?);
            mode_cov.push(c);
        }
        let cos_tab: Vec<f64> = (0..n_modes * n_theta)
            .map(|k| {
                let (m, j) = (k / n_theta, k % n_theta);
                (m as f64 * dtheta * j as f64).cos()
            })
            .collect();
        let sin_tab: Vec<f64> = (0..n_modes * n_theta)
            .map(|k| {
                let (m, j) = (k / n_theta, k % n_theta);
                (m as f64 * dtheta * j as f64).sin()
            })
            .collect();
        Ok(CylinderEnsemble {
            s_grid,
            ds,
            n_theta,
            cell_eps: eps,
            diag_var: var,
            mode_factors,
            mode_cov,
            cos_tab,
            sin_tab,
        })
    }

    pub fn n_s(&self) -> usize {
        self.s_grid.len()
    }

    /// The covariance the factorized representation encodes for two grid
    /// cells: Σ_m c_m(lag)[cos cos + sin sin] = Σ_m c_m(lag) cos(m Δθ).
    pub fn represented_covariance(&self, i: usize, j: usize, dtheta_idx: usize) -> f64 {
        let lag = (i as isize - j as isize).unsigned_abs();
        let dtheta = 2.0 * std::f64::consts::PI / self.n_theta as f64;
        self.mode_cov
            .iter()
            .enumerate()
            .map(|(m, c)| c[lag] * (m as f64 * dtheta * dtheta_idx as f64).cos())
            .sum()
    }

    /// Exact kernel value for the same pair (regularized on the diagonal).
    pub fn kernel_covariance(&self, i: usize, j: usize, dtheta_idx: usize) -> f64 {
        if i == j && dtheta_idx == 0 {
            return self.diag_var;
        }
        let u = (self.s_grid[i] - self.s_grid[j]).abs();
        let phi = 2.0 * std::f64::consts::PI * dtheta_idx as f64 / self.n_theta as f64;
        lateral_kernel(u, phi)
    }

    /// Largest per-mode factorization reconstruction error.
    pub fn factorization_residual(&self) -> f64 {
        let n = self.n_s();
        self.mode_factors
            .iter()
            .zip(&self.mode_cov)
            .map(|(f, c)| {
                let mut cov = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        cov[i * n + j] = c[(i as isize - j as isize).unsigned_abs()];
                    }
                }
                f.reconstruction_error(&cov)
            })
            .fold(0.0, f64::max)
    }

    /// One lateral field draw: a row-major n_s × n_θ matrix of Y values.
    pub fn sample_lateral(&self, stream: &mut Stream) -> Vec<f64> {
        let n_s = self.n_s();
        let n_modes = self.mode_factors.len();
        let nt = self.n_theta;
        let mut field = vec![0.0; n_s * nt];
        let mut coef = vec![0.0; n_s];
        let mut xi = vec![0.0; n_s];
        for m in 0..n_modes {
            // Cosine coefficient process.
            stream.fill_normals(&mut xi);
            coef.copy_from_slice(&self.mode_factors[m].mul_vec(&xi));
            let ct = &self.cos_tab[m * nt..(m + 1) * nt];
            for i in 0..n_s {
                let a = coef[i];
                if a != 0.0 {
                    let row = &mut field[i * nt..(i + 1) * nt];
                    for j in 0..nt {
                        row[j] += a * ct[j];
                    }
                }
            }
            // Sine coefficient process (absent for m = 0 and the Nyquist mode).
            if m != 0 && m != nt / 2 {
                stream.fill_normals(&mut xi);
                coef.copy_from_slice(&self.mode_factors[m].mul_vec(&xi));
                let st = &self.sin_tab[m * nt..(m + 1) * nt];
                for i in 0..n_s {
                    let b = coef[i];
                    if b != 0.0 {
                        let row = &mut field[i * nt..(i + 1) * nt];
                        for j in 0..nt {
                            row[j] += b * st[j];
                        }
                    }
                }
            }
        }
        field
    }

    /// Z_s = Σ_θ e^{γY − (γ²/2)Var} Δθ for every s row of a lateral field.
    pub fn z_process(&self, field: &[f64], gamma: f64) -> Vec<f64> {
        let nt = self.n_theta;
        let dtheta = 2.0 * std::f64::consts::PI / nt as f64;
        let norm = -0.5 * gamma * gamma * self.diag_var;
        field
            .chunks(nt)
            .map(|row| row.iter().map(|&y| (gamma * y + norm).exp()).sum::<f64>() * dtheta)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_stderr;

    #[test]
    fn kernel_limits() {
        // Same s, opposite angles: −ln|1−e^{iπ}| = −ln 2.
        assert!((lateral_kernel(0.0, std::f64::consts::PI) + 2.0f64.ln()).abs() < 1e-14);
        // Large separation decays to zero.
        assert!(lateral_kernel(20.0, 1.0).abs() < 1e-8);
    }

    #[test]
    fn representation_matches_kernel() {
        let ens = CylinderEnsemble::build(0.0, 3.0, 32).unwrap();
        for &(i, j, d) in &[(0, 5, 3), (2, 2, 7), (10, 40, 0), (0, 0, 1), (1, 30, 16)] {
            let a = ens.represented_covariance(i, j, d);
            let b = ens.kernel_covariance(i, j, d);
            assert!((a - b).abs() < 1e-10, "({i},{j},{d}): {a} vs {b}");
        }
        assert!(ens.factorization_residual() < 1e-8);
    }

    #[test]
    fn lateral_field_covariance_empirical() {
        let ens = CylinderEnsemble::build(0.0, 2.0, 16).unwrap();
        let nt = ens.n_theta;
        let n_draws = 4000;
        let picks = [(0usize, 0usize), (3, 5), (10, 0), (20, 9)];
        let mut mean = vec![0.0; picks.len()];
        let mut prod = vec![0.0; picks.len()];
        let base = (5usize, 2usize);
        for d in 0..n_draws {
            let mut s = Stream::for_sample(77, d);
            let f = ens.sample_lateral(&mut s);
            let yb = f[base.0 * nt + base.1];
            for (k, &(i, j)) in picks.iter().enumerate() {
                let y = f[i * nt + j];
                mean[k] += y;
                prod[k] += y * yb;
            }
        }
        for (k, &(i, j)) in picks.iter().enumerate() {
            let m = mean[k] / n_draws as f64;
            assert!(m.abs() < 0.15, "mean {m}");
            let emp = prod[k] / n_draws as f64;
            let didx = (j + nt - base.1) % nt;
            let expect = ens.kernel_covariance(i, base.0, didx.min(nt - didx));
            let var_i = ens.diag_var;
            let se = ((var_i * var_i + expect * expect) / n_draws as f64).sqrt();
            assert!(
                (emp - expect).abs() < 4.0 * se,
                "cov ({i},{j}) {emp} vs {expect}"
            );
        }
    }

    #[test]
    fn z_mean_is_two_pi_and_stationary() {
        let ens = CylinderEnsemble::build(0.0, 2.0, 32).unwrap();
        let gamma = 1.0;
        let n_draws = 3000;
        let n_s = ens.n_s();
        let mut row_sums = vec![0.0; n_s];
        for d in 0..n_draws {
            let mut s = Stream::for_sample(5, d);
            let f = ens.sample_lateral(&mut s);
            let z = ens.z_process(&f, gamma);
            for (acc, v) in row_sums.iter_mut().zip(&z) {
                *acc += v;
            }
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        for (i, acc) in row_sums.iter().enumerate() {
            let m = acc / n_draws as f64;
            assert!(
                (m - two_pi).abs() < 0.15 * two_pi,
                "row {i}: E[Z] = {m}"
            );
        }
        // Stationarity: first and last interior rows agree within error.
        let a = row_sums[1] / n_draws as f64;
        let b = row_sums[n_s - 2] / n_draws as f64;
        assert!((a - b).abs() < 0.15 * two_pi, "{a} vs {b}");
    }

    #[test]
    fn z_mean_tight() {
        // Tighter 3-stderr check on the pooled mean of Z over rows.
        let ens = CylinderEnsemble::build(0.0, 1.0, 32).unwrap();
        let gamma = 1.2;
        let vals: Vec<f64> = (0..4000)
            .map(|d| {
                let mut s = Stream::for_sample(19, d);
                let f = ens.sample_lateral(&mut s);
                let z = ens.z_process(&f, gamma);
                z.iter().sum::<f64>() / z.len() as f64
            })
            .collect();
        let (m, se) = mean_stderr(&vals);
        let two_pi = 2.0 * std::f64::consts::PI;
        assert!((m - two_pi).abs() < 3.0 * se, "E[Z] = {m} ± {se}");
    }
}
