//! Monte Carlo estimation of the probabilistic N-point correlation functions
//! on the sphere: GFF sampling against the kernel
//! K(x,y) = ln 1/|x−y| + ln|x|₊ + ln|y|₊, chaos weights
//! e^{γX − (γ²/2)E[X²]} g(x)d²x at the grid's regularization scale, and the
//! fractional negative moments that build the correlations.

mod df;
mod estimators;
mod grid;

pub use df::{df_check, DfCheck};
pub(crate) use estimators::rho_power_samples;
pub use estimators::{
    admissibility, correlation_estimate, girsanov_residual, liouville_measure_expectation,
    structure_constant_estimate, structure_constant_estimate_with, Admissibility, GirsanovCheck,
};
pub use grid::Cell;

use crate::gamma;
use crate::linalg::{cholesky_with_jitter, CholeskyFactor, LinalgError};
use crate::params::{check_distinct, Insertion, LiouvilleParams};
use crate::rng::Stream;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SphereError {
    #[error("covariance factorization failed: {0}")]
    FactorizationFailure(#[from] LinalgError),
    #[error("grid would need {0} cells (max 16384)")]
    TooManyCells(usize),
    #[error("gamma = {0} outside the chaos range (0, 2)")]
    GammaOutOfRange(f64),
    #[error("insertions are not a subset of the ensemble refinement set")]
    InsertionMismatch,
    #[error("weights violate the extended Seiberg bounds")]
    InadmissibleWeights,
    #[error("s = {0} hits a pole of the Gamma prefactor")]
    GammaPole(f64),
    #[error("insertion locations must be pairwise distinct")]
    CoincidentInsertions,
    #[error("probabilistic estimators require gamma in (0, 2)")]
    ClosedFormOnlyParams,
}

pub const MAX_CELLS: usize = 16384;

/// A factorized discretization of the sphere adapted to a set of insertions.
pub struct SphereEnsemble {
    pub cells: Vec<Cell>,
    pub insertions: Vec<Insertion>,
    pub alpha_infinity: f64,
    pub resolution: u32,
    factor: CholeskyFactor,
}

impl SphereEnsemble {
    /// Builds the grid, fills the regularized covariance and factorizes it.
    ///
    /// Deterministic: the same inputs give a bit-identical ensemble.
    pub fn build(
        params: &LiouvilleParams,
        resolution: u32,
        insertions: &[Insertion],
        alpha_infinity: f64,
    ) -> Result<Self, SphereError> {
        if !check_distinct(insertions) {
            return Err(SphereError::CoincidentInsertions);
        }
        let cfg = grid::GridConfig {
            resolution,
            gamma: params.gamma,
        };
        let cells = grid::build_cells(&cfg, insertions, alpha_infinity);
        let n = cells.len();
        if n > MAX_CELLS {
            return Err(SphereError::TooManyCells(n));
        }
        let mut cov = vec![0.0; n * n];
        let lp: Vec<f64> = cells.iter().map(|c| c.center.norm().max(1.0).ln()).collect();
        cov.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let xi = cells[i].center;
            for j in 0..n {
                row[j] = if i == j {
                    cells[i].var
                } else {
                    -(xi - cells[j].center).norm().ln() + lp[i] + lp[j]
                };
            }
        });
        let trace: f64 = cells.iter().map(|c| c.var).sum();
        let factor = cholesky_with_jitter(&cov, n, 1e-10 * trace)?;
        Ok(SphereEnsemble {
            cells,
            insertions: insertions.to_vec(),
            alpha_infinity,
            resolution,
            factor,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.mass).sum()
    }

    /// The regularized covariance entry used for (i, j).
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.cells[i].var
        } else {
            let (a, b) = (self.cells[i].center, self.cells[j].center);
            -(a - b).norm().ln() + a.norm().max(1.0).ln() + b.norm().max(1.0).ln()
        }
    }

    /// Worst-entry relative reconstruction error of the factorization.
    pub fn factorization_residual(&self) -> f64 {
        let n = self.n_cells();
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                cov[i * n + j] = self.covariance(i, j);
            }
        }
        self.factor.reconstruction_error(&cov)
    }

    pub fn jitter(&self) -> f64 {
        self.factor.jitter
    }

    /// One field draw from the given stream.
    pub fn sample_field(&self, stream: &mut Stream) -> Vec<f64> {
        let n = self.n_cells();
        let mut xi = vec![0.0; n];
        stream.fill_normals(&mut xi);
        self.factor.mul_vec(&xi)
    }

    /// Runs `visit(sample_index, field)` over per-sample counter streams,
    /// parallel over batches, results returned in sample order.
    pub fn sample_map<T: Send>(
        &self,
        n_samples: u64,
        seed: u64,
        visit: impl Fn(u64, &[f64]) -> T + Sync,
    ) -> Vec<T> {
        const BATCH: u64 = 64;
        let n = self.n_cells();
        let n_batches = n_samples.div_ceil(BATCH);
        let mut out: Vec<Vec<T>> = (0..n_batches)
            .into_par_iter()
            .map(|b| {
                let lo = b * BATCH;
                let hi = ((b + 1) * BATCH).min(n_samples);
                let rows = (hi - lo) as usize;
                let mut xi = vec![0.0; rows * n];
                for (r, row) in xi.chunks_mut(n).enumerate() {
                    let mut stream = Stream::for_sample(seed, lo + r as u64);
                    stream.fill_normals(row);
                }
                let mut fields = vec![0.0; rows * n];
                self.factor.mul_batch_rows(&xi, rows, &mut fields);
                fields
                    .chunks(n)
                    .enumerate()
                    .map(|(r, field)| visit(lo + r as u64, field))
                    .collect()
            })
            .collect();
        let mut flat = Vec::with_capacity(n_samples as usize);
        for batch in out.drain(..) {
            flat.extend(batch);
        }
        flat
    }
}

/// Chaos weights e^{γ X_i − (γ²/2) Var X_i} · mass_i for one field draw.
pub fn gmc_weights(
    field: &[f64],
    ens: &SphereEnsemble,
    gamma_: f64,
) -> Result<Vec<f64>, SphereError> {
    if !(gamma_ > 0.0 && gamma_ < 2.0) {
        return Err(SphereError::GammaOutOfRange(gamma_));
    }
    Ok(ens
        .cells
        .iter()
        .zip(field)
        .map(|(c, &x)| (gamma_ * x - 0.5 * gamma_ * gamma_ * c.var).exp() * c.mass)
        .collect())
}

/// ln of the Coulomb factor F(x) = |x|₊^{γ(Σα + α_∞)} ∏ |x−z_k|^{−γα_k}.
pub fn coulomb_ln_f(
    x: Complex64,
    insertions: &[Insertion],
    alpha_infinity: f64,
    gamma_: f64,
) -> f64 {
    let total: f64 = insertions.iter().map(|i| i.alpha).sum::<f64>() + alpha_infinity;
    let mut v = gamma_ * total * x.norm().max(1.0).ln();
    for ins in insertions {
        v -= gamma_ * ins.alpha * (x - ins.z).norm().ln();
    }
    v
}

/// F at every cell center.
pub fn coulomb_factors(
    ens: &SphereEnsemble,
    insertions: &[Insertion],
    alpha_infinity: f64,
    gamma_: f64,
) -> Vec<f64> {
    ens.cells
        .iter()
        .map(|c| coulomb_ln_f(c.center, insertions, alpha_infinity, gamma_).exp())
        .collect()
}

/// Σ F(x_i) w_i against a chaos measure drawn on this ensemble.
///
/// The requested insertions must sit at ensemble refinement locations.
pub fn rho_n_point(
    weights: &[f64],
    ens: &SphereEnsemble,
    insertions: &[Insertion],
    gamma_: f64,
) -> Result<f64, SphereError> {
    for ins in insertions {
        if ins.alpha > 0.0
            && !ens
                .insertions
                .iter()
                .any(|e| (e.z - ins.z).norm() < 1e-12)
        {
            return Err(SphereError::InsertionMismatch);
        }
    }
    let f = coulomb_factors(ens, insertions, ens.alpha_infinity, gamma_);
    Ok(f.iter().zip(weights).map(|(a, b)| a * b).sum())
}

/// Γ(s) for the correlation prefactor, rejecting the poles at s ∈ −ℕ.
pub(crate) fn gamma_prefactor(s: f64) -> Result<f64, SphereError> {
    if gamma::is_nonpositive_integer(s) {
        return Err(SphereError::GammaPole(s));
    }
    Ok(gamma::gamma(s))
}
