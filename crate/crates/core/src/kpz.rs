//! Closed-form solvers for the central-charge relation c_M + c_L = 26
//! (c_L = 1 + 6Q²) and the quadratic weight equation Δ_σ + Δ_α = 1.

use crate::params::LiouvilleParams;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KpzError {
    #[error("central charge must be < 1, got {0}")]
    CentralChargeTooLarge(f64),
    #[error("no real solution: delta_sigma = {0} is below 1 - Q^2/4")]
    NoRealSolution(f64),
}

/// A solved matter-weight/Liouville-weight pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KpzSolution {
    pub gamma: f64,
    pub alpha: f64,
    pub delta_sigma: f64,
    pub c_matter: f64,
    pub delta_alpha: f64,
}

/// γ = (√(25 − c_m) − √(1 − c_m)) / √6, the unique solution in (0, 2].
pub fn gamma_from_central_charge(c_m: f64) -> Result<f64, KpzError> {
    if c_m >= 1.0 {
        return Err(KpzError::CentralChargeTooLarge(c_m));
    }
    Ok(((25.0 - c_m).sqrt() - (1.0 - c_m).sqrt()) / 6.0f64.sqrt())
}

/// c_L = 1 + 6Q² for the given coupling; the inverse of
/// [`gamma_from_central_charge`] through c_m = 26 − c_L.
pub fn liouville_central_charge(gamma: f64) -> f64 {
    let q = gamma / 2.0 + 2.0 / gamma;
    1.0 + 6.0 * q * q
}

/// Conformal weight Δ_α = (α/2)(Q − α/2).
pub fn conformal_weight(params: &LiouvilleParams, alpha: f64) -> f64 {
    (alpha / 2.0) * (params.q - alpha / 2.0)
}

/// The α < Q branch of Δ_σ + Δ_α = 1: α = Q − √(Q² − 4(1 − Δ_σ)).
pub fn alpha_from_weight(params: &LiouvilleParams, delta_sigma: f64) -> Result<KpzSolution, KpzError> {
    let q = params.q;
    let disc = q * q - 4.0 * (1.0 - delta_sigma);
    if disc < 0.0 {
        return Err(KpzError::NoRealSolution(delta_sigma));
    }
    let alpha = q - disc.sqrt();
    Ok(KpzSolution {
        gamma: params.gamma,
        alpha,
        delta_sigma,
        c_matter: 26.0 - liouville_central_charge(params.gamma),
        delta_alpha: conformal_weight(params, alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_and_reference_charges() {
        // c_m = 1 sits exactly at γ = 2.
        assert!(matches!(
            gamma_from_central_charge(1.0),
            Err(KpzError::CentralChargeTooLarge(_))
        ));
        let g = gamma_from_central_charge(1.0 - 1e-12).unwrap();
        assert!((g - 2.0).abs() < 1e-6);
        // Pure gravity c_m = 0: γ = 4/√6.
        let g0 = gamma_from_central_charge(0.0).unwrap();
        assert!((g0 - 4.0 / 6.0f64.sqrt()).abs() < 1e-12);
        assert!((g0 - 1.6329931618554520654).abs() < 1e-12);
    }

    #[test]
    fn central_charge_round_trip() {
        for &g in &[0.3, 0.9, 1.2, 1.63, 1.99] {
            let c_m = 26.0 - liouville_central_charge(g);
            let g2 = gamma_from_central_charge(c_m).unwrap();
            assert!((g - g2).abs() < 1e-12, "gamma {g} -> {g2}");
        }
    }

    #[test]
    fn weights() {
        let p = LiouvilleParams::new(1.0, 1.0).unwrap();
        // Δ_γ = 1 for α = γ.
        assert!((conformal_weight(&p, p.gamma) - 1.0).abs() < 1e-14);
        assert!((conformal_weight(&p, p.q) - p.q * p.q / 4.0).abs() < 1e-14);
        assert_eq!(conformal_weight(&p, 0.0), 0.0);
    }

    #[test]
    fn weight_equation_branches() {
        let p = LiouvilleParams::new(1.37, 1.0).unwrap();
        // Δ_σ = 0 → α = γ.
        let s = alpha_from_weight(&p, 0.0).unwrap();
        assert!((s.alpha - p.gamma).abs() < 1e-12);
        // Discriminant zero → α = Q.
        let s = alpha_from_weight(&p, 1.0 - p.q * p.q / 4.0).unwrap();
        assert!((s.alpha - p.q).abs() < 1e-12);
        // Δ_σ = 1 → α = 0.
        let s = alpha_from_weight(&p, 1.0).unwrap();
        assert!(s.alpha.abs() < 1e-12);
        // Below the real-solution threshold.
        assert!(alpha_from_weight(&p, -p.q * p.q / 4.0).is_err());
    }

    #[test]
    fn weight_equation_closes() {
        let p = LiouvilleParams::new(0.8, 1.0).unwrap();
        for &ds in &[-0.3, 0.0, 0.4, 0.9, 1.0, 1.5] {
            let sol = alpha_from_weight(&p, ds).unwrap();
            assert!(sol.alpha <= p.q + 1e-15);
            assert!((sol.delta_alpha + ds - 1.0).abs() < 1e-12);
        }
    }
}
