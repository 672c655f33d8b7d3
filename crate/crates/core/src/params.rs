//! Coupling data shared by every module.

use crate::gamma::l_ratio;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("gamma must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("mu must be positive, got {0}")]
    NonPositiveMu(f64),
}

/// The Liouville coupling data: γ, the background charge Q = γ/2 + 2/γ, the
/// cosmological constant μ and its dual μ̃.
///
/// Couplings with γ ≥ 2 are accepted for closed-form evaluation only (the
/// dual of γ < 2 lands there); the probabilistic estimators reject them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiouvilleParams {
    pub gamma: f64,
    pub q: f64,
    pub mu: f64,
    /// μ̃ = (μ π l(γ²/4))^{4/γ²} / (π l(4/γ²)). Infinite when l(4/γ²) = 0,
    /// i.e. when 4/γ² is a positive integer.
    pub mu_dual: f64,
    pub closed_form_only: bool,
}

impl LiouvilleParams {
    pub fn new(gamma: f64, mu: f64) -> Result<Self, ParamsError> {
        if !(gamma > 0.0) {
            return Err(ParamsError::NonPositiveGamma(gamma));
        }
        if !(mu > 0.0) {
            return Err(ParamsError::NonPositiveMu(mu));
        }
        let q = gamma / 2.0 + 2.0 / gamma;
        Ok(LiouvilleParams {
            gamma,
            q,
            mu,
            mu_dual: mu_dual(gamma, mu),
            closed_form_only: gamma >= 2.0,
        })
    }

    /// The dual coupling (γ → 4/γ, μ → μ̃). Q is invariant.
    pub fn dual(&self) -> Result<Self, ParamsError> {
        Self::new(4.0 / self.gamma, self.mu_dual)
    }

    /// s = (Σ α_k − 2Q)/γ, the power of the chaos mass in the correlation.
    pub fn s_exponent(&self, alphas: &[f64]) -> f64 {
        (alphas.iter().sum::<f64>() - 2.0 * self.q) / self.gamma
    }
}

/// μ̃ = (μ π l(γ²/4))^{4/γ²} / (π l(4/γ²)).
pub fn mu_dual(gamma: f64, mu: f64) -> f64 {
    let g2 = gamma * gamma;
    let num = match l_ratio(g2 / 4.0) {
        Ok(v) => (mu * std::f64::consts::PI * v).powf(4.0 / g2),
        Err(_) => return f64::NAN,
    };
    match l_ratio(4.0 / g2) {
        Ok(den) => num / (std::f64::consts::PI * den),
        Err(_) => f64::NAN,
    }
}

/// A vertex-operator insertion: weight α at location z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Insertion {
    pub alpha: f64,
    pub z: Complex64,
}

impl Insertion {
    pub fn new(alpha: f64, z: Complex64) -> Self {
        Insertion { alpha, z }
    }

    pub fn at(alpha: f64, re: f64, im: f64) -> Self {
        Insertion {
            alpha,
            z: Complex64::new(re, im),
        }
    }
}

/// Checks that insertion locations are pairwise distinct.
pub fn check_distinct(insertions: &[Insertion]) -> bool {
    for (i, a) in insertions.iter().enumerate() {
        for b in insertions.iter().skip(i + 1) {
            if (a.z - b.z).norm() == 0.0 {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_from_gamma() {
        let p = LiouvilleParams::new(1.0, 1.0).unwrap();
        assert_eq!(p.q, 2.5);
        assert!(!p.closed_form_only);
        let p2 = LiouvilleParams::new(2.0, 1.0).unwrap();
        assert_eq!(p2.q, 2.0);
        assert!(p2.closed_form_only);
    }

    #[test]
    fn mu_dual_reference() {
        // γ = 1.2, μ = 1: 40-digit evaluation gives 66.51670613156844818...
        let p = LiouvilleParams::new(1.2, 1.0).unwrap();
        let expected = 66.51670613156844818775547243059518653702;
        assert!((p.mu_dual - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn mu_dual_diverges_when_l_vanishes() {
        // γ = 1: l(4/γ²) = l(4) = 0 exactly, so μ̃ = (π l(1/4))⁴ / 0 = ∞.
        let p = LiouvilleParams::new(1.0, 1.0).unwrap();
        assert!(p.mu_dual.is_infinite());
    }

    #[test]
    fn mu_dual_is_an_involution() {
        let p = LiouvilleParams::new(1.3, 0.7).unwrap();
        let d = p.dual().unwrap();
        assert!((d.q - p.q).abs() < 1e-14);
        assert!((d.mu_dual - p.mu).abs() / p.mu < 1e-11);
        let dd = d.dual().unwrap();
        assert!((dd.gamma - p.gamma).abs() < 1e-14);
        assert!((dd.mu - p.mu).abs() / p.mu < 1e-11);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            LiouvilleParams::new(-1.0, 1.0),
            Err(ParamsError::NonPositiveGamma(_))
        ));
        assert!(matches!(
            LiouvilleParams::new(1.0, 0.0),
            Err(ParamsError::NonPositiveMu(_))
        ));
    }

    #[test]
    fn seiberg_exponent() {
        let p = LiouvilleParams::new(1.0, 1.0).unwrap();
        let s = p.s_exponent(&[1.8, 1.8, 1.8]);
        assert!((s - 0.4).abs() < 1e-14);
    }
}
