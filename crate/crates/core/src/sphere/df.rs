//! The n = 1 Dotsenko–Fateev check: the residue integral
//! ∫_ℂ |x|^{−γa₁} |x−1|^{−γa₂} d²x against its Γ-function closed form
//! π / (l(γa₁/2) l(γa₂/2) l(γa₃/2)) with γ(a₁+a₂+a₃) = 4.

use crate::gamma::l_ratio;
use crate::quad::integrate;
use crate::special::SpecialError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DfError {
    #[error("integrand not integrable: need γa1 < 2, γa2 < 2, γ(a1+a2) > 2")]
    NonIntegrable,
    #[error(transparent)]
    Special(#[from] SpecialError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DfCheck {
    pub quadrature: f64,
    pub closed_form: f64,
    /// a₃ determined by γ(a₁+a₂+a₃) = 4.
    pub a3: f64,
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Average over θ of f(r e^{iθ}) by the trapezoid rule (spectrally accurate
/// for smooth periodic integrands).
fn theta_mean(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..n {
        acc += f(TWO_PI * (k as f64 + 0.5) / n as f64);
    }
    acc / n as f64
}

/// ∫_{disk(center, 1/2)} |x − center|^{−p_loc} |x − other|^{−p_other} d²x
/// with the radial power substituted away (u = r^{2−p_loc}).
fn disk_part(p_loc: f64, p_other: f64, center: f64, other: f64) -> Result<f64, DfError> {
    let p = 2.0 - p_loc;
    let u_max = 0.5f64.powf(p) / p;
    let value = integrate(
        |u: f64| {
            let r = (p * u).powf(1.0 / p);
            TWO_PI
                * theta_mean(128, |th| {
                    let d2 = r * r + (center - other) * (center - other)
                        - 2.0 * r * (other - center) * th.cos();
                    d2.sqrt().powf(-p_other)
                })
        },
        0.0,
        u_max,
        1e-9,
    )
    .map_err(SpecialError::from)?;
    Ok(value)
}

/// ∫_{|x| > 2} |x|^{−γa₁} |x−1|^{−γa₂} d²x via v = r^{−q}, q = γ(a₁+a₂) − 2.
fn exterior_part(pa: f64, pb: f64) -> Result<f64, DfError> {
    let q = pa + pb - 2.0;
    let v_max = 2.0f64.powf(-q);
    let value = integrate(
        |v: f64| {
            if v == 0.0 {
                return TWO_PI / q;
            }
            let r = v.powf(-1.0 / q);
            TWO_PI / q
                * theta_mean(128, |th| {
                    // |x−1| = r |1 − e^{−iθ}/r|
                    let d2 = 1.0 + 1.0 / (r * r) - 2.0 * th.cos() / r;
                    d2.sqrt().powf(-pb)
                })
        },
        0.0,
        v_max,
        1e-9,
    )
    .map_err(SpecialError::from)?;
    Ok(value)
}

/// The annulus 1/2 ≤ |x| ≤ 2 minus the disk around 1.
fn middle_part(pa: f64, pb: f64) -> Result<f64, DfError> {
    let radial = |th: f64| -> f64 {
        let integrand = |r: f64| {
            let d2 = r * r + 1.0 - 2.0 * r * th.cos();
            r * r.powf(-pa) * d2.sqrt().powf(-pb)
        };
        let c = th.cos();
        let disc = c * c - 0.75;
        let segs: Vec<(f64, f64)> = if disc > 0.0 {
            let r_lo = c - disc.sqrt();
            let r_hi = c + disc.sqrt();
            vec![(0.5, r_lo.max(0.5)), (r_hi.min(2.0), 2.0)]
        } else {
            vec![(0.5, 2.0)]
        };
        segs.iter()
            .filter(|(a, b)| b > a)
            .map(|&(a, b)| integrate(&integrand, a, b, 1e-11).unwrap_or(f64::NAN))
            .sum()
    };
    // The excluded-interval endpoints appear at |θ| = π/6; split there so the
    // square-root cusp sits on panel boundaries.
    let sixth = std::f64::consts::PI / 6.0;
    let mut total = 0.0;
    for (a, b) in [
        (0.0, sixth),
        (sixth, std::f64::consts::PI),
    ] {
        total += 2.0 * integrate(radial, a, b, 1e-8).map_err(SpecialError::from)?;
    }
    Ok(total)
}

/// Cross-checks the two-dimensional quadrature of the Dotsenko–Fateev
/// integral against its Γ closed form. γ a₃ = 4 − γ(a₁+a₂).
pub fn df_check(gamma_: f64, a1: f64, a2: f64) -> Result<DfCheck, DfError> {
    let pa = gamma_ * a1;
    let pb = gamma_ * a2;
    if pa >= 2.0 || pb >= 2.0 || pa + pb <= 2.0 {
        return Err(DfError::NonIntegrable);
    }
    let a3 = (4.0 - pa - pb) / gamma_;
    let quadrature = disk_part(pa, pb, 0.0, 1.0)?
        + disk_part(pb, pa, 1.0, 0.0)?
        + middle_part(pa, pb)?
        + exterior_part(pa, pb)?;
    let closed_form = std::f64::consts::PI
        / (l_ratio(pa / 2.0).map_err(SpecialError::from)?
            * l_ratio(pb / 2.0).map_err(SpecialError::from)?
            * l_ratio(gamma_ * a3 / 2.0).map_err(SpecialError::from)?);
    Ok(DfCheck {
        quadrature,
        closed_form,
        a3,
    })
}
