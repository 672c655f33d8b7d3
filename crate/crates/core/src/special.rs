//! The closed-form side: Zamolodchikov's Υ function, the DOZZ three-point
//! constant, and the DOZZ reflection coefficient.
//!
//! Υ is defined by a strip integral for 0 < Re z < Q,
//!
//! ```text
//! ln Υ(z) = ∫_0^∞ [ (Q/2−z)² e^{−t} − sinh²((Q/2−z) t/2) / (sinh(γt/4) sinh(t/γ)) ] dt/t,
//! ```
//!
//! and extended to the whole plane by the functional relations
//!
//! ```text
//! Υ(z + γ/2) = l(γz/2) (γ/2)^{1−γz} Υ(z),
//! Υ(z + 2/γ) = l(2z/γ) (γ/2)^{(4/γ)z − 1} Υ(z),
//! ```
//!
//! with zeros exactly on (−γ/2·ℕ − 2/γ·ℕ) ∪ (Q + γ/2·ℕ + 2/γ·ℕ).

use crate::gamma::{self, l_ratio, l_ratio_complex, GammaError};
use crate::params::LiouvilleParams;
use crate::quad::{integrate_geometric, QuadError};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("l(x) pole: {0}")]
    PoleAtNonpositiveInteger(f64),
    #[error("upsilon quadrature failure: {0}")]
    QuadratureFailure(#[from] QuadError),
    #[error("l-ratio pole during upsilon continuation at z = {0}")]
    ShiftPoleFailure(Complex64),
    #[error("DOZZ denominator upsilon vanishes (argument {0} on the zero lattice)")]
    PoleOfDozz(f64),
    #[error("reflection coefficient pole at alpha = {0}")]
    PoleOfReflection(f64),
}

impl From<GammaError> for SpecialError {
    fn from(e: GammaError) -> Self {
        match e {
            GammaError::PoleAtNonpositiveInteger(x) => SpecialError::PoleAtNonpositiveInteger(x),
        }
    }
}

/// Tolerance for snapping an argument onto the Υ zero lattice.
pub const ZERO_LATTICE_TOL: f64 = 1e-10;

/// Distance from z to the nearest zero of Υ.
///
/// The zeros are −mγ/2 − n·2/γ (m, n ≥ 0) and their reflections Q + mγ/2 + n·2/γ.
pub fn zero_lattice_distance(z: Complex64, gamma_: f64) -> f64 {
    let q = gamma_ / 2.0 + 2.0 / gamma_;
    let half = gamma_ / 2.0;
    let dual = 2.0 / gamma_;
    let mut best = f64::INFINITY;
    // Left family around 0 (negative reals) and right family around Q.
    for (origin, sign) in [(0.0, -1.0), (q, 1.0)] {
        let reach = (z.re - origin).abs() + 1.0;
        let m_max = (reach / half).ceil() as i64 + 1;
        for m in 0..=m_max {
            let base = origin + sign * m as f64 * half;
            // n chosen near the optimum; scan a small window for safety.
            let n_opt = ((z.re - base) * sign / dual).round().max(0.0) as i64;
            for n in n_opt.saturating_sub(1)..=n_opt + 1 {
                if n < 0 {
                    continue;
                }
                let p = base + sign * n as f64 * dual;
                let d = (z - p).norm();
                if d < best {
                    best = d;
                }
            }
        }
    }
    best
}

/// ln Υ(z) by quadrature, valid well inside the strip 0 < Re z < Q.
fn ln_upsilon_strip(z: Complex64, gamma_: f64) -> Result<Complex64, QuadError> {
    let q = gamma_ / 2.0 + 2.0 / gamma_;
    let a = Complex64::new(q / 2.0, 0.0) - z;
    let a2 = a * a;
    // Decay rate of the integrand: min(Re z, Q − Re z) for the sinh ratio,
    // 1 for the e^{−t} term.
    let rate = z.re.min(q - z.re).min(1.0);
    assert!(rate > 0.0, "strip quadrature called outside the open strip");
    let t_max = (38.0 + (1.0 + a.norm_sqr()).ln()) / rate;
    let t0 = 1e-4 / (1.0 + a.norm());

    // sinh²(At/2)/(sinh(γt/4) sinh(t/γ)), stable for all t: for t ≥ 1 use the
    // exponential form whose factors only ever decay.
    let b = if a.re >= 0.0 { a } else { -a };
    let ratio = move |t: f64| -> Complex64 {
        if t < 1.0 {
            let sh = (a * (t / 2.0)).sinh();
            sh * sh / ((gamma_ * t / 4.0).sinh() * (t / gamma_).sinh())
        } else {
            let head = ((b - q / 2.0) * t).exp();
            let c1 = 1.0 - (-b * t).exp();
            let d1 = 1.0 - (-gamma_ * t / 2.0).exp();
            let d2 = 1.0 - (-2.0 * t / gamma_).exp();
            head * c1 * c1 / (d1 * d2)
        }
    };
    let integrand = move |t: f64| (a2 * (-t).exp() - ratio(t)) / t;

    // Closed-form head for [0, t0]: the integrand is −A² + c₁ t − (A²/6) t² + O(t³).
    let r2 = a2 * (a2 / 12.0 - gamma_ * gamma_ / 96.0 - 1.0 / (6.0 * gamma_ * gamma_));
    let c1 = a2 / 2.0 - r2;
    let head = -a2 * t0 + c1 * (t0 * t0 / 2.0) - a2 * (t0 * t0 * t0 / 18.0);

    let body = integrate_geometric(integrand, t0, t_max, 1e-13)?;
    Ok(head + body)
}

/// Υ_{γ/2}(z) for arbitrary complex z, by strip quadrature plus shift
/// continuation. Exact 0 on the zero lattice (within [`ZERO_LATTICE_TOL`]).
pub fn upsilon(z: Complex64, gamma_: f64) -> Result<Complex64, SpecialError> {
    assert!(gamma_ > 0.0, "upsilon needs gamma > 0");
    if zero_lattice_distance(z, gamma_) <= ZERO_LATTICE_TOL {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let q = gamma_ / 2.0 + 2.0 / gamma_;
    let half = gamma_ / 2.0;
    // Stay a margin away from the strip walls where the integrand decay
    // degenerates; γ/2-shifts land us back inside.
    let margin = 0.25 * half.min(2.0 / gamma_);

    let mut w = z;
    let mut prefactor = Complex64::new(1.0, 0.0);
    let ln_half = Complex64::new(half.ln(), 0.0);
    let mut steps = 0usize;
    while w.re <= margin {
        // Υ(w) = Υ(w + γ/2) (γ/2)^{γw − 1} / l(γw/2)
        let l = l_ratio_complex(w * (gamma_ / 2.0))
            .map_err(|_| SpecialError::ShiftPoleFailure(w))?;
        if l.norm() == 0.0 {
            // A vanishing shift factor only happens on the zero lattice,
            // which was snapped above.
            return Err(SpecialError::ShiftPoleFailure(w));
        }
        prefactor *= (ln_half * (gamma_ * w - 1.0)).exp() / l;
        w += half;
        steps += 1;
        if steps > 4096 {
            return Err(SpecialError::ShiftPoleFailure(w));
        }
    }
    while w.re >= q - margin {
        // Υ(w) = l(γw'/2) (γ/2)^{1 − γw'} Υ(w') with w' = w − γ/2
        let wp = w - half;
        let l = l_ratio_complex(wp * (gamma_ / 2.0))
            .map_err(|_| SpecialError::ShiftPoleFailure(wp))?;
        prefactor *= l * (ln_half * (1.0 - gamma_ * wp)).exp();
        w = wp;
        steps += 1;
        if steps > 4096 {
            return Err(SpecialError::ShiftPoleFailure(w));
        }
    }
    let ln_ups = ln_upsilon_strip(w, gamma_)?;
    Ok(prefactor * ln_ups.exp())
}

/// Υ at a real argument.
pub fn upsilon_real(x: f64, gamma_: f64) -> Result<f64, SpecialError> {
    upsilon(Complex64::new(x, 0.0), gamma_).map(|v| v.re)
}

/// Υ′(0), evaluated as Υ(γ/2).
///
/// The limit z → 0 of the γ/2-shift relation gives Υ(γ/2) = lim Υ(z)/z since
/// l(γz/2)(γ/2)^{1−γz} ~ (2/(γz))·(γ/2) = 1/z, so the simple zero at the
/// origin has derivative exactly Υ(γ/2).
pub fn upsilon_prime_zero(gamma_: f64) -> Result<f64, SpecialError> {
    upsilon_real(gamma_ / 2.0, gamma_)
}

/// The DOZZ three-point constant C^DOZZ(α₁, α₂, α₃).
pub fn dozz_c(params: &LiouvilleParams, a1: f64, a2: f64, a3: f64) -> Result<f64, SpecialError> {
    let g = params.gamma;
    let q = params.q;
    let abar = a1 + a2 + a3;

    let num_args = [g / 2.0, a1, a2, a3];
    let den_args = [
        abar / 2.0 - q,
        abar / 2.0 - a1,
        abar / 2.0 - a2,
        abar / 2.0 - a3,
    ];

    let mut num = 1.0;
    for &x in &num_args {
        num *= upsilon_real(x, g)?;
    }
    let mut den = 1.0;
    for &x in &den_args {
        let u = upsilon_real(x, g)?;
        if u == 0.0 {
            if num != 0.0 {
                return Err(SpecialError::PoleOfDozz(x));
            }
            return Err(SpecialError::PoleOfDozz(x));
        }
        den *= u;
    }

    // (π μ l(γ²/4) (γ/2)^{2−γ²/2})^{(2Q−ᾱ)/γ}. The product π μ l(γ²/4) is
    // kept together so dual couplings (huge μ̃ against tiny l) stay exact.
    let base = std::f64::consts::PI * params.mu * l_ratio(g * g / 4.0)?;
    let pref = (base * (g / 2.0_f64).powf(2.0 - g * g / 2.0)).powf((2.0 * q - abar) / g);
    Ok(pref * num / den)
}

/// The DOZZ reflection coefficient
/// R(α) = −(πμ l(γ²/4))^{2(Q−α)/γ} · Γ(−γ(Q−α)/2)/Γ(γ(Q−α)/2) · Γ(−2(Q−α)/γ)/Γ(2(Q−α)/γ).
pub fn reflection_dozz(params: &LiouvilleParams, alpha: f64) -> Result<f64, SpecialError> {
    let g = params.gamma;
    let dq = params.q - alpha;
    let args = [
        -g * dq / 2.0,
        g * dq / 2.0,
        -2.0 * dq / g,
        2.0 * dq / g,
    ];
    for &x in &args {
        if gamma::is_nonpositive_integer(x) {
            return Err(SpecialError::PoleOfReflection(alpha));
        }
    }
    let base = std::f64::consts::PI * params.mu * l_ratio(g * g / 4.0)?;
    let pref = base.powf(2.0 * dq / g);
    let r1 = gamma::gamma(args[0]) / gamma::gamma(args[1]);
    let r2 = gamma::gamma(args[2]) / gamma::gamma(args[3]);
    Ok(-pref * r1 * r2)
}

/// Relative residual of the DOZZ shift equation (step γ in α₁):
/// C(α₁+γ, α₂, α₃)/C(α₁, α₂, α₃) against its l-ratio product.
pub fn dozz_shift_residual(
    params: &LiouvilleParams,
    a1: f64,
    a2: f64,
    a3: f64,
) -> Result<f64, SpecialError> {
    let g = params.gamma;
    let q = params.q;
    let abar = a1 + a2 + a3;
    let lhs = dozz_c(params, a1 + g, a2, a3)? / dozz_c(params, a1, a2, a3)?;
    let rhs = -(l_ratio(-g * g / 4.0)? / (std::f64::consts::PI * params.mu))
        * l_ratio(g * a1 / 2.0)?
        * l_ratio(g * a1 / 2.0 + g * g / 4.0)?
        * l_ratio(g / 4.0 * (abar - 2.0 * a1 - g))?
        / (l_ratio(g / 4.0 * (abar - 2.0 * q))?
            * l_ratio(g / 4.0 * (abar - 2.0 * a2))?
            * l_ratio(g / 4.0 * (abar - 2.0 * a3))?);
    Ok((lhs / rhs - 1.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn upsilon_is_one_at_half_q() {
        // The integrand vanishes identically at z = Q/2.
        for &g in &[0.7, 1.0, 1.37, 1.9] {
            let q = g / 2.0 + 2.0 / g;
            let v = upsilon_real(q / 2.0, g).unwrap();
            assert!((v - 1.0).abs() < 1e-10, "gamma={g}: {v}");
        }
    }

    #[test]
    fn upsilon_vanishes_on_lattice() {
        assert_eq!(upsilon_real(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(upsilon_real(-0.5, 1.0).unwrap(), 0.0); // −γ/2
        assert_eq!(upsilon_real(-2.0, 1.0).unwrap(), 0.0); // −2/γ
        assert_eq!(upsilon_real(2.5, 1.0).unwrap(), 0.0); // Q
        assert_eq!(upsilon_real(4.5, 1.0).unwrap(), 0.0); // Q + γ/2 + 2/γ·...
    }

    #[test]
    fn upsilon_reference_values() {
        // 40-digit quadrature references at γ = 1.
        let cases = [
            (0.5, 0.4420730733918110875822669148210971219208),
            (0.8, 0.7688259814695308589013147621696447746515),
            (1.8, 0.6675366468282767119452978143003646159759),
            (0.2, 0.1305525232538068632734867725199544329801),
            (0.9, 0.8559274431269157948777384266322280978981),
        ];
        for (x, expect) in cases {
            let v = upsilon_real(x, 1.0).unwrap();
            assert!(
                (v - expect).abs() / expect < 1e-11,
                "Upsilon({x}) = {v}, expected {expect}"
            );
        }
    }

    #[test]
    fn upsilon_reflection_symmetry() {
        let g = 1.0;
        let v1 = upsilon_real(0.8, g).unwrap();
        let v2 = upsilon_real(2.5 - 0.8, g).unwrap();
        assert!((v1 - v2).abs() / v1 < 1e-11);
    }

    #[test]
    fn upsilon_duality_in_gamma() {
        let v1 = upsilon_real(0.8, 1.0).unwrap();
        let v2 = upsilon_real(0.8, 4.0).unwrap();
        assert!((v1 - v2).abs() / v1 < 1e-10);
    }

    #[test]
    fn upsilon_continuation_matches_shift_relation() {
        // Continuation below the strip must agree with the inverse shift.
        let g = 1.3;
        let z = cx(-0.85);
        let ups = upsilon(z, g).unwrap();
        let rhs = upsilon(z + g / 2.0, g).unwrap()
            * (g / 2.0_f64).powf(g * z.re - 1.0)
            / l_ratio(g * z.re / 2.0).unwrap();
        assert!((ups - rhs).norm() / rhs.norm() < 1e-10);
    }

    #[test]
    fn upsilon_prime_zero_is_upsilon_at_half_gamma() {
        let g = 1.0;
        let d = upsilon_prime_zero(g).unwrap();
        assert!((d - 0.4420730733918110875822669148210971219208).abs() < 1e-12);
        // Finite-difference cross check with Richardson extrapolation.
        let h = 1e-5;
        let f1 = upsilon_real(h, g).unwrap() / h;
        let f2 = upsilon_real(h / 2.0, g).unwrap() / (h / 2.0);
        let fd = 2.0 * f2 - f1;
        assert!((d - fd).abs() / d < 1e-6, "upsilon'(0)={d} fd={fd}");
    }

    #[test]
    fn upsilon_complex_argument() {
        // Conjugate symmetry: Υ real on the real axis implies Υ(z̄) = Υ(z)̄.
        let g = 1.1;
        let z = Complex64::new(0.9, 0.4);
        let a = upsilon(z, g).unwrap();
        let b = upsilon(z.conj(), g).unwrap();
        assert!((a - b.conj()).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn dozz_reference_value() {
        let p = LiouvilleParams::new(1.0, 1.0).unwrap();
        let c = dozz_c(&p, 1.8, 1.8, 1.8).unwrap();
        let expect = 0.9980272846602777774793555827311220029468;
        assert!((c - expect).abs() / expect < 1e-10, "{c}");
    }

    #[test]
    fn dozz_permutation_symmetry() {
        let p = LiouvilleParams::new(1.0, 1.0).unwrap();
        let a = dozz_c(&p, 1.8, 1.7, 1.9).unwrap();
        let b = dozz_c(&p, 1.9, 1.8, 1.7).unwrap();
        let c = dozz_c(&p, 1.7, 1.9, 1.8).unwrap();
        assert!((a - b).abs() / a.abs() < 1e-12);
        assert!((a - c).abs() / a.abs() < 1e-12);
    }

    #[test]
    fn dozz_duality() {
        // γ = 1.2 has a finite positive dual coupling.
        let p = LiouvilleParams::new(1.2, 1.0).unwrap();
        let d = p.dual().unwrap();
        let a = dozz_c(&p, 1.6, 1.5, 1.55).unwrap();
        let b = dozz_c(&d, 1.6, 1.5, 1.55).unwrap();
        assert!((a - b).abs() / a.abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn dozz_pole_detected() {
        let p = LiouvilleParams::new(1.0, 1.0).unwrap();
        // ᾱ/2 − Q = 0 puts a denominator Υ exactly on the lattice.
        let r = dozz_c(&p, 2.0, 1.5, 1.5);
        assert!(matches!(r, Err(SpecialError::PoleOfDozz(_))));
    }

    #[test]
    fn reflection_reference_value() {
        let p = LiouvilleParams::new(1.0, 1.0).unwrap();
        let r = reflection_dozz(&p, 1.7).unwrap();
        let expect = 153.7138388797846929410905475814641562499;
        assert!((r - expect).abs() / expect < 1e-11, "{r}");
        let r6 = reflection_dozz(&p, 1.6).unwrap();
        let expect6 = 345.5041501053090548267980066738737848064;
        assert!((r6 - expect6).abs() / expect6 < 1e-11, "{r6}");
    }

    #[test]
    fn reflection_tends_to_minus_one_at_q() {
        let p = LiouvilleParams::new(1.0, 1.0).unwrap();
        let r = reflection_dozz(&p, p.q - 1e-7).unwrap();
        assert!((r + 1.0).abs() < 1e-5, "{r}");
    }

    #[test]
    fn reflection_pole_points_rejected() {
        let p = LiouvilleParams::new(1.0, 1.0).unwrap();
        // α = 2/γ − (n−1)γ/2: n = 1 gives α = 2, where 2(Q−α)/γ = 1 and
        // Γ(−1) blows up.
        assert!(matches!(
            reflection_dozz(&p, 2.0),
            Err(SpecialError::PoleOfReflection(_))
        ));
    }

    #[test]
    fn dozz_shift_equation_closes() {
        let p = LiouvilleParams::new(1.13, 0.85).unwrap();
        let r = dozz_shift_residual(&p, 1.62, 1.81, 1.55).unwrap();
        assert!(r < 1e-9, "residual {r:e}");
    }

    #[test]
    fn two_point_limit_on_closed_forms() {
        // ε C(α, ε, α) → 4 R(α), linearly in ε; Richardson over a decade.
        let p = LiouvilleParams::new(1.0, 1.0).unwrap();
        let alpha = 1.7;
        let f = |eps: f64| eps * dozz_c(&p, alpha, eps, alpha).unwrap();
        let extrap = (10.0 * f(1e-4) - f(1e-3)) / 9.0;
        let target = 4.0 * reflection_dozz(&p, alpha).unwrap();
        assert!((extrap - target).abs() / target.abs() < 1e-5);
    }
}
