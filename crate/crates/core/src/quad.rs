//! Adaptive Gauss–Kronrod quadrature (7-15 pair) over real and complex
//! integrands, plus the panel helpers used by the Υ integral and the
//! Dotsenko–Fateev check.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature failed to converge: estimated error {est:e} above tolerance {tol:e}")]
    NotConverged { est: f64, tol: f64 },
}

/// Scalar types the adaptive rule can integrate.
pub trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn norm(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        num_complex::Complex::norm(self)
    }
}

// 15-point Kronrod nodes (positive half) and weights, 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss–Kronrod 7-15 panel: returns (kronrod value, error estimate).
fn gk15<T: QuadValue>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc.scale(WGK[7]);
    let mut gauss = fc.scale(WG[3]);
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        let fsum = f1.add(f2);
        kron = kron.add(fsum.scale(WGK[j]));
        if j % 2 == 1 {
            gauss = gauss.add(fsum.scale(WG[j / 2]));
        }
    }
    let err = kron.add(gauss.scale(-1.0)).norm() * h;
    (kron.scale(h), err)
}

/// Adaptively integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<T: QuadValue>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<T, QuadError> {
    // Stack of (lo, hi, value, err) intervals, refined worst-first.
    let (v0, e0) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v0, e0)];
    let max_intervals = 4096;
    loop {
        let total_err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if total_err <= tol {
            let mut acc = T::zero();
            for iv in &intervals {
                acc = acc.add(iv.2);
            }
            return Ok(acc);
        }
        if intervals.len() >= max_intervals {
            return Err(QuadError::NotConverged {
                est: total_err,
                tol,
            });
        }
        // Split the interval with the largest error estimate.
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (vl, el) = gk15(&f, lo, mid);
        let (vr, er) = gk15(&f, mid, hi);
        intervals.push((lo, mid, vl, el));
        intervals.push((mid, hi, vr, er));
    }
}

/// Integrate over `[a, b]` split into geometrically growing panels.
///
/// Suits integrands smooth on (0, ∞) whose natural scale is logarithmic in t
/// (the Υ integrand). Each panel is handled adaptively.
pub fn integrate_geometric<T: QuadValue>(
    f: impl Fn(f64) -> T + Copy,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<T, QuadError> {
    assert!(a > 0.0 && b > a);
    let n_panels = ((b / a).ln() / std::f64::consts::LN_2).ceil().max(1.0) as usize;
    let ratio = (b / a).powf(1.0 / n_panels as f64);
    let per_panel_tol = tol / n_panels as f64;
    let mut acc = T::zero();
    let mut lo = a;
    for _ in 0..n_panels {
        let hi = (lo * ratio).min(b);
        acc = acc.add(integrate(f, lo, hi, per_panel_tol)?);
        lo = hi;
    }
    Ok(acc)
}
