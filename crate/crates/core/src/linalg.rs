//! Dense symmetric factorization and triangular multiplication, blocked and
//! parallel but bit-deterministic: the accumulation order of every output
//! element is fixed regardless of thread count.

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix not positive definite at pivot {pivot} even with jitter {jitter:e}")]
    NotPositiveDefinite { pivot: usize, jitter: f64 },
}

/// Lower-triangular Cholesky factor stored as a full row-major n×n buffer
/// (upper part zeroed).
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub n: usize,
    pub data: Vec<f64>,
    /// Diagonal jitter that was added to make the factorization succeed.
    pub jitter: f64,
}

const PANEL: usize = 96;

/// In-place blocked right-looking Cholesky of the lower triangle of `a`.
fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<(), usize> {
    let mut k0 = 0;
    while k0 < n {
        let kb = PANEL.min(n - k0);
        // Unblocked factorization of the diagonal block.
        for j in k0..k0 + kb {
            let mut d = a[j * n + j];
            for t in k0..j {
                d -= a[j * n + t] * a[j * n + t];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(j);
            }
            let dj = d.sqrt();
            a[j * n + j] = dj;
            for i in j + 1..k0 + kb {
                let mut s = a[i * n + j];
                for t in k0..j {
                    s -= a[i * n + t] * a[j * n + t];
                }
                a[i * n + j] = s / dj;
            }
        }
        let end = k0 + kb;
        if end == n {
            break;
        }
        // Panel solve: rows below the block against the block's transpose.
        let (done, below) = a.split_at_mut(end * n);
        let diag = &done[k0 * n..];
        below.par_chunks_mut(n).for_each(|row| {
            for j in k0..end {
                let mut s = row[j];
                for t in k0..j {
                    s -= row[t] * diag[(j - k0) * n + t];
                }
                row[j] = s / diag[(j - k0) * n + j];
            }
        });
        // Trailing update: A22 -= L21 L21^T on the lower triangle only.
        let a_ptr = SendPtr(a.as_mut_ptr());
        let rows: Vec<usize> = (end..n).collect();
        rows.par_chunks(64).for_each(|chunk| {
            let p = a_ptr;
            for &i in chunk {
                // Row i updates columns end..=i; reads rows i and j in the
                // finished panel region, which no other task writes.
                unsafe {
                    let row_i = std::slice::from_raw_parts(p.0.add(i * n + k0), kb);
                    for j in end..=i {
                        let row_j = std::slice::from_raw_parts(p.0.add(j * n + k0), kb);
                        let mut s = 0.0;
                        for t in 0..kb {
                            s += row_i[t] * row_j[t];
                        }
                        *p.0.add(i * n + j) -= s;
                    }
                }
            }
        });
        k0 = end;
    }
    // Zero the strict upper triangle so the factor can be used densely.
    for i in 0..n {
        for j in i + 1..n {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct SendPtr(*mut f64);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

/// Factor a covariance matrix, escalating diagonal jitter up to `max_jitter`
/// (absolute, per diagonal entry) before giving up.
pub fn cholesky_with_jitter(
    cov: &[f64],
    n: usize,
    max_jitter: f64,
) -> Result<CholeskyFactor, LinalgError> {
    let mut jitter = 0.0;
    let mut last_pivot = 0;
    for attempt in 0..8 {
        let mut a = cov.to_vec();
        if jitter > 0.0 {
            for i in 0..n {
                a[i * n + i] += jitter;
            }
        }
        match cholesky_in_place(&mut a, n) {
            Ok(()) => {
                return Ok(CholeskyFactor {
                    n,
                    data: a,
                    jitter,
                })
            }
            Err(p) => {
                last_pivot = p;
                jitter = if jitter == 0.0 {
                    max_jitter * 1e-4
                } else {
                    jitter * 10.0
                };
                if jitter > max_jitter && attempt > 0 {
                    break;
                }
            }
        }
    }
    Err(LinalgError::NotPositiveDefinite {
        pivot: last_pivot,
        jitter,
    })
}

impl CholeskyFactor {
    /// y = L·x for a single vector.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = &self.data[i * n..i * n + i + 1];
            let mut s = 0.0;
            for (k, &l) in row.iter().enumerate() {
                s += l * x[k];
            }
            y[i] = s;
        }
        y
    }

    /// Y = L·X for a batch of vectors stored sample-major: `x[r*n + k]` is
    /// component k of sample r, and `out[r*n + i] = Σ_{k≤i} L_ik x[r][k]`.
    ///
    /// Cache-blocked over (i block, k block); every output element is a
    /// fixed-order sum, so the result does not depend on parallel scheduling.
    pub fn mul_batch_rows(&self, x: &[f64], rows: usize, out: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), rows * n);
        assert_eq!(out.len(), rows * n);
        const IB: usize = 128;
        const KB: usize = 256;
        let data = &self.data;
        let out_ptr = SendPtr(out.as_mut_ptr());
        let n_iblocks = n.div_ceil(IB);
        (0..n_iblocks).into_par_iter().for_each(|bi| {
            let p = out_ptr;
            let i0 = bi * IB;
            let i1 = (i0 + IB).min(n);
            let mut acc = vec![0.0f64; rows * (i1 - i0)];
            let mut k0 = 0;
            while k0 < i1 {
                let kend = (k0 + KB).min(n).min(i1);
                for i in i0..i1 {
                    let kmax = kend.min(i + 1);
                    if kmax <= k0 {
                        continue;
                    }
                    let lrow = &data[i * n + k0..i * n + kmax];
                    for r in 0..rows {
                        let xrow = &x[r * n + k0..r * n + kmax];
                        let mut s = 0.0;
                        for (lv, xv) in lrow.iter().zip(xrow) {
                            s += lv * xv;
                        }
                        acc[r * (i1 - i0) + (i - i0)] += s;
                    }
                }
                k0 = kend;
            }
            // Scatter the block of finished outputs; blocks are disjoint in i.
            unsafe {
                for r in 0..rows {
                    for i in i0..i1 {
                        *p.0.add(r * n + i) = acc[r * (i1 - i0) + (i - i0)];
                    }
                }
            }
        });
    }

    /// Max |(L Lᵀ − C)_{ij}| / max |C_ij| over the lower triangle.
    pub fn reconstruction_error(&self, cov: &[f64]) -> f64 {
        let n = self.n;
        let mut num = 0.0_f64;
        let mut den = 0.0_f64;
        for i in 0..n {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..=j {
                    s += self.data[i * n + k] * self.data[j * n + k];
                }
                let c = cov[i * n + j] + if i == j { self.jitter } else { 0.0 };
                num = num.max((s - c).abs());
                den = den.max(c.abs());
            }
        }
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn random_spd(n: usize, seed: u64) -> Vec<f64> {
        let mut s = Stream::for_sample(seed, 0);
        let m: Vec<f64> = (0..n * n).map(|_| s.normal()).collect();
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += m[i * n + k] * m[j * n + k];
                }
                cov[i * n + j] = acc + if i == j { 0.5 } else { 0.0 };
            }
        }
        cov
    }

    #[test]
    fn factor_reconstructs() {
        let n = 173;
        let cov = random_spd(n, 3);
        let f = cholesky_with_jitter(&cov, n, 1e-8).unwrap();
        assert_eq!(f.jitter, 0.0);
        assert!(f.reconstruction_error(&cov) < 1e-12);
    }

    #[test]
    fn batch_matches_single() {
        let n = 411;
        let cov = random_spd(n, 4);
        let f = cholesky_with_jitter(&cov, n, 1e-8).unwrap();
        let rows = 5;
        let mut s = Stream::for_sample(8, 0);
        let x: Vec<f64> = (0..rows * n).map(|_| s.normal()).collect();
        let mut out = vec![0.0; rows * n];
        f.mul_batch_rows(&x, rows, &mut out);
        for r in 0..rows {
            let yc = f.mul_vec(&x[r * n..(r + 1) * n]);
            for i in 0..n {
                assert!((out[r * n + i] - yc[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut cov = random_spd(20, 5);
        cov[0] = -5.0;
        assert!(cholesky_with_jitter(&cov, 20, 1e-10).is_err());
    }
}
