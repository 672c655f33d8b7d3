//! Numerical laboratory for Liouville correlation functions.
//!
//! The crate has two halves that check each other:
//!
//! * the closed-form side: the Γ-ratio `l`, Zamolodchikov's Υ function, the
//!   DOZZ three-point constant and its reflection coefficient, the BPZ
//!   hypergeometric solutions and the shift equations they satisfy
//!   ([`special`], [`bpz`], [`kpz`]);
//! * the probabilistic side: Gaussian free field sampling on a two-chart
//!   sphere grid, Gaussian multiplicative chaos weights, Monte Carlo
//!   estimators for N-point correlations ([`sphere`]), and the cylinder
//!   machinery for GMC tails and reflection coefficients ([`cylinder`]).
//!
//! All Monte Carlo estimators draw from counter-based per-sample RNG streams
//! keyed by `(seed, sample index)` and reduce in sample order, so results are
//! bit-identical for a fixed seed regardless of thread count.

pub mod bpz;
pub mod cylinder;
pub mod gamma;
pub mod kpz;
pub mod linalg;
pub mod params;
pub mod quad;
pub mod rng;
pub mod special;
pub mod sphere;
pub mod stats;

pub use num_complex::Complex64;
pub use params::{Insertion, LiouvilleParams, ParamsError};
pub use stats::McEstimate;
