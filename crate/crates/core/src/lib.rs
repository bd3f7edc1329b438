//! Discrete laboratory for the two-phase free-boundary functional
//!
//! ```text
//! J(u) = ∫ |∇u|² + q₊² χ{u>0} + q₋² χ{u<0}
//! ```
//!
//! and its one-phase variant, on rectangular lattices in two and three
//! dimensions. The crate covers
//!
//! - [`lattice`]: grids, nodal functions, cell gradients and ball/sphere quadrature;
//! - [`harmonic`]: energy-minimizing extensions on balls and the disk Poisson integral;
//! - [`functional`]: evaluation of `J` on balls, competitor families and almost-minimality defects;
//! - [`solver`]: discrete minimizers by smoothed-Heaviside continuation;
//! - [`diagnostics`]: energy averages, boundary averages, case labels and nondegeneracy checks;
//! - [`monotonicity`]: the weighted energies `A±` and the two-phase functional `Φ(r)`;
//! - [`blowup`]: rescalings, blow-up sequences and their convergence reports.
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the command
//! line live in the `fblab` companion crate. The `fft` feature (which pulls in
//! `std`) replaces the dense sine transforms of the Poisson solver with FFTs.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(unsafe_code)]
// `!(x > 0.0)` is how parameters reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

mod error;
mod math;
mod sum;

pub mod blowup;
pub mod diagnostics;
pub mod functional;
pub mod harmonic;
pub mod lattice;
pub mod monotonicity;
pub mod poisson;
pub mod solver;

pub use error::{Error, Result};
pub use sum::KahanSum;
