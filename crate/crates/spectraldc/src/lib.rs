//! Dense eigenvalue and SVD algorithms that minimize data movement, plus an
//! instrumented two-level memory model that measures it.
//!
//! The crate provides four layers:
//!
//! - **Dense core** ([`matrix`], [`kernels`], [`qr`], [`jacobi`],
//!   [`random`]): column-major matrices, blocked multiply/solve kernels,
//!   Householder factorizations in all four corners with tree-based panel
//!   QR, Haar-distributed random rotations, and slow Jacobi reference
//!   solvers used as accuracy oracles.
//! - **Randomized spectral methods** ([`randurv`], [`splitdc`]):
//!   rank-revealing URV/ULV decompositions (also of matrix products, with
//!   no inverses formed), implicit repeated squaring, and divide-and-conquer
//!   drivers for pencils, nonsymmetric, symmetric, and singular value
//!   problems.
//! - **Structured reductions** ([`trevc`], [`sbr`]): blocked eigenvectors of
//!   triangular matrices, and successive band reduction pipelines for the
//!   symmetric eigenproblem and the SVD.
//! - **Cost accounting** ([`ledger`], [`costs`]): the flop/word/message
//!   ledger every kernel reports to, closed-form sequential and parallel
//!   cost calculators, and a reduction demonstrator tying QR to Schur form.
//!
//! Every runnable capability has a worked example under `examples/`; the
//! `spectraldc` binary exposes experiment drivers over the same library.

pub mod costs;
pub mod error;
pub mod experiment;
pub mod io;
pub mod jacobi;
pub mod kernels;
pub mod ledger;
pub mod matrix;
pub mod qr;
pub mod random;
pub mod randurv;
pub mod sbr;
pub mod scalar;
pub mod splitdc;
pub mod trevc;

pub use error::{Error, Result};
pub use ledger::{CostLedger, Counters};
pub use matrix::{gershgorin_interval, gershgorin_radius, Matrix, Norm};
pub use scalar::{Scalar, ScalarKind};

pub use num_complex::Complex64;
