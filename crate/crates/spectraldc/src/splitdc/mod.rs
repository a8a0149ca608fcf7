//! Randomized spectral divide-and-conquer.
//!
//! The basic splitting step maps a chosen line or circle to the unit
//! circle, drives the eigenvalues apart by implicit repeated squaring
//! ([`irs`]), extracts the deflating subspace with a rank-revealing
//! decomposition of an implicit product ([`crate::randurv::grurv`]), and
//! block-triangularizes. The high-level strategies pick random split loci
//! (lines through a disk, points in an interval, circles of squared radii),
//! recurse on the diagonal blocks, and degrade gracefully to enclosure
//! regions when a spectrum component cannot be divided at working
//! precision.

mod irs;
mod small_eig;
mod step;
mod strategy;
mod tree;

pub use irs::{irs, irs_observed, IrsResult, IrsStep};
pub use small_eig::{char_poly_roots, small_eig, small_sym_eig};
pub use step::{
    rgnep_step, rnep_step, rsep_step, split_select, PencilSplit, SingleSplit, StepOutcome,
};
pub use strategy::{
    nonsym_strategy, pencil_strategy, rsvd_drive, sym_eig_via_dc, sym_strategy, PencilEigenvalue,
    PencilReport, RsvdResult, SplitLine, SymEig,
};
pub use tree::{Enclosure, EnclosureKind, SpectralNode, SpectralTree};

use crate::error::{Error, Result};

/// Tunables of the divide-and-conquer strategies.
///
/// `split_accept_tol` doubles as the cluster tolerance of the symmetric
/// strategy and stands in for the paper-level backward-error scale
/// (`epsilon-hat`), which is not computable without the eigenvector
/// condition number.
#[derive(Clone, Debug)]
pub struct StrategyConfig {
    /// Relative stagnation tolerance of the repeated-squaring iteration.
    pub tau: f64,
    /// Iteration cap per squaring run.
    pub maxit: usize,
    /// Acceptance threshold on the off-diagonal block metric.
    pub split_accept_tol: f64,
    /// Blocks of at most this size are solved directly.
    pub base_case_size: usize,
    /// Consecutive failed split attempts before emitting an enclosure.
    pub max_failed_splits: usize,
    /// Root seed; all randomness derives from it.
    pub rng_seed: u64,
    /// Target relative accuracy of the computed projectors.
    pub eps_target: f64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            tau: 1e-12,
            maxit: 60,
            split_accept_tol: 1e-8,
            base_case_size: 4,
            max_failed_splits: 3,
            rng_seed: 0x5eed,
            eps_target: 1e-12,
        }
    }
}

impl StrategyConfig {
    pub fn with_seed(seed: u64) -> Self {
        StrategyConfig {
            rng_seed: seed,
            ..Default::default()
        }
    }

    /// Budget-derived iteration cap for an `n x n` problem: the smallest
    /// backward-error distance a stable algorithm can hope for is about
    /// `n * eps` relative, and the cap is clamped to 60 iterations.
    pub fn for_problem(n: usize, seed: u64) -> Self {
        let mut cfg = Self::with_seed(seed);
        let d_est = (n.max(2) as f64) * crate::scalar::EPS;
        if let Ok(p) = iteration_budget(d_est, 4.0, 1.0, cfg.eps_target) {
            cfg.maxit = p.min(60).max(8);
        }
        cfg
    }
}

/// Iteration count needed to reach a relative projector error `eps` when
/// the split locus sits at estimated distance `d_est` from the spectrum:
/// `p = log2(norm_est * kappa_est / d_est - 1) + log2(log2(1/eps))`,
/// rounded up (the first term is clamped at zero when the distance is
/// comparable to the norm).
pub fn iteration_budget(d_est: f64, norm_est: f64, kappa_est: f64, eps: f64) -> Result<usize> {
    Ok(iteration_budget_raw(d_est, norm_est, kappa_est, eps)?.ceil() as usize)
}

/// The budget before rounding (exact log2 arithmetic, for tests).
pub fn iteration_budget_raw(d_est: f64, norm_est: f64, kappa_est: f64, eps: f64) -> Result<f64> {
    if !(d_est > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "iteration budget needs a positive distance estimate, got {d_est}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "accuracy target must sit in (0,1), got {eps}"
        )));
    }
    let ratio = norm_est * kappa_est / d_est;
    let first = (ratio - 1.0).max(1.0).log2();
    let second = (1.0 / eps).log2().log2();
    Ok(first + second)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_hand_value() {
        // ratio = 2^10, eps = 2^-52: p = log2(1023) + log2(52) ~ 15.7 -> 16.
        let eps = 2f64.powi(-52);
        let d_est = 2f64.powi(-10); // norm * kappa / d = 1024
        assert_eq!(iteration_budget(d_est, 1.0, 1.0, eps).unwrap(), 16);
    }

    #[test]
    fn budget_first_term_vanishes_when_distance_matches_norm() {
        let eps = 2f64.powi(-52);
        let p = iteration_budget_raw(1.0, 1.0, 1.0, eps).unwrap();
        assert!((p - 52f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn budget_doubles_kappa_adds_one() {
        // At large ratios the -1 inside the log is negligible and doubling
        // kappa shifts the raw budget by exactly one bit.
        let eps = 1e-12;
        let a = iteration_budget_raw(1e-9, 1.0, 1.0, eps).unwrap();
        let b = iteration_budget_raw(1e-9, 1.0, 2.0, eps).unwrap();
        assert!((b - a - 1.0).abs() < 1e-8, "delta = {}", b - a);
    }

    #[test]
    fn budget_rejects_bad_inputs() {
        assert!(iteration_budget(0.0, 1.0, 1.0, 0.5).is_err());
        assert!(iteration_budget(-1.0, 1.0, 1.0, 0.5).is_err());
        assert!(iteration_budget(1.0, 1.0, 1.0, 1.5).is_err());
    }
}
