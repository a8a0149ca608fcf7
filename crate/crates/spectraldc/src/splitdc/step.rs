//! One step of divide-and-conquer: squaring, rank-revealing subspace
//! extraction, block-triangularization, and split selection.

use crate::error::{Error, Result};
use crate::kernels::matmul;
use crate::ledger::CostLedger;
use crate::matrix::{Matrix, Norm};
use crate::randurv::{grurv, Exponent, ProductSpec};
use crate::scalar::Scalar;

use super::irs::{irs, projector_estimate, projector_rank, IrsResult};
use super::StrategyConfig;

/// Split position minimizing the scaled 1-norm of the bottom-left block.
///
/// For each `k` in `1..n-1` the metric is `||A[k.., ..k]||_1 / ||A||_1`
/// (plus the same term for `B` when present); computed with column prefix
/// sums in `O(n^2)`. Ties break to the smallest `k`.
pub fn split_select<T: Scalar>(
    a_hat: &Matrix<T>,
    b_hat: Option<&Matrix<T>>,
) -> Result<(usize, f64)> {
    if !a_hat.is_square() {
        return Err(Error::NotSquare {
            rows: a_hat.rows(),
            cols: a_hat.cols(),
        });
    }
    let n = a_hat.rows();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "split_select needs n >= 2".into(),
        ));
    }
    let metric_for = |m: &Matrix<T>| -> Vec<f64> {
        // prefix[j][t] = sum_{i <= t} |m[i, j]|
        let norm = m.norm(Norm::One).max(1e-300);
        let mut prefix = vec![vec![0.0f64; n]; n];
        for j in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += m[(i, j)].abs();
                prefix[j][i] = acc;
            }
        }
        let mut out = vec![0.0f64; n];
        for k in 1..n {
            let mut worst: f64 = 0.0;
            for pj in prefix.iter().take(k) {
                let tail = pj[n - 1] - pj[k - 1];
                worst = worst.max(tail);
            }
            out[k] = worst / norm;
        }
        out
    };

    let ma = metric_for(a_hat);
    let mb = b_hat.map(metric_for);
    let mut best_k = 1;
    let mut best = f64::INFINITY;
    for k in 1..n {
        let v = ma[k] + mb.as_ref().map_or(0.0, |m| m[k]);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    Ok((best_k, best))
}

/// Outcome of one splitting attempt.
#[derive(Clone, Debug)]
pub enum StepOutcome<S> {
    /// The squaring iteration converged and produced a candidate split.
    Split(S),
    /// The squaring iteration did not stagnate within `maxit` (the split
    /// locus is too close to the spectrum); the caller retries elsewhere.
    NoConvergence(IrsResultSummary),
}

/// Compact non-convergence diagnostics.
#[derive(Clone, Debug)]
pub struct IrsResultSummary {
    pub iterations: usize,
    pub last_rel_change: f64,
}

impl IrsResultSummary {
    fn from<T: Scalar>(r: &IrsResult<T>) -> Self {
        IrsResultSummary {
            iterations: r.iterations,
            last_rel_change: r.residual_history.last().copied().unwrap_or(f64::INFINITY),
        }
    }
}

/// Candidate split of a single matrix under a unitary similarity.
#[derive(Clone, Debug)]
pub struct SingleSplit<T: Scalar> {
    pub a_hat: Matrix<T>,
    pub q: Matrix<T>,
    pub split_index: usize,
    pub offdiag_metric: f64,
    /// Rank of the computed spectral projector (eigenvalues outside the
    /// unit circle of the mapped pencil); 0 or n signals "no split, all on
    /// one side".
    pub projector_rank: usize,
}

/// Candidate split of a pencil under two-sided unitary transforms.
#[derive(Clone, Debug)]
pub struct PencilSplit<T: Scalar> {
    pub a_hat: Matrix<T>,
    pub b_hat: Matrix<T>,
    pub q_l: Matrix<T>,
    pub q_r: Matrix<T>,
    pub split_index: usize,
    pub offdiag_metric: f64,
    pub projector_rank: usize,
}

/// Core single-matrix step: runs the squaring iteration on the mapped
/// pencil `(a_tilde, b_tilde)`, extracts the right deflating subspace
/// `Q = GRURV(2; A_p + B_p, A_p; -1, +1)`, and similarity-transforms the
/// original matrix `a_orig`. `symmetrize` enforces Hermitian symmetry of
/// the transformed matrix (the symmetric driver).
pub(super) fn project_split<T: Scalar>(
    a_orig: &Matrix<T>,
    a_tilde: &Matrix<T>,
    b_tilde: &Matrix<T>,
    symmetrize: bool,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
) -> Result<StepOutcome<SingleSplit<T>>> {
    let run = irs(a_tilde, b_tilde, cfg, ledger)?;
    if !run.converged {
        return Ok(StepOutcome::NoConvergence(IrsResultSummary::from(&run)));
    }
    let rank = match projector_estimate(&run, ledger) {
        Ok(p) => projector_rank(&p),
        // Singular A_p + B_p: treat like a failed locus.
        Err(_) => return Ok(StepOutcome::NoConvergence(IrsResultSummary::from(&run))),
    };

    let spec = ProductSpec::new(vec![
        (run.a_p.add(&run.b_p), Exponent::Minus),
        (run.a_p.clone(), Exponent::Plus),
    ])?;
    let q = match grurv(&spec, cfg.rng_seed, ledger) {
        Ok(g) => g.u,
        Err(Error::IllConditionedProduct { .. }) => {
            return Ok(StepOutcome::NoConvergence(IrsResultSummary::from(&run)))
        }
        Err(e) => return Err(e),
    };

    let mut a_hat = matmul(&matmul(&q.adjoint(), a_orig, ledger)?, &q, ledger)?;
    if symmetrize {
        let adj = a_hat.adjoint();
        a_hat = a_hat.add(&adj).scale(0.5);
    }
    let (split_index, offdiag_metric) = split_select(&a_hat, None)?;
    Ok(StepOutcome::Split(SingleSplit {
        a_hat,
        q,
        split_index,
        offdiag_metric,
        projector_rank: rank,
    }))
}

/// One divide-and-conquer step for a nonsymmetric matrix along the unit
/// circle (`B = I`): a single subspace serves both sides.
pub fn rnep_step<T: Scalar>(
    a: &Matrix<T>,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
) -> Result<StepOutcome<SingleSplit<T>>> {
    let eye = Matrix::identity(a.rows());
    project_split(a, a, &eye, false, cfg, ledger)
}

/// One divide-and-conquer step for a Hermitian matrix along the unit
/// circle; the transformed matrix is re-symmetrized.
pub fn rsep_step<T: Scalar>(
    a: &Matrix<T>,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
) -> Result<StepOutcome<SingleSplit<T>>> {
    let eye = Matrix::identity(a.rows());
    project_split(a, a, &eye, true, cfg, ledger)
}

/// One divide-and-conquer step for a regular pencil `(A, B)` along the
/// unit circle: right subspace from `IRS(A, B)`, left subspace from
/// `IRS(A^H, B^H)`, then two-sided block triangularization.
pub fn rgnep_step<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
) -> Result<StepOutcome<PencilSplit<T>>> {
    let right = irs(a, b, cfg, ledger)?;
    if !right.converged {
        return Ok(StepOutcome::NoConvergence(IrsResultSummary::from(&right)));
    }
    let rank = match projector_estimate(&right, ledger) {
        Ok(p) => projector_rank(&p),
        Err(_) => return Ok(StepOutcome::NoConvergence(IrsResultSummary::from(&right))),
    };
    let spec_r = ProductSpec::new(vec![
        (right.a_p.add(&right.b_p), Exponent::Minus),
        (right.a_p.clone(), Exponent::Plus),
    ])?;
    let q_r = match grurv(&spec_r, cfg.rng_seed, ledger) {
        Ok(g) => g.u,
        Err(Error::IllConditionedProduct { .. }) => {
            return Ok(StepOutcome::NoConvergence(IrsResultSummary::from(&right)))
        }
        Err(e) => return Err(e),
    };

    let left = irs(&a.adjoint(), &b.adjoint(), cfg, ledger)?;
    if !left.converged {
        return Ok(StepOutcome::NoConvergence(IrsResultSummary::from(&left)));
    }
    let spec_l = ProductSpec::new(vec![
        (left.a_p.adjoint(), Exponent::Plus),
        (left.a_p.add(&left.b_p).adjoint(), Exponent::Minus),
    ])?;
    let q_l = match grurv(&spec_l, crate::random::derive_seed(cfg.rng_seed, 0x4c), ledger) {
        Ok(g) => g.u,
        Err(Error::IllConditionedProduct { .. }) => {
            return Ok(StepOutcome::NoConvergence(IrsResultSummary::from(&left)))
        }
        Err(e) => return Err(e),
    };

    let a_hat = matmul(&matmul(&q_l.adjoint(), a, ledger)?, &q_r, ledger)?;
    let b_hat = matmul(&matmul(&q_l.adjoint(), b, ledger)?, &q_r, ledger)?;
    let (split_index, offdiag_metric) = split_select(&a_hat, Some(&b_hat))?;
    Ok(StepOutcome::Split(PencilSplit {
        a_hat,
        b_hat,
        q_l,
        q_r,
        split_index,
        offdiag_metric,
        projector_rank: rank,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn split_select_exact_block_triangular() {
        // Zero block of size 2x2 at k = 2 (n = 4).
        let a = Matrix::from_rows(&[
            &[1.0, 2.0, 3.0, 4.0],
            &[5.0, 6.0, 7.0, 8.0],
            &[0.0, 0.0, 9.0, 1.0],
            &[0.0, 0.0, 2.0, 3.0],
        ]);
        let (k, metric) = split_select(&a, None).unwrap();
        assert_eq!(k, 2);
        assert_eq!(metric, 0.0);
    }

    #[test]
    fn split_select_hand_metric() {
        let a = Matrix::from_rows(&[&[1.0, 0.0], &[1.0, 1.0]]);
        let (k, metric) = split_select(&a, None).unwrap();
        assert_eq!(k, 1);
        assert!((metric - 0.5).abs() < 1e-15);
    }

    #[test]
    fn split_select_tie_breaks_small_k() {
        let a: Matrix<f64> = Matrix::identity(4);
        let (k, metric) = split_select(&a, None).unwrap();
        assert_eq!(k, 1);
        assert_eq!(metric, 0.0);
    }

    #[test]
    fn split_select_rejects_tiny() {
        let a: Matrix<f64> = Matrix::identity(1);
        assert!(split_select(&a, None).is_err());
    }

    #[test]
    fn rnep_step_splits_clean_diagonal() {
        let a = Matrix::diagonal(&[2.0, 0.5]);
        let cfg = StrategyConfig::with_seed(11);
        match rnep_step(&a, &cfg, &CostLedger::noop()).unwrap() {
            StepOutcome::Split(s) => {
                assert_eq!(s.split_index, 1);
                assert_eq!(s.projector_rank, 1);
                assert!(s.offdiag_metric <= 1e-12, "metric {}", s.offdiag_metric);
                // Polarity: the outside-the-circle eigenvalue (2) leads.
                assert!(
                    (s.a_hat[(0, 0)] - 2.0).abs() < 1e-8,
                    "leading block {:?}",
                    s.a_hat[(0, 0)]
                );
            }
            other => panic!("expected a split, got {other:?}"),
        }
    }

    #[test]
    fn rnep_step_fails_on_circle_spectrum() {
        // Orthogonal matrix: all eigenvalues on the unit circle. The
        // distance to the nearest ill-posed problem is zero, so the step
        // must not produce an acceptable split: either the squaring stalls
        // or the off-diagonal metric stays O(1).
        let a = Matrix::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let cfg = StrategyConfig::with_seed(7);
        match rnep_step(&a, &cfg, &CostLedger::noop()).unwrap() {
            StepOutcome::NoConvergence(_) => {}
            StepOutcome::Split(s) => assert!(
                s.offdiag_metric > 1e-4,
                "on-circle spectrum produced a clean split: {s:?}"
            ),
        }
    }

    #[test]
    fn rsep_step_symmetrizes_exactly() {
        let a = Matrix::from_rows(&[&[2.0, 0.3], &[0.3, 0.4]]);
        let cfg = StrategyConfig::with_seed(3);
        if let StepOutcome::Split(s) = rsep_step(&a, &cfg, &CostLedger::noop()).unwrap() {
            for j in 0..2 {
                for i in 0..2 {
                    assert_eq!(s.a_hat[(i, j)], s.a_hat[(j, i)]);
                }
            }
        } else {
            panic!("expected split");
        }
    }

    #[test]
    fn rsep_step_rejects_unit_eigenvalues() {
        // Both eigenvalues sit exactly on the unit circle: no acceptable
        // split can come out.
        let a = Matrix::diagonal(&[1.0, -1.0]);
        let cfg = StrategyConfig::with_seed(5);
        match rsep_step(&a, &cfg, &CostLedger::noop()).unwrap() {
            StepOutcome::NoConvergence(_) => {}
            StepOutcome::Split(s) => assert!(
                s.offdiag_metric > 1e-4,
                "unit-circle spectrum produced a clean split: {s:?}"
            ),
        }
        // The line strategy shifted to the midpoint splits immediately:
        // map Re(z) = 0 to the unit circle and run the same machinery.
        let a_tilde = Matrix::from_rows(&[&[2.0, 0.0], &[0.0, 0.0]]); // A - (0-1) I
        let b_tilde = Matrix::from_rows(&[&[0.0, 0.0], &[0.0, -2.0]]); // A - (0+1) I
        match project_split(&a, &a_tilde, &b_tilde, true, &cfg, &CostLedger::noop()).unwrap() {
            StepOutcome::Split(s) => {
                assert_eq!(s.split_index, 1);
                assert!(s.offdiag_metric <= 1e-10);
                assert!((s.a_hat[(0, 0)] - 1.0).abs() < 1e-10, "{:?}", s.a_hat);
            }
            other => panic!("midpoint split should succeed, got {other:?}"),
        }
    }

    #[test]
    fn rgnep_step_splits_pencil_and_orders_outside_first() {
        let a = Matrix::diagonal(&[4.0, 0.25]).to_complex();
        let b: Matrix<Complex64> = Matrix::identity(2);
        let cfg = StrategyConfig::with_seed(21);
        match rgnep_step(&a, &b, &cfg, &CostLedger::noop()).unwrap() {
            StepOutcome::Split(s) => {
                assert_eq!(s.split_index, 1);
                assert!(s.offdiag_metric <= 1e-10);
                // Generalized eigenvalue of the leading block: a11/b11 = 4.
                let lam = s.a_hat[(0, 0)] / s.b_hat[(0, 0)];
                assert!((lam - Complex64::new(4.0, 0.0)).norm() < 1e-8, "{lam}");
            }
            other => panic!("expected split, got {other:?}"),
        }
    }

    #[test]
    fn rgnep_step_random_similarity_small_metric() {
        // A = S diag(lams) S^{-1} with eigenvalues off the circle, B = I.
        let n = 8;
        let ledger = CostLedger::noop();
        let q: Matrix<f64> = crate::random::haar_orthogonal(n, 31, &ledger);
        let lams: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 2.0 + i as f64 / 8.0 } else { 0.3 - i as f64 / 64.0 })
            .collect();
        let a = crate::kernels::mul(
            &crate::kernels::mul(&q, &Matrix::diagonal(&lams)),
            &q.transpose(),
        );
        let cfg = StrategyConfig::with_seed(77);
        match rnep_step(&a, &cfg, &ledger).unwrap() {
            StepOutcome::Split(s) => {
                assert!(s.offdiag_metric <= 1e-10, "metric {}", s.offdiag_metric);
                assert_eq!(s.split_index, 4); // four eigenvalues outside
                assert_eq!(s.projector_rank, 4);
            }
            other => panic!("expected split, got {other:?}"),
        }
    }
}
