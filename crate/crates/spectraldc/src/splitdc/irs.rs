//! Implicit repeated squaring of `A^{-1} B` for a pencil `(A, B)`.
//!
//! Each iteration takes the QR of the stacked matrix `[B_j; -A_j]` and
//! updates `A_{j+1} = Q_12^H A_j`, `B_{j+1} = Q_22^H B_j`, which squares the
//! eigenvalues of `A^{-1} B` without forming an inverse or a product. The
//! iteration stagnates (the triangular factor stops moving) once the
//! eigenvalues have been driven to 0 and infinity.

use crate::error::{Error, Result};
use crate::kernels::matmul;
use crate::ledger::CostLedger;
use crate::matrix::{Matrix, Norm};
use crate::qr::{explicit_q, factorize, FactorMode};
use crate::scalar::Scalar;

use super::StrategyConfig;

/// Final iterates of the squaring run.
#[derive(Clone, Debug)]
pub struct IrsResult<T: Scalar> {
    pub a_p: Matrix<T>,
    pub b_p: Matrix<T>,
    /// Number of iterations performed.
    pub iterations: usize,
    /// Whether the stagnation test `||R_j - R_{j-1}||_1 <= tau ||R_{j-1}||_1`
    /// fired within the iteration cap.
    pub converged: bool,
    /// Relative change of the triangular factor per iteration.
    pub residual_history: Vec<f64>,
}

/// Per-iteration view handed to the observer of [`irs_observed`].
pub struct IrsStep<'a, T: Scalar> {
    pub iteration: usize,
    pub a: &'a Matrix<T>,
    pub b: &'a Matrix<T>,
    pub r_rel_change: f64,
}

/// Implicit repeated squaring; non-convergence is reported in the result,
/// not as an error (strategies retry with a different split locus).
pub fn irs<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
) -> Result<IrsResult<T>> {
    irs_observed(a, b, cfg, ledger, |_| {})
}

/// As [`irs`], invoking `observe` with the fresh iterates after every
/// squaring step (used by the squaring-identity checks and the convergence
/// experiments, which compute a tentative invariant subspace per iteration).
pub fn irs_observed<T: Scalar, F: FnMut(&IrsStep<'_, T>)>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
    mut observe: F,
) -> Result<IrsResult<T>> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::dims("irs", (a.rows(), a.cols()), (b.rows(), b.cols())));
    }
    let _p = ledger.phase("irs");
    let n = a.rows();
    let mut a_j = a.clone();
    let mut b_j = b.clone();
    let mut prev_r: Option<Matrix<T>> = None;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for j in 1..=cfg.maxit {
        let mut stacked = Matrix::zeros(2 * n, n);
        stacked.set_block(0, 0, &b_j);
        stacked.set_block(n, 0, &a_j.map(|x| -x));
        let f = factorize(&stacked, FactorMode::Qr, ledger)?;
        let q = explicit_q(&f, ledger);
        let q12 = q.block(0..n, n..2 * n);
        let q22 = q.block(n..2 * n, n..2 * n);
        a_j = matmul(&q12.adjoint(), &a_j, ledger)?;
        b_j = matmul(&q22.adjoint(), &b_j, ledger)?;
        iterations = j;

        let r_j = f.triangular().block(0..n, 0..n);
        let rel = match &prev_r {
            Some(prev) => {
                let denom = prev.norm(Norm::One).max(1e-300);
                r_j.sub(prev).norm(Norm::One) / denom
            }
            None => f64::INFINITY,
        };
        if rel.is_finite() {
            history.push(rel);
        }
        observe(&IrsStep {
            iteration: j,
            a: &a_j,
            b: &b_j,
            r_rel_change: rel,
        });
        prev_r = Some(r_j);
        if rel <= cfg.tau {
            converged = true;
            break;
        }
    }

    Ok(IrsResult {
        a_p: a_j,
        b_p: b_j,
        iterations,
        converged,
        residual_history: history,
    })
}

/// Projector estimate `(A_p + B_p)^{-1} A_p` (approaches the spectral
/// projector onto the right deflating subspace of the outside-the-circle
/// eigenvalues).
pub fn projector_estimate<T: Scalar>(
    res: &IrsResult<T>,
    ledger: &CostLedger,
) -> Result<Matrix<T>> {
    let sum = res.a_p.add(&res.b_p);
    let f = factorize(&sum, FactorMode::Qr, ledger)?;
    let q = explicit_q(&f, ledger);
    let rhs = matmul(&q.adjoint(), &res.a_p, ledger)?;
    crate::kernels::trsm(&f.triangular().block(0..sum.rows(), 0..sum.cols()), &rhs, ledger)
}

/// Rank read off a numerical projector by rounding its trace.
pub fn projector_rank<T: Scalar>(p: &Matrix<T>) -> usize {
    let t = p.trace().re().round();
    t.max(0.0).min(p.rows() as f64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{lin_solve, mul};

    fn cfg() -> StrategyConfig {
        StrategyConfig::default()
    }

    #[test]
    fn squaring_identity_diag_2x2() {
        // A = diag(2, 1/2), B = I: after j steps A_j^{-1} B_j has
        // eigenvalues 2^{-2^j} and 2^{+2^j}.
        let a = Matrix::diagonal(&[2.0, 0.5]);
        let b: Matrix<f64> = Matrix::identity(2);
        let mut seen = Vec::new();
        let _ = irs_observed(&a, &b, &cfg(), &CostLedger::noop(), |st| {
            if st.iteration <= 3 {
                let m = lin_solve(st.a, st.b).unwrap();
                let (sv, _, _) = crate::jacobi::jacobi_svd(&m).unwrap();
                seen.push((st.iteration, sv));
            }
        })
        .unwrap();
        for (j, sv) in seen {
            // diag => singular values are |eigenvalues|.
            let want_hi = 2f64.powi(1 << j);
            let want_lo = 2f64.powi(-(1 << j));
            assert!(
                (sv[0] - want_hi).abs() <= 1e-8 * want_hi,
                "iter {j}: {sv:?}"
            );
            assert!((sv[1] - want_lo).abs() <= 1e-8 * want_hi.recip().max(want_lo));
        }
    }

    #[test]
    fn zero_b_stays_zero() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b: Matrix<f64> = Matrix::zeros(2, 2);
        let res = irs(&a, &b, &cfg(), &CostLedger::noop()).unwrap();
        assert!(res.b_p.norm(Norm::Fro) < 1e-14);
        assert!(res.converged);
    }

    #[test]
    fn projector_tends_to_identity_for_contracting_b() {
        // A = I, B = lambda I with |lambda| < 1: the projector onto the
        // whole space is the limit, with error ~ 2 lambda^{2^p}.
        let n = 3;
        let lambda = 0.6;
        let a: Matrix<f64> = Matrix::identity(n);
        let b = Matrix::identity(n).scale(lambda);
        let mut cfgl = cfg();
        cfgl.maxit = 6;
        cfgl.tau = 0.0; // run all iterations
        let res = irs(&a, &b, &cfgl, &CostLedger::noop()).unwrap();
        let proj = projector_estimate(&res, &CostLedger::noop()).unwrap();
        let err = proj.sub(&Matrix::identity(n)).norm(Norm::Fro);
        let bound = 2.0 * lambda.powi(1 << 6) * (n as f64).sqrt() + 1e-12;
        assert!(err <= bound, "projector error {err:.3e} > {bound:.3e}");
        assert_eq!(projector_rank(&proj), n);
    }

    #[test]
    fn squaring_identity_random_small_pencils() {
        // Explicit check (A_{j+1}^{-1} B_{j+1}) = (A_j^{-1} B_j)^2 on
        // well-conditioned random pairs.
        for trial in 0..10u64 {
            let n = 2 + (trial as usize % 7);
            let a = well_conditioned(n, 100 + trial);
            let b = well_conditioned(n, 200 + trial);
            let mut prev: Option<Matrix<f64>> = Some(lin_solve(&a, &b).unwrap());
            let mut checked = 0;
            let mut cfgl = cfg();
            cfgl.maxit = 3;
            cfgl.tau = 0.0;
            let _ = irs_observed(&a, &b, &cfgl, &CostLedger::noop(), |st| {
                let m = lin_solve(st.a, st.b).unwrap();
                if let Some(p) = prev.take() {
                    let sq = mul(&p, &p);
                    let err = m.sub(&sq).norm(Norm::Fro) / sq.norm(Norm::Fro).max(1e-300);
                    assert!(err < 1e-8, "trial {trial} iter {}: {err:.3e}", st.iteration);
                    checked += 1;
                }
                prev = Some(m);
            })
            .unwrap();
            assert_eq!(checked, 3);
        }
    }

    fn well_conditioned(n: usize, seed: u64) -> Matrix<f64> {
        let q1: Matrix<f64> = crate::random::haar_orthogonal(n, seed, &CostLedger::noop());
        let q2: Matrix<f64> = crate::random::haar_orthogonal(n, seed + 1, &CostLedger::noop());
        let d = Matrix::diagonal(
            &(0..n)
                .map(|i| 0.5 + 1.5 * (i as f64 / n.max(1) as f64))
                .collect::<Vec<_>>(),
        );
        mul(&mul(&q1, &d), &q2)
    }
}
