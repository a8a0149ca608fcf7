//! Eigenvectors of an upper triangular matrix by a blocked iterative
//! back-substitution, plus back-transformation to eigenvectors of the
//! original matrix.
//!
//! For distinct diagonal entries the eigenvector matrix `X` is upper
//! triangular and solves `T X = X D` columnwise:
//! `X_ij = (T_ij X_jj + sum_{k=i+1}^{j-1} T_ik X_kj) / (T_jj - T_ii)`.
//! Blocking by `b <= sqrt(M/3)` keeps one block each of `T`, `X`, and the
//! accumulator resident, which is what makes the word count `O(n^3/b)`.

use crate::error::{Error, Result};
use crate::kernels::{tiles, TiledRegion};
use crate::ledger::CostLedger;
use crate::matrix::{Matrix, Norm};
use crate::scalar::{Scalar, EPS};

/// Upper triangular eigenvector matrix with the diagonal of `T`.
#[derive(Clone, Debug)]
pub struct TriangularEigenvectors<T: Scalar> {
    /// Unit-2-norm eigenvector columns; strictly lower part exactly zero.
    pub x: Matrix<T>,
    /// Diagonal entries of `T` (the eigenvalues).
    pub d: Vec<T>,
}

/// Separation conditioning `max_{i<j} ||T|| / |T_jj - T_ii|`, the factor
/// multiplying the residual bound.
pub fn separation_condition<T: Scalar>(t: &Matrix<T>) -> f64 {
    let n = t.rows();
    let norm = t.norm(Norm::Fro);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..j {
            let sep = (t[(j, j)] - t[(i, i)]).abs();
            if sep > 0.0 {
                worst = worst.max(norm / sep);
            }
        }
    }
    worst.max(1.0)
}

fn check_separated<T: Scalar>(t: &Matrix<T>) -> Result<()> {
    let n = t.rows();
    let threshold = n as f64 * EPS * t.norm(Norm::One);
    for j in 0..n {
        for i in 0..j {
            let sep = (t[(j, j)] - t[(i, i)]).abs();
            if sep <= threshold {
                return Err(Error::ClusteredEigenvalues {
                    i,
                    j,
                    separation: sep,
                    threshold,
                });
            }
        }
    }
    Ok(())
}

/// Blocked iterative eigenvector solve for upper triangular `T`.
///
/// Fails with [`Error::ClusteredEigenvalues`] when two diagonal entries
/// coincide within `n * eps * ||T||_1`; clustered problems should be kept
/// as enclosure leaves by the divide-and-conquer drivers instead.
pub fn trevc_blocked<T: Scalar>(
    t: &Matrix<T>,
    ledger: &CostLedger,
) -> Result<TriangularEigenvectors<T>> {
    trevc_with_block(t, ledger, ledger.block_size())
}

/// Same recurrence with an explicit blocksize (`b = n` gives the unblocked
/// reference evaluation used as an oracle in tests).
pub fn trevc_with_block<T: Scalar>(
    t: &Matrix<T>,
    ledger: &CostLedger,
    block: usize,
) -> Result<TriangularEigenvectors<T>> {
    if !t.is_square() {
        return Err(Error::NotSquare {
            rows: t.rows(),
            cols: t.cols(),
        });
    }
    let n = t.rows();
    check_separated(t)?;
    let _p = ledger.phase("trevc");
    let b = block.max(1);
    let d: Vec<T> = (0..n).map(|i| t[(i, i)]).collect();
    let mut x: Matrix<T> = Matrix::zeros(n, n);

    let rt = TiledRegion::new(ledger, n, b);
    let rx = TiledRegion::new(ledger, n, b);
    let blocks: Vec<_> = tiles(n, b).collect();

    for (jb, cj) in blocks.iter().enumerate() {
        // Diagonal block: upper triangular solve T[j,j] X[j,j] = X[j,j] D[j].
        rt.touch(ledger, cj, cj, b, false);
        rx.touch(ledger, cj, cj, b, true);
        for j in cj.clone() {
            x[(j, j)] = T::one();
            for i in (cj.start..j).rev() {
                let mut s = T::zero();
                for k in (i + 1)..=j {
                    s += t[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = s / (d[j] - d[i]);
            }
            ledger.add_flops((2 * (j - cj.start) * (j - cj.start)) as u64 + 2);
        }

        // Off-diagonal blocks, bottom-up: accumulate S then shifted solve.
        for ib in (0..jb).rev() {
            let ci = blocks[ib].clone();
            let mut s: Matrix<T> = Matrix::zeros(ci.len(), cj.len());
            for kb in (ib + 1)..=jb {
                let ck = blocks[kb].clone();
                rt.touch(ledger, &ci, &ck, b, false);
                rx.touch(ledger, &ck, cj, b, false);
                ledger.add_flops(2 * (ci.len() * ck.len() * cj.len()) as u64);
                for j in cj.clone() {
                    for k in ck.clone() {
                        let xkj = x[(k, j)];
                        if xkj == T::zero() {
                            continue;
                        }
                        for i in ci.clone() {
                            s[(i - ci.start, j - cj.start)] += t[(i, k)] * xkj;
                        }
                    }
                }
            }
            // Solve (D[j] - T[i,i]) X[i,j] = S columnwise (shifted upper
            // triangular back-substitution).
            rt.touch(ledger, &ci, &ci, b, false);
            rx.touch(ledger, &ci, cj, b, true);
            ledger.add_flops((ci.len() * ci.len() * cj.len()) as u64);
            for j in cj.clone() {
                for i in ci.clone().rev() {
                    let mut rhs = s[(i - ci.start, j - cj.start)];
                    for k in (i + 1)..ci.end {
                        rhs += t[(i, k)] * x[(k, j)];
                    }
                    x[(i, j)] = rhs / (d[j] - d[i]);
                }
            }
        }
    }

    // Columns scaled to unit 2-norm.
    for j in 0..n {
        let nrm = (0..=j).map(|i| x[(i, j)].abs_sq()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            for i in 0..=j {
                x[(i, j)] = x[(i, j)].scale(1.0 / nrm);
            }
        }
        ledger.add_flops((3 * (j + 1)) as u64);
    }

    Ok(TriangularEigenvectors { x, d })
}

/// Back-transform triangular eigenvectors to eigenvectors of the original
/// matrix: columns of `Q X` are eigenvectors of `A = Q T Q^H`.
pub fn back_transform<T: Scalar>(
    q: &Matrix<T>,
    x: &Matrix<T>,
    ledger: &CostLedger,
) -> Result<Matrix<T>> {
    if q.cols() != x.rows() {
        return Err(Error::dims("back_transform", (q.rows(), q.cols()), (x.rows(), x.cols())));
    }
    let _p = ledger.phase("back_transform");
    crate::kernels::matmul(q, x, ledger)
}

/// Residual `||T X - X D||_F` of a computed eigenvector set.
pub fn trevc_residual<T: Scalar>(t: &Matrix<T>, r: &TriangularEigenvectors<T>) -> f64 {
    let tx = crate::kernels::mul(t, &r.x);
    let xd = {
        let mut m = r.x.clone();
        for j in 0..m.cols() {
            for i in 0..m.rows() {
                m[(i, j)] *= r.d[j];
            }
        }
        m
    };
    tx.sub(&xd).norm(Norm::Fro)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::mul;
    use crate::random::haar_orthogonal;
    use num_complex::Complex64;

    fn separated_upper(n: usize, salt: u64) -> Matrix<f64> {
        Matrix::from_fn(n, n, |i, j| {
            if i > j {
                0.0
            } else if i == j {
                1.0 + (i as f64) * 3.0 / n as f64
            } else {
                ((((i as u64 + 1) * 2654435761 + (j as u64 + 13) * salt) % 1000) as f64) / 1000.0
                    - 0.5
            }
        })
    }

    #[test]
    fn diagonal_gives_identity() {
        let t = Matrix::diagonal(&[1.0, 2.0, 4.0]);
        let r = trevc_blocked(&t, &CostLedger::noop()).unwrap();
        for j in 0..3 {
            for i in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((r.x[(i, j)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_by_two_hand_value() {
        let t = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 2.0]]);
        let r = trevc_blocked(&t, &CostLedger::noop()).unwrap();
        // Pre-normalization X12 = 1, so the normalized column is 1/sqrt(2).
        let s = 1.0 / 2f64.sqrt();
        assert!((r.x[(0, 1)] - s).abs() < 1e-15);
        assert!((r.x[(1, 1)] - s).abs() < 1e-15);
        assert!((r.x[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clustered_diagonal_is_an_error() {
        let t = Matrix::from_rows(&[&[1.0, 5.0], &[0.0, 1.0 + 1e-18]]);
        match trevc_blocked(&t, &CostLedger::noop()) {
            Err(Error::ClusteredEigenvalues { i: 0, j: 1, .. }) => {}
            other => panic!("expected clustered-eigenvalue error, got {other:?}"),
        }
    }

    #[test]
    fn blocked_equals_unblocked_reference() {
        let n = 96;
        let t = separated_upper(n, 7);
        let ledger = CostLedger::new(1024);
        let blocked = trevc_blocked(&t, &ledger).unwrap();
        let unblocked = trevc_with_block(&t, &CostLedger::noop(), n).unwrap();
        for j in 0..n {
            for i in 0..n {
                let a = blocked.x[(i, j)];
                let b = unblocked.x[(i, j)];
                assert!(
                    (a - b).abs() <= 1e-13 * b.abs().max(1.0),
                    "mismatch at ({i},{j}): {a} vs {b}"
                );
            }
        }
        assert!(ledger.totals().words > 0);
    }

    #[test]
    fn residual_bound_random_instances() {
        for &n in &[16, 64, 96] {
            for salt in 0..3u64 {
                let t = separated_upper(n, 11 + salt);
                let r = trevc_blocked(&t, &CostLedger::noop()).unwrap();
                let bound = 64.0
                    * n as f64
                    * EPS
                    * separation_condition(&t)
                    * t.norm(Norm::Fro);
                let resid = trevc_residual(&t, &r);
                assert!(
                    resid <= bound,
                    "n={n} salt={salt}: residual {resid:.3e} > bound {bound:.3e}"
                );
            }
        }
    }

    #[test]
    fn complex_triangular_works() {
        let n = 24;
        let t = Matrix::from_fn(n, n, |i, j| {
            if i > j {
                Complex64::new(0.0, 0.0)
            } else if i == j {
                Complex64::new(i as f64 / 3.0, (i % 5) as f64 / 2.0)
            } else {
                Complex64::new((i + j) as f64 / 40.0, (i as f64 - j as f64) / 30.0)
            }
        });
        let r = trevc_blocked(&t, &CostLedger::noop()).unwrap();
        let resid = trevc_residual(&t, &r);
        let bound = 64.0 * n as f64 * EPS * separation_condition(&t) * t.norm(Norm::Fro);
        assert!(resid <= bound, "residual {resid:.3e} > {bound:.3e}");
    }

    #[test]
    fn full_pipeline_back_transform() {
        let n = 48;
        let t = separated_upper(n, 3);
        let q: Matrix<f64> = haar_orthogonal(n, 19, &CostLedger::noop());
        let a = mul(&mul(&q, &t), &q.transpose());
        let r = trevc_blocked(&t, &CostLedger::noop()).unwrap();
        let vecs = back_transform(&q, &r.x, &CostLedger::noop()).unwrap();
        let norm_a = a.norm(Norm::Fro);
        for j in 0..n {
            let v = vecs.block(0..n, j..j + 1);
            let av = mul(&a, &v);
            let lv = v.scale(r.d[j]);
            let err = av.sub(&lv).norm(Norm::Fro);
            assert!(
                err <= 1e-9 * norm_a * separation_condition(&t),
                "column {j} residual {err:.3e}"
            );
        }
    }
}
