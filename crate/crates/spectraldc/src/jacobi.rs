//! Jacobi reference solvers: cyclic two-sided Jacobi for the symmetric
//! eigenproblem and one-sided (Hestenes) Jacobi for the SVD.
//!
//! These are the independent accuracy oracles for the rest of the crate.
//! They are simple, slow, and capped at `n <= 512`; production paths never
//! call them.

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Norm};
use crate::scalar::EPS;

/// Largest dimension the oracles accept.
pub const ORACLE_SIZE_CAP: usize = 512;

const MAX_SWEEPS: usize = 60;

/// Eigenvalues (ascending) and eigenvectors of a symmetric real matrix by
/// cyclic Jacobi rotations; `A V = V diag(lambda)`.
pub fn jacobi_sym_eig(a: &Matrix<f64>) -> Result<(Vec<f64>, Matrix<f64>)> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n > ORACLE_SIZE_CAP {
        return Err(Error::OracleTooLarge {
            n,
            cap: ORACLE_SIZE_CAP,
        });
    }
    let scale = a.norm(Norm::Fro);
    let dev = a.symmetry_deviation();
    if dev > 64.0 * n as f64 * EPS * scale.max(1e-300) {
        return Err(Error::NotSymmetric { deviation: dev });
    }
    if n == 0 {
        return Ok((Vec::new(), Matrix::zeros(0, 0)));
    }

    let mut w = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut v: Matrix<f64> = Matrix::identity(n);
    let stop = n as f64 * EPS * scale.max(1e-300);

    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for j in 0..n {
            for i in 0..j {
                off += w[(i, j)] * w[(i, j)];
            }
        }
        if (2.0 * off).sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq.abs() <= stop / (n as f64) {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotate rows/columns p and q of W.
                for k in 0..n {
                    let wkp = w[(k, p)];
                    let wkq = w[(k, q)];
                    w[(k, p)] = c * wkp - s * wkq;
                    w[(k, q)] = s * wkp + c * wkq;
                }
                for k in 0..n {
                    let wpk = w[(p, k)];
                    let wqk = w[(q, k)];
                    w[(p, k)] = c * wpk - s * wqk;
                    w[(q, k)] = s * wpk + c * wqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].total_cmp(&w[(j, j)]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| w[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((eigenvalues, vectors))
}

/// Singular value decomposition by one-sided Jacobi: returns
/// `(sigma descending, U (m x n), V (n x n))` with `A = U diag(sigma) V^T`.
pub fn jacobi_svd(a: &Matrix<f64>) -> Result<(Vec<f64>, Matrix<f64>, Matrix<f64>)> {
    let (m, n) = (a.rows(), a.cols());
    if m.max(n) > ORACLE_SIZE_CAP {
        return Err(Error::OracleTooLarge {
            n: m.max(n),
            cap: ORACLE_SIZE_CAP,
        });
    }
    if m < n {
        // Work on the transpose and swap the factors.
        let (s, u, v) = jacobi_svd(&a.transpose())?;
        return Ok((s, v, u_to_square(&u, n).unwrap_or(u)));
    }
    if m == 0 || n == 0 {
        return Ok((vec![0.0; n], Matrix::zeros(m, n), Matrix::identity(n)));
    }

    let mut w = a.clone();
    let mut v: Matrix<f64> = Matrix::identity(n);
    let tol = EPS * (m as f64).sqrt();

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    alpha += w[(i, p)] * w[(i, p)];
                    beta += w[(i, q)] * w[(i, q)];
                    gamma += w[(i, p)] * w[(i, q)];
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..m {
                    let wip = w[(i, p)];
                    let wiq = w[(i, q)];
                    w[(i, p)] = c * wip - s * wiq;
                    w[(i, q)] = s * wip + c * wiq;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    sigma = order.iter().map(|&j| sigma[j]).collect();
    let vs = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);

    // Normalize nonzero columns into U; complete zero columns to an
    // orthonormal set by Gram-Schmidt against what exists.
    let sig_floor = EPS * sigma.first().copied().unwrap_or(0.0).max(1.0) * m as f64;
    let mut u = Matrix::zeros(m, n);
    for j in 0..n {
        let src = order[j];
        if sigma[j] > sig_floor {
            for i in 0..m {
                u[(i, j)] = w[(i, src)] / sigma[j];
            }
        } else {
            sigma[j] = sigma[j].max(0.0);
            let mut filled = false;
            for cand in 0..m {
                let mut col = vec![0.0; m];
                col[cand] = 1.0;
                for k in 0..j {
                    let dot: f64 = (0..m).map(|i| u[(i, k)] * col[i]).sum();
                    for i in 0..m {
                        col[i] -= dot * u[(i, k)];
                    }
                }
                let nrm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nrm > 0.5 {
                    for i in 0..m {
                        u[(i, j)] = col[i] / nrm;
                    }
                    filled = true;
                    break;
                }
            }
            if !filled {
                u[(j.min(m - 1), j)] = 1.0;
            }
        }
    }
    Ok((sigma, u, vs))
}

fn u_to_square(u: &Matrix<f64>, n: usize) -> Option<Matrix<f64>> {
    if u.rows() == n && u.cols() == n {
        Some(u.clone())
    } else {
        None
    }
}

/// Spectral norm (largest singular value) of a real matrix via the oracle.
pub fn spectral_norm(a: &Matrix<f64>) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let (s, _, _) = jacobi_svd(a).expect("within oracle cap");
    s.first().copied().unwrap_or(0.0)
}

/// Spectral norm of a complex matrix through the real embedding
/// `[[Re, -Im], [Im, Re]]`, which has the same singular values (doubled).
pub fn spectral_norm_complex(a: &Matrix<num_complex::Complex64>) -> f64 {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return 0.0;
    }
    let emb = Matrix::from_fn(2 * m, 2 * n, |i, j| {
        let z = a[(i % m, j % n)];
        match (i >= m, j >= n) {
            (false, false) => z.re,
            (false, true) => -z.im,
            (true, false) => z.im,
            (true, true) => z.re,
        }
    });
    spectral_norm(&emb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::mul;
    use crate::ledger::CostLedger;
    use crate::random::haar_orthogonal;
    use crate::scalar::Scalar;

    #[test]
    fn diagonal_matrix_eigenvalues_sorted() {
        let a = Matrix::diagonal(&[3.0, 1.0, 2.0]);
        let (vals, _) = jacobi_sym_eig(&a).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn exchange_matrix_eigenvalues() {
        let a = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let (vals, v) = jacobi_sym_eig(&a).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        // Residual A V = V D.
        let av = mul(&a, &v);
        let vd = mul(&v, &Matrix::diagonal(&vals));
        assert!(av.sub(&vd).norm(Norm::Fro) < 1e-13);
    }

    #[test]
    fn trace_identity_random_symmetric() {
        let n = 64;
        let a = {
            let raw = Matrix::from_fn(n, n, |i, j| (((i * 37 + j * 11) % 19) as f64 - 9.0) / 19.0);
            Matrix::from_fn(n, n, |i, j| 0.5 * (raw[(i, j)] + raw[(j, i)]))
        };
        let (vals, _) = jacobi_sym_eig(&a).unwrap();
        let sum: f64 = vals.iter().sum();
        let trace = a.trace();
        assert!((sum - trace).abs() <= 1e-10 * trace.abs().max(1.0));
    }

    #[test]
    fn rejects_nonsymmetric() {
        let a = Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(jacobi_sym_eig(&a), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn eigenvalues_invariant_under_orthogonal_similarity() {
        let n = 24;
        let a = {
            let raw = Matrix::from_fn(n, n, |i, j| (((i + 3 * j) % 13) as f64 - 6.0) / 13.0);
            Matrix::from_fn(n, n, |i, j| 0.5 * (raw[(i, j)] + raw[(j, i)]))
        };
        let q: Matrix<f64> = haar_orthogonal(n, 5, &CostLedger::noop());
        let b = mul(&mul(&q.transpose(), &a), &q);
        let b = Matrix::from_fn(n, n, |i, j| 0.5 * (b[(i, j)] + b[(j, i)]));
        let (va, _) = jacobi_sym_eig(&a).unwrap();
        let (vb, _) = jacobi_sym_eig(&b).unwrap();
        for (x, y) in va.iter().zip(&vb) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn svd_diagonal_and_zero() {
        let a = Matrix::diagonal(&[2.0, 1.0]);
        let (s, _, _) = jacobi_svd(&a).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14);

        let z: Matrix<f64> = Matrix::zeros(3, 3);
        let (s, u, v) = jacobi_svd(&z).unwrap();
        assert!(s.iter().all(|&x| x == 0.0));
        assert!(crate::qr::orthogonality_defect(&u) < 1e-12);
        assert!(crate::qr::orthogonality_defect(&v) < 1e-12);
    }

    #[test]
    fn svd_matches_symmetric_eig_of_gram_matrix() {
        let n = 32;
        let mut rng = crate::random::seeded_rng(77);
        let a = Matrix::from_fn(n, n, |_, _| f64::standard_normal(&mut rng));
        let (s, u, v) = jacobi_svd(&a).unwrap();
        // sigma^2 are the eigenvalues of A^T A.
        let gram = mul(&a.transpose(), &a);
        let gram = Matrix::from_fn(n, n, |i, j| 0.5 * (gram[(i, j)] + gram[(j, i)]));
        let (ev, _) = jacobi_sym_eig(&gram).unwrap();
        for (k, &sv) in s.iter().enumerate() {
            let expect = ev[n - 1 - k].max(0.0).sqrt();
            assert!(
                (sv - expect).abs() <= 1e-8 * expect.max(1.0),
                "sigma[{k}] = {sv} vs sqrt(eig) = {expect}"
            );
        }
        // Reconstruction.
        let recon = mul(&mul(&u, &Matrix::diagonal(&s)), &v.transpose());
        let err = recon.sub(&a).norm(Norm::Fro) / a.norm(Norm::Fro);
        assert!(err < 1e-12, "reconstruction error {err:.3e}");
    }
}
