//! Blocked BLAS-like kernels. Every kernel reports block transfers and
//! flops to the [`CostLedger`] it is handed; blocksizes come from the
//! ledger's fast-memory size as `b = floor(sqrt(M/3))`.

use crate::error::{Error, Result};
use crate::ledger::{CostLedger, RegionId};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Tile walker: splits `0..n` into chunks of at most `b`.
pub(crate) fn tiles(n: usize, b: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    let b = b.max(1);
    (0..n.div_ceil(b)).map(move |k| (k * b)..(((k + 1) * b).min(n)))
}

pub(crate) struct TiledRegion {
    region: RegionId,
    tiles_per_col: u64,
}

impl TiledRegion {
    pub(crate) fn new(ledger: &CostLedger, rows: usize, b: usize) -> Self {
        TiledRegion {
            region: ledger.new_region(),
            tiles_per_col: (rows.div_ceil(b.max(1))).max(1) as u64,
        }
    }

    pub(crate) fn touch(
        &self,
        ledger: &CostLedger,
        rows: &std::ops::Range<usize>,
        cols: &std::ops::Range<usize>,
        b: usize,
        dirty: bool,
    ) {
        let words = rows.len() * cols.len();
        if words == 0 {
            return;
        }
        let id = (rows.start / b.max(1)) as u64 + (cols.start / b.max(1)) as u64 * self.tiles_per_col;
        ledger.touch(self.region, id, words, dirty);
    }
}

/// Blocked matrix multiply `C = A * B`.
///
/// Blocks are `b x b` with `b = floor(sqrt(M/3))` so one tile of each of
/// `A`, `B`, `C` is resident at a time; each tile transfer is recorded.
pub fn matmul<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, ledger: &CostLedger) -> Result<Matrix<T>> {
    if a.cols() != b.rows() {
        return Err(Error::dims("matmul", (a.rows(), a.cols()), (b.rows(), b.cols())));
    }
    let _p = ledger.phase("matmul");
    let bs = ledger.block_size();
    let m = a.rows();
    let k = a.cols();
    let n = b.cols();
    let mut c = Matrix::zeros(m, n);

    let ra = TiledRegion::new(ledger, m, bs);
    let rb = TiledRegion::new(ledger, k, bs);
    let rc = TiledRegion::new(ledger, m, bs);

    for ci in tiles(m, bs) {
        for cj in tiles(n, bs) {
            rc.touch(ledger, &ci, &cj, bs, true);
            for ck in tiles(k, bs) {
                ra.touch(ledger, &ci, &ck, bs, false);
                rb.touch(ledger, &ck, &cj, bs, false);
                ledger.add_flops(2 * (ci.len() * cj.len() * ck.len()) as u64);
                for j in cj.clone() {
                    for kk in ck.clone() {
                        let bkj = b[(kk, j)];
                        if bkj == T::zero() {
                            continue;
                        }
                        let acol = a.col(kk);
                        let ccol = c.col_mut(j);
                        for i in ci.clone() {
                            ccol[i] += acol[i] * bkj;
                        }
                    }
                }
            }
        }
    }
    Ok(c)
}

/// Convenience product against a no-op ledger (tests, glue code).
pub fn mul<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    matmul(a, b, &CostLedger::noop()).expect("dimension mismatch")
}

/// Threshold below which a triangular diagonal counts as singular:
/// `n * eps * ||T||_1`.
pub fn triangular_singularity_threshold<T: Scalar>(t: &Matrix<T>) -> f64 {
    t.rows() as f64 * crate::scalar::EPS * t.norm_one()
}

/// Blocked triangular solve `T X = B` with `T` upper triangular.
///
/// Fails with [`Error::SingularTriangular`] if any `|T_ii|` falls below
/// `n * eps * ||T||_1`.
pub fn trsm<T: Scalar>(t: &Matrix<T>, b: &Matrix<T>, ledger: &CostLedger) -> Result<Matrix<T>> {
    solve_triangular(t, b, ledger, false)
}

/// Blocked triangular solve `T X = B` with `T` lower triangular.
pub fn trsm_lower<T: Scalar>(
    t: &Matrix<T>,
    b: &Matrix<T>,
    ledger: &CostLedger,
) -> Result<Matrix<T>> {
    solve_triangular(t, b, ledger, true)
}

fn solve_triangular<T: Scalar>(
    t: &Matrix<T>,
    b: &Matrix<T>,
    ledger: &CostLedger,
    lower: bool,
) -> Result<Matrix<T>> {
    if !t.is_square() {
        return Err(Error::NotSquare {
            rows: t.rows(),
            cols: t.cols(),
        });
    }
    if t.cols() != b.rows() {
        return Err(Error::dims("trsm", (t.rows(), t.cols()), (b.rows(), b.cols())));
    }
    let n = t.rows();
    let tol = triangular_singularity_threshold(t);
    for i in 0..n {
        let d = t[(i, i)].abs();
        if d <= tol {
            return Err(Error::SingularTriangular {
                index: i,
                value: d,
                threshold: tol,
            });
        }
    }

    let _p = ledger.phase("trsm");
    let bs = ledger.block_size();
    let nrhs = b.cols();
    let mut x = b.clone();
    let rt = TiledRegion::new(ledger, n, bs);
    let rx = TiledRegion::new(ledger, n, bs);

    // Row blocks processed bottom-up for upper triangular, top-down for lower.
    let row_blocks: Vec<_> = tiles(n, bs).collect();
    let order: Vec<usize> = if lower {
        (0..row_blocks.len()).collect()
    } else {
        (0..row_blocks.len()).rev().collect()
    };

    for cj in tiles(nrhs, bs) {
        for &bi in &order {
            let ri = row_blocks[bi].clone();
            rx.touch(ledger, &ri, &cj, bs, true);
            // Subtract contributions from already-solved row blocks.
            for &bk in &order {
                let rk = row_blocks[bk].clone();
                let solved = if lower { rk.start < ri.start } else { rk.start > ri.start };
                if !solved {
                    continue;
                }
                rt.touch(ledger, &ri, &rk, bs, false);
                rx.touch(ledger, &rk, &cj, bs, false);
                ledger.add_flops(2 * (ri.len() * rk.len() * cj.len()) as u64);
                for j in cj.clone() {
                    for k in rk.clone() {
                        let xkj = x[(k, j)];
                        if xkj == T::zero() {
                            continue;
                        }
                        for i in ri.clone() {
                            let tik = t[(i, k)];
                            x[(i, j)] = x[(i, j)] - tik * xkj;
                        }
                    }
                }
            }
            // Solve the diagonal block by substitution.
            rt.touch(ledger, &ri, &ri, bs, false);
            ledger.add_flops((ri.len() * ri.len() * cj.len()) as u64);
            for j in cj.clone() {
                if lower {
                    for i in ri.clone() {
                        let mut s = x[(i, j)];
                        for k in ri.start..i {
                            s = s - t[(i, k)] * x[(k, j)];
                        }
                        x[(i, j)] = s / t[(i, i)];
                    }
                } else {
                    for i in ri.clone().rev() {
                        let mut s = x[(i, j)];
                        for k in (i + 1)..ri.end {
                            s = s - t[(i, k)] * x[(k, j)];
                        }
                        x[(i, j)] = s / t[(i, i)];
                    }
                }
            }
        }
    }
    Ok(x)
}

/// Dense linear solve `A X = B` by partial-pivot LU. Utility for small
/// systems (base cases, test oracles); not an instrumented kernel.
pub fn lin_solve<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.rows() != b.rows() {
        return Err(Error::dims("lin_solve", (a.rows(), a.cols()), (b.rows(), b.cols())));
    }
    let n = a.rows();
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[(k, k)].abs();
        for i in (k + 1)..n {
            if lu[(i, k)].abs() > best {
                best = lu[(i, k)].abs();
                piv = i;
            }
        }
        if best == 0.0 {
            return Err(Error::RankDeficient("lin_solve: zero pivot"));
        }
        if piv != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            for j in 0..x.cols() {
                let tmp = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = tmp;
            }
        }
        let d = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / d;
            if f == T::zero() {
                continue;
            }
            lu[(i, k)] = f;
            for j in (k + 1)..n {
                let lukj = lu[(k, j)];
                lu[(i, j)] = lu[(i, j)] - f * lukj;
            }
            for j in 0..x.cols() {
                let xkj = x[(k, j)];
                x[(i, j)] = x[(i, j)] - f * xkj;
            }
        }
    }
    for j in 0..x.cols() {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for k in (i + 1)..n {
                s = s - lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Norm;

    #[test]
    fn matmul_identity_passthrough() {
        let id: Matrix<f64> = Matrix::identity(3);
        let b = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let c = mul(&id, &b);
        assert_eq!(c, b);
    }

    #[test]
    fn matmul_hand_value() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Matrix::from_rows(&[&[5.0], &[6.0]]);
        let c = mul(&a, &b);
        assert_eq!(c[(0, 0)], 17.0);
        assert_eq!(c[(1, 0)], 39.0);
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a: Matrix<f64> = Matrix::zeros(2, 3);
        let b: Matrix<f64> = Matrix::zeros(2, 2);
        assert!(matmul(&a, &b, &CostLedger::noop()).is_err());
    }

    #[test]
    fn matmul_word_bound_against_reference_blocking() {
        // Reference oracle: replay the same tile loop, charging three tile
        // fetches per innermost step and a writeback per C tile, no cache.
        let n = 64;
        let m_words = 256;
        let ledger = CostLedger::new(m_words);
        let a = Matrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let b = Matrix::from_fn(n, n, |i, j| ((i * 5 + j) % 13) as f64 - 6.0);
        matmul(&a, &b, &ledger).unwrap();

        let bs = ledger.block_size();
        let mut reference: u64 = 0;
        for ci in tiles(n, bs) {
            for cj in tiles(n, bs) {
                reference += 2 * (ci.len() * cj.len()) as u64; // C in and out
                for ck in tiles(n, bs) {
                    reference += (ci.len() * ck.len()) as u64;
                    reference += (ck.len() * cj.len()) as u64;
                }
            }
        }
        let measured = ledger.totals().words;
        let bound = (8.0 * (n as f64).powi(3) / (m_words as f64).sqrt()) as u64;
        assert!(
            measured <= reference,
            "LRU counting should not exceed the uncached reference: {measured} > {reference}"
        );
        assert!(
            reference <= bound,
            "reference blocking exceeds 8 n^3 / sqrt(M): {reference} > {bound}"
        );
    }

    #[test]
    fn ledger_neutrality_matmul() {
        let n = 20;
        let a = Matrix::from_fn(n, n, |i, j| (i as f64 - j as f64) / 7.0);
        let b = Matrix::from_fn(n, n, |i, j| (i * j % 5) as f64 / 3.0);
        let counted = matmul(&a, &b, &CostLedger::new(300)).unwrap();
        let silent = matmul(&a, &b, &CostLedger::silent(300)).unwrap();
        assert_eq!(counted, silent, "counting must not change bit patterns");
    }

    #[test]
    fn trsm_identity_and_hand_case() {
        let id: Matrix<f64> = Matrix::identity(3);
        let b = Matrix::from_fn(3, 2, |i, j| (i + j) as f64);
        let x = trsm(&id, &b, &CostLedger::noop()).unwrap();
        assert_eq!(x, b);

        let t = Matrix::from_rows(&[&[2.0, 1.0], &[0.0, 4.0]]);
        let rhs = Matrix::from_rows(&[&[5.0], &[8.0]]);
        let x = trsm(&t, &rhs, &CostLedger::noop()).unwrap();
        assert!((x[(0, 0)] - 1.5).abs() < 1e-15);
        assert!((x[(1, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn trsm_detects_singular_diagonal() {
        let t = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1e-20]]);
        let b = Matrix::zeros(2, 1);
        match trsm(&t, &b, &CostLedger::noop()) {
            Err(Error::SingularTriangular { index: 1, .. }) => {}
            other => panic!("expected singular-triangular error, got {other:?}"),
        }
    }

    #[test]
    fn trsm_blocked_residual_random() {
        let n = 32;
        let t = Matrix::from_fn(n, n, |i, j| {
            if i > j {
                0.0
            } else if i == j {
                2.0 + (i % 3) as f64
            } else {
                ((i * 13 + j * 7) % 9) as f64 / 9.0 - 0.4
            }
        });
        let b = Matrix::from_fn(n, 5, |i, j| ((i + 2 * j) % 7) as f64 - 3.0);
        let ledger = CostLedger::new(256);
        let x = trsm(&t, &b, &ledger).unwrap();
        let resid = mul(&t, &x).sub(&b).norm(Norm::Fro) / b.norm(Norm::Fro).max(1e-300);
        assert!(resid < 1e-12, "relative residual {resid:.3e}");
        assert!(ledger.totals().words > 0);
    }

    #[test]
    fn lin_solve_matches_trsm_on_triangular() {
        let t = Matrix::from_rows(&[&[2.0, 1.0, 0.5], &[0.0, 3.0, -1.0], &[0.0, 0.0, 1.5]]);
        let b = Matrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 + 1.0);
        let x1 = trsm(&t, &b, &CostLedger::noop()).unwrap();
        let x2 = lin_solve(&t, &b).unwrap();
        assert!(x1.sub(&x2).norm(Norm::Fro) < 1e-13);
    }

    #[test]
    fn matmul_associativity_to_tolerance() {
        let a = Matrix::from_fn(9, 7, |i, j| ((i * 3 + j) % 5) as f64 - 2.0);
        let b = Matrix::from_fn(7, 8, |i, j| ((i + 2 * j) % 7) as f64 - 3.0);
        let c = Matrix::from_fn(8, 6, |i, j| ((2 * i + j) % 3) as f64 - 1.0);
        let left = mul(&mul(&a, &b), &c);
        let right = mul(&a, &mul(&b, &c));
        let scale = a.norm(Norm::Fro) * b.norm(Norm::Fro) * c.norm(Norm::Fro);
        assert!(left.sub(&right).norm(Norm::Fro) <= 64.0 * 9.0 * crate::scalar::EPS * scale);
    }
}
