//! Seeded randomness: Haar-distributed orthogonal/unitary matrices and the
//! counter scheme that derives child seeds from a root seed, so that two
//! algorithms (e.g. a product decomposition and its explicitly-formed
//! oracle) can be handed identical random matrices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ledger::CostLedger;
use crate::matrix::Matrix;
use crate::qr::{explicit_q, factorize, FactorMode};
use crate::scalar::Scalar;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed `stream` of a root seed. Fixed scheme: callers that must see
/// identical random draws use the same `(root, stream)` pair.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    splitmix64(root ^ splitmix64(stream.wrapping_add(0xa076_1d64_78bd_642f)))
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-distributed orthogonal (`f64`) or unitary (`Complex64`) matrix.
///
/// Draws an i.i.d. standard-normal matrix, takes its QR, and multiplies
/// column `j` of `Q` by the phase of `R_jj`; the sign fix makes the
/// distribution exactly Haar rather than merely orthogonal.
pub fn haar_orthogonal<T: Scalar>(n: usize, seed: u64, ledger: &CostLedger) -> Matrix<T> {
    assert!(n >= 1, "haar_orthogonal needs n >= 1");
    let mut rng = seeded_rng(seed);
    let b: Matrix<T> = Matrix::from_fn(n, n, |_, _| T::standard_normal(&mut rng));
    let f = factorize(&b, FactorMode::Qr, ledger).expect("square nonempty");
    let mut q = explicit_q(&f, ledger);
    for j in 0..n {
        let phase = f.triangular()[(j, j)].phase();
        for i in 0..n {
            q[(i, j)] = q[(i, j)] * phase;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qr::orthogonality_defect;
    use num_complex::Complex64;

    #[test]
    fn haar_1x1_is_plus_minus_one() {
        let mut plus = 0;
        for seed in 0..200 {
            let v: Matrix<f64> = haar_orthogonal(1, seed, &CostLedger::noop());
            let x = v[(0, 0)];
            assert!((x.abs() - 1.0).abs() < 1e-14);
            if x > 0.0 {
                plus += 1;
            }
        }
        // Both signs occur with roughly equal frequency.
        assert!(plus > 60 && plus < 140, "sign balance off: {plus}/200");
    }

    #[test]
    fn haar_orthogonality_real_and_complex() {
        let v: Matrix<f64> = haar_orthogonal(17, 42, &CostLedger::noop());
        assert!(orthogonality_defect(&v) < 64.0 * 17.0 * f64::EPSILON);
        let u: Matrix<Complex64> = haar_orthogonal(9, 7, &CostLedger::noop());
        assert!(orthogonality_defect(&u) < 64.0 * 9.0 * f64::EPSILON);
    }

    #[test]
    fn derive_seed_distinguishes_streams() {
        let a = derive_seed(1, 0);
        let b = derive_seed(1, 1);
        let c = derive_seed(2, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(1, 0));
    }

    #[test]
    fn corner_singular_value_statistic_is_order_one() {
        // Median over seeds of sqrt(r(n-r)) * sigma_min(V[0..r,0..r]) for a
        // Haar V stays in a fixed O(1) window.
        let n = 32;
        let r = 16;
        let mut stats = Vec::new();
        for seed in 0..60 {
            let v: Matrix<f64> = haar_orthogonal(n, seed, &CostLedger::noop());
            let corner = v.block(0..r, 0..r);
            let (sv, _, _) = crate::jacobi::jacobi_svd(&corner).unwrap();
            let smin = sv.last().copied().unwrap();
            stats.push(((r * (n - r)) as f64).sqrt() * smin);
        }
        stats.sort_by(f64::total_cmp);
        let median = stats[stats.len() / 2];
        assert!(
            (0.1..=3.0).contains(&median),
            "corner statistic median {median}"
        );
    }
}
