//! Direct base-case eigensolvers for blocks at the recursion leaves
//! (`n <= base_case_size`, default 4): characteristic polynomial by the
//! Faddeev-LeVerrier recurrence, roots by the Durand-Kerner simultaneous
//! iteration, and (for symmetric blocks) eigenvectors by inverse iteration
//! with reorthogonalization inside clusters.

use num_complex::Complex64;

use crate::kernels::{lin_solve, mul};
use crate::matrix::{Matrix, Norm};
use crate::scalar::{Scalar, EPS};

/// Monic characteristic polynomial coefficients `c_1..c_n` of a small
/// matrix: `p(z) = z^n + c_1 z^{n-1} + ... + c_n` (Faddeev-LeVerrier).
fn char_poly<T: Scalar>(a: &Matrix<T>) -> Vec<Complex64> {
    let n = a.rows();
    let az = a.to_complex();
    let mut coeffs = Vec::with_capacity(n);
    let mut m = az.clone();
    for k in 1..=n {
        let c = -m.trace() / Complex64::new(k as f64, 0.0);
        coeffs.push(c);
        if k < n {
            let mut shifted = m.clone();
            for i in 0..n {
                shifted[(i, i)] += c;
            }
            m = mul(&az, &shifted);
        }
    }
    coeffs
}

/// All complex roots of the monic polynomial with coefficients `c_1..c_n`
/// by Durand-Kerner iteration.
pub fn char_poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    if n == 0 {
        return Vec::new();
    }
    let eval = |z: Complex64| -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for &c in coeffs {
            p = p * z + c;
        }
        p
    };
    // Radius guess from the coefficient bound, seed points on a spiral.
    let bound = 1.0
        + coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| seed.powu(k as u32 + 1) * bound / seed.norm().powi(k as i32 + 1) * 0.7)
        .collect();
    for _ in 0..400 {
        let mut delta: f64 = 0.0;
        for k in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != k {
                    denom *= z[k] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                // Nudge coincident iterates apart.
                z[k] += Complex64::new(1e-8 * bound, 1e-8 * bound);
                continue;
            }
            let step = eval(z[k]) / denom;
            z[k] -= step;
            delta = delta.max(step.norm());
        }
        if delta <= 1e-15 * bound {
            break;
        }
    }
    z
}

/// Eigenvalues of a small matrix (any scalar kind) via the characteristic
/// polynomial.
pub fn small_eig<T: Scalar>(a: &Matrix<T>) -> Vec<Complex64> {
    let n = a.rows();
    match n {
        0 => Vec::new(),
        1 => vec![a[(0, 0)].to_complex()],
        2 => {
            let (a11, a12, a21, a22) = (
                a[(0, 0)].to_complex(),
                a[(0, 1)].to_complex(),
                a[(1, 0)].to_complex(),
                a[(1, 1)].to_complex(),
            );
            let tr = a11 + a22;
            let det = a11 * a22 - a12 * a21;
            let disc = (tr * tr * 0.25 - det).sqrt();
            vec![tr * 0.5 + disc, tr * 0.5 - disc]
        }
        _ => char_poly_roots(&char_poly(a)),
    }
}

/// Eigenvalues (ascending) and eigenvectors of a small symmetric block by
/// characteristic-polynomial roots plus inverse iteration.
pub fn small_sym_eig(a: &Matrix<f64>) -> (Vec<f64>, Matrix<f64>) {
    let n = a.rows();
    if n == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    if n == 1 {
        return (vec![a[(0, 0)]], Matrix::identity(1));
    }
    let scale = a.norm(Norm::Fro).max(1e-300);
    let mut vals: Vec<f64> = small_eig(a).into_iter().map(|z| z.re).collect();
    vals.sort_by(f64::total_cmp);

    let mut vectors = Matrix::zeros(n, n);
    let cluster_tol = 1e-7 * scale;
    for j in 0..n {
        // Inverse iteration at a slightly perturbed shift.
        let shift = vals[j] + scale * EPS * 16.0 * (1.0 + j as f64);
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] -= shift;
        }
        let mut x = Matrix::from_fn(n, 1, |i, _| {
            // Deterministic, j-dependent start vector.
            1.0 + ((i * 7 + j * 13 + 3) % 11) as f64 / 11.0
        });
        for _ in 0..4 {
            x = match lin_solve(&shifted, &x) {
                Ok(v) => v,
                Err(_) => break, // exactly singular: keep the current guess
            };
            // Orthogonalize against earlier vectors of the same cluster.
            for k in 0..j {
                if (vals[k] - vals[j]).abs() <= cluster_tol {
                    let dot: f64 = (0..n).map(|i| vectors[(i, k)] * x[(i, 0)]).sum();
                    for i in 0..n {
                        let vk = vectors[(i, k)];
                        x[(i, 0)] -= dot * vk;
                    }
                }
            }
            let nrm = x.norm(Norm::Fro).max(1e-300);
            x = x.scale(1.0 / nrm);
        }
        for i in 0..n {
            vectors[(i, j)] = x[(i, 0)];
        }
    }
    (vals, vectors)
}
