//! Closed-form cost calculators for the sequential two-level model and the
//! parallel 2D-blocked model, plus the S2QR demonstrator that computes a QR
//! factorization from a Schur decomposition of an embedded block matrix.
//!
//! The formulas are leading-term expressions with unit constants scaled by
//! each algorithm's sub-call count; only scaling exponents and explicitly
//! stated constants are meaningful.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::trsm_lower;
use crate::ledger::CostLedger;
use crate::matrix::{Matrix, Norm};
use crate::qr::{factorize, FactorMode};

/// Sequential algorithm whose two-level cost is being evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeqKind {
    /// Blocked matrix multiply.
    Mm,
    /// Communication-avoiding QR.
    Qr,
    /// Randomized rank-revealing URV = 2 QR + 1 MM.
    Rurv,
    /// One implicit-repeated-squaring iteration = QR(2n,n) + 2 MM.
    Irs,
    /// One divide-and-conquer step = 2 IRS + 2 RURV + 2 QR + 6 MM.
    RgnepStep,
}

impl SeqKind {
    /// Unit-cost multiplier: the number of n^3-class sub-calls.
    fn units(self) -> f64 {
        match self {
            SeqKind::Mm => 1.0,
            SeqKind::Qr => 1.0,
            SeqKind::Rurv => 3.0,
            // QR of the stacked 2n x n matrix counts as 2 units (m n^2).
            SeqKind::Irs => 4.0,
            SeqKind::RgnepStep => 2.0 * 4.0 + 2.0 * 3.0 + 2.0 + 6.0,
        }
    }
}

/// Sequential cost triple in the two-level model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeqCost {
    pub flops: f64,
    pub words: f64,
    pub messages: f64,
}

/// Leading-term sequential costs with unit constants:
/// `flops = u n^3`, `words = u n^3 / sqrt(M)`, `messages = u n^3 / M^{3/2}`
/// where `u` is the sub-call unit count of `kind`. Valid in the
/// out-of-cache regime `n^2 > M`.
pub fn seq_cost_formulas(kind: SeqKind, n: usize, m_words: usize) -> SeqCost {
    let n3 = (n as f64).powi(3);
    let m = m_words as f64;
    let u = kind.units();
    SeqCost {
        flops: u * n3,
        words: u * n3 / m.sqrt(),
        messages: u * n3 / m.powf(1.5),
    }
}

/// Constant factor bounding the full divide-and-conquer recurrence relative
/// to one step: `1 / (3 f0 (1 - f0))` for split fractions in
/// `[1 - f0, f0]`.
pub fn seq_recurrence_constant(f0: f64) -> f64 {
    assert!((0.5..1.0).contains(&f0), "need 1/2 <= f0 < 1");
    1.0 / (3.0 * f0 * (1.0 - f0))
}

/// Parallel machine/algorithm parameters for [`par_cost_formulas`].
#[derive(Clone, Copy, Debug)]
pub struct ParallelCostParams {
    /// Processor count (a perfect square where the layout requires it).
    pub p: usize,
    /// Latency cost per message.
    pub alpha: f64,
    /// Inverse bandwidth (cost per word).
    pub beta: f64,
    /// Cost per flop.
    pub gamma: f64,
    /// Square blocksize of the 2D layout.
    pub b: usize,
    /// Split-fraction bound, `1/2 <= f0 < 1`.
    pub f0: f64,
}

impl ParallelCostParams {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidArgument("P >= 1 required".into()));
        }
        if !(0.5..1.0).contains(&self.f0) {
            return Err(Error::InvalidArgument("1/2 <= f0 < 1 required".into()));
        }
        if self.b == 0 {
            return Err(Error::InvalidArgument("blocksize b >= 1 required".into()));
        }
        Ok(())
    }
}

/// Parallel algorithm selector for [`par_cost_formulas`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParKind {
    Summa,
    Caqr,
    Rurv,
    Irs,
    RgnepStep,
    RgnepTotal,
    Ptrevc,
}

/// Parallel cost split into its three terms (before weighting).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParCost {
    /// Message count (weighted by alpha in the total).
    pub messages: f64,
    /// Words moved (weighted by beta).
    pub words: f64,
    /// Flops (weighted by gamma).
    pub flops: f64,
}

impl ParCost {
    pub fn total(&self, p: &ParallelCostParams) -> f64 {
        p.alpha * self.messages + p.beta * self.words + p.gamma * self.flops
    }
}

/// Evaluate the printed parallel cost formulas with unit constants.
///
/// SUMMA: `alpha (n/b) lg P + beta (n^2/sqrt(P)) lg P + gamma n^3/P`.
/// CAQR adds the `n^2 b lg P / sqrt(P)` flop term. RURV/IRS/one D&C step:
/// `alpha sqrt(P) lg P + beta (n^2/sqrt(P)) lg P + gamma (n^3/P) lg P`.
/// The full D&C total is the step cost times
/// `(1 - P^{-1/2}) / (1 - f0)` from the `f^2 P` processor assignment.
/// PTREVC: `alpha sqrt(P) lg P + beta (n^2/sqrt(P)) lg P + gamma n^3/P`.
pub fn par_cost_formulas(kind: ParKind, n: usize, params: &ParallelCostParams) -> Result<ParCost> {
    params.validate()?;
    let nf = n as f64;
    let p = params.p as f64;
    let lg = p.log2();
    let b = params.b as f64;
    let base = match kind {
        ParKind::Summa => ParCost {
            messages: (nf / b) * lg,
            words: nf * nf / p.sqrt() * lg,
            flops: nf.powi(3) / p,
        },
        ParKind::Caqr => ParCost {
            messages: (nf / b) * lg,
            words: nf * nf / p.sqrt() * lg,
            flops: nf.powi(3) / p + nf * nf * b / p.sqrt() * lg,
        },
        ParKind::Rurv | ParKind::Irs | ParKind::RgnepStep => ParCost {
            messages: p.sqrt() * lg,
            words: nf * nf / p.sqrt() * lg,
            flops: nf.powi(3) / p * lg,
        },
        ParKind::RgnepTotal => {
            let step = par_cost_formulas(ParKind::RgnepStep, n, params)?;
            let c = par_total_constant(params.p, params.f0);
            ParCost {
                messages: step.messages * c,
                words: step.words * c,
                flops: step.flops * c,
            }
        }
        ParKind::Ptrevc => ParCost {
            messages: p.sqrt() * lg,
            words: nf * nf / p.sqrt() * lg,
            flops: nf.powi(3) / p,
        },
    };
    Ok(base)
}

/// Constant factor of the parallel divide-and-conquer total relative to one
/// step: `(1 - P^{-1/2}) / (1 - f0)`, the geometric sum over the recursion
/// depth `log_{f0}(1/sqrt(P))`.
pub fn par_total_constant(p: usize, f0: f64) -> f64 {
    (1.0 - (p as f64).powf(-0.5)) / (1.0 - f0)
}

/// Dense real Schur decomposition `B = Z T Z^T` for small matrices:
/// Hessenberg reduction followed by shifted QR iteration with Givens
/// sweeps. Eigenvalue order on the diagonal is whatever deflation produced.
///
/// Intended as the bundled black box for [`s2qr`] on test-sized inputs; it
/// requires the spectrum to be real (as it is for the S2QR embedding).
pub fn schur_small(b: &Matrix<f64>, max_sweeps: usize) -> Result<(Matrix<f64>, Matrix<f64>)> {
    if !b.is_square() {
        return Err(Error::NotSquare {
            rows: b.rows(),
            cols: b.cols(),
        });
    }
    let n = b.rows();
    if n == 0 {
        return Ok((Matrix::zeros(0, 0), Matrix::zeros(0, 0)));
    }
    let scale = b.norm(Norm::Fro).max(1e-300);

    // Hessenberg reduction by Householder similarity.
    let mut h = b.clone();
    let mut z: Matrix<f64> = Matrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<f64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let rows: Vec<u32> = ((k + 1)..n).map(|i| i as u32).collect();
        let (refl, _) = crate::qr::Reflector::from_column(rows, &x);
        let noop = CostLedger::noop();
        refl.apply_left(&mut h, 0..n, false, &noop);
        refl.apply_right(&mut h, 0..n, false, &noop);
        refl.apply_right(&mut z, 0..n, false, &noop);
        for i in (k + 2)..n {
            h[(i, k)] = 0.0;
        }
    }

    // Shifted QR iteration on the active trailing block.
    let eps = crate::scalar::EPS;
    let mut hi = n; // active block is 0..hi
    let mut stuck = 0usize;
    let mut sweeps = 0usize;
    while hi > 1 {
        if sweeps > max_sweeps * n {
            return Err(Error::InvalidArgument(
                "schur_small: QR iteration did not converge".into(),
            ));
        }
        sweeps += 1;
        // Deflate tiny subdiagonals.
        let mut deflated = false;
        for k in (1..hi).rev() {
            if h[(k, k - 1)].abs() <= eps * (h[(k, k)].abs() + h[(k - 1, k - 1)].abs() + scale) {
                h[(k, k - 1)] = 0.0;
                if k == hi - 1 {
                    hi -= 1;
                    deflated = true;
                    stuck = 0;
                }
            }
        }
        if deflated || hi <= 1 {
            continue;
        }
        // Wilkinson shift from the trailing 2x2; exceptional shift when stuck.
        stuck += 1;
        let a11 = h[(hi - 2, hi - 2)];
        let a12 = h[(hi - 2, hi - 1)];
        let a21 = h[(hi - 1, hi - 2)];
        let a22 = h[(hi - 1, hi - 1)];
        let tr = a11 + a22;
        let det = a11 * a22 - a12 * a21;
        let disc = tr * tr / 4.0 - det;
        let mut shift = if disc >= 0.0 {
            let r = disc.sqrt();
            let l1 = tr / 2.0 + r;
            let l2 = tr / 2.0 - r;
            if (l1 - a22).abs() < (l2 - a22).abs() {
                l1
            } else {
                l2
            }
        } else {
            a22
        };
        if stuck % 12 == 0 {
            shift += 0.75 * (h[(hi - 1, hi - 2)].abs() + scale * eps.sqrt());
        }

        // Explicit shifted QR sweep on the active block via Givens rotations.
        let mut cs: Vec<(f64, f64)> = Vec::with_capacity(hi - 1);
        for i in 0..hi {
            h[(i, i)] -= shift;
        }
        for k in 0..hi - 1 {
            let a = h[(k, k)];
            let bb = h[(k + 1, k)];
            let r = (a * a + bb * bb).sqrt();
            let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, bb / r) };
            cs.push((c, s));
            // Rows extend across deflated trailing columns too.
            for j in k..n {
                let t1 = h[(k, j)];
                let t2 = h[(k + 1, j)];
                h[(k, j)] = c * t1 + s * t2;
                h[(k + 1, j)] = -s * t1 + c * t2;
            }
        }
        for (k, &(c, s)) in cs.iter().enumerate() {
            for i in 0..(k + 2).min(hi) {
                let t1 = h[(i, k)];
                let t2 = h[(i, k + 1)];
                h[(i, k)] = c * t1 + s * t2;
                h[(i, k + 1)] = -s * t1 + c * t2;
            }
            for i in 0..n {
                let t1 = z[(i, k)];
                let t2 = z[(i, k + 1)];
                z[(i, k)] = c * t1 + s * t2;
                z[(i, k + 1)] = -s * t1 + c * t2;
            }
        }
        for i in 0..hi {
            h[(i, i)] += shift;
        }
    }

    // Clean the strictly lower triangle (converged Schur form is triangular).
    for j in 0..n {
        for i in (j + 1)..n {
            h[(i, j)] = 0.0;
        }
    }

    Ok((z, h))
}

/// Reorder a real Schur form in place so the leading diagonal entries match
/// `targets` (nearest-value assignment), using orthogonal swaps of adjacent
/// eigenvalues. Entries beyond `targets` end up last in arbitrary order.
pub fn reorder_schur(z: &mut Matrix<f64>, t: &mut Matrix<f64>, targets: &[f64]) {
    let n = t.rows();
    for (pos, &want) in targets.iter().enumerate() {
        if pos >= n {
            break;
        }
        let mut best = pos;
        let mut bestd = (t[(pos, pos)] - want).abs();
        for k in (pos + 1)..n {
            let d = (t[(k, k)] - want).abs();
            if d < bestd {
                bestd = d;
                best = k;
            }
        }
        for k in (pos..best).rev() {
            swap_adjacent(t, z, k);
        }
    }
}

/// Orthogonal swap of diagonal entries `T[k,k]` and `T[k+1,k+1]` of a real
/// triangular matrix (Givens rotation against the coupling entry).
fn swap_adjacent(t: &mut Matrix<f64>, z: &mut Matrix<f64>, k: usize) {
    let n = t.rows();
    let l1 = t[(k, k)];
    let l2 = t[(k + 1, k + 1)];
    let t12 = t[(k, k + 1)];
    // Eigenvector of the trailing eigenvalue inside the 2x2 block.
    let x = t12;
    let y = l2 - l1;
    let r = (x * x + y * y).sqrt();
    if r == 0.0 {
        return;
    }
    let (c, s) = (x / r, y / r);
    // Apply G^T from the left and G from the right on rows/cols k, k+1.
    for j in 0..n {
        let a = t[(k, j)];
        let b = t[(k + 1, j)];
        t[(k, j)] = c * a + s * b;
        t[(k + 1, j)] = -s * a + c * b;
    }
    for i in 0..n {
        let a = t[(i, k)];
        let b = t[(i, k + 1)];
        t[(i, k)] = c * a + s * b;
        t[(i, k + 1)] = -s * a + c * b;
    }
    for i in 0..n {
        let a = z[(i, k)];
        let b = z[(i, k + 1)];
        z[(i, k)] = c * a + s * b;
        z[(i, k + 1)] = -s * a + c * b;
    }
    t[(k + 1, k)] = 0.0;
    debug_assert!((t[(k, k)] - l2).abs() <= 1e-6 * (l1.abs() + l2.abs() + 1.0));
}

/// Output of the [`s2qr`] reduction.
#[derive(Clone, Debug)]
pub struct S2qrResult {
    /// Orthogonal factor of `[R; X]` recovered from the Schur vectors.
    pub q_hat: Matrix<f64>,
    /// Triangular factor recovered by the triangular solve.
    pub r_hat: Matrix<f64>,
    /// Schur form of the embedded block matrix (diagnostics).
    pub t: Matrix<f64>,
}

/// QR via Schur form: embeds `A = [R; X]` into `B = [[R, 0], [X, 0]]`,
/// computes a Schur decomposition of `B` with the provided black box, and
/// reads off the QR factors of `A` from `Q_hat` and `T_11 = R_hat * Q_11`
/// by a triangular solve.
///
/// `B` is block lower triangular, so its nonzero eigenvalues are exactly
/// `diag(R)`; the Schur form is reordered to that sequence (zeros last)
/// before extraction, which is what makes `Q_11` upper triangular. The
/// recovered factors are verified against `A` before returning.
pub fn s2qr(
    r: &Matrix<f64>,
    x: &Matrix<f64>,
    schur: impl Fn(&Matrix<f64>) -> Result<(Matrix<f64>, Matrix<f64>)>,
    ledger: &CostLedger,
) -> Result<S2qrResult> {
    if !r.is_square() {
        return Err(Error::NotSquare {
            rows: r.rows(),
            cols: r.cols(),
        });
    }
    let m = r.rows();
    let nx = x.rows();
    if x.cols() != m {
        return Err(Error::dims("s2qr", (r.rows(), r.cols()), (x.rows(), x.cols())));
    }
    let _p = ledger.phase("s2qr");
    let nb = m + nx;

    // Full column rank check on the stacked matrix.
    let mut stacked = Matrix::zeros(nb, m);
    stacked.set_block(0, 0, r);
    stacked.set_block(m, 0, x);
    let probe = factorize(&stacked, FactorMode::Qr, ledger)?;
    let tol = crate::kernels::triangular_singularity_threshold(probe.triangular());
    for i in 0..m {
        if probe.triangular()[(i, i)].abs() <= tol {
            return Err(Error::RankDeficient("s2qr: stacked [R; X] is rank deficient"));
        }
    }

    let mut b = Matrix::zeros(nb, nb);
    b.set_block(0, 0, r);
    b.set_block(m, 0, x);
    let (mut z, mut t) = schur(&b)?;
    let targets: Vec<f64> = (0..m).map(|i| r[(i, i)]).collect();
    reorder_schur(&mut z, &mut t, &targets);

    let q11 = z.block(0..m, 0..m);
    let t11 = t.block(0..m, 0..m);
    // R_hat Q11 = T11  =>  Q11^T R_hat^T = T11^T (lower triangular solve).
    let rt = trsm_lower(&q11.transpose(), &t11.transpose(), ledger)?;
    let r_hat = rt.transpose();

    // Agreement with a direct QR of the stacked matrix: Q_hat[:, 0..m] R_hat
    // must reproduce [R; X].
    let recon = crate::kernels::matmul(&z.block(0..nb, 0..m), &r_hat, ledger)?;
    let err = recon.sub(&stacked).norm(Norm::Fro) / stacked.norm(Norm::Fro).max(1e-300);
    if err > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "s2qr: recovered factors do not reproduce [R; X] (relative error {err:.3e})"
        )));
    }
    Ok(S2qrResult { q_hat: z, r_hat, t })
}

/// Bundled Schur black box for test-sized instances.
pub fn schur_oracle_small(b: &Matrix<f64>) -> Result<(Matrix<f64>, Matrix<f64>)> {
    schur_small(b, 120)
}

/// The eigenvalues a correct S2QR embedding must produce: `n` zeros plus
/// the diagonal of `R_hat * Q11` (both factors triangular).
pub fn s2qr_expected_eigenvalues(res: &S2qrResult, m: usize, n_zero: usize) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = (0..m)
        .map(|i| Complex64::new(res.r_hat[(i, i)] * res.q_hat[(i, i)], 0.0))
        .collect();
    out.extend(std::iter::repeat(Complex64::new(0.0, 0.0)).take(n_zero));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::mul;
    use crate::qr::explicit_q;

    #[test]
    fn seq_formula_spot_values() {
        let c = seq_cost_formulas(SeqKind::Mm, 64, 256);
        assert_eq!(c.words, 64f64.powi(3) / 16.0);
        assert_eq!(c.words, 16384.0);
        // Doubling M scales words by 1/sqrt(2).
        let c2 = seq_cost_formulas(SeqKind::Mm, 64, 512);
        assert!((c2.words / c.words - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        // RGNEP step is 22 units.
        let st = seq_cost_formulas(SeqKind::RgnepStep, 10, 100);
        assert_eq!(st.flops, 22.0 * 1000.0);
    }

    #[test]
    fn recurrence_constant_closed_form_substitution() {
        // C(n) = K A n^3 with K = 1/(3 f0 (1-f0)) satisfies
        // C(n) >= C(f0 n) + C((1-f0) n) + A n^3.
        for &f0 in &[0.5, 0.6, 0.75, 0.9] {
            let k = seq_recurrence_constant(f0);
            let lhs = k;
            let rhs = k * f0.powi(3) + k * (1.0 - f0).powi(3) + 1.0;
            assert!(
                lhs >= rhs - 1e-12,
                "f0={f0}: {lhs} < {rhs}"
            );
            // Equality holds exactly: f0^3 + (1-f0)^3 = 1 - 3 f0 (1 - f0).
            assert!((lhs - rhs).abs() < 1e-12);
        }
        assert!((seq_recurrence_constant(0.5) - 4.0 / 3.0).abs() < 1e-12);
    }

    fn unit_params(p: usize, b: usize) -> ParallelCostParams {
        ParallelCostParams {
            p,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            b,
            f0: 0.5,
        }
    }

    #[test]
    fn summa_latency_spot_value() {
        let c = par_cost_formulas(ParKind::Summa, 1024, &unit_params(16, 256)).unwrap();
        assert_eq!(c.messages, 16.0); // (1024/256) * lg 16 = 4 * 4
    }

    #[test]
    fn single_processor_drops_log_terms() {
        let c = par_cost_formulas(ParKind::Summa, 40, &unit_params(1, 8)).unwrap();
        assert_eq!(c.messages, 0.0);
        assert_eq!(c.words, 0.0);
        assert_eq!(c.flops, 64000.0);
    }

    #[test]
    fn rgnep_total_constant_values() {
        assert!((par_total_constant(16, 0.5) - 1.5).abs() < 1e-12);
        for &p in &[4usize, 16, 64] {
            for &f0 in &[0.5, 0.75] {
                let want = (1.0 - (p as f64).powf(-0.5)) / (1.0 - f0);
                let mut params = unit_params(p, 4);
                params.f0 = f0;
                let step = par_cost_formulas(ParKind::RgnepStep, 64, &params).unwrap();
                let tot = par_cost_formulas(ParKind::RgnepTotal, 64, &params).unwrap();
                assert!((tot.flops / step.flops - want).abs() < 1e-9);
                assert!((par_total_constant(p, f0) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn schur_small_triangularizes_known_spectrum() {
        let n = 6;
        let q: Matrix<f64> = crate::random::haar_orthogonal(n, 3, &CostLedger::noop());
        let d = Matrix::diagonal(&[3.0, -1.0, 0.5, 2.0, -2.5, 1.5]);
        let a = mul(&mul(&q, &d), &q.transpose());
        let (z, t) = schur_small(&a, 120).unwrap();
        assert!(crate::qr::orthogonality_defect(&z) < 1e-12);
        let recon = mul(&mul(&z, &t), &z.transpose());
        assert!(recon.sub(&a).norm(Norm::Fro) < 1e-10 * a.norm(Norm::Fro));
        let mut eig: Vec<f64> = (0..n).map(|i| t[(i, i)]).collect();
        eig.sort_by(f64::total_cmp);
        for (got, want) in eig.iter().zip(&[-2.5, -1.0, 0.5, 1.5, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn s2qr_trivial_x_zero() {
        let r = Matrix::from_rows(&[&[2.0, 1.0], &[0.0, 3.0]]);
        let x: Matrix<f64> = Matrix::zeros(2, 2);
        let res = s2qr(&r, &x, schur_oracle_small, &CostLedger::noop()).unwrap();
        // R_hat should reproduce R up to row signs.
        for i in 0..2 {
            let sign = if res.r_hat[(i, i)] * r[(i, i)] < 0.0 {
                -1.0
            } else {
                1.0
            };
            for j in 0..2 {
                assert!(
                    (res.r_hat[(i, j)] * sign - r[(i, j)]).abs() < 1e-9,
                    "row {i}: {:?}",
                    res.r_hat
                );
            }
        }
    }

    #[test]
    fn s2qr_matches_direct_qr_up_to_column_sign() {
        let m = 2;
        let nx = 2;
        let r = Matrix::from_rows(&[&[1.5, -0.3], &[0.0, 0.8]]);
        let x = Matrix::from_rows(&[&[0.4, 0.9], &[-0.7, 0.2]]);
        let res = s2qr(&r, &x, schur_oracle_small, &CostLedger::noop()).unwrap();

        let mut stacked = Matrix::zeros(m + nx, m);
        stacked.set_block(0, 0, &r);
        stacked.set_block(m, 0, &x);
        let f = factorize(&stacked, FactorMode::Qr, &CostLedger::noop()).unwrap();
        let qd = explicit_q(&f, &CostLedger::noop());
        for j in 0..m {
            let sign = if res.q_hat[(0, j)] * qd[(0, j)] < 0.0 {
                -1.0
            } else {
                1.0
            };
            for i in 0..(m + nx) {
                assert!(
                    (res.q_hat[(i, j)] * sign - qd[(i, j)]).abs() < 1e-9,
                    "Q mismatch at ({i},{j})"
                );
            }
            let rsign = if res.r_hat[(j, j)] * f.triangular()[(j, j)] < 0.0 {
                -1.0
            } else {
                1.0
            };
            for jj in j..m {
                assert!(
                    (res.r_hat[(j, jj)] * rsign - f.triangular()[(j, jj)]).abs() < 1e-9,
                    "R mismatch at ({j},{jj})"
                );
            }
        }
    }

    #[test]
    fn s2qr_rejects_rank_deficiency() {
        let r = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let x: Matrix<f64> = Matrix::zeros(1, 2);
        assert!(matches!(
            s2qr(&r, &x, schur_oracle_small, &CostLedger::noop()),
            Err(Error::RankDeficient(_))
        ));
    }
}
