//! Householder factorizations in all four corners (QR, RQ, QL, LQ).
//!
//! The single core path is a blocked QR with a binary reduction tree over
//! row blocks inside each panel (tall-skinny QR). The other three modes are
//! obtained from it by row/column reversal and conjugate transposition, so
//! they share the same kernel and the same cost profile.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::kernels::{tiles, TiledRegion};
use crate::ledger::CostLedger;
use crate::matrix::Matrix;
use crate::scalar::{Scalar, EPS};

/// Which factorization corner to produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorMode {
    /// `A = Q R`, `R` upper triangular, requires `rows >= cols`.
    Qr,
    /// `A = R Q`, `R` upper triangular, requires `cols >= rows`.
    Rq,
    /// `A = Q L`, `L` lower triangular, requires `rows >= cols`.
    Ql,
    /// `A = L Q`, `L` lower triangular, requires `cols >= rows`.
    Lq,
}

/// One Householder reflector `H = I - tau * v v^H`.
///
/// `rows[i]` is the global row index of `v[i]`; `v[0]` is normalized to 1.
/// Tree-combine reflectors act on non-contiguous row sets, which is why the
/// support is an explicit index list.
#[derive(Clone, Debug)]
pub struct Reflector<T: Scalar> {
    pub rows: Vec<u32>,
    pub v: Vec<T>,
    pub tau: T,
}

impl<T: Scalar> Reflector<T> {
    pub fn nnz(&self) -> usize {
        self.v.len()
    }

    /// Build the reflector annihilating `x[1..]` into `x[0]`:
    /// `H x = beta e_1` with real `beta` sign-opposed to `Re(x[0])`.
    pub fn from_column(rows: Vec<u32>, x: &[T]) -> (Self, T) {
        debug_assert_eq!(rows.len(), x.len());
        let alpha = x[0];
        let tail_sq: f64 = x[1..].iter().map(|e| e.abs_sq()).sum();
        if tail_sq == 0.0 && alpha.im() == 0.0 {
            // Already in the target form.
            let v = std::iter::once(T::one())
                .chain(std::iter::repeat(T::zero()).take(x.len() - 1))
                .collect();
            return (
                Reflector {
                    rows,
                    v,
                    tau: T::zero(),
                },
                alpha,
            );
        }
        let norm = (alpha.abs_sq() + tail_sq).sqrt();
        let beta = if alpha.re() >= 0.0 { -norm } else { norm };
        let beta_t = T::from_re(beta);
        // This tau makes H itself (not H^H) the annihilator: H x = beta e_1.
        let tau = (beta_t - alpha.conj()) / beta_t;
        let denom = alpha - beta_t;
        let mut v = Vec::with_capacity(x.len());
        v.push(T::one());
        for &e in &x[1..] {
            v.push(e / denom);
        }
        (Reflector { rows, v, tau }, beta_t)
    }

    /// `B <- H B` restricted to `cols` (or `H^H B` when `adjoint`).
    /// Charges `4*h*c + h` flops per Lemma-style accounting.
    pub fn apply_left(&self, b: &mut Matrix<T>, cols: Range<usize>, adjoint: bool, ledger: &CostLedger) {
        if self.tau == T::zero() || cols.is_empty() {
            return;
        }
        let tau = if adjoint { self.tau.conj() } else { self.tau };
        let h = self.v.len();
        ledger.add_flops((4 * h * cols.len() + h) as u64);
        for j in cols {
            let col = b.col_mut(j);
            let mut w = T::zero();
            for (idx, &r) in self.rows.iter().enumerate() {
                w += self.v[idx].conj() * col[r as usize];
            }
            let tw = tau * w;
            if tw == T::zero() {
                continue;
            }
            for (idx, &r) in self.rows.iter().enumerate() {
                let upd = tw * self.v[idx];
                col[r as usize] -= upd;
            }
        }
    }

    /// `B <- B H` on `rows` minus the pivot row `skip`, whose post-image
    /// is written exactly by the caller (row-elimination steps).
    pub(crate) fn apply_right_skipping(
        &self,
        b: &mut Matrix<T>,
        rows: Range<usize>,
        skip: usize,
        ledger: &CostLedger,
    ) {
        if self.tau == T::zero() || rows.is_empty() {
            return;
        }
        let h = self.v.len();
        ledger.add_flops((4 * h * rows.len().saturating_sub(1) + h) as u64);
        let mut u = vec![T::zero(); rows.len()];
        for (idx, &c) in self.rows.iter().enumerate() {
            let vk = self.v[idx];
            if vk == T::zero() {
                continue;
            }
            let col = b.col(c as usize);
            for (k, i) in rows.clone().enumerate() {
                u[k] += col[i] * vk;
            }
        }
        for x in &mut u {
            *x *= self.tau;
        }
        if rows.contains(&skip) {
            u[skip - rows.start] = T::zero();
        }
        for (idx, &c) in self.rows.iter().enumerate() {
            let f = self.v[idx].conj();
            if f == T::zero() {
                continue;
            }
            let col = b.col_mut(c as usize);
            for (k, i) in rows.clone().enumerate() {
                let upd = u[k] * f;
                col[i] -= upd;
            }
        }
    }

    /// `B <- B H` restricted to `rows` of `B` (or `B H^H` when `adjoint`);
    /// the reflector support indexes columns of `B`. Columnar two-pass
    /// evaluation: `u = B[rows, S] v`, then `B[rows, S] -= tau u v^H`.
    pub fn apply_right(&self, b: &mut Matrix<T>, rows: Range<usize>, adjoint: bool, ledger: &CostLedger) {
        if self.tau == T::zero() || rows.is_empty() {
            return;
        }
        let tau = if adjoint { self.tau.conj() } else { self.tau };
        let h = self.v.len();
        ledger.add_flops((4 * h * rows.len() + h) as u64);
        let mut u = vec![T::zero(); rows.len()];
        for (idx, &c) in self.rows.iter().enumerate() {
            let vk = self.v[idx];
            if vk == T::zero() {
                continue;
            }
            let col = b.col(c as usize);
            for (k, i) in rows.clone().enumerate() {
                u[k] += col[i] * vk;
            }
        }
        for x in &mut u {
            *x *= tau;
        }
        for (idx, &c) in self.rows.iter().enumerate() {
            let f = self.v[idx].conj();
            if f == T::zero() {
                continue;
            }
            let col = b.col_mut(c as usize);
            for (k, i) in rows.clone().enumerate() {
                let upd = u[k] * f;
                col[i] -= upd;
            }
        }
    }
}

/// Reflector index range belonging to one panel of the core QR.
#[derive(Clone, Debug)]
struct PanelSpan {
    refl: Range<usize>,
    row_start: usize,
}

/// Compact factorization: reflector set plus the triangular factor.
#[derive(Clone, Debug)]
pub struct QrFactors<T: Scalar> {
    mode: FactorMode,
    rows: usize,
    cols: usize,
    /// Reflectors of the core QR (of the transformed matrix, see `mode`).
    core: Vec<Reflector<T>>,
    panels: Vec<PanelSpan>,
    /// Row count of the core problem (defines the size of the core Q).
    core_rows: usize,
    triangular: Matrix<T>,
}

impl<T: Scalar> QrFactors<T> {
    pub fn mode(&self) -> FactorMode {
        self.mode
    }

    /// Dimensions of the factored matrix.
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// The triangular factor in the orientation dictated by `mode`
    /// (upper for QR/RQ, lower for QL/LQ), with exact zeros in the dead
    /// triangle.
    pub fn triangular(&self) -> &Matrix<T> {
        &self.triangular
    }

    pub fn reflectors(&self) -> &[Reflector<T>] {
        &self.core
    }

    /// Rebuild `A` from the factors (`Q R`, `R Q`, `Q L` or `L Q`).
    pub fn reassemble(&self, ledger: &CostLedger) -> Result<Matrix<T>> {
        let q = explicit_q(self, ledger);
        match self.mode {
            FactorMode::Qr | FactorMode::Ql => crate::kernels::matmul(&q, &self.triangular, ledger),
            FactorMode::Rq | FactorMode::Lq => crate::kernels::matmul(&self.triangular, &q, ledger),
        }
    }
}

fn flip_both<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    let (m, n) = (a.rows(), a.cols());
    Matrix::from_fn(m, n, |i, j| a[(m - 1 - i, n - 1 - j)])
}

/// Tree-based QR of the panel `work[row0.., col_range]`, returning reflectors
/// in application order. The panel content is consumed from a scratch copy;
/// the live matrix is updated by the caller via [`apply_set_left`].
pub(crate) fn panel_tree_qr<T: Scalar>(
    scratch: &mut Matrix<T>,
    row0: usize,
    ledger: &CostLedger,
) -> Vec<Reflector<T>> {
    let h = scratch.rows();
    let p = scratch.cols();
    let mut out = Vec::new();
    if h == 0 || p == 0 {
        return out;
    }
    // Leaf row count: one leaf block of the panel fills fast memory, with
    // a floor of 64 rows. Too small a leaf multiplies combine nodes, whose
    // stacked-triangle reflectors are pure overhead relative to a flat
    // factorization.
    let leaf = (2 * p).max(ledger.fast_memory() / p.max(1)).max(64);

    // Leaf factorizations over contiguous row chunks.
    let mut nodes: Vec<(usize, usize)> = Vec::new(); // (scratch row offset, R row count)
    for chunk in tiles(h, leaf) {
        let ids: Vec<usize> = chunk.clone().collect();
        qr_on_rows(scratch, &ids, row0, &mut out, ledger);
        nodes.push((chunk.start, chunk.len().min(p)));
    }
    // Binary reduction over the per-node triangular factors.
    while nodes.len() > 1 {
        let mut next = Vec::with_capacity(nodes.len().div_ceil(2));
        for pair in nodes.chunks(2) {
            if pair.len() == 1 {
                next.push(pair[0]);
                continue;
            }
            let (a_off, a_rows) = pair[0];
            let (b_off, b_rows) = pair[1];
            let ids: Vec<usize> = (a_off..a_off + a_rows)
                .chain(b_off..b_off + b_rows)
                .collect();
            qr_on_rows(scratch, &ids, row0, &mut out, ledger);
            next.push((a_off, (a_rows + b_rows).min(p)));
        }
        nodes = next;
    }
    out
}

/// Householder QR restricted to the scratch rows `ids` (all columns).
/// Reflector supports are stored as global indices `row0 + id` and are
/// compacted to the structurally nonzero entries: when combining two
/// triangular factors in the reduction tree most of a column is exactly
/// zero, and skipping those rows leaves the operator unchanged while
/// keeping the per-reflector cost at its true `h`.
fn qr_on_rows<T: Scalar>(
    scratch: &mut Matrix<T>,
    ids: &[usize],
    row0: usize,
    out: &mut Vec<Reflector<T>>,
    ledger: &CostLedger,
) {
    let p = scratch.cols();
    let steps = p.min(ids.len());
    for k in 0..steps {
        let live = &ids[k..];
        // Compact support: pivot plus the exactly-nonzero tail entries.
        let mut local: Vec<usize> = Vec::with_capacity(live.len());
        let mut x: Vec<T> = Vec::with_capacity(live.len());
        local.push(live[0]);
        x.push(scratch[(live[0], k)]);
        for &i in &live[1..] {
            let e = scratch[(i, k)];
            if e != T::zero() {
                local.push(i);
                x.push(e);
            }
        }
        let rows: Vec<u32> = local.iter().map(|&i| (row0 + i) as u32).collect();
        let (refl, beta) = Reflector::from_column(rows, &x);
        ledger.add_flops(3 * refl.nnz() as u64);
        // Write the annihilated column and update the trailing columns.
        scratch[(local[0], k)] = beta;
        for &i in &local[1..] {
            scratch[(i, k)] = T::zero();
        }
        if refl.tau != T::zero() && k + 1 < p {
            ledger.add_flops((4 * refl.nnz() * (p - k - 1) + refl.nnz()) as u64);
            for j in (k + 1)..p {
                let mut w = T::zero();
                for (idx, &i) in local.iter().enumerate() {
                    w += refl.v[idx].conj() * scratch[(i, j)];
                }
                let tw = refl.tau * w;
                for (idx, &i) in local.iter().enumerate() {
                    let upd = tw * refl.v[idx];
                    scratch[(i, j)] -= upd;
                }
            }
        }
        out.push(refl);
    }
}

/// Apply a reflector set to `a` on `cols`. The traffic model walks column
/// chunks of the ledger blocksize (touching matrix tiles and re-streaming
/// the reflector store per chunk); the arithmetic applies each reflector
/// once over the whole range.
pub(crate) fn apply_set_left<T: Scalar>(
    set: &[Reflector<T>],
    a: &mut Matrix<T>,
    cols: Range<usize>,
    adjoint: bool,
    ledger: &CostLedger,
    region: &TiledRegion,
) {
    if set.is_empty() || cols.is_empty() {
        return;
    }
    let bs = ledger.block_size();
    let lo = set
        .iter()
        .flat_map(|r| r.rows.iter().copied())
        .min()
        .unwrap() as usize;
    let hi = set
        .iter()
        .flat_map(|r| r.rows.iter().copied())
        .max()
        .unwrap() as usize
        + 1;
    let span = lo..hi;
    let vwords: usize = set.iter().map(|r| r.nnz()).sum();
    let vregion = ledger.new_region();
    for chunk in tiles(cols.len(), bs) {
        let cr = (cols.start + chunk.start)..(cols.start + chunk.end);
        for rt in tiles(span.len(), bs) {
            let rr = (span.start + rt.start)..(span.start + rt.end);
            region.touch(ledger, &rr, &cr, bs, true);
        }
        ledger.touch(vregion, (cols.start + chunk.start) as u64, vwords.max(1), false);
    }
    for r in set.iter() {
        r.apply_left(a, cols.clone(), adjoint, ledger);
    }
}

/// Core blocked QR: returns reflectors (application order), panel spans, and
/// the upper trapezoidal factor.
fn householder_qr<T: Scalar>(
    a: &Matrix<T>,
    ledger: &CostLedger,
) -> (Vec<Reflector<T>>, Vec<PanelSpan>, Matrix<T>) {
    let (m, n) = (a.rows(), a.cols());
    let p = ledger.block_size().min(n.max(1));
    let mut work = a.clone();
    let mut all = Vec::new();
    let mut panels = Vec::new();
    let region = TiledRegion::new(ledger, m, ledger.block_size());

    for panel in tiles(n, p) {
        if panel.start >= m {
            break;
        }
        let rows = panel.start..m;
        // Reflector generation runs on a scratch copy of the panel.
        let mut scratch = work.block(rows.clone(), panel.clone());
        let bs = ledger.block_size();
        for rt in tiles(rows.len(), bs) {
            let rr = (rows.start + rt.start)..(rows.start + rt.end);
            region.touch(ledger, &rr, &panel, bs, false);
        }
        let start_idx = all.len();
        let set = panel_tree_qr(&mut scratch, rows.start, ledger);
        // Update the live matrix, panel columns included (they become R).
        apply_set_left(&set, &mut work, panel.start..n, false, ledger, &region);
        all.extend(set);
        panels.push(PanelSpan {
            refl: start_idx..all.len(),
            row_start: rows.start,
        });
    }

    // Zero the annihilated triangle exactly.
    for j in 0..n {
        for i in (j + 1)..m {
            work[(i, j)] = T::zero();
        }
    }
    (all, panels, work)
}

/// Compact Householder factorization of `A` in the requested corner.
///
/// Preconditions: QR/QL need `rows >= cols`; RQ/LQ need `cols >= rows`.
pub fn factorize<T: Scalar>(
    a: &Matrix<T>,
    mode: FactorMode,
    ledger: &CostLedger,
) -> Result<QrFactors<T>> {
    if a.is_empty() {
        return Err(Error::EmptyMatrix("factorize"));
    }
    match mode {
        FactorMode::Qr | FactorMode::Ql if a.rows() < a.cols() => {
            return Err(Error::InvalidArgument(format!(
                "{mode:?} needs rows >= cols, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        FactorMode::Rq | FactorMode::Lq if a.cols() < a.rows() => {
            return Err(Error::InvalidArgument(format!(
                "{mode:?} needs cols >= rows, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        _ => {}
    }
    let _p = ledger.phase("factorize");
    let (m, n) = (a.rows(), a.cols());
    let built = match mode {
        FactorMode::Qr => {
            let (core, panels, r) = householder_qr(a, ledger);
            QrFactors {
                mode,
                rows: m,
                cols: n,
                core,
                panels,
                core_rows: m,
                triangular: r,
            }
        }
        FactorMode::Ql => {
            let (core, panels, r) = householder_qr(&flip_both(a), ledger);
            QrFactors {
                mode,
                rows: m,
                cols: n,
                core,
                panels,
                core_rows: m,
                triangular: flip_both(&r),
            }
        }
        FactorMode::Lq => {
            let (core, panels, r) = householder_qr(&a.adjoint(), ledger);
            QrFactors {
                mode,
                rows: m,
                cols: n,
                core,
                panels,
                core_rows: n,
                triangular: r.adjoint(),
            }
        }
        FactorMode::Rq => {
            let (core, panels, r) = householder_qr(&flip_both(&a.adjoint()), ledger);
            QrFactors {
                mode,
                rows: m,
                cols: n,
                core,
                panels,
                core_rows: n,
                triangular: flip_both(&r).adjoint(),
            }
        }
    };
    Ok(built)
}

/// Form the orthogonal/unitary factor explicitly by applying the stored
/// reflectors to the identity in reverse panel order, restricted to the
/// live column window (columns left of the earliest panel applied so far
/// are still identity columns and need no work).
pub fn explicit_q<T: Scalar>(f: &QrFactors<T>, ledger: &CostLedger) -> Matrix<T> {
    let _p = ledger.phase("explicit_q");
    let mc = f.core_rows;
    let mut q: Matrix<T> = Matrix::identity(mc);
    let region = TiledRegion::new(ledger, mc, ledger.block_size());
    let bs = ledger.block_size();

    for panel in f.panels.iter().rev() {
        let wave = &f.core[panel.refl.clone()];
        if wave.is_empty() {
            continue;
        }
        let col_lo = panel.row_start;
        let span_hi = wave
            .iter()
            .flat_map(|r| r.rows.iter().copied())
            .max()
            .unwrap() as usize
            + 1;
        let vwords: usize = wave.iter().map(|r| r.nnz()).sum();
        let vregion = ledger.new_region();
        for chunk in tiles(mc - col_lo, bs) {
            let cr = (col_lo + chunk.start)..(col_lo + chunk.end);
            for rt in tiles(span_hi - col_lo, bs) {
                let rr = (col_lo + rt.start)..(col_lo + rt.end);
                region.touch(ledger, &rr, &cr, bs, true);
            }
            ledger.touch(vregion, cr.start as u64, vwords.max(1), false);
        }
        // Within one panel, Q = H_a^H ... H_z^H applied to the current
        // product, so reflectors run in reverse generation order.
        for r in wave.iter().rev() {
            r.apply_left(&mut q, col_lo..mc, true, ledger);
        }
    }
    match f.mode {
        FactorMode::Qr => q,
        FactorMode::Ql => flip_both(&q),
        FactorMode::Lq => q.adjoint(),
        FactorMode::Rq => flip_both(&q).adjoint(),
    }
}

/// Orthogonality defect `||Q^H Q - I||_F`.
pub fn orthogonality_defect<T: Scalar>(q: &Matrix<T>) -> f64 {
    let g = crate::kernels::mul(&q.adjoint(), q);
    let n = g.cols();
    let mut sum = 0.0;
    for j in 0..n {
        for i in 0..g.rows() {
            let target = if i == j { T::one() } else { T::zero() };
            sum += (g[(i, j)] - target).abs_sq();
        }
    }
    sum.sqrt()
}

/// Default structural tolerance `64 n eps`.
pub fn structural_tol(n: usize) -> f64 {
    64.0 * n as f64 * EPS
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::mul;
    use crate::matrix::Norm;
    use num_complex::Complex64;

    fn check_mode<T: Scalar>(a: &Matrix<T>, mode: FactorMode) {
        let ledger = CostLedger::noop();
        let f = factorize(a, mode, &ledger).unwrap();
        let n = a.rows().max(a.cols());
        let tol = structural_tol(n);

        // Triangular zero pattern.
        let t = f.triangular();
        let scale = a.norm(Norm::Fro).max(1.0);
        for j in 0..t.cols() {
            for i in 0..t.rows() {
                let dead = match mode {
                    FactorMode::Qr => i > j,
                    FactorMode::Rq => {
                        let shift = t.cols() - t.rows();
                        j < i + shift
                    }
                    FactorMode::Ql => {
                        let shift = t.rows() - t.cols();
                        i < j + shift
                    }
                    FactorMode::Lq => j > i,
                };
                if dead {
                    assert!(
                        t[(i, j)].abs() <= tol * scale,
                        "{mode:?}: nonzero in dead triangle at ({i},{j}): {:?}",
                        t[(i, j)]
                    );
                }
            }
        }

        let q = explicit_q(&f, &ledger);
        assert!(
            orthogonality_defect(&q) <= tol,
            "{mode:?}: Q not orthogonal: {}",
            orthogonality_defect(&q)
        );
        let re = f.reassemble(&ledger).unwrap();
        let resid = re.sub(a).norm(Norm::Fro) / a.norm(Norm::Fro).max(1e-300);
        assert!(resid <= tol, "{mode:?}: reconstruction residual {resid:.3e}");
    }

    #[test]
    fn identity_qr_is_identity() {
        let id: Matrix<f64> = Matrix::identity(4);
        let f = factorize(&id, FactorMode::Qr, &CostLedger::noop()).unwrap();
        let q = explicit_q(&f, &CostLedger::noop());
        for j in 0..4 {
            let s = q[(j, j)];
            assert!((s.abs() - 1.0).abs() < 1e-14);
            for i in 0..4 {
                if i != j {
                    assert!(q[(i, j)].abs() < 1e-14);
                }
            }
            assert!((f.triangular()[(j, j)].abs() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_norm_column_lands_in_r11() {
        let a = Matrix::from_rows(&[&[3.0], &[4.0]]);
        let f = factorize(&a, FactorMode::Qr, &CostLedger::noop()).unwrap();
        assert!((f.triangular()[(0, 0)].abs() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn single_reflector_roundtrip() {
        // Householder reflection H = I - 2 v v^T is orthogonal and symmetric;
        // its Q factor reproduces H up to column signs.
        let v = [0.6, 0.8];
        let h = Matrix::from_fn(2, 2, |i, j| {
            (if i == j { 1.0 } else { 0.0 }) - 2.0 * v[i] * v[j]
        });
        let f = factorize(&h, FactorMode::Qr, &CostLedger::noop()).unwrap();
        let q = explicit_q(&f, &CostLedger::noop());
        for j in 0..2 {
            let sign = (q[(j, j)] * h[(j, j)]).signum();
            for i in 0..2 {
                assert!((q[(i, j)] * sign - h[(i, j)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn all_modes_real_rectangular() {
        let tall = Matrix::from_fn(32, 16, |i, j| ((i * 31 + j * 17) % 23) as f64 / 23.0 - 0.4);
        check_mode(&tall, FactorMode::Qr);
        check_mode(&tall, FactorMode::Ql);
        let wide = tall.transpose();
        check_mode(&wide, FactorMode::Rq);
        check_mode(&wide, FactorMode::Lq);
    }

    #[test]
    fn all_modes_complex_square() {
        let a = Matrix::from_fn(12, 12, |i, j| {
            Complex64::new(
                ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5,
                ((i * 5 + j) % 7) as f64 / 7.0 - 0.3,
            )
        });
        for mode in [FactorMode::Qr, FactorMode::Rq, FactorMode::Ql, FactorMode::Lq] {
            check_mode(&a, mode);
        }
    }

    #[test]
    fn empty_matrix_rejected() {
        let a: Matrix<f64> = Matrix::zeros(0, 0);
        assert!(matches!(
            factorize(&a, FactorMode::Qr, &CostLedger::noop()),
            Err(Error::EmptyMatrix(_))
        ));
    }

    #[test]
    fn tall_panel_tree_matches_direct_residual() {
        // 200x8 panel forces several leaves and tree levels.
        let a = Matrix::from_fn(200, 8, |i, j| ((i * 13 + j * 29) % 101) as f64 / 101.0 - 0.5);
        check_mode(&a, FactorMode::Qr);
    }

    #[test]
    fn ledger_neutrality_factorize() {
        let a = Matrix::from_fn(24, 24, |i, j| ((i * 3 + j * 11) % 17) as f64 - 8.0);
        let f1 = factorize(&a, FactorMode::Qr, &CostLedger::new(600)).unwrap();
        let f2 = factorize(&a, FactorMode::Qr, &CostLedger::silent(600)).unwrap();
        assert_eq!(f1.triangular(), f2.triangular());
        let q1 = explicit_q(&f1, &CostLedger::new(600));
        let q2 = explicit_q(&f2, &CostLedger::silent(600));
        assert_eq!(q1, q2);
    }
}
