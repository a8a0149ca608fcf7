//! Dense-to-banded reduction, banded-to-tridiagonal bulge chasing, and the
//! grouped Householder replay that keeps eigenvector accumulation at
//! `O(n^3 / sqrt(M))` words.

use crate::error::{Error, Result};
use crate::kernels::{tiles, TiledRegion};
use crate::ledger::CostLedger;
use crate::matrix::{Matrix, Norm};
use crate::qr::{apply_set_left, panel_tree_qr, Reflector};
use crate::scalar::EPS;

use super::tridiag::Tridiagonal;
use super::{BandedSym, Schedule};

/// Reduce a dense symmetric matrix to symmetric banded form `H = Q^T A Q`
/// with bandwidth `b`, by panel tree-QR on `A[i+b.., i..i+b]` followed by a
/// two-sided symmetric update of the trailing block (counted at the
/// one-sided rate, which is what the symmetric rank-two form achieves).
///
/// With `accumulate_q` the orthogonal factor is formed explicitly by
/// applying the stored reflectors to the identity in reverse panel order.
pub fn sym_to_band(
    a: &Matrix<f64>,
    b: usize,
    accumulate_q: bool,
    ledger: &CostLedger,
) -> Result<(BandedSym, Option<Matrix<f64>>)> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if b == 0 || b >= n {
        return Err(Error::BandOutOfRange { b, n });
    }
    let dev = a.symmetry_deviation();
    let scale = a.norm(Norm::Fro).max(1e-300);
    if dev > 64.0 * n as f64 * EPS * scale {
        return Err(Error::NotSymmetric { deviation: dev });
    }
    if 4 * b * b > ledger.fast_memory() {
        return Err(Error::InvalidArgument(format!(
            "bandwidth {b} too large: four b x b blocks must fit in fast memory M = {}",
            ledger.fast_memory()
        )));
    }

    let _p = ledger.phase("sym_to_band");
    let bs = ledger.block_size();
    let mut work = a.clone();
    let region = TiledRegion::new(ledger, n, bs);
    let mut panels: Vec<(usize, Vec<Reflector<f64>>)> = Vec::new();

    let mut i = 0;
    while i + b < n {
        let rows = (i + b)..n;
        let cols = i..(i + b).min(n);
        for rt in tiles(rows.len(), bs) {
            let rr = (rows.start + rt.start)..(rows.start + rt.end);
            region.touch(ledger, &rr, &cols, bs, false);
        }
        let mut scratch = work.block(rows.clone(), cols.clone());
        let set = panel_tree_qr(&mut scratch, rows.start, ledger);
        // Panel columns become the R block of this panel's QR.
        apply_set_left(&set, &mut work, cols.clone(), false, ledger, &region);
        // Trailing two-sided symmetric update.
        sym_two_sided_update(&mut work, rows.start, &set, ledger);
        touch_trailing(ledger, &region, rows.start, n, bs, &set);
        panels.push((rows.start, set));
        i += b;
    }

    // Extract the band from the lower triangle.
    let mut banded = BandedSym::zeros(n, b);
    for j in 0..n {
        for ii in j..(j + b + 1).min(n) {
            banded.set(ii, j, work[(ii, j)]);
        }
    }

    let q = if accumulate_q {
        let _p2 = ledger.phase("sym_to_band_form_q");
        let mut q: Matrix<f64> = Matrix::identity(n);
        for (row_start, set) in panels.iter().rev() {
            let col_lo = *row_start;
            let span_hi = set
                .iter()
                .flat_map(|r| r.rows.iter().copied())
                .max()
                .map_or(col_lo, |m| m as usize + 1);
            let vwords: usize = set.iter().map(|r| r.nnz()).sum();
            let vregion = ledger.new_region();
            for chunk in tiles(n - col_lo, bs) {
                let cr = (col_lo + chunk.start)..(col_lo + chunk.end);
                for rt in tiles(span_hi - col_lo, bs) {
                    let rr = (col_lo + rt.start)..(col_lo + rt.end);
                    region.touch(ledger, &rr, &cr, bs, true);
                }
                ledger.touch(vregion, cr.start as u64, vwords.max(1), false);
            }
            for r in set.iter().rev() {
                r.apply_left(&mut q, col_lo..n, true, ledger);
            }
        }
        Some(q)
    } else {
        None
    };
    Ok((banded, q))
}

#[inline]
fn sym_get(work: &Matrix<f64>, i: usize, j: usize) -> f64 {
    if i >= j {
        work[(i, j)]
    } else {
        work[(j, i)]
    }
}

/// Two-sided symmetric reflector application `A <- H A H` on the trailing
/// block `A[lo.., lo..]`, maintaining only the lower triangle. Costs
/// `4 h w` flops per reflector (`w` trailing width), the one-sided rate.
fn sym_two_sided_update(
    work: &mut Matrix<f64>,
    lo: usize,
    set: &[Reflector<f64>],
    ledger: &CostLedger,
) {
    let n = work.rows();
    let w = n - lo;
    for refl in set {
        if refl.tau == 0.0 {
            continue;
        }
        let h = refl.nnz();
        ledger.add_flops((4 * h * w + 4 * h) as u64);
        // y = A v over the trailing block.
        let mut y = vec![0.0f64; w];
        for (idx, &r) in refl.rows.iter().enumerate() {
            let vk = refl.v[idx];
            if vk == 0.0 {
                continue;
            }
            let rr = r as usize;
            for i in lo..n {
                y[i - lo] += sym_get(work, i, rr) * vk;
            }
        }
        let tau = refl.tau;
        let mut dot = 0.0;
        for (idx, &r) in refl.rows.iter().enumerate() {
            dot += refl.v[idx] * y[r as usize - lo];
        }
        // wv = tau y - (tau^2 dot / 2) v ; then A -= v wv^T + wv v^T.
        let mut wv: Vec<f64> = y.iter().map(|&t| tau * t).collect();
        for (idx, &r) in refl.rows.iter().enumerate() {
            wv[r as usize - lo] -= 0.5 * tau * tau * dot * refl.v[idx];
        }
        for (idx, &r) in refl.rows.iter().enumerate() {
            let vk = refl.v[idx];
            if vk == 0.0 {
                continue;
            }
            let rr = r as usize;
            // Column rr of the lower triangle picks up -wv * v_k ...
            for irow in rr..n {
                work[(irow, rr)] -= wv[irow - lo] * vk;
            }
            // ... and row rr picks up -wv^T * v_k up to and including the
            // diagonal (the diagonal entry receives both terms).
            for jcol in lo..=rr {
                work[(rr, jcol)] -= wv[jcol - lo] * vk;
            }
        }
    }
}

fn touch_trailing(
    ledger: &CostLedger,
    region: &TiledRegion,
    lo: usize,
    n: usize,
    bs: usize,
    set: &[Reflector<f64>],
) {
    // One blocked pass over the trailing block (read + write), plus a
    // reflector stream per column chunk.
    let vwords: usize = set.iter().map(|r| r.nnz()).sum();
    let vregion = ledger.new_region();
    for ct in tiles(n - lo, bs) {
        let cc = (lo + ct.start)..(lo + ct.end);
        ledger.touch(vregion, cc.start as u64, vwords.max(1), false);
        for rt in tiles(n - lo, bs) {
            let rr = (lo + rt.start)..(lo + rt.end);
            if rr.start >= cc.start {
                region.touch(ledger, &rr, &cc, bs, true);
            }
        }
    }
}

/// Reference baseline: unblocked Householder tridiagonalization driven by
/// symmetric matrix-vector products. Numerically equivalent to the banded
/// pipeline but moves `Theta(n^3)` words because every column update
/// streams the whole trailing matrix through fast memory.
pub fn direct_tridiagonalize(a: &Matrix<f64>, ledger: &CostLedger) -> Result<Tridiagonal> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let _p = ledger.phase("direct_tridiag");
    let bs = ledger.block_size();
    let mut work = a.clone();
    let region = TiledRegion::new(ledger, n, bs);
    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let x: Vec<f64> = (lo..n).map(|i| work[(i, k)]).collect();
        let rows: Vec<u32> = (lo..n).map(|i| i as u32).collect();
        let (refl, beta) = Reflector::from_column(rows, &x);
        ledger.add_flops(3 * refl.nnz() as u64);
        work[(lo, k)] = beta;
        for i in (lo + 1)..n {
            work[(i, k)] = 0.0;
        }
        // Full trailing matrix streamed for the matrix-vector product and
        // the rank-two update.
        for rt in tiles(n - lo, bs) {
            let rr = (lo + rt.start)..(lo + rt.end);
            for ct in tiles(n - lo, bs) {
                let cc = (lo + ct.start)..(lo + ct.end);
                if rr.start >= cc.start {
                    region.touch(ledger, &rr, &cc, bs, true);
                }
            }
        }
        sym_two_sided_update(&mut work, lo, std::slice::from_ref(&refl), ledger);
    }
    let diag: Vec<f64> = (0..n).map(|i| work[(i, i)]).collect();
    let off: Vec<f64> = (0..n.saturating_sub(1)).map(|i| work[(i + 1, i)]).collect();
    Ok(Tridiagonal { diag, off })
}

/// Working band storage with extra subdiagonal capacity for the traveling
/// bulge. Column `j` stores rows `j ..= min(n-1, j+cap)`.
struct BandWork {
    n: usize,
    cap: usize,
    cols: Vec<f64>,
    region: TiledRegion,
    bs: usize,
}

impl BandWork {
    fn from_banded(h: &BandedSym, cap: usize, ledger: &CostLedger) -> Self {
        let n = h.n();
        let bs = ledger.block_size();
        let mut w = BandWork {
            n,
            cap,
            cols: vec![0.0; n * (cap + 1)],
            region: TiledRegion::new(ledger, n, bs),
            bs,
        };
        for j in 0..n {
            for i in j..(j + h.bandwidth() + 1).min(n) {
                w.set(i, j, h.get(i, j));
            }
        }
        w
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i >= j);
        if i - j > self.cap {
            0.0
        } else {
            self.cols[j * (self.cap + 1) + (i - j)]
        }
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i >= j, "BandWork::set above diagonal");
        debug_assert!(i - j <= self.cap, "BandWork::set beyond bulge capacity");
        self.cols[j * (self.cap + 1) + (i - j)] = v;
    }

    #[inline]
    fn sym(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self.get(i, j)
        } else {
            self.get(j, i)
        }
    }

    fn touch(&self, ledger: &CostLedger, rows: &std::ops::Range<usize>, cols: &std::ops::Range<usize>, dirty: bool) {
        for rt in tiles(rows.len(), self.bs) {
            let rr = (rows.start + rt.start)..(rows.start + rt.end);
            for ct in tiles(cols.len(), self.bs) {
                let cc = (cols.start + ct.start)..(cols.start + ct.end);
                self.region.touch(ledger, &rr, &cc, self.bs, dirty);
            }
        }
    }

    /// Largest |entry| strictly below bandwidth `b` (bulge diagnostics).
    fn max_below_band(&self, b: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.n {
            for i in (j + b + 1)..(j + self.cap + 1).min(self.n) {
                worst = worst.max(self.get(i, j).abs());
            }
        }
        worst
    }

    /// Re-allocate for a new bandwidth, verifying the old band content fits.
    fn repack(&mut self, b_new: usize, cap_new: usize, tol: f64) -> Result<()> {
        let residue = self.max_below_band(b_new);
        if residue > tol {
            return Err(Error::InvalidArgument(format!(
                "band reduction left {residue:.3e} below bandwidth {b_new}"
            )));
        }
        let mut cols = vec![0.0; self.n * (cap_new + 1)];
        for j in 0..self.n {
            for i in j..(j + b_new + 1).min(self.n) {
                cols[j * (cap_new + 1) + (i - j)] = self.get(i, j);
            }
        }
        self.cols = cols;
        self.cap = cap_new;
        Ok(())
    }
}

/// How the banded-to-tridiagonal reduction treats eigenvector updates.
pub enum VectorUpdate<'a> {
    /// Values only.
    None,
    /// Apply every reflector to `Q` as soon as it is generated (reference
    /// ordering oracle; moves `Theta(n^3)` words).
    Immediate { q: &'a mut Matrix<f64> },
    /// Stage reflector groups and replay them panel-wise in the reordered
    /// schedule (the communication-avoiding path).
    Staged { q: &'a mut Matrix<f64>, plan: UpdatePlan },
}

/// Replay parameters: `k` parallelograms per group with `k c = Theta(sqrt
/// M)` staged words, applied to row panels of `Theta(sqrt M)` rows.
#[derive(Clone, Copy, Debug)]
pub struct UpdatePlan {
    m_words: usize,
}

impl UpdatePlan {
    pub fn for_memory(m_words: usize) -> Self {
        UpdatePlan {
            m_words: m_words.max(4),
        }
    }

    /// Parallelograms per replay group for sweep column width `c`.
    pub fn group_parallelograms(&self, c: usize) -> usize {
        (((self.m_words as f64).sqrt() / c.max(1) as f64).round() as usize).max(1)
    }

    /// Row-panel height for the replay.
    pub fn panel_rows(&self) -> usize {
        ((self.m_words as f64).sqrt().floor() as usize).max(1)
    }
}

/// One staged reflector set: the transforms eliminating bulge `bulge` of
/// parallelogram `parallelogram` (both 1-based), with global column
/// supports.
#[derive(Clone, Debug)]
pub struct StagedGroup {
    pub parallelogram: usize,
    pub bulge: usize,
    pub reflectors: Vec<Reflector<f64>>,
}

/// Banded-to-tridiagonal reduction by bulge chasing under `sched`.
///
/// Per sweep `(b, c, d)`, the outermost `d` diagonals are annihilated `c`
/// columns at a time; each elimination's bulge is chased down the band in
/// windows that hop `b` rows at a time, re-zeroing only the first `c`
/// columns of each bulge. Vector updates follow the chosen
/// [`VectorUpdate`] mode.
pub fn band_to_tridiag(
    h: &BandedSym,
    sched: &Schedule,
    mut vectors: VectorUpdate<'_>,
    ledger: &CostLedger,
) -> Result<Tridiagonal> {
    let n = h.n();
    if h.bandwidth() != sched.b1() {
        return Err(Error::BandwidthMismatch {
            matrix_b: h.bandwidth(),
            schedule_b: sched.b1(),
        });
    }
    let _p = ledger.phase("band_to_tridiag");
    let scale = h.to_dense().norm(Norm::Fro).max(1e-300);
    let tol = 256.0 * n as f64 * EPS * scale;

    let first_cap = sched
        .sweeps()
        .first()
        .map_or(1, |sw| (sw.b + sw.d + sw.c).min(n.saturating_sub(1).max(1)));
    let mut work = BandWork::from_banded(h, first_cap.max(h.bandwidth()), ledger);

    for sw in sched.sweeps() {
        let (b, c, d) = (sw.b, sw.c, sw.d);
        let cap_needed = (b + d + c).min(n.saturating_sub(1).max(1));
        if work.cap < cap_needed {
            work.repack(b, cap_needed, tol)?;
        }
        run_sweep(&mut work, b, c, d, &mut vectors, ledger)?;
        let b_next = b - d;
        let cap_next = work.cap.min(n.saturating_sub(1).max(1));
        work.repack(b_next, cap_next, tol)?;
    }

    let diag: Vec<f64> = (0..n).map(|i| work.get(i, i)).collect();
    let off: Vec<f64> = (0..n.saturating_sub(1))
        .map(|i| work.get(i + 1, i))
        .collect();
    Ok(Tridiagonal { diag, off })
}

fn run_sweep(
    work: &mut BandWork,
    b: usize,
    c: usize,
    d: usize,
    vectors: &mut VectorUpdate<'_>,
    ledger: &CostLedger,
) -> Result<()> {
    let n = work.n;
    let mut staged: Vec<StagedGroup> = Vec::new();
    let mut par_in_group = 0usize;
    let group_target = match vectors {
        VectorUpdate::Staged { plan, .. } => plan.group_parallelograms(c),
        _ => usize::MAX,
    };

    let mut j0 = 0usize;
    while j0 + (b - d) + 1 < n {
        par_in_group += 1;
        let mut window = 0usize;
        loop {
            window += 1;
            let (s_start, c_start) = if window == 1 {
                (j0 + b - d, j0)
            } else {
                (j0 + b - d + (window - 1) * b, j0 + b - d + (window - 2) * b)
            };
            if s_start + 1 >= n {
                break;
            }
            let s_end = (s_start + d + c).min(n);
            let c_end = (c_start + c).min(s_start);
            let refls = eliminate_window(work, s_start..s_end, c_start..c_end, b, ledger);
            if refls.is_empty() {
                break;
            }
            match vectors {
                VectorUpdate::None => {}
                VectorUpdate::Immediate { q } => {
                    let nq = q.rows();
                    for r in &refls {
                        r.apply_right(q, 0..nq, false, ledger);
                    }
                }
                VectorUpdate::Staged { .. } => staged.push(StagedGroup {
                    parallelogram: par_in_group,
                    bulge: window,
                    reflectors: refls,
                }),
            }
            if s_end >= n {
                break;
            }
        }

        if par_in_group >= group_target {
            if let VectorUpdate::Staged { q, plan } = vectors {
                update_vectors(q, &staged, plan, ledger)?;
            }
            staged.clear();
            par_in_group = 0;
        }
        j0 += c;
    }
    if !staged.is_empty() {
        if let VectorUpdate::Staged { q, plan } = vectors {
            update_vectors(q, &staged, plan, ledger)?;
        }
    }
    Ok(())
}

/// Annihilate, column by column, the below-pivot entries of
/// `A[s_range, c_range]` (pivot for column `c_range[m]` at row
/// `s_range.start + m`), then apply the transforms two-sidedly to the
/// coupled band region. Returns the reflectors with global supports.
fn eliminate_window(
    work: &mut BandWork,
    s_range: std::ops::Range<usize>,
    c_range: std::ops::Range<usize>,
    b: usize,
    ledger: &CostLedger,
) -> Vec<Reflector<f64>> {
    let n = work.n;
    let s_len = s_range.len();
    if s_len == 0 || c_range.is_empty() {
        return Vec::new();
    }

    // Gather the annihilation block.
    work.touch(ledger, &s_range, &c_range, true);
    let mut block = Matrix::from_fn(s_len, c_range.len(), |i, j| {
        work.get(s_range.start + i, c_range.start + j)
    });

    // Columnwise Householder with exact-zero compaction (local supports).
    let mut local_refls: Vec<Reflector<f64>> = Vec::new();
    for m in 0..c_range.len().min(s_len) {
        let mut idx = vec![m];
        let mut x = vec![block[(m, m)]];
        for i in (m + 1)..s_len {
            let e = block[(i, m)];
            if e != 0.0 {
                idx.push(i);
                x.push(e);
            }
        }
        if idx.len() == 1 {
            continue; // column already clean
        }
        let rows: Vec<u32> = idx.iter().map(|&i| i as u32).collect();
        let (refl, beta) = Reflector::from_column(rows, &x);
        ledger.add_flops(3 * refl.nnz() as u64);
        block[(idx[0], m)] = beta;
        for &i in &idx[1..] {
            block[(i, m)] = 0.0;
        }
        if refl.tau != 0.0 && m + 1 < c_range.len() {
            refl.apply_left(&mut block, (m + 1)..c_range.len(), false, ledger);
        }
        local_refls.push(refl);
    }
    if local_refls.is_empty() {
        return Vec::new();
    }
    // Scatter the cleaned block.
    for j in 0..c_range.len() {
        for i in 0..s_len {
            work.set(s_range.start + i, c_range.start + j, block[(i, j)]);
        }
    }

    // Mid columns [c_range.end, s_range.start): left application.
    if c_range.end < s_range.start {
        let mid = c_range.end..s_range.start;
        work.touch(ledger, &s_range, &mid, true);
        let mut w = Matrix::from_fn(s_len, mid.len(), |i, j| {
            work.get(s_range.start + i, mid.start + j)
        });
        for r in &local_refls {
            r.apply_left(&mut w, 0..mid.len(), false, ledger);
        }
        for j in 0..mid.len() {
            for i in 0..s_len {
                work.set(s_range.start + i, mid.start + j, w[(i, j)]);
            }
        }
    }

    // Symmetric diagonal window: two-sided update at the one-sided rate
    // via the symmetric rank-two form.
    {
        work.touch(ledger, &s_range, &s_range, true);
        let mut g = Matrix::from_fn(s_len, s_len, |i, j| {
            work.sym(s_range.start + i, s_range.start + j)
        });
        sym_two_sided_update(&mut g, 0, &local_refls, ledger);
        for j in 0..s_len {
            for i in j..s_len {
                work.set(s_range.start + i, s_range.start + j, g[(i, j)]);
            }
        }
    }

    // Rows below the window: right application (creates the next bulge).
    let post_end = (s_range.end + b).min(n);
    if s_range.end < post_end {
        let post = s_range.end..post_end;
        work.touch(ledger, &post, &s_range, true);
        let mut p = Matrix::from_fn(post.len(), s_len, |i, j| {
            work.get(post.start + i, s_range.start + j)
        });
        for r in &local_refls {
            r.apply_right(&mut p, 0..post.len(), false, ledger);
        }
        for j in 0..s_len {
            for i in 0..post.len() {
                work.set(post.start + i, s_range.start + j, p[(i, j)]);
            }
        }
    }

    // Globalize supports for the eigenvector updates.
    local_refls
        .into_iter()
        .map(|r| Reflector {
            rows: r.rows.iter().map(|&i| (s_range.start + i as usize) as u32).collect(),
            v: r.v,
            tau: r.tau,
        })
        .collect()
}

/// Apply staged reflector groups to `Q` from the right, one row panel at a
/// time, bulge groups in decreasing bulge order and increasing
/// parallelogram order within a group. Equals the one-at-a-time
/// application in generation order because groups that swap order act on
/// disjoint column sets.
pub fn update_vectors(
    q: &mut Matrix<f64>,
    groups: &[StagedGroup],
    plan: &UpdatePlan,
    ledger: &CostLedger,
) -> Result<()> {
    // The store must be a generation-order trace: (parallelogram, bulge)
    // lexicographically increasing.
    for pair in groups.windows(2) {
        let a = (pair[0].parallelogram, pair[0].bulge);
        let b = (pair[1].parallelogram, pair[1].bulge);
        if b <= a {
            return Err(Error::StagedOrdering(format!(
                "group {b:?} follows {a:?}"
            )));
        }
    }
    let _p = ledger.phase("update_vectors");
    let n = q.rows();
    let bpanel = plan.panel_rows();
    let jmax = groups.iter().map(|g| g.bulge).max().unwrap_or(0);
    let bs = ledger.block_size();
    let qregion = TiledRegion::new(ledger, n, bs);
    for panel in tiles(n, bpanel) {
        for j in (1..=jmax).rev() {
            for g in groups.iter().filter(|g| g.bulge == j) {
                let lo = g
                    .reflectors
                    .iter()
                    .flat_map(|r| r.rows.iter().copied())
                    .min()
                    .unwrap_or(0) as usize;
                let hi = g
                    .reflectors
                    .iter()
                    .flat_map(|r| r.rows.iter().copied())
                    .max()
                    .map_or(lo, |m| m as usize + 1);
                let vwords: usize = g.reflectors.iter().map(|r| r.nnz()).sum();
                let vregion = ledger.new_region();
                ledger.touch(vregion, panel.start as u64, vwords.max(1), false);
                for rt in tiles(panel.len(), bs) {
                    let rr = (panel.start + rt.start)..(panel.start + rt.end);
                    for ct in tiles(hi - lo, bs) {
                        let cc = (lo + ct.start)..(lo + ct.end);
                        qregion.touch(ledger, &rr, &cc, bs, true);
                    }
                }
                for r in &g.reflectors {
                    r.apply_right(q, panel.clone(), false, ledger);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{plan_schedule, Sweep};
    use super::*;
    use crate::scalar::Scalar;
    use crate::jacobi::jacobi_sym_eig;
    use crate::kernels::mul;
    use crate::random::haar_orthogonal;

    fn random_symmetric(n: usize, seed: u64) -> Matrix<f64> {
        let mut rng = crate::random::seeded_rng(seed);
        let raw = Matrix::from_fn(n, n, |_, _| f64::standard_normal(&mut rng));
        Matrix::from_fn(n, n, |i, j| 0.5 * (raw[(i, j)] + raw[(j, i)]))
    }

    fn assert_close_sorted(a: &[f64], b: &[f64], tol: f64, label: &str) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{label}: {x} vs {y} (tol {tol:.3e})");
        }
    }

    #[test]
    fn already_banded_matrix_is_untouched() {
        let n = 10;
        let b = 2;
        let a = Matrix::from_fn(n, n, |i, j| {
            let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
            if hi - lo <= b {
                1.0 + (hi * 3 + lo) as f64 / 10.0
            } else {
                0.0
            }
        });
        let ledger = CostLedger::noop();
        let (banded, q) = sym_to_band(&a, b, true, &ledger).unwrap();
        assert!(banded.to_dense().sub(&a).norm(Norm::Fro) < 1e-12 * a.norm(Norm::Fro));
        let q = q.unwrap();
        assert!(q.sub(&Matrix::identity(n)).norm(Norm::Fro) < 1e-12);
    }

    #[test]
    fn sym_to_band_preserves_eigenvalues() {
        let n = 8;
        let b = 2;
        let a = random_symmetric(n, 17);
        let (banded, q) = sym_to_band(&a, b, true, &CostLedger::noop()).unwrap();
        let hd = banded.to_dense();
        let (ea, _) = jacobi_sym_eig(&a).unwrap();
        let (eh, _) = jacobi_sym_eig(&hd).unwrap();
        let scale = a.norm(Norm::Fro);
        assert_close_sorted(&ea, &eh, 1e-10 * scale, "eigenvalues after banding");
        // Similarity check: Q^T A Q = H.
        let q = q.unwrap();
        let qaq = mul(&mul(&q.transpose(), &a), &q);
        assert!(qaq.sub(&hd).norm(Norm::Fro) < 1e-11 * scale);
        assert!(crate::qr::orthogonality_defect(&q) < 1e-12);
    }

    #[test]
    fn full_to_banded_flop_count_near_four_thirds() {
        let n = 192;
        let m_words = 4096;
        let b = super::super::pipeline_bandwidth(n, m_words);
        assert_eq!(b, 28);
        let ledger = CostLedger::new(m_words);
        let a = random_symmetric(n, 5);
        let _ = sym_to_band(&a, b, false, &ledger).unwrap();
        let flops = ledger.totals().flops as f64;
        let target = 4.0 / 3.0 * (n as f64).powi(3);
        let ratio = flops / target;
        assert!(
            (0.9..=1.1).contains(&ratio),
            "full-to-banded flops {flops:.3e} vs (4/3)n^3 {target:.3e}: ratio {ratio:.3}"
        );
    }

    #[test]
    fn band_to_tridiag_single_sweep_eigenvalues() {
        let n = 64;
        let b = 4;
        let a = random_symmetric(n, 23);
        let (banded, _) = sym_to_band(&a, b, false, &CostLedger::noop()).unwrap();
        let sched = Schedule::new(vec![Sweep { b, c: 1, d: b - 1 }]).unwrap();
        let tri = band_to_tridiag(&banded, &sched, VectorUpdate::None, &CostLedger::noop()).unwrap();
        let dense_t = tri.to_dense();
        let (ea, _) = jacobi_sym_eig(&banded.to_dense()).unwrap();
        let (et, _) = jacobi_sym_eig(&dense_t).unwrap();
        assert_close_sorted(&ea, &et, 1e-10 * banded.to_dense().norm(Norm::Fro), "tridiag eigs");
    }

    #[test]
    fn band_to_tridiag_two_sweep_schedule_and_vectors() {
        let n = 40;
        let b = 6;
        let a = random_symmetric(n, 29);
        let (banded, q0) = sym_to_band(&a, b, true, &CostLedger::noop()).unwrap();
        let sched = Schedule::new(vec![
            Sweep { b: 6, c: 2, d: 4 },
            Sweep { b: 2, c: 1, d: 1 },
        ])
        .unwrap();
        let mut q = q0.unwrap();
        let tri = band_to_tridiag(
            &banded,
            &sched,
            VectorUpdate::Immediate { q: &mut q },
            &CostLedger::noop(),
        )
        .unwrap();
        // Q (T) Q^T must reproduce A.
        let recon = mul(&mul(&q, &tri.to_dense()), &q.transpose());
        let err = recon.sub(&a).norm(Norm::Fro) / a.norm(Norm::Fro);
        assert!(err < 1e-12, "similarity reconstruction error {err:.3e}");
    }

    #[test]
    fn tridiagonal_input_passes_through() {
        let n = 12;
        let a = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let banded = BandedSym::from_dense(&a, 1).unwrap();
        let sched = plan_schedule(n, 1, 4096, false).unwrap();
        let tri = band_to_tridiag(&banded, &sched, VectorUpdate::None, &CostLedger::noop()).unwrap();
        assert!(tri.to_dense().sub(&a).norm(Norm::Fro) < 1e-14);
    }

    #[test]
    fn staged_update_matches_immediate_oracle() {
        let n = 32;
        let b = 4;
        let a = random_symmetric(n, 31);
        let (banded, _) = sym_to_band(&a, b, false, &CostLedger::noop()).unwrap();
        let sched = Schedule::new(vec![Sweep { b, c: 1, d: 3 }]).unwrap();

        let mut q_naive: Matrix<f64> = Matrix::identity(n);
        let t1 = band_to_tridiag(
            &banded,
            &sched,
            VectorUpdate::Immediate { q: &mut q_naive },
            &CostLedger::noop(),
        )
        .unwrap();

        let mut q_staged: Matrix<f64> = Matrix::identity(n);
        let t2 = band_to_tridiag(
            &banded,
            &sched,
            VectorUpdate::Staged {
                q: &mut q_staged,
                plan: UpdatePlan::for_memory(64),
            },
            &CostLedger::noop(),
        )
        .unwrap();

        assert!(t1.to_dense().sub(&t2.to_dense()).norm(Norm::Fro) < 1e-13);
        let diff = q_naive.sub(&q_staged).norm(Norm::Fro);
        assert!(diff < 1e-13, "staged vs immediate Q differ by {diff:.3e}");
    }

    #[test]
    fn update_vectors_rejects_out_of_order_store() {
        let refl = Reflector {
            rows: vec![0, 1],
            v: vec![1.0, 0.5],
            tau: 0.5,
        };
        let groups = vec![
            StagedGroup {
                parallelogram: 2,
                bulge: 1,
                reflectors: vec![refl.clone()],
            },
            StagedGroup {
                parallelogram: 1,
                bulge: 1,
                reflectors: vec![refl],
            },
        ];
        let mut q: Matrix<f64> = Matrix::identity(4);
        let res = update_vectors(&mut q, &groups, &UpdatePlan::for_memory(16), &CostLedger::noop());
        assert!(matches!(res, Err(Error::StagedOrdering(_))));
    }

    #[test]
    fn direct_tridiagonalization_matches_oracle() {
        let n = 24;
        let a = random_symmetric(n, 41);
        let tri = direct_tridiagonalize(&a, &CostLedger::noop()).unwrap();
        let (ea, _) = jacobi_sym_eig(&a).unwrap();
        let (et, _) = jacobi_sym_eig(&tri.to_dense()).unwrap();
        assert_close_sorted(&ea, &et, 1e-10 * a.norm(Norm::Fro), "direct tridiag");
    }

    #[test]
    fn no_fill_outside_band_plus_bulge() {
        // Instrumented invariant: after the sweep, nothing below the new
        // bandwidth; BandWork::set would have panicked on any entry beyond
        // the bulge capacity during the sweep (debug assertions).
        let n = 30;
        let b = 5;
        let a = random_symmetric(n, 53);
        let (banded, _) = sym_to_band(&a, b, false, &CostLedger::noop()).unwrap();
        let sched = Schedule::new(vec![Sweep { b, c: 2, d: 2 }, Sweep { b: 3, c: 1, d: 2 }]).unwrap();
        let tri = band_to_tridiag(&banded, &sched, VectorUpdate::None, &CostLedger::noop()).unwrap();
        let (ea, _) = jacobi_sym_eig(&banded.to_dense()).unwrap();
        let (et, _) = jacobi_sym_eig(&tri.to_dense()).unwrap();
        assert_close_sorted(&ea, &et, 1e-9 * banded.to_dense().norm(Norm::Fro), "two sweeps");
    }

    #[test]
    fn banded_to_tridiag_flops_near_six_b_n_squared() {
        let n = 256;
        let m_words = 4096;
        let b = super::super::pipeline_bandwidth(n, m_words);
        let a = random_symmetric(n, 3);
        let (banded, _) = sym_to_band(&a, b, false, &CostLedger::noop()).unwrap();
        let sched = plan_schedule(n, b, m_words, false).unwrap();
        let ledger = CostLedger::new(m_words);
        let _ = band_to_tridiag(&banded, &sched, VectorUpdate::None, &ledger).unwrap();
        let flops = ledger.totals().flops as f64;
        let target = 6.0 * b as f64 * (n as f64).powi(2);
        let ratio = flops / target;
        assert!(
            (0.8..=1.2).contains(&ratio),
            "banded-to-tridiagonal flops {flops:.3e} vs 6 b n^2 {target:.3e}: ratio {ratio:.3}"
        );
    }

    #[test]
    fn haar_similarity_keeps_band_reduction_accurate() {
        let n = 48;
        let q: Matrix<f64> = haar_orthogonal(n, 61, &CostLedger::noop());
        let lam: Vec<f64> = (0..n).map(|i| (i as f64) - 20.0).collect();
        let a = mul(&mul(&q, &Matrix::diagonal(&lam)), &q.transpose());
        let a = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
        let (banded, _) = sym_to_band(&a, 3, false, &CostLedger::noop()).unwrap();
        let sched = plan_schedule(n, 3, 4096, false).unwrap();
        let tri = band_to_tridiag(&banded, &sched, VectorUpdate::None, &CostLedger::noop()).unwrap();
        let (et, _) = jacobi_sym_eig(&tri.to_dense()).unwrap();
        let mut want = lam.clone();
        want.sort_by(f64::total_cmp);
        assert_close_sorted(&et, &want, 1e-10 * a.norm(Norm::Fro), "haar similarity");
    }
}
