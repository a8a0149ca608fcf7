//! SVD by successive band reduction: dense -> banded upper triangular
//! (alternating column-panel QR and row-panel LQ), banded -> bidiagonal
//! (bulge chasing with independent left and right transforms), then the
//! bidiagonal singular values via the permuted symmetric embedding whose
//! tridiagonal form interleaves the bidiagonal entries.

use crate::error::{Error, Result};
use crate::kernels::{matmul, tiles, TiledRegion};
use crate::ledger::CostLedger;
use crate::matrix::{Matrix, Norm};
use crate::qr::{apply_set_left, panel_tree_qr, Reflector};
use crate::scalar::EPS;

use super::band_reduce::{update_vectors, StagedGroup, UpdatePlan};
use super::tridiag::{tridiag_eig, Tridiagonal};
use super::{pipeline_bandwidth, plan_schedule, Schedule};

/// Upper triangular banded matrix: entries `(i, j)` with
/// `0 <= j - i <= band` (plus transient sub-diagonal bulge room).
#[derive(Clone, Debug)]
pub struct UpperBand {
    n: usize,
    band: usize,
    cap_up: usize,
    cap_lo: usize,
    data: Vec<f64>,
}

impl UpperBand {
    pub fn zeros(n: usize, band: usize, cap_up: usize, cap_lo: usize) -> Self {
        UpperBand {
            n,
            band,
            cap_up,
            cap_lo,
            data: vec![0.0; n * (cap_up + cap_lo + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.band
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> Option<usize> {
        let di = j as isize - i as isize;
        if di > self.cap_up as isize || di < -(self.cap_lo as isize) {
            None
        } else {
            Some(i * (self.cap_up + self.cap_lo + 1) + (di + self.cap_lo as isize) as usize)
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.offset(i, j) {
            Some(o) => self.data[o],
            None => 0.0,
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        match self.offset(i, j) {
            Some(o) => self.data[o] = v,
            None => debug_assert!(
                v == 0.0,
                "UpperBand::set outside capacity at ({i},{j}) = {v}"
            ),
        }
    }

    pub fn to_dense(&self) -> Matrix<f64> {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Largest |entry| outside the upper band `0 <= j - i <= band`.
    pub fn max_outside_band(&self, band: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i.saturating_sub(self.cap_lo)..(i + self.cap_up + 1).min(self.n) {
                let inside = j >= i && j - i <= band;
                if !inside {
                    worst = worst.max(self.get(i, j).abs());
                }
            }
        }
        worst
    }
}

/// Bidiagonal matrix (diagonal plus one superdiagonal).
#[derive(Clone, Debug)]
pub struct Bidiagonal {
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Bidiagonal {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> Matrix<f64> {
        let n = self.n();
        Matrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if j == i + 1 {
                self.sup[i]
            } else {
                0.0
            }
        })
    }

    /// Permuted symmetric embedding: the Golub-Kahan tridiagonal of size
    /// `2n` with zero diagonal and off-diagonal `[d0, e0, d1, e1, ...]`,
    /// whose eigenvalues are the singular values and their negatives.
    pub fn golub_kahan_tridiagonal(&self) -> Tridiagonal {
        let n = self.n();
        let mut off = Vec::with_capacity(2 * n - 1);
        for i in 0..n {
            off.push(self.diag[i]);
            if i + 1 < n {
                off.push(self.sup[i]);
            }
        }
        Tridiagonal {
            diag: vec![0.0; 2 * n],
            off,
        }
    }
}

/// Reduce a square dense matrix to upper triangular band form
/// `S = U^T A V` with bandwidth `b`, alternating column-panel QR (from the
/// left) and row-panel LQ (from the right).
pub fn svd_to_band(
    a: &Matrix<f64>,
    b: usize,
    want_vectors: bool,
    ledger: &CostLedger,
) -> Result<(UpperBand, Option<Matrix<f64>>, Option<Matrix<f64>>)> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if b == 0 || b >= n.max(1) {
        return Err(Error::BandOutOfRange { b, n });
    }
    let _p = ledger.phase("svd_to_band");
    let bs = ledger.block_size();
    let mut work = a.clone();
    let region = TiledRegion::new(ledger, n, bs);
    let mut left_sets: Vec<(usize, Vec<Reflector<f64>>)> = Vec::new();
    let mut right_sets: Vec<(usize, Vec<Reflector<f64>>)> = Vec::new();

    let mut i = 0usize;
    while i < n.saturating_sub(1) {
        // Column panel QR: zero below the diagonal of columns i..i+b.
        let prows = i..n;
        let pcols = i..(i + b).min(n);
        for rt in tiles(prows.len(), bs) {
            let rr = (prows.start + rt.start)..(prows.start + rt.end);
            region.touch(ledger, &rr, &pcols, bs, false);
        }
        let mut scratch = work.block(prows.clone(), pcols.clone());
        let set_l = panel_tree_qr(&mut scratch, prows.start, ledger);
        apply_set_left(&set_l, &mut work, i..n, false, ledger, &region);
        left_sets.push((i, set_l));

        // Row panel LQ: zero to the right of the band in rows i..i+b.
        if i + b < n.saturating_sub(1) {
            let rrows = i..(i + b).min(n);
            let rcols = (i + b)..n;
            for ct in tiles(rcols.len(), bs) {
                let cc = (rcols.start + ct.start)..(rcols.start + ct.end);
                region.touch(ledger, &rrows, &cc, bs, false);
            }
            let block_t = work.block(rrows.clone(), rcols.clone()).transpose();
            let mut scratch_t = block_t;
            let set_r = panel_tree_qr(&mut scratch_t, rcols.start, ledger);
            apply_set_right(&set_r, &mut work, i..n, ledger, &region);
            right_sets.push((rcols.start, set_r));
        }
        i += b;
    }

    // Extract the band; residue outside must be round-off.
    let tol = 256.0 * n as f64 * EPS * a.norm(Norm::Fro).max(1e-300);
    let mut band = UpperBand::zeros(n, b, b, 0);
    for r in 0..n {
        for jcol in r..(r + b + 1).min(n) {
            band.set(r, jcol, work[(r, jcol)]);
        }
    }
    let mut residue: f64 = 0.0;
    for jcol in 0..n {
        for r in 0..n {
            let inside = jcol >= r && jcol - r <= b;
            if !inside {
                residue = residue.max(work[(r, jcol)].abs());
            }
        }
    }
    if residue > tol {
        return Err(Error::InvalidArgument(format!(
            "band reduction residue {residue:.3e} above tolerance {tol:.3e}"
        )));
    }

    let (u, v) = if want_vectors {
        let _p2 = ledger.phase("svd_to_band_form_uv");
        (
            Some(form_product_reverse(&left_sets, n, ledger)),
            Some(form_product_reverse(&right_sets, n, ledger)),
        )
    } else {
        (None, None)
    };
    Ok((band, u, v))
}

/// Apply a reflector set to `a` from the right on `rows`, walking row
/// chunks with tile touches (the right-side sibling of `apply_set_left`).
fn apply_set_right(
    set: &[Reflector<f64>],
    a: &mut Matrix<f64>,
    rows: std::ops::Range<usize>,
    ledger: &CostLedger,
    region: &TiledRegion,
) {
    if set.is_empty() || rows.is_empty() {
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
    let vwords: usize = set.iter().map(|r| r.nnz()).sum();
    let vregion = ledger.new_region();
    for chunk in tiles(rows.len(), bs) {
        let rr = (rows.start + chunk.start)..(rows.start + chunk.end);
        for ct in tiles(hi - lo, bs) {
            let cc = (lo + ct.start)..(lo + ct.end);
            region.touch(ledger, &rr, &cc, bs, true);
        }
        ledger.touch(vregion, rr.start as u64, vwords.max(1), false);
    }
    for r in set {
        r.apply_right(a, rows.clone(), false, ledger);
    }
}

/// Form `H_1 H_2 ... H_p` (real reflectors, generation order) explicitly
/// by reverse application to the identity with a shrinking column window.
fn form_product_reverse(
    sets: &[(usize, Vec<Reflector<f64>>)],
    n: usize,
    ledger: &CostLedger,
) -> Matrix<f64> {
    let bs = ledger.block_size();
    let mut q: Matrix<f64> = Matrix::identity(n);
    let region = TiledRegion::new(ledger, n, bs);
    for (col_lo, set) in sets.iter().rev() {
        if set.is_empty() {
            continue;
        }
        let col_lo = *col_lo;
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
            r.apply_left(&mut q, col_lo..n, false, ledger);
        }
    }
    q
}

/// Vector-update mode for the bidiagonal chase (two independent sides).
pub enum SvdVectorUpdate<'a> {
    None,
    Staged {
        u: &'a mut Matrix<f64>,
        v: &'a mut Matrix<f64>,
        plan: UpdatePlan,
    },
}

/// Reduce an upper triangular banded matrix to bidiagonal form by bulge
/// chasing: right transforms annihilate the outer superdiagonals `c` rows
/// at a time, left transforms re-zero the sub-diagonal spill, and the pair
/// marches down the band in hops of `b`.
pub fn band_to_bidiag(
    s: &UpperBand,
    sched: &Schedule,
    mut vectors: SvdVectorUpdate<'_>,
    ledger: &CostLedger,
) -> Result<Bidiagonal> {
    let n = s.n();
    if s.bandwidth() != sched.b1() {
        return Err(Error::BandwidthMismatch {
            matrix_b: s.bandwidth(),
            schedule_b: sched.b1(),
        });
    }
    let _p = ledger.phase("band_to_bidiag");
    let scale = s.to_dense().norm(Norm::Fro).max(1e-300);
    let tol = 256.0 * n as f64 * EPS * scale;

    let mut work = s.clone();
    let region = TiledRegion::new(ledger, n, ledger.block_size());
    for sw in sched.sweeps() {
        let (b, c, d) = (sw.b, sw.c, sw.d);
        // Reallocate with bulge capacity.
        let cap_up = (b + d + c).min(n.saturating_sub(1).max(1));
        let cap_lo = (d + c).min(n.saturating_sub(1).max(1));
        let mut next = UpperBand::zeros(n, b, cap_up, cap_lo);
        for i in 0..n {
            for j in i..(i + b + 1).min(n) {
                next.set(i, j, work.get(i, j));
            }
        }
        work = next;
        run_svd_sweep(&mut work, b, c, d, &mut vectors, &region, ledger)?;
        let residue = work.max_outside_band(b - d);
        if residue > tol {
            return Err(Error::InvalidArgument(format!(
                "bidiagonal sweep left residue {residue:.3e} outside bandwidth {}",
                b - d
            )));
        }
        work.band = b - d;
    }

    let diag: Vec<f64> = (0..n).map(|i| work.get(i, i)).collect();
    let sup: Vec<f64> = (0..n.saturating_sub(1)).map(|i| work.get(i, i + 1)).collect();
    Ok(Bidiagonal { diag, sup })
}

fn run_svd_sweep(
    work: &mut UpperBand,
    b: usize,
    c: usize,
    d: usize,
    vectors: &mut SvdVectorUpdate<'_>,
    region: &TiledRegion,
    ledger: &CostLedger,
) -> Result<()> {
    let n = work.n;
    let mut staged_u: Vec<StagedGroup> = Vec::new();
    let mut staged_v: Vec<StagedGroup> = Vec::new();
    let mut par_in_group = 0usize;
    let group_target = match vectors {
        SvdVectorUpdate::Staged { plan, .. } => plan.group_parallelograms(c),
        _ => usize::MAX,
    };

    let mut j0 = 0usize;
    while j0 + (b - d) + 1 < n {
        par_in_group += 1;
        let mut window = 0usize;
        loop {
            window += 1;
            let w_start = j0 + b - d + (window - 1) * b;
            if w_start >= n {
                break;
            }
            let w_end = (w_start + d + c).min(n);
            let rows = if window == 1 {
                j0..(j0 + c).min(w_start)
            } else {
                let prev = j0 + b - d + (window - 2) * b;
                prev..(prev + c).min(n)
            };
            // Right side: annihilate the outer superdiagonals of `rows`.
            let v_refls = eliminate_rows_right(work, rows.clone(), w_start..w_end, region, ledger);
            if !v_refls.is_empty() {
                match vectors {
                    SvdVectorUpdate::None => {}
                    SvdVectorUpdate::Staged { .. } => staged_v.push(StagedGroup {
                        parallelogram: par_in_group,
                        bulge: window,
                        reflectors: v_refls,
                    }),
                }
            }
            // Left side: re-zero the sub-diagonal spill of the first c
            // columns of the window.
            let u_refls = eliminate_cols_left(work, w_start..w_end, c, b, region, ledger);
            if !u_refls.is_empty() {
                match vectors {
                    SvdVectorUpdate::None => {}
                    SvdVectorUpdate::Staged { .. } => staged_u.push(StagedGroup {
                        parallelogram: par_in_group,
                        bulge: window,
                        reflectors: u_refls,
                    }),
                }
            }
            if w_end >= n {
                break;
            }
        }

        if par_in_group >= group_target {
            flush_svd_groups(vectors, &mut staged_u, &mut staged_v, ledger)?;
            par_in_group = 0;
        }
        j0 += c;
    }
    flush_svd_groups(vectors, &mut staged_u, &mut staged_v, ledger)?;
    Ok(())
}

fn flush_svd_groups(
    vectors: &mut SvdVectorUpdate<'_>,
    staged_u: &mut Vec<StagedGroup>,
    staged_v: &mut Vec<StagedGroup>,
    ledger: &CostLedger,
) -> Result<()> {
    if let SvdVectorUpdate::Staged { u, v, plan } = vectors {
        if !staged_u.is_empty() {
            update_vectors(u, staged_u, plan, ledger)?;
        }
        if !staged_v.is_empty() {
            update_vectors(v, staged_v, plan, ledger)?;
        }
    }
    staged_u.clear();
    staged_v.clear();
    Ok(())
}

/// Right-multiplication step: for each row `r` in `rows`, annihilate its
/// entries in columns `(pivot_r, cols.end)` where `pivot_r` walks the
/// window diagonal. Applies the transforms to every coupled row and
/// returns the reflectors (global column supports).
fn eliminate_rows_right(
    work: &mut UpperBand,
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
    region: &TiledRegion,
    ledger: &CostLedger,
) -> Vec<Reflector<f64>> {
    let n = work.n;
    let w_len = cols.len();
    if rows.is_empty() || w_len == 0 {
        return Vec::new();
    }
    // Rows coupled to the window columns: the eliminated rows themselves,
    // the mid rows, and the window-diagonal rows (bulge creation).
    let touch_rows = rows.start..cols.end.min(n);
    touch_band(region, ledger, &touch_rows, &cols, true);
    let mut g = Matrix::from_fn(touch_rows.len(), w_len, |i, j| {
        work.get(touch_rows.start + i, cols.start + j)
    });
    let mut out: Vec<Reflector<f64>> = Vec::new();
    // Clipped windows near the boundary expose fewer pivot columns than rows.
    for (t, r) in rows.clone().enumerate().take(w_len) {
        let local_row = r - touch_rows.start;
        // Compacted support over columns t..w_len of local row.
        let mut idx = vec![t];
        let mut x = vec![g[(local_row, t)]];
        for jc in (t + 1)..w_len {
            let e = g[(local_row, jc)];
            if e != 0.0 {
                idx.push(jc);
                x.push(e);
            }
        }
        if idx.len() == 1 {
            continue;
        }
        let supp: Vec<u32> = idx.iter().map(|&jc| jc as u32).collect();
        let (refl, beta) = Reflector::from_column(supp, &x);
        ledger.add_flops(3 * refl.nnz() as u64);
        g[(local_row, idx[0])] = beta;
        for &jc in &idx[1..] {
            g[(local_row, jc)] = 0.0;
        }
        if refl.tau != 0.0 {
            // Apply to the other coupled rows.
            refl.apply_right_skipping(&mut g, 0..touch_rows.len(), local_row, ledger);
        }
        out.push(refl);
    }
    if out.is_empty() {
        return out;
    }
    for j in 0..w_len {
        for i in 0..touch_rows.len() {
            work.set(touch_rows.start + i, cols.start + j, g[(i, j)]);
        }
    }
    // Globalize supports (columns).
    out.into_iter()
        .map(|r| Reflector {
            rows: r.rows.iter().map(|&lc| (cols.start + lc as usize) as u32).collect(),
            v: r.v,
            tau: r.tau,
        })
        .collect()
}

/// Left-multiplication step: zero the sub-diagonal entries of the first
/// `c` columns of the window rows, applying the transforms across every
/// coupled column. Returns reflectors with global row supports.
fn eliminate_cols_left(
    work: &mut UpperBand,
    window: std::ops::Range<usize>,
    c: usize,
    b: usize,
    region: &TiledRegion,
    ledger: &CostLedger,
) -> Vec<Reflector<f64>> {
    let n = work.n;
    let s_len = window.len();
    if s_len <= 1 {
        return Vec::new();
    }
    let col_end = (window.end + b).min(n);
    let cols = window.start..col_end;
    touch_band(region, ledger, &window, &cols, true);
    let mut g = Matrix::from_fn(s_len, cols.len(), |i, j| {
        work.get(window.start + i, cols.start + j)
    });
    let mut out: Vec<Reflector<f64>> = Vec::new();
    // Only the first c bulge columns need re-zeroing; the rest are swept
    // up by the following parallelograms.
    for m in 0..c.min(s_len).min(cols.len()) {
        // Column m of the window block, pivot at the diagonal.
        let mut idx = vec![m];
        let mut x = vec![g[(m, m)]];
        for i in (m + 1)..s_len {
            let e = g[(i, m)];
            if e != 0.0 {
                idx.push(i);
                x.push(e);
            }
        }
        if idx.len() == 1 {
            continue;
        }
        let supp: Vec<u32> = idx.iter().map(|&i| i as u32).collect();
        let (refl, beta) = Reflector::from_column(supp, &x);
        ledger.add_flops(3 * refl.nnz() as u64);
        g[(idx[0], m)] = beta;
        for &i in &idx[1..] {
            g[(i, m)] = 0.0;
        }
        if refl.tau != 0.0 && m + 1 < cols.len() {
            refl.apply_left(&mut g, (m + 1)..cols.len(), false, ledger);
        }
        out.push(refl);
    }
    if out.is_empty() {
        return out;
    }
    for j in 0..cols.len() {
        for i in 0..s_len {
            work.set(window.start + i, cols.start + j, g[(i, j)]);
        }
    }
    out.into_iter()
        .map(|r| Reflector {
            rows: r.rows.iter().map(|&i| (window.start + i as usize) as u32).collect(),
            v: r.v,
            tau: r.tau,
        })
        .collect()
}

fn touch_band(
    region: &TiledRegion,
    ledger: &CostLedger,
    rows: &std::ops::Range<usize>,
    cols: &std::ops::Range<usize>,
    dirty: bool,
) {
    let bs = ledger.block_size();
    for rt in tiles(rows.len(), bs) {
        let rr = (rows.start + rt.start)..(rows.start + rt.end);
        for ct in tiles(cols.len(), bs) {
            let cc = (cols.start + ct.start)..(cols.start + ct.end);
            region.touch(ledger, &rr, &cc, bs, dirty);
        }
    }
}

/// Result of the SVD pipeline.
#[derive(Clone, Debug)]
pub struct SbrSvd {
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    pub u: Option<Matrix<f64>>,
    pub v: Option<Matrix<f64>>,
}

/// Full SVD pipeline: banded reduction, bidiagonal chase, singular values
/// through the Golub-Kahan tridiagonal embedding, and back-transformations.
pub fn sbr_svd(
    a: &Matrix<f64>,
    m_words: usize,
    want_vectors: bool,
    ledger: &CostLedger,
) -> Result<SbrSvd> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        let r = sbr_svd(&a.transpose(), m_words, want_vectors, ledger)?;
        return Ok(SbrSvd {
            sigma: r.sigma,
            u: r.v,
            v: r.u,
        });
    }
    if m > n {
        let f = crate::qr::factorize(a, crate::qr::FactorMode::Qr, ledger)?;
        let q = crate::qr::explicit_q(&f, ledger);
        let r = f.triangular().block(0..n, 0..n);
        let inner = sbr_svd(&r, m_words, want_vectors, ledger)?;
        let u = match inner.u {
            Some(ur) => Some(matmul(&q.block(0..m, 0..n), &ur, ledger)?),
            None => None,
        };
        return Ok(SbrSvd {
            sigma: inner.sigma,
            u,
            v: inner.v,
        });
    }
    if n == 0 {
        return Ok(SbrSvd {
            sigma: Vec::new(),
            u: None,
            v: None,
        });
    }
    if n == 1 {
        let s = a[(0, 0)].abs();
        let sign = if a[(0, 0)] < 0.0 { -1.0 } else { 1.0 };
        return Ok(SbrSvd {
            sigma: vec![s],
            u: want_vectors.then(|| Matrix::from_rows(&[&[sign]])),
            v: want_vectors.then(|| Matrix::identity(1)),
        });
    }

    let b = pipeline_bandwidth(n, m_words);
    let (band, u0, v0) = svd_to_band(a, b, want_vectors, ledger)?;
    let sched = plan_schedule(n, band.bandwidth(), m_words, want_vectors)?;
    let mut u_acc = u0;
    let mut v_acc = v0;
    let bidiag = match (u_acc.as_mut(), v_acc.as_mut()) {
        (Some(u), Some(v)) => band_to_bidiag(
            &band,
            &sched,
            SvdVectorUpdate::Staged {
                u,
                v,
                plan: UpdatePlan::for_memory(m_words),
            },
            ledger,
        )?,
        _ => band_to_bidiag(&band, &sched, SvdVectorUpdate::None, ledger)?,
    };

    // Singular values (and vectors) from the permuted embedding.
    let gk = bidiag.golub_kahan_tridiagonal();
    let (vals, zvecs) = tridiag_eig(&gk, want_vectors, ledger)?;
    let mut sigma: Vec<f64> = (0..n).map(|i| vals[2 * n - 1 - i].max(0.0)).collect();
    sigma.sort_by(|x, y| y.total_cmp(x));

    let (u, v) = match (zvecs, u_acc, v_acc) {
        (Some(z), Some(u_pipe), Some(v_pipe)) => {
            let s = 2f64.sqrt();
            let mut ub = Matrix::zeros(n, n);
            let mut vb = Matrix::zeros(n, n);
            for jcol in 0..n {
                let src = 2 * n - 1 - jcol;
                for i in 0..n {
                    vb[(i, jcol)] = z[(2 * i, src)] * s;
                    ub[(i, jcol)] = z[(2 * i + 1, src)] * s;
                }
            }
            let _pb = ledger.phase("svd_back_multiply");
            (
                Some(matmul(&u_pipe, &ub, ledger)?),
                Some(matmul(&v_pipe, &vb, ledger)?),
            )
        }
        _ => (None, None),
    };
    Ok(SbrSvd { sigma, u, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::jacobi_svd;
    use crate::scalar::Scalar;
    use crate::kernels::mul;
    use crate::random::seeded_rng;

    fn random_square(n: usize, seed: u64) -> Matrix<f64> {
        let mut rng = seeded_rng(seed);
        Matrix::from_fn(n, n, |_, _| f64::standard_normal(&mut rng))
    }

    fn assert_sigma_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{x} vs {y} (tol {tol:.2e})");
        }
    }

    #[test]
    fn already_banded_upper_triangular_unchanged() {
        let n = 10;
        let b = 2;
        let a = Matrix::from_fn(n, n, |i, j| {
            if j >= i && j - i <= b {
                1.0 + (i + 2 * j) as f64 / 7.0
            } else {
                0.0
            }
        });
        let (band, _, _) = svd_to_band(&a, b, false, &CostLedger::noop()).unwrap();
        assert!(band.to_dense().sub(&a).norm(Norm::Fro) < 1e-12);
    }

    #[test]
    fn svd_to_band_preserves_singular_values() {
        let n = 8;
        let b = 2;
        let a = random_square(n, 2);
        let (band, u, v) = svd_to_band(&a, b, true, &CostLedger::noop()).unwrap();
        let (sa, _, _) = jacobi_svd(&a).unwrap();
        let (sb, _, _) = jacobi_svd(&band.to_dense()).unwrap();
        assert_sigma_close(&sa, &sb, 1e-10 * a.norm(Norm::Fro));
        // U^T A V = S.
        let u = u.unwrap();
        let v = v.unwrap();
        let s = mul(&mul(&u.transpose(), &a), &v);
        assert!(s.sub(&band.to_dense()).norm(Norm::Fro) < 1e-11 * a.norm(Norm::Fro));
    }

    #[test]
    fn band_to_bidiag_preserves_singular_values() {
        let n = 24;
        let b = 4;
        let a = random_square(n, 5);
        let (band, _, _) = svd_to_band(&a, b, false, &CostLedger::noop()).unwrap();
        let sched = plan_schedule(n, b, 4096, false).unwrap();
        let bd = band_to_bidiag(&band, &sched, SvdVectorUpdate::None, &CostLedger::noop()).unwrap();
        let (sa, _, _) = jacobi_svd(&a).unwrap();
        let (sb, _, _) = jacobi_svd(&bd.to_dense()).unwrap();
        assert_sigma_close(&sa, &sb, 1e-9 * a.norm(Norm::Fro));
    }

    #[test]
    fn golub_kahan_interleaving() {
        let bd = Bidiagonal {
            diag: vec![3.0, 2.0],
            sup: vec![0.5],
        };
        let t = bd.golub_kahan_tridiagonal();
        assert_eq!(t.diag, vec![0.0; 4]);
        assert_eq!(t.off, vec![3.0, 0.5, 2.0]);
        // Eigenvalues are +- singular values of the bidiagonal.
        let (vals, _) = tridiag_eig(&t, false, &CostLedger::noop()).unwrap();
        let (s, _, _) = jacobi_svd(&bd.to_dense()).unwrap();
        assert!((vals[3] - s[0]).abs() < 1e-12);
        assert!((vals[2] - s[1]).abs() < 1e-12);
        assert!((vals[0] + s[0]).abs() < 1e-12);
    }

    #[test]
    fn sbr_svd_diagonal_positive() {
        let a = Matrix::diagonal(&[4.0, 2.5, 1.0]);
        let r = sbr_svd(&a, 4096, false, &CostLedger::noop()).unwrap();
        assert_sigma_close(&r.sigma, &[4.0, 2.5, 1.0], 1e-10);
    }

    #[test]
    fn sbr_svd_constructed_with_vectors() {
        let n = 48;
        let ledger = CostLedger::noop();
        let u0: Matrix<f64> = crate::random::haar_orthogonal(n, 11, &ledger);
        let v0: Matrix<f64> = crate::random::haar_orthogonal(n, 12, &ledger);
        let sig: Vec<f64> = (0..n).map(|i| 1.0 + (n - i) as f64 / 4.0).collect();
        let a = mul(&mul(&u0, &Matrix::diagonal(&sig)), &v0.transpose());
        let r = sbr_svd(&a, 1024, true, &ledger).unwrap();
        let scale = a.norm(Norm::Fro);
        let mut want = sig.clone();
        want.sort_by(|x, y| y.total_cmp(x));
        assert_sigma_close(&r.sigma, &want, 1e-9 * scale);
        let (u, v) = (r.u.unwrap(), r.v.unwrap());
        let recon = mul(&mul(&u, &Matrix::diagonal(&r.sigma)), &v.transpose());
        let err = recon.sub(&a).norm(Norm::Fro) / scale;
        assert!(err < 1e-8, "reconstruction error {err:.3e}");
        assert!(crate::qr::orthogonality_defect(&u) < 1e-9);
        assert!(crate::qr::orthogonality_defect(&v) < 1e-9);
    }

    #[test]
    fn sbr_svd_rectangular() {
        let a = Matrix::from_fn(10, 6, |i, j| ((i * 5 + j * 3) % 7) as f64 - 3.0);
        let r = sbr_svd(&a, 1024, true, &CostLedger::noop()).unwrap();
        let (s, _, _) = jacobi_svd(&a).unwrap();
        assert_sigma_close(&r.sigma, &s, 1e-10 * a.norm(Norm::Fro));
        let recon = mul(
            &mul(r.u.as_ref().unwrap(), &Matrix::diagonal(&r.sigma)),
            &r.v.as_ref().unwrap().transpose(),
        );
        assert!(recon.sub(&a).norm(Norm::Fro) < 1e-9 * a.norm(Norm::Fro));
    }
}
