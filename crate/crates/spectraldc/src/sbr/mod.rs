//! Successive band reduction: dense symmetric -> banded -> tridiagonal
//! (and the analogous dense -> banded upper triangular -> bidiagonal SVD
//! pipeline), with eigenvector accumulation by grouped Householder replay
//! and a schedule planner balancing arithmetic against memory traffic.

mod band_reduce;
mod bidiag;
mod tridiag;

pub use band_reduce::{
    band_to_tridiag, direct_tridiagonalize, sym_to_band, update_vectors, StagedGroup, UpdatePlan,
    VectorUpdate,
};
pub use bidiag::{band_to_bidiag, sbr_svd, svd_to_band, Bidiagonal, SbrSvd, UpperBand};
pub use tridiag::{sturm_count, tridiag_eig, Tridiagonal};

use crate::error::{Error, Result};
use crate::kernels::matmul;
use crate::ledger::CostLedger;
use crate::matrix::{Matrix, Norm};
use crate::scalar::EPS;

/// Bandwidth fraction of `sqrt(M)` for the dense-to-banded step
/// (must stay below 1/2 so four blocks fit in fast memory).
pub const ALPHA1: f64 = 0.45;
/// Fraction of `M/n` for the intermediate bandwidth of the two-sweep
/// schedule (must stay below 1/4 so the band fits in a quarter of memory).
pub const ALPHA2: f64 = 0.2;

/// Symmetric banded matrix, packed by columns: column `j` stores the
/// diagonal entry and up to `b` subdiagonals (the superdiagonals are the
/// mirror image). Entries beyond the bandwidth are structurally absent.
#[derive(Clone, Debug)]
pub struct BandedSym {
    n: usize,
    b: usize,
    cols: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, b: usize) -> Self {
        BandedSym {
            n,
            b,
            cols: vec![0.0; n * (b + 1)],
        }
    }

    /// Packs a dense symmetric matrix; entries outside the band must be
    /// zero within `64 n eps ||A||`.
    pub fn from_dense(a: &Matrix<f64>, b: usize) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        if b >= n.max(1) {
            return Err(Error::BandOutOfRange { b, n });
        }
        let tol = 64.0 * n as f64 * EPS * a.norm(Norm::Fro).max(1e-300);
        let mut out = BandedSym::zeros(n, b);
        for j in 0..n {
            for i in j..n {
                let v = a[(i, j)];
                if i - j <= b {
                    out.set(i, j, v);
                } else if v.abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i},{j}) = {v:.3e} lies outside bandwidth {b}"
                    )));
                }
            }
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Half-bandwidth (number of sub/superdiagonals).
    pub fn bandwidth(&self) -> usize {
        self.b
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.b {
            0.0
        } else {
            self.cols[lo * (self.b + 1) + (hi - lo)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(hi - lo <= self.b);
        self.cols[lo * (self.b + 1) + (hi - lo)] = v;
    }

    pub fn to_dense(&self) -> Matrix<f64> {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Serialize in the packed band format (header + band columns).
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        crate::io::write_band_packed(self.n, self.b, |i, j| self.get(i, j))
    }

    pub fn from_packed_bytes(bytes: &[u8]) -> Result<Self> {
        let mut entries = Vec::new();
        let (n, b) = crate::io::read_band_packed(bytes, |i, j, v| entries.push((i, j, v)))?;
        let mut out = BandedSym::zeros(n, b);
        for (i, j, v) in entries {
            out.set(i, j, v);
        }
        Ok(out)
    }
}

/// One sweep of the reduction schedule: from bandwidth `b`, remove the
/// outermost `d` diagonals, `c` columns at a time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sweep {
    pub b: usize,
    pub c: usize,
    pub d: usize,
}

/// Band reduction schedule `{(b_i, c_i, d_i)}` with `b_{i+1} = b_i - d_i`
/// and `sum d_i = b_1 - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    sweeps: Vec<Sweep>,
}

impl Schedule {
    pub fn new(sweeps: Vec<Sweep>) -> Result<Self> {
        let s = Schedule { sweeps };
        s.validate()?;
        Ok(s)
    }

    pub fn sweeps(&self) -> &[Sweep] {
        &self.sweeps
    }

    pub fn is_empty(&self) -> bool {
        self.sweeps.is_empty()
    }

    /// Initial bandwidth, or 1 for the empty schedule.
    pub fn b1(&self) -> usize {
        self.sweeps.first().map_or(1, |s| s.b)
    }

    pub fn validate(&self) -> Result<()> {
        let mut expect_b = None;
        for (idx, sw) in self.sweeps.iter().enumerate() {
            if sw.c == 0 || sw.d == 0 {
                return Err(Error::InvalidArgument(format!(
                    "sweep {idx} has zero c or d"
                )));
            }
            if sw.c + sw.d > sw.b {
                return Err(Error::InfeasibleSchedule {
                    sweep: idx,
                    cd: sw.c + sw.d,
                    b: sw.b,
                });
            }
            if let Some(e) = expect_b {
                if sw.b != e {
                    return Err(Error::InvalidArgument(format!(
                        "sweep {idx} starts at b = {}, expected {e}",
                        sw.b
                    )));
                }
            }
            expect_b = Some(sw.b - sw.d);
        }
        if let Some(last) = expect_b {
            if last != 1 {
                return Err(Error::InvalidArgument(format!(
                    "schedule ends at bandwidth {last}, not tridiagonal"
                )));
            }
        }
        Ok(())
    }
}

/// Unified schedule rule: `b_2 = max(alpha2 * M / n, 1)` (clamped below
/// the input bandwidth), one sweep taking `d_1 = b - b_2` columns `c_1 =
/// b_2` at a time, then, if `b_2 > 1`, a second sweep `d_2 = b_2 - 1,
/// c_2 = 1`. For `n` large relative to `M` this degenerates to the single
/// sweep `d_1 = b - 1, c_1 = 1`.
pub fn plan_schedule(n: usize, b: usize, m_words: usize, _want_vectors: bool) -> Result<Schedule> {
    if b == 0 {
        return Err(Error::BandOutOfRange { b, n });
    }
    if m_words < 4 {
        return Err(Error::InvalidArgument("fast memory must hold at least 4 words".into()));
    }
    if b == 1 {
        return Ok(Schedule { sweeps: Vec::new() });
    }
    let raw_b2 = ((ALPHA2 * m_words as f64 / n.max(1) as f64).floor() as usize).max(1);
    let b2 = raw_b2.min(b - 1);
    let mut sweeps = vec![Sweep {
        b,
        c: b2,
        d: b - b2,
    }];
    if b2 > 1 {
        sweeps.push(Sweep {
            b: b2,
            c: 1,
            d: b2 - 1,
        });
    }
    let s = Schedule { sweeps };
    s.validate()?;
    Ok(s)
}

/// Bandwidth used by the SBR drivers for a given fast-memory size.
pub fn pipeline_bandwidth(n: usize, m_words: usize) -> usize {
    (((ALPHA1 * (m_words as f64).sqrt()).floor() as usize).max(1)).min(n.saturating_sub(1).max(1))
}

/// Assembled symmetric eigendecomposition from the SBR pipeline.
#[derive(Clone, Debug)]
pub struct SbrEig {
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Orthogonal eigenvector matrix when requested.
    pub vectors: Option<Matrix<f64>>,
}

/// Full symmetric eigensolver: dense-to-banded reduction, banded-to-
/// tridiagonal bulge chasing under the planned schedule, Sturm bisection
/// (plus inverse iteration when vectors are wanted), and the final
/// back-multiplication of the accumulated transforms.
pub fn sbr_sym_eig(
    a: &Matrix<f64>,
    m_words: usize,
    want_vectors: bool,
    ledger: &CostLedger,
) -> Result<SbrEig> {
    let n = a.rows();
    if n == 0 {
        return Ok(SbrEig {
            values: Vec::new(),
            vectors: want_vectors.then(|| Matrix::zeros(0, 0)),
        });
    }
    if n == 1 {
        return Ok(SbrEig {
            values: vec![a[(0, 0)]],
            vectors: want_vectors.then(|| Matrix::identity(1)),
        });
    }
    let b = pipeline_bandwidth(n, m_words);
    let (banded, q) = sym_to_band(a, b, want_vectors, ledger)?;
    let schedule = plan_schedule(n, banded.bandwidth(), m_words, want_vectors)?;
    let mut q = q;
    let tri = {
        let update = match q.as_mut() {
            Some(qm) => VectorUpdate::Staged {
                q: qm,
                plan: UpdatePlan::for_memory(m_words),
            },
            None => VectorUpdate::None,
        };
        band_to_tridiag(&banded, &schedule, update, ledger)?
    };
    let (values, tvecs) = tridiag_eig(&tri, want_vectors, ledger)?;
    let vectors = match (q, tvecs) {
        (Some(qu), Some(vt)) => {
            let _p = ledger.phase("back_multiply");
            Some(matmul(&qu, &vt, ledger)?)
        }
        _ => None,
    };
    Ok(SbrEig { values, vectors })
}
