//! High-level divide-and-conquer strategies: random splitting lines in a
//! bounding disk (nonsymmetric), random points in a bounding interval
//! (symmetric), and ladders of squared radii (pencils), each driving the
//! basic splitting step and recursing on the diagonal blocks.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::matmul;
use crate::ledger::CostLedger;
use crate::matrix::{gershgorin_interval, gershgorin_radius, Matrix, Norm};
use crate::qr::{explicit_q, factorize, FactorMode};
use crate::random::{derive_seed, seeded_rng};
use crate::scalar::{Scalar, EPS};

use super::small_eig::{small_eig, small_sym_eig};
use super::step::{project_split, rgnep_step, StepOutcome};
use super::tree::{disk_cut_polygon, Enclosure, EnclosureKind, HalfPlane, SpectralNode, SpectralTree};
use super::StrategyConfig;

/// Hard cap on split attempts per recursion node (no-split progress resets
/// the consecutive-failure counter, so a separate total cap bounds the loop).
const MAX_DRAWS_PER_NODE: usize = 200;

/// Splitting line `Re(e^{-i theta} (z - center)) = offset`.
#[derive(Clone, Copy, Debug)]
pub struct SplitLine {
    pub theta: f64,
    pub offset: f64,
}

impl SplitLine {
    /// Draw a line through the disk of radius `radius`: uniform angle,
    /// uniform offset in `[-radius/2, radius/2]`.
    pub fn sample<R: Rng>(rng: &mut R, radius: f64) -> Self {
        SplitLine {
            theta: rng.gen::<f64>() * std::f64::consts::TAU,
            offset: (rng.gen::<f64>() - 0.5) * radius,
        }
    }

    /// Signed coordinate of `z` along the line normal (distance is the
    /// absolute value).
    pub fn signed_coord(&self, center: Complex64, z: Complex64) -> f64 {
        (Complex64::from_polar(1.0, -self.theta) * (z - center)).re - self.offset
    }

    pub fn distance_to(&self, center: Complex64, z: Complex64) -> f64 {
        self.signed_coord(center, z).abs()
    }
}

/// Divide-and-conquer over the complex plane for a general square matrix.
///
/// Each node bounds its spectrum by a Gershgorin disk, draws random lines
/// (a uniform angle, then a uniform offset over the middle half of the
/// diameter), maps the half-plane split to the unit circle through the
/// pencil `(A - (a-1)I, A - (a+1)I)` pre-rotated by `e^{-i theta}`, and
/// splits with the rank-revealing machinery. Lines that separate nothing
/// still shrink the region (two perpendicular cuts contract the disk by
/// `sin(5 pi / 12)`); lines whose squaring iteration stalls count as
/// failures, and after `max_failed_splits` consecutive failures the node
/// closes as a convex-polygon enclosure.
pub fn nonsym_strategy(
    a: &Matrix<Complex64>,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
) -> Result<SpectralTree<Complex64>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let root = solve_nonsym(a.clone(), cfg, ledger, 1)?;
    Ok(SpectralTree {
        n: a.rows(),
        root,
    })
}

fn solve_nonsym(
    a: Matrix<Complex64>,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
    path: u64,
) -> Result<SpectralNode<Complex64>> {
    let n = a.rows();
    if n <= cfg.base_case_size {
        return Ok(SpectralNode::Eigenvalues {
            values: small_eig(&a),
            vectors: None,
        });
    }
    let scale = a.norm(Norm::One).max(1e-300);
    let mut center = a.trace() / Complex64::new(n as f64, 0.0);
    let shifted = |c: Complex64| {
        let mut s = a.clone();
        for i in 0..n {
            s[(i, i)] -= c;
        }
        s
    };
    let mut radius = gershgorin_radius(&shifted(center));
    let mut rng = seeded_rng(derive_seed(cfg.rng_seed, path));
    let mut cuts: Vec<HalfPlane> = Vec::new();
    let mut pending: Option<SplitLine> = None;
    let mut consecutive_fails = 0usize;

    for attempt in 0..MAX_DRAWS_PER_NODE {
        if radius <= 1e3 * EPS * scale {
            // Spectrum confined to a point at working precision.
            return Ok(SpectralNode::Enclosure(Enclosure {
                kind: EnclosureKind::Disk { center, radius },
                eig_count: n,
            }));
        }
        let line = match pending {
            Some(prev) => SplitLine {
                theta: prev.theta + std::f64::consts::FRAC_PI_2,
                offset: (rng.gen::<f64>() - 0.5) * radius,
            },
            None => SplitLine::sample(&mut rng, radius),
        };

        // Map the line to the unit circle: rotate so the line is vertical,
        // then (A', I) -> (A' - (a-1) I, A' - (a+1) I).
        let rot = Complex64::from_polar(1.0, -line.theta);
        let d = shifted(center).map(|z| rot * z);
        let mut a_tilde = d.clone();
        let mut b_tilde = d;
        for i in 0..n {
            a_tilde[(i, i)] -= Complex64::new(line.offset - 1.0, 0.0);
            b_tilde[(i, i)] -= Complex64::new(line.offset + 1.0, 0.0);
        }
        let mut attempt_cfg = cfg.clone();
        attempt_cfg.rng_seed = derive_seed(cfg.rng_seed, path ^ (attempt as u64) << 32);
        match project_split(&a, &a_tilde, &b_tilde, false, &attempt_cfg, ledger)? {
            StepOutcome::NoConvergence(_) => {
                consecutive_fails += 1;
                if consecutive_fails >= cfg.max_failed_splits {
                    return Ok(close_nonsym_node(center, radius, &cuts, n));
                }
            }
            StepOutcome::Split(s) if s.projector_rank == 0 || s.projector_rank == n => {
                consecutive_fails = 0;
                // All eigenvalues on one side: record the half-plane.
                let all_right = s.projector_rank == n;
                let normal_dir = Complex64::from_polar(1.0, line.theta);
                let anchor = center + normal_dir * line.offset;
                let hp = HalfPlane {
                    normal: if all_right { normal_dir } else { -normal_dir },
                    anchor,
                };
                cuts.push(hp);
                match pending.take() {
                    None => pending = Some(line),
                    Some(_) => {
                        // Second perpendicular no-split cut: recenter into
                        // the circumscribed disk of the remaining lens.
                        let len = cuts.len();
                        let (c2, r2) =
                            circumscribe_disk(center, radius, &cuts[len - 2], &cuts[len - 1]);
                        if r2 < radius {
                            center = c2;
                            radius = r2;
                        }
                    }
                }
            }
            StepOutcome::Split(s) => {
                if s.offdiag_metric <= cfg.split_accept_tol {
                    let k = s.split_index;
                    let left = solve_nonsym(s.a_hat.block(0..k, 0..k), cfg, ledger, path * 2)?;
                    let right =
                        solve_nonsym(s.a_hat.block(k..n, k..n), cfg, ledger, path * 2 + 1)?;
                    return Ok(SpectralNode::Split {
                        transform: s.q,
                        split_index: k,
                        offdiag_metric: s.offdiag_metric,
                        left: Box::new(left),
                        right: Box::new(right),
                    });
                }
                consecutive_fails += 1;
                if consecutive_fails >= cfg.max_failed_splits {
                    return Ok(close_nonsym_node(center, radius, &cuts, n));
                }
            }
        }
    }
    Ok(close_nonsym_node(center, radius, &cuts, n))
}

fn close_nonsym_node(
    center: Complex64,
    radius: f64,
    cuts: &[HalfPlane],
    n: usize,
) -> SpectralNode<Complex64> {
    let poly = disk_cut_polygon(center, radius, cuts);
    let kind = if poly.len() >= 3 {
        EnclosureKind::ConvexPolygon(poly)
    } else {
        EnclosureKind::Disk { center, radius }
    };
    SpectralNode::Enclosure(Enclosure {
        kind,
        eig_count: n,
    })
}

/// Smallest disk (computed soundly, not optimally) containing the disk
/// `D(center, radius)` cut by two perpendicular half-planes whose offsets
/// lie within half the radius. Worst case is `sin(5 pi / 12) ~ 0.966` of
/// the old radius.
fn circumscribe_disk(
    center: Complex64,
    radius: f64,
    h1: &HalfPlane,
    h2: &HalfPlane,
) -> (Complex64, f64) {
    // Local frame: X along h1's inward normal, Y along h2's.
    let u1 = h1.normal;
    let u2 = h2.normal;
    let a1 = (u1.conj() * (h1.anchor - center)).re;
    let a2 = (u2.conj() * (h2.anchor - center)).re;
    if a1.abs() > radius || a2.abs() > radius {
        return (center, radius);
    }
    let p1 = (a1, (radius * radius - a1 * a1).sqrt());
    let p2 = ((radius * radius - a2 * a2).sqrt(), a2);
    let m = ((p1.0 + p2.0) * 0.5, (p1.1 + p2.1) * 0.5);
    let dist = |p: (f64, f64)| ((p.0 - m.0).powi(2) + (p.1 - m.1).powi(2)).sqrt();
    let mut r_new = dist(p1).max(dist(p2)).max(dist((a1, a2)));
    // Farthest point of the arc from m, if the antipodal direction lies
    // inside the kept quadrant.
    let mn = (m.0 * m.0 + m.1 * m.1).sqrt();
    if mn > 0.0 {
        let far = (-m.0 / mn * radius, -m.1 / mn * radius);
        if far.0 >= a1 && far.1 >= a2 {
            r_new = r_new.max(radius + mn);
        }
    }
    let c_new = center + u1 * m.0 + u2 * m.1;
    (c_new, r_new)
}

/// Symmetric eigenvalue divide-and-conquer over a real interval.
///
/// A Gershgorin interval bounds the spectrum; a point `x` drawn uniformly
/// from the middle half maps the vertical line `Re = x` to the unit circle
/// through `(A - (x-1) I, A - (x+1) I)`. No-split outcomes shrink the
/// interval; tightly clustered spectra (interval width below
/// `split_accept_tol * ||A||`) close immediately as interval enclosures,
/// which is sound because an eigenvalue spread of `w` forces off-diagonal
/// blocks of norm at most `w / 2`.
pub fn sym_strategy(
    a: &Matrix<f64>,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
) -> Result<SpectralTree<f64>> {
    check_symmetric(a)?;
    let root = solve_sym(a.clone(), cfg, ledger, 1)?;
    Ok(SpectralTree {
        n: a.rows(),
        root,
    })
}

fn check_symmetric(a: &Matrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let dev = a.symmetry_deviation();
    let scale = a.norm(Norm::Fro).max(1e-300);
    if dev > 64.0 * a.rows() as f64 * EPS * scale {
        return Err(Error::NotSymmetric { deviation: dev });
    }
    Ok(())
}

fn solve_sym(
    a: Matrix<f64>,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
    path: u64,
) -> Result<SpectralNode<f64>> {
    let n = a.rows();
    if n <= cfg.base_case_size {
        let (vals, vecs) = small_sym_eig(&a);
        return Ok(SpectralNode::Eigenvalues {
            values: vals.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            vectors: Some(vecs),
        });
    }
    let scale = a.norm(Norm::One).max(1e-300);
    let (mut lo, mut hi) = gershgorin_interval(&a);
    let mut rng = seeded_rng(derive_seed(cfg.rng_seed, path.wrapping_mul(3)));
    let mut consecutive_fails = 0usize;

    for attempt in 0..MAX_DRAWS_PER_NODE {
        let width = hi - lo;
        if width <= cfg.split_accept_tol * scale {
            // Cluster shortcut: the block is already nearly diagonal.
            return Ok(SpectralNode::Enclosure(Enclosure {
                kind: EnclosureKind::Interval { lo, hi },
                eig_count: n,
            }));
        }
        // Uniform over the middle half of the interval.
        let x = lo + width * (0.25 + 0.5 * rng.gen::<f64>());
        let mut a_tilde = a.clone();
        let mut b_tilde = a.clone();
        for i in 0..n {
            a_tilde[(i, i)] -= x - 1.0;
            b_tilde[(i, i)] -= x + 1.0;
        }
        let mut attempt_cfg = cfg.clone();
        attempt_cfg.rng_seed = derive_seed(cfg.rng_seed, path ^ ((attempt as u64) << 32) ^ 0x51);
        match project_split(&a, &a_tilde, &b_tilde, true, &attempt_cfg, ledger)? {
            StepOutcome::NoConvergence(_) => {
                consecutive_fails += 1;
                if consecutive_fails >= cfg.max_failed_splits {
                    return Ok(SpectralNode::Enclosure(Enclosure {
                        kind: EnclosureKind::Interval { lo, hi },
                        eig_count: n,
                    }));
                }
            }
            StepOutcome::Split(s) if s.projector_rank == 0 => {
                // Everything left of x.
                consecutive_fails = 0;
                hi = hi.min(x);
            }
            StepOutcome::Split(s) if s.projector_rank == n => {
                consecutive_fails = 0;
                lo = lo.max(x);
            }
            StepOutcome::Split(s) => {
                if s.offdiag_metric <= cfg.split_accept_tol {
                    let k = s.split_index;
                    let left_block = s.a_hat.block(0..k, 0..k);
                    let right_block = s.a_hat.block(k..n, k..n);
                    let left = solve_sym(left_block, cfg, ledger, path * 2)?;
                    let right = solve_sym(right_block, cfg, ledger, path * 2 + 1)?;
                    return Ok(SpectralNode::Split {
                        transform: s.q,
                        split_index: k,
                        offdiag_metric: s.offdiag_metric,
                        left: Box::new(left),
                        right: Box::new(right),
                    });
                }
                consecutive_fails += 1;
                if consecutive_fails >= cfg.max_failed_splits {
                    return Ok(SpectralNode::Enclosure(Enclosure {
                        kind: EnclosureKind::Interval { lo, hi },
                        eig_count: n,
                    }));
                }
            }
        }
    }
    Ok(SpectralNode::Enclosure(Enclosure {
        kind: EnclosureKind::Interval { lo, hi },
        eig_count: n,
    }))
}

/// Assembled symmetric eigendecomposition from the divide-and-conquer tree.
#[derive(Clone, Debug)]
pub struct SymEig {
    /// Eigenvalues, ascending. Enclosure leaves contribute their interval
    /// midpoint with multiplicity.
    pub values: Vec<f64>,
    /// Orthogonal eigenvector matrix; `None` when any leaf is an enclosure.
    pub vectors: Option<Matrix<f64>>,
    pub tree: SpectralTree<f64>,
}

/// Run [`sym_strategy`] and assemble eigenvalues (and eigenvectors when
/// every leaf resolved).
pub fn sym_eig_via_dc(
    a: &Matrix<f64>,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
) -> Result<SymEig> {
    let tree = sym_strategy(a, cfg, ledger)?;
    let (vals, vecs) = assemble_sym(&tree.root, ledger)?;
    // Sort ascending, permuting vector columns alongside.
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let values: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let vectors = vecs.map(|v| Matrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, order[j])]));
    Ok(SymEig {
        values,
        vectors,
        tree,
    })
}

fn assemble_sym(
    node: &SpectralNode<f64>,
    ledger: &CostLedger,
) -> Result<(Vec<f64>, Option<Matrix<f64>>)> {
    match node {
        SpectralNode::Split {
            transform,
            split_index,
            left,
            right,
            ..
        } => {
            let (vl, xl) = assemble_sym(left, ledger)?;
            let (vr, xr) = assemble_sym(right, ledger)?;
            let mut values = vl;
            values.extend_from_slice(&vr);
            let n = transform.rows();
            let k = *split_index;
            let vectors = match (xl, xr) {
                (Some(xl), Some(xr)) => {
                    let mut block = Matrix::zeros(n, n);
                    block.set_block(0, 0, &xl);
                    block.set_block(k, k, &xr);
                    Some(matmul(transform, &block, ledger)?)
                }
                _ => None,
            };
            Ok((values, vectors))
        }
        SpectralNode::Eigenvalues { values, vectors } => Ok((
            values.iter().map(|z| z.re).collect(),
            vectors.clone(),
        )),
        SpectralNode::Enclosure(e) => {
            let mid = match e.kind {
                EnclosureKind::Interval { lo, hi } => 0.5 * (lo + hi),
                EnclosureKind::Disk { center, .. } => center.re,
                EnclosureKind::ConvexPolygon(_) => {
                    return Err(Error::InvalidArgument(
                        "polygon enclosure in a symmetric tree".into(),
                    ))
                }
            };
            Ok((vec![mid; e.eig_count], None))
        }
    }
}

/// Singular value decomposition by divide-and-conquer on the Hermitian
/// embedding `H = [[0, A], [A^T, 0]]`, whose eigenvalues are `±sigma` and
/// whose eigenvectors stack the left/right singular vectors over `sqrt(2)`.
#[derive(Clone, Debug)]
pub struct RsvdResult {
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    pub u: Option<Matrix<f64>>,
    pub v: Option<Matrix<f64>>,
    /// The divide-and-conquer tree of the embedding.
    pub tree: SpectralTree<f64>,
}

pub fn rsvd_drive(
    a: &Matrix<f64>,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
) -> Result<RsvdResult> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        let r = rsvd_drive(&a.transpose(), cfg, ledger)?;
        return Ok(RsvdResult {
            sigma: r.sigma,
            u: r.v,
            v: r.u,
            tree: r.tree,
        });
    }
    if m > n {
        // Rectangular: QR first, then the square driver on R.
        let f = factorize(a, FactorMode::Qr, ledger)?;
        let q = explicit_q(&f, ledger);
        let r = f.triangular().block(0..n, 0..n);
        let inner = rsvd_drive(&r, cfg, ledger)?;
        let u = match inner.u {
            Some(ur) => Some(matmul(&q.block(0..m, 0..n), &ur, ledger)?),
            None => None,
        };
        return Ok(RsvdResult {
            sigma: inner.sigma,
            u,
            v: inner.v,
            tree: inner.tree,
        });
    }

    let mut h = Matrix::zeros(2 * n, 2 * n);
    h.set_block(0, n, a);
    h.set_block(n, 0, &a.transpose());
    let eig = sym_eig_via_dc(&h, cfg, ledger)?;

    // Pair +sigma with the top of the spectrum.
    let mut sigma: Vec<f64> = (0..n)
        .map(|i| eig.values[2 * n - 1 - i].max(0.0))
        .collect();
    sigma.sort_by(|x, y| y.total_cmp(x));
    let (u, v) = match &eig.vectors {
        Some(vecs) => {
            let mut u = Matrix::zeros(n, n);
            let mut v = Matrix::zeros(n, n);
            // Columns of the embedding vectors are ordered ascending by
            // eigenvalue; the positive half sits at the tail.
            let s = 2f64.sqrt();
            for j in 0..n {
                let col = 2 * n - 1 - j;
                for i in 0..n {
                    u[(i, j)] = vecs[(i, col)] * s;
                    v[(i, j)] = vecs[(n + i, col)] * s;
                }
            }
            (Some(u), Some(v))
        }
        None => (None, None),
    };
    Ok(RsvdResult {
        sigma,
        u,
        v,
        tree: eig.tree,
    })
}

/// Classification of a generalized eigenvalue reported by the pencil
/// strategy (infinite eigenvalues arise from a singular `B`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PencilEigenvalue {
    Finite(Complex64),
    Infinite,
}

/// Outcome of the pencil strategy: the split tree (leaf eigenvalues in
/// original coordinates, `Complex64::INFINITY` marking infinite ones) and
/// a near-singularity verdict.
#[derive(Clone, Debug)]
pub struct PencilReport {
    pub tree: SpectralTree<Complex64>,
    /// Set when repeated failures at every tried circle suggest the pencil
    /// is close to singular; the tree then contains unbounded enclosures.
    pub near_singular: bool,
}

impl PencilReport {
    pub fn eigenvalues(&self) -> Vec<PencilEigenvalue> {
        self.tree
            .eigenvalues()
            .into_iter()
            .map(|z| {
                if z.re.is_infinite() || z.im.is_infinite() {
                    PencilEigenvalue::Infinite
                } else {
                    PencilEigenvalue::Finite(z)
                }
            })
            .collect()
    }
}

/// Divide-and-conquer for a square pencil `(A, B)` along circles.
///
/// Tries the unit circle; if everything is inside, descends through radii
/// `2^{-2^k}` (squaring down), if everything is outside, ascends through
/// `2^{2^k}` until the exponent range is exhausted, then swaps `A` and `B`
/// to work with reciprocal eigenvalues. A successful split at radius `r`
/// recurses on the inside block directly and on the outside block as the
/// swapped pencil (eigenvalues inside radius `1/r`). Repeated failures at
/// every tried circle yield a near-singular report.
pub fn pencil_strategy(
    a: &Matrix<Complex64>,
    b: &Matrix<Complex64>,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
) -> Result<PencilReport> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::dims("pencil_strategy", (a.rows(), a.cols()), (b.rows(), b.cols())));
    }
    let mut near_singular = false;
    let root = solve_pencil(
        a.clone(),
        b.clone(),
        cfg,
        ledger,
        1,
        1.0,
        &mut near_singular,
    )?;
    Ok(PencilReport {
        tree: SpectralTree {
            n: a.rows(),
            root,
        },
        near_singular,
    })
}

fn reciprocal_node(node: SpectralNode<Complex64>) -> SpectralNode<Complex64> {
    match node {
        SpectralNode::Split {
            transform,
            split_index,
            offdiag_metric,
            left,
            right,
        } => SpectralNode::Split {
            transform,
            split_index,
            offdiag_metric,
            left: Box::new(reciprocal_node(*left)),
            right: Box::new(reciprocal_node(*right)),
        },
        SpectralNode::Eigenvalues { values, vectors } => SpectralNode::Eigenvalues {
            values: values
                .into_iter()
                .map(|z| {
                    if z.norm() == 0.0 {
                        Complex64::new(f64::INFINITY, 0.0)
                    } else {
                        z.inv()
                    }
                })
                .collect(),
            vectors,
        },
        SpectralNode::Enclosure(e) => {
            let kind = match e.kind {
                EnclosureKind::Disk { center, radius } if center.norm() > radius => {
                    // Inversion image of a disk not containing the origin.
                    let d = center.norm_sqr() - radius * radius;
                    EnclosureKind::Disk {
                        center: center.conj() / d,
                        radius: radius / d,
                    }
                }
                // The image is unbounded; keep an uninformative cover.
                _ => EnclosureKind::Disk {
                    center: Complex64::new(0.0, 0.0),
                    radius: f64::INFINITY,
                },
            };
            SpectralNode::Enclosure(Enclosure {
                kind,
                eig_count: e.eig_count,
            })
        }
    }
}

fn solve_pencil(
    a: Matrix<Complex64>,
    b: Matrix<Complex64>,
    cfg: &StrategyConfig,
    ledger: &CostLedger,
    path: u64,
    start_scale: f64,
    near_singular: &mut bool,
) -> Result<SpectralNode<Complex64>> {
    let n = a.rows();
    if n <= cfg.base_case_size {
        match small_pencil_eig(&a, &b) {
            Ok(values) => {
                return Ok(SpectralNode::Eigenvalues {
                    values,
                    vectors: None,
                })
            }
            Err(_) => {
                *near_singular = true;
                return Ok(SpectralNode::Enclosure(Enclosure {
                    kind: EnclosureKind::Disk {
                        center: Complex64::new(0.0, 0.0),
                        radius: f64::INFINITY,
                    },
                    eig_count: n,
                }));
            }
        }
    }

    let mut rng = seeded_rng(derive_seed(cfg.rng_seed, path.wrapping_mul(7)));
    let mut scale = start_scale;
    let mut consecutive_fails = 0usize;

    for attempt in 0..MAX_DRAWS_PER_NODE {
        if !scale.is_normal() {
            // Ran out of exponent bits while laddering down: every
            // eigenvalue sits inside the smallest representable circle.
            return Ok(SpectralNode::Eigenvalues {
                values: vec![Complex64::new(0.0, 0.0); n],
                vectors: None,
            });
        }
        let b_scaled = b.scale(scale);
        let mut attempt_cfg = cfg.clone();
        attempt_cfg.rng_seed = derive_seed(cfg.rng_seed, path ^ ((attempt as u64) << 32) ^ 0x9e);
        match rgnep_step(&a, &b_scaled, &attempt_cfg, ledger)? {
            StepOutcome::NoConvergence(_) => {
                consecutive_fails += 1;
                if consecutive_fails >= cfg.max_failed_splits {
                    *near_singular = true;
                    return Ok(SpectralNode::Enclosure(Enclosure {
                        kind: EnclosureKind::Disk {
                            center: Complex64::new(0.0, 0.0),
                            radius: f64::INFINITY,
                        },
                        eig_count: n,
                    }));
                }
                // Retry on a jittered circle; eigenvalues may sit on this one.
                let jitter = 2f64.powf(rng.gen::<f64>() * 0.5 - 0.25);
                scale *= jitter;
            }
            StepOutcome::Split(s) if s.projector_rank == 0 => {
                consecutive_fails = 0;
                scale = if scale >= 1.0 { 0.5 } else { scale * scale };
            }
            StepOutcome::Split(s) if s.projector_rank == n => {
                consecutive_fails = 0;
                if scale <= 1.0 {
                    scale = 2.0;
                } else {
                    let next = scale * scale;
                    if next.is_finite() {
                        scale = next;
                    } else {
                        // All eigenvalues outside every representable
                        // circle: swap the pencil and work with reciprocals.
                        let sub = solve_pencil(
                            b.clone(),
                            a.clone(),
                            cfg,
                            ledger,
                            path.wrapping_mul(2) ^ 0x5,
                            1.0,
                            near_singular,
                        )?;
                        return Ok(reciprocal_node(sub));
                    }
                }
            }
            StepOutcome::Split(s) => {
                if s.offdiag_metric > cfg.split_accept_tol {
                    consecutive_fails += 1;
                    if consecutive_fails >= cfg.max_failed_splits {
                        *near_singular = true;
                        return Ok(SpectralNode::Enclosure(Enclosure {
                            kind: EnclosureKind::Disk {
                                center: Complex64::new(0.0, 0.0),
                                radius: f64::INFINITY,
                            },
                            eig_count: n,
                        }));
                    }
                    let jitter = 2f64.powf(rng.gen::<f64>() * 0.5 - 0.25);
                    scale *= jitter;
                    continue;
                }
                let k = s.split_index;
                // Leading block: eigenvalues outside the circle, continued
                // as the swapped pencil inside radius 1/scale. Note B was
                // scaled, so undo the scale on the stored blocks.
                let a11 = s.a_hat.block(0..k, 0..k);
                let b11 = s.b_hat.block(0..k, 0..k).scale(1.0 / scale);
                let a22 = s.a_hat.block(k..n, k..n);
                let b22 = s.b_hat.block(k..n, k..n).scale(1.0 / scale);
                let out = solve_pencil(
                    b11,
                    a11,
                    cfg,
                    ledger,
                    path * 2,
                    (1.0 / scale).min(1.0),
                    near_singular,
                )?;
                let left = reciprocal_node(out);
                let right = solve_pencil(
                    a22,
                    b22,
                    cfg,
                    ledger,
                    path * 2 + 1,
                    scale.min(1.0),
                    near_singular,
                )?;
                return Ok(SpectralNode::Split {
                    transform: s.q_r,
                    split_index: k,
                    offdiag_metric: s.offdiag_metric,
                    left: Box::new(left),
                    right: Box::new(right),
                });
            }
        }
    }
    *near_singular = true;
    Ok(SpectralNode::Enclosure(Enclosure {
        kind: EnclosureKind::Disk {
            center: Complex64::new(0.0, 0.0),
            radius: f64::INFINITY,
        },
        eig_count: n,
    }))
}

/// Determinant by partial-pivot LU (small complex matrices).
fn det_small(m: &Matrix<Complex64>) -> Complex64 {
    let n = m.rows();
    let mut lu = m.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[(k, k)].norm();
        for i in (k + 1)..n {
            if lu[(i, k)].norm() > best {
                best = lu[(i, k)].norm();
                piv = i;
            }
        }
        if best == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            det = -det;
        }
        det *= lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / lu[(k, k)];
            for j in (k + 1)..n {
                let lukj = lu[(k, j)];
                lu[(i, j)] -= f * lukj;
            }
        }
    }
    det
}

/// Generalized eigenvalues of a small pencil from the characteristic
/// polynomial `det(A - z B)`, fit by interpolation at `n + 1` points.
/// Degree deficiency yields infinite eigenvalues; an identically zero
/// polynomial means the pencil is singular.
fn small_pencil_eig(a: &Matrix<Complex64>, b: &Matrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let npts = n + 1;
    let scale_a = a.norm(Norm::Fro).max(1.0);
    let scale_b = b.norm(Norm::Fro).max(1e-300);
    let rho = (scale_a / scale_b).max(1.0);
    let points: Vec<Complex64> = (0..npts)
        .map(|k| Complex64::from_polar(rho, 0.37 + std::f64::consts::TAU * k as f64 / npts as f64))
        .collect();
    let values: Vec<Complex64> = points
        .iter()
        .map(|&z| {
            let mut m = a.clone();
            for j in 0..n {
                for i in 0..n {
                    m[(i, j)] -= z * b[(i, j)];
                }
            }
            det_small(&m)
        })
        .collect();
    // Vandermonde solve for the coefficients of det(A - z B).
    let vmat = Matrix::from_fn(npts, npts, |i, j| points[i].powu(j as u32));
    let rhs = Matrix::from_fn(npts, 1, |i, _| values[i]);
    let coeffs = crate::kernels::lin_solve(&vmat, &rhs)?;
    let mags: Vec<f64> = (0..npts).map(|i| coeffs[(i, 0)].norm()).collect();
    let top = mags.iter().cloned().fold(0.0f64, f64::max);
    if top <= 1e-290 {
        return Err(Error::RankDeficient("singular pencil at base case"));
    }
    let tol = 1e-10 * top * (1.0 + rho.powi(n as i32));
    let degree = (0..npts).rev().find(|&d| mags[d] > tol).unwrap_or(0);
    // Monic normalization of the degree-d part; roots via Durand-Kerner.
    let lead = coeffs[(degree, 0)];
    let mut monic: Vec<Complex64> = (0..degree)
        .rev()
        .map(|k| coeffs[(k, 0)] / lead)
        .collect();
    if monic.is_empty() && degree == 0 {
        // Constant determinant: all eigenvalues infinite.
        return Ok(vec![Complex64::new(f64::INFINITY, 0.0); n]);
    }
    let finite = super::small_eig::char_poly_roots(&std::mem::take(&mut monic));
    let mut out = finite;
    out.extend(std::iter::repeat(Complex64::new(f64::INFINITY, 0.0)).take(n - degree));
    Ok(out)
}
