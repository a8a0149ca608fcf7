//! Output structures of the divide-and-conquer drivers: the recursive
//! split tree and the enclosure regions emitted when a spectrum component
//! cannot be divided at working precision.

use num_complex::Complex64;

use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Region guaranteed to contain `eig_count` eigenvalues.
#[derive(Clone, Debug)]
pub struct Enclosure {
    pub kind: EnclosureKind,
    pub eig_count: usize,
}

#[derive(Clone, Debug)]
pub enum EnclosureKind {
    /// Real interval (symmetric problems).
    Interval { lo: f64, hi: f64 },
    /// Disk in the complex plane.
    Disk { center: Complex64, radius: f64 },
    /// Convex polygon (counterclockwise vertex list) from half-plane cuts
    /// clipped against the bounding disk.
    ConvexPolygon(Vec<Complex64>),
}

impl Enclosure {
    /// Containment test with an absolute slack margin.
    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        match &self.kind {
            EnclosureKind::Interval { lo, hi } => {
                z.im.abs() <= slack && z.re >= lo - slack && z.re <= hi + slack
            }
            EnclosureKind::Disk { center, radius } => (z - center).norm() <= radius + slack,
            EnclosureKind::ConvexPolygon(vs) => {
                if vs.len() < 3 {
                    return vs.iter().any(|v| (z - v).norm() <= slack);
                }
                // Inside iff on the left of every CCW edge (within slack).
                for k in 0..vs.len() {
                    let a = vs[k];
                    let b = vs[(k + 1) % vs.len()];
                    let e = b - a;
                    let cross = e.re * (z.im - a.im) - e.im * (z.re - a.re);
                    if cross < -slack * e.norm().max(1e-300) {
                        return false;
                    }
                }
                true
            }
        }
    }
}

/// Node of the divide-and-conquer output tree.
#[derive(Clone, Debug)]
pub enum SpectralNode<T: Scalar> {
    /// Successful split: `transform^H A transform` was block-triangular at
    /// `split_index`, and the children describe the diagonal blocks.
    Split {
        transform: Matrix<T>,
        split_index: usize,
        offdiag_metric: f64,
        left: Box<SpectralNode<T>>,
        right: Box<SpectralNode<T>>,
    },
    /// Base-case leaf with explicit eigenvalues (and, for the symmetric
    /// driver, eigenvectors of the leaf block).
    Eigenvalues {
        values: Vec<Complex64>,
        vectors: Option<Matrix<T>>,
    },
    /// Undividable component bounded by a region.
    Enclosure(Enclosure),
}

impl<T: Scalar> SpectralNode<T> {
    pub fn dim(&self) -> usize {
        match self {
            SpectralNode::Split { left, right, .. } => left.dim() + right.dim(),
            SpectralNode::Eigenvalues { values, .. } => values.len(),
            SpectralNode::Enclosure(e) => e.eig_count,
        }
    }
}

/// Recursive block decomposition of a spectrum.
#[derive(Clone, Debug)]
pub struct SpectralTree<T: Scalar> {
    pub n: usize,
    pub root: SpectralNode<T>,
}

impl<T: Scalar> SpectralTree<T> {
    /// All explicitly resolved eigenvalues, in leaf order.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let mut out = Vec::new();
        fn walk<T: Scalar>(node: &SpectralNode<T>, out: &mut Vec<Complex64>) {
            match node {
                SpectralNode::Split { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
                SpectralNode::Eigenvalues { values, .. } => out.extend_from_slice(values),
                SpectralNode::Enclosure(_) => {}
            }
        }
        walk(&self.root, &mut out);
        out
    }

    /// All enclosure leaves.
    pub fn enclosures(&self) -> Vec<&Enclosure> {
        let mut out = Vec::new();
        fn walk<'a, T: Scalar>(node: &'a SpectralNode<T>, out: &mut Vec<&'a Enclosure>) {
            match node {
                SpectralNode::Split { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
                SpectralNode::Eigenvalues { .. } => {}
                SpectralNode::Enclosure(e) => out.push(e),
            }
        }
        walk(&self.root, &mut out);
        out
    }

    pub fn leaf_count(&self) -> usize {
        fn walk<T: Scalar>(node: &SpectralNode<T>) -> usize {
            match node {
                SpectralNode::Split { left, right, .. } => walk(left) + walk(right),
                _ => 1,
            }
        }
        walk(&self.root)
    }

    /// Checks the structural invariant: leaf eigenvalue counts sum to `n`.
    pub fn counts_consistent(&self) -> bool {
        self.root.dim() == self.n
    }

    /// Visit every split with the node matrix it divided: `f(a_hat, k)`
    /// receives the transformed matrix before the off-diagonal block is
    /// zeroed. Reconstructs top-down from the original matrix `a`.
    pub fn walk_splits(&self, a: &Matrix<T>, f: &mut impl FnMut(&Matrix<T>, usize)) {
        fn walk<T: Scalar>(
            node: &SpectralNode<T>,
            a: &Matrix<T>,
            f: &mut impl FnMut(&Matrix<T>, usize),
        ) {
            if let SpectralNode::Split {
                transform,
                split_index,
                left,
                right,
                ..
            } = node
            {
                let a_hat = crate::kernels::mul(&crate::kernels::mul(&transform.adjoint(), a), transform);
                f(&a_hat, *split_index);
                let k = *split_index;
                let n = a_hat.rows();
                walk(left, &a_hat.block(0..k, 0..k), f);
                walk(right, &a_hat.block(k..n, k..n), f);
            }
        }
        walk(&self.root, a, f);
    }

    /// Accumulated orthogonal transform: the block-diagonal composition of
    /// all split transforms (identity on leaf blocks).
    pub fn accumulated_transform(&self) -> Matrix<T> {
        fn walk<T: Scalar>(node: &SpectralNode<T>) -> Matrix<T> {
            match node {
                SpectralNode::Split {
                    transform,
                    split_index,
                    left,
                    right,
                    ..
                } => {
                    let n = transform.rows();
                    let k = *split_index;
                    let ql = walk(left);
                    let qr = walk(right);
                    let mut block = Matrix::zeros(n, n);
                    block.set_block(0, 0, &ql);
                    block.set_block(k, k, &qr);
                    crate::kernels::mul(transform, &block)
                }
                SpectralNode::Eigenvalues { values, .. } => Matrix::identity(values.len()),
                SpectralNode::Enclosure(e) => Matrix::identity(e.eig_count),
            }
        }
        walk(&self.root)
    }
}

/// Half-plane `Re(conj(direction) * (z - anchor)) >= 0` (keep side), used
/// to record no-eigenvalue cuts for enclosure polygons.
#[derive(Clone, Copy, Debug)]
pub struct HalfPlane {
    /// Unit inward normal: points into the kept side.
    pub normal: Complex64,
    /// A point on the boundary line.
    pub anchor: Complex64,
}

impl HalfPlane {
    pub fn keeps(&self, z: Complex64) -> bool {
        (self.normal.conj() * (z - self.anchor)).re >= 0.0
    }
}

/// Convex polygon for a disk intersected with half-plane cuts: starts from
/// a circumscribed 32-gon of the disk (so the region is never undercovered)
/// and clips with Sutherland-Hodgman against each cut.
pub fn disk_cut_polygon(center: Complex64, radius: f64, cuts: &[HalfPlane]) -> Vec<Complex64> {
    let sides = 32usize;
    let circ = radius / (std::f64::consts::PI / sides as f64).cos();
    let mut poly: Vec<Complex64> = (0..sides)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / sides as f64;
            center + Complex64::new(circ * t.cos(), circ * t.sin())
        })
        .collect();
    for cut in cuts {
        let mut next = Vec::with_capacity(poly.len() + 1);
        for k in 0..poly.len() {
            let cur = poly[k];
            let nxt = poly[(k + 1) % poly.len()];
            let keep_cur = cut.keeps(cur);
            let keep_nxt = cut.keeps(nxt);
            if keep_cur {
                next.push(cur);
            }
            if keep_cur != keep_nxt {
                // Edge crosses the boundary line: interpolate.
                let fc = (cut.normal.conj() * (cur - cut.anchor)).re;
                let fn_ = (cut.normal.conj() * (nxt - cut.anchor)).re;
                let t = fc / (fc - fn_);
                next.push(cur + (nxt - cur) * t);
            }
        }
        poly = next;
        if poly.is_empty() {
            break;
        }
    }
    poly
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_clipping_keeps_disk_points() {
        let c = Complex64::new(1.0, -0.5);
        let r = 2.0;
        let cut = HalfPlane {
            normal: Complex64::new(1.0, 0.0),
            anchor: c,
        };
        let poly = disk_cut_polygon(c, r, &[cut]);
        let enc = Enclosure {
            kind: EnclosureKind::ConvexPolygon(poly),
            eig_count: 1,
        };
        // Points on the kept side of the cut and inside the disk stay in.
        assert!(enc.contains(c + Complex64::new(1.0, 0.3), 1e-9));
        // Points on the discarded side are out.
        assert!(!enc.contains(c + Complex64::new(-1.0, 0.0), 1e-9));
        // Points far outside the disk are out.
        assert!(!enc.contains(c + Complex64::new(5.0, 0.0), 1e-9));
    }

    #[test]
    fn interval_and_disk_contains() {
        let e = Enclosure {
            kind: EnclosureKind::Interval { lo: -1.0, hi: 2.0 },
            eig_count: 3,
        };
        assert!(e.contains(Complex64::new(0.0, 0.0), 0.0));
        assert!(!e.contains(Complex64::new(3.0, 0.0), 0.0));
        let d = Enclosure {
            kind: EnclosureKind::Disk {
                center: Complex64::new(0.0, 1.0),
                radius: 0.5,
            },
            eig_count: 1,
        };
        assert!(d.contains(Complex64::new(0.2, 1.0), 0.0));
        assert!(!d.contains(Complex64::new(1.0, 1.0), 0.0));
    }
}
