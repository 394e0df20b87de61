//! Dense complex linear algebra on tensor powers `E^{⊗i} ⊗ F^{⊗j}`.
//!
//! Every tensor space in this crate is flattened the same way: a basis word
//! `e_{s_1} ⊗ … ⊗ e_{s_i} ⊗ f_{t_1} ⊗ … ⊗ f_{t_j}` maps to the row-major index
//! with `s_1` most significant and the E-block before the F-block. [`kron`]
//! follows the same convention, so `kron(a, b)` acts on `A ⊗ B` with the `A`
//! slot most significant.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Default relative rank tolerance.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `m^i · n^j`, the dimension of `E^{⊗i} ⊗ F^{⊗j}`.
pub fn tensor_dim(m: usize, n: usize, degree: (usize, usize)) -> usize {
    m.pow(degree.0 as u32) * n.pow(degree.1 as u32)
}

/// Basis-word bookkeeping for one tensor block `E^{⊗i} ⊗ F^{⊗j}`.
///
/// Words are 0-based: the first `i` letters index `E` (range `0..m`), the
/// remaining `j` letters index `F` (range `0..n`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorIndex {
    pub m: usize,
    pub n: usize,
    pub degree: (usize, usize),
}

impl TensorIndex {
    pub fn new(m: usize, n: usize, degree: (usize, usize)) -> Self {
        Self { m, n, degree }
    }

    pub fn dim(&self) -> usize {
        tensor_dim(self.m, self.n, self.degree)
    }

    fn radix(&self, pos: usize) -> usize {
        if pos < self.degree.0 {
            self.m
        } else {
            self.n
        }
    }

    pub fn len(&self) -> usize {
        self.degree.0 + self.degree.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self, word: &[usize]) -> usize {
        debug_assert_eq!(word.len(), self.len());
        word.iter().enumerate().fold(0, |acc, (pos, &letter)| {
            debug_assert!(letter < self.radix(pos));
            acc * self.radix(pos) + letter
        })
    }

    pub fn word(&self, mut flat: usize) -> Vec<usize> {
        let mut word = vec![0; self.len()];
        for pos in (0..self.len()).rev() {
            let r = self.radix(pos);
            word[pos] = flat % r;
            flat /= r;
        }
        word
    }

    pub fn words(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.dim()).map(move |k| self.word(k))
    }
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

/// Kronecker product, first factor most significant.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, f| kron(&acc, f))
}

pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max(‖a a* − I‖_max, ‖a* a − I‖_max)`, or infinity for non-square input.
pub fn unitary_deviation(a: &ComplexMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let id = identity(a.nrows());
    let left = max_abs(&(a * a.adjoint() - &id));
    let right = max_abs(&(a.adjoint() * a - &id));
    left.max(right)
}

pub fn is_unitary(a: &ComplexMatrix, tol: f64) -> bool {
    unitary_deviation(a) <= tol
}

pub fn is_projection(p: &ComplexMatrix, tol: f64) -> bool {
    if !p.is_square() {
        return false;
    }
    max_abs(&(p - p.adjoint())) <= tol && max_abs(&(p * p - p)) <= tol
}

fn to_faer(a: &ComplexMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, Complex64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Thin SVD `a = U diag(σ) V*`, singular values in decreasing order.
fn thin_svd(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix, ComplexMatrix) {
    let (r, c) = a.shape();
    let k = r.min(c);
    if k == 0 {
        return (
            Vec::new(),
            ComplexMatrix::zeros(r, 0),
            ComplexMatrix::zeros(c, 0),
        );
    }
    let svd = to_faer(a).thin_svd().expect("SVD converges");
    let values: Vec<f64> = svd.S().column_vector().iter().map(|s| s.re).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| values[y].total_cmp(&values[x]));
    let u = from_faer(svd.U());
    let v = from_faer(svd.V());
    let pick = |m: &ComplexMatrix| {
        let cols: Vec<ComplexVector> = order.iter().map(|&j| m.column(j).into_owned()).collect();
        ComplexMatrix::from_columns(&cols)
    };
    let sorted = order.iter().map(|&j| values[j]).collect();
    (sorted, pick(&u), pick(&v))
}

/// Singular values and left singular vectors, sorted by decreasing value.
fn sorted_svd(a: &ComplexMatrix) -> (Vec<f64>, Option<ComplexMatrix>) {
    let (values, u, _) = thin_svd(a);
    (values, Some(u))
}

fn rank_threshold(sigma_max: f64, tol: f64) -> f64 {
    tol * sigma_max.max(1.0)
}

/// Numerical rank: singular values above `tol · max(σ_max, 1)` count.
pub fn rank(a: &ComplexMatrix, tol: f64) -> usize {
    let (values, _) = sorted_svd(a);
    let Some(&top) = values.first() else {
        return 0;
    };
    let cut = rank_threshold(top, tol);
    values.iter().filter(|&&s| s > cut).count()
}

pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    sorted_svd(a).0.first().copied().unwrap_or(0.0)
}

/// `q q*` for a matrix with orthonormal columns.
pub fn projection_from_basis(q: &ComplexMatrix) -> ComplexMatrix {
    let p = q * q.adjoint();
    hermitian_part(&p)
}

pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Orthogonal projection onto the column space of `a`.
pub fn projection_onto_columns(a: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    let (values, u) = sorted_svd(a);
    let d = a.nrows();
    let Some(&top) = values.first() else {
        return ComplexMatrix::zeros(d, d);
    };
    let cut = rank_threshold(top, tol);
    let r = values.iter().filter(|&&s| s > cut).count();
    let u = u.expect("left singular vectors requested");
    projection_from_basis(&u.columns(0, r).into_owned())
}

/// Orthogonal projection onto `span(vectors)`. `dim` is required when the
/// list is empty.
pub fn projection_onto_span(
    vectors: &[ComplexVector],
    dim: Option<usize>,
    tol: f64,
) -> Result<ComplexMatrix> {
    let d = match (vectors.first(), dim) {
        (Some(v), _) => v.len(),
        (None, Some(d)) => d,
        (None, None) => return Err(Error::EmptySpan),
    };
    if let Some(bad) = vectors.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} in a span of length-{d} vectors",
            bad.len()
        )));
    }
    if vectors.is_empty() {
        return Ok(ComplexMatrix::zeros(d, d));
    }
    Ok(projection_onto_columns(
        &ComplexMatrix::from_columns(vectors),
        tol,
    ))
}

/// Indices of the unit diagonal entries when `a` is exactly a diagonal 0/1
/// matrix.
fn coordinate_support(a: &ComplexMatrix) -> Option<Vec<usize>> {
    if !a.is_square() {
        return None;
    }
    let mut support = Vec::new();
    for c in 0..a.ncols() {
        for r in 0..a.nrows() {
            let x = a[(r, c)];
            if r == c {
                if x == ONE {
                    support.push(c);
                } else if x != ZERO {
                    return None;
                }
            } else if x != ZERO {
                return None;
            }
        }
    }
    Some(support)
}

/// Orthonormal basis (as columns) of the range of `a`.
///
/// The basis is canonical for coordinate subspaces: the rank is fixed by the
/// SVD rule, then pivoted Gram–Schmidt runs on the columns of the range
/// projection, so `range_basis(I)` returns the standard basis in order.
pub fn range_basis(a: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    let d = a.nrows();
    if let Some(cols) = coordinate_support(a) {
        let basis: Vec<ComplexVector> = cols
            .into_iter()
            .map(|k| {
                let mut v = ComplexVector::zeros(d);
                v[k] = ONE;
                v
            })
            .collect();
        return if basis.is_empty() {
            ComplexMatrix::zeros(d, 0)
        } else {
            ComplexMatrix::from_columns(&basis)
        };
    }
    let p = projection_onto_columns(a, tol);
    let r = rank(&p, 0.5);
    let mut basis: Vec<ComplexVector> = Vec::with_capacity(r);
    let mut residual = p.clone();
    for _ in 0..r {
        let mut best = 0;
        let mut best_norm = -1.0;
        for k in 0..d {
            let nrm = residual.column(k).norm();
            if nrm > best_norm + 1e-12 {
                best = k;
                best_norm = nrm;
            }
        }
        let mut q = residual.column(best).into_owned();
        // re-orthogonalize once against the accepted vectors
        for b in &basis {
            let c = b.dotc(&q);
            q -= b * c;
        }
        let nrm = q.norm();
        if nrm == 0.0 {
            break;
        }
        q /= Complex64::new(nrm, 0.0);
        let coeffs = q.adjoint() * &residual;
        residual -= &q * coeffs;
        basis.push(q);
    }
    if basis.is_empty() {
        ComplexMatrix::zeros(d, 0)
    } else {
        ComplexMatrix::from_columns(&basis)
    }
}

/// Orthonormal basis of the orthogonal complement of the range of `p`.
pub fn complement_basis(p: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    let d = p.nrows();
    range_basis(&(identity(d) - projection_onto_columns(p, tol)), tol)
}

/// Projection onto the intersection of the ranges of `ps`.
///
/// Computed as the complement of the span of the kernels: the columns of
/// every `I − p_k` are stacked and their range projection removed from `I`.
pub fn meet_projections(ps: &[ComplexMatrix], tol: f64) -> Result<ComplexMatrix> {
    let Some(first) = ps.first() else {
        return Err(Error::EmptySpan);
    };
    let d = first.nrows();
    for p in ps {
        if p.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "projection of shape {:?} in a meet of {d}×{d} projections",
                p.shape()
            )));
        }
    }
    let id = identity(d);
    let mut stacked = ComplexMatrix::zeros(d, d * ps.len());
    for (k, p) in ps.iter().enumerate() {
        stacked.columns_mut(k * d, d).copy_from(&(&id - p));
    }
    let kernels = projection_onto_columns(&stacked, tol);
    Ok(hermitian_part(&(id - kernels)))
}

/// Unitary factor of the polar decomposition of a square matrix.
pub fn polar_unitary(a: &ComplexMatrix) -> ComplexMatrix {
    if a.nrows() == 0 {
        return a.clone();
    }
    let (_, u, v) = thin_svd(a);
    u * v.adjoint()
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Complex Gaussian vector.
pub fn random_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexVector {
    ComplexVector::from_fn(d, |_, _| random_complex(rng))
}

pub fn random_matrix<R: Rng + ?Sized>(r: usize, c: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, c, |_, _| random_complex(rng))
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    if d == 0 {
        return identity(0);
    }
    let qr = random_matrix(d, d, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let diag = r[(k, k)];
        let phase = if diag.norm() > 0.0 {
            diag / diag.norm()
        } else {
            ONE
        };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// Projection onto a random subspace of the range of `p` of dimension `r`
/// (clamped to the rank of `p`).
pub fn random_subprojection<R: Rng + ?Sized>(
    p: &ComplexMatrix,
    r: usize,
    tol: f64,
    rng: &mut R,
) -> ComplexMatrix {
    let basis = range_basis(p, tol);
    let full = basis.ncols();
    let r = r.min(full);
    if r == full {
        return projection_from_basis(&basis);
    }
    let mix = random_matrix(full, r, rng);
    projection_onto_columns(&(&basis * mix), tol)
}
