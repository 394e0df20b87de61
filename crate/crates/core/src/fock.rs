//! The truncated Fock space `⊕_{i+j ≤ D} X(i,j)` and creation operators on it.

use std::ops::Range;

use num_complex::Complex64;

use crate::commutation::Degree;
use crate::error::{Error, Result};
use crate::subproduct::{graded_degrees, SubproductSystem};
use crate::tensor_linalg::{kron, operator_norm, ComplexMatrix, ComplexVector};

/// Block decomposition of the truncated Fock space with an orthonormal basis
/// chosen in every fiber.
#[derive(Clone, Debug)]
pub struct TruncatedFock {
    sps: SubproductSystem,
    blocks: Vec<Degree>,
    bases: Vec<ComplexMatrix>,
    offsets: Vec<usize>,
    total_dim: usize,
}

impl TruncatedFock {
    pub fn new(sps: &SubproductSystem, tol: f64) -> Result<Self> {
        let blocks = graded_degrees(sps.max_degree());
        let mut bases = Vec::with_capacity(blocks.len());
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut total_dim = 0;
        for &degree in &blocks {
            let basis = sps.fiber_basis(degree, tol)?;
            offsets.push(total_dim);
            total_dim += basis.ncols();
            bases.push(basis);
        }
        Ok(Self {
            sps: sps.clone(),
            blocks,
            bases,
            offsets,
            total_dim,
        })
    }

    pub fn system(&self) -> &SubproductSystem {
        &self.sps
    }

    pub fn max_degree(&self) -> usize {
        self.sps.max_degree()
    }

    pub fn blocks(&self) -> &[Degree] {
        &self.blocks
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    fn block_index(&self, degree: Degree) -> Option<usize> {
        self.blocks.iter().position(|&d| d == degree)
    }

    /// Orthonormal basis (columns) of the block at `degree`.
    pub fn basis(&self, degree: Degree) -> Option<&ComplexMatrix> {
        self.block_index(degree).map(|k| &self.bases[k])
    }

    /// Row/column range occupied by the block at `degree`.
    pub fn block_range(&self, degree: Degree) -> Option<Range<usize>> {
        self.block_index(degree).map(|k| {
            let start = self.offsets[k];
            start..start + self.bases[k].ncols()
        })
    }

    pub fn identity(&self) -> FockOperator<'_> {
        FockOperator {
            fock: self,
            matrix: ComplexMatrix::identity(self.total_dim, self.total_dim),
        }
    }

    pub fn zero(&self) -> FockOperator<'_> {
        FockOperator {
            fock: self,
            matrix: ComplexMatrix::zeros(self.total_dim, self.total_dim),
        }
    }

    pub fn operator(&self, matrix: ComplexMatrix) -> Result<FockOperator<'_>> {
        if matrix.shape() != (self.total_dim, self.total_dim) {
            return Err(Error::DimensionMismatch(format!(
                "operator of shape {:?} on a Fock space of dimension {}",
                matrix.shape(),
                self.total_dim
            )));
        }
        Ok(FockOperator { fock: self, matrix })
    }

    /// `L_x` for `x ∈ X(i,j)`: block `(k,l)` goes to block `(i+k, j+l)` by
    /// `ξ ↦ p W(x ⊗ ξ)`; blocks past the truncation go to zero.
    pub fn creation_operator(
        &self,
        degree: Degree,
        x: &ComplexVector,
        tol: f64,
    ) -> Result<FockOperator<'_>> {
        let cr = self.sps.cr();
        if x.len() != cr.dim(degree) {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} at degree {degree:?} (expected {})",
                x.len(),
                cr.dim(degree)
            )));
        }
        let p = self.sps.projection(degree)?;
        let residual = (p * x - x).norm();
        if residual > tol {
            return Err(Error::NotInFiber { degree, residual });
        }
        let mut matrix = ComplexMatrix::zeros(self.total_dim, self.total_dim);
        let x_col = ComplexMatrix::from_column_slice(x.len(), 1, x.as_slice());
        for (src, &(k, l)) in self.blocks.iter().enumerate() {
            let target = (degree.0 + k, degree.1 + l);
            let Some(dst) = self.block_index(target) else {
                continue;
            };
            let (bs, bt) = (&self.bases[src], &self.bases[dst]);
            if bs.ncols() == 0 || bt.ncols() == 0 {
                continue;
            }
            let w = cr.big_w_shared(degree, (k, l))?;
            let block = bt.adjoint() * (&*w * kron(&x_col, bs));
            matrix
                .view_mut((self.offsets[dst], self.offsets[src]), block.shape())
                .copy_from(&block);
        }
        Ok(FockOperator { fock: self, matrix })
    }

    /// `L_{e_k}` (0-based).
    pub fn creation_e(&self, k: usize) -> Result<FockOperator<'_>> {
        self.creation_unit((1, 0), k)
    }

    /// `L_{f_k}` (0-based).
    pub fn creation_f(&self, k: usize) -> Result<FockOperator<'_>> {
        self.creation_unit((0, 1), k)
    }

    fn creation_unit(&self, degree: Degree, k: usize) -> Result<FockOperator<'_>> {
        let d = self.sps.cr().dim(degree);
        if k >= d {
            return Err(Error::BadLetter(format!(
                "{}{}",
                if degree == (1, 0) { 'e' } else { 'f' },
                k + 1
            )));
        }
        let mut v = ComplexVector::zeros(d);
        v[k] = Complex64::new(1.0, 0.0);
        self.creation_operator(degree, &v, f64::INFINITY)
    }

    /// `(‖L_x‖, ‖x‖)`.
    pub fn op_norm_check(&self, degree: Degree, x: &ComplexVector, tol: f64) -> Result<(f64, f64)> {
        let op = self.creation_operator(degree, x, tol)?;
        Ok((operator_norm(&op.matrix), x.norm()))
    }
}

/// A matrix on a [`TruncatedFock`] space.
#[derive(Clone, Debug)]
pub struct FockOperator<'a> {
    fock: &'a TruncatedFock,
    matrix: ComplexMatrix,
}

impl<'a> FockOperator<'a> {
    pub fn fock(&self) -> &'a TruncatedFock {
        self.fock
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    fn check(&self, other: &FockOperator<'_>) -> Result<()> {
        if std::ptr::eq(self.fock, other.fock) {
            Ok(())
        } else {
            Err(Error::ForeignOperator)
        }
    }

    pub fn add(&self, other: &FockOperator<'_>) -> Result<FockOperator<'a>> {
        self.check(other)?;
        Ok(FockOperator {
            fock: self.fock,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &FockOperator<'_>) -> Result<FockOperator<'a>> {
        self.check(other)?;
        Ok(FockOperator {
            fock: self.fock,
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn mul(&self, other: &FockOperator<'_>) -> Result<FockOperator<'a>> {
        self.check(other)?;
        Ok(FockOperator {
            fock: self.fock,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn scale(&self, c: Complex64) -> FockOperator<'a> {
        FockOperator {
            fock: self.fock,
            matrix: self.matrix.map(|x| x * c),
        }
    }

    pub fn norm(&self) -> f64 {
        operator_norm(&self.matrix)
    }

    /// `Φ_{i,j}(T) = Σ_{(k,l)} p_{(k+i,l+j)} T p_{(k,l)}`.
    pub fn fourier_coefficient(&self, shift: Degree) -> FockOperator<'a> {
        let fock = self.fock;
        let mut out = ComplexMatrix::zeros(fock.total_dim, fock.total_dim);
        for &(k, l) in &fock.blocks {
            let src = fock.block_range((k, l)).expect("listed block");
            let Some(dst) = fock.block_range((k + shift.0, l + shift.1)) else {
                continue;
            };
            let block = self
                .matrix
                .view((dst.start, src.start), (dst.len(), src.len()));
            out.view_mut((dst.start, src.start), (dst.len(), src.len()))
                .copy_from(&block);
        }
        FockOperator { fock, matrix: out }
    }

    /// `Φ̃_k(T) = Σ_{i+j=k} Φ_{i,j}(T)`.
    pub fn fourier_total(&self, k: usize) -> FockOperator<'a> {
        let mut out = self.fock.zero();
        for i in 0..=k {
            out.matrix += self.fourier_coefficient((i, k - i)).matrix;
        }
        out
    }

    /// `Σ_{k ≤ P} (1 − k/P) Φ̃_k(T)`.
    pub fn cesaro(&self, order: usize) -> FockOperator<'a> {
        let mut out = self.fock.zero();
        if order == 0 {
            return out;
        }
        for k in 0..order {
            let weight = 1.0 - k as f64 / order as f64;
            out.matrix += self.fourier_total(k).matrix.map(|x| x * weight);
        }
        out
    }

    /// `α_0(T)`, the `(Δ, Δ)` entry.
    pub fn vacuum_character(&self) -> Complex64 {
        match self.fock.block_range((0, 0)) {
            Some(r) if !r.is_empty() => self.matrix[(r.start, r.start)],
            _ => Complex64::new(0.0, 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutation::CommutationRelation;
    use crate::subproduct::random_system;
    use crate::tensor_linalg::{max_abs, random_unitary, random_vector, ONE, ZERO};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn random_fiber_vector(
        sps: &SubproductSystem,
        degree: Degree,
        rng: &mut ChaCha8Rng,
    ) -> ComplexVector {
        let b = sps.fiber_basis(degree, TOL).unwrap();
        &b * random_vector(b.ncols(), rng)
    }

    #[test]
    fn truncated_linear_matrices() {
        for (m, n) in [(1, 2), (2, 1), (3, 0)] {
            let x = SubproductSystem::truncated_linear(m, n, 3);
            let fock = TruncatedFock::new(&x, TOL).unwrap();
            assert_eq!(fock.total_dim(), 1 + m + n);
            for (row, op) in (0..m)
                .map(|k| fock.creation_e(k).unwrap())
                .chain((0..n).map(|k| fock.creation_f(k).unwrap()))
                .enumerate()
            {
                let mut expected = ComplexMatrix::zeros(1 + m + n, 1 + m + n);
                expected[(row + 1, 0)] = ONE;
                assert_eq!(op.matrix(), &expected);
            }
            let delta = ComplexVector::from_element(1, ONE);
            let id = fock.creation_operator((0, 0), &delta, TOL).unwrap();
            assert_eq!(id.matrix(), fock.identity().matrix());
        }
    }

    #[test]
    fn flip_creation_is_shift() {
        let x = SubproductSystem::full(CommutationRelation::flip(1, 1), 3);
        let fock = TruncatedFock::new(&x, TOL).unwrap();
        let le = fock.creation_e(0).unwrap();
        for &(k, l) in fock.blocks() {
            let src = fock.block_range((k, l)).unwrap().start;
            let col = le.matrix().column(src);
            match fock.block_range((k + 1, l)) {
                Some(r) => {
                    assert_eq!(col[r.start], ONE);
                    assert!((col.norm() - 1.0).abs() < 1e-15);
                }
                None => assert_eq!(col.norm(), 0.0),
            }
        }
    }

    #[test]
    fn rejects_vectors_outside_fiber() {
        let x = SubproductSystem::truncated_linear(2, 1, 2);
        let fock = TruncatedFock::new(&x, TOL).unwrap();
        let v = ComplexVector::from_element(4, ONE);
        assert!(matches!(
            fock.creation_operator((2, 0), &v, TOL),
            Err(Error::NotInFiber { .. })
        ));
    }

    #[test]
    fn norms_of_scaled_units() {
        let x = SubproductSystem::full(CommutationRelation::flip(2, 1), 3);
        let fock = TruncatedFock::new(&x, TOL).unwrap();
        let mut v = ComplexVector::zeros(2);
        v[1] = ONE;
        let (a, b) = fock.op_norm_check((1, 0), &v, TOL).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        let (a, b) = fock
            .op_norm_check((1, 0), &(v * Complex64::new(2.0, 0.0)), TOL)
            .unwrap();
        assert!((a - 2.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fourier_of_graded_and_mixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cr = CommutationRelation::new(2, 2, random_unitary(4, &mut rng), 1e-9).unwrap();
        let x = random_system(&cr, 3, TOL, &mut rng).unwrap();
        let fock = TruncatedFock::new(&x, TOL).unwrap();
        let le = fock.creation_e(0).unwrap();
        let lf = fock.creation_f(1).unwrap();
        assert_eq!(le.fourier_coefficient((1, 0)).matrix(), le.matrix());
        assert_eq!(max_abs(le.fourier_coefficient((0, 1)).matrix()), 0.0);
        let id = fock.identity();
        assert_eq!(id.fourier_coefficient((0, 0)).matrix(), id.matrix());
        let t = le.mul(&lf).unwrap().add(&le).unwrap();
        let ef = le.mul(&lf).unwrap();
        assert!(max_abs(&(t.fourier_coefficient((1, 1)).matrix() - ef.matrix())) < 1e-15);
        let t3 = id.scale(Complex64::new(3.0, 0.0)).add(&le).unwrap();
        assert_eq!(t3.vacuum_character(), Complex64::new(3.0, 0.0));
        assert_eq!(le.vacuum_character(), ZERO);
        assert_eq!(id.vacuum_character(), ONE);
    }

    #[test]
    fn cesaro_of_graded_operator() {
        let x = SubproductSystem::full(CommutationRelation::flip(1, 2), 3);
        let fock = TruncatedFock::new(&x, TOL).unwrap();
        let t = fock
            .creation_e(0)
            .unwrap()
            .mul(&fock.creation_f(1).unwrap())
            .unwrap();
        let c = t.cesaro(4);
        assert!(max_abs(&(c.matrix() - t.matrix().map(|z| z * 0.5))) < 1e-15);
        let id = fock.identity();
        assert_eq!(id.cesaro(3).matrix(), id.matrix());
    }

    #[test]
    fn foreign_operators_do_not_mix() {
        let x = SubproductSystem::full(CommutationRelation::flip(1, 1), 2);
        let a = TruncatedFock::new(&x, TOL).unwrap();
        let b = TruncatedFock::new(&x, TOL).unwrap();
        assert!(matches!(
            a.identity().mul(&b.identity()),
            Err(Error::ForeignOperator)
        ));
    }

    /// `L_x` rebuilt from degree-one creation operators by splitting off the
    /// first letter.
    fn factorized<'a>(
        fock: &'a TruncatedFock,
        degree: Degree,
        x: &ComplexVector,
    ) -> FockOperator<'a> {
        let sps = fock.system();
        let cr = sps.cr();
        if degree.0 + degree.1 <= 1 {
            return fock.creation_operator(degree, x, f64::INFINITY).unwrap();
        }
        let (letters, rest) = if degree.0 > 0 {
            (cr.m(), (degree.0 - 1, degree.1))
        } else {
            (cr.n(), (0, degree.1 - 1))
        };
        let rest_dim = cr.dim(rest);
        let p_rest = sps.projection(rest).unwrap();
        let mut out = fock.zero();
        for s in 0..letters {
            let slice =
                ComplexVector::from_iterator(rest_dim, (0..rest_dim).map(|r| x[s * rest_dim + r]));
            let eta = p_rest * slice;
            let head = if degree.0 > 0 {
                fock.creation_e(s)
            } else {
                fock.creation_f(s)
            }
            .unwrap();
            let term = head.mul(&factorized(fock, rest, &eta)).unwrap();
            out = out.add(&term).unwrap();
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn creation_norm_equals_vector_norm(seed in any::<u64>(), m in 1usize..3, n in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cr = CommutationRelation::new(m, n, random_unitary(m * n, &mut rng), 1e-9).unwrap();
            let x = random_system(&cr, 4, TOL, &mut rng).unwrap();
            let fock = TruncatedFock::new(&x, TOL).unwrap();
            for degree in x.degrees() {
                let v = random_fiber_vector(&x, degree, &mut rng);
                let (a, b) = fock.op_norm_check(degree, &v, 1e-8).unwrap();
                prop_assert!((a - b).abs() <= 1e-8 * b.max(1.0), "{:?}: {} vs {}", degree, a, b);
            }
        }

        #[test]
        fn creation_factorizes_into_generators(seed in any::<u64>(), m in 1usize..3, n in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cr = CommutationRelation::new(m, n, random_unitary(m * n, &mut rng), 1e-9).unwrap();
            let x = random_system(&cr, 4, TOL, &mut rng).unwrap();
            let fock = TruncatedFock::new(&x, TOL).unwrap();
            for degree in x.degrees() {
                let v = random_fiber_vector(&x, degree, &mut rng);
                let direct = fock.creation_operator(degree, &v, 1e-8).unwrap();
                let built = factorized(&fock, degree, &v);
                prop_assert!(max_abs(&(direct.matrix() - built.matrix())) < 1e-9);
            }
        }

        #[test]
        fn fourier_components_exhaust_and_contract(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cr = CommutationRelation::new(2, 1, random_unitary(2, &mut rng), 1e-9).unwrap();
            let x = random_system(&cr, 3, TOL, &mut rng).unwrap();
            let fock = TruncatedFock::new(&x, TOL).unwrap();
            let gens = [fock.creation_e(0).unwrap(), fock.creation_e(1).unwrap(), fock.creation_f(0).unwrap()];
            let mut t = fock.identity().scale(crate::tensor_linalg::random_complex(&mut rng));
            let mut s = fock.zero();
            for _ in 0..4 {
                let a = &gens[rand::Rng::random_range(&mut rng, 0..3)];
                let b = &gens[rand::Rng::random_range(&mut rng, 0..3)];
                let c = crate::tensor_linalg::random_complex(&mut rng);
                t = t.add(&a.mul(b).unwrap().scale(c)).unwrap();
                s = s.add(&a.scale(c)).unwrap();
            }
            let mut sum = fock.zero();
            for d in x.degrees() {
                let phi = t.fourier_coefficient(d);
                prop_assert!(max_abs(&(phi.fourier_coefficient(d).matrix() - phi.matrix())) == 0.0);
                prop_assert!(phi.norm() <= t.norm() + 1e-9);
                sum = sum.add(&phi).unwrap();
            }
            prop_assert!(max_abs(&(sum.matrix() - t.matrix())) < 1e-9);
            let t0 = t.sub(&fock.identity().scale(t.vacuum_character())).unwrap();
            let ts = t0.mul(&s).unwrap();
            prop_assert!(max_abs(ts.fourier_total(0).matrix()) < 1e-9);
            prop_assert!(max_abs(ts.fourier_total(1).matrix()) < 1e-9);
        }
    }
}
