//! Lifting a commutation unitary `u: F ⊗ E → E ⊗ F` to the exchange
//! unitaries between mixed tensor blocks.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor_linalg::{
    identity, kron, tensor_dim, unitary_deviation, ComplexMatrix, ComplexVector, ONE,
};

pub type Degree = (usize, usize);

/// Largest tensor block (in basis vectors) the lifts will materialize.
pub const DEFAULT_CELL_LIMIT: usize = 4096;

type WKey = (Degree, Degree);

/// A unitary `u: F ⊗ E → E ⊗ F` with `dim E = m`, `dim F = n`.
///
/// The matrix acts on column vectors: the input basis `f_l ⊗ e_k` has index
/// `l·m + k`, the output basis `e_i ⊗ f_j` has index `i·n + j`. The
/// coefficient `u_{(k,l),(i,j)}` in `u(f_j ⊗ e_i) = Σ u_{(k,l),(i,j)} e_k ⊗ f_l`
/// is available through [`CommutationRelation::coeff`].
#[derive(Clone)]
pub struct CommutationRelation {
    m: usize,
    n: usize,
    u: ComplexMatrix,
    cell_limit: usize,
    cache: Arc<Mutex<HashMap<WKey, Arc<ComplexMatrix>>>>,
}

impl fmt::Debug for CommutationRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CommutationRelation")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("u", &self.u)
            .finish()
    }
}

impl CommutationRelation {
    pub fn new(m: usize, n: usize, u: ComplexMatrix, tol: f64) -> Result<Self> {
        if u.shape() != (m * n, m * n) {
            return Err(Error::DimensionMismatch(format!(
                "commutation matrix has shape {:?}, expected {}×{}",
                u.shape(),
                m * n,
                m * n
            )));
        }
        let deviation = unitary_deviation(&u);
        if deviation > tol {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self {
            m,
            n,
            u,
            cell_limit: DEFAULT_CELL_LIMIT,
            cache: Arc::default(),
        })
    }

    /// The trivial relation `u(f ⊗ e) = e ⊗ f`.
    pub fn flip(m: usize, n: usize) -> Self {
        let mut u = ComplexMatrix::zeros(m * n, m * n);
        for k in 0..m {
            for l in 0..n {
                u[(k * n + l, l * m + k)] = ONE;
            }
        }
        Self::new(m, n, u, 1e-12).expect("flip is unitary")
    }

    /// `m = n = 1`, `u(f ⊗ e) = λ e ⊗ f` with `|λ| = 1`.
    pub fn scalar(lambda: Complex64) -> Result<Self> {
        Self::new(1, 1, ComplexMatrix::from_element(1, 1, lambda), 1e-9)
    }

    pub fn with_cell_limit(mut self, limit: usize) -> Self {
        self.cell_limit = limit;
        self.cache = Arc::default();
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn cell_limit(&self) -> usize {
        self.cell_limit
    }

    /// `u_{(k,l),(i,j)}`: coefficient of `e_k ⊗ f_l` in `u(f_j ⊗ e_i)` (0-based).
    pub fn coeff(&self, k: usize, l: usize, i: usize, j: usize) -> Complex64 {
        self.u[(k * self.n + l, j * self.m + i)]
    }

    /// Dimension of `E^{⊗i} ⊗ F^{⊗j}`.
    pub fn dim(&self, degree: Degree) -> usize {
        tensor_dim(self.m, self.n, degree)
    }

    fn check_cells(&self, cells: usize) -> Result<()> {
        if cells > self.cell_limit {
            Err(Error::TooLarge {
                cells,
                limit: self.cell_limit,
            })
        } else {
            Ok(())
        }
    }

    /// `u^{(1,p)}: F ⊗ E^{⊗p} → E^{⊗p} ⊗ F`, the product
    /// `(I_{E^{p-1}} ⊗ u) ⋯ (I_{E^{p-2}} ⊗ u ⊗ I_E)(u ⊗ I_{E^{p-1}})`.
    pub fn lift_one_n(&self, e_pow: usize) -> Result<ComplexMatrix> {
        let (m, n) = (self.m, self.n);
        let size = n * m.pow(e_pow as u32);
        self.check_cells(size)?;
        let mut acc = identity(size);
        for t in 0..e_pow {
            let before = identity(m.pow(t as u32));
            let after = identity(m.pow((e_pow - 1 - t) as u32));
            let factor = kron(&kron(&before, &self.u), &after);
            acc = factor * acc;
        }
        Ok(acc)
    }

    /// `u^{(a,b)}: F^{⊗a} ⊗ E^{⊗b} → E^{⊗b} ⊗ F^{⊗a}`, the product
    /// `(u^{(1,b)} ⊗ I_{F^{a-1}}) ⋯ (I_{F^{a-1}} ⊗ u^{(1,b)})`.
    pub fn lift_m_n(&self, f_pow: usize, e_pow: usize) -> Result<ComplexMatrix> {
        let (m, n) = (self.m, self.n);
        let size = n.pow(f_pow as u32) * m.pow(e_pow as u32);
        self.check_cells(size)?;
        if f_pow == 0 || e_pow == 0 {
            return Ok(identity(size));
        }
        let one_row = self.lift_one_n(e_pow)?;
        let mut acc = identity(size);
        for t in 0..f_pow {
            let before = identity(n.pow((f_pow - 1 - t) as u32));
            let after = identity(n.pow(t as u32));
            let factor = kron(&kron(&before, &one_row), &after);
            acc = factor * acc;
        }
        Ok(acc)
    }

    /// `W_{(i,j),(k,l)} = I_{E^i} ⊗ u^{(j,k)} ⊗ I_{F^l}`, shared from a cache.
    pub fn big_w_shared(&self, left: Degree, right: Degree) -> Result<Arc<ComplexMatrix>> {
        let key = (left, right);
        if let Some(w) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(Arc::clone(w));
        }
        let (i, j) = left;
        let (k, l) = right;
        let cells = self.dim((i + k, j + l));
        self.check_cells(cells)?;
        let middle = self.lift_m_n(j, k)?;
        let w = kron(
            &kron(&identity(self.m.pow(i as u32)), &middle),
            &identity(self.n.pow(l as u32)),
        );
        let w = Arc::new(w);
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(key, Arc::clone(&w));
        Ok(w)
    }

    pub fn big_w(&self, left: Degree, right: Degree) -> Result<ComplexMatrix> {
        self.big_w_shared(left, right).map(|w| (*w).clone())
    }

    /// The algebraic Fock product `x · y = W(x ⊗ y)`.
    pub fn fock_product(
        &self,
        left: Degree,
        x: &ComplexVector,
        right: Degree,
        y: &ComplexVector,
    ) -> Result<ComplexVector> {
        if x.len() != self.dim(left) || y.len() != self.dim(right) {
            return Err(Error::DimensionMismatch(format!(
                "factors of length {} and {} for degrees {left:?}, {right:?}",
                x.len(),
                y.len()
            )));
        }
        let w = self.big_w_shared(left, right)?;
        Ok(&*w * x.kronecker(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_linalg::{is_unitary, max_abs, random_unitary, random_vector, TensorIndex};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Apply the two-slot map `u: F ⊗ E → E ⊗ F` at slots `pos, pos + 1` of a
    /// tensor with slot dimensions `dims`.
    fn apply_adjacent(
        v: &ComplexVector,
        dims: &[usize],
        pos: usize,
        u: &ComplexMatrix,
    ) -> (ComplexVector, Vec<usize>) {
        let (nf, me) = (dims[pos], dims[pos + 1]);
        let mut out_dims = dims.to_vec();
        out_dims.swap(pos, pos + 1);
        let prefix: usize = dims[..pos].iter().product();
        let suffix: usize = dims[pos + 2..].iter().product();
        let mut out = ComplexVector::zeros(v.len());
        for p in 0..prefix {
            for a in 0..nf {
                for b in 0..me {
                    for s in 0..suffix {
                        let src = ((p * nf + a) * me + b) * suffix + s;
                        let x = v[src];
                        if x == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        for c in 0..me {
                            for d in 0..nf {
                                let dst = ((p * me + c) * nf + d) * suffix + s;
                                out[dst] += u[(c * nf + d, a * me + b)] * x;
                            }
                        }
                    }
                }
            }
        }
        (out, out_dims)
    }

    /// Slot-by-slot oracle for `W_{(i,j),(k,l)}` acting on one vector.
    fn naive_w(
        cr: &CommutationRelation,
        left: Degree,
        right: Degree,
        v: &ComplexVector,
    ) -> ComplexVector {
        let (i, j) = left;
        let (k, l) = right;
        let (m, n) = (cr.m(), cr.n());
        let mut dims: Vec<usize> = std::iter::repeat(m)
            .take(i)
            .chain(std::iter::repeat(n).take(j))
            .chain(std::iter::repeat(m).take(k))
            .chain(std::iter::repeat(n).take(l))
            .collect();
        let mut v = v.clone();
        // move the F letters at slots i + j - 1, …, i rightward past k E letters
        for f in (0..j).rev() {
            for step in 0..k {
                let pos = i + f + step;
                let (nv, nd) = apply_adjacent(&v, &dims, pos, cr.matrix());
                v = nv;
                dims = nd;
            }
        }
        v
    }

    #[test]
    fn scalar_lifts_are_powers() {
        let lambda = Complex64::from_polar(1.0, 0.7);
        let cr = CommutationRelation::scalar(lambda).unwrap();
        let l3 = cr.lift_one_n(3).unwrap();
        assert!((l3[(0, 0)] - lambda * lambda * lambda).norm() < 1e-14);
        let l23 = cr.lift_m_n(2, 3).unwrap();
        assert!((l23[(0, 0)] - lambda.powu(6)).norm() < 1e-14);
        for (left, right) in [((1, 2), (3, 1)), ((0, 1), (1, 0)), ((2, 0), (1, 4))] {
            let w = cr.big_w(left, right).unwrap();
            assert!((w[(0, 0)] - lambda.powu((left.1 * right.0) as u32)).norm() < 1e-13);
        }
    }

    #[test]
    fn base_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cr = CommutationRelation::new(2, 3, random_unitary(6, &mut rng), 1e-9).unwrap();
        assert!(max_abs(&(cr.lift_one_n(1).unwrap() - cr.matrix())) < 1e-15);
        assert!(max_abs(&(cr.lift_m_n(1, 1).unwrap() - cr.matrix())) < 1e-15);
        assert_eq!(cr.big_w((0, 0), (2, 1)).unwrap(), identity(12));
        assert_eq!(cr.big_w((1, 1), (0, 0)).unwrap(), identity(6));
        assert_eq!(cr.lift_one_n(0).unwrap(), identity(3));
    }

    #[test]
    fn flip_lift_is_the_slot_permutation() {
        let (m, n) = (2, 3);
        let cr = CommutationRelation::flip(m, n);
        for p in 1..4 {
            let lifted = cr.lift_one_n(p).unwrap();
            let dom = TensorIndex::new(n, m, (1, p)); // F ⊗ E^p, read with F first
            let cod = TensorIndex::new(m, n, (p, 1));
            for word in dom.words() {
                let mut moved = word[1..].to_vec();
                moved.push(word[0]);
                let col = dom.flat(&word);
                let row = cod.flat(&moved);
                assert_eq!(lifted[(row, col)], ONE);
                assert!((lifted.column(col).norm() - 1.0).abs() < 1e-15);
            }
        }
        // (1,1),(1,1) exchanges the middle two slots
        let w = cr.big_w((1, 1), (1, 1)).unwrap();
        let dom_dims = [m, n, m, n];
        let cod = TensorIndex::new(m, n, (2, 2));
        for col in 0..w.ncols() {
            let mut rest = col;
            let mut word = [0usize; 4];
            for pos in (0..4).rev() {
                word[pos] = rest % dom_dims[pos];
                rest /= dom_dims[pos];
            }
            let row = cod.flat(&[word[0], word[2], word[1], word[3]]);
            assert_eq!(w[(row, col)], ONE);
        }
    }

    #[test]
    fn cell_limit_is_enforced() {
        let cr = CommutationRelation::flip(2, 2).with_cell_limit(16);
        assert!(cr.big_w((1, 1), (1, 1)).is_ok());
        assert!(matches!(
            cr.big_w((2, 1), (1, 1)),
            Err(Error::TooLarge {
                cells: 32,
                limit: 16
            })
        ));
    }

    #[test]
    fn rejects_non_unitary() {
        let u = ComplexMatrix::from_element(1, 1, Complex64::new(2.0, 0.0));
        assert!(matches!(
            CommutationRelation::new(1, 1, u, 1e-9),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn coefficient_layout_matches_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (m, n) = (2, 3);
        let cr = CommutationRelation::new(m, n, random_unitary(6, &mut rng), 1e-9).unwrap();
        for i in 0..m {
            for j in 0..n {
                let mut fe = ComplexVector::zeros(m * n);
                fe[j * m + i] = ONE;
                let image = cr.matrix() * fe;
                for k in 0..m {
                    for l in 0..n {
                        assert_eq!(image[k * n + l], cr.coeff(k, l, i, j));
                    }
                }
            }
        }
    }

    fn degrees_up_to(total: usize) -> Vec<Degree> {
        (0..=total)
            .flat_map(|t| (0..=t).map(move |i| (i, t - i)))
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn big_w_matches_slot_oracle_and_is_unitary(seed in any::<u64>(), m in 1usize..3, n in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cr = CommutationRelation::new(m, n, random_unitary(m * n, &mut rng), 1e-9).unwrap();
            for left in degrees_up_to(2) {
                for right in degrees_up_to(2) {
                    let w = cr.big_w(left, right).unwrap();
                    prop_assert!(is_unitary(&w, 1e-9));
                    let v = random_vector(w.ncols(), &mut rng);
                    let diff = (&w * &v - naive_w(&cr, left, right, &v)).norm();
                    prop_assert!(diff < 1e-10, "degrees {:?} {:?}: {}", left, right, diff);
                }
            }
        }

        #[test]
        fn fock_product_is_associative(seed in any::<u64>(), m in 1usize..3, n in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cr = CommutationRelation::new(m, n, random_unitary(m * n, &mut rng), 1e-9).unwrap();
            let degs = degrees_up_to(2);
            let pick = |rng: &mut ChaCha8Rng| degs[rand::Rng::random_range(rng, 0..degs.len())];
            for _ in 0..4 {
                let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
                if a.0 + a.1 + b.0 + b.1 + c.0 + c.1 > 4 {
                    continue;
                }
                let x = random_vector(cr.dim(a), &mut rng);
                let y = random_vector(cr.dim(b), &mut rng);
                let z = random_vector(cr.dim(c), &mut rng);
                let ab = (a.0 + b.0, a.1 + b.1);
                let bc = (b.0 + c.0, b.1 + c.1);
                let xy = cr.fock_product(a, &x, b, &y).unwrap();
                let left = cr.fock_product(ab, &xy, c, &z).unwrap();
                let yz = cr.fock_product(b, &y, c, &z).unwrap();
                let right = cr.fock_product(a, &x, bc, &yz).unwrap();
                let scale = 1.0 + left.norm();
                prop_assert!((left - right).norm() < 1e-9 * scale);
            }
        }
    }
}
