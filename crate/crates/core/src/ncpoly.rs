//! Non-commutative polynomials in `z_1..z_m, w_1..w_n` and the bridge between
//! homogeneous ideals and subproduct systems.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::commutation::{CommutationRelation, Degree};
use crate::error::{Error, Result};
use crate::subproduct::{graded_degrees, SubproductSystem};
use crate::tensor_linalg::{
    identity, kron, projection_onto_columns, range_basis, rank, ComplexMatrix, ComplexVector,
    TensorIndex, ONE, ZERO,
};
use crate::variety::CommutativePolynomial;

/// A letter of the alphabet, 0-based: `Z(0)` is `z1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    Z(usize),
    W(usize),
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Z(k) => write!(f, "z{}", k + 1),
            Letter::W(k) => write!(f, "w{}", k + 1),
        }
    }
}

pub type Word = Vec<Letter>;

/// Letter counts `(#z, #w)` of a word.
pub fn word_degree(word: &[Letter]) -> Degree {
    let z = word.iter().filter(|l| matches!(l, Letter::Z(_))).count();
    (z, word.len() - z)
}

/// Parse `"z1w2z1"`; the empty string and `"1"` are the empty word.
pub fn parse_word(s: &str) -> Result<Word> {
    let s = s.trim();
    if s.is_empty() || s == "1" {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let bytes = s.as_bytes();
    let mut pos = 0;
    while pos < bytes.len() {
        let kind = bytes[pos];
        let start = pos + 1;
        let mut end = start;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        let index: usize = s[start..end]
            .parse()
            .map_err(|_| Error::Parse(format!("bad word {s:?} at byte {pos}")))?;
        if index == 0 {
            return Err(Error::Parse(format!("letter indices start at 1 in {s:?}")));
        }
        out.push(match kind {
            b'z' => Letter::Z(index - 1),
            b'w' => Letter::W(index - 1),
            _ => return Err(Error::Parse(format!("bad word {s:?} at byte {pos}"))),
        });
        pos = end;
    }
    Ok(out)
}

pub fn format_word(word: &[Letter]) -> String {
    if word.is_empty() {
        return "1".to_string();
    }
    word.iter().map(Letter::to_string).collect()
}

/// Element of the free algebra `ℂ⟨z_1..z_m, w_1..w_n⟩`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NCPolynomial {
    terms: BTreeMap<Word, Complex64>,
}

impl NCPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(Vec::new(), c)
    }

    pub fn monomial(word: Word, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != ZERO {
            terms.insert(word, c);
        }
        Self { terms }
    }

    pub fn z(k: usize) -> Self {
        Self::monomial(vec![Letter::Z(k)], ONE)
    }

    pub fn w(k: usize) -> Self {
        Self::monomial(vec![Letter::W(k)], ONE)
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, Complex64)>>(terms: I) -> Self {
        let mut out = Self::zero();
        for (word, c) in terms {
            out.add_term(word, c);
        }
        out
    }

    fn add_term(&mut self, word: Word, c: Complex64) {
        let entry = self.terms.entry(word).or_insert(ZERO);
        *entry += c;
        if *entry == ZERO {
            self.terms.retain(|_, v| *v != ZERO);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Word, Complex64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, word: &[Letter]) -> Complex64 {
        self.terms.get(word).copied().unwrap_or(ZERO)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (word, &c) in &other.terms {
            out.add_term(word.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, &v)| (w.clone(), v * c)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (a, &x) in &self.terms {
            for (b, &y) in &other.terms {
                let mut word = a.clone();
                word.extend_from_slice(b);
                out.add_term(word, x * y);
            }
        }
        out
    }

    /// Drop terms with `|c| ≤ tol`.
    pub fn prune(&self, tol: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.norm() > tol)
                .map(|(w, &c)| (w.clone(), c))
                .collect(),
        }
    }

    /// The common letter counts of all monomials. The zero polynomial has
    /// none.
    pub fn is_homogeneous(&self) -> Option<Degree> {
        let mut degrees = self.terms.keys().map(|w| word_degree(w));
        let first = degrees.next()?;
        degrees.all(|d| d == first).then_some(first)
    }

    /// Largest letter indices used, as `(max z index + 1, max w index + 1)`.
    pub fn alphabet_size(&self) -> (usize, usize) {
        let mut out = (0, 0);
        for word in self.terms.keys() {
            for l in word {
                match *l {
                    Letter::Z(k) => out.0 = out.0.max(k + 1),
                    Letter::W(k) => out.1 = out.1.max(k + 1),
                }
            }
        }
        out
    }

    /// Commutative image: letters sorted, coefficients combined.
    pub fn abelianize(&self, m: usize, n: usize) -> Result<CommutativePolynomial> {
        let mut out = CommutativePolynomial::zero(m, n);
        for (word, &c) in &self.terms {
            let mut exps = vec![0u32; m + n];
            for l in word {
                match *l {
                    Letter::Z(k) if k < m => exps[k] += 1,
                    Letter::W(k) if k < n => exps[m + k] += 1,
                    other => return Err(Error::BadLetter(other.to_string())),
                }
            }
            out.add_term(exps, c);
        }
        Ok(out)
    }
}

impl fmt::Display for NCPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (word, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i) {}", c.re, c.im, format_word(word))?;
        }
        Ok(())
    }
}

/// A vector in the algebraic Fock space, one component per degree.
pub type GradedVector = BTreeMap<Degree, ComplexVector>;

fn unit(d: usize, k: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d);
    v[k] = ONE;
    v
}

fn letter_vector(cr: &CommutationRelation, letter: Letter) -> Result<(Degree, ComplexVector)> {
    match letter {
        Letter::Z(k) if k < cr.m() => Ok(((1, 0), unit(cr.m(), k))),
        Letter::W(k) if k < cr.n() => Ok(((0, 1), unit(cr.n(), k))),
        other => Err(Error::BadLetter(other.to_string())),
    }
}

/// Image of a word under `z_i ↦ e_i`, `w_j ↦ f_j` with the Fock product.
pub fn phi_word(word: &[Letter], cr: &CommutationRelation) -> Result<(Degree, ComplexVector)> {
    let mut degree = (0, 0);
    let mut v = ComplexVector::from_element(1, ONE);
    for &letter in word {
        let (ld, lv) = letter_vector(cr, letter)?;
        v = cr.fock_product(degree, &v, ld, &lv)?;
        degree = (degree.0 + ld.0, degree.1 + ld.1);
    }
    Ok((degree, v))
}

/// `Φ`: evaluate every word in the algebraic Fock space.
pub fn phi_map(p: &NCPolynomial, cr: &CommutationRelation) -> Result<GradedVector> {
    let mut out = GradedVector::new();
    for (word, &c) in p.terms() {
        let (degree, v) = phi_word(word, cr)?;
        let entry = out
            .entry(degree)
            .or_insert_with(|| ComplexVector::zeros(v.len()));
        *entry += v * c;
    }
    Ok(out)
}

/// `Ψ`: `e_{s_1}⊗…⊗f_{t_j} ↦ z_{s_1}…w_{t_j}`, extended linearly.
pub fn psi_map(x: &GradedVector, m: usize, n: usize) -> NCPolynomial {
    let mut out = NCPolynomial::zero();
    for (&degree, v) in x {
        let index = TensorIndex::new(m, n, degree);
        for (flat, &c) in v.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            let word = index
                .word(flat)
                .into_iter()
                .enumerate()
                .map(|(pos, s)| {
                    if pos < degree.0 {
                        Letter::Z(s)
                    } else {
                        Letter::W(s)
                    }
                })
                .collect();
            out.add_term(word, c);
        }
    }
    out
}

/// `P_{i,j} = w_j z_i − Σ_{k,l} u_{(k,l),(i,j)} z_k w_l`, ordered by `i` then `j`.
pub fn commutation_generators(cr: &CommutationRelation) -> Vec<NCPolynomial> {
    let mut out = Vec::with_capacity(cr.m() * cr.n());
    for i in 0..cr.m() {
        for j in 0..cr.n() {
            let mut p = NCPolynomial::monomial(vec![Letter::W(j), Letter::Z(i)], ONE);
            for k in 0..cr.m() {
                for l in 0..cr.n() {
                    let c = cr.coeff(k, l, i, j);
                    p.add_term(vec![Letter::Z(k), Letter::W(l)], -c);
                }
            }
            out.push(p);
        }
    }
    out
}

/// Result of translating an ideal into a subproduct system.
#[derive(Clone, Debug)]
pub struct IdealSystem {
    pub system: SubproductSystem,
    /// Some `P_{i,j}` was not already in the span of the degree-(1,1)
    /// generators, so the ideal was enlarged.
    pub commutators_added: bool,
}

fn stack(cols: &[ComplexMatrix], rows: usize) -> ComplexMatrix {
    let total: usize = cols.iter().map(|c| c.ncols()).sum();
    let mut out = ComplexMatrix::zeros(rows, total);
    let mut at = 0;
    for c in cols {
        out.columns_mut(at, c.ncols()).copy_from(c);
        at += c.ncols();
    }
    out
}

/// The subproduct system whose fibers are the orthogonal complements of the
/// graded components of the ideal generated by `generators` and the `P_{i,j}`.
pub fn ideal_to_subproduct(
    generators: &[NCPolynomial],
    cr: &CommutationRelation,
    max_degree: usize,
    tol: f64,
) -> Result<IdealSystem> {
    let (m, n) = (cr.m(), cr.n());
    let mut by_degree: BTreeMap<Degree, Vec<ComplexVector>> = BTreeMap::new();
    let mut user_11: Vec<ComplexVector> = Vec::new();
    let mixed_words: Vec<Word> = (0..m)
        .flat_map(|k| (0..n).map(move |l| vec![Letter::Z(k), Letter::W(l)]))
        .chain((0..n).flat_map(|l| (0..m).map(move |k| vec![Letter::W(l), Letter::Z(k)])))
        .collect();
    let coords = |p: &NCPolynomial| {
        ComplexVector::from_iterator(mixed_words.len(), mixed_words.iter().map(|w| p.coeff(w)))
    };
    for (index, g) in generators.iter().enumerate() {
        if g.is_zero() {
            continue;
        }
        let degree = g.is_homogeneous().ok_or(Error::NotHomogeneous { index })?;
        match degree {
            (0, 0) => return Err(Error::ImproperIdeal),
            (1, 0) | (0, 1) => return Err(Error::DegreeOneGenerator { index, degree }),
            _ => {}
        }
        let (zs, ws) = g.alphabet_size();
        if zs > m || ws > n {
            let letter = if zs > m {
                Letter::Z(zs - 1)
            } else {
                Letter::W(ws - 1)
            };
            return Err(Error::BadLetter(letter.to_string()));
        }
        if degree == (1, 1) {
            user_11.push(coords(g));
        }
        if degree.0 + degree.1 > max_degree {
            continue;
        }
        for (d, v) in phi_map(g, cr)? {
            by_degree.entry(d).or_default().push(v);
        }
    }

    let commutators = commutation_generators(cr);
    let span_11 = if user_11.is_empty() {
        ComplexMatrix::zeros(mixed_words.len(), 0)
    } else {
        range_basis(&ComplexMatrix::from_columns(&user_11), tol)
    };
    let commutators_added = commutators.iter().any(|p| {
        let v = coords(p);
        let residual = &v - &span_11 * (span_11.adjoint() * &v);
        residual.norm() > tol * v.norm().max(1.0)
    });
    if max_degree >= 2 {
        for p in &commutators {
            for (d, v) in phi_map(p, cr)? {
                by_degree.entry(d).or_default().push(v);
            }
        }
    }

    let letters_e: Vec<ComplexMatrix> = (0..m)
        .map(|k| ComplexMatrix::from_column_slice(m, 1, unit(m, k).as_slice()))
        .collect();
    let letters_f: Vec<ComplexMatrix> = (0..n)
        .map(|k| ComplexMatrix::from_column_slice(n, 1, unit(n, k).as_slice()))
        .collect();

    // orthonormal basis of the ideal component at every degree
    let mut component: BTreeMap<Degree, ComplexMatrix> = BTreeMap::new();
    let mut proj = BTreeMap::new();
    for degree in graded_degrees(max_degree) {
        let d = cr.dim(degree);
        let mut parts: Vec<ComplexMatrix> = Vec::new();
        if let Some(vs) = by_degree.get(&degree) {
            parts.push(ComplexMatrix::from_columns(vs));
        }
        let (i, j) = degree;
        if i > 0 {
            let below = (i - 1, j);
            let mb = &component[&below];
            if mb.ncols() > 0 {
                for e in &letters_e {
                    parts.push(kron(e, mb));
                    let w = cr.big_w_shared(below, (1, 0))?;
                    parts.push(&*w * kron(mb, e));
                }
            }
        }
        if j > 0 {
            let below = (i, j - 1);
            let mb = &component[&below];
            if mb.ncols() > 0 {
                for f in &letters_f {
                    let w = cr.big_w_shared((0, 1), below)?;
                    parts.push(&*w * kron(f, mb));
                    parts.push(kron(mb, f));
                }
            }
        }
        let span = if parts.is_empty() {
            ComplexMatrix::zeros(d, 0)
        } else {
            range_basis(&stack(&parts, d), tol)
        };
        let p = identity(d) - projection_onto_columns(&span, tol);
        if degree.0 + degree.1 <= 1 && rank(&p, tol) < d {
            return Err(Error::ImproperIdeal);
        }
        let p = if span.ncols() == 0 { identity(d) } else { p };
        proj.insert(degree, p);
        component.insert(degree, span);
    }
    let system = SubproductSystem::new(cr.clone(), max_degree, proj)?;
    Ok(IdealSystem {
        system,
        commutators_added,
    })
}

/// Generators of the ideal of a system: the `P_{i,j}` followed by `Ψ` of an
/// orthonormal basis of every complement fiber, in graded order.
pub fn subproduct_to_ideal(sps: &SubproductSystem, tol: f64) -> Result<Vec<NCPolynomial>> {
    let (m, n) = (sps.m(), sps.n());
    let mut out = commutation_generators(sps.cr());
    for degree in sps.degrees() {
        if degree.0 + degree.1 < 2 {
            continue;
        }
        let basis = sps.complement_basis(degree, tol)?;
        for col in basis.column_iter() {
            let mut x = GradedVector::new();
            x.insert(degree, col.into_owned());
            out.push(psi_map(&x, m, n).prune(tol * 1e-3));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subproduct::random_system;
    use crate::tensor_linalg::{max_abs, random_complex, random_unitary, random_vector};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn word(s: &str) -> Word {
        parse_word(s).unwrap()
    }

    fn poly(terms: &[(&str, Complex64)]) -> NCPolynomial {
        NCPolynomial::from_terms(terms.iter().map(|(w, c)| (word(w), *c)))
    }

    fn random_cr(m: usize, n: usize, rng: &mut ChaCha8Rng) -> CommutationRelation {
        CommutationRelation::new(m, n, random_unitary(m * n, rng), 1e-9).unwrap()
    }

    #[test]
    fn words_parse_and_print() {
        assert_eq!(
            word("z1w2z1"),
            vec![Letter::Z(0), Letter::W(1), Letter::Z(0)]
        );
        assert_eq!(word(""), vec![]);
        assert_eq!(format_word(&word("w10z3")), "w10z3");
        assert!(parse_word("z0").is_err());
        assert!(parse_word("x1").is_err());
        assert!(parse_word("z").is_err());
    }

    #[test]
    fn homogeneity() {
        // wzw + z²w is not homogeneous
        assert_eq!(
            poly(&[("w1z1w1", ONE), ("z1z1w1", ONE)]).is_homogeneous(),
            None
        );
        // w z1 w z2 + z1² w² has letter counts (2, 2)
        let p = poly(&[("w1z1w1z2", ONE), ("z1z1w1w1", ONE)]);
        assert_eq!(p.is_homogeneous(), Some((2, 2)));
        assert_eq!(NCPolynomial::constant(ONE).is_homogeneous(), Some((0, 0)));
        assert_eq!(NCPolynomial::zero().is_homogeneous(), None);
    }

    #[test]
    fn phi_of_letters_and_flip_words() {
        let cr = CommutationRelation::flip(2, 1);
        let x = phi_map(&NCPolynomial::z(0), &cr).unwrap();
        assert_eq!(x[&(1, 0)], unit(2, 0));
        // z1 w1 z2 ↦ e1 ⊗ e2 ⊗ f1 after one transposition
        let x = phi_map(&poly(&[("z1w1z2", ONE)]), &cr).unwrap();
        let index = TensorIndex::new(2, 1, (2, 1));
        assert_eq!(x[&(2, 1)], unit(4, index.flat(&[0, 1, 0])));
        assert!(phi_map(&NCPolynomial::w(1), &cr).is_err());
    }

    #[test]
    fn commutation_generators_shape() {
        let flip = CommutationRelation::flip(2, 2);
        for (k, p) in commutation_generators(&flip).iter().enumerate() {
            let (i, j) = (k / 2, k % 2);
            let expected = poly(&[])
                .add(&NCPolynomial::monomial(
                    vec![Letter::W(j), Letter::Z(i)],
                    ONE,
                ))
                .sub(&NCPolynomial::monomial(
                    vec![Letter::Z(i), Letter::W(j)],
                    ONE,
                ));
            assert_eq!(p, &expected);
        }
        let lambda = c(0.6, 0.8);
        let scalar = CommutationRelation::scalar(lambda).unwrap();
        let p = &commutation_generators(&scalar)[0];
        assert_eq!(p, &poly(&[("w1z1", ONE), ("z1w1", -lambda)]));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cr = random_cr(2, 3, &mut rng);
        let gens = commutation_generators(&cr);
        assert_eq!(gens.len(), 6);
        assert!(gens.iter().all(|g| g.terms().len() <= 7));
    }

    #[test]
    fn commutation_generators_vanish_under_phi() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cr = random_cr(2, 2, &mut rng);
        for p in commutation_generators(&cr) {
            let x = phi_map(&p, &cr).unwrap();
            assert!(x[&(1, 1)].norm() < 1e-12);
        }
    }

    #[test]
    fn abelianization_examples() {
        let p = poly(&[("z1z2", ONE), ("z2z1", -ONE)]);
        assert!(p.abelianize(2, 0).unwrap().is_zero());
        let lambda = c(0.0, 1.0);
        let q = poly(&[("w1z1", ONE), ("z1w1", -lambda)])
            .abelianize(1, 1)
            .unwrap();
        assert_eq!(q.terms().len(), 1);
        assert_eq!(q.coeff(&[1, 1]), ONE - lambda);
        let r = poly(&[("z1w1z1", ONE)]).abelianize(1, 1).unwrap();
        assert_eq!(r.coeff(&[2, 1]), ONE);
    }

    #[test]
    fn psi_examples() {
        let mut x = GradedVector::new();
        x.insert((1, 1), unit(2, 1)); // e1 ⊗ f2 with m = 1, n = 2
        assert_eq!(psi_map(&x, 1, 2), poly(&[("z1w2", ONE)]));
        let mut delta = GradedVector::new();
        delta.insert((0, 0), unit(1, 0));
        assert_eq!(psi_map(&delta, 1, 2), NCPolynomial::constant(ONE));
    }

    #[test]
    fn empty_ideal_gives_full_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cr = random_cr(2, 1, &mut rng);
        let out = ideal_to_subproduct(&[], &cr, 3, TOL).unwrap();
        assert!(out.commutators_added);
        for d in out.system.degrees() {
            assert_eq!(out.system.fiber_dim(d, TOL).unwrap(), cr.dim(d));
        }
    }

    #[test]
    fn all_quadratic_words_give_truncated_linear() {
        let cr = CommutationRelation::flip(2, 1);
        let gens: Vec<NCPolynomial> = [
            "z1z1", "z1z2", "z2z1", "z2z2", "z1w1", "z2w1", "w1z1", "w1z2", "w1w1",
        ]
        .iter()
        .map(|w| poly(&[(w, ONE)]))
        .collect();
        let out = ideal_to_subproduct(&gens, &cr, 4, TOL).unwrap();
        assert!(!out.commutators_added);
        let x = SubproductSystem::truncated_linear(2, 1, 4);
        assert_eq!(out.system.dimension_profile(TOL), x.dimension_profile(TOL));
    }

    #[test]
    fn zw_generator_gives_axes_only() {
        let cr = CommutationRelation::scalar(ONE).unwrap();
        let out = ideal_to_subproduct(&[poly(&[("z1w1", ONE)])], &cr, 4, TOL).unwrap();
        for ((i, j), r) in out.system.dimension_profile(TOL) {
            assert_eq!(r, usize::from(i == 0 || j == 0), "degree {:?}", (i, j));
        }
    }

    #[test]
    fn rejected_generators() {
        let cr = CommutationRelation::flip(1, 1);
        assert!(matches!(
            ideal_to_subproduct(&[NCPolynomial::constant(ONE)], &cr, 2, TOL),
            Err(Error::ImproperIdeal)
        ));
        assert!(matches!(
            ideal_to_subproduct(&[NCPolynomial::z(0)], &cr, 2, TOL),
            Err(Error::DegreeOneGenerator {
                index: 0,
                degree: (1, 0)
            })
        ));
        assert!(matches!(
            ideal_to_subproduct(
                &[
                    NCPolynomial::zero(),
                    poly(&[("w1z1w1", ONE), ("z1z1w1", ONE)])
                ],
                &cr,
                2,
                TOL
            ),
            Err(Error::NotHomogeneous { index: 1 })
        ));
    }

    #[test]
    fn truncated_linear_ideal_is_everything_in_degree_two() {
        let x = SubproductSystem::truncated_linear(1, 1, 3);
        let gens = subproduct_to_ideal(&x, TOL).unwrap();
        // P plus one polynomial per word of degree two and three
        assert_eq!(gens.len(), 1 + 3 + 4);
        let back = ideal_to_subproduct(&gens, x.cr(), 3, TOL).unwrap();
        assert_eq!(back.system.dimension_profile(TOL), x.dimension_profile(TOL));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn phi_after_psi_is_identity(seed in any::<u64>(), m in 1usize..3, n in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cr = random_cr(m, n, &mut rng);
            let mut x = GradedVector::new();
            for d in graded_degrees(3) {
                x.insert(d, random_vector(cr.dim(d), &mut rng));
            }
            let back = phi_map(&psi_map(&x, m, n), &cr).unwrap();
            for (d, v) in &x {
                prop_assert!((&back[d] - v).norm() < 1e-12);
            }
        }

        #[test]
        fn ideal_round_trip(seed in any::<u64>(), m in 1usize..3, n in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cr = random_cr(m, n, &mut rng);
            let x = random_system(&cr, 4, TOL, &mut rng).unwrap();
            let gens = subproduct_to_ideal(&x, TOL).unwrap();
            let back = ideal_to_subproduct(&gens, &cr, 4, TOL).unwrap();
            prop_assert!(!back.commutators_added);
            for d in x.degrees() {
                let diff = max_abs(&(x.projection(d).unwrap() - back.system.projection(d).unwrap()));
                prop_assert!(diff < 1e-7, "{:?}: {}", d, diff);
            }
        }

        #[test]
        fn adding_a_generator_never_grows_fibers(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cr = random_cr(2, 1, &mut rng);
            let x = random_system(&cr, 4, TOL, &mut rng).unwrap();
            let mut gens = subproduct_to_ideal(&x, TOL).unwrap();
            let degree = [(2, 0), (1, 1), (0, 2), (2, 1), (1, 2), (3, 0)][rand::Rng::random_range(&mut rng, 0..6)];
            let index = TensorIndex::new(2, 1, degree);
            let extra = NCPolynomial::from_terms(index.words().take(3).map(|w| {
                let word = w.into_iter().enumerate().map(|(pos, s)| if pos < degree.0 { Letter::Z(s) } else { Letter::W(s) }).collect();
                (word, random_complex(&mut rng))
            }));
            gens.push(extra);
            let smaller = ideal_to_subproduct(&gens, &cr, 4, TOL).unwrap().system;
            for d in x.degrees() {
                prop_assert!(smaller.fiber_dim(d, TOL).unwrap() <= x.fiber_dim(d, TOL).unwrap());
            }
        }
    }
}
