//! Commutative polynomials, the polyball variety of a subproduct system and
//! the cross `𝒞^{m,n}`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::commutation::Degree;
use crate::error::{Error, Result};
use crate::ncpoly::commutation_generators;
use crate::subproduct::SubproductSystem;
use crate::tensor_linalg::{ComplexVector, TensorIndex, ONE, ZERO};

/// Polynomial in `ℂ[z_1..z_m, w_1..w_n]`; exponent vectors list the `z`
/// exponents first.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutativePolynomial {
    m: usize,
    n: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

impl CommutativePolynomial {
    pub fn zero(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(m: usize, n: usize, exps: Vec<u32>, c: Complex64) -> Self {
        let mut p = Self::zero(m, n);
        p.add_term(exps, c);
        p
    }

    pub fn constant(m: usize, n: usize, c: Complex64) -> Self {
        Self::monomial(m, n, vec![0; m + n], c)
    }

    /// The coordinate `z_k` (0-based).
    pub fn z(m: usize, n: usize, k: usize) -> Self {
        let mut e = vec![0; m + n];
        e[k] = 1;
        Self::monomial(m, n, e, ONE)
    }

    /// The coordinate `w_k` (0-based).
    pub fn w(m: usize, n: usize, k: usize) -> Self {
        let mut e = vec![0; m + n];
        e[m + k] = 1;
        Self::monomial(m, n, e, ONE)
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: Complex64) {
        assert_eq!(exps.len(), self.m + self.n, "exponent vector length");
        let entry = self.terms.entry(exps.clone()).or_insert(ZERO);
        *entry += c;
        if *entry == ZERO {
            self.terms.remove(&exps);
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, Complex64> {
        &self.terms
    }

    pub fn coeff(&self, exps: &[u32]) -> Complex64 {
        self.terms.get(exps).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn term_degree(&self, exps: &[u32]) -> Degree {
        let z: u32 = exps[..self.m].iter().sum();
        let w: u32 = exps[self.m..].iter().sum();
        (z as usize, w as usize)
    }

    /// Common `(z-degree, w-degree)` of all monomials; none for zero.
    pub fn homogeneous_degree(&self) -> Option<Degree> {
        let mut it = self.terms.keys().map(|e| self.term_degree(e));
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    /// Smallest total degree of a monomial.
    pub fn min_total_degree(&self) -> Option<usize> {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>() as usize)
            .min()
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.m, self.n);
        for (e, &v) in &self.terms {
            out.add_term(e.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.m, self.n);
        for (a, &x) in &self.terms {
            for (b, &y) in &other.terms {
                let e = a.iter().zip(b).map(|(p, q)| p + q).collect();
                out.add_term(e, x * y);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.m, self.n, ONE);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Drop terms with `|c| ≤ tol`.
    pub fn prune(&self, tol: f64) -> Self {
        let mut out = Self::zero(self.m, self.n);
        for (e, &c) in &self.terms {
            if c.norm() > tol {
                out.terms.insert(e.clone(), c);
            }
        }
        out
    }

    /// Rescaled so the largest coefficient has modulus one.
    pub fn normalized(&self) -> Self {
        let top = self.max_coeff();
        if top == 0.0 {
            return self.clone();
        }
        self.scale(Complex64::new(1.0 / top, 0.0))
    }

    /// `∂/∂x_var` where variables are numbered `z_1..z_m, w_1..w_n`.
    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.m, self.n);
        for (e, &c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[var] -= 1;
            out.add_term(d, c * Complex64::new(e[var] as f64, 0.0));
        }
        out
    }

    /// Evaluate at a point given as `z_1..z_m, w_1..w_n`.
    pub fn eval_coords(&self, coords: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, &c)| {
                e.iter()
                    .zip(coords)
                    .fold(c, |acc, (&k, &x)| acc * x.powu(k))
            })
            .sum()
    }

    pub fn eval(&self, pt: &PolyballPoint) -> Complex64 {
        self.eval_coords(&pt.coords())
    }
}

impl fmt::Display for CommutativePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for (v, &p) in e.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                let name = if v < self.m {
                    format!("z{}", v + 1)
                } else {
                    format!("w{}", v - self.m + 1)
                };
                if p == 1 {
                    write!(f, " {name}")?;
                } else {
                    write!(f, " {name}^{p}")?;
                }
            }
        }
        Ok(())
    }
}

/// A point `(z, w) ∈ ℂ^m × ℂ^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyballPoint {
    pub z: Vec<Complex64>,
    pub w: Vec<Complex64>,
}

impl PolyballPoint {
    pub fn new(z: Vec<Complex64>, w: Vec<Complex64>) -> Self {
        Self { z, w }
    }

    pub fn origin(m: usize, n: usize) -> Self {
        Self::new(vec![ZERO; m], vec![ZERO; n])
    }

    pub fn coords(&self) -> Vec<Complex64> {
        self.z.iter().chain(&self.w).copied().collect()
    }

    pub fn z_norm(&self) -> f64 {
        self.z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn w_norm(&self) -> f64 {
        self.w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `(λ₁ z, λ₂ w)`.
    pub fn scaled(&self, l1: Complex64, l2: Complex64) -> Self {
        Self::new(
            self.z.iter().map(|&c| c * l1).collect(),
            self.w.iter().map(|&c| c * l2).collect(),
        )
    }
}

/// `max(‖z‖, ‖w‖)`.
pub fn polyball_norm(pt: &PolyballPoint) -> f64 {
    pt.z_norm().max(pt.w_norm())
}

/// `q^x = Σ x_{s,t} z_{s_1}…z_{s_i} w_{t_1}…w_{t_j}` for `x ∈ E^{⊗i} ⊗ F^{⊗j}`.
pub fn qx_polynomial(
    m: usize,
    n: usize,
    degree: Degree,
    x: &ComplexVector,
) -> Result<CommutativePolynomial> {
    let index = TensorIndex::new(m, n, degree);
    if x.len() != index.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} at degree {degree:?} (expected {})",
            x.len(),
            index.dim()
        )));
    }
    let mut out = CommutativePolynomial::zero(m, n);
    for (flat, &c) in x.iter().enumerate() {
        if c == ZERO {
            continue;
        }
        let mut exps = vec![0u32; m + n];
        for (pos, s) in index.word(flat).into_iter().enumerate() {
            if pos < degree.0 {
                exps[s] += 1;
            } else {
                exps[m + s] += 1;
            }
        }
        out.add_term(exps, c);
    }
    Ok(out)
}

/// Rescale to unit max coefficient and drop negligible terms; `None` when
/// the polynomial is numerically zero.
fn clean(p: &CommutativePolynomial, tol: f64) -> Option<CommutativePolynomial> {
    if p.max_coeff() <= tol {
        return None;
    }
    let q = p.normalized().prune(tol);
    (!q.is_zero()).then_some(q)
}

/// Generators of `J_X`: the abelianized `P_{i,j}` and `q^x` over orthonormal
/// bases of the complement fibers, normalized, zeros dropped.
pub fn variety_generators(sps: &SubproductSystem, tol: f64) -> Result<Vec<CommutativePolynomial>> {
    let (m, n) = (sps.m(), sps.n());
    let mut out = Vec::new();
    for p in commutation_generators(sps.cr()) {
        if let Some(q) = clean(&p.abelianize(m, n)?, tol) {
            out.push(q);
        }
    }
    for degree in sps.degrees() {
        if degree.0 + degree.1 < 2 {
            continue;
        }
        let basis = sps.complement_basis(degree, tol)?;
        for col in basis.column_iter() {
            let q = qx_polynomial(m, n, degree, &col.into_owned())?;
            if let Some(q) = clean(&q, tol) {
                out.push(q);
            }
        }
    }
    Ok(out)
}

/// `‖z‖, ‖w‖ ≤ 1 + tol` and `|g(pt)| ≤ tol` for every generator.
pub fn polyball_membership(pt: &PolyballPoint, gens: &[CommutativePolynomial], tol: f64) -> bool {
    pt.z_norm() <= 1.0 + tol
        && pt.w_norm() <= 1.0 + tol
        && gens.iter().all(|g| g.eval(pt).norm() <= tol)
}

/// Value of the character at `pt` on `L_x`, with a flag telling whether the
/// point actually lies in the variety. Boundary points are evaluated
/// formally.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CharacterValue {
    pub value: Complex64,
    pub in_variety: bool,
}

pub fn character_eval(
    pt: &PolyballPoint,
    degree: Degree,
    x: &ComplexVector,
    gens: &[CommutativePolynomial],
    tol: f64,
) -> Result<CharacterValue> {
    let q = qx_polynomial(pt.z.len(), pt.w.len(), degree, x)?;
    Ok(CharacterValue {
        value: q.eval(pt),
        in_variety: polyball_membership(pt, gens, tol),
    })
}

/// `(w = 0, ‖z‖ ≤ 1)` or `(z = 0, ‖w‖ ≤ 1)`.
pub fn in_c_set(pt: &PolyballPoint, tol: f64) -> bool {
    let (zn, wn) = (pt.z_norm(), pt.w_norm());
    (wn <= tol && zn <= 1.0 + tol) || (zn <= tol && wn <= 1.0 + tol)
}

/// Every generator has positive `z`- and `w`-degree.
pub fn is_good_generators(gens: &[CommutativePolynomial]) -> bool {
    gens.iter().all(|g| {
        g.terms().keys().all(|e| {
            let (a, b) = g.term_degree(e);
            a > 0 && b > 0
        })
    })
}

pub fn is_good(sps: &SubproductSystem, tol: f64) -> Result<bool> {
    Ok(is_good_generators(&variety_generators(sps, tol)?))
}

fn unit_ball<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Complex64> {
    if d == 0 {
        return Vec::new();
    }
    let g: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let radius = rng.random::<f64>().powf(1.0 / (2 * d) as f64);
    g.into_iter().map(|c| c * (radius / norm)).collect()
}

/// Uniform point of the product of unit balls.
pub fn sample_polyball<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> PolyballPoint {
    PolyballPoint::new(unit_ball(m, rng), unit_ball(n, rng))
}

/// Point of `𝒞^{m,n}`, on either arm with equal probability.
pub fn sample_c_set<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> PolyballPoint {
    let first = if m == 0 {
        false
    } else if n == 0 {
        true
    } else {
        rng.random_bool(0.5)
    };
    if first {
        PolyballPoint::new(unit_ball(m, rng), vec![ZERO; n])
    } else {
        PolyballPoint::new(vec![ZERO; m], unit_ball(n, rng))
    }
}

/// A third each of `𝒞₁`, `𝒞₂` and generic polyball points.
pub fn sample_mixed<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    count: usize,
    rng: &mut R,
) -> Vec<PolyballPoint> {
    (0..count)
        .map(|k| match k % 3 {
            0 if m > 0 => PolyballPoint::new(unit_ball(m, rng), vec![ZERO; n]),
            1 if n > 0 => PolyballPoint::new(vec![ZERO; m], unit_ball(n, rng)),
            _ => sample_polyball(m, n, rng),
        })
        .collect()
}
