//! Isomorphism invariants: the pair `(m + n, k_X)`, the truncated
//! homomorphisms into `ℂ_k[t]`, root multiplicities and a numerical search
//! for isomorphisms between two truncated systems.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::commutation::Degree;
use crate::error::{Error, Result};
use crate::ncpoly::{Letter, NCPolynomial};
use crate::subproduct::{graded_degrees, lifted_kron, proper_splits, SubproductSystem};
use crate::tensor_linalg::{
    identity, kron, kron_all, max_abs, polar_unitary, random_unitary, ComplexMatrix, ONE, ZERO,
};
use crate::variety::{
    polyball_membership, variety_generators, CommutativePolynomial, PolyballPoint,
};

/// Element of `ℂ_k[t] = ℂ[t]/(t^k)`, stored as its `k` lowest coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedPolynomial {
    coeffs: Vec<Complex64>,
}

impl TruncatedPolynomial {
    pub fn zero(k: usize) -> Self {
        Self {
            coeffs: vec![ZERO; k],
        }
    }

    pub fn constant(k: usize, c: Complex64) -> Self {
        let mut out = Self::zero(k);
        if k > 0 {
            out.coeffs[0] = c;
        }
        out
    }

    /// Truncates (or zero-pads) `coeffs` to length `k`.
    pub fn from_coeffs(k: usize, mut coeffs: Vec<Complex64>) -> Self {
        coeffs.resize(k, ZERO);
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        Self {
            coeffs: (0..k).map(|i| self.coeffs[i] + other.coeffs[i]).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        let mut coeffs = vec![ZERO; k];
        for (i, a) in self.coeffs.iter().enumerate().take(k) {
            for (j, b) in other.coeffs.iter().enumerate().take(k - i) {
                coeffs[i + j] += a * b;
            }
        }
        Self { coeffs }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::constant(self.order(), ONE);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }
}

impl fmt::Display for TruncatedPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(i, c)| match i {
                0 => format!("({c})"),
                1 => format!("({c})t"),
                _ => format!("({c})t^{i}"),
            })
            .collect();
        if parts.is_empty() {
            write!(f, "0 mod t^{}", self.order())
        } else {
            write!(f, "{} mod t^{}", parts.join(" + "), self.order())
        }
    }
}

/// `k_X`: the lowest total degree in the ideal, or a lower bound when the
/// truncation shows no generator at all.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KX {
    Finite(usize),
    AtLeast(usize),
}

impl KX {
    /// Whether `k ≤ k_X` is certain.
    pub fn admits(&self, k: usize) -> bool {
        match *self {
            KX::Finite(v) | KX::AtLeast(v) => k <= v,
        }
    }
}

impl fmt::Display for KX {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KX::Finite(v) => write!(f, "{v}"),
            KX::AtLeast(v) => write!(f, "≥{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct InvariantPair {
    pub dim_sum: usize,
    pub k_x: KX,
}

impl InvariantPair {
    /// `Some(false)` if the invariants certainly differ, `Some(true)` if they
    /// certainly agree, `None` when a lower bound leaves it open.
    pub fn agrees(&self, other: &Self) -> Option<bool> {
        if self.dim_sum != other.dim_sum {
            return Some(false);
        }
        match (self.k_x, other.k_x) {
            (KX::Finite(a), KX::Finite(b)) => Some(a == b),
            (KX::Finite(a), KX::AtLeast(b)) | (KX::AtLeast(b), KX::Finite(a)) => {
                if a < b {
                    Some(false)
                } else {
                    None
                }
            }
            (KX::AtLeast(_), KX::AtLeast(_)) => None,
        }
    }
}

impl fmt::Display for InvariantPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(m+n = {}, k_X = {})", self.dim_sum, self.k_x)
    }
}

pub fn k_x_of_generators(gens: &[CommutativePolynomial], max_degree: usize) -> KX {
    match gens.iter().filter_map(|g| g.min_total_degree()).min() {
        Some(k) => KX::Finite(k),
        None => KX::AtLeast(max_degree + 1),
    }
}

pub fn compute_invariants(sps: &SubproductSystem, tol: f64) -> Result<InvariantPair> {
    let gens = variety_generators(sps, tol)?;
    Ok(InvariantPair {
        dim_sum: sps.m() + sps.n(),
        k_x: k_x_of_generators(&gens, sps.max_degree()),
    })
}

/// The homomorphism `A_X → ℂ_k[t]` sending `z_i ↦ ζ_i t` and
/// `w_j ↦ ζ_{m+j} t`. Only built when `k ≤ k_X` is certain.
#[derive(Clone, Debug)]
pub struct BetaHomomorphism {
    m: usize,
    n: usize,
    zeta: Vec<Complex64>,
    k: usize,
}

impl BetaHomomorphism {
    pub fn new(m: usize, n: usize, zeta: Vec<Complex64>, k: usize, k_x: KX) -> Result<Self> {
        if zeta.len() != m + n {
            return Err(Error::DimensionMismatch(format!(
                "ζ has {} entries, expected m + n = {}",
                zeta.len(),
                m + n
            )));
        }
        if !k_x.admits(k) {
            return Err(Error::OrderExceedsKx {
                k,
                k_x: k_x.to_string(),
            });
        }
        Ok(Self { m, n, zeta, k })
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn apply(&self, p: &NCPolynomial) -> Result<TruncatedPolynomial> {
        let mut coeffs = vec![ZERO; self.k];
        for (word, c) in p.terms() {
            if word.len() >= self.k {
                continue;
            }
            let mut value = *c;
            for letter in word {
                value *= match *letter {
                    Letter::Z(i) if i < self.m => self.zeta[i],
                    Letter::W(j) if j < self.n => self.zeta[self.m + j],
                    _ => return Err(Error::BadLetter(format!("{letter:?}"))),
                };
            }
            coeffs[word.len()] += value;
        }
        Ok(TruncatedPolynomial { coeffs })
    }
}

/// `β_{ζ,k}(p)` for the system `sps`.
pub fn beta_homomorphism(
    sps: &SubproductSystem,
    zeta: Vec<Complex64>,
    k: usize,
    p: &NCPolynomial,
    tol: f64,
) -> Result<TruncatedPolynomial> {
    let inv = compute_invariants(sps, tol)?;
    BetaHomomorphism::new(sps.m(), sps.n(), zeta, k, inv.k_x)?.apply(p)
}

fn total_coeff(p: &CommutativePolynomial) -> f64 {
    p.terms().values().map(|c| c.norm()).sum()
}

fn degree_bound(p: &CommutativePolynomial) -> u32 {
    p.terms()
        .keys()
        .map(|e| e.iter().sum::<u32>())
        .max()
        .unwrap_or(0)
}

/// Whether every partial derivative of order below `k` vanishes at `pt`.
pub fn root_multiplicity_at_least(
    p: &CommutativePolynomial,
    pt: &PolyballPoint,
    k: usize,
    tol: f64,
) -> bool {
    let coords = pt.coords();
    let vars = p.m() + p.n();
    let scale = 1.0 + total_coeff(p) * f64::from(degree_bound(p).max(1)).powi(k as i32);
    let mut level = vec![p.clone()];
    for order in 0..k {
        if level
            .iter()
            .any(|q| q.eval_coords(&coords).norm() > tol * scale)
        {
            return false;
        }
        if order + 1 < k {
            level = level
                .iter()
                .flat_map(|q| (0..vars).map(move |v| q.derivative(v)))
                .filter(|q| !q.is_zero())
                .collect();
        }
    }
    true
}

/// `p(λ + ζ t + c₂ t² + ⋯ + c_{k-1} t^{k-1})` in `ℂ_k[t]`.
pub fn eval_on_curve(
    p: &CommutativePolynomial,
    curve: &[TruncatedPolynomial],
) -> TruncatedPolynomial {
    let k = curve.first().map_or(0, |c| c.order());
    let mut out = TruncatedPolynomial::zero(k);
    for (exps, c) in p.terms() {
        let mut term = TruncatedPolynomial::constant(k, *c);
        for (v, &e) in exps.iter().enumerate() {
            if e > 0 {
                term = term.mul(&curve[v].pow(e));
            }
        }
        out = out.add(&term);
    }
    out
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Whether `p` vanishes to order `k` along `trials` random curves through `pt`.
pub fn curve_criterion<R: Rng + ?Sized>(
    p: &CommutativePolynomial,
    pt: &PolyballPoint,
    k: usize,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> bool {
    if k == 0 {
        return true;
    }
    let base = pt.coords();
    for _ in 0..trials.max(1) {
        let curve: Vec<TruncatedPolynomial> = base
            .iter()
            .map(|&x| {
                let mut coeffs = vec![x];
                coeffs.extend((1..k).map(|_| complex_normal(rng)));
                TruncatedPolynomial::from_coeffs(k, coeffs)
            })
            .collect();
        let spread = curve
            .iter()
            .map(|c| c.max_abs())
            .fold(1.0, f64::max)
            .powi(degree_bound(p) as i32);
        let value = eval_on_curve(p, &curve);
        if !value.is_zero(tol * (1.0 + total_coeff(p)) * spread * (k as f64)) {
            return false;
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MultiplicityCheck {
    pub derivatives: bool,
    pub curves: bool,
}

impl MultiplicityCheck {
    pub fn agrees(&self) -> bool {
        self.derivatives == self.curves
    }
}

/// Runs the derivative test and the curve test side by side.
pub fn multi_equivalence_check<R: Rng + ?Sized>(
    p: &CommutativePolynomial,
    pt: &PolyballPoint,
    k: usize,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> MultiplicityCheck {
    MultiplicityCheck {
        derivatives: root_multiplicity_at_least(p, pt, k, tol),
        curves: curve_criterion(p, pt, k, trials, tol, rng),
    }
}

/// Necessary condition for `pt` to be the image of the vacuum character of a
/// system with invariant `k_Y` under a map into `X`: every generator vanishes
/// to order `k_Y` at `pt`.
pub fn vacuum_image_constraint(
    gens: &[CommutativePolynomial],
    pt: &PolyballPoint,
    k_y: usize,
    tol: f64,
) -> Result<bool> {
    if !polyball_membership(pt, gens, tol) {
        return Err(Error::OutsideVariety);
    }
    Ok(gens
        .iter()
        .all(|g| root_multiplicity_at_least(g, pt, k_y, tol)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `E ↦ E`, `F ↦ F`.
    Identity,
    /// `E ↦ F`, `F ↦ E`.
    Switch,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Identity => "identity",
            Branch::Switch => "switch",
        })
    }
}

impl Branch {
    pub fn apply(self, degree: Degree) -> Degree {
        match self {
            Branch::Identity => degree,
            Branch::Switch => (degree.1, degree.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    pub restarts: usize,
    pub iterations: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            restarts: 50,
            iterations: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub budget: SearchBudget,
    pub seed: u64,
    pub rank_tol: f64,
    /// Largest accepted residual of a verified witness.
    pub witness_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: SearchBudget::default(),
            seed: 0,
            rank_tol: 1e-9,
            witness_tol: 1e-6,
        }
    }
}

/// Unitaries `b: X(1,0) → Y(π(1,0))`, `c: X(0,1) → Y(π(0,1))` generating an
/// isomorphism.
#[derive(Clone, Debug)]
pub struct IsoWitness {
    pub branch: Branch,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchReport {
    pub branch: Branch,
    /// First degree where `dim X(s) ≠ dim Y(π(s))`.
    pub profile_mismatch: Option<Degree>,
    pub restarts_used: usize,
    pub best_objective: Option<f64>,
    pub best_residual: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IsoVerdict {
    Refuted,
    Witness,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct IsoOutcome {
    pub verdict: IsoVerdict,
    pub witness: Option<IsoWitness>,
    pub branches: Vec<BranchReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    B,
    C,
}

/// `L · (⊗ slots) · R`.
struct Term {
    left: ComplexMatrix,
    slots: Vec<Slot>,
    right: ComplexMatrix,
}

/// The objective `Σ_groups ‖Σ_terms L K R‖²_F`.
struct Objective {
    groups: Vec<Vec<Term>>,
}

impl Objective {
    fn build(x: &SubproductSystem, y: &SubproductSystem, branch: Branch) -> Result<Self> {
        let mut groups = Vec::new();
        let (m, n) = (x.m(), x.n());
        for degree in graded_degrees(x.max_degree()) {
            let (i, j) = degree;
            if i + j < 2 {
                continue;
            }
            let px = x.projection(degree)?;
            let py = y.projection(branch.apply(degree))?;
            let dim = px.nrows();
            let trivial =
                |p: &ComplexMatrix| max_abs(p) == 0.0 || max_abs(&(p - identity(dim))) == 0.0;
            if trivial(px) && trivial(py) && (max_abs(px) == 0.0) == (max_abs(py) == 0.0) {
                continue;
            }
            let u = match branch {
                Branch::Identity => identity(dim),
                Branch::Switch => y.cr().lift_m_n(i, j)?,
            };
            let slots: Vec<Slot> = std::iter::repeat_n(Slot::B, i)
                .chain(std::iter::repeat_n(Slot::C, j))
                .collect();
            groups.push(vec![
                Term {
                    left: py * &u,
                    slots: slots.clone(),
                    right: identity(dim),
                },
                Term {
                    left: -u,
                    slots,
                    right: px.clone(),
                },
            ]);
        }
        if m > 0 && n > 0 && x.max_degree() >= 2 {
            let p11 = y.projection((1, 1))?;
            let (ux, uy) = (x.cr().matrix(), y.cr().matrix());
            let dim = m * n;
            let group = match branch {
                Branch::Identity => vec![
                    Term {
                        left: p11 * uy,
                        slots: vec![Slot::C, Slot::B],
                        right: identity(dim),
                    },
                    Term {
                        left: -p11,
                        slots: vec![Slot::B, Slot::C],
                        right: ux.clone(),
                    },
                ],
                Branch::Switch => vec![
                    Term {
                        left: p11.clone(),
                        slots: vec![Slot::C, Slot::B],
                        right: identity(dim),
                    },
                    Term {
                        left: -(p11 * uy),
                        slots: vec![Slot::B, Slot::C],
                        right: ux.clone(),
                    },
                ],
            };
            groups.push(group);
        }
        Ok(Self { groups })
    }

    fn factors<'a>(
        slots: &[Slot],
        b: &'a ComplexMatrix,
        c: &'a ComplexMatrix,
    ) -> Vec<&'a ComplexMatrix> {
        slots
            .iter()
            .map(|s| match s {
                Slot::B => b,
                Slot::C => c,
            })
            .collect()
    }

    fn residuals(&self, b: &ComplexMatrix, c: &ComplexMatrix) -> Vec<ComplexMatrix> {
        self.groups
            .iter()
            .map(|group| {
                let mut acc: Option<ComplexMatrix> = None;
                for term in group {
                    let k = kron_all(Self::factors(&term.slots, b, c));
                    let value = &term.left * k * &term.right;
                    acc = Some(match acc {
                        Some(a) => a + value,
                        None => value,
                    });
                }
                acc.expect("groups are non-empty")
            })
            .collect()
    }

    fn value(&self, b: &ComplexMatrix, c: &ComplexMatrix) -> f64 {
        self.residuals(b, c).iter().map(|r| r.norm_squared()).sum()
    }

    /// Euclidean gradients with respect to `b` and `c`, up to the factor 2.
    fn gradient(&self, b: &ComplexMatrix, c: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
        let mut gb = ComplexMatrix::zeros(b.nrows(), b.ncols());
        let mut gc = ComplexMatrix::zeros(c.nrows(), c.ncols());
        for (group, t) in self.groups.iter().zip(self.residuals(b, c)) {
            for term in group {
                let g = term.left.adjoint() * &t * term.right.adjoint();
                let factors = Self::factors(&term.slots, b, c);
                for (slot, grad) in term.slots.iter().zip(slot_gradients(&g, &factors)) {
                    match slot {
                        Slot::B => gb += grad,
                        Slot::C => gc += grad,
                    }
                }
            }
        }
        (gb, gc)
    }
}

/// For `K = A_1 ⊗ ⋯ ⊗ A_r`, the matrices `g_s` with
/// `⟨G, A_1 ⊗ ⋯ ⊗ dA_s ⊗ ⋯ ⊗ A_r⟩ = ⟨g_s, dA_s⟩`.
fn slot_gradients(g: &ComplexMatrix, factors: &[&ComplexMatrix]) -> Vec<ComplexMatrix> {
    let r = factors.len();
    let dims: Vec<usize> = factors.iter().map(|a| a.nrows()).collect();
    let mut out: Vec<ComplexMatrix> = dims.iter().map(|&d| ComplexMatrix::zeros(d, d)).collect();
    let digits = |mut flat: usize| {
        let mut d = vec![0; r];
        for s in (0..r).rev() {
            d[s] = flat % dims[s];
            flat /= dims[s];
        }
        d
    };
    let row_digits: Vec<Vec<usize>> = (0..g.nrows()).map(digits).collect();
    let col_digits: Vec<Vec<usize>> = (0..g.ncols()).map(digits).collect();
    for (row, rd) in row_digits.iter().enumerate() {
        for (col, cd) in col_digits.iter().enumerate() {
            let entry = g[(row, col)];
            if entry == ZERO {
                continue;
            }
            let vals: Vec<Complex64> = (0..r).map(|s| factors[s][(rd[s], cd[s])]).collect();
            for s in 0..r {
                let mut others = ONE;
                for (t, v) in vals.iter().enumerate() {
                    if t != s {
                        others *= v;
                    }
                }
                out[s][(rd[s], cd[s])] += entry * others.conj();
            }
        }
    }
    out
}

/// `V_{(i,j)}`: `b^{⊗i} ⊗ c^{⊗j}`, followed by `u_Y^{(i,j)}` on the switch branch.
fn lifted_map(
    y: &SubproductSystem,
    branch: Branch,
    degree: Degree,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let (i, j) = degree;
    let k = lifted_kron(b, i, c, j);
    Ok(match branch {
        Branch::Identity => k,
        Branch::Switch => y.cr().lift_m_n(i, j)? * k,
    })
}

/// Largest violation of `V p_X = p_Y V` and of
/// `V_{s+t} U^X_{s,t} = U^Y_{π s, π t} (V_s ⊗ V_t)` over the truncation.
pub fn witness_residual(
    x: &SubproductSystem,
    y: &SubproductSystem,
    branch: Branch,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut maps = std::collections::BTreeMap::new();
    for degree in graded_degrees(x.max_degree()) {
        let v = lifted_map(y, branch, degree, b, c)?;
        let px = x.projection(degree)?;
        let py = y.projection(branch.apply(degree))?;
        worst = worst.max(max_abs(&(py * &v - &v * px)));
        maps.insert(degree, v * px);
    }
    for degree in graded_degrees(x.max_degree()) {
        if degree.0 + degree.1 < 2 {
            continue;
        }
        let v = &maps[&degree];
        for (s, t) in proper_splits(degree) {
            let ux = x.projection(degree)?
                * &*x.cr().big_w_shared(s, t)?
                * kron(x.projection(s)?, x.projection(t)?);
            let uy = y.projection(branch.apply(degree))?
                * &*y.cr().big_w_shared(branch.apply(s), branch.apply(t))?
                * kron(&maps[&s], &maps[&t]);
            worst = worst.max(max_abs(&(v * ux - uy)));
        }
    }
    Ok(worst)
}

fn descend(
    objective: &Objective,
    mut b: ComplexMatrix,
    mut c: ComplexMatrix,
    iterations: usize,
    target: f64,
) -> (ComplexMatrix, ComplexMatrix, f64) {
    let mut f = objective.value(&b, &c);
    let mut eta = 0.5;
    for _ in 0..iterations {
        if f <= target {
            break;
        }
        let before = f;
        for which in [Slot::B, Slot::C] {
            let (gb, gc) = objective.gradient(&b, &c);
            let mut step = eta;
            for _ in 0..40 {
                let (nb, nc) = match which {
                    Slot::B => (
                        polar_unitary(&(&b - &gb * Complex64::from(step))),
                        c.clone(),
                    ),
                    Slot::C => (
                        b.clone(),
                        polar_unitary(&(&c - &gc * Complex64::from(step))),
                    ),
                };
                let nf = objective.value(&nb, &nc);
                if nf < f {
                    b = nb;
                    c = nc;
                    f = nf;
                    eta = (step * 2.0).min(1e3);
                    break;
                }
                step *= 0.5;
            }
        }
        if f >= before {
            break;
        }
    }
    (b, c, f)
}

fn profile_mismatch(
    x: &SubproductSystem,
    y: &SubproductSystem,
    branch: Branch,
    tol: f64,
) -> Result<Option<Degree>> {
    let (mx, my) = (x.dimension_profile(tol), y.dimension_profile(tol));
    for degree in graded_degrees(x.max_degree()) {
        let target = branch.apply(degree);
        if mx.get(&degree) != my.get(&target) {
            return Ok(Some(degree));
        }
    }
    Ok(None)
}

/// Searches for an isomorphism `X → Y` on each branch `π ∈ {id, switch}`.
///
/// A branch is refuted when the dimension profiles disagree under `π`.
/// Otherwise alternating polar-projected gradient steps on `(b, c)` are
/// run from `b = c = I` and then from random unitaries, and any candidate
/// is checked against the full definition before being reported.
pub fn iso_search(
    x: &SubproductSystem,
    y: &SubproductSystem,
    options: &SearchOptions,
) -> Result<IsoOutcome> {
    if x.max_degree() != y.max_degree() {
        return Err(Error::TruncationMismatch(x.max_degree(), y.max_degree()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut branches = Vec::new();
    let mut witness = None;
    let target = (options.witness_tol * 1e-2).powi(2);
    for branch in [Branch::Identity, Branch::Switch] {
        let mut report = BranchReport {
            branch,
            profile_mismatch: profile_mismatch(x, y, branch, options.rank_tol)?,
            restarts_used: 0,
            best_objective: None,
            best_residual: None,
        };
        if report.profile_mismatch.is_some() || witness.is_some() {
            branches.push(report);
            continue;
        }
        let objective = Objective::build(x, y, branch)?;
        let (m, n) = (x.m(), x.n());
        for restart in 0..options.budget.restarts.max(1) {
            let (b0, c0) = if restart == 0 {
                (identity(m), identity(n))
            } else {
                (random_unitary(m, &mut rng), random_unitary(n, &mut rng))
            };
            let (b, c, f) = descend(&objective, b0, c0, options.budget.iterations, target);
            report.restarts_used = restart + 1;
            report.best_objective = Some(report.best_objective.map_or(f, |g: f64| g.min(f)));
            if f.sqrt() > options.witness_tol {
                continue;
            }
            let residual = witness_residual(x, y, branch, &b, &c)?;
            report.best_residual = Some(
                report
                    .best_residual
                    .map_or(residual, |g: f64| g.min(residual)),
            );
            if residual <= options.witness_tol {
                witness = Some(IsoWitness {
                    branch,
                    b,
                    c,
                    residual,
                });
                break;
            }
        }
        branches.push(report);
    }
    let verdict = if witness.is_some() {
        IsoVerdict::Witness
    } else if branches.iter().all(|r| r.profile_mismatch.is_some()) {
        IsoVerdict::Refuted
    } else {
        IsoVerdict::Inconclusive
    };
    Ok(IsoOutcome {
        verdict,
        witness,
        branches,
    })
}
