//! Standard subproduct systems over ℕ×ℕ, truncated at a total degree `D`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::commutation::{CommutationRelation, Degree};
use crate::error::{Error, Result};
use crate::tensor_linalg::{
    complement_basis, hermitian_part, identity, is_projection, kron, max_abs, meet_projections,
    random_subprojection, range_basis, rank, ComplexMatrix,
};

/// All degrees of total degree at most `max_degree`, by total degree and
/// then with the `E`-count descending: `(0,0), (1,0), (0,1), (2,0), (1,1), …`.
pub fn graded_degrees(max_degree: usize) -> Vec<Degree> {
    (0..=max_degree)
        .flat_map(|t| (0..=t).rev().map(move |i| (i, t - i)))
        .collect()
}

/// Splits `degree = left + right` with neither part zero nor all of `degree`.
pub fn proper_splits(degree: Degree) -> Vec<(Degree, Degree)> {
    let (i, j) = degree;
    let mut out = Vec::new();
    for a in 0..=i {
        for b in 0..=j {
            if (a, b) == (0, 0) || (a, b) == degree {
                continue;
            }
            out.push(((a, b), (i - a, j - b)));
        }
    }
    out
}

fn total(degree: Degree) -> usize {
    degree.0 + degree.1
}

/// A downward-closed set of degrees. The base degrees `(0,0)`, `(1,0)`,
/// `(0,1)` are always members.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaircaseSet {
    degrees: BTreeSet<Degree>,
}

impl StaircaseSet {
    pub fn new<I: IntoIterator<Item = Degree>>(degrees: I) -> Result<Self> {
        let mut set: BTreeSet<Degree> = degrees.into_iter().collect();
        set.extend([(0, 0), (1, 0), (0, 1)]);
        for &(i, j) in &set {
            for missing in [(i.wrapping_sub(1), j), (i, j.wrapping_sub(1))] {
                if missing.0 != usize::MAX && missing.1 != usize::MAX && !set.contains(&missing) {
                    return Err(Error::InvalidStaircase {
                        present: (i, j),
                        missing,
                    });
                }
            }
        }
        Ok(Self { degrees: set })
    }

    pub fn base() -> Self {
        Self::new([]).expect("base staircase is downward closed")
    }

    /// The two axes up to total degree `max_degree`.
    pub fn axes(max_degree: usize) -> Self {
        let row = (0..=max_degree).map(|i| (i, 0));
        let col = (0..=max_degree).map(|j| (0, j));
        Self::new(row.chain(col)).expect("axes are downward closed")
    }

    /// Every degree of total degree at most `max_degree`.
    pub fn full(max_degree: usize) -> Self {
        Self::new(graded_degrees(max_degree)).expect("triangle is downward closed")
    }

    pub fn contains(&self, degree: Degree) -> bool {
        self.degrees.contains(&degree)
    }

    pub fn iter(&self) -> impl Iterator<Item = Degree> + '_ {
        self.degrees.iter().copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `p_{(i,j)} ≤ W (p_{left} ⊗ I) W*`
    Left,
    /// `p_{(i,j)} ≤ W (I ⊗ p_{right}) W*`
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NotProjection {
        degree: Degree,
        deviation: f64,
    },
    NotStandard {
        degree: Degree,
        deviation: f64,
    },
    Inequality {
        degree: Degree,
        left: Degree,
        right: Degree,
        side: Side,
        residual: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotProjection { degree, deviation } => {
                write!(
                    f,
                    "p{degree:?} is not a projection (deviation {deviation:.3e})"
                )
            }
            Violation::NotStandard { degree, deviation } => {
                write!(
                    f,
                    "p{degree:?} must be the identity (deviation {deviation:.3e})"
                )
            }
            Violation::Inequality {
                degree,
                left,
                right,
                side,
                residual,
            } => {
                let factor = match side {
                    Side::Left => format!("p{left:?} ⊗ I"),
                    Side::Right => format!("I ⊗ p{right:?}"),
                };
                write!(
                    f,
                    "p{degree:?} ≰ W({factor})W* at split {left:?}+{right:?} (residual {residual:.3e})"
                )
            }
        }
    }
}

/// Every violated invariant, up to the truncation degree.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub max_degree: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid up to degree {}", self.max_degree);
        }
        write!(
            f,
            "{} violation(s) up to degree {}",
            self.violations.len(),
            self.max_degree
        )?;
        for v in &self.violations {
            write!(f, "; {v}")?;
        }
        Ok(())
    }
}

/// Projections `p_{(i,j)}` on `E^{⊗i} ⊗ F^{⊗j}` for `i + j ≤ D`, together
/// with the commutation relation.
#[derive(Clone, Debug)]
pub struct SubproductSystem {
    cr: CommutationRelation,
    max_degree: usize,
    proj: BTreeMap<Degree, ComplexMatrix>,
}

impl SubproductSystem {
    /// Checks that every degree up to `max_degree` has a square projection of
    /// the right size. The subproduct inequalities are checked by
    /// [`validate`](Self::validate), not here.
    pub fn new(
        cr: CommutationRelation,
        max_degree: usize,
        proj: BTreeMap<Degree, ComplexMatrix>,
    ) -> Result<Self> {
        for degree in graded_degrees(max_degree) {
            let p = proj.get(&degree).ok_or(Error::MissingDegree(degree))?;
            let d = cr.dim(degree);
            if p.shape() != (d, d) {
                return Err(Error::DimensionMismatch(format!(
                    "p{degree:?} has shape {:?}, expected {d}×{d}",
                    p.shape()
                )));
            }
        }
        let proj = proj
            .into_iter()
            .filter(|&(degree, _)| total(degree) <= max_degree)
            .collect();
        Ok(Self {
            cr,
            max_degree,
            proj,
        })
    }

    /// The product system `X(i,j) = E^{⊗i} ⊗ F^{⊗j}`.
    pub fn full(cr: CommutationRelation, max_degree: usize) -> Self {
        let proj = graded_degrees(max_degree)
            .into_iter()
            .map(|d| (d, identity(cr.dim(d))))
            .collect();
        Self::new(cr, max_degree, proj).expect("full system is well formed")
    }

    /// Fibers are either everything or zero, according to `keep`. Degrees of
    /// total degree at most one are always kept.
    pub fn from_pattern<F: Fn(Degree) -> bool>(
        cr: CommutationRelation,
        max_degree: usize,
        keep: F,
    ) -> Self {
        let proj = graded_degrees(max_degree)
            .into_iter()
            .map(|d| {
                let dim = cr.dim(d);
                let p = if total(d) <= 1 || keep(d) {
                    identity(dim)
                } else {
                    ComplexMatrix::zeros(dim, dim)
                };
                (d, p)
            })
            .collect();
        Self::new(cr, max_degree, proj).expect("pattern system is well formed")
    }

    /// `X^{m,n}`: `X(1,0) = ℂ^m`, `X(0,1) = ℂ^n` and every fiber of total
    /// degree two or more is zero.
    pub fn truncated_linear(m: usize, n: usize, max_degree: usize) -> Self {
        Self::from_pattern(CommutationRelation::flip(m, n), max_degree, |_| false)
    }

    pub fn cr(&self) -> &CommutationRelation {
        &self.cr
    }

    pub fn m(&self) -> usize {
        self.cr.m()
    }

    pub fn n(&self) -> usize {
        self.cr.n()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn degrees(&self) -> Vec<Degree> {
        graded_degrees(self.max_degree)
    }

    pub fn contains_degree(&self, degree: Degree) -> bool {
        total(degree) <= self.max_degree
    }

    pub fn projection(&self, degree: Degree) -> Result<&ComplexMatrix> {
        self.proj.get(&degree).ok_or(Error::OutsideTruncation {
            degree,
            max_degree: self.max_degree,
        })
    }

    /// Replace one projection, keeping everything else.
    pub fn with_projection(mut self, degree: Degree, p: ComplexMatrix) -> Result<Self> {
        let d = self.cr.dim(degree);
        if !self.contains_degree(degree) {
            return Err(Error::OutsideTruncation {
                degree,
                max_degree: self.max_degree,
            });
        }
        if p.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "p{degree:?} has shape {:?}, expected {d}×{d}",
                p.shape()
            )));
        }
        self.proj.insert(degree, p);
        Ok(self)
    }

    pub fn projections(&self) -> &BTreeMap<Degree, ComplexMatrix> {
        &self.proj
    }

    /// Orthonormal basis (columns) of `X(i,j)`.
    pub fn fiber_basis(&self, degree: Degree, tol: f64) -> Result<ComplexMatrix> {
        Ok(range_basis(self.projection(degree)?, tol))
    }

    /// Orthonormal basis of `E^{⊗i} ⊗ F^{⊗j} ⊖ X(i,j)`.
    pub fn complement_basis(&self, degree: Degree, tol: f64) -> Result<ComplexMatrix> {
        Ok(complement_basis(self.projection(degree)?, tol))
    }

    pub fn fiber_dim(&self, degree: Degree, tol: f64) -> Result<usize> {
        Ok(rank(self.projection(degree)?, tol))
    }

    /// `W (p_a ⊗ p_b) W*` on degree `a + b`.
    pub fn product_projection(&self, a: Degree, b: Degree) -> Result<ComplexMatrix> {
        let pa = self.projection(a)?;
        let pb = self.projection(b)?;
        conjugated_product(&self.cr, a, pa, b, pb)
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        validate_projections(&self.cr, self.max_degree, &self.proj, tol)
    }

    pub fn dimension_profile(&self, tol: f64) -> BTreeMap<Degree, usize> {
        self.proj
            .iter()
            .map(|(&degree, p)| (degree, rank(p, tol)))
            .collect()
    }

    /// The isomorphic copy obtained by moving `E` with the unitary `b` and `F`
    /// with `c`: `u' = (b ⊗ c) u (c ⊗ b)*`, `p'_{(i,j)} = V p_{(i,j)} V*` with
    /// `V = b^{⊗i} ⊗ c^{⊗j}`.
    pub fn transformed(&self, b: &ComplexMatrix, c: &ComplexMatrix, tol: f64) -> Result<Self> {
        let (m, n) = (self.m(), self.n());
        if b.shape() != (m, m) || c.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "change of basis of shapes {:?}, {:?} for m = {m}, n = {n}",
                b.shape(),
                c.shape()
            )));
        }
        let u = kron(b, c) * self.cr.matrix() * kron(c, b).adjoint();
        let cr = CommutationRelation::new(m, n, u, tol)?.with_cell_limit(self.cr.cell_limit());
        let mut proj = BTreeMap::new();
        for (&(i, j), p) in &self.proj {
            let v = lifted_kron(b, i, c, j);
            proj.insert((i, j), hermitian_part(&(&v * p * v.adjoint())));
        }
        Self::new(cr, self.max_degree, proj)
    }

    /// Same system truncated at a lower degree.
    pub fn truncate(&self, max_degree: usize) -> Self {
        let max_degree = max_degree.min(self.max_degree);
        let proj = self
            .proj
            .iter()
            .filter(|&(&d, _)| total(d) <= max_degree)
            .map(|(&d, p)| (d, p.clone()))
            .collect();
        Self {
            cr: self.cr.clone(),
            max_degree,
            proj,
        }
    }
}

/// `b^{⊗i} ⊗ c^{⊗j}`.
pub fn lifted_kron(b: &ComplexMatrix, i: usize, c: &ComplexMatrix, j: usize) -> ComplexMatrix {
    let mut out = identity(1);
    for _ in 0..i {
        out = kron(&out, b);
    }
    for _ in 0..j {
        out = kron(&out, c);
    }
    out
}

fn conjugated_product(
    cr: &CommutationRelation,
    a: Degree,
    pa: &ComplexMatrix,
    b: Degree,
    pb: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let w = cr.big_w_shared(a, b)?;
    Ok(hermitian_part(&(&*w * kron(pa, pb) * w.adjoint())))
}

fn validate_projections(
    cr: &CommutationRelation,
    max_degree: usize,
    proj: &BTreeMap<Degree, ComplexMatrix>,
    tol: f64,
) -> ValidationReport {
    let mut violations = Vec::new();
    for (&degree, p) in proj {
        if !is_projection(p, tol) {
            let deviation = max_abs(&(p - p.adjoint())).max(max_abs(&(p * p - p)));
            violations.push(Violation::NotProjection { degree, deviation });
        }
        if total(degree) <= 1 {
            let deviation = max_abs(&(p - identity(p.nrows())));
            if deviation > tol {
                violations.push(Violation::NotStandard { degree, deviation });
            }
        }
    }
    for (&degree, p) in proj {
        if total(degree) < 2 {
            continue;
        }
        for (left, right) in proper_splits(degree) {
            let (Some(pl), Some(pr)) = (proj.get(&left), proj.get(&right)) else {
                continue;
            };
            let w = match cr.big_w_shared(left, right) {
                Ok(w) => w,
                Err(_) => continue,
            };
            let il = identity(pl.nrows());
            let ir = identity(pr.nrows());
            for (side, factor) in [(Side::Left, kron(pl, &ir)), (Side::Right, kron(&il, pr))] {
                let q = &*w * factor * w.adjoint();
                let residual = max_abs(&(p * q * p - p));
                if residual > tol {
                    violations.push(Violation::Inequality {
                        degree,
                        left,
                        right,
                        side,
                        residual,
                    });
                }
            }
        }
    }
    ValidationReport {
        max_degree,
        violations,
    }
}

/// Meet over all proper splits of `W (p_a ⊗ p_b) W*`.
fn split_meet(
    cr: &CommutationRelation,
    proj: &BTreeMap<Degree, ComplexMatrix>,
    degree: Degree,
    tol: f64,
) -> Result<ComplexMatrix> {
    let mut parts = Vec::new();
    for (a, b) in proper_splits(degree) {
        let pa = proj.get(&a).ok_or(Error::MissingDegree(a))?;
        let pb = proj.get(&b).ok_or(Error::MissingDegree(b))?;
        parts.push(conjugated_product(cr, a, pa, b, pb)?);
    }
    if parts.is_empty() {
        return Ok(identity(cr.dim(degree)));
    }
    meet_projections(&parts, tol)
}

/// The maximal standard subproduct system agreeing with `partial` on the
/// staircase `L`.
///
/// Missing base degrees default to identities. Degrees outside `L` are
/// filled in graded order with the meet of `W (p_a ⊗ p_b) W*` over proper
/// splits.
pub fn maximal_completion(
    cr: &CommutationRelation,
    partial: &BTreeMap<Degree, ComplexMatrix>,
    staircase: &StaircaseSet,
    max_degree: usize,
    tol: f64,
) -> Result<SubproductSystem> {
    let mut proj: BTreeMap<Degree, ComplexMatrix> = BTreeMap::new();
    for degree in staircase.iter().filter(|&d| total(d) <= max_degree) {
        let p = match partial.get(&degree) {
            Some(p) => p.clone(),
            None if total(degree) <= 1 => identity(cr.dim(degree)),
            None => return Err(Error::MissingDegree(degree)),
        };
        let d = cr.dim(degree);
        if p.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "p{degree:?} has shape {:?}, expected {d}×{d}",
                p.shape()
            )));
        }
        proj.insert(degree, p);
    }
    let report = validate_projections(cr, max_degree, &proj, tol);
    if !report.is_valid() {
        return Err(Error::PartialViolation(report));
    }
    for degree in graded_degrees(max_degree) {
        if staircase.contains(degree) {
            continue;
        }
        let p = split_meet(cr, &proj, degree, tol)?;
        proj.insert(degree, p);
    }
    SubproductSystem::new(cr.clone(), max_degree, proj)
}

/// Whether `range p_{(i,j)}` equals `⋂ W(X(a,b) ⊗ X(c,d))` over proper splits.
/// Only meaningful for degrees outside the staircase the system was built on.
pub fn fiber_formula_check(
    sps: &SubproductSystem,
    degree: Degree,
    staircase: &StaircaseSet,
    tol: f64,
) -> Result<bool> {
    if staircase.contains(degree) {
        return Err(Error::Parse(format!(
            "degree {degree:?} lies in the staircase; the fiber formula applies outside it"
        )));
    }
    let p = sps.projection(degree)?;
    let meet = split_meet(sps.cr(), &sps.proj, degree, tol)?;
    Ok(same_range(p, &meet, tol))
}

/// `range q ⊆ range p`, tested as `‖p q − q‖_max ≤ tol`.
pub fn range_contains(p: &ComplexMatrix, q: &ComplexMatrix, tol: f64) -> bool {
    max_abs(&(p * q - q)) <= tol
}

pub fn same_range(p: &ComplexMatrix, q: &ComplexMatrix, tol: f64) -> bool {
    rank(p, tol) == rank(q, tol)
        && range_contains(p, q, tol.sqrt())
        && range_contains(q, p, tol.sqrt())
}

/// Join two one-variable systems along the axes and complete maximally.
/// `rows[k]` is `p_{(k+2,0)}` and `cols[k]` is `p_{(0,k+2)}`; axis degrees past
/// the end of a list are completed as well.
pub fn adjoin_over_n(
    rows: &[ComplexMatrix],
    cols: &[ComplexMatrix],
    cr: &CommutationRelation,
    max_degree: usize,
    tol: f64,
) -> Result<SubproductSystem> {
    let mut partial = BTreeMap::new();
    let mut degrees = Vec::new();
    for (k, p) in rows.iter().enumerate().take(max_degree.saturating_sub(1)) {
        partial.insert((k + 2, 0), p.clone());
        degrees.push((k + 2, 0));
    }
    for (k, p) in cols.iter().enumerate().take(max_degree.saturating_sub(1)) {
        partial.insert((0, k + 2), p.clone());
        degrees.push((0, k + 2));
    }
    let staircase = StaircaseSet::new(degrees)?;
    maximal_completion(cr, &partial, &staircase, max_degree, tol)
}

/// A random downward-closed staircase inside the triangle of total degree
/// `max_degree`, always containing the base degrees.
pub fn random_staircase<R: Rng + ?Sized>(max_degree: usize, rng: &mut R) -> StaircaseSet {
    // heights h_0 ≥ h_1 ≥ … give {(i,j) : j < h_i}
    let mut degrees = Vec::new();
    let mut height = max_degree + 1;
    for i in 0..=max_degree {
        let cap = (max_degree - i + 1).min(height);
        let lower = if i == 0 {
            2.min(cap)
        } else if i == 1 {
            1.min(cap)
        } else {
            0
        };
        height = rng.random_range(lower..=cap);
        for j in 0..height {
            degrees.push((i, j));
        }
        if height == 0 {
            break;
        }
    }
    StaircaseSet::new(degrees).expect("heights are non-increasing")
}

/// Random valid partial data on `staircase`: each fiber is a random subspace
/// of the largest fiber the lower degrees allow.
pub fn random_partial<R: Rng + ?Sized>(
    cr: &CommutationRelation,
    staircase: &StaircaseSet,
    max_degree: usize,
    tol: f64,
    rng: &mut R,
) -> Result<BTreeMap<Degree, ComplexMatrix>> {
    let mut proj = BTreeMap::new();
    for degree in graded_degrees(max_degree) {
        if !staircase.contains(degree) {
            continue;
        }
        let p = if total(degree) <= 1 {
            identity(cr.dim(degree))
        } else {
            let allowed = split_meet(cr, &proj, degree, tol)?;
            let top = rank(&allowed, tol);
            let r = rng.random_range(0..=top);
            random_subprojection(&allowed, r, tol, rng)
        };
        proj.insert(degree, p);
    }
    Ok(proj)
}

/// A random valid system: random staircase, random partial data, maximal
/// completion.
pub fn random_system<R: Rng + ?Sized>(
    cr: &CommutationRelation,
    max_degree: usize,
    tol: f64,
    rng: &mut R,
) -> Result<SubproductSystem> {
    let staircase = random_staircase(max_degree, rng);
    let partial = random_partial(cr, &staircase, max_degree, tol, rng)?;
    maximal_completion(cr, &partial, &staircase, max_degree, tol)
}
