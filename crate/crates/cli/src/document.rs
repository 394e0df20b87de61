//! JSON documents for systems and ideals.
//!
//! Complex numbers are `[re, im]` pairs, matrices are lists of rows and a
//! fiber basis is a list of vectors. The basis need not be orthonormal; the
//! fiber is its span.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use spsys_core::commutation::{CommutationRelation, Degree};
use spsys_core::ncpoly::{format_word, parse_word, NCPolynomial};
use spsys_core::subproduct::{graded_degrees, SubproductSystem};
use spsys_core::tensor_linalg::{identity, projection_onto_span, ComplexMatrix, ComplexVector};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub type JsonComplex = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberEntry {
    pub i: usize,
    pub j: usize,
    pub basis: Vec<Vec<JsonComplex>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemDocument {
    pub schema_version: u32,
    pub m: usize,
    pub n: usize,
    #[serde(rename = "D")]
    pub max_degree: usize,
    pub u: Vec<Vec<JsonComplex>>,
    pub fibers: Vec<FiberEntry>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub metadata: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub word: String,
    pub coeff: JsonComplex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealDocument {
    pub schema_version: u32,
    pub m: usize,
    pub n: usize,
    #[serde(rename = "D")]
    pub max_degree: usize,
    pub u: Vec<Vec<JsonComplex>>,
    pub generators: Vec<Vec<TermEntry>>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub metadata: Map<String, Value>,
}

fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

pub fn to_json_complex(c: Complex64) -> JsonComplex {
    [clean(c.re), clean(c.im)]
}

pub fn from_json_complex(c: JsonComplex) -> Complex64 {
    Complex64::new(c[0], c[1])
}

pub fn matrix_to_json(a: &ComplexMatrix) -> Vec<Vec<JsonComplex>> {
    (0..a.nrows())
        .map(|r| (0..a.ncols()).map(|c| to_json_complex(a[(r, c)])).collect())
        .collect()
}

pub fn matrix_from_json(rows: &[Vec<JsonComplex>], what: &str) -> Result<ComplexMatrix, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(CliError::Usage(format!(
            "{what}: rows have different lengths"
        )));
    }
    Ok(ComplexMatrix::from_fn(r, c, |i, j| {
        from_json_complex(rows[i][j])
    }))
}

fn vector_to_json(v: impl Iterator<Item = Complex64>) -> Vec<JsonComplex> {
    v.map(to_json_complex).collect()
}

fn check_schema(version: u32) -> Result<(), CliError> {
    if version != SCHEMA_VERSION {
        return Err(CliError::Usage(format!(
            "unsupported schema_version {version} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

fn commutation(
    m: usize,
    n: usize,
    u: &[Vec<JsonComplex>],
    tol: f64,
) -> Result<CommutationRelation, CliError> {
    let u = matrix_from_json(u, "u")?;
    if u.shape() != (m * n, m * n) {
        return Err(CliError::Usage(format!(
            "u has shape {:?}, expected {}×{}",
            u.shape(),
            m * n,
            m * n
        )));
    }
    Ok(CommutationRelation::new(m, n, u, tol)?)
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| {
        let line = text
            .lines()
            .nth(e.line().saturating_sub(1))
            .unwrap_or("")
            .trim();
        let line: String = line.chars().take(80).collect();
        CliError::Usage(format!("{what}: {e}\n  near: {line}"))
    })
}

impl SystemDocument {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc: Self = parse_json(text, "system document")?;
        check_schema(doc.schema_version)?;
        Ok(doc)
    }

    pub fn commutation(&self, tol: f64) -> Result<CommutationRelation, CliError> {
        commutation(self.m, self.n, &self.u, tol)
    }

    /// Projections for the listed fibers. Missing base degrees are filled in
    /// (`X(0,0) = ℂ`, `X(1,0) = E`, `X(0,1) = F`).
    pub fn projections(
        &self,
        cr: &CommutationRelation,
        tol: f64,
    ) -> Result<BTreeMap<Degree, ComplexMatrix>, CliError> {
        let mut out = BTreeMap::new();
        for fiber in &self.fibers {
            let degree = (fiber.i, fiber.j);
            if fiber.i + fiber.j > self.max_degree {
                return Err(CliError::Usage(format!(
                    "fiber {degree:?} is beyond D = {}",
                    self.max_degree
                )));
            }
            let dim = cr.dim(degree);
            let mut vectors = Vec::with_capacity(fiber.basis.len());
            for (k, v) in fiber.basis.iter().enumerate() {
                if v.len() != dim {
                    return Err(CliError::Usage(format!(
                        "fiber {degree:?} basis vector {k} has length {}, expected {dim}",
                        v.len()
                    )));
                }
                vectors.push(ComplexVector::from_iterator(
                    dim,
                    v.iter().map(|&c| from_json_complex(c)),
                ));
            }
            let p = projection_onto_span(&vectors, Some(dim), tol)?;
            if out.insert(degree, p).is_some() {
                return Err(CliError::Usage(format!("fiber {degree:?} listed twice")));
            }
        }
        for degree in [(0, 0), (1, 0), (0, 1)] {
            out.entry(degree)
                .or_insert_with(|| identity(cr.dim(degree)));
        }
        Ok(out)
    }

    /// The system, which must list every degree up to `D`.
    pub fn to_system(&self, tol: f64) -> Result<SubproductSystem, CliError> {
        let cr = self.commutation(tol)?;
        let proj = self.projections(&cr, tol)?;
        for degree in graded_degrees(self.max_degree) {
            if !proj.contains_key(&degree) {
                return Err(CliError::Usage(format!(
                    "missing fiber for degree {degree:?}"
                )));
            }
        }
        Ok(SubproductSystem::new(cr, self.max_degree, proj)?)
    }

    /// Degrees listed explicitly in the document.
    pub fn listed_degrees(&self) -> Vec<Degree> {
        self.fibers.iter().map(|f| (f.i, f.j)).collect()
    }

    pub fn from_system(
        sps: &SubproductSystem,
        tol: f64,
        metadata: Map<String, Value>,
    ) -> Result<Self, CliError> {
        let mut fibers = Vec::new();
        for degree in sps.degrees() {
            let basis = sps.fiber_basis(degree, tol)?;
            fibers.push(FiberEntry {
                i: degree.0,
                j: degree.1,
                basis: basis
                    .column_iter()
                    .map(|c| vector_to_json(c.iter().copied()))
                    .collect(),
            });
        }
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            m: sps.m(),
            n: sps.n(),
            max_degree: sps.max_degree(),
            u: matrix_to_json(sps.cr().matrix()),
            fibers,
            metadata,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }
}

impl IdealDocument {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc: Self = parse_json(text, "ideal document")?;
        check_schema(doc.schema_version)?;
        Ok(doc)
    }

    pub fn commutation(&self, tol: f64) -> Result<CommutationRelation, CliError> {
        commutation(self.m, self.n, &self.u, tol)
    }

    pub fn polynomials(&self) -> Result<Vec<NCPolynomial>, CliError> {
        self.generators
            .iter()
            .map(|terms| {
                let parsed = terms
                    .iter()
                    .map(|t| Ok((parse_word(&t.word)?, from_json_complex(t.coeff))))
                    .collect::<Result<Vec<_>, spsys_core::error::Error>>()?;
                Ok(NCPolynomial::from_terms(parsed))
            })
            .collect()
    }

    pub fn from_polynomials(
        cr: &CommutationRelation,
        max_degree: usize,
        gens: &[NCPolynomial],
        metadata: Map<String, Value>,
    ) -> Self {
        let generators = gens
            .iter()
            .map(|g| {
                g.terms()
                    .iter()
                    .map(|(w, c)| TermEntry {
                        word: format_word(w),
                        coeff: to_json_complex(*c),
                    })
                    .collect()
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            m: cr.m(),
            n: cr.n(),
            max_degree,
            u: matrix_to_json(cr.matrix()),
            generators,
            metadata,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }
}
