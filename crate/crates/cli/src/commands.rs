use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use spsys_core::commutation::Degree;
use spsys_core::fock::TruncatedFock;
use spsys_core::invariants::{
    compute_invariants, iso_search, IsoVerdict, SearchBudget, SearchOptions,
};
use spsys_core::ncpoly::{ideal_to_subproduct, subproduct_to_ideal};
use spsys_core::subproduct::{
    fiber_formula_check, graded_degrees, maximal_completion, StaircaseSet, SubproductSystem,
};
use spsys_core::tensor_linalg::{max_abs, random_vector, ComplexMatrix};
use spsys_core::variety::{
    in_c_set, is_good_generators, polyball_membership, sample_polyball, variety_generators,
    PolyballPoint,
};

use crate::document::{matrix_to_json, to_json_complex, IdealDocument, SystemDocument};
use crate::expr;
use crate::{inputs_digest, CliError, Outcome, Report, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    ToIdeal,
    ToSystem,
}

fn report(
    command: &str,
    inputs: &[&str],
    findings: Value,
    tol: Tolerances,
    seed: Option<u64>,
) -> Report {
    Report {
        command: command.to_string(),
        inputs_digest: inputs_digest(inputs),
        findings,
        tolerances: tol,
        seed,
    }
}

fn profile_json(sps: &SubproductSystem, tol: f64) -> Value {
    Value::Array(
        sps.dimension_profile(tol)
            .into_iter()
            .map(|((i, j), d)| json!({"i": i, "j": j, "dim": d}))
            .collect(),
    )
}

fn degrees_json(degrees: &[Degree]) -> Value {
    Value::Array(degrees.iter().map(|&(i, j)| json!([i, j])).collect())
}

fn complex_json(c: Complex64) -> Value {
    json!(to_json_complex(c))
}

/// Parses the document and refuses systems that fail validation.
fn load_valid(text: &str, tol: Tolerances) -> Result<(SystemDocument, SubproductSystem), CliError> {
    let doc = SystemDocument::parse(text)?;
    let sps = doc.to_system(tol.rank)?;
    let check = sps.validate(tol.rank);
    if !check.is_valid() {
        return Err(CliError::Domain(format!(
            "input system is not valid: {check}"
        )));
    }
    Ok((doc, sps))
}

pub fn validate(text: &str, tol: Tolerances) -> Result<Outcome, CliError> {
    let doc = SystemDocument::parse(text)?;
    let sps = doc.to_system(tol.rank)?;
    let check = sps.validate(tol.rank);
    let valid = check.is_valid();
    let findings = json!({
        "valid": valid,
        "max_degree": sps.max_degree(),
        "violations": serde_json::to_value(&check.violations).expect("violations serialize"),
        "dimension_profile": profile_json(&sps, tol.rank),
    });
    Ok(Outcome {
        report: report("validate", &[text], findings, tol, None),
        summary: check.to_string(),
        exit_code: if valid { 0 } else { 1 },
        document: None,
    })
}

/// `"2,0 1,1"` or `"2,0;1,1"`.
pub fn parse_staircase(s: &str) -> Result<Vec<Degree>, CliError> {
    s.split(|c: char| c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            let bad = || CliError::Usage(format!("bad staircase entry {t:?} (expected i,j)"));
            let (i, j) = t.split_once(',').ok_or_else(bad)?;
            Ok((
                i.trim().parse().map_err(|_| bad())?,
                j.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

pub fn complete(text: &str, staircase: Option<&str>, tol: Tolerances) -> Result<Outcome, CliError> {
    let doc = SystemDocument::parse(text)?;
    let cr = doc.commutation(tol.rank)?;
    let listed = doc.listed_degrees();
    let degrees = match staircase {
        Some(s) => parse_staircase(s)?,
        None => listed.clone(),
    };
    let l = StaircaseSet::new(degrees)?;
    for degree in l.iter() {
        if degree.0 + degree.1 > doc.max_degree {
            return Err(CliError::Usage(format!(
                "staircase degree {degree:?} is beyond D = {}",
                doc.max_degree
            )));
        }
        if degree.0 + degree.1 >= 2 && !listed.contains(&degree) {
            return Err(CliError::Usage(format!(
                "staircase degree {degree:?} has no fiber in the document"
            )));
        }
    }
    let partial = doc.projections(&cr, tol.rank)?;
    let ignored: Vec<Degree> = listed.iter().copied().filter(|&d| !l.contains(d)).collect();
    let sps = maximal_completion(&cr, &partial, &l, doc.max_degree, tol.rank)?;
    let check = sps.validate(tol.rank);
    let mut completed = Vec::new();
    let mut formula_holds = true;
    for degree in graded_degrees(doc.max_degree) {
        if !l.contains(degree) {
            completed.push(degree);
            formula_holds &= fiber_formula_check(&sps, degree, &l, tol.rank)?;
        }
    }
    let out = SystemDocument::from_system(&sps, tol.rank, doc.metadata.clone())?;
    let findings = json!({
        "staircase": degrees_json(&l.iter().collect::<Vec<_>>()),
        "ignored_fibers": degrees_json(&ignored),
        "completed_degrees": degrees_json(&completed),
        "valid": check.is_valid(),
        "fiber_formula_holds": formula_holds,
        "dimension_profile": profile_json(&sps, tol.rank),
    });
    let ok = check.is_valid() && formula_holds;
    Ok(Outcome {
        report: report("complete", &[text], findings, tol, None),
        summary: format!(
            "completed {} degree(s) up to D = {}; {}",
            completed.len(),
            doc.max_degree,
            check
        ),
        exit_code: if ok { 0 } else { 1 },
        document: Some(out.to_json()),
    })
}

pub fn ideal(text: &str, direction: Direction, tol: Tolerances) -> Result<Outcome, CliError> {
    match direction {
        Direction::ToIdeal => {
            let (doc, sps) = load_valid(text, tol)?;
            let gens = subproduct_to_ideal(&sps, tol.rank)?;
            let out = IdealDocument::from_polynomials(
                sps.cr(),
                sps.max_degree(),
                &gens,
                doc.metadata.clone(),
            );
            let findings = json!({
                "direction": "to-ideal",
                "generator_count": gens.len(),
                "generators": gens.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
            });
            Ok(Outcome {
                report: report("ideal", &[text], findings, tol, None),
                summary: format!(
                    "{} generator(s) up to degree {}",
                    gens.len(),
                    sps.max_degree()
                ),
                exit_code: 0,
                document: Some(out.to_json()),
            })
        }
        Direction::ToSystem => {
            let doc = IdealDocument::parse(text)?;
            let cr = doc.commutation(tol.rank)?;
            let gens = doc.polynomials()?;
            let built = ideal_to_subproduct(&gens, &cr, doc.max_degree, tol.rank)?;
            let check = built.system.validate(tol.rank);
            let out = SystemDocument::from_system(&built.system, tol.rank, doc.metadata.clone())?;
            let findings = json!({
                "direction": "to-system",
                "commutators_added": built.commutators_added,
                "valid": check.is_valid(),
                "dimension_profile": profile_json(&built.system, tol.rank),
            });
            Ok(Outcome {
                report: report("ideal", &[text], findings, tol, None),
                summary: format!(
                    "system up to degree {}{}",
                    doc.max_degree,
                    if built.commutators_added {
                        "; the commutation relations were added to the ideal"
                    } else {
                        ""
                    }
                ),
                exit_code: if check.is_valid() { 0 } else { 1 },
                document: Some(out.to_json()),
            })
        }
    }
}

pub fn invariants(text: &str, tol: Tolerances) -> Result<Outcome, CliError> {
    let (_, sps) = load_valid(text, tol)?;
    let inv = compute_invariants(&sps, tol.rank)?;
    let gens = variety_generators(&sps, tol.rank)?;
    let findings = json!({
        "m": sps.m(),
        "n": sps.n(),
        "dim_sum": inv.dim_sum,
        "k_x": inv.k_x.to_string(),
        "k_x_detail": serde_json::to_value(inv.k_x).expect("k_x serializes"),
        "is_good": is_good_generators(&gens),
        "variety_generators": gens.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
        "dimension_profile": profile_json(&sps, tol.rank),
        "max_degree": sps.max_degree(),
    });
    Ok(Outcome {
        report: report("invariants", &[text], findings, tol, None),
        summary: format!("{inv} up to degree {}", sps.max_degree()),
        exit_code: 0,
        document: None,
    })
}

/// `"z1,z2;w1"` with entries such as `0.5`, `-0.1i` or `0.2+0.3i`.
pub fn parse_point(s: &str, m: usize, n: usize) -> Result<PolyballPoint, CliError> {
    let (zs, ws) = s
        .split_once(';')
        .ok_or_else(|| CliError::Usage(format!("point {s:?} needs the form z1,..,zm;w1,..,wn")))?;
    let coords = |part: &str, len: usize, name: &str| -> Result<Vec<Complex64>, CliError> {
        let out: Vec<Complex64> = part
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<Complex64>()
                    .map_err(|_| CliError::Usage(format!("bad complex number {t:?}")))
            })
            .collect::<Result<_, _>>()?;
        if out.len() != len {
            return Err(CliError::Usage(format!(
                "{name} has {} coordinate(s), expected {len}",
                out.len()
            )));
        }
        Ok(out)
    };
    Ok(PolyballPoint::new(coords(zs, m, "z")?, coords(ws, n, "w")?))
}

pub fn variety(
    text: &str,
    point: Option<&str>,
    sample: Option<usize>,
    seed: u64,
    tol: Tolerances,
) -> Result<Outcome, CliError> {
    if point.is_none() && sample.is_none() {
        return Err(CliError::Usage("variety needs --point or --sample".into()));
    }
    let (_, sps) = load_valid(text, tol)?;
    let gens = variety_generators(&sps, tol.rank)?;
    let mut findings = Map::new();
    findings.insert(
        "variety_generators".into(),
        json!(gens.iter().map(|g| g.to_string()).collect::<Vec<_>>()),
    );
    findings.insert("is_good".into(), json!(is_good_generators(&gens)));
    let mut summary = Vec::new();
    if let Some(p) = point {
        let pt = parse_point(p, sps.m(), sps.n())?;
        let member = polyball_membership(&pt, &gens, tol.member);
        let in_ball = pt.z_norm() <= 1.0 + tol.member && pt.w_norm() <= 1.0 + tol.member;
        findings.insert(
            "point".into(),
            json!({
                "z": pt.z.iter().map(|&c| complex_json(c)).collect::<Vec<_>>(),
                "w": pt.w.iter().map(|&c| complex_json(c)).collect::<Vec<_>>(),
                "in_polyball": in_ball,
                "member": member,
                "in_c_set": in_c_set(&pt, tol.member),
                "generator_abs_values": gens.iter().map(|g| g.eval(&pt).norm()).collect::<Vec<_>>(),
            }),
        );
        summary.push(format!(
            "point is {}in the variety",
            if member { "" } else { "not " }
        ));
    }
    if let Some(count) = sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut members, mut cross, mut both) = (0usize, 0usize, 0usize);
        for _ in 0..count {
            let pt = sample_polyball(sps.m(), sps.n(), &mut rng);
            let member = polyball_membership(&pt, &gens, tol.member);
            let c = in_c_set(&pt, tol.member);
            members += usize::from(member);
            cross += usize::from(c);
            both += usize::from(member && c);
        }
        findings.insert(
            "sample".into(),
            json!({
                "count": count,
                "members": members,
                "in_c_set": cross,
                "members_in_c_set": both,
                "fraction_members": if count == 0 { 0.0 } else { members as f64 / count as f64 },
            }),
        );
        summary.push(format!(
            "{members} of {count} sampled points in the variety"
        ));
    }
    Ok(Outcome {
        report: report(
            "variety",
            &[text],
            Value::Object(findings),
            tol,
            sample.map(|_| seed),
        ),
        summary: summary.join("; "),
        exit_code: 0,
        document: None,
    })
}

pub fn fock_norms(
    text: &str,
    expression: Option<&str>,
    samples: usize,
    seed: u64,
    tol: Tolerances,
) -> Result<Outcome, CliError> {
    let (_, sps) = load_valid(text, tol)?;
    let fock = TruncatedFock::new(&sps, tol.rank)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut worst: f64 = 0.0;
    for degree in sps.degrees() {
        if degree == (0, 0) {
            continue;
        }
        let basis = fock
            .basis(degree)
            .cloned()
            .unwrap_or_else(|| ComplexMatrix::zeros(0, 0));
        if basis.ncols() == 0 {
            continue;
        }
        let mut vectors: Vec<(&str, _)> = basis
            .column_iter()
            .map(|c| ("basis", c.into_owned()))
            .collect();
        for _ in 0..samples {
            let coeffs = random_vector(basis.ncols(), &mut rng);
            vectors.push(("random", &basis * coeffs));
        }
        for (kind, x) in vectors {
            let (op, norm) = fock.op_norm_check(degree, &x, tol.rank)?;
            let rel = (op - norm).abs() / norm.max(f64::MIN_POSITIVE);
            worst = worst.max(rel);
            checks.push(json!({
                "i": degree.0, "j": degree.1, "kind": kind,
                "vector_norm": norm, "operator_norm": op, "relative_error": rel,
            }));
        }
    }
    let mut findings = Map::new();
    findings.insert("fock_dim".into(), json!(fock.total_dim()));
    findings.insert("checks".into(), Value::Array(checks));
    findings.insert("max_relative_error".into(), json!(worst));
    if let Some(src) = expression {
        let op = expr::evaluate(&expr::parse(src)?, &fock, tol.rank)?;
        findings.insert(
            "expression".into(),
            json!({"source": src, "norm": op.norm()}),
        );
    }
    Ok(Outcome {
        report: report(
            "fock-norms",
            &[text],
            Value::Object(findings),
            tol,
            Some(seed),
        ),
        summary: format!(
            "creation norms match vector norms to {worst:.3e} on a Fock space of dimension {}",
            fock.total_dim()
        ),
        exit_code: 0,
        document: None,
    })
}

pub fn fourier(text: &str, expression: &str, tol: Tolerances) -> Result<Outcome, CliError> {
    let (_, sps) = load_valid(text, tol)?;
    let fock = TruncatedFock::new(&sps, tol.rank)?;
    let op = expr::evaluate(&expr::parse(expression)?, &fock, tol.rank)?;
    let mut total = fock.zero();
    let mut coefficients = Vec::new();
    for shift in graded_degrees(sps.max_degree()) {
        let phi = op.fourier_coefficient(shift);
        total = total.add(&phi)?;
        let norm = phi.norm();
        if norm > tol.rank {
            coefficients.push(json!({"i": shift.0, "j": shift.1, "norm": norm}));
        }
    }
    let residual = max_abs(&(total.matrix() - op.matrix()));
    let findings = json!({
        "expression": expression,
        "norm": op.norm(),
        "coefficients": coefficients,
        "exhaustion_residual": residual,
        "vacuum_character": complex_json(op.vacuum_character()),
    });
    Ok(Outcome {
        report: report("fourier", &[text], findings, tol, None),
        summary: format!(
            "{} nonzero Fourier coefficient(s); Σ Φ_(i,j) recovers the operator to {residual:.3e}",
            coefficients.len()
        ),
        exit_code: 0,
        document: None,
    })
}

pub fn iso(
    text_x: &str,
    text_y: &str,
    budget: SearchBudget,
    seed: u64,
    tol: Tolerances,
) -> Result<Outcome, CliError> {
    let (_, x) = load_valid(text_x, tol)?;
    let (_, y) = load_valid(text_y, tol)?;
    let options = SearchOptions {
        budget,
        seed,
        rank_tol: tol.rank,
        witness_tol: tol.iso,
    };
    let outcome = iso_search(&x, &y, &options)?;
    let inv_x = compute_invariants(&x, tol.rank)?;
    let inv_y = compute_invariants(&y, tol.rank)?;
    let witness = outcome.witness.as_ref().map(|w| {
        json!({
            "branch": w.branch,
            "b": matrix_to_json(&w.b),
            "c": matrix_to_json(&w.c),
            "residual": w.residual,
        })
    });
    let verdict = outcome.verdict;
    let findings = json!({
        "verdict": verdict,
        "max_degree": x.max_degree(),
        "branches": serde_json::to_value(&outcome.branches).expect("branches serialize"),
        "witness": witness,
        "invariants": {
            "x": inv_x.to_string(),
            "y": inv_y.to_string(),
            "agree": inv_x.agrees(&inv_y),
        },
        "budget": {"restarts": budget.restarts, "iterations": budget.iterations},
    });
    let summary = match verdict {
        IsoVerdict::Witness => format!(
            "isomorphic up to degree {} ({} branch)",
            x.max_degree(),
            outcome
                .witness
                .as_ref()
                .map(|w| w.branch)
                .expect("witness present")
        ),
        IsoVerdict::Refuted => format!(
            "not isomorphic: dimension profiles differ under both branches up to degree {}",
            x.max_degree()
        ),
        IsoVerdict::Inconclusive => "inconclusive: no witness found within the budget".to_string(),
    };
    Ok(Outcome {
        report: report("iso", &[text_x, text_y], findings, tol, Some(seed)),
        summary,
        exit_code: if verdict == IsoVerdict::Refuted { 1 } else { 0 },
        document: None,
    })
}
