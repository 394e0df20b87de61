//! Prefix operator expressions over a truncated Fock space.
//!
//! ```text
//! expr   := atom | "(" op expr* ")"
//! op     := "+" | "-" | "*"
//! atom   := "I" | "e<k>" | "f<k>" | "v<i>_<j>_<k>" | scalar
//! scalar := 2 | -0.5 | 3i | 1+2i
//! ```
//!
//! `e<k>` and `f<k>` are the creation operators of the standard basis
//! vectors of `E` and `F`, `v<i>_<j>_<k>` is the creation operator of the
//! `k`-th basis vector of the fiber `X(i,j)` in the order the fiber basis
//! is reported. Indices are 1-based. A scalar stands for a multiple of the
//! identity. `(- a)` negates, `(- a b c)` is `a - b - c`.

use std::str::FromStr;

use num_complex::Complex64;

use spsys_core::fock::{FockOperator, TruncatedFock};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Identity,
    Scalar(Complex64),
    E(usize),
    F(usize),
    Fiber { i: usize, j: usize, k: usize },
    Sum(Vec<Expr>),
    Difference(Vec<Expr>),
    Product(Vec<Expr>),
}

fn tokenize(src: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in src.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn index(s: &str, tok: &str) -> Result<usize, CliError> {
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(CliError::Usage(format!(
            "bad index in {tok:?} (indices start at 1)"
        ))),
    }
}

fn atom(tok: &str) -> Result<Expr, CliError> {
    if tok == "I" {
        return Ok(Expr::Identity);
    }
    if let Some(rest) = tok.strip_prefix('e') {
        return Ok(Expr::E(index(rest, tok)?));
    }
    if let Some(rest) = tok.strip_prefix('f') {
        return Ok(Expr::F(index(rest, tok)?));
    }
    if let Some(rest) = tok.strip_prefix('v') {
        let parts: Vec<&str> = rest.split('_').collect();
        if parts.len() != 3 {
            return Err(CliError::Usage(format!(
                "expected v<i>_<j>_<k>, got {tok:?}"
            )));
        }
        let degree = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad degree in {tok:?}")))
        };
        return Ok(Expr::Fiber {
            i: degree(parts[0])?,
            j: degree(parts[1])?,
            k: index(parts[2], tok)?,
        });
    }
    Complex64::from_str(tok)
        .map(Expr::Scalar)
        .map_err(|_| CliError::Usage(format!("unknown token {tok:?}")))
}

fn parse_at(tokens: &[String], pos: &mut usize) -> Result<Expr, CliError> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| CliError::Usage("unexpected end of expression".into()))?;
    *pos += 1;
    if tok != "(" {
        if tok == ")" {
            return Err(CliError::Usage("unexpected ')'".into()));
        }
        return atom(tok);
    }
    let op = tokens
        .get(*pos)
        .ok_or_else(|| CliError::Usage("missing operator after '('".into()))?
        .clone();
    *pos += 1;
    let mut args = Vec::new();
    loop {
        match tokens.get(*pos).map(String::as_str) {
            Some(")") => {
                *pos += 1;
                break;
            }
            Some(_) => args.push(parse_at(tokens, pos)?),
            None => return Err(CliError::Usage("unbalanced '('".into())),
        }
    }
    if args.is_empty() {
        return Err(CliError::Usage(format!("operator {op:?} needs arguments")));
    }
    match op.as_str() {
        "+" => Ok(Expr::Sum(args)),
        "-" => Ok(Expr::Difference(args)),
        "*" => Ok(Expr::Product(args)),
        other => Err(CliError::Usage(format!("unknown operator {other:?}"))),
    }
}

pub fn parse(src: &str) -> Result<Expr, CliError> {
    let tokens = tokenize(src);
    let mut pos = 0;
    let expr = parse_at(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(CliError::Usage(format!(
            "trailing input after expression: {}",
            tokens[pos..].join(" ")
        )));
    }
    Ok(expr)
}

pub fn evaluate<'a>(
    expr: &Expr,
    fock: &'a TruncatedFock,
    tol: f64,
) -> Result<FockOperator<'a>, CliError> {
    Ok(match expr {
        Expr::Identity => fock.identity(),
        Expr::Scalar(c) => fock.identity().scale(*c),
        Expr::E(k) => fock.creation_e(k - 1)?,
        Expr::F(k) => fock.creation_f(k - 1)?,
        Expr::Fiber { i, j, k } => {
            let basis = fock.basis((*i, *j)).ok_or_else(|| {
                CliError::Usage(format!("degree ({i},{j}) is outside the truncation"))
            })?;
            if *k > basis.ncols() {
                return Err(CliError::Usage(format!(
                    "X({i},{j}) has dimension {}, no basis vector {k}",
                    basis.ncols()
                )));
            }
            let x = basis.column(k - 1).into_owned();
            fock.creation_operator((*i, *j), &x, tol)?
        }
        Expr::Sum(args) => {
            let mut acc = fock.zero();
            for a in args {
                acc = acc.add(&evaluate(a, fock, tol)?)?;
            }
            acc
        }
        Expr::Difference(args) => {
            let first = evaluate(&args[0], fock, tol)?;
            if args.len() == 1 {
                first.scale(Complex64::new(-1.0, 0.0))
            } else {
                let mut acc = first;
                for a in &args[1..] {
                    acc = acc.sub(&evaluate(a, fock, tol)?)?;
                }
                acc
            }
        }
        Expr::Product(args) => {
            let mut acc = fock.identity();
            for a in args {
                acc = acc.mul(&evaluate(a, fock, tol)?)?;
            }
            acc
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use spsys_core::commutation::CommutationRelation;
    use spsys_core::subproduct::SubproductSystem;
    use spsys_core::tensor_linalg::max_abs;

    #[test]
    fn parses_nested_expressions() {
        let e = parse("(+ (* e1 f2) (- 2i) v1_1_1)").unwrap();
        assert_eq!(
            e,
            Expr::Sum(vec![
                Expr::Product(vec![Expr::E(1), Expr::F(2)]),
                Expr::Difference(vec![Expr::Scalar(Complex64::new(0.0, 2.0))]),
                Expr::Fiber { i: 1, j: 1, k: 1 },
            ])
        );
        assert_eq!(parse("e3").unwrap(), Expr::E(3));
        assert_eq!(
            parse("1+2i").unwrap(),
            Expr::Scalar(Complex64::new(1.0, 2.0))
        );
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["(+ e1", "e0", "(% e1)", "e1 e2", ")", "()", "v1_1", "q7"] {
            assert!(parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn evaluates_against_the_fock_space() {
        let sps = SubproductSystem::full(CommutationRelation::flip(1, 1), 2);
        let fock = TruncatedFock::new(&sps, 1e-9).unwrap();
        let ef = evaluate(&parse("(* e1 f1)").unwrap(), &fock, 1e-9).unwrap();
        let fe = evaluate(&parse("(* f1 e1)").unwrap(), &fock, 1e-9).unwrap();
        assert!(max_abs(&(ef.matrix() - fe.matrix())) < 1e-12);
        let v = evaluate(&parse("v1_1_1").unwrap(), &fock, 1e-9).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        let zero = evaluate(&parse("(- e1 e1)").unwrap(), &fock, 1e-9).unwrap();
        assert_eq!(max_abs(zero.matrix()), 0.0);
        assert!(evaluate(&parse("e2").unwrap(), &fock, 1e-9).is_err());
        assert!(evaluate(&parse("v3_0_1").unwrap(), &fock, 1e-9).is_err());
    }
}
