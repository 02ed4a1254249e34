//! DIMACS CNF reading and writing, and the one-line solution format.

use std::fmt::Write as _;
use std::io::{self, Read};

use deepsp_core::{Assignment, CnfFormula, Literal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DimacsError {
    #[error("line {line}: malformed problem line `{text}`")]
    MalformedHeader { line: usize, text: String },
    #[error("clause data before the `p cnf` line")]
    MissingHeader,
    #[error("line {line}: second problem line")]
    DuplicateHeader { line: usize },
    #[error("line {line}: `{token}` is not an integer literal")]
    BadToken { line: usize, token: String },
    #[error("line {line}: variable {var} out of range 1..={num_vars}")]
    VariableOutOfRange { line: usize, var: i64, num_vars: usize },
    #[error("clause {clause}: variable {var} occurs more than once")]
    DuplicateVariable { clause: usize, var: i64 },
    #[error("clause {clause}: {len} literals, expected {expected}")]
    Arity { clause: usize, len: usize, expected: usize },
    #[error("line {line}: empty clause")]
    EmptyClause { line: usize },
    #[error("header declares {declared} clauses, found {found}")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("last clause is not terminated by 0")]
    UnterminatedClause,
    #[error(transparent)]
    Formula(#[from] deepsp_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parser settings. `strict` rejects clauses that repeat a variable;
/// `arity` additionally pins the clause length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DimacsOptions {
    pub strict: bool,
    pub arity: Option<usize>,
}

impl Default for DimacsOptions {
    fn default() -> Self {
        DimacsOptions {
            strict: true,
            arity: None,
        }
    }
}

impl DimacsOptions {
    pub fn lenient() -> Self {
        DimacsOptions {
            strict: false,
            arity: None,
        }
    }
}

pub fn parse_dimacs(text: &str, opts: DimacsOptions) -> Result<CnfFormula, DimacsError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut current_codes: Vec<i64> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        // SATLIB files end with `%` followed by a stray `0`
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(DimacsError::DuplicateHeader { line });
            }
            header = Some(parse_header(trimmed, line)?);
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(DimacsError::MissingHeader);
        };
        for token in trimmed.split_whitespace() {
            let code: i64 = token.parse().map_err(|_| DimacsError::BadToken {
                line,
                token: token.to_string(),
            })?;
            if code == 0 {
                if current.is_empty() {
                    return Err(DimacsError::EmptyClause { line });
                }
                check_clause(clauses.len(), &current_codes, opts)?;
                clauses.push(std::mem::take(&mut current));
                current_codes.clear();
                continue;
            }
            if code.unsigned_abs() as usize > num_vars {
                return Err(DimacsError::VariableOutOfRange {
                    line,
                    var: code,
                    num_vars,
                });
            }
            current.push(Literal::from_dimacs(code).expect("nonzero code"));
            current_codes.push(code);
        }
    }

    let (num_vars, declared) = header.ok_or(DimacsError::MissingHeader)?;
    if !current.is_empty() {
        return Err(DimacsError::UnterminatedClause);
    }
    if clauses.len() != declared {
        return Err(DimacsError::ClauseCountMismatch {
            declared,
            found: clauses.len(),
        });
    }
    Ok(CnfFormula::new(num_vars, clauses, None)?)
}

fn parse_header(text: &str, line: usize) -> Result<(usize, usize), DimacsError> {
    let bad = || DimacsError::MalformedHeader {
        line,
        text: text.to_string(),
    };
    let parts: Vec<&str> = text.split_whitespace().collect();
    match parts.as_slice() {
        ["p", "cnf", n, m] => {
            let n: usize = n.parse().map_err(|_| bad())?;
            let m: usize = m.parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            Ok((n, m))
        }
        _ => Err(bad()),
    }
}

fn check_clause(clause: usize, codes: &[i64], opts: DimacsOptions) -> Result<(), DimacsError> {
    if let Some(k) = opts.arity {
        if codes.len() != k {
            return Err(DimacsError::Arity {
                clause,
                len: codes.len(),
                expected: k,
            });
        }
    }
    if opts.strict || opts.arity.is_some() {
        for (p, c) in codes.iter().enumerate() {
            if codes[..p].iter().any(|d| d.abs() == c.abs()) {
                return Err(DimacsError::DuplicateVariable { clause, var: c.abs() });
            }
        }
    }
    Ok(())
}

pub fn read_dimacs(mut reader: impl Read, opts: DimacsOptions) -> Result<CnfFormula, DimacsError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_dimacs(&text, opts)
}

pub fn emit_dimacs(f: &CnfFormula) -> String {
    let mut out = String::with_capacity(16 + f.num_literals() * 7);
    writeln!(out, "p cnf {} {}", f.num_vars(), f.num_clauses()).unwrap();
    for clause in f.clauses() {
        for lit in clause {
            write!(out, "{} ", lit.to_dimacs()).unwrap();
        }
        out.push_str("0\n");
    }
    out
}

/// `v 1 -2 3 ... 0` on a single line: variable `i + 1`, negative when FALSE.
pub fn emit_solution(a: &Assignment) -> String {
    let mut out = String::from("v");
    for (i, &v) in a.values().iter().enumerate() {
        let code = i as i64 + 1;
        write!(out, " {}", if v { code } else { -code }).unwrap();
    }
    out.push_str(" 0\n");
    out
}

pub fn parse_solution(text: &str, num_vars: usize) -> Result<Assignment, DimacsError> {
    let mut values = vec![None; num_vars];
    let mut tokens = text.split_whitespace().peekable();
    if tokens.peek() == Some(&"v") {
        tokens.next();
    }
    for token in tokens {
        let code: i64 = token.parse().map_err(|_| DimacsError::BadToken {
            line: 1,
            token: token.to_string(),
        })?;
        if code == 0 {
            break;
        }
        let var = code.unsigned_abs() as usize;
        if var > num_vars {
            return Err(DimacsError::VariableOutOfRange {
                line: 1,
                var: code,
                num_vars,
            });
        }
        values[var - 1] = Some(code > 0);
    }
    // unmentioned variables default to FALSE
    Ok(Assignment::new(
        values.into_iter().map(|v| v.unwrap_or(false)).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use deepsp_core::formula::generate_random_3sat;

    const NINE: &str = "c four clauses over nine variables\n\
        p cnf 9 4\n1 2 3 0\n-2 4 5 0\n3 -6 7 0\n-1 8 9 0\n";

    #[test]
    fn parses_single_clause() {
        let f = parse_dimacs("p cnf 3 1\n1 -2 3 0", DimacsOptions::default()).unwrap();
        assert_eq!(f.num_vars(), 3);
        assert_eq!(f.num_clauses(), 1);
        let c: Vec<i64> = f.clause(0).iter().map(|l| l.to_dimacs()).collect();
        assert_eq!(c, [1, -2, 3]);
    }

    #[test]
    fn nine_variable_round_trip() {
        let f = parse_dimacs(NINE, DimacsOptions::default()).unwrap();
        let text = emit_dimacs(&f);
        assert_eq!(text.lines().count(), 5);
        assert_eq!(parse_dimacs(&text, DimacsOptions::default()).unwrap(), f);
    }

    #[test]
    fn clauses_may_span_lines() {
        let f = parse_dimacs("p cnf 4 2\n1 2\n3 0 -4\n1 2 0\n", DimacsOptions::default()).unwrap();
        assert_eq!(f.clause(0).len(), 3);
        assert_eq!(f.clause(1).len(), 3);
    }

    #[test]
    fn rejects_bad_input() {
        let o = DimacsOptions::default();
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 3 0", o),
            Err(DimacsError::VariableOutOfRange { var: 3, .. })
        ));
        assert!(matches!(
            parse_dimacs("p dnf 2 1\n1 2 0", o),
            Err(DimacsError::MalformedHeader { .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf x 1\n1 2 0", o),
            Err(DimacsError::MalformedHeader { .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 0 1\n", o),
            Err(DimacsError::MalformedHeader { .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 3 2\n1 2 3 0", o),
            Err(DimacsError::ClauseCountMismatch { declared: 2, found: 1 })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 3 1\n1 2 3", o),
            Err(DimacsError::UnterminatedClause)
        ));
        assert!(matches!(parse_dimacs("1 2 0\n", o), Err(DimacsError::MissingHeader)));
        assert!(matches!(
            parse_dimacs("p cnf 3 1\n1 a 0", o),
            Err(DimacsError::BadToken { .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 3 1\n0\n", o),
            Err(DimacsError::EmptyClause { .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 3 1\np cnf 3 1\n1 2 3 0", o),
            Err(DimacsError::DuplicateHeader { line: 2 })
        ));
    }

    #[test]
    fn strictness() {
        let text = "p cnf 3 1\n1 -1 2 0\n";
        assert!(matches!(
            parse_dimacs(text, DimacsOptions::default()),
            Err(DimacsError::DuplicateVariable { clause: 0, var: 1 })
        ));
        assert_eq!(parse_dimacs(text, DimacsOptions::lenient()).unwrap().clause(0).len(), 3);
        let three = DimacsOptions {
            strict: true,
            arity: Some(3),
        };
        assert!(matches!(
            parse_dimacs("p cnf 3 1\n1 2 0\n", three),
            Err(DimacsError::Arity {
                len: 2,
                expected: 3,
                ..
            })
        ));
    }

    #[test]
    fn generated_instances_round_trip() {
        for seed in 0..5 {
            let f = generate_random_3sat(300, 4.2, seed).unwrap();
            let text = emit_dimacs(&f);
            let g = parse_dimacs(
                &text,
                DimacsOptions {
                    strict: true,
                    arity: Some(3),
                },
            )
            .unwrap();
            assert_eq!(g, f);
            assert_eq!(emit_dimacs(&g), text);
        }
    }

    #[test]
    fn satlib_trailer_is_ignored() {
        let f = parse_dimacs("p cnf 3 1\n1 2 3 0\n%\n0\n", DimacsOptions::default()).unwrap();
        assert_eq!(f.num_clauses(), 1);
    }

    #[test]
    fn solution_format() {
        let a = Assignment::new(vec![true, false, false, true]);
        let line = emit_solution(&a);
        assert_eq!(line, "v 1 -2 -3 4 0\n");
        assert_eq!(parse_solution(&line, 4).unwrap(), a);
        assert!(parse_solution("v 5 0", 4).is_err());
    }
}
