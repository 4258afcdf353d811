use std::io::Write;
use std::path::Path;

use super::{Clause, Formula, Literal};
use crate::{Error, Result};

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses DIMACS CNF text.
///
/// Repeated literals are merged, tautologies dropped and an explicit empty
/// clause kept. The clause count in the header is not enforced.
pub fn parse_dimacs(text: &str) -> Result<Formula> {
    let mut num_vars: Option<u32> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if num_vars.is_some() {
                return Err(err(line_no, "duplicate header"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(err(line_no, "malformed header, expected `p cnf <vars> <clauses>`"));
            }
            let n = parts[2]
                .parse::<u32>()
                .map_err(|_| err(line_no, "malformed header: bad variable count"))?;
            parts[3]
                .parse::<u64>()
                .map_err(|_| err(line_no, "malformed header: bad clause count"))?;
            num_vars = Some(n);
            continue;
        }
        let n = num_vars.ok_or_else(|| err(line_no, "clause before header"))?;
        for tok in line.split_whitespace() {
            let x: i64 = tok
                .parse()
                .map_err(|_| err(line_no, format!("non-integer token `{tok}`")))?;
            if x == 0 {
                let mut c = Clause::new(std::mem::take(&mut current));
                c.dedup();
                if !c.is_tautology() {
                    clauses.push(c);
                }
            } else {
                if x.unsigned_abs() > n as u64 {
                    return Err(err(line_no, format!("literal out of range: {x}")));
                }
                current.push(Literal::from_dimacs(x));
            }
        }
    }
    if !current.is_empty() {
        return Err(err(last_line, "missing terminating 0"));
    }
    let num_vars = num_vars.ok_or_else(|| err(last_line, "missing header"))?;
    Ok(Formula { num_vars, clauses })
}

pub fn read_dimacs(path: impl AsRef<Path>) -> Result<Formula> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dimacs(&text)
}

pub fn write_dimacs(f: &Formula) -> String {
    let mut out = format!("p cnf {} {}\n", f.num_vars, f.clauses.len());
    for c in &f.clauses {
        for l in &c.literals {
            out.push_str(&l.to_dimacs().to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    }
    out
}

pub fn write_dimacs_file(f: &Formula, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(write_dimacs(f).as_bytes())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::random_ksat;
    use proptest::prelude::*;

    #[test]
    fn parses_simple() {
        let f = parse_dimacs("p cnf 2 2\n1 2 0\n-1 0\n").unwrap();
        assert_eq!(f, Formula::from_dimacs_clauses(&[&[1, 2], &[-1]]));
        assert_eq!(f.num_vars, 2);
    }

    #[test]
    fn drops_tautology() {
        let f = parse_dimacs("p cnf 1 1\n1 -1 0\n").unwrap();
        assert_eq!(f.num_vars, 1);
        assert!(f.clauses.is_empty());
    }

    #[test]
    fn keeps_empty_clause_and_comments() {
        let f = parse_dimacs("c hello\np cnf 3 2\nc mid\n1 -3\n 2 0 0\n").unwrap();
        assert_eq!(f.clauses.len(), 2);
        assert!(f.clauses[1].is_empty());
        assert_eq!(f.clauses[0], Clause::from_dimacs(&[1, -3, 2]));
    }

    #[test]
    fn errors() {
        let e = parse_dimacs("p cnf 3 1\n4 0\n").unwrap_err();
        assert!(e.to_string().contains("literal out of range"), "{e}");
        assert!(e.to_string().contains("line 2"));
        assert!(parse_dimacs("p cnf 3\n1 0\n").is_err());
        assert!(parse_dimacs("p cnf 3 1\n1 2\n").unwrap_err().to_string().contains("terminating"));
        assert!(parse_dimacs("p cnf 3 1\n1 x 0\n").unwrap_err().to_string().contains("non-integer"));
        assert!(parse_dimacs("1 2 0\n").is_err());
    }

    #[test]
    fn writes() {
        let f = Formula::from_dimacs_clauses(&[&[1]]);
        assert_eq!(write_dimacs(&f), "p cnf 1 1\n1 0\n");
        assert_eq!(write_dimacs(&Formula::default()), "p cnf 0 0\n");
    }

    #[test]
    fn random_roundtrip() {
        let f = random_ksat(40, 170, 3, 9).unwrap();
        assert_eq!(parse_dimacs(&write_dimacs(&f)).unwrap(), f);
    }

    proptest! {
        #[test]
        fn roundtrip(n in 1u32..12, clauses in proptest::collection::vec(
            proptest::collection::vec((1u32..12, any::<bool>()), 0..5), 0..20)) {
            let clauses = clauses.into_iter().map(|c| Clause::new(
                c.into_iter().map(|(v, s)| Literal::new(1 + (v - 1) % n, s)).collect()));
            let f = Formula::new(n, clauses.collect()).normalized();
            prop_assert_eq!(parse_dimacs(&write_dimacs(&f)).unwrap(), f);
        }
    }
}
