//! Text format for operators.
//!
//! ```text
//! # openkrylov operator
//! # n_sites = 4
//! # layout = full
//! # grade = 0
//! +2.5e-1 XXXI
//! -2.5e-1 XYYI
//! ```
//!
//! Coefficients are written in shortest round-trip form, so reading back a
//! written operator reproduces it bit for bit.

use std::fmt::Write as _;

use super::operator::{Layout, OperatorMap};
use super::string::PauliString;
use crate::error::{Error, Result};

pub fn write_operator(op: &OperatorMap) -> String {
    let mut out = String::new();
    out.push_str("# openkrylov operator\n");
    let _ = writeln!(out, "# n_sites = {}", op.n_sites());
    let _ = writeln!(out, "# layout = {}", op.layout().name());
    let _ = writeln!(out, "# grade = {}", op.grade());
    for (s, c) in op.sorted_terms() {
        let _ = writeln!(out, "{c:+e} {s}");
    }
    out
}

pub fn read_operator(text: &str) -> Result<OperatorMap> {
    let mut n_sites = None;
    let mut layout = Layout::Full;
    let mut grade = 0u8;
    let mut terms = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { line: line_no, msg };
        if let Some(rest) = line.strip_prefix('#') {
            let Some((key, value)) = rest.split_once('=') else {
                continue;
            };
            let value = value.trim();
            match key.trim() {
                "n_sites" => {
                    n_sites = Some(value.parse::<usize>().map_err(|e| parse_err(e.to_string()))?)
                }
                "layout" => {
                    layout = match value {
                        "full" => Layout::Full,
                        "translation_reduced" => Layout::TranslationReduced,
                        other => return Err(parse_err(format!("unknown layout {other:?}"))),
                    }
                }
                "grade" => {
                    grade = value.parse::<u8>().map_err(|e| parse_err(e.to_string()))?;
                    if grade > 1 {
                        return Err(parse_err("grade must be 0 or 1".into()));
                    }
                }
                _ => {}
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(c), Some(s), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err("expected `<coefficient> <pauli string>`".into()));
        };
        let c: f64 = c.parse().map_err(|_| parse_err(format!("bad coefficient {c:?}")))?;
        let s: PauliString = s.parse().map_err(|e: Error| parse_err(e.to_string()))?;
        terms.push((line_no, s, c));
    }
    let n_sites = n_sites
        .or_else(|| terms.first().map(|t| t.1.n_sites()))
        .ok_or(Error::Parse {
            line: 0,
            msg: "missing n_sites header and no terms".into(),
        })?;
    let mut op = OperatorMap::new(n_sites, layout)?.with_grade(grade);
    for (line, s, c) in terms {
        if s.n_sites() != n_sites {
            return Err(Error::Parse {
                line,
                msg: format!("string has {} sites, header says {n_sites}", s.n_sites()),
            });
        }
        op.add_term(s, c)?;
    }
    Ok(op)
}
