//! Brute-force mutant subsumption over a bounded integer grid.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ror_replacements, MutationOperator, Replacement};
use crate::lang::ast::{ArithOp, RelOp};

/// Square grid `[lo, hi]²` of operand pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: i64,
    pub hi: i64,
}

impl Domain {
    pub const fn new(lo: i64, hi: i64) -> Domain {
        Domain { lo, hi }
    }

    pub const ROR_DEFAULT: Domain = Domain::new(-3, 3);
    pub const AOR_DEFAULT: Domain = Domain::new(-4, 4);
    /// Larger grid used to check that tables do not depend on grid size.
    pub const WIDE: Domain = Domain::new(-6, 6);

    /// Operand pairs the operator is judged on. AOR drops zero divisors.
    pub fn points(&self, operator: MutationOperator) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for a in self.lo..=self.hi {
            for b in self.lo..=self.hi {
                if operator == MutationOperator::Aor && b == 0 {
                    continue;
                }
                out.push((a, b));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("degenerate domain [{lo}, {hi}]: needs at least two distinct values per operand")]
    Degenerate { lo: i64, hi: i64 },
    #[error("UOI has no subsumption table: every reached UOI mutant is infected")]
    Uoi,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("subsumption table line {line}: {msg}")]
pub struct TableParseError {
    pub line: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsumptionEntry {
    pub operator: MutationOperator,
    pub original: String,
    pub subsuming: Vec<Replacement>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsumptionTable {
    pub entries: Vec<SubsumptionEntry>,
}

const GOLDEN: &str = include_str!("../../../../data/subsumption.tbl");

fn originals(operator: MutationOperator) -> Vec<Replacement> {
    match operator {
        MutationOperator::Aor => ArithOp::ALL.into_iter().map(Replacement::Arith).collect(),
        MutationOperator::Ror => RelOp::ALL.into_iter().map(Replacement::Rel).collect(),
        MutationOperator::Uoi => Vec::new(),
    }
}

fn candidates(original: Replacement) -> Vec<Replacement> {
    match original {
        Replacement::Arith(op) => ArithOp::ALL.into_iter().filter(|o| *o != op).map(Replacement::Arith).collect(),
        Replacement::Rel(op) => ror_replacements(op).collect(),
        _ => Vec::new(),
    }
}

/// Value of the expression at `(a, b)`; `None` when it raises.
fn eval(r: Replacement, a: i64, b: i64) -> Option<i64> {
    match r {
        Replacement::Arith(ArithOp::Add) => a.checked_add(b),
        Replacement::Arith(ArithOp::Sub) => a.checked_sub(b),
        Replacement::Arith(ArithOp::Mul) => a.checked_mul(b),
        Replacement::Arith(ArithOp::Div) => a.checked_div(b),
        Replacement::Arith(ArithOp::Rem) => a.checked_rem(b),
        Replacement::Rel(op) => Some(op.holds(a.cmp(&b)) as i64),
        Replacement::ConstTrue => Some(1),
        Replacement::ConstFalse => Some(0),
        Replacement::PlusOne | Replacement::MinusOne | Replacement::Negate => None,
    }
}

/// Grid points where the mutant's value differs from the original's.
pub fn kill_set(
    operator: MutationOperator,
    original: Replacement,
    replacement: Replacement,
    domain: &Domain,
) -> Vec<bool> {
    domain
        .points(operator)
        .into_iter()
        .map(|(a, b)| eval(original, a, b) != eval(replacement, a, b))
        .collect()
}

fn subset(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).all(|(x, y)| !*x || *y)
}

fn minimal(kills: &[Vec<bool>]) -> Vec<usize> {
    let mut keep = Vec::new();
    for (i, ki) in kills.iter().enumerate() {
        if !ki.iter().any(|&k| k) {
            continue; // equivalent on this grid
        }
        let dominated = kills.iter().enumerate().any(|(j, kj)| {
            j != i && kj.iter().any(|&k| k) && subset(kj, ki) && (kj != ki || j < i)
        });
        if !dominated {
            keep.push(i);
        }
    }
    keep
}

pub fn compute_subsumption_oracle(operator: MutationOperator, domain: &Domain) -> Result<SubsumptionTable, OracleError> {
    if operator == MutationOperator::Uoi {
        return Err(OracleError::Uoi);
    }
    if domain.hi <= domain.lo {
        return Err(OracleError::Degenerate { lo: domain.lo, hi: domain.hi });
    }
    let mut entries = Vec::new();
    for original in originals(operator) {
        let cands = candidates(original);
        let kills: Vec<Vec<bool>> = cands.iter().map(|&c| kill_set(operator, original, c, domain)).collect();
        let subsuming = minimal(&kills).into_iter().map(|i| cands[i]).collect();
        entries.push(SubsumptionEntry { operator, original: original.token().to_string(), subsuming });
    }
    Ok(SubsumptionTable { entries })
}

/// Checks on `domain` that every mutant at a site is subsumed by a selected one,
/// so any input set killing the selection kills them all.
pub fn verify_subsuming_selection(
    operator: MutationOperator,
    original: &str,
    selected: &[Replacement],
    domain: &Domain,
) -> bool {
    let Some(orig) = Replacement::from_token(original) else { return false };
    let sel: Vec<Vec<bool>> = selected.iter().map(|&r| kill_set(operator, orig, r, domain)).collect();
    candidates(orig).into_iter().all(|c| {
        let k = kill_set(operator, orig, c, domain);
        !k.iter().any(|&x| x) || sel.iter().any(|s| s.iter().any(|&x| x) && subset(s, &k))
    })
}

impl SubsumptionTable {
    /// ROR on its default grid merged with AOR on its default grid.
    pub fn compute_default() -> SubsumptionTable {
        let mut t = compute_subsumption_oracle(MutationOperator::Aor, &Domain::AOR_DEFAULT).expect("valid domain");
        t.entries
            .extend(compute_subsumption_oracle(MutationOperator::Ror, &Domain::ROR_DEFAULT).expect("valid domain").entries);
        t
    }

    /// The table shipped in `data/subsumption.tbl`.
    pub fn builtin() -> SubsumptionTable {
        SubsumptionTable::parse(GOLDEN).expect("shipped subsumption table parses")
    }

    pub fn golden_text() -> &'static str {
        GOLDEN
    }

    pub fn subsuming(&self, operator: MutationOperator, original: &str) -> Option<&[Replacement]> {
        self.entries
            .iter()
            .find(|e| e.operator == operator && e.original == original)
            .map(|e| e.subsuming.as_slice())
    }

    pub fn merge(&mut self, other: SubsumptionTable) {
        for e in other.entries {
            self.entries.retain(|x| !(x.operator == e.operator && x.original == e.original));
            self.entries.push(e);
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# covgen subsumption table v1\n# operator original : subsuming replacements\n");
        let mut sorted: BTreeMap<(MutationOperator, usize), &SubsumptionEntry> = BTreeMap::new();
        for e in &self.entries {
            let rank = Replacement::from_token(&e.original)
                .and_then(|r| originals(e.operator).iter().position(|o| *o == r))
                .unwrap_or(usize::MAX);
            sorted.insert((e.operator, rank), e);
        }
        for e in sorted.values() {
            let reps: Vec<&str> = e.subsuming.iter().map(|r| r.token()).collect();
            let _ = writeln!(out, "{} {} : {}", e.operator, e.original, reps.join(" "));
        }
        out
    }

    pub fn parse(text: &str) -> Result<SubsumptionTable, TableParseError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let err = |msg: &str| TableParseError { line: i + 1, msg: msg.to_string() };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (head, tail) = line.split_once(" : ").ok_or_else(|| err("expected `OP TOKEN : REPLACEMENTS`"))?;
            let mut head = head.split_whitespace();
            let (Some(op), Some(orig), None) = (head.next(), head.next(), head.next()) else {
                return Err(err("expected operator and original token"));
            };
            let operator = MutationOperator::from_name(op).ok_or_else(|| err("unknown operator"))?;
            if Replacement::from_token(orig).is_none() {
                return Err(err("unknown original token"));
            }
            let subsuming = tail
                .split_whitespace()
                .map(|t| Replacement::from_token(t).ok_or_else(|| err("unknown replacement token")))
                .collect::<Result<Vec<_>, _>>()?;
            entries.push(SubsumptionEntry { operator, original: orig.to_string(), subsuming });
        }
        Ok(SubsumptionTable { entries })
    }

    pub fn load(path: &Path) -> std::io::Result<SubsumptionTable> {
        let text = std::fs::read_to_string(path)?;
        SubsumptionTable::parse(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}
