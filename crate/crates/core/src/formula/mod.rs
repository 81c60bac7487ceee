//! Formula syntax: AST, concrete grammar, canonical printing, subformulas,
//! and the K-closure used by the decision procedure.
//!
//! The language has exactly five primitive constructors: propositions,
//! negation, conjunction, and the two modalities `K` ("the agent knows")
//! and `Kh` ("the agent knows how to achieve"). Everything else in the
//! concrete syntax (`|`, `->`, `<->`, `true`, `false`) is an abbreviation
//! expanded at parse time.

mod parser;

pub use parser::{parse, ParseError};

use std::collections::BTreeSet;
use std::fmt;

/// Reserved proposition backing the `false` abbreviation.
///
/// `false` parses to `(_f & ~_f)`. The name is not a legal user proposition
/// (those match `[a-z][a-zA-Z0-9_]*`), and model files may not declare it in
/// a valuation, so the expansion is false at every state of every model.
pub const FALSUM_PROP: &str = "_f";

/// `true` when `name` is a proposition users may declare: it matches
/// `[a-z][a-zA-Z0-9_]*` and is not a reserved word. [`FALSUM_PROP`] fails
/// the pattern, so it is excluded automatically.
pub fn is_valid_prop_name(name: &str) -> bool {
    let mut bytes = name.bytes();
    matches!(bytes.next(), Some(c) if c.is_ascii_lowercase())
        && name.bytes().all(|c| c.is_ascii_alphanumeric() || c == b'_')
        && !matches!(name, "true" | "false")
}

/// A formula over the five primitive constructors.
///
/// The derived `Ord` is the structural ordering used everywhere determinism
/// matters: constructor tag first (in declaration order), then operands
/// recursively, then proposition names lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Prop(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    K(Box<Formula>),
    Kh(Box<Formula>),
}

/// Ordered, deduplicated set of formulas. Iteration follows the structural
/// ordering, so every traversal of a `FormulaSet` is deterministic.
pub type FormulaSet = BTreeSet<Formula>;

impl Formula {
    pub fn prop(name: impl Into<String>) -> Self {
        Formula::Prop(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn k(f: Formula) -> Self {
        Formula::K(Box::new(f))
    }

    pub fn kh(f: Formula) -> Self {
        Formula::Kh(Box::new(f))
    }

    /// `a | b`, expanded to `~(~a & ~b)`.
    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    /// `a -> b`, expanded to `~(a & ~b)`.
    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    /// `a <-> b`, expanded to the conjunction of both implications.
    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    /// The fixed falsum expansion `(_f & ~_f)`.
    pub fn falsum() -> Self {
        Formula::and(
            Formula::prop(FALSUM_PROP),
            Formula::not(Formula::prop(FALSUM_PROP)),
        )
    }

    /// The fixed verum expansion `~(_f & ~_f)`.
    pub fn verum() -> Self {
        Formula::not(Formula::falsum())
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Prop(_) => 1,
            Formula::Not(f) | Formula::K(f) | Formula::Kh(f) => 1 + f.size(),
            Formula::And(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Proposition names occurring in the formula, in structural order.
    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Prop(p) => {
                out.insert(p.clone());
            }
            Formula::Not(f) | Formula::K(f) | Formula::Kh(f) => f.collect_props(out),
            Formula::And(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }

    /// Canonical concrete syntax; `parse` inverts it exactly.
    pub fn canonical(&self) -> String {
        self.to_string()
    }

    /// Concrete syntax with the parse-time abbreviations reconstructed
    /// (`->`, `|`, `<->`, `true`, `false`) where the AST matches their
    /// fixed expansions. Purely cosmetic; `canonical` remains the
    /// round-tripping form.
    pub fn pretty(&self) -> String {
        if *self == Formula::falsum() {
            return "false".to_string();
        }
        if *self == Formula::verum() {
            return "true".to_string();
        }
        if let Formula::And(a, b) = self {
            if let (Formula::Not(x), Formula::Not(y)) = (a.as_ref(), b.as_ref()) {
                if let (Formula::And(l1, r1), Formula::And(l2, r2)) = (x.as_ref(), y.as_ref()) {
                    if let (Formula::Not(q1), Formula::Not(p2)) = (r1.as_ref(), r2.as_ref()) {
                        if l1.as_ref() == p2.as_ref() && q1.as_ref() == l2.as_ref() {
                            return format!("({} <-> {})", l1.pretty(), l2.pretty());
                        }
                    }
                }
            }
        }
        if let Formula::Not(inner) = self {
            if let Formula::And(a, b) = inner.as_ref() {
                if let (Formula::Not(x), Formula::Not(y)) = (a.as_ref(), b.as_ref()) {
                    return format!("({} | {})", x.pretty(), y.pretty());
                }
                if let Formula::Not(y) = b.as_ref() {
                    return format!("({} -> {})", a.pretty(), y.pretty());
                }
            }
        }
        match self {
            Formula::Prop(p) => p.clone(),
            Formula::Not(f) => format!("~{}", f.pretty_delimited()),
            Formula::And(a, b) => format!("({} & {})", a.pretty(), b.pretty()),
            Formula::K(f) => format!("K {}", f.pretty_operand()),
            Formula::Kh(f) => format!("Kh {}", f.pretty_operand()),
        }
    }

    fn pretty_delimited(&self) -> String {
        let s = self.pretty();
        if s.starts_with('(') || matches!(self, Formula::Prop(_)) || s.starts_with('~') {
            s
        } else {
            format!("({s})")
        }
    }

    fn pretty_operand(&self) -> String {
        let s = self.pretty();
        match self {
            Formula::Prop(_) => s,
            _ if s.starts_with('(') => s,
            _ => format!("({s})"),
        }
    }
}

/// Writes the modal operand: bare for propositions, parenthesized otherwise
/// (conjunctions already carry their own parentheses).
struct Operand<'a>(&'a Formula);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Formula::Prop(_) | Formula::And(_, _) => write!(f, "{}", self.0),
            other => write!(f, "({other})"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Prop(p) => write!(f, "{p}"),
            Formula::Not(g) => write!(f, "~{g}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::K(g) => write!(f, "K {}", Operand(g)),
            Formula::Kh(g) => write!(f, "Kh {}", Operand(g)),
        }
    }
}

/// All subformulas of `f`, including `f` itself.
pub fn subformulas(f: &Formula) -> FormulaSet {
    let mut out = BTreeSet::new();
    collect_subformulas(f, &mut out);
    out
}

fn collect_subformulas(f: &Formula, out: &mut FormulaSet) {
    out.insert(f.clone());
    match f {
        Formula::Prop(_) => {}
        Formula::Not(g) | Formula::K(g) | Formula::Kh(g) => collect_subformulas(g, out),
        Formula::And(a, b) => {
            collect_subformulas(a, out);
            collect_subformulas(b, out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClosureError {
    #[error("set is not subformula-closed: `{formula}` is present but its subformula `{missing}` is not")]
    NotSubformulaClosed { formula: Formula, missing: Formula },
}

/// K-closure of a subformula-closed set: the set itself plus `K f` for each
/// member `f`. The result has at most twice the cardinality of the input.
pub fn closure(set: &FormulaSet) -> Result<FormulaSet, ClosureError> {
    for f in set {
        let children: Vec<&Formula> = match f {
            Formula::Prop(_) => vec![],
            Formula::Not(g) | Formula::K(g) | Formula::Kh(g) => vec![g],
            Formula::And(a, b) => vec![a, b],
        };
        for child in children {
            if !set.contains(child) {
                return Err(ClosureError::NotSubformulaClosed {
                    formula: f.clone(),
                    missing: (*child).clone(),
                });
            }
        }
    }
    let mut out = set.clone();
    for f in set {
        out.insert(Formula::k(f.clone()));
    }
    Ok(out)
}
