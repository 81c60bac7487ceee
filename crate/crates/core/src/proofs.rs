//! Hilbert-style proof checking for the K/Kh axiom system.
//!
//! A proof is a list of steps, each a formula with a justification:
//!
//! * `TAUT`: a propositional tautology, with modal subformulas treated as
//!   opaque atoms;
//! * an axiom-schema name: any substitution instance of that schema;
//! * `MP(i, j)`: modus ponens, where step `j` is `(step i) -> (current)`;
//! * `NECK(i)`: the current formula is `K (step i)`;
//! * `MONOKh(i)`: from `a -> b` at step `i`, conclude `Kh a -> Kh b`;
//! * `SUB(i, s)`: the current formula is step `i` under uniform
//!   substitution `s`.
//!
//! Schema letters range over arbitrary formulas. The one exception is the
//! falsum in `AxKhbot`: it stands for the fixed expansion `(_f & ~_f)`
//! only, so other propositionally unsatisfiable formulas do not match.

use crate::formula::{is_valid_prop_name, parse, Formula, ParseError, FALSUM_PROP};
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

/// Maximum distinct opaque atoms for the tautology truth table.
pub const TAUTOLOGY_ATOM_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AxiomName {
    DistK,
    T,
    Four,
    Five,
    KToKh,
    KhToKhK,
    KhToKKh,
    KhKh,
    KhBot,
}

impl AxiomName {
    pub const ALL: [AxiomName; 9] = [
        AxiomName::DistK,
        AxiomName::T,
        AxiomName::Four,
        AxiomName::Five,
        AxiomName::KToKh,
        AxiomName::KhToKhK,
        AxiomName::KhToKKh,
        AxiomName::KhKh,
        AxiomName::KhBot,
    ];

    /// The rule string used in proof files.
    pub fn rule_name(&self) -> &'static str {
        match self {
            AxiomName::DistK => "DISTK",
            AxiomName::T => "T",
            AxiomName::Four => "4",
            AxiomName::Five => "5",
            AxiomName::KToKh => "AxKtoKh",
            AxiomName::KhToKhK => "AxKhtoKhK",
            AxiomName::KhToKKh => "AxKhtoKKh",
            AxiomName::KhKh => "AxKhKh",
            AxiomName::KhBot => "AxKhbot",
        }
    }

    pub fn from_rule_name(s: &str) -> Option<AxiomName> {
        AxiomName::ALL.into_iter().find(|a| a.rule_name() == s)
    }
}

impl fmt::Display for AxiomName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rule_name())
    }
}

/// The schema for an axiom, with `p` and `q` as schema letters.
pub fn axiom_schema(name: AxiomName) -> Formula {
    use Formula as F;
    let p = || F::prop("p");
    let q = || F::prop("q");
    match name {
        AxiomName::DistK => F::implies(
            F::and(F::k(p()), F::k(F::implies(p(), q()))),
            F::k(q()),
        ),
        AxiomName::T => F::implies(F::k(p()), p()),
        AxiomName::Four => F::implies(F::k(p()), F::k(F::k(p()))),
        AxiomName::Five => F::implies(F::not(F::k(p())), F::k(F::not(F::k(p())))),
        AxiomName::KToKh => F::implies(F::k(p()), F::kh(p())),
        AxiomName::KhToKhK => F::implies(F::kh(p()), F::kh(F::k(p()))),
        AxiomName::KhToKKh => F::implies(F::kh(p()), F::k(F::kh(p()))),
        AxiomName::KhKh => F::implies(F::kh(F::kh(p())), F::kh(p())),
        AxiomName::KhBot => F::implies(F::kh(F::falsum()), F::falsum()),
    }
}

/// Matches `f` against a schema whose proposition letters (other than the
/// falsum prop) are pattern variables. On success the binding maps each
/// letter to the formula it stood for; applying it to the schema
/// reproduces `f`.
pub fn match_schema(schema: &Formula, f: &Formula) -> Option<BTreeMap<String, Formula>> {
    let mut binding = BTreeMap::new();
    if unify(schema, f, &mut binding) {
        Some(binding)
    } else {
        None
    }
}

fn unify(schema: &Formula, f: &Formula, binding: &mut BTreeMap<String, Formula>) -> bool {
    match (schema, f) {
        (Formula::Prop(name), _) if name == FALSUM_PROP => {
            matches!(f, Formula::Prop(n) if n == FALSUM_PROP)
        }
        (Formula::Prop(name), _) => match binding.get(name) {
            Some(bound) => bound == f,
            None => {
                binding.insert(name.clone(), f.clone());
                true
            }
        },
        (Formula::Not(s), Formula::Not(g)) => unify(s, g, binding),
        (Formula::And(s1, s2), Formula::And(g1, g2)) => {
            unify(s1, g1, binding) && unify(s2, g2, binding)
        }
        (Formula::K(s), Formula::K(g)) => unify(s, g, binding),
        (Formula::Kh(s), Formula::Kh(g)) => unify(s, g, binding),
        _ => false,
    }
}

/// Uniform substitution of formulas for proposition letters.
pub fn apply_subst(f: &Formula, subst: &BTreeMap<String, Formula>) -> Formula {
    match f {
        Formula::Prop(p) => subst.get(p).cloned().unwrap_or_else(|| f.clone()),
        Formula::Not(g) => Formula::not(apply_subst(g, subst)),
        Formula::And(a, b) => Formula::and(apply_subst(a, subst), apply_subst(b, subst)),
        Formula::K(g) => Formula::k(apply_subst(g, subst)),
        Formula::Kh(g) => Formula::kh(apply_subst(g, subst)),
    }
}

/// `true` when `f` is a substitution instance of the named axiom schema.
pub fn is_axiom_instance(name: AxiomName, f: &Formula) -> bool {
    match_schema(&axiom_schema(name), f).is_some()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("tautology check needs {count} atoms, above the cap of {cap}")]
pub struct TooManyAtoms {
    pub count: usize,
    pub cap: usize,
}

fn collect_opaque_atoms(f: &Formula, atoms: &mut BTreeSet<Formula>) {
    match f {
        Formula::Not(g) => collect_opaque_atoms(g, atoms),
        Formula::And(a, b) => {
            collect_opaque_atoms(a, atoms);
            collect_opaque_atoms(b, atoms);
        }
        other => {
            atoms.insert(other.clone());
        }
    }
}

fn eval_boolean(f: &Formula, truth: &BTreeMap<&Formula, bool>) -> bool {
    match f {
        Formula::Not(g) => !eval_boolean(g, truth),
        Formula::And(a, b) => eval_boolean(a, truth) && eval_boolean(b, truth),
        other => truth[other],
    }
}

/// Truth-table tautology check with modal subformulas treated as opaque
/// atoms, so `K p -> p` is *not* a tautology here.
pub fn is_tautology(f: &Formula) -> Result<bool, TooManyAtoms> {
    let mut atoms = BTreeSet::new();
    collect_opaque_atoms(f, &mut atoms);
    if atoms.len() > TAUTOLOGY_ATOM_CAP {
        return Err(TooManyAtoms {
            count: atoms.len(),
            cap: TAUTOLOGY_ATOM_CAP,
        });
    }
    let atoms: Vec<&Formula> = atoms.iter().collect();
    for mask in 0u32..(1u32 << atoms.len()) {
        let truth: BTreeMap<&Formula, bool> = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (*a, mask & (1 << i) != 0))
            .collect();
        if !eval_boolean(f, &truth) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Taut,
    Axiom(AxiomName),
    Mp(usize, usize),
    NecK(usize),
    MonoKh(usize),
    Sub(usize, BTreeMap<String, Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub formula: Formula,
    pub justification: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProofScript {
    pub steps: Vec<Step>,
}

impl ProofScript {
    pub fn conclusion(&self) -> Option<&Formula> {
        self.steps.last().map(|s| &s.formula)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProofFailure {
    NotAnInstance,
    BadPremiseShape,
    IndexOutOfRange,
    SubstitutionMismatch,
}

impl fmt::Display for ProofFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProofFailure::NotAnInstance => "not-an-instance",
            ProofFailure::BadPremiseShape => "bad-premise-shape",
            ProofFailure::IndexOutOfRange => "index-out-of-range",
            ProofFailure::SubstitutionMismatch => "substitution-mismatch",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("step {step}: {reason}: {detail}")]
pub struct ProofError {
    pub step: usize,
    pub reason: ProofFailure,
    pub detail: String,
}

fn fail(step: usize, reason: ProofFailure, detail: impl Into<String>) -> ProofError {
    ProofError {
        step,
        reason,
        detail: detail.into(),
    }
}

/// Destructures the implication abbreviation `~(a & ~b)` into `(a, b)`.
fn as_implication(f: &Formula) -> Option<(&Formula, &Formula)> {
    if let Formula::Not(inner) = f {
        if let Formula::And(a, rest) = inner.as_ref() {
            if let Formula::Not(b) = rest.as_ref() {
                return Some((a, b));
            }
        }
    }
    None
}

/// Checks every step of a proof script, reporting the first invalid one.
pub fn check_proof(script: &ProofScript) -> Result<(), ProofError> {
    for (idx, step) in script.steps.iter().enumerate() {
        check_step(script, idx, step)?;
    }
    Ok(())
}

fn premise(script: &ProofScript, idx: usize, at: usize) -> Result<&Formula, ProofError> {
    if at >= idx {
        return Err(fail(
            idx,
            ProofFailure::IndexOutOfRange,
            format!("premise {at} does not refer to an earlier step"),
        ));
    }
    Ok(&script.steps[at].formula)
}

fn check_step(script: &ProofScript, idx: usize, step: &Step) -> Result<(), ProofError> {
    match &step.justification {
        Justification::Taut => match is_tautology(&step.formula) {
            Ok(true) => Ok(()),
            Ok(false) => Err(fail(
                idx,
                ProofFailure::NotAnInstance,
                "formula is not a propositional tautology",
            )),
            Err(e) => Err(fail(idx, ProofFailure::NotAnInstance, e.to_string())),
        },
        Justification::Axiom(name) => {
            if is_axiom_instance(*name, &step.formula) {
                Ok(())
            } else {
                Err(fail(
                    idx,
                    ProofFailure::NotAnInstance,
                    format!("formula is not an instance of {name}"),
                ))
            }
        }
        Justification::Mp(i, j) => {
            let antecedent = premise(script, idx, *i)?;
            let implication = premise(script, idx, *j)?;
            let expected = Formula::implies(antecedent.clone(), step.formula.clone());
            if *implication == expected {
                Ok(())
            } else {
                Err(fail(
                    idx,
                    ProofFailure::BadPremiseShape,
                    format!("step {j} is not `(step {i}) -> (step {idx})`"),
                ))
            }
        }
        Justification::NecK(i) => {
            let inner = premise(script, idx, *i)?;
            if step.formula == Formula::k(inner.clone()) {
                Ok(())
            } else {
                Err(fail(
                    idx,
                    ProofFailure::BadPremiseShape,
                    format!("formula is not `K (step {i})`"),
                ))
            }
        }
        Justification::MonoKh(i) => {
            let prem = premise(script, idx, *i)?;
            let Some((a, b)) = as_implication(prem) else {
                return Err(fail(
                    idx,
                    ProofFailure::BadPremiseShape,
                    format!("step {i} is not an implication"),
                ));
            };
            let expected = Formula::implies(Formula::kh(a.clone()), Formula::kh(b.clone()));
            if step.formula == expected {
                Ok(())
            } else {
                Err(fail(
                    idx,
                    ProofFailure::BadPremiseShape,
                    "formula is not `Kh a -> Kh b` for the premise `a -> b`",
                ))
            }
        }
        Justification::Sub(i, subst) => {
            let prem = premise(script, idx, *i)?;
            if subst.keys().any(|k| !is_valid_prop_name(k)) {
                return Err(fail(
                    idx,
                    ProofFailure::SubstitutionMismatch,
                    "substitution keys must be user proposition names",
                ));
            }
            if step.formula == apply_subst(prem, subst) {
                Ok(())
            } else {
                Err(fail(
                    idx,
                    ProofFailure::SubstitutionMismatch,
                    format!("formula is not step {i} under the given substitution"),
                ))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProofParseError {
    #[error("proof parse error: {0}")]
    Json(String),
    #[error("step {step}: unknown rule `{rule}`")]
    UnknownRule { step: usize, rule: String },
    #[error("step {step}: rule {rule} takes {expected} premise(s), found {found}")]
    WrongPremiseCount {
        step: usize,
        rule: String,
        expected: usize,
        found: usize,
    },
    #[error("step {step}: {source}")]
    Formula {
        step: usize,
        #[source]
        source: ParseError,
    },
    #[error("step {step}: substitution key `{key}` is not a proposition name")]
    BadSubstKey { step: usize, key: String },
    #[error("step {step}: rule {rule} does not take a substitution")]
    UnexpectedSubst { step: usize, rule: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    formula: String,
    rule: String,
    #[serde(default)]
    premises: Vec<usize>,
    #[serde(default)]
    subst: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScript {
    steps: Vec<RawStep>,
}

impl ProofScript {
    pub fn from_json_str(text: &str) -> Result<ProofScript, ProofParseError> {
        let raw: RawScript =
            serde_json::from_str(text).map_err(|e| ProofParseError::Json(e.to_string()))?;
        let mut steps = Vec::with_capacity(raw.steps.len());
        for (idx, rs) in raw.steps.into_iter().enumerate() {
            let formula = parse(&rs.formula).map_err(|source| ProofParseError::Formula {
                step: idx,
                source,
            })?;
            let expect_premises = |n: usize| {
                if rs.premises.len() == n {
                    Ok(())
                } else {
                    Err(ProofParseError::WrongPremiseCount {
                        step: idx,
                        rule: rs.rule.clone(),
                        expected: n,
                        found: rs.premises.len(),
                    })
                }
            };
            let no_subst = || {
                if rs.subst.is_empty() {
                    Ok(())
                } else {
                    Err(ProofParseError::UnexpectedSubst {
                        step: idx,
                        rule: rs.rule.clone(),
                    })
                }
            };
            let justification = match rs.rule.as_str() {
                "TAUT" => {
                    expect_premises(0)?;
                    no_subst()?;
                    Justification::Taut
                }
                "MP" => {
                    expect_premises(2)?;
                    no_subst()?;
                    Justification::Mp(rs.premises[0], rs.premises[1])
                }
                "NECK" => {
                    expect_premises(1)?;
                    no_subst()?;
                    Justification::NecK(rs.premises[0])
                }
                "MONOKh" => {
                    expect_premises(1)?;
                    no_subst()?;
                    Justification::MonoKh(rs.premises[0])
                }
                "SUB" => {
                    expect_premises(1)?;
                    let mut subst = BTreeMap::new();
                    for (key, value) in &rs.subst {
                        if !is_valid_prop_name(key) {
                            return Err(ProofParseError::BadSubstKey {
                                step: idx,
                                key: key.clone(),
                            });
                        }
                        let parsed =
                            parse(value).map_err(|source| ProofParseError::Formula {
                                step: idx,
                                source,
                            })?;
                        subst.insert(key.clone(), parsed);
                    }
                    Justification::Sub(rs.premises[0], subst)
                }
                other => match AxiomName::from_rule_name(other) {
                    Some(name) => {
                        expect_premises(0)?;
                        no_subst()?;
                        Justification::Axiom(name)
                    }
                    None => {
                        return Err(ProofParseError::UnknownRule {
                            step: idx,
                            rule: rs.rule.clone(),
                        })
                    }
                },
            };
            steps.push(Step {
                formula,
                justification,
            });
        }
        Ok(ProofScript { steps })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ProofScript, ProofParseError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            ProofParseError::Json(format!("{}: {e}", path.as_ref().display()))
        })?;
        ProofScript::from_json_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> ProofScript {
        ProofScript::load(format!(
            "{}/../../fixtures/neg_introspection.proof",
            env!("CARGO_MANIFEST_DIR")
        ))
        .unwrap()
    }

    #[test]
    fn every_schema_matches_itself() {
        for name in AxiomName::ALL {
            assert!(is_axiom_instance(name, &axiom_schema(name)), "{name}");
        }
    }

    #[test]
    fn schema_instances_match_and_bindings_round_trip() {
        let inst = parse("K (p & q) -> Kh (p & q)").unwrap();
        let schema = axiom_schema(AxiomName::KToKh);
        let binding = match_schema(&schema, &inst).unwrap();
        assert_eq!(apply_subst(&schema, &binding), inst);

        let not_inst = parse("K p -> Kh q").unwrap();
        assert!(match_schema(&schema, &not_inst).is_none());
    }

    #[test]
    fn distk_requires_consistent_bindings() {
        assert!(is_axiom_instance(
            AxiomName::DistK,
            &parse("K p & K (p -> K q) -> K K q").unwrap()
        ));
        assert!(!is_axiom_instance(
            AxiomName::DistK,
            &parse("K p & K (q -> p) -> K q").unwrap()
        ));
    }

    #[test]
    fn khbot_only_accepts_the_fixed_falsum() {
        assert!(is_axiom_instance(
            AxiomName::KhBot,
            &parse("Kh false -> false").unwrap()
        ));
        // Another propositional contradiction is not the falsum expansion.
        assert!(!is_axiom_instance(
            AxiomName::KhBot,
            &parse("Kh (q & ~q) -> (q & ~q)").unwrap()
        ));
    }

    #[test]
    fn tautology_treats_modal_atoms_as_opaque() {
        assert_eq!(is_tautology(&parse("p -> p").unwrap()), Ok(true));
        assert_eq!(is_tautology(&parse("p | ~p").unwrap()), Ok(true));
        assert_eq!(
            is_tautology(&parse("(K p -> Kh p) -> ((Kh p -> p) -> (K p -> p))").unwrap()),
            Ok(true)
        );
        assert_eq!(is_tautology(&parse("K p -> p").unwrap()), Ok(false));
        assert_eq!(is_tautology(&parse("p").unwrap()), Ok(false));
    }

    #[test]
    fn tautology_atom_cap_is_enforced() {
        let mut f = Formula::prop("a0");
        for i in 1..=20 {
            f = Formula::and(f, Formula::prop(format!("a{i}")));
        }
        let f = Formula::implies(f.clone(), f);
        assert!(matches!(is_tautology(&f), Err(TooManyAtoms { count: 21, .. })));
    }

    #[test]
    fn fixture_checks_and_concludes_negative_introspection() {
        let script = fixture();
        assert_eq!(script.steps.len(), 18);
        check_proof(&script).unwrap();
        assert_eq!(
            script.conclusion().unwrap(),
            &parse("~Kh p -> K ~Kh p").unwrap()
        );
    }

    #[test]
    fn mp_rejects_misshapen_premises() {
        let script = ProofScript {
            steps: vec![
                Step {
                    formula: parse("p -> p").unwrap(),
                    justification: Justification::Taut,
                },
                Step {
                    formula: parse("q -> q").unwrap(),
                    justification: Justification::Taut,
                },
                Step {
                    formula: parse("p").unwrap(),
                    justification: Justification::Mp(0, 1),
                },
            ],
        };
        let err = check_proof(&script).unwrap_err();
        assert_eq!(err.step, 2);
        assert_eq!(err.reason, ProofFailure::BadPremiseShape);
    }

    #[test]
    fn premises_must_point_backwards() {
        let script = ProofScript {
            steps: vec![Step {
                formula: parse("K (p -> p)").unwrap(),
                justification: Justification::NecK(0),
            }],
        };
        let err = check_proof(&script).unwrap_err();
        assert_eq!(err.step, 0);
        assert_eq!(err.reason, ProofFailure::IndexOutOfRange);
    }

    #[test]
    fn axiom_claims_are_verified() {
        let script = ProofScript {
            steps: vec![Step {
                formula: parse("K p -> q").unwrap(),
                justification: Justification::Axiom(AxiomName::T),
            }],
        };
        let err = check_proof(&script).unwrap_err();
        assert_eq!(err.reason, ProofFailure::NotAnInstance);
    }

    #[test]
    fn monokh_lifts_implications() {
        let script = ProofScript {
            steps: vec![
                Step {
                    formula: parse("p & q -> p").unwrap(),
                    justification: Justification::Taut,
                },
                Step {
                    formula: parse("Kh (p & q) -> Kh p").unwrap(),
                    justification: Justification::MonoKh(0),
                },
            ],
        };
        check_proof(&script).unwrap();
    }

    #[test]
    fn monokh_requires_an_implication_premise() {
        let script = ProofScript {
            steps: vec![
                Step {
                    formula: parse("p | ~p").unwrap(),
                    justification: Justification::Taut,
                },
                Step {
                    formula: parse("Kh p -> Kh (~p)").unwrap(),
                    justification: Justification::MonoKh(0),
                },
            ],
        };
        let err = check_proof(&script).unwrap_err();
        assert_eq!(err.reason, ProofFailure::BadPremiseShape);
    }

    #[test]
    fn sub_applies_uniform_substitution() {
        let subst: BTreeMap<String, Formula> =
            [("p".to_string(), parse("Kh q").unwrap())].into_iter().collect();
        let script = ProofScript {
            steps: vec![
                Step {
                    formula: parse("K p -> p").unwrap(),
                    justification: Justification::Axiom(AxiomName::T),
                },
                Step {
                    formula: parse("K Kh q -> Kh q").unwrap(),
                    justification: Justification::Sub(0, subst.clone()),
                },
                Step {
                    formula: parse("K Kh q -> q").unwrap(),
                    justification: Justification::Sub(0, subst),
                },
            ],
        };
        let err = check_proof(&script).unwrap_err();
        assert_eq!(err.step, 2);
        assert_eq!(err.reason, ProofFailure::SubstitutionMismatch);
    }

    #[test]
    fn proof_files_reject_unknown_rules_and_arities() {
        let bad_rule = r#"{"steps": [{"formula": "p -> p", "rule": "GUESS"}]}"#;
        assert!(matches!(
            ProofScript::from_json_str(bad_rule),
            Err(ProofParseError::UnknownRule { .. })
        ));

        let bad_arity = r#"{"steps": [{"formula": "p -> p", "rule": "MP", "premises": [0]}]}"#;
        assert!(matches!(
            ProofScript::from_json_str(bad_arity),
            Err(ProofParseError::WrongPremiseCount { .. })
        ));

        let bad_key =
            r#"{"steps": [{"formula": "p -> p", "rule": "SUB", "premises": [0], "subst": {"_f": "q"}}]}"#;
        assert!(matches!(
            ProofScript::from_json_str(bad_key),
            Err(ProofParseError::BadSubstKey { .. })
        ));
    }
}
