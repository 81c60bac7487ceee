//! Satisfiability and validity.
//!
//! The procedure builds a finite candidate model for a formula and then
//! model-checks the formula at each candidate state:
//!
//! 1. Close the subformula set under one application of `K` ("closure").
//! 2. Enumerate every assignment of in/out marks over the closure that is
//!    Boolean-coherent and respects a small set of local axiom rules
//!    ("atoms"). Atoms approximate consistent formula sets: the rules
//!    prune obvious contradictions but do not attempt proof search, so
//!    the atom set may be a strict superset of the truly consistent one.
//! 3. Assemble the atoms into a model: atoms with the same in-marked
//!    `K`-formulas are epistemically indistinguishable, and each formula
//!    `f` with `Kh f` in the closure becomes an action stepping from
//!    atoms that claim `Kh f` but not `K f` to atoms that claim `K f`.
//! 4. Evaluate the target formula at every state with the checker.
//!
//! A `Sat` answer is unconditionally sound: it comes with a concrete
//! model and state that the checker verified. An `Unsat` answer says no
//! candidate state satisfied the formula; because the atom approximation
//! could in principle distort the candidate model, `Unsat` answers are
//! additionally cross-checked against [`bounded::bounded_model_search`]
//! whenever the formula is within that oracle's range, and a
//! disagreement is reported as an error rather than repaired silently.

pub mod bounded;

use crate::checker::extension;
use crate::formula::{closure, subformulas, Formula, FormulaSet, FALSUM_PROP};
use crate::model::{ActionId, Model, StateId};
use std::collections::{BTreeMap, BTreeSet};

/// Default cap on the closure size; enumeration is exponential in it.
pub const DEFAULT_CLOSURE_CAP: usize = 20;

/// Default state bound for the cross-check of `Unsat` answers.
pub const DEFAULT_CROSS_CHECK_STATES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecisionError {
    #[error("closure has {size} formulas, above the cap of {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("indistinguishable atoms disagree on a Kh-formula: {detail}")]
    KhPartMismatch { detail: String },
    #[error(
        "`{formula}` was reported unsatisfiable but a {states}-state model satisfies it"
    )]
    OracleDisagreement { formula: String, states: usize },
}

#[derive(Debug, Clone)]
pub struct DecisionConfig {
    /// Maximum closure size accepted before refusing with `TooLarge`.
    pub closure_cap: usize,
    /// `Unsat` answers are cross-checked by searching for a model with up
    /// to this many states (clamped to the search oracle's own bound of
    /// 4). Zero disables the cross-check.
    pub cross_check_states: usize,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        DecisionConfig {
            closure_cap: DEFAULT_CLOSURE_CAP,
            cross_check_states: DEFAULT_CROSS_CHECK_STATES,
        }
    }
}

/// One coherent in/out assignment over a closure, kept as its in-marked
/// subset. Formulas of the closure outside `members` are marked out.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Atom {
    members: FormulaSet,
}

impl Atom {
    pub fn contains(&self, f: &Formula) -> bool {
        self.members.contains(f)
    }

    pub fn members(&self) -> &FormulaSet {
        &self.members
    }

    /// The in-marked `K`-formulas.
    pub fn k_part(&self) -> FormulaSet {
        self.members
            .iter()
            .filter(|g| matches!(g, Formula::K(_)))
            .cloned()
            .collect()
    }

    /// The in-marked `Kh`-formulas.
    pub fn kh_part(&self) -> FormulaSet {
        self.members
            .iter()
            .filter(|g| matches!(g, Formula::Kh(_)))
            .cloned()
            .collect()
    }
}

/// All atoms over the closure of one formula, in ascending member-set
/// order.
#[derive(Debug, Clone)]
pub struct AtomSet {
    closure: FormulaSet,
    atoms: Vec<Atom>,
}

impl AtomSet {
    pub fn closure(&self) -> &FormulaSet {
        &self.closure
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

enum Node {
    Const(bool),
    Free(usize),
    Not(usize),
    And(usize, usize),
}

/// Coherence obligations triggered by an in-marked modal formula.
struct KCheck {
    k: usize,
    body: usize,
    kh_of_body: Option<usize>,
}

struct KhCheck {
    kh: usize,
    k_of_kh: usize,
}

struct Compiled {
    formulas: Vec<Formula>,
    nodes: Vec<Node>,
    eval_order: Vec<usize>,
    free_bits: usize,
    k_checks: Vec<KCheck>,
    kh_checks: Vec<KhCheck>,
}

fn compile(cl: &FormulaSet) -> Compiled {
    let formulas: Vec<Formula> = cl.iter().cloned().collect();
    let index: BTreeMap<&Formula, usize> =
        formulas.iter().enumerate().map(|(i, f)| (f, i)).collect();
    let mut nodes = Vec::with_capacity(formulas.len());
    let mut free_bits = 0;
    let mut k_checks = Vec::new();
    let mut kh_checks = Vec::new();
    for (i, f) in formulas.iter().enumerate() {
        let node = match f {
            Formula::Prop(name) if name == FALSUM_PROP => Node::Const(false),
            Formula::Prop(_) => {
                free_bits += 1;
                Node::Free(free_bits - 1)
            }
            Formula::Not(x) => Node::Not(index[x.as_ref()]),
            Formula::And(a, b) => Node::And(index[a.as_ref()], index[b.as_ref()]),
            Formula::K(x) => {
                free_bits += 1;
                k_checks.push(KCheck {
                    k: i,
                    body: index[x.as_ref()],
                    kh_of_body: index.get(&Formula::kh(x.as_ref().clone())).copied(),
                });
                Node::Free(free_bits - 1)
            }
            Formula::Kh(_) => {
                free_bits += 1;
                kh_checks.push(KhCheck {
                    kh: i,
                    // the closure applies K to each of its formulas
                    k_of_kh: index[&Formula::k(f.clone())],
                });
                Node::Free(free_bits - 1)
            }
        };
        nodes.push(node);
    }
    // strict subformulas are smaller, so size order evaluates children
    // before their parents
    let mut eval_order: Vec<usize> = (0..formulas.len()).collect();
    eval_order.sort_by_key(|&i| formulas[i].size());
    Compiled {
        formulas,
        nodes,
        eval_order,
        free_bits,
        k_checks,
        kh_checks,
    }
}

pub fn atoms(f: &Formula) -> Result<AtomSet, DecisionError> {
    atoms_with(f, DEFAULT_CLOSURE_CAP)
}

/// Enumerates the coherent assignments over the closure of `f`.
///
/// Proposition letters and modal formulas are assigned freely; Boolean
/// composites follow from their parts. An assignment survives when it
/// satisfies, for every in-marked `K x`: `x` is in, and `Kh x` is in if
/// the closure holds it; and for every in-marked `Kh x`: `K Kh x` is in.
/// The distinguished falsum proposition is always out. Deeper
/// consequences (notably `K x` forcing `K K x`) are deliberately not
/// imposed; the epistemic block structure of the candidate model carries
/// them instead.
pub fn atoms_with(f: &Formula, closure_cap: usize) -> Result<AtomSet, DecisionError> {
    let cl = closure(&subformulas(f)).expect("subformula sets are closed");
    if cl.len() > closure_cap {
        return Err(DecisionError::TooLarge {
            size: cl.len(),
            cap: closure_cap,
        });
    }
    let compiled = compile(&cl);
    assert!(compiled.free_bits < 64, "closure cap permits runaway enumeration");
    let n = compiled.formulas.len();
    let mut vals = vec![false; n];
    let mut atoms = Vec::new();
    for mask in 0u64..(1u64 << compiled.free_bits) {
        for &i in &compiled.eval_order {
            vals[i] = match compiled.nodes[i] {
                Node::Const(b) => b,
                Node::Free(bit) => mask >> bit & 1 == 1,
                Node::Not(x) => !vals[x],
                Node::And(a, b) => vals[a] && vals[b],
            };
        }
        let coherent = compiled
            .k_checks
            .iter()
            .all(|c| !vals[c.k] || (vals[c.body] && c.kh_of_body.is_none_or(|k| vals[k])))
            && compiled.kh_checks.iter().all(|c| !vals[c.kh] || vals[c.k_of_kh]);
        if coherent {
            let members: FormulaSet = compiled
                .formulas
                .iter()
                .enumerate()
                .filter(|(i, _)| vals[*i])
                .map(|(_, g)| g.clone())
                .collect();
            atoms.push(Atom { members });
        }
    }
    atoms.sort();
    Ok(AtomSet { closure: cl, atoms })
}

/// The candidate model assembled from an atom set. State `a<i>` hosts
/// the i-th atom of [`CanonicalModel::atom_set`].
#[derive(Debug, Clone)]
pub struct CanonicalModel {
    model: Model,
    atom_set: AtomSet,
    states: Vec<StateId>,
    bound: u128,
}

impl CanonicalModel {
    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn atom_set(&self) -> &AtomSet {
        &self.atom_set
    }

    /// States indexed in step with `atom_set().atoms()`.
    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// The structural ceiling 2^(2·size) on the state count, saturating.
    pub fn state_bound(&self) -> u128 {
        self.bound
    }
}

pub fn canonical_model(f: &Formula) -> Result<CanonicalModel, DecisionError> {
    canonical_model_with(f, DEFAULT_CLOSURE_CAP)
}

/// Builds the candidate model over `atoms_with(f, closure_cap)`.
///
/// Atoms sharing their K-part form an equivalence block; every formula
/// `g` with `Kh g` in the closure is an action whose transitions run
/// from atoms marked `Kh g` but not `K g` to atoms marked `K g`; an atom
/// satisfies exactly its in-marked propositions.
pub fn canonical_model_with(
    f: &Formula,
    closure_cap: usize,
) -> Result<CanonicalModel, DecisionError> {
    let atom_set = atoms_with(f, closure_cap)?;
    let states: Vec<StateId> = (0..atom_set.len())
        .map(|i| StateId::new(format!("a{i}")))
        .collect();

    let mut blocks: BTreeMap<FormulaSet, Vec<usize>> = BTreeMap::new();
    for (i, atom) in atom_set.atoms().iter().enumerate() {
        blocks.entry(atom.k_part()).or_default().push(i);
    }
    for members in blocks.values() {
        let first = &atom_set.atoms()[members[0]];
        for &i in &members[1..] {
            let other = &atom_set.atoms()[i];
            if first.kh_part() != other.kh_part() {
                return Err(DecisionError::KhPartMismatch {
                    detail: format!(
                        "states {} and {} share their K-formulas but not their Kh-formulas",
                        states[members[0]], states[i]
                    ),
                });
            }
        }
    }

    let mut actions = Vec::new();
    let mut transitions = Vec::new();
    for g in atom_set.closure() {
        let Formula::Kh(body) = g else { continue };
        let action = ActionId::new(body.canonical());
        let k_of_body = Formula::k(body.as_ref().clone());
        let sources: Vec<usize> = atom_set
            .atoms()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.contains(g) && !a.contains(&k_of_body))
            .map(|(i, _)| i)
            .collect();
        let targets: Vec<usize> = atom_set
            .atoms()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.contains(&k_of_body))
            .map(|(i, _)| i)
            .collect();
        for &i in &sources {
            for &j in &targets {
                transitions.push((states[i].clone(), action.clone(), states[j].clone()));
            }
        }
        actions.push(action);
    }

    let equiv: Vec<BTreeSet<StateId>> = blocks
        .values()
        .map(|members| members.iter().map(|&i| states[i].clone()).collect())
        .collect();
    let valuation: Vec<(StateId, BTreeSet<String>)> = atom_set
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let props: BTreeSet<String> = a
                .members()
                .iter()
                .filter_map(|g| match g {
                    Formula::Prop(p) => Some(p.clone()),
                    _ => None,
                })
                .collect();
            (states[i].clone(), props)
        })
        .collect();

    let model = Model::new(states.clone(), actions, transitions, equiv, valuation)
        .expect("atom construction yields a valid model");
    let bound = 1u128
        .checked_shl(2 * f.size() as u32)
        .unwrap_or(u128::MAX);
    assert!(
        states.len() as u128 <= bound,
        "state count escaped its structural bound"
    );
    Ok(CanonicalModel {
        model,
        atom_set,
        states,
        bound,
    })
}

/// Outcome of a satisfiability query. `Sat` carries a verified witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Satisfiability {
    Sat { model: Model, state: StateId },
    Unsat,
}

impl Satisfiability {
    pub fn is_sat(&self) -> bool {
        matches!(self, Satisfiability::Sat { .. })
    }
}

pub fn satisfiable(f: &Formula) -> Result<Satisfiability, DecisionError> {
    satisfiable_with(f, &DecisionConfig::default())
}

/// Model-checks `f` at every candidate state; see the module docs for
/// the soundness status of each verdict.
pub fn satisfiable_with(
    f: &Formula,
    config: &DecisionConfig,
) -> Result<Satisfiability, DecisionError> {
    let cm = canonical_model_with(f, config.closure_cap)?;
    let ext = extension(&cm.model, f);
    if let Some(state) = cm.states.iter().find(|s| ext.contains(*s)) {
        let state = state.clone();
        return Ok(Satisfiability::Sat {
            model: cm.model,
            state,
        });
    }
    if config.cross_check_states > 0 {
        let real_props = f
            .props()
            .into_iter()
            .filter(|p| p != FALSUM_PROP)
            .count();
        if real_props <= bounded::MAX_SEARCH_PROPS {
            let cap = config.cross_check_states.min(bounded::MAX_SEARCH_STATES);
            if let Some((model, _)) = bounded::bounded_model_search(f, cap) {
                return Err(DecisionError::OracleDisagreement {
                    formula: f.canonical(),
                    states: model.states().len(),
                });
            }
        }
    }
    Ok(Satisfiability::Unsat)
}

pub fn valid(f: &Formula) -> Result<bool, DecisionError> {
    valid_with(f, &DecisionConfig::default())
}

/// `f` is valid exactly when its negation is unsatisfiable.
pub fn valid_with(f: &Formula, config: &DecisionConfig) -> Result<bool, DecisionError> {
    Ok(!satisfiable_with(&Formula::not(f.clone()), config)?.is_sat())
}
