//! Epistemic transition models and their quotients.
//!
//! A model is a finite set of states carrying an equivalence relation (the
//! agent's indistinguishability), a set of labelled, possibly
//! nondeterministic transitions, and a propositional valuation. Action
//! labels live outside the formula language.
//!
//! The quotient graph lifts the model to equivalence classes: an action is
//! *uniformly executable* at a class when every member state has a successor
//! under it, and class successors are the existential lift of the transition
//! relation. All strategy and `Kh` reasoning happens on the quotient.

use crate::formula::is_valid_prop_name;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub String);

impl StateId {
    pub fn new(s: impl Into<String>) -> Self {
        StateId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        StateId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub String);

impl ActionId {
    pub fn new(s: impl Into<String>) -> Self {
        ActionId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for ActionId {
    fn from(s: &str) -> Self {
        ActionId(s.to_string())
    }
}

/// An equivalence class, named by its structurally least member state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub StateId);

impl ClassId {
    pub fn representative(&self) -> &StateId {
        &self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationKind {
    OverlappingBlocks,
    UnknownState,
    UnknownAction,
    EmptyStateSet,
}

impl fmt::Display for ValidationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ValidationKind::OverlappingBlocks => "overlapping-blocks",
            ValidationKind::UnknownState => "unknown-state",
            ValidationKind::UnknownAction => "unknown-action",
            ValidationKind::EmptyStateSet => "empty-state-set",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("model parse error: {0}")]
    Parse(String),
    #[error("model validation error ({kind}): {detail}")]
    Validation { kind: ValidationKind, detail: String },
}

impl ModelError {
    fn validation(kind: ValidationKind, detail: impl Into<String>) -> Self {
        ModelError::Validation {
            kind,
            detail: detail.into(),
        }
    }
}

/// Error for operations handed a state the model does not contain.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown state `{0}`")]
pub struct UnknownState(pub StateId);

/// On-disk model shape. Transitions are `[from, action, to]` triples;
/// `equiv` lists equivalence blocks (omitted states are singletons);
/// `valuation` maps states to their true propositions (omitted states
/// satisfy none).
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    states: Vec<StateId>,
    actions: Vec<ActionId>,
    #[serde(default)]
    transitions: Vec<(StateId, ActionId, StateId)>,
    #[serde(default)]
    equiv: Vec<Vec<StateId>>,
    #[serde(default)]
    valuation: BTreeMap<StateId, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    states: BTreeSet<StateId>,
    actions: BTreeSet<ActionId>,
    transitions: BTreeSet<(StateId, ActionId, StateId)>,
    blocks: BTreeMap<ClassId, BTreeSet<StateId>>,
    class_of: BTreeMap<StateId, ClassId>,
    valuation: BTreeMap<StateId, BTreeSet<String>>,
}

impl Model {
    /// Builds and validates a model from its parts. States omitted from
    /// every `equiv` block become singleton blocks; states omitted from
    /// `valuation` satisfy no propositions.
    pub fn new(
        states: impl IntoIterator<Item = StateId>,
        actions: impl IntoIterator<Item = ActionId>,
        transitions: impl IntoIterator<Item = (StateId, ActionId, StateId)>,
        equiv: impl IntoIterator<Item = BTreeSet<StateId>>,
        valuation: impl IntoIterator<Item = (StateId, BTreeSet<String>)>,
    ) -> Result<Model, ModelError> {
        let states: BTreeSet<StateId> = states.into_iter().collect();
        if states.is_empty() {
            return Err(ModelError::validation(
                ValidationKind::EmptyStateSet,
                "a model needs at least one state",
            ));
        }
        let actions: BTreeSet<ActionId> = actions.into_iter().collect();

        let mut class_of: BTreeMap<StateId, ClassId> = BTreeMap::new();
        let mut blocks: BTreeMap<ClassId, BTreeSet<StateId>> = BTreeMap::new();
        for block in equiv {
            if block.is_empty() {
                return Err(ModelError::validation(
                    ValidationKind::EmptyStateSet,
                    "equivalence blocks must be non-empty",
                ));
            }
            for s in &block {
                if !states.contains(s) {
                    return Err(ModelError::validation(
                        ValidationKind::UnknownState,
                        format!("equivalence block mentions undeclared state `{s}`"),
                    ));
                }
                if class_of.contains_key(s) {
                    return Err(ModelError::validation(
                        ValidationKind::OverlappingBlocks,
                        format!("state `{s}` appears in two equivalence blocks"),
                    ));
                }
            }
            let class = ClassId(block.iter().next().expect("non-empty").clone());
            for s in &block {
                class_of.insert(s.clone(), class.clone());
            }
            blocks.insert(class, block);
        }
        for s in &states {
            if !class_of.contains_key(s) {
                let class = ClassId(s.clone());
                class_of.insert(s.clone(), class.clone());
                blocks.insert(class, BTreeSet::from([s.clone()]));
            }
        }

        let transitions: BTreeSet<(StateId, ActionId, StateId)> =
            transitions.into_iter().collect();
        for (from, action, to) in &transitions {
            for end in [from, to] {
                if !states.contains(end) {
                    return Err(ModelError::validation(
                        ValidationKind::UnknownState,
                        format!("transition mentions undeclared state `{end}`"),
                    ));
                }
            }
            if !actions.contains(action) {
                return Err(ModelError::validation(
                    ValidationKind::UnknownAction,
                    format!("transition mentions undeclared action `{action}`"),
                ));
            }
        }

        let mut full_valuation: BTreeMap<StateId, BTreeSet<String>> = BTreeMap::new();
        for (s, props) in valuation {
            if !states.contains(&s) {
                return Err(ModelError::validation(
                    ValidationKind::UnknownState,
                    format!("valuation mentions undeclared state `{s}`"),
                ));
            }
            for p in &props {
                if !is_valid_prop_name(p) {
                    return Err(ModelError::Parse(format!(
                        "invalid proposition name `{p}` in valuation of `{s}`"
                    )));
                }
            }
            full_valuation.insert(s, props);
        }
        for s in &states {
            full_valuation.entry(s.clone()).or_default();
        }

        Ok(Model {
            states,
            actions,
            transitions,
            blocks,
            class_of,
            valuation: full_valuation,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Model, ModelError> {
        let raw: RawModel =
            serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        Model::new(
            raw.states,
            raw.actions,
            raw.transitions,
            raw.equiv.into_iter().map(|b| b.into_iter().collect()),
            raw.valuation
                .into_iter()
                .map(|(s, ps)| (s, ps.into_iter().collect())),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model, ModelError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ModelError::Parse(format!("{}: {e}", path.as_ref().display())))?;
        Model::from_json_str(&text)
    }

    /// Serializes back to the on-disk JSON shape.
    pub fn to_json(&self) -> serde_json::Value {
        let raw = RawModel {
            states: self.states.iter().cloned().collect(),
            actions: self.actions.iter().cloned().collect(),
            transitions: self.transitions.iter().cloned().collect(),
            equiv: self
                .blocks
                .values()
                .filter(|b| b.len() > 1)
                .map(|b| b.iter().cloned().collect())
                .collect(),
            valuation: self
                .valuation
                .iter()
                .filter(|(_, ps)| !ps.is_empty())
                .map(|(s, ps)| (s.clone(), ps.iter().cloned().collect()))
                .collect(),
        };
        serde_json::to_value(raw).expect("model serialization cannot fail")
    }

    pub fn states(&self) -> &BTreeSet<StateId> {
        &self.states
    }

    pub fn actions(&self) -> &BTreeSet<ActionId> {
        &self.actions
    }

    pub fn transitions(&self) -> &BTreeSet<(StateId, ActionId, StateId)> {
        &self.transitions
    }

    /// Equivalence blocks keyed by class id (least member).
    pub fn blocks(&self) -> &BTreeMap<ClassId, BTreeSet<StateId>> {
        &self.blocks
    }

    pub fn contains_state(&self, s: &StateId) -> bool {
        self.states.contains(s)
    }

    /// The class of `s`.
    pub fn equiv_class(&self, s: &StateId) -> Result<ClassId, UnknownState> {
        self.class_of
            .get(s)
            .cloned()
            .ok_or_else(|| UnknownState(s.clone()))
    }

    /// Member states of a class.
    pub fn class_members(&self, c: &ClassId) -> &BTreeSet<StateId> {
        &self.blocks[c]
    }

    pub fn props_at(&self, s: &StateId) -> &BTreeSet<String> {
        &self.valuation[s]
    }

    pub fn successors(&self, s: &StateId, a: &ActionId) -> BTreeSet<StateId> {
        self.transitions
            .range((s.clone(), a.clone(), StateId::new(""))..)
            .take_while(|(from, act, _)| from == s && act == a)
            .map(|(_, _, to)| to.clone())
            .collect()
    }

    pub fn has_successor(&self, s: &StateId, a: &ActionId) -> bool {
        self.transitions
            .range((s.clone(), a.clone(), StateId::new(""))..)
            .take_while(|(from, act, _)| from == s && act == a)
            .next()
            .is_some()
    }

    /// All proposition names appearing in the valuation.
    pub fn props(&self) -> BTreeSet<String> {
        self.valuation.values().flatten().cloned().collect()
    }
}

/// The lift of a model to its equivalence classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientGraph {
    classes: BTreeSet<ClassId>,
    uniform_actions: BTreeMap<ClassId, BTreeSet<ActionId>>,
    class_succ: BTreeMap<(ClassId, ActionId), BTreeSet<ClassId>>,
}

impl QuotientGraph {
    pub fn classes(&self) -> &BTreeSet<ClassId> {
        &self.classes
    }

    /// Actions executable at every member of `c`.
    pub fn uniform_actions(&self, c: &ClassId) -> &BTreeSet<ActionId> {
        &self.uniform_actions[c]
    }

    /// Classes reachable from `c` by `a` under the existential lift: `d` is
    /// a successor iff some member of `c` has an `a`-transition into `d`.
    pub fn class_succ(&self, c: &ClassId, a: &ActionId) -> BTreeSet<ClassId> {
        self.class_succ
            .get(&(c.clone(), a.clone()))
            .cloned()
            .unwrap_or_default()
    }
}

/// Computes the quotient graph of a model.
pub fn quotient(m: &Model) -> QuotientGraph {
    let classes: BTreeSet<ClassId> = m.blocks().keys().cloned().collect();

    let mut class_succ: BTreeMap<(ClassId, ActionId), BTreeSet<ClassId>> = BTreeMap::new();
    for (from, action, to) in m.transitions() {
        let c = m.equiv_class(from).expect("transition endpoints validated");
        let d = m.equiv_class(to).expect("transition endpoints validated");
        class_succ
            .entry((c, action.clone()))
            .or_default()
            .insert(d);
    }

    let mut uniform_actions: BTreeMap<ClassId, BTreeSet<ActionId>> = BTreeMap::new();
    for (c, members) in m.blocks() {
        let uniform: BTreeSet<ActionId> = m
            .actions()
            .iter()
            .filter(|a| members.iter().all(|s| m.has_successor(s, a)))
            .cloned()
            .collect();
        uniform_actions.insert(c.clone(), uniform);
    }

    QuotientGraph {
        classes,
        uniform_actions,
        class_succ,
    }
}
