//! Uniform strategies and their execution graphs.
//!
//! A strategy is a partial map from equivalence classes to actions, where
//! every assigned action must be uniformly executable at its class. Running
//! a strategy from a class induces the execution graph: follow the assigned
//! action's class successors until reaching a class outside the strategy's
//! domain (a leaf) or forever (a cycle, on finite models). A strategy
//! achieves a goal from `s` when its execution graph from `[s]` is acyclic
//! and every leaf class sits inside the goal set.

use crate::model::{quotient, ActionId, ClassId, Model, QuotientGraph, StateId, UnknownState};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrategyError {
    #[error("strategy assigns a class `{0}` that is not in the model")]
    UnknownClass(ClassId),
    #[error("action `{action}` is not uniformly executable at class `{class}`")]
    NotUniform { class: ClassId, action: ActionId },
}

/// Partial map from classes to uniformly executable actions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Strategy {
    assignment: BTreeMap<ClassId, ActionId>,
}

impl Strategy {
    pub fn empty() -> Self {
        Strategy::default()
    }

    pub fn insert(&mut self, class: ClassId, action: ActionId) {
        self.assignment.insert(class, action);
    }

    pub fn get(&self, class: &ClassId) -> Option<&ActionId> {
        self.assignment.get(class)
    }

    pub fn domain(&self) -> BTreeSet<ClassId> {
        self.assignment.keys().cloned().collect()
    }

    pub fn assigns(&self, class: &ClassId) -> bool {
        self.assignment.contains_key(class)
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ClassId, &ActionId)> {
        self.assignment.iter()
    }

    /// `true` when `self` agrees with `other` on `self`'s whole domain and
    /// assigns no class outside it.
    pub fn is_restriction_of(&self, other: &Strategy) -> bool {
        self.assignment
            .iter()
            .all(|(c, a)| other.get(c) == Some(a))
    }

    /// The restriction of the strategy to the given classes.
    pub fn restrict(&self, domain: &BTreeSet<ClassId>) -> Strategy {
        Strategy {
            assignment: self
                .assignment
                .iter()
                .filter(|(c, _)| domain.contains(c))
                .map(|(c, a)| (c.clone(), a.clone()))
                .collect(),
        }
    }

    /// Checks uniform executability of every assignment against a model.
    pub fn validate(&self, m: &Model) -> Result<(), StrategyError> {
        let q = quotient(m);
        self.validate_on(&q)
    }

    /// Same check against a precomputed quotient.
    pub fn validate_on(&self, q: &QuotientGraph) -> Result<(), StrategyError> {
        for (class, action) in &self.assignment {
            if !q.classes().contains(class) {
                return Err(StrategyError::UnknownClass(class.clone()));
            }
            if !q.uniform_actions(class).contains(action) {
                return Err(StrategyError::NotUniform {
                    class: class.clone(),
                    action: action.clone(),
                });
            }
        }
        Ok(())
    }

    /// JSON object keyed by class representative, e.g.
    /// `{"s1":"test","s3":"pills"}`.
    pub fn to_json(&self) -> serde_json::Value {
        let map: BTreeMap<String, String> = self
            .assignment
            .iter()
            .map(|(c, a)| (c.representative().as_str().to_string(), a.as_str().to_string()))
            .collect();
        serde_json::to_value(map).expect("strategy serialization cannot fail")
    }
}

impl FromIterator<(ClassId, ActionId)> for Strategy {
    fn from_iter<T: IntoIterator<Item = (ClassId, ActionId)>>(iter: T) -> Self {
        Strategy {
            assignment: iter.into_iter().collect(),
        }
    }
}

/// The classes and steps reachable from a root class when following a
/// strategy, plus what the run shapes look like: leaves are reachable
/// classes outside the strategy's domain, and `has_cycle` says whether some
/// run never terminates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionGraph {
    root: ClassId,
    nodes: BTreeSet<ClassId>,
    edges: BTreeMap<ClassId, BTreeSet<ClassId>>,
    leaves: BTreeSet<ClassId>,
    cycle: Option<Vec<ClassId>>,
}

impl ExecutionGraph {
    pub fn root(&self) -> &ClassId {
        &self.root
    }

    pub fn nodes(&self) -> &BTreeSet<ClassId> {
        &self.nodes
    }

    /// Out-edges of the classes the strategy assigns; leaves have none.
    pub fn edges(&self) -> &BTreeMap<ClassId, BTreeSet<ClassId>> {
        &self.edges
    }

    pub fn leaves(&self) -> &BTreeSet<ClassId> {
        &self.leaves
    }

    pub fn has_cycle(&self) -> bool {
        self.cycle.is_some()
    }

    /// A reachable cycle, if any: consecutive nodes are edges and the last
    /// node steps back to the first. Found by depth-first search visiting
    /// successors in structural order, so the witness is deterministic.
    pub fn cycle(&self) -> Option<&[ClassId]> {
        self.cycle.as_deref()
    }

    /// Reachable classes where the strategy keeps going.
    pub fn inner(&self) -> BTreeSet<ClassId> {
        self.nodes.difference(&self.leaves).cloned().collect()
    }
}

/// Builds the execution graph of `sigma` from the class of `s`.
///
/// Panics if `sigma` is not valid for `m` (assignments must be uniformly
/// executable); validate untrusted strategies first.
pub fn execution_graph(
    m: &Model,
    sigma: &Strategy,
    s: &StateId,
) -> Result<ExecutionGraph, UnknownState> {
    let root = m.equiv_class(s)?;
    let q = quotient(m);
    Ok(execution_graph_on(&q, sigma, root))
}

/// Execution graph over a precomputed quotient. Same contract as
/// [`execution_graph`]; `root` must be a class of `q`.
pub fn execution_graph_on(q: &QuotientGraph, sigma: &Strategy, root: ClassId) -> ExecutionGraph {
    if let Err(e) = sigma.validate_on(q) {
        panic!("invalid strategy: {e}");
    }
    assert!(
        q.classes().contains(&root),
        "root class `{root}` is not in the quotient"
    );

    let mut nodes = BTreeSet::new();
    let mut edges: BTreeMap<ClassId, BTreeSet<ClassId>> = BTreeMap::new();
    let mut work = vec![root.clone()];
    while let Some(c) = work.pop() {
        if !nodes.insert(c.clone()) {
            continue;
        }
        if let Some(a) = sigma.get(&c) {
            let succ = q.class_succ(&c, a);
            for d in &succ {
                work.push(d.clone());
            }
            edges.insert(c, succ);
        }
    }

    let leaves: BTreeSet<ClassId> = nodes
        .iter()
        .filter(|c| !sigma.assigns(c))
        .cloned()
        .collect();

    let cycle = find_cycle(&edges, &root);

    ExecutionGraph {
        root,
        nodes,
        edges,
        leaves,
        cycle,
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Color {
    Gray,
    Black,
}

fn find_cycle(edges: &BTreeMap<ClassId, BTreeSet<ClassId>>, root: &ClassId) -> Option<Vec<ClassId>> {
    let mut colors: BTreeMap<ClassId, Color> = BTreeMap::new();
    let mut path = Vec::new();
    dfs(edges, root, &mut colors, &mut path)
}

fn dfs(
    edges: &BTreeMap<ClassId, BTreeSet<ClassId>>,
    c: &ClassId,
    colors: &mut BTreeMap<ClassId, Color>,
    path: &mut Vec<ClassId>,
) -> Option<Vec<ClassId>> {
    match colors.get(c) {
        Some(Color::Black) => return None,
        Some(Color::Gray) => {
            let start = path.iter().position(|x| x == c).expect("gray node on path");
            return Some(path[start..].to_vec());
        }
        None => {}
    }
    colors.insert(c.clone(), Color::Gray);
    path.push(c.clone());
    if let Some(succ) = edges.get(c) {
        for d in succ {
            if let Some(cycle) = dfs(edges, d, colors, path) {
                return Some(cycle);
            }
        }
    }
    path.pop();
    colors.insert(c.clone(), Color::Black);
    None
}

/// Leaf classes of complete finite runs of `sigma` from `[s]`.
pub fn ce_leaf(
    m: &Model,
    sigma: &Strategy,
    s: &StateId,
) -> Result<BTreeSet<ClassId>, UnknownState> {
    Ok(execution_graph(m, sigma, s)?.leaves().clone())
}

/// Non-final classes of complete runs of `sigma` from `[s]`.
pub fn ce_inner(
    m: &Model,
    sigma: &Strategy,
    s: &StateId,
) -> Result<BTreeSet<ClassId>, UnknownState> {
    Ok(execution_graph(m, sigma, s)?.inner())
}

/// Why a strategy fails to achieve a goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailureWitness {
    /// Some run never terminates; `path` is a reachable cycle.
    Cycle { path: Vec<ClassId> },
    /// A terminating run ends at `class`, whose member `state` is outside
    /// the goal.
    LeafOutsideGoal { class: ClassId, state: StateId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Fail(FailureWitness),
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok)
    }
}

/// Checks that `sigma` achieves `goal` from `s`: every complete run from
/// `[s]` terminates and every leaf class lies inside `goal`. Failures carry
/// a deterministic witness (cycle checked first, then the structurally
/// least offending leaf state).
///
/// Panics if `sigma` is not valid for `m`.
pub fn verify_strategy(
    m: &Model,
    sigma: &Strategy,
    s: &StateId,
    goal: &BTreeSet<StateId>,
) -> Result<Verdict, UnknownState> {
    let graph = execution_graph(m, sigma, s)?;
    if let Some(path) = graph.cycle() {
        return Ok(Verdict::Fail(FailureWitness::Cycle {
            path: path.to_vec(),
        }));
    }
    for leaf in graph.leaves() {
        for member in m.class_members(leaf) {
            if !goal.contains(member) {
                return Ok(Verdict::Fail(FailureWitness::LeafOutsideGoal {
                    class: leaf.clone(),
                    state: member.clone(),
                }));
            }
        }
    }
    Ok(Verdict::Ok)
}
