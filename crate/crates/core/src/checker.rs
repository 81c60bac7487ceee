//! Model checking and strategy synthesis.
//!
//! `Kh goal` holds at `s` exactly when some uniform strategy achieves the
//! goal from `[s]`. On finite models that is decided by a least fixpoint
//! over the quotient graph:
//!
//! * stage 0: classes wholly inside the goal;
//! * stage k+1: classes with a uniformly executable action whose class
//!   successors all sit in stages <= k.
//!
//! The fixpoint also yields a witness strategy (the structurally least
//! qualifying action per class) and the stage map, which certifies
//! termination: every witness edge strictly decreases the stage, so runs of
//! the witness cannot cycle, and they stop inside the goal.

use crate::formula::Formula;
use crate::model::{quotient, ActionId, ClassId, Model, QuotientGraph, StateId, UnknownState};
use crate::strategy::{execution_graph_on, Strategy};
use std::collections::{BTreeMap, BTreeSet};

/// Default cap on the strategy space the brute-force oracle will sweep.
pub const DEFAULT_STRATEGY_CAP: u64 = 1_000_000;

/// Outcome of the forcing fixpoint for one goal set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForcingResult {
    winning: BTreeSet<ClassId>,
    witness: Strategy,
    stage: BTreeMap<ClassId, usize>,
}

impl ForcingResult {
    /// Classes from which the goal is achievable.
    pub fn winning(&self) -> &BTreeSet<ClassId> {
        &self.winning
    }

    /// Witness strategy: defined exactly on winning classes of stage >= 1.
    pub fn witness(&self) -> &Strategy {
        &self.witness
    }

    /// Fixpoint round at which a class entered the winning set.
    pub fn stage(&self, c: &ClassId) -> Option<usize> {
        self.stage.get(c).copied()
    }

    pub fn stages(&self) -> &BTreeMap<ClassId, usize> {
        &self.stage
    }
}

/// Runs the forcing fixpoint for `goal`.
pub fn kh_forcing(m: &Model, goal: &BTreeSet<StateId>) -> ForcingResult {
    kh_forcing_on(m, &quotient(m), goal)
}

/// Forcing fixpoint over a precomputed quotient.
pub fn kh_forcing_on(m: &Model, q: &QuotientGraph, goal: &BTreeSet<StateId>) -> ForcingResult {
    let mut winning: BTreeSet<ClassId> = BTreeSet::new();
    let mut witness = Strategy::empty();
    let mut stage: BTreeMap<ClassId, usize> = BTreeMap::new();

    for c in q.classes() {
        if m.class_members(c).iter().all(|s| goal.contains(s)) {
            winning.insert(c.clone());
            stage.insert(c.clone(), 0);
        }
    }

    let mut round = 0;
    loop {
        round += 1;
        // Each round only consults the previous round's winning set, so the
        // stage map records the true fixpoint iteration count.
        let frozen = winning.clone();
        let mut added: Vec<(ClassId, ActionId)> = Vec::new();
        for c in q.classes() {
            if frozen.contains(c) {
                continue;
            }
            let qualifying = q
                .uniform_actions(c)
                .iter()
                .find(|a| q.class_succ(c, a).iter().all(|d| frozen.contains(d)));
            if let Some(a) = qualifying {
                added.push((c.clone(), a.clone()));
            }
        }
        if added.is_empty() {
            break;
        }
        for (c, a) in added {
            winning.insert(c.clone());
            stage.insert(c.clone(), round);
            witness.insert(c, a);
        }
    }

    ForcingResult {
        winning,
        witness,
        stage,
    }
}

fn ext(
    m: &Model,
    q: &QuotientGraph,
    f: &Formula,
    memo: &mut BTreeMap<Formula, BTreeSet<StateId>>,
) -> BTreeSet<StateId> {
    if let Some(e) = memo.get(f) {
        return e.clone();
    }
    let result = match f {
        Formula::Prop(p) => m
            .states()
            .iter()
            .filter(|s| m.props_at(s).contains(p))
            .cloned()
            .collect(),
        Formula::Not(g) => {
            let inner = ext(m, q, g, memo);
            m.states().difference(&inner).cloned().collect()
        }
        Formula::And(a, b) => {
            let ea = ext(m, q, a, memo);
            let eb = ext(m, q, b, memo);
            ea.intersection(&eb).cloned().collect()
        }
        Formula::K(g) => {
            let inner = ext(m, q, g, memo);
            let mut out = BTreeSet::new();
            for members in m.blocks().values() {
                if members.iter().all(|s| inner.contains(s)) {
                    out.extend(members.iter().cloned());
                }
            }
            out
        }
        Formula::Kh(g) => {
            let goal = ext(m, q, g, memo);
            let forcing = kh_forcing_on(m, q, &goal);
            let mut out = BTreeSet::new();
            for c in forcing.winning() {
                out.extend(m.class_members(c).iter().cloned());
            }
            out
        }
    };
    memo.insert(f.clone(), result.clone());
    result
}

/// States satisfying `f`. Subformula extensions are computed once each.
pub fn extension(m: &Model, f: &Formula) -> BTreeSet<StateId> {
    ext(m, &quotient(m), f, &mut BTreeMap::new())
}

/// Truth of `f` at a state of `m`.
pub fn eval(m: &Model, s: &StateId, f: &Formula) -> Result<bool, UnknownState> {
    if !m.contains_state(s) {
        return Err(UnknownState(s.clone()));
    }
    Ok(extension(m, f).contains(s))
}

/// Synthesizes a strategy achieving `f` from `s`, if one exists: the
/// forcing witness restricted to the classes its own runs visit from `[s]`.
/// Returns `Some(empty strategy)` when `[s]` already sits inside the goal.
pub fn synthesize(m: &Model, s: &StateId, f: &Formula) -> Result<Option<Strategy>, UnknownState> {
    let root = m.equiv_class(s)?;
    let q = quotient(m);
    let goal = ext(m, &q, f, &mut BTreeMap::new());
    let forcing = kh_forcing_on(m, &q, &goal);
    if !forcing.winning().contains(&root) {
        return Ok(None);
    }
    let mut reach: BTreeSet<ClassId> = BTreeSet::new();
    let mut work = vec![root];
    while let Some(c) = work.pop() {
        if !reach.insert(c.clone()) {
            continue;
        }
        if let Some(a) = forcing.witness().get(&c) {
            for d in q.class_succ(&c, a) {
                work.push(d);
            }
        }
    }
    Ok(Some(forcing.witness().restrict(&reach)))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BruteForceError {
    #[error(transparent)]
    UnknownState(#[from] UnknownState),
    #[error("strategy space has {size} candidates, exceeding the cap of {cap}")]
    SpaceTooLarge { size: u128, cap: u64 },
}

/// Number of strategies over the quotient of `m`: the product over classes
/// of (1 + number of uniform actions), counting "unassigned" as an option.
pub fn strategy_space_size(m: &Model) -> u128 {
    let q = quotient(m);
    q.classes()
        .iter()
        .map(|c| 1 + q.uniform_actions(c).len() as u128)
        .product()
}

/// Decides `Kh goal` at `s` by sweeping every strategy and checking
/// whether one achieves the goal. Independent of the forcing fixpoint; used
/// as its oracle. Enumeration is a mixed-radix counter over classes in
/// structural order ("unassigned" first, then actions in sorted order), so
/// the sweep order is deterministic.
pub fn brute_force_kh(
    m: &Model,
    s: &StateId,
    goal: &BTreeSet<StateId>,
) -> Result<bool, BruteForceError> {
    brute_force_kh_with_cap(m, s, goal, DEFAULT_STRATEGY_CAP)
}

/// [`brute_force_kh`] with an explicit strategy-space cap.
pub fn brute_force_kh_with_cap(
    m: &Model,
    s: &StateId,
    goal: &BTreeSet<StateId>,
    cap: u64,
) -> Result<bool, BruteForceError> {
    let root = m.equiv_class(s)?;
    let q = quotient(m);
    let classes: Vec<ClassId> = q.classes().iter().cloned().collect();
    let options: Vec<Vec<ActionId>> = classes
        .iter()
        .map(|c| q.uniform_actions(c).iter().cloned().collect())
        .collect();

    let size: u128 = options.iter().map(|o| o.len() as u128 + 1).product();
    if size > cap as u128 {
        return Err(BruteForceError::SpaceTooLarge { size, cap });
    }

    let goal_classes: BTreeSet<ClassId> = m
        .blocks()
        .iter()
        .filter(|(_, members)| members.iter().all(|s| goal.contains(s)))
        .map(|(c, _)| c.clone())
        .collect();

    let mut digits = vec![0usize; classes.len()];
    loop {
        let sigma: Strategy = digits
            .iter()
            .enumerate()
            .filter(|(_, d)| **d > 0)
            .map(|(i, d)| (classes[i].clone(), options[i][*d - 1].clone()))
            .collect();
        let graph = execution_graph_on(&q, &sigma, root.clone());
        if !graph.has_cycle() && graph.leaves().iter().all(|l| goal_classes.contains(l)) {
            return Ok(true);
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok(false);
            }
            digits[i] += 1;
            if digits[i] <= options[i].len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}
