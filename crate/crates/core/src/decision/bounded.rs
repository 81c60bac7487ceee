//! Exhaustive small-model search, used as an independent oracle.
//!
//! Rather than enumerating raw models (which double-counts heavily), the
//! search enumerates models up to semantic equivalence. Truth at a state
//! depends only on the state's valuation and on class-level structure,
//! so a model is represented by its classes, each carrying
//!
//! * the set of distinct valuations among its members, and
//! * the family of successor class-sets reachable by its uniform
//!   actions, kept as an antichain: a superset can only qualify for a
//!   goal when some subset already does, and a set containing its own
//!   class can only fire once the class is already winning, so both are
//!   dropped.
//!
//! Every concrete model reduces to such a structure with at most as many
//! typed states as it has states, and every structure is realized back
//! as a concrete model with one state per type, so sweeping structures
//! of total type count 1..=max_states covers all models within the
//! bound. With two actions each class keeps at most two successor sets.
//!
//! Witnesses are re-verified with the checker on the realized model
//! before being returned. The search order (structures ascending by
//! state count, then class count, then a fixed composition, family, and
//! valuation order) is deterministic, so the returned witness is a
//! stable function of the query.

use crate::checker::eval;
use crate::formula::{Formula, FALSUM_PROP};
use crate::model::{ActionId, Model, StateId};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet, HashSet};

/// Largest supported state bound.
pub const MAX_SEARCH_STATES: usize = 4;

/// Largest supported number of distinct propositions per query.
pub const MAX_SEARCH_PROPS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Family {
    sets: [u8; 2],
    len: u8,
}

impl Family {
    const EMPTY: Family = Family { sets: [0, 0], len: 0 };

    fn single(s: u8) -> Family {
        Family { sets: [s, 0], len: 1 }
    }

    fn pair(s1: u8, s2: u8) -> Family {
        Family { sets: [s1, s2], len: 2 }
    }

    fn sets(&self) -> &[u8] {
        &self.sets[..self.len as usize]
    }
}

/// Antichains of at most two non-empty successor sets for class `c`
/// among `k` classes, excluding sets that contain `c` itself.
fn family_options(k: usize, c: usize) -> Vec<Family> {
    let all = (1u8 << k) - 1;
    let own = 1u8 << c;
    let candidates: Vec<u8> = (1..=all).filter(|s| s & own == 0 && s & !all == 0).collect();
    let mut out = vec![Family::EMPTY];
    for &s in &candidates {
        out.push(Family::single(s));
    }
    for (i, &s1) in candidates.iter().enumerate() {
        for &s2 in &candidates[i + 1..] {
            // s2 can't be a subset of the numerically smaller s1
            if s1 & !s2 != 0 {
                out.push(Family::pair(s1, s2));
            }
        }
    }
    out
}

/// Least fixpoint of goal-class absorption: starting from `goal`, a
/// class joins once one of its successor sets is fully inside.
fn forcing(goal: u8, families: &[Family]) -> u8 {
    let mut win = goal;
    loop {
        let mut grown = win;
        for (c, fam) in families.iter().enumerate() {
            if grown & (1 << c) == 0 && fam.sets().iter().any(|s| s & !win == 0) {
                grown |= 1 << c;
            }
        }
        if grown == win {
            return win;
        }
        win = grown;
    }
}

enum Node {
    Falsum,
    Prop(u8),
    Not(u32),
    And(u32, u32),
    K(u32),
    Kh(u32),
}

/// The formula batch compiled to a shared subformula graph; children
/// precede parents.
struct Dag {
    nodes: Vec<Node>,
    roots: Vec<u32>,
    props: Vec<String>,
}

fn intern(f: &Formula, props: &[String], seen: &mut BTreeMap<Formula, u32>, nodes: &mut Vec<Node>) -> u32 {
    if let Some(&i) = seen.get(f) {
        return i;
    }
    let node = match f {
        Formula::Prop(name) if name == FALSUM_PROP => Node::Falsum,
        Formula::Prop(name) => {
            let bit = props.iter().position(|p| p == name).expect("prop collected") as u8;
            Node::Prop(bit)
        }
        Formula::Not(x) => Node::Not(intern(x, props, seen, nodes)),
        Formula::And(a, b) => {
            let a = intern(a, props, seen, nodes);
            let b = intern(b, props, seen, nodes);
            Node::And(a, b)
        }
        Formula::K(x) => Node::K(intern(x, props, seen, nodes)),
        Formula::Kh(x) => Node::Kh(intern(x, props, seen, nodes)),
    };
    nodes.push(node);
    let i = (nodes.len() - 1) as u32;
    seen.insert(f.clone(), i);
    i
}

fn build_dag(fs: &[Formula]) -> Dag {
    let props: Vec<String> = fs
        .iter()
        .flat_map(|f| f.props())
        .filter(|p| p != FALSUM_PROP)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(
        props.len() <= MAX_SEARCH_PROPS,
        "bounded search supports at most {MAX_SEARCH_PROPS} propositions, got {}",
        props.len()
    );
    let mut seen = BTreeMap::new();
    let mut nodes = Vec::new();
    let roots = fs
        .iter()
        .map(|f| intern(f, &props, &mut seen, &mut nodes))
        .collect();
    Dag { nodes, roots, props }
}

/// Marks the nodes reachable from the still-active roots, so retired
/// formulas stop costing evaluation time.
fn live_nodes(dag: &Dag, active_roots: &[u32]) -> Vec<bool> {
    let mut live = vec![false; dag.nodes.len()];
    for &r in active_roots {
        live[r as usize] = true;
    }
    for i in (0..dag.nodes.len()).rev() {
        if !live[i] {
            continue;
        }
        match dag.nodes[i] {
            Node::Falsum | Node::Prop(_) => {}
            Node::Not(x) | Node::K(x) | Node::Kh(x) => live[x as usize] = true,
            Node::And(a, b) => {
                live[a as usize] = true;
                live[b as usize] = true;
            }
        }
    }
    live
}

/// One enumerated shape: class c occupies flat states
/// `offsets[c]..offsets[c] + sizes[c]`.
struct Layout {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    class_mask: Vec<u8>,
    m: usize,
}

impl Layout {
    fn new(sizes: &[usize]) -> Layout {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut class_mask = Vec::with_capacity(sizes.len());
        let mut at = 0;
        for &z in sizes {
            offsets.push(at);
            class_mask.push((((1u16 << z) - 1) << at) as u8);
            at += z;
        }
        Layout {
            sizes: sizes.to_vec(),
            offsets,
            class_mask,
            m: at,
        }
    }
}

/// Evaluates every live node over the flat states, as bitmasks.
/// `kh_table`, when given, must hold the forcing result for every goal
/// class-set; otherwise forcing runs per Kh node.
#[allow(clippy::too_many_arguments)]
fn eval_dag(
    dag: &Dag,
    live: &[bool],
    layout: &Layout,
    vals: &[u8],
    families: &[Family],
    kh_table: Option<&[u8; 16]>,
    ext: &mut [u8],
) {
    let full = ((1u16 << layout.m) - 1) as u8;
    let k = layout.sizes.len();
    for (i, node) in dag.nodes.iter().enumerate() {
        if !live[i] {
            continue;
        }
        ext[i] = match *node {
            Node::Falsum => 0,
            Node::Prop(bit) => {
                let mut e = 0;
                for (s, v) in vals.iter().enumerate() {
                    if v >> bit & 1 == 1 {
                        e |= 1 << s;
                    }
                }
                e
            }
            Node::Not(x) => !ext[x as usize] & full,
            Node::And(a, b) => ext[a as usize] & ext[b as usize],
            Node::K(x) => {
                let e = ext[x as usize];
                let mut out = 0;
                for c in 0..k {
                    if layout.class_mask[c] & !e == 0 {
                        out |= layout.class_mask[c];
                    }
                }
                out
            }
            Node::Kh(x) => {
                let e = ext[x as usize];
                let mut goal = 0u8;
                for c in 0..k {
                    if layout.class_mask[c] & !e == 0 {
                        goal |= 1 << c;
                    }
                }
                let win = match kh_table {
                    Some(t) => t[goal as usize],
                    None => forcing(goal, families),
                };
                let mut out = 0;
                for c in 0..k {
                    if win >> c & 1 == 1 {
                        out |= layout.class_mask[c];
                    }
                }
                out
            }
        };
    }
}

/// Builds the concrete model for a structure: one state per type,
/// blocks per class, action `a<j>` realizing the j-th successor set of
/// each class by edges from every member to a representative of every
/// target class.
fn realize(layout: &Layout, vals: &[u8], families: &[Family], props: &[String]) -> Model {
    let states: Vec<StateId> = (0..layout.m).map(|s| StateId::new(format!("s{s}"))).collect();
    let action_count = families.iter().map(|f| f.len as usize).max().unwrap_or(0);
    let actions: Vec<ActionId> = (0..action_count)
        .map(|j| ActionId::new(format!("a{j}")))
        .collect();
    let mut transitions = Vec::new();
    for (c, fam) in families.iter().enumerate() {
        for (j, &set) in fam.sets().iter().enumerate() {
            for s in layout.offsets[c]..layout.offsets[c] + layout.sizes[c] {
                for d in 0..layout.sizes.len() {
                    if set >> d & 1 == 1 {
                        transitions.push((
                            states[s].clone(),
                            actions[j].clone(),
                            states[layout.offsets[d]].clone(),
                        ));
                    }
                }
            }
        }
    }
    let equiv: Vec<BTreeSet<StateId>> = (0..layout.sizes.len())
        .map(|c| {
            (layout.offsets[c]..layout.offsets[c] + layout.sizes[c])
                .map(|s| states[s].clone())
                .collect()
        })
        .collect();
    let valuation: Vec<(StateId, BTreeSet<String>)> = vals
        .iter()
        .enumerate()
        .map(|(s, v)| {
            let ps = props
                .iter()
                .enumerate()
                .filter(|(b, _)| v >> b & 1 == 1)
                .map(|(_, p)| p.clone())
                .collect();
            (states[s].clone(), ps)
        })
        .collect();
    Model::new(states, actions, transitions, equiv, valuation)
        .expect("realized structures are valid models")
}

fn verified_witness(
    layout: &Layout,
    vals: &[u8],
    families: &[Family],
    props: &[String],
    state: usize,
    f: &Formula,
) -> (Model, StateId) {
    let model = realize(layout, vals, families, props);
    let witness = StateId::new(format!("s{state}"));
    assert_eq!(
        eval(&model, &witness, f),
        Ok(true),
        "search witness failed re-verification for `{f}`"
    );
    (model, witness)
}

/// Ascending-lex compositions of `m` into `k` parts, each in 1..=cap.
fn compositions(m: usize, k: usize, cap: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        if m >= 1 && m <= cap {
            prefix.push(m);
            out.push(prefix.clone());
            prefix.pop();
        }
        return;
    }
    for first in 1..=m.saturating_sub(k - 1).min(cap) {
        prefix.push(first);
        compositions(m - first, k - 1, cap, prefix, out);
        prefix.pop();
    }
}

/// Sorted `z`-subsets of the `v` valuation masks, ascending-lex.
fn type_choices(v: u8, z: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: u8, v: u8, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for t in start..v {
            if (v - t) as usize >= left {
                cur.push(t);
                rec(t + 1, v, left - 1, cur, out);
                cur.pop();
            }
        }
    }
    rec(0, v, z, &mut cur, &mut out);
    out
}

struct Search<'a> {
    dag: &'a Dag,
    formulas: &'a [Formula],
    results: Vec<Option<(Model, StateId)>>,
    active: Vec<usize>,
}

impl<'a> Search<'a> {
    fn retire(&mut self, idx: usize, witness: (Model, StateId)) {
        self.results[idx] = Some(witness);
        self.active.retain(|&i| i != idx);
    }

    fn live(&self) -> Vec<bool> {
        let roots: Vec<u32> = self.active.iter().map(|&i| self.dag.roots[i]).collect();
        live_nodes(self.dag, &roots)
    }

    /// Sequentially sweeps one class-size composition, families varying
    /// slowest, retiring formulas at their first satisfied structure.
    fn direct_sector(&mut self, sizes: &[usize], v: u8) {
        let layout = Layout::new(sizes);
        let k = sizes.len();
        let fam_opts: Vec<Vec<Family>> = (0..k).map(|c| family_options(k, c)).collect();
        let typ_opts: Vec<Vec<Vec<u8>>> = sizes.iter().map(|&z| type_choices(v, z)).collect();
        let mut live = self.live();
        let mut ext = vec![0u8; self.dag.nodes.len()];
        let mut fam_idx = vec![0usize; k];
        loop {
            let families: Vec<Family> = (0..k).map(|c| fam_opts[c][fam_idx[c]]).collect();
            let mut typ_idx = vec![0usize; k];
            'types: loop {
                let mut vals = Vec::with_capacity(layout.m);
                for c in 0..k {
                    vals.extend_from_slice(&typ_opts[c][typ_idx[c]]);
                }
                eval_dag(self.dag, &live, &layout, &vals, &families, None, &mut ext);
                let hits: Vec<usize> = self
                    .active
                    .iter()
                    .copied()
                    .filter(|&i| ext[self.dag.roots[i] as usize] != 0)
                    .collect();
                for i in hits {
                    let state = ext[self.dag.roots[i] as usize].trailing_zeros() as usize;
                    let w = verified_witness(
                        &layout,
                        &vals,
                        &families,
                        &self.dag.props,
                        state,
                        &self.formulas[i],
                    );
                    self.retire(i, w);
                    if self.active.is_empty() {
                        return;
                    }
                    live = self.live();
                }
                // odometer over per-class type choices, last class fastest
                for c in (0..k).rev() {
                    typ_idx[c] += 1;
                    if typ_idx[c] < typ_opts[c].len() {
                        continue 'types;
                    }
                    typ_idx[c] = 0;
                }
                break;
            }
            let mut done = true;
            for c in (0..k).rev() {
                fam_idx[c] += 1;
                if fam_idx[c] < fam_opts[c].len() {
                    done = false;
                    break;
                }
                fam_idx[c] = 0;
            }
            if done {
                return;
            }
        }
    }

    /// The all-singleton four-class sector. Distinct family combinations
    /// vastly outnumber distinct forcing behaviors, so forcing tables are
    /// computed and deduplicated first, then each distinct table is swept
    /// over all valuation assignments in parallel.
    fn singleton_sector(&mut self, v: u8) {
        const K: usize = 4;
        let fam_opts = family_options(K, 0);
        debug_assert!((0..K).all(|c| family_options(K, c).len() == fam_opts.len()));
        let layout = Layout::new(&[1, 1, 1, 1]);
        let per_class: Vec<Vec<Family>> = (0..K).map(|c| family_options(K, c)).collect();
        let base = fam_opts.len() as u64;
        let total = base.pow(K as u32);

        let decode = |fc: u64| -> Vec<Family> {
            let mut fams = Vec::with_capacity(K);
            let mut rest = fc;
            for c in (0..K).rev() {
                fams.push(per_class[c][(rest % base) as usize]);
                rest /= base;
            }
            fams.reverse();
            fams
        };

        let mut seen: HashSet<u64> = HashSet::new();
        let mut order: Vec<(u64, [u8; 16])> = Vec::new();
        for fc in 0..total {
            let families = decode(fc);
            let mut table = [0u8; 16];
            let mut key = 0u64;
            for (g, slot) in table.iter_mut().enumerate() {
                *slot = forcing(g as u8, &families);
                key |= (*slot as u64) << (4 * g);
            }
            if seen.insert(key) {
                order.push((fc, table));
            }
        }

        let live = self.live();
        let tv_total = (v as u64).pow(K as u32);
        let active = self.active.clone();
        let nf = self.formulas.len();

        // per formula: least (family index, valuation index, state)
        let best = order
            .par_iter()
            .fold(
                || vec![None; nf],
                |mut acc: Vec<Option<(u64, u64, usize)>>, (fc, table)| {
                    let mut ext = vec![0u8; self.dag.nodes.len()];
                    let families = decode(*fc);
                    for tv in 0..tv_total {
                        let mut vals = [0u8; K];
                        let mut rest = tv;
                        for c in (0..K).rev() {
                            vals[c] = (rest % v as u64) as u8;
                            rest /= v as u64;
                        }
                        eval_dag(self.dag, &live, &layout, &vals, &families, Some(table), &mut ext);
                        for &i in &active {
                            let e = ext[self.dag.roots[i] as usize];
                            if e != 0 {
                                let cand = (*fc, tv, e.trailing_zeros() as usize);
                                if acc[i].is_none_or(|b| cand < b) {
                                    acc[i] = Some(cand);
                                }
                            }
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![None; nf],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x = match (*x, y) {
                            (Some(p), Some(q)) => Some(p.min(q)),
                            (p, q) => p.or(q),
                        };
                    }
                    a
                },
            );

        for i in active {
            if let Some((fc, tv, state)) = best[i] {
                let families = decode(fc);
                let mut vals = [0u8; K];
                let mut rest = tv;
                for c in (0..K).rev() {
                    vals[c] = (rest % v as u64) as u8;
                    rest /= v as u64;
                }
                let w = verified_witness(
                    &layout,
                    &vals[..],
                    &families,
                    &self.dag.props,
                    state,
                    &self.formulas[i],
                );
                self.retire(i, w);
            }
        }
    }
}

/// Finds, for each formula, the first model with at most `max_states`
/// states (and at most two actions) satisfying it at some state, or
/// `None` when no such model exists. The batch is evaluated over the
/// union of the formulas' propositions, which leaves each answer
/// unchanged but may add unused propositions to witness valuations.
pub fn bounded_model_search_many(
    fs: &[Formula],
    max_states: usize,
) -> Vec<Option<(Model, StateId)>> {
    assert!(
        (1..=MAX_SEARCH_STATES).contains(&max_states),
        "state bound must be in 1..={MAX_SEARCH_STATES}"
    );
    if fs.is_empty() {
        return Vec::new();
    }
    let dag = build_dag(fs);
    let v = 1u8 << dag.props.len();
    let mut search = Search {
        dag: &dag,
        formulas: fs,
        results: vec![None; fs.len()],
        active: (0..fs.len()).collect(),
    };
    for m in 1..=max_states {
        for k in 1..=m {
            let mut out = Vec::new();
            compositions(m, k, v as usize, &mut Vec::new(), &mut out);
            for sizes in out {
                if search.active.is_empty() {
                    return search.results;
                }
                if m == 4 && k == 4 {
                    search.singleton_sector(v);
                } else {
                    search.direct_sector(&sizes, v);
                }
            }
        }
    }
    search.results
}

/// Single-formula front end to [`bounded_model_search_many`].
pub fn bounded_model_search(f: &Formula, max_states: usize) -> Option<(Model, StateId)> {
    bounded_model_search_many(std::slice::from_ref(f), max_states)
        .pop()
        .expect("one result per formula")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    #[test]
    fn family_option_counts_match_the_antichain_arithmetic() {
        assert_eq!(family_options(1, 0).len(), 1);
        assert_eq!(family_options(2, 0).len(), 2);
        assert_eq!(family_options(3, 0).len(), 5);
        assert_eq!(family_options(4, 0).len(), 17);
        for c in 0..4 {
            assert!(family_options(4, c)
                .iter()
                .all(|f| f.sets().iter().all(|s| s & (1 << c) == 0)));
        }
    }

    #[test]
    fn forcing_reaches_through_chains() {
        // 0 -> {1}, 1 -> {2}, 2 and 3 inert
        let fams = [
            Family::single(0b0010),
            Family::single(0b0100),
            Family::EMPTY,
            Family::EMPTY,
        ];
        assert_eq!(forcing(0b0100, &fams), 0b0111);
        assert_eq!(forcing(0b1000, &fams), 0b1000);
        // a pair gives a choice: 0 -> {1} or {3}
        let fams = [
            Family::pair(0b0010, 0b1000),
            Family::EMPTY,
            Family::EMPTY,
            Family::EMPTY,
        ];
        assert_eq!(forcing(0b1000, &fams), 0b1001);
        assert_eq!(forcing(0b0010, &fams), 0b0011);
    }

    #[test]
    fn plain_facts_get_single_state_witnesses() {
        let (m, s) = bounded_model_search(&parse("p").unwrap(), 4).unwrap();
        assert_eq!(m.states().len(), 1);
        assert_eq!(eval(&m, &s, &parse("p").unwrap()), Ok(true));
    }

    #[test]
    fn contradictions_have_no_models() {
        assert!(bounded_model_search(&parse("p & ~p").unwrap(), 4).is_none());
        assert!(bounded_model_search(&parse("Kh false").unwrap(), 4).is_none());
    }

    #[test]
    fn know_how_without_knowledge_needs_two_states() {
        let f = parse("Kh p & ~K p").unwrap();
        let (m, s) = bounded_model_search(&f, 4).unwrap();
        assert_eq!(m.states().len(), 2);
        assert_eq!(eval(&m, &s, &f), Ok(true));
    }

    #[test]
    fn iterated_know_how_collapse_has_no_countermodel() {
        assert!(bounded_model_search(&parse("~(Kh Kh p -> Kh p)").unwrap(), 4).is_none());
    }

    #[test]
    fn know_how_aggregation_fails_within_four_states() {
        let f = parse("Kh p & Kh q & ~Kh (p & q)").unwrap();
        let (m, s) = bounded_model_search(&f, 4).unwrap();
        assert_eq!(eval(&m, &s, &f), Ok(true));
    }

    #[test]
    fn searches_are_deterministic() {
        let f = parse("Kh p & ~K p").unwrap();
        let a = bounded_model_search(&f, 4).unwrap();
        let b = bounded_model_search(&f, 4).unwrap();
        assert_eq!(a.0.to_json(), b.0.to_json());
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn batched_answers_match_single_queries() {
        let texts = [
            "p",
            "p & ~p",
            "Kh p & ~K p",
            "~(Kh Kh p -> Kh p)",
            "K p & ~p",
            "Kh (p & q)",
            "~Kh p & Kh Kh p",
        ];
        let fs: Vec<Formula> = texts.iter().map(|t| parse(t).unwrap()).collect();
        let batch = bounded_model_search_many(&fs, 3);
        for (f, b) in fs.iter().zip(&batch) {
            let single = bounded_model_search(f, 3);
            assert_eq!(single.is_some(), b.is_some(), "{f}");
        }
    }

    #[test]
    #[should_panic(expected = "at most 2 propositions")]
    fn three_propositions_are_refused() {
        bounded_model_search(&parse("p & q & r").unwrap(), 2);
    }
}
