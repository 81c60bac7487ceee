//! Seeded random models, random formulas, and a validity fuzzer.
//!
//! All randomness flows through SplitMix64 (Steele, Lea & Vigna's 64-bit
//! generator, the one behind Java's `SplittableRandom`), implemented inline
//! so the seed-to-output mapping is fixed by this crate alone. Every
//! generator draws in a documented order, making each artifact a pure
//! function of its parameters.

use crate::checker::eval;
use crate::formula::Formula;
use crate::model::{ActionId, Model, StateId};
use std::collections::{BTreeMap, BTreeSet};

/// SplitMix64. Reference: Vigna's public-domain C implementation; the
/// increment is the golden-ratio constant, the finalizer is two xor-shift
/// multiplies.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish draw in `0..n` by modulo; the bias at these ranges is
    /// irrelevant, determinism is what matters.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        self.next_u64() % n
    }

    /// Bernoulli draw with probability `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        (self.next_u64() as f64) < p * (u64::MAX as f64)
    }
}

/// Parameters for [`random_model`]. The same parameters always produce the
/// same model.
#[derive(Debug, Clone)]
pub struct GenParams {
    pub seed: u64,
    pub max_states: usize,
    pub max_actions: usize,
    pub props: Vec<String>,
    pub transition_density: f64,
    pub block_merge_prob: f64,
}

impl GenParams {
    pub fn new(seed: u64) -> Self {
        GenParams {
            seed,
            ..GenParams::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GenParams {
            seed,
            ..self.clone()
        }
    }
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            seed: 0,
            max_states: 6,
            max_actions: 2,
            props: vec!["p".to_string(), "q".to_string()],
            transition_density: 0.3,
            block_merge_prob: 0.3,
        }
    }
}

/// Generates a random model. Draw order, fixed forever: state count, action
/// count, block assignment per state (merge coin, then block index), then
/// one density coin per (state, action, target) triple in sorted order,
/// then one coin per (state, proposition) pair.
pub fn random_model(params: &GenParams) -> Model {
    assert!(params.max_states >= 1, "need at least one state");
    let mut rng = SplitMix64::new(params.seed);

    let n = 1 + rng.below(params.max_states as u64) as usize;
    let states: Vec<StateId> = (1..=n).map(|i| StateId::new(format!("s{i}"))).collect();

    let k = if params.max_actions == 0 {
        0
    } else {
        1 + rng.below(params.max_actions as u64) as usize
    };
    let actions: Vec<ActionId> = (1..=k).map(|i| ActionId::new(format!("a{i}"))).collect();

    let mut blocks: Vec<BTreeSet<StateId>> = vec![BTreeSet::from([states[0].clone()])];
    for s in &states[1..] {
        if rng.chance(params.block_merge_prob) {
            let idx = rng.below(blocks.len() as u64) as usize;
            blocks[idx].insert(s.clone());
        } else {
            blocks.push(BTreeSet::from([s.clone()]));
        }
    }

    let mut transitions = Vec::new();
    for s in &states {
        for a in &actions {
            for t in &states {
                if rng.chance(params.transition_density) {
                    transitions.push((s.clone(), a.clone(), t.clone()));
                }
            }
        }
    }

    let mut valuation: BTreeMap<StateId, BTreeSet<String>> = BTreeMap::new();
    for s in &states {
        let mut props = BTreeSet::new();
        for p in &params.props {
            if rng.chance(0.5) {
                props.insert(p.clone());
            }
        }
        valuation.insert(s.clone(), props);
    }

    Model::new(states, actions, transitions, blocks, valuation)
        .expect("generated models are valid by construction")
}

/// Generates a random formula of depth at most `depth` (at most 6) over the
/// five primitive constructors, chosen uniformly at each node.
pub fn random_formula(seed: u64, depth: usize, props: &[String]) -> Formula {
    assert!(depth <= 6, "formula depth is capped at 6");
    assert!(!props.is_empty(), "need at least one proposition");
    let mut rng = SplitMix64::new(seed);
    gen_formula(&mut rng, depth, props)
}

fn gen_formula(rng: &mut SplitMix64, depth: usize, props: &[String]) -> Formula {
    let pick_prop = |rng: &mut SplitMix64| {
        Formula::prop(props[rng.below(props.len() as u64) as usize].clone())
    };
    if depth == 0 {
        return pick_prop(rng);
    }
    match rng.below(5) {
        0 => pick_prop(rng),
        1 => Formula::not(gen_formula(rng, depth - 1, props)),
        2 => {
            let a = gen_formula(rng, depth - 1, props);
            let b = gen_formula(rng, depth - 1, props);
            Formula::and(a, b)
        }
        3 => Formula::k(gen_formula(rng, depth - 1, props)),
        _ => Formula::kh(gen_formula(rng, depth - 1, props)),
    }
}

/// Result of a fuzzing run. `trials` is the number of models examined; a
/// counterexample is a model and state where the formula is false.
#[derive(Debug, Clone)]
pub struct FuzzReport {
    pub formula: Formula,
    pub trials: u64,
    pub counterexample: Option<(Model, StateId)>,
}

/// Evaluates `f` at every state of up to `trials` random models, stopping
/// at the first counterexample. Trial `i` uses seed `params.seed + i`, so a
/// run can be replayed (or sharded) trial by trial.
pub fn fuzz_validity(f: &Formula, trials: u64, params: &GenParams) -> FuzzReport {
    for i in 0..trials {
        let m = random_model(&params.with_seed(params.seed.wrapping_add(i)));
        for s in m.states() {
            if !eval(&m, s, f).expect("generated states are known") {
                return FuzzReport {
                    formula: f.clone(),
                    trials: i + 1,
                    counterexample: Some((m.clone(), s.clone())),
                };
            }
        }
    }
    FuzzReport {
        formula: f.clone(),
        trials,
        counterexample: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::model::quotient;

    #[test]
    fn models_are_deterministic_in_their_parameters() {
        for seed in 0..50 {
            let params = GenParams::new(seed);
            assert_eq!(random_model(&params), random_model(&params));
        }
    }

    #[test]
    fn single_state_cap_yields_the_unique_shape() {
        for seed in 0..20 {
            let params = GenParams {
                max_states: 1,
                ..GenParams::new(seed)
            };
            let m = random_model(&params);
            assert_eq!(m.states().len(), 1);
            assert_eq!(m.blocks().len(), 1);
        }
    }

    #[test]
    fn defaults_stay_within_the_documented_bounds() {
        for seed in 0..200 {
            let m = random_model(&GenParams::new(seed));
            assert!(m.states().len() <= 6);
            assert!(m.actions().len() <= 2);
            assert!(m.blocks().len() <= 6);
            let q = quotient(&m);
            for c in q.classes() {
                for a in q.uniform_actions(c) {
                    assert!(!q.class_succ(c, a).is_empty());
                }
            }
        }
    }

    #[test]
    fn generator_produces_nondeterministic_actions() {
        let found = (0..200).any(|seed| {
            let m = random_model(&GenParams::new(seed));
            m.states().iter().any(|s| {
                m.actions()
                    .iter()
                    .any(|a| m.successors(s, a).len() > 1)
            })
        });
        assert!(found, "some model should have a nondeterministic action");
    }

    #[test]
    fn formulas_are_deterministic_and_capped() {
        let props = vec!["p".to_string(), "q".to_string()];
        for seed in 0..50 {
            assert_eq!(
                random_formula(seed, 4, &props),
                random_formula(seed, 4, &props)
            );
        }
        assert!(matches!(
            random_formula(7, 0, &props),
            Formula::Prop(_)
        ));
    }

    #[test]
    fn depth_four_samples_use_both_modalities() {
        let props = vec!["p".to_string(), "q".to_string()];
        let mut saw_k = false;
        let mut saw_kh = false;
        for seed in 0..1000 {
            let f = random_formula(seed, 4, &props);
            let text = f.to_string();
            saw_k |= text.contains("K ") && !text.contains("Kh ");
            saw_kh |= text.contains("Kh ");
        }
        assert!(saw_k && saw_kh);
    }

    #[test]
    #[should_panic(expected = "capped")]
    fn formula_depth_above_six_panics() {
        random_formula(0, 7, &["p".to_string()]);
    }

    #[test]
    fn fuzzing_a_validity_finds_nothing() {
        let report = fuzz_validity(&parse("p | ~p").unwrap(), 200, &GenParams::new(1));
        assert!(report.counterexample.is_none());
        assert_eq!(report.trials, 200);
    }

    #[test]
    fn fuzzing_a_contingent_formula_finds_a_counterexample() {
        let f = parse("p").unwrap();
        let report = fuzz_validity(&f, 200, &GenParams::new(1));
        let (m, s) = report.counterexample.expect("p is not valid");
        assert_eq!(eval(&m, &s, &f), Ok(false));
        assert!(report.trials <= 200);
    }

    #[test]
    fn fuzz_reports_are_reproducible() {
        let f = parse("K p -> Kh p").unwrap();
        let a = fuzz_validity(&f, 300, &GenParams::new(42));
        let b = fuzz_validity(&f, 300, &GenParams::new(42));
        assert_eq!(a.trials, b.trials);
        assert_eq!(a.counterexample.is_some(), b.counterexample.is_some());
        if let (Some((ma, sa)), Some((mb, sb))) = (&a.counterexample, &b.counterexample) {
            assert_eq!(ma, mb);
            assert_eq!(sa, sb);
        }
    }
}
