//! Acceptance suite: one test per release criterion, each printing a
//! single PASS line with its measurements (run with `-- --nocapture`).

use knowhow::checker::{brute_force_kh, eval, extension, kh_forcing, synthesize};
use knowhow::decision::bounded::bounded_model_search_many;
use knowhow::decision::{
    canonical_model_with, satisfiable_with, valid_with, DecisionConfig, Satisfiability,
};
use knowhow::formula::{parse, Formula, FALSUM_PROP};
use knowhow::model::{ClassId, Model, StateId};
use knowhow::proofs::{
    apply_subst, axiom_schema, check_proof, AxiomName, Justification, ProofScript,
};
use knowhow::strategy::{ce_leaf, Strategy};
use knowhow::testkit::{fuzz_validity, random_formula, random_model, GenParams};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

const CURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/cure.model");
const PROOF: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../fixtures/neg_introspection.proof"
);

fn report(criterion: usize, start: Instant, budget: Duration, details: &str) {
    let elapsed = start.elapsed();
    assert!(
        elapsed < budget,
        "criterion {criterion} exceeded its {budget:?} budget: {elapsed:?}"
    );
    println!("criterion {criterion}: PASS ({details}, {elapsed:.2?})");
}

/// The nine named schemas plus excluded middle for the propositional
/// family, each instantiated at every assignment of {p, q, p&q} to its
/// schema letters.
fn axiom_instances() -> Vec<Formula> {
    let p = Formula::prop("p");
    let q = Formula::prop("q");
    let slots = [p.clone(), q.clone(), Formula::and(p, q)];
    let mut out = Vec::new();
    for s in &slots {
        out.push(Formula::or(s.clone(), Formula::not(s.clone())));
    }
    for name in AxiomName::ALL {
        let schema = axiom_schema(name);
        let letters: Vec<String> = schema
            .props()
            .into_iter()
            .filter(|x| x != FALSUM_PROP)
            .collect();
        match letters.len() {
            0 => out.push(schema.clone()),
            1 => {
                for s in &slots {
                    let subst = BTreeMap::from([(letters[0].clone(), s.clone())]);
                    out.push(apply_subst(&schema, &subst));
                }
            }
            2 => {
                for a in &slots {
                    for b in &slots {
                        let subst = BTreeMap::from([
                            (letters[0].clone(), a.clone()),
                            (letters[1].clone(), b.clone()),
                        ]);
                        out.push(apply_subst(&schema, &subst));
                    }
                }
            }
            n => panic!("schemas use at most two letters, found {n}"),
        }
    }
    assert_eq!(out.len(), 34);
    out
}

fn named_theorems() -> Vec<Formula> {
    vec![
        parse("~Kh p -> K ~Kh p").expect("parses"),
        parse("Kh Kh p -> Kh p").expect("parses"),
    ]
}

#[test]
fn criterion_1_cure_model_checking_and_synthesis() {
    let start = Instant::now();
    let m = Model::load(CURE).expect("fixture loads");
    let s1 = StateId::new("s1");
    let s2 = StateId::new("s2");
    let checks = [
        ("s1", "Kh ~p", true),
        ("s2", "Kh ~p", true),
        ("s1", "Kh ~q", false),
        ("s1", "Kh (p <-> q)", true),
    ];
    for (state, text, expected) in checks {
        let f = parse(text).expect("parses");
        assert_eq!(
            eval(&m, &StateId::new(state), &f),
            Ok(expected),
            "eval({state}, {text})"
        );
    }
    let goal = parse("~p").expect("parses");
    let sigma = synthesize(&m, &s1, &goal)
        .expect("state is known")
        .expect("a cure strategy exists");
    let expected: Strategy = [
        (ClassId(s1.clone()), knowhow::ActionId::new("test")),
        (ClassId(StateId::new("s3")), knowhow::ActionId::new("pills")),
        (ClassId(StateId::new("s4")), knowhow::ActionId::new("surgery")),
    ]
    .into_iter()
    .collect();
    assert_eq!(sigma, expected);
    let leaves = ce_leaf(&m, &sigma, &s1).expect("state is known");
    let want: BTreeSet<ClassId> = [
        ClassId(StateId::new("s5")),
        ClassId(StateId::new("s6")),
    ]
    .into_iter()
    .collect();
    assert_eq!(leaves, want);
    for leaf in &leaves {
        assert_eq!(m.class_members(leaf).len(), 1);
    }
    assert_eq!(eval(&m, &s2, &parse("Kh ~p").expect("parses")), Ok(true));
    report(
        1,
        start,
        Duration::from_secs(1),
        "4 evals, exact strategy, leaf classes {[s5],[s6]}",
    );
}

/// Every formula over {p, q} of nesting depth at most `depth`.
fn formulas_to_depth(depth: usize) -> Vec<Formula> {
    let mut level: BTreeSet<Formula> = [Formula::prop("p"), Formula::prop("q")].into();
    for _ in 0..depth {
        let prev: Vec<Formula> = level.iter().cloned().collect();
        for f in &prev {
            level.insert(Formula::not(f.clone()));
            level.insert(Formula::k(f.clone()));
            level.insert(Formula::kh(f.clone()));
        }
        for a in &prev {
            for b in &prev {
                level.insert(Formula::and(a.clone(), b.clone()));
            }
        }
    }
    level.into_iter().collect()
}

#[test]
fn criterion_2_fixpoint_agrees_with_strategy_enumeration() {
    let start = Instant::now();
    let goals = formulas_to_depth(2);
    assert_eq!(goals.len(), 182);
    const MODELS: u64 = 5_000;
    let disagreements: usize = (0..MODELS)
        .into_par_iter()
        .map(|seed| {
            let params = GenParams {
                max_states: 4,
                ..GenParams::new(seed)
            };
            let m = random_model(&params);
            let mut goal_sets = BTreeSet::new();
            for f in &goals {
                goal_sets.insert(extension(&m, f));
            }
            let mut bad = 0;
            for goal in goal_sets {
                let forcing = kh_forcing(&m, &goal);
                for s in m.states() {
                    let fast = forcing
                        .winning()
                        .contains(&m.equiv_class(s).expect("state is known"));
                    let brute = brute_force_kh(&m, s, &goal).expect("space within cap");
                    if fast != brute {
                        bad += 1;
                    }
                }
            }
            bad
        })
        .sum();
    assert_eq!(disagreements, 0);
    report(
        2,
        start,
        Duration::from_secs(300),
        "5000 models x 182 depth-2 goal formulas, zero disagreements",
    );
}

#[test]
fn criterion_3_axioms_survive_random_model_fuzzing() {
    let start = Instant::now();
    let mut suite = axiom_instances();
    suite.extend(named_theorems());
    assert_eq!(suite.len(), 36);
    const TRIALS: u64 = 10_000;
    let surviving: usize = suite
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let params = GenParams::new(0x5EED_0000 + i as u64);
            let report = fuzz_validity(f, TRIALS, &params);
            assert!(
                report.counterexample.is_none(),
                "`{f}` falsified at {:?}",
                report.counterexample
            );
            assert_eq!(report.trials, TRIALS);
            1
        })
        .sum();
    assert_eq!(surviving, 36);
    report(
        3,
        start,
        Duration::from_secs(600),
        "36 theorems x 10000 trials, zero counterexamples",
    );
}

#[test]
fn criterion_4_non_theorems_are_falsified_and_reverified() {
    let start = Instant::now();
    for text in ["Kh p & Kh q -> Kh (p & q)", "Kh p -> K p"] {
        let f = parse(text).expect("parses");
        let report = fuzz_validity(&f, 10_000, &GenParams::new(0));
        let (m, s) = report
            .counterexample
            .as_ref()
            .unwrap_or_else(|| panic!("`{text}` not falsified in 10000 trials"));
        assert!(report.trials <= 10_000);
        assert_eq!(eval(m, s, &f), Ok(false), "counterexample must re-verify");
    }
    report(
        4,
        start,
        Duration::from_secs(60),
        "both non-theorems falsified and re-verified",
    );
}

#[test]
fn criterion_5_decision_procedure_validates_the_axioms() {
    let start = Instant::now();
    // larger instances push the closure past the default cap; the cap is
    // a configurable guard, not a correctness bound
    let config = DecisionConfig {
        closure_cap: 64,
        ..DecisionConfig::default()
    };
    let instances = axiom_instances();
    let verdicts: usize = instances
        .par_iter()
        .map(|f| {
            assert_eq!(valid_with(f, &config), Ok(true), "`{f}` must be valid");
            1
        })
        .sum();
    assert_eq!(verdicts, 34);
    let negated = parse("~(Kh p & Kh q -> Kh (p & q))").expect("parses");
    match satisfiable_with(&negated, &config).expect("decision runs") {
        Satisfiability::Sat { model, state } => {
            assert_eq!(eval(&model, &state, &negated), Ok(true));
        }
        Satisfiability::Unsat => panic!("the aggregation non-theorem must be refutable"),
    }
    let mut tested = instances;
    tested.push(negated);
    for f in &tested {
        let cm = canonical_model_with(f, config.closure_cap).expect("construction runs");
        assert!(
            (cm.state_count() as u128) <= cm.state_bound(),
            "`{f}`: {} states exceed the bound {}",
            cm.state_count(),
            cm.state_bound()
        );
    }
    report(
        5,
        start,
        Duration::from_secs(300),
        "34 valid instances, SAT witness re-verified, state bounds hold",
    );
}

/// Every formula over {p, q} with at most `max` syntax-tree nodes.
fn formulas_to_size(max: usize) -> Vec<Formula> {
    let mut by_size: Vec<Vec<Formula>> = vec![Vec::new(); max + 1];
    if max >= 1 {
        by_size[1] = vec![Formula::prop("p"), Formula::prop("q")];
    }
    for n in 2..=max {
        let mut level = Vec::new();
        for f in &by_size[n - 1] {
            level.push(Formula::not(f.clone()));
            level.push(Formula::k(f.clone()));
            level.push(Formula::kh(f.clone()));
        }
        for i in 1..n - 1 {
            let j = n - 1 - i;
            for a in &by_size[i] {
                for b in &by_size[j] {
                    level.push(Formula::and(a.clone(), b.clone()));
                }
            }
        }
        by_size[n] = level;
    }
    by_size.into_iter().flatten().collect()
}

#[test]
fn criterion_6_decision_agrees_with_bounded_search() {
    let start = Instant::now();
    let formulas = formulas_to_size(6);
    assert_eq!(formulas.len(), 2320);
    let config = DecisionConfig::default();
    let decided: Vec<bool> = formulas
        .par_iter()
        .map(|f| {
            satisfiable_with(f, &config)
                .unwrap_or_else(|e| panic!("`{f}` must stay in-cap: {e}"))
                .is_sat()
        })
        .collect();
    let searched = bounded_model_search_many(&formulas, 4);
    let mut disagreements = Vec::new();
    for ((f, d), s) in formulas.iter().zip(&decided).zip(&searched) {
        if *d != s.is_some() {
            disagreements.push(format!("`{f}`: decision {d}, search {}", s.is_some()));
        }
    }
    assert!(disagreements.is_empty(), "{disagreements:#?}");
    let sat_count = decided.iter().filter(|d| **d).count();
    report(
        6,
        start,
        Duration::from_secs(600),
        &format!(
            "2320 formulas, {sat_count} sat / {} unsat, zero disagreements",
            2320 - sat_count
        ),
    );
}

/// Single-field edits of a proof script: each mutation changes exactly
/// one formula, one premise index, or one rule name.
fn mutations(script: &ProofScript) -> Vec<(String, ProofScript)> {
    let mut out = Vec::new();
    let shift = |i: usize, idx: usize| (i + 1) % idx;
    for (idx, step) in script.steps.iter().enumerate() {
        let mut negated = script.clone();
        negated.steps[idx].formula = Formula::not(step.formula.clone());
        out.push((format!("step {idx}: negate formula"), negated));

        match &step.justification {
            Justification::Taut => {
                let mut s = script.clone();
                s.steps[idx].justification = Justification::Axiom(AxiomName::KhBot);
                out.push((format!("step {idx}: relabel tautology as axiom"), s));
            }
            Justification::Axiom(name) => {
                let all = AxiomName::ALL;
                let pos = all.iter().position(|n| n == name).expect("known axiom");
                let other = all[(pos + 1) % all.len()];
                let mut s = script.clone();
                s.steps[idx].justification = Justification::Axiom(other);
                out.push((format!("step {idx}: claim a different axiom"), s));
            }
            Justification::Mp(i, j) => {
                let mut s = script.clone();
                s.steps[idx].justification = Justification::Mp(shift(*i, idx), *j);
                out.push((format!("step {idx}: shift minor premise"), s));
                let mut s = script.clone();
                s.steps[idx].justification = Justification::Mp(*i, shift(*j, idx));
                out.push((format!("step {idx}: shift major premise"), s));
            }
            Justification::NecK(i) => {
                let mut s = script.clone();
                s.steps[idx].justification = Justification::NecK(shift(*i, idx));
                out.push((format!("step {idx}: shift premise"), s));
                let mut s = script.clone();
                s.steps[idx].justification = Justification::MonoKh(*i);
                out.push((format!("step {idx}: swap necessitation for monotonicity"), s));
            }
            Justification::MonoKh(i) => {
                let mut s = script.clone();
                s.steps[idx].justification = Justification::MonoKh(shift(*i, idx));
                out.push((format!("step {idx}: shift premise"), s));
                let mut s = script.clone();
                s.steps[idx].justification = Justification::NecK(*i);
                out.push((format!("step {idx}: swap monotonicity for necessitation"), s));
            }
            Justification::Sub(i, subst) => {
                let mut s = script.clone();
                s.steps[idx].justification = Justification::Sub(shift(*i, idx), subst.clone());
                out.push((format!("step {idx}: shift premise"), s));
            }
        }
    }
    out
}

#[test]
fn criterion_7_tampered_proofs_are_rejected() {
    let start = Instant::now();
    let script = ProofScript::load(PROOF).expect("fixture loads");
    assert_eq!(check_proof(&script), Ok(()), "fixture must check");
    let conclusion = script.conclusion().expect("nonempty fixture").clone();
    assert_eq!(conclusion, parse("~Kh p -> K ~Kh p").expect("parses"));

    let muts = mutations(&script);
    assert!(
        muts.len() >= 20,
        "need at least 20 single-point mutations, built {}",
        muts.len()
    );
    for (label, tampered) in &muts {
        assert!(
            check_proof(tampered).is_err(),
            "mutation survived: {label}"
        );
    }

    let fuzzed = fuzz_validity(&conclusion, 10_000, &GenParams::new(0x5EED_0000));
    assert!(fuzzed.counterexample.is_none());
    report(
        7,
        start,
        Duration::from_secs(10),
        &format!(
            "fixture ok, {} mutations all rejected, conclusion fuzz-confirmed",
            muts.len()
        ),
    );
}

#[test]
fn criterion_8_parser_round_trips_random_formulas() {
    let start = Instant::now();
    let props: Vec<String> = ["p", "q", "r"].iter().map(|s| s.to_string()).collect();
    const COUNT: u64 = 10_000;
    for i in 0..COUNT {
        let f = random_formula(i, (i % 6 + 1) as usize, &props);
        assert_eq!(parse(&f.canonical()).expect("canonical parses"), f, "{f}");
        assert_eq!(parse(&f.pretty()).expect("pretty parses"), f, "{f}");
    }
    report(
        8,
        start,
        Duration::from_secs(30),
        "10000 formulas, canonical and pretty forms both round-trip",
    );
}
