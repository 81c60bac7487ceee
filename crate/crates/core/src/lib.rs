//! Model checking, satisfiability, and proof checking for a modal logic
//! of knowing-that (`K`) and goal-directed knowing-how (`Kh`).
//!
//! `K f` holds at a state when `f` holds throughout the agent's epistemic
//! equivalence class. `Kh f` holds when the agent has a uniform strategy,
//! a map from equivalence classes to actions, whose executions from the
//! current class are all finite and end inside `f`.
//!
//! The crate is organized around that semantics:
//!
//! * [`formula`]: the language, its parser, and a canonical printer;
//! * [`model`]: labelled transition systems with an epistemic
//!   equivalence, and their quotient under it;
//! * [`strategy`]: uniform strategies and their execution graphs;
//! * [`checker`]: formula evaluation, strategy synthesis via a least
//!   fixpoint, and a brute-force enumeration used as an oracle;
//! * [`decision`]: satisfiability and validity by canonical-model
//!   construction, with an exhaustive small-model search as a second
//!   opinion;
//! * [`proofs`]: a Hilbert-style proof checker for the axiom system.

pub mod checker;
pub mod decision;
pub mod formula;
pub mod model;
pub mod proofs;
pub mod strategy;
pub mod testkit;

pub use checker::{
    brute_force_kh, eval, extension, kh_forcing, synthesize, BruteForceError, ForcingResult,
};
pub use decision::bounded::{bounded_model_search, bounded_model_search_many};
pub use decision::{
    atoms, canonical_model, satisfiable, valid, Atom, AtomSet, CanonicalModel, DecisionConfig,
    DecisionError, Satisfiability,
};
pub use formula::{parse, Formula, FormulaSet, ParseError};
pub use model::{ActionId, ClassId, Model, ModelError, QuotientGraph, StateId, UnknownState};
pub use proofs::{check_proof, AxiomName, ProofError, ProofScript};
pub use strategy::{
    execution_graph, verify_strategy, ExecutionGraph, FailureWitness, Strategy, Verdict,
};
