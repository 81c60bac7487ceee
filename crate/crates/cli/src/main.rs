//! Command-line front end for the knowing-how logic library.
//!
//! Exit codes: 0 for true/valid/sat/proof-ok, 1 for the negative verdict
//! (false, invalid, unsat, no strategy, proof rejected, counterexample
//! found), 2 for usage errors, 3 for input validation errors.

use clap::{Parser, Subcommand, ValueEnum};
use knowhow::decision::{satisfiable_with, valid_with, Satisfiability};
use knowhow::model::quotient;
use knowhow::proofs;
use knowhow::testkit::{fuzz_validity, GenParams};
use knowhow::{check_proof, eval, parse, synthesize, DecisionConfig, Formula, Model, StateId};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "knowhow", version, about = "Model checking, satisfiability, and proofs for a logic of knowing how")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Closure-size cap for `sat` and `valid`.
    #[arg(long, global = true)]
    cap: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a formula and print its canonical form.
    Parse { formula: String },
    /// Evaluate a formula at a state of a model.
    Check {
        model_file: PathBuf,
        state: String,
        formula: String,
        /// After a true verdict, also print the witness strategy.
        /// The formula must be of the form `Kh f`.
        #[arg(long)]
        witness: bool,
    },
    /// Synthesize a strategy achieving a goal formula from a state.
    Synth {
        model_file: PathBuf,
        state: String,
        formula: String,
    },
    /// Print a model's epistemic classes and their uniform actions.
    Classes { model_file: PathBuf },
    /// Decide whether a formula is satisfiable.
    Sat { formula: String },
    /// Decide whether a formula is valid.
    Valid { formula: String },
    /// Check a proof script.
    Prove { proof_file: PathBuf },
    /// Search seeded random models for a counterexample to a formula.
    Fuzz {
        formula: String,
        /// Number of random models to try.
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
}

const PASS: u8 = 0;
const FAIL: u8 = 1;
const INVALID_INPUT: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(INVALID_INPUT)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, String> {
    match &cli.command {
        Cmd::Parse { formula } => cmd_parse(cli, formula),
        Cmd::Check {
            model_file,
            state,
            formula,
            witness,
        } => cmd_check(cli, model_file, state, formula, *witness),
        Cmd::Synth {
            model_file,
            state,
            formula,
        } => cmd_synth(cli, model_file, state, formula),
        Cmd::Classes { model_file } => cmd_classes(cli, model_file),
        Cmd::Sat { formula } => cmd_sat(cli, formula),
        Cmd::Valid { formula } => cmd_valid(cli, formula),
        Cmd::Prove { proof_file } => cmd_prove(cli, proof_file),
        Cmd::Fuzz { formula, trials } => cmd_fuzz(cli, formula, *trials),
    }
}

fn parse_formula(text: &str) -> Result<Formula, String> {
    parse(text).map_err(|e| format!("cannot parse `{text}`: {e}"))
}

fn load_model(path: &PathBuf) -> Result<Model, String> {
    Model::load(path).map_err(|e| format!("cannot load model {}: {e}", path.display()))
}

fn decision_config(cli: &Cli) -> DecisionConfig {
    let mut config = DecisionConfig::default();
    if let Some(cap) = cli.cap {
        config.closure_cap = cap;
    }
    config
}

fn cmd_parse(cli: &Cli, text: &str) -> Result<u8, String> {
    let f = parse_formula(text)?;
    match cli.format {
        Format::Text => println!("{}", f.canonical()),
        Format::Json => println!(
            "{}",
            json!({
                "canonical": f.canonical(),
                "pretty": f.pretty(),
                "size": f.size(),
                "props": f.props(),
            })
        ),
    }
    Ok(PASS)
}

fn cmd_check(
    cli: &Cli,
    model_file: &PathBuf,
    state: &str,
    formula: &str,
    witness: bool,
) -> Result<u8, String> {
    let f = parse_formula(formula)?;
    let goal = match (&f, witness) {
        (Formula::Kh(body), true) => Some(body.as_ref().clone()),
        (_, true) => return Err(format!("--witness requires a formula of the form `Kh f`, got `{f}`")),
        (_, false) => None,
    };
    let m = load_model(model_file)?;
    let s = StateId::new(state);
    let verdict = eval(&m, &s, &f).map_err(|e| e.to_string())?;
    let strategy = match (verdict, goal) {
        (true, Some(g)) => synthesize(&m, &s, &g).map_err(|e| e.to_string())?,
        _ => None,
    };
    match cli.format {
        Format::Text => {
            println!("{verdict}");
            if let Some(sigma) = &strategy {
                println!("{}", sigma.to_json());
            }
        }
        Format::Json => {
            let mut out = json!({ "verdict": verdict });
            if let Some(sigma) = &strategy {
                out["strategy"] = sigma.to_json();
            }
            println!("{out}");
        }
    }
    Ok(if verdict { PASS } else { FAIL })
}

fn cmd_synth(cli: &Cli, model_file: &PathBuf, state: &str, formula: &str) -> Result<u8, String> {
    let f = parse_formula(formula)?;
    let m = load_model(model_file)?;
    let s = StateId::new(state);
    let strategy = synthesize(&m, &s, &f).map_err(|e| e.to_string())?;
    match (&strategy, cli.format) {
        (Some(sigma), _) => println!("{}", sigma.to_json()),
        (None, Format::Text) => println!("none"),
        (None, Format::Json) => println!("null"),
    }
    Ok(if strategy.is_some() { PASS } else { FAIL })
}

fn cmd_classes(cli: &Cli, model_file: &PathBuf) -> Result<u8, String> {
    let m = load_model(model_file)?;
    let q = quotient(&m);
    match cli.format {
        Format::Text => {
            for c in q.classes() {
                let members: Vec<&str> =
                    m.class_members(c).iter().map(|s| s.as_str()).collect();
                println!("[{}] {{{}}}", c.representative().as_str(), members.join(" "));
                for a in q.uniform_actions(c) {
                    let succ: Vec<String> = q
                        .class_succ(c, a)
                        .iter()
                        .map(|d| format!("[{}]", d.representative().as_str()))
                        .collect();
                    println!("  {} -> {}", a.as_str(), succ.join(" "));
                }
            }
        }
        Format::Json => {
            let classes: Vec<_> = q
                .classes()
                .iter()
                .map(|c| {
                    let actions: serde_json::Map<String, serde_json::Value> = q
                        .uniform_actions(c)
                        .iter()
                        .map(|a| {
                            let succ: Vec<String> = q
                                .class_succ(c, a)
                                .iter()
                                .map(|d| d.representative().as_str().to_string())
                                .collect();
                            (a.as_str().to_string(), json!(succ))
                        })
                        .collect();
                    json!({
                        "representative": c.representative().as_str(),
                        "members": m.class_members(c).iter().map(|s| s.as_str()).collect::<Vec<_>>(),
                        "actions": actions,
                    })
                })
                .collect();
            println!("{}", json!({ "classes": classes }));
        }
    }
    Ok(PASS)
}

fn cmd_sat(cli: &Cli, formula: &str) -> Result<u8, String> {
    let f = parse_formula(formula)?;
    let config = decision_config(cli);
    let outcome = satisfiable_with(&f, &config).map_err(|e| e.to_string())?;
    match (&outcome, cli.format) {
        (Satisfiability::Sat { .. }, Format::Text) => println!("sat"),
        (Satisfiability::Unsat, Format::Text) => println!("unsat"),
        (Satisfiability::Sat { model, state }, Format::Json) => println!(
            "{}",
            json!({
                "satisfiable": true,
                "state": state.as_str(),
                "model": model.to_json(),
            })
        ),
        (Satisfiability::Unsat, Format::Json) => {
            println!("{}", json!({ "satisfiable": false }))
        }
    }
    Ok(if outcome.is_sat() { PASS } else { FAIL })
}

fn cmd_valid(cli: &Cli, formula: &str) -> Result<u8, String> {
    let f = parse_formula(formula)?;
    let config = decision_config(cli);
    let verdict = valid_with(&f, &config).map_err(|e| e.to_string())?;
    match cli.format {
        Format::Text => println!("{}", if verdict { "valid" } else { "invalid" }),
        Format::Json => println!("{}", json!({ "valid": verdict })),
    }
    Ok(if verdict { PASS } else { FAIL })
}

fn cmd_prove(cli: &Cli, proof_file: &PathBuf) -> Result<u8, String> {
    let script = proofs::ProofScript::load(proof_file)
        .map_err(|e| format!("cannot load proof {}: {e}", proof_file.display()))?;
    let outcome = check_proof(&script);
    match (&outcome, cli.format) {
        (Ok(()), Format::Text) => match script.conclusion() {
            Some(c) => println!("ok: {}", c.pretty()),
            None => println!("ok: empty proof"),
        },
        (Err(e), Format::Text) => println!("rejected: step {}: {} ({})", e.step, e.detail, e.reason),
        (Ok(()), Format::Json) => println!(
            "{}",
            json!({
                "ok": true,
                "steps": script.steps.len(),
                "conclusion": script.conclusion().map(|c| c.canonical()),
            })
        ),
        (Err(e), Format::Json) => println!(
            "{}",
            json!({
                "ok": false,
                "step": e.step,
                "reason": e.reason.to_string(),
                "detail": e.detail,
            })
        ),
    }
    Ok(if outcome.is_ok() { PASS } else { FAIL })
}

fn cmd_fuzz(cli: &Cli, formula: &str, trials: u64) -> Result<u8, String> {
    let f = parse_formula(formula)?;
    let params = GenParams::new(cli.seed);
    let report = fuzz_validity(&f, trials, &params);
    match (&report.counterexample, cli.format) {
        (None, Format::Text) => println!("no counterexample in {} trials", report.trials),
        (Some((model, state)), Format::Text) => {
            println!("counterexample after {} trials at {}:", report.trials, state.as_str());
            println!("{}", model.to_json());
        }
        (None, Format::Json) => println!(
            "{}",
            json!({ "counterexample": false, "trials": report.trials })
        ),
        (Some((model, state)), Format::Json) => println!(
            "{}",
            json!({
                "counterexample": true,
                "trials": report.trials,
                "state": state.as_str(),
                "model": model.to_json(),
            })
        ),
    }
    Ok(if report.counterexample.is_none() {
        PASS
    } else {
        FAIL
    })
}
