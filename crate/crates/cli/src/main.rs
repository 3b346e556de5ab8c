//! `qw`: check, elaborate and query QIT declarations.
//!
//! Exit codes: 0 success or proved, 1 usage or IO, 2 semantic error or
//! failed check, 3 unknown, 4 separated.

mod selftest;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qw_core::algebra::{eval_alg, FiniteAlgebra};
use qw_core::engine::separator::{find_separator, Separation};
use qw_core::engine::{EqVerdict, QwConfig, QwState};
use qw_core::equations::{mk_sys_eq, sat_check, EquationSystem, DEFAULT_ENV_BUDGET};
use qw_core::initiality::{qw_rec, RecTarget};
use qw_core::schema::{check_positivity, classify, elaborate, parse_decl, parse_term, ElabOptions};
use qw_core::terms::{map_t, Signature, Term};
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "qw", version, about = "Quotient W-types at desk scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    max_rounds: u64,
    #[arg(long, global = true, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    size_bound: u64,
    /// Overrides the probe depth of the input.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    probe: Option<u64>,
    #[arg(long, global = true, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    carrier_bound: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse, check positivity and classify a declaration.
    Check { path: PathBuf },
    /// Print the signature and equation system of a declaration.
    Elaborate { path: PathBuf },
    /// Decide whether two terms are equal, searching for a separating
    /// model when no derivation is found.
    Eq {
        path: PathBuf,
        lhs: String,
        rhs: String,
        #[arg(long)]
        no_separate: bool,
    },
    /// List the classes of terms up to the size bound.
    Enumerate { path: PathBuf },
    /// Check that an algebra satisfies the equations.
    Sat { path: PathBuf, algebra: PathBuf },
    /// Evaluate a term by recursion into an algebra.
    Rec {
        path: PathBuf,
        algebra: PathBuf,
        term: String,
        /// Generator values, `name=index`.
        #[arg(long = "gen")]
        gens: Vec<String>,
    },
    /// Search for a finite model separating two closed terms.
    Separate { path: PathBuf, lhs: String, rhs: String },
    /// Run the initiality suites on an instance.
    Selftest {
        path: PathBuf,
        /// An extra algebra to check.
        #[arg(long)]
        algebra: Option<PathBuf>,
    },
}

pub enum Failure {
    Usage(String),
    Semantic(Value, String),
}

pub struct Outcome {
    pub code: u8,
    pub value: Value,
    pub human: String,
}

impl Outcome {
    fn ok(value: Value, human: String) -> Self {
        Outcome { code: 0, value, human }
    }
}

fn semantic(e: impl std::fmt::Display) -> Failure {
    Failure::Semantic(json!({ "error": e.to_string() }), format!("error: {e}"))
}

pub struct Instance {
    pub signature: Signature,
    pub equations: EquationSystem,
    pub generators: Vec<String>,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

/// Loads a `.qit` declaration or a JSON `{signature, equations,
/// generators?}` document.
pub fn load(path: &Path, probe: Option<usize>) -> Result<Instance, Failure> {
    let src = read(path)?;
    if is_json(path) {
        let v: Value = serde_json::from_str(&src).map_err(semantic)?;
        let signature: Signature = serde_json::from_value(v["signature"].clone()).map_err(semantic)?;
        let raw: EquationSystem = serde_json::from_value(v["equations"].clone()).map_err(semantic)?;
        let generators: Vec<String> = match v.get("generators") {
            Some(g) => serde_json::from_value(g.clone()).map_err(semantic)?,
            None => Vec::new(),
        };
        let equations = mk_sys_eq(&signature, raw.eqs, probe.unwrap_or(raw.probe)).map_err(semantic)?;
        return Ok(Instance {
            signature,
            equations,
            generators,
        });
    }
    let decl = parse_decl(&src).map_err(semantic)?;
    let e = elaborate(&decl, ElabOptions { probe }).map_err(semantic)?;
    Ok(Instance {
        signature: e.signature,
        equations: e.equations,
        generators: e.generators,
    })
}

fn load_algebra(path: &Path) -> Result<FiniteAlgebra, Failure> {
    serde_json::from_str(&read(path)?).map_err(semantic)
}

pub struct Budgets {
    pub max_rounds: usize,
    pub size_bound: usize,
    pub probe: Option<usize>,
    pub carrier_bound: usize,
}

pub fn new_state(inst: &Instance, b: &Budgets) -> Result<QwState, Failure> {
    let config = QwConfig {
        max_rounds: b.max_rounds,
        ..QwConfig::default()
    };
    QwState::new(
        inst.signature.clone(),
        inst.equations.clone(),
        config,
        inst.generators.clone(),
    )
    .map_err(semantic)
}

fn term(inst: &Instance, src: &str) -> Result<Term<String>, Failure> {
    parse_term(&inst.signature, &inst.generators, src).map_err(semantic)
}

fn cmd_check(path: &Path) -> Result<Outcome, Failure> {
    let decl = parse_decl(&read(path)?).map_err(semantic)?;
    check_positivity(&decl).map_err(semantic)?;
    let c = classify(&decl);
    if c.conditional {
        let e = elaborate(&decl, ElabOptions::default()).err();
        return Err(semantic(e.map_or("conditional declaration".to_string(), |e| e.to_string())));
    }
    let flag = |b: bool, yes: &str, no: &str| if b { yes.to_string() } else { no.to_string() };
    let human = format!(
        "{}: {} element and {} equality constructors; {}, {}, {}",
        decl.name,
        decl.elems.len(),
        decl.eqs.len(),
        flag(c.recursive, "recursive", "non-recursive"),
        flag(c.conditional, "conditional", "equational"),
        flag(c.finitary, "finitary", "infinitary"),
    );
    Ok(Outcome::ok(
        json!({ "name": decl.name, "elements": decl.elems.len(), "equalities": decl.eqs.len(), "classification": c }),
        human,
    ))
}

fn cmd_elaborate(path: &Path, probe: Option<usize>) -> Result<Outcome, Failure> {
    let inst = load(path, probe)?;
    let value = json!({
        "signature": inst.signature,
        "equations": inst.equations,
        "generators": inst.generators,
    });
    let mut human = String::new();
    for op in inst.signature.ops() {
        human.push_str(&format!("op {} : {}\n", op.name, op.arity));
    }
    for e in inst.equations.ordered() {
        let show = |t: &Term<usize>| map_t(&mut |v: &usize| format!("v{v}"), t).to_string();
        human.push_str(&format!("eq {} : {} = {}\n", e.name, show(&e.lhs), show(&e.rhs)));
    }
    human.push_str(&format!("probe {}", inst.equations.probe));
    Ok(Outcome::ok(value, human))
}

fn separate(inst: &Instance, t: &Term<String>, u: &Term<String>, b: &Budgets) -> Result<Separation, Failure> {
    find_separator(&inst.signature, &inst.equations, t, u, b.carrier_bound, 1_000_000).map_err(semantic)
}

fn cmd_eq(path: &Path, lhs: &str, rhs: &str, no_separate: bool, b: &Budgets) -> Result<Outcome, Failure> {
    let inst = load(path, b.probe)?;
    let (t, u) = (term(&inst, lhs)?, term(&inst, rhs)?);
    let mut state = new_state(&inst, b)?;
    let (x, y) = (
        state.intern_term(&t).map_err(semantic)?,
        state.intern_term(&u).map_err(semantic)?,
    );
    let saturation = state.saturate();
    let verdict = state.decide_eq(x, y).map_err(semantic)?;
    if let EqVerdict::Proved { derivation } = &verdict {
        let steps: Vec<String> = derivation
            .steps
            .iter()
            .map(|s| format!("  {} ~ {} by {}", s.from, s.to, s.justification.rule()))
            .collect();
        let human = format!("proved in {} steps\n{}", steps.len(), steps.join("\n"));
        return Ok(Outcome::ok(json!({ "result": "proved", "derivation": derivation }), human.trim_end().to_string()));
    }
    let closed = inst.generators.is_empty();
    if !no_separate && closed {
        if let Separation::Found { algebra } = separate(&inst, &t, &u, b)? {
            let human = format!(
                "separated by a {}-element model: {} vs {}",
                algebra.size(),
                label(&algebra, &t),
                label(&algebra, &u)
            );
            return Ok(Outcome {
                code: 4,
                value: json!({ "result": "separated", "algebra": algebra }),
                human,
            });
        }
    }
    let note = if saturation.is_fixpoint() { "" } else { " (saturation budget exhausted)" };
    Ok(Outcome {
        code: 3,
        value: json!({ "result": "unknown", "saturation": saturation }),
        human: format!("unknown{note}"),
    })
}

fn label(alg: &FiniteAlgebra, t: &Term<String>) -> String {
    match eval_alg(t, &mut |_: &String| None, alg) {
        Ok(v) => alg.label(v).to_string(),
        Err(_) => "?".into(),
    }
}

fn cmd_enumerate(path: &Path, b: &Budgets) -> Result<Outcome, Failure> {
    let inst = load(path, b.probe)?;
    let mut state = new_state(&inst, b)?;
    let e = state.enumerate(b.size_bound).map_err(semantic)?;
    let reps: Vec<String> = e.classes.iter().map(|(_, t)| t.to_string()).collect();
    let noun = if reps.len() == 1 { "class" } else { "classes" };
    let mut human = format!("{} {noun} up to size {}", reps.len(), b.size_bound);
    if !e.saturation.is_fixpoint() {
        human.push_str(" (saturation budget exhausted)");
    }
    for r in &reps {
        human.push_str(&format!("\n  {r}"));
    }
    Ok(Outcome::ok(
        json!({ "size_bound": b.size_bound, "count": reps.len(), "classes": reps, "saturation": e.saturation }),
        human,
    ))
}

fn cmd_sat(path: &Path, algebra: &Path, b: &Budgets) -> Result<Outcome, Failure> {
    let inst = load(path, b.probe)?;
    let alg = load_algebra(algebra)?;
    alg.check_signature(&inst.signature).map_err(semantic)?;
    let report = sat_check(&alg, &inst.equations, DEFAULT_ENV_BUDGET).map_err(semantic)?;
    let value = serde_json::to_value(&report.verdict).expect("serializable");
    if report.is_satisfied() {
        Ok(Outcome::ok(value, "satisfied".into()))
    } else {
        Err(Failure::Semantic(value.clone(), format!("violated: {value}")))
    }
}

fn parse_gens(gens: &[String], alg: &FiniteAlgebra) -> Result<BTreeMap<String, usize>, Failure> {
    gens.iter()
        .map(|g| {
            let (name, v) = g
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("`{g}` is not of the form name=value")))?;
            let v = v
                .parse()
                .ok()
                .or_else(|| (0..alg.size()).find(|&i| alg.label(i) == v))
                .ok_or_else(|| Failure::Usage(format!("`{v}` is not a carrier element")))?;
            Ok((name.to_string(), v))
        })
        .collect()
}

fn cmd_rec(path: &Path, algebra: &Path, src: &str, gens: &[String], b: &Budgets) -> Result<Outcome, Failure> {
    let inst = load(path, b.probe)?;
    let alg = load_algebra(algebra)?;
    let t = term(&inst, src)?;
    let gens = parse_gens(gens, &alg)?;
    let mut state = new_state(&inst, b)?;
    let c = state.intern_term(&t).map_err(semantic)?;
    state.saturate();
    let target = RecTarget::new(&state, alg, gens, DEFAULT_ENV_BUDGET).map_err(semantic)?;
    let v = qw_rec(&state, &target, c).map_err(semantic)?;
    let l = target.alg.label(v).to_string();
    Ok(Outcome::ok(json!({ "value": v, "label": l }), l))
}

fn cmd_separate(path: &Path, lhs: &str, rhs: &str, b: &Budgets) -> Result<Outcome, Failure> {
    let inst = load(path, b.probe)?;
    let (t, u) = (term(&inst, lhs)?, term(&inst, rhs)?);
    match separate(&inst, &t, &u, b)? {
        Separation::Found { algebra } => Ok(Outcome {
            code: 4,
            human: format!("separated by a {}-element model", algebra.size()),
            value: json!({ "result": "separated", "algebra": algebra }),
        }),
        other => Ok(Outcome {
            code: 3,
            human: "no separating model within the bounds".into(),
            value: serde_json::to_value(other).expect("serializable"),
        }),
    }
}

fn emit(format: Format, value: &Value, human: &str, to_err: bool) {
    let text = match format {
        Format::Json => serde_json::to_string_pretty(value).expect("serializable"),
        Format::Human => human.to_string(),
    };
    // A closed pipe (`qw ... | head`) is not an error worth reporting.
    let _ = if to_err {
        writeln!(std::io::stderr(), "{text}")
    } else {
        writeln!(std::io::stdout(), "{text}")
    };
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let b = Budgets {
        max_rounds: cli.max_rounds as usize,
        size_bound: cli.size_bound as usize,
        probe: cli.probe.map(|p| p as usize),
        carrier_bound: cli.carrier_bound as usize,
    };
    let result = match &cli.command {
        Command::Check { path } => cmd_check(path),
        Command::Elaborate { path } => cmd_elaborate(path, b.probe),
        Command::Eq {
            path,
            lhs,
            rhs,
            no_separate,
        } => cmd_eq(path, lhs, rhs, *no_separate, &b),
        Command::Enumerate { path } => cmd_enumerate(path, &b),
        Command::Sat { path, algebra } => cmd_sat(path, algebra, &b),
        Command::Rec {
            path,
            algebra,
            term,
            gens,
        } => cmd_rec(path, algebra, term, gens, &b),
        Command::Separate { path, lhs, rhs } => cmd_separate(path, lhs, rhs, &b),
        Command::Selftest { path, algebra } => selftest::run(path, algebra.as_deref(), &b),
    };
    match result {
        Ok(o) => {
            emit(cli.format, &o.value, &o.human, false);
            ExitCode::from(o.code)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Semantic(v, h)) => {
            emit(cli.format, &v, &h, cli.format == Format::Human);
            ExitCode::from(2)
        }
    }
}
