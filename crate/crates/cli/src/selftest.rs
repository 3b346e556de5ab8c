//! The initiality suites run against one instance.

use std::collections::BTreeMap;
use std::path::Path;

use qw_core::encodings::{height_algebra, terminal_algebra};
use qw_core::engine::replay::replay;
use qw_core::engine::{ClassId, QwEquReport, QwState};
use qw_core::equations::DEFAULT_ENV_BUDGET;
use qw_core::initiality::{
    check_qw_comp, check_rec_hom, check_representative_independence, check_uniq, constant_singleton,
    homomorphisms_on_fragment, qw_rec_all, recursion_family, verify_coherence, CompReport, InitError, RecHomReport,
    RecTarget, UniqReport,
};
use qw_core::algebra::FiniteAlgebra;
use serde_json::{json, Value};

use crate::{load, new_state, semantic, Budgets, Failure, Outcome};

const CASE_BUDGET: usize = 1_000_000;
const NODE_BUDGET: usize = 5_000;
const HEIGHT_CAP: usize = 3;

/// A check result: passed, failed with a witness, or skipped over budget.
fn verdict(pass: bool, detail: Value) -> Value {
    json!({ "status": if pass { "pass" } else { "fail" }, "detail": detail })
}

fn skipped(reason: impl std::fmt::Display) -> Value {
    json!({ "status": "skipped", "detail": reason.to_string() })
}

fn or_skip(r: Result<Value, InitError>) -> Result<Value, Failure> {
    match r {
        Ok(v) => Ok(v),
        Err(e @ InitError::BudgetExceeded { .. }) => Ok(skipped(e)),
        Err(e) => Err(semantic(e)),
    }
}

fn algebra_suite(
    state: &mut QwState,
    target: &RecTarget,
    fragment: &[ClassId],
) -> Result<BTreeMap<&'static str, Value>, Failure> {
    let mut out = BTreeMap::new();
    out.insert(
        "rec_hom",
        or_skip(check_rec_hom(state, target, fragment, NODE_BUDGET).map(|r| {
            let ok = matches!(r, RecHomReport::Ok { .. });
            verdict(ok, json!(r))
        }))?,
    );
    if !target.report().is_satisfied() {
        return Ok(out);
    }
    out.insert(
        "independence",
        or_skip(check_representative_independence(state, target).map(|r| verdict(r.is_none(), json!(r))))?,
    );
    let recs = qw_rec_all(state, target, fragment).map_err(semantic)?;
    let uniq = match homomorphisms_on_fragment(state, target, fragment, CASE_BUDGET) {
        Ok(homs) => Ok(verdict(homs == vec![recs.clone()], json!({ "homomorphisms": homs.len() }))),
        Err(InitError::BudgetExceeded { .. }) => check_uniq(state, target, fragment, &recs, CASE_BUDGET)
            .map(|r| verdict(r == UniqReport::Ok, json!(r))),
        Err(e) => Err(e),
    };
    out.insert("uniqueness", or_skip(uniq)?);
    let comp = verify_coherence(state, recursion_family(target), fragment, CASE_BUDGET)
        .and_then(|dep| check_qw_comp(state, &dep, fragment, NODE_BUDGET))
        .map(|r| verdict(matches!(r, CompReport::Ok { .. }), json!(r)));
    out.insert("qw_comp", or_skip(comp)?);
    Ok(out)
}

fn passed(v: &Value) -> bool {
    match v {
        Value::Object(m) if m.contains_key("status") => m["status"] != "fail",
        Value::Object(m) => m.values().all(passed),
        Value::Array(a) => a.iter().all(passed),
        _ => true,
    }
}

pub fn run(path: &Path, extra: Option<&Path>, b: &Budgets) -> Result<Outcome, Failure> {
    let inst = load(path, b.probe)?;
    let mut state = new_state(&inst, b)?;
    let e = state.enumerate(b.size_bound).map_err(semantic)?;
    let fragment: Vec<ClassId> = e.classes.iter().map(|(c, _)| *c).collect();
    let mut report = BTreeMap::new();
    report.insert(
        "enumeration",
        json!({ "size_bound": b.size_bound, "classes": fragment.len(), "saturation": e.saturation }),
    );
    let qwequ = match state.check_qwequ(&fragment, CASE_BUDGET) {
        Ok(r) => verdict(matches!(r, QwEquReport::Ok { .. }), json!(r)),
        Err(e) => skipped(e),
    };
    report.insert("qwequ", qwequ);
    let rp = replay(&state);
    report.insert("replay", verdict(rp.is_valid(), json!(rp)));

    let probe = inst.equations.probe;
    let gens: BTreeMap<String, usize> = inst.generators.iter().map(|g| (g.clone(), 0)).collect();
    let mut algebras: Vec<(String, FiniteAlgebra, bool)> = vec![
        ("terminal".into(), terminal_algebra(&inst.signature, probe).map_err(semantic)?, false),
        ("height".into(), height_algebra(&inst.signature, HEIGHT_CAP, probe).map_err(semantic)?, false),
    ];
    if let Some(p) = extra {
        let alg: FiniteAlgebra = serde_json::from_str(
            &std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        )
        .map_err(semantic)?;
        algebras.push((p.display().to_string(), alg, true));
    }
    let mut suites = BTreeMap::new();
    for (name, alg, required) in algebras {
        let target = RecTarget::unchecked(&state, alg, gens.clone(), DEFAULT_ENV_BUDGET).map_err(semantic)?;
        let sat = target.report().is_satisfied();
        let mut suite = BTreeMap::new();
        if !sat && !required {
            suite.insert("model", skipped("does not satisfy the equations"));
        } else {
            suite.insert("model", verdict(sat, json!(target.report())));
            suite.extend(algebra_suite(&mut state, &target, &fragment)?);
        }
        suites.insert(name, json!(suite));
    }
    report.insert("algebras", json!(suites));
    let mut point = constant_singleton();
    point.generators = inst.generators.iter().map(|g| (g.clone(), ())).collect();
    let singleton = verify_coherence(&mut state, point, &fragment, CASE_BUDGET)
        .and_then(|dep| check_qw_comp(&mut state, &dep, &fragment, NODE_BUDGET))
        .map(|r| verdict(matches!(r, CompReport::Ok { .. }), json!(r)));
    report.insert("singleton", or_skip(singleton)?);

    let value = json!(report);
    let ok = passed(&value);
    let mut human = format!(
        "{} {} up to size {}\n",
        fragment.len(),
        if fragment.len() == 1 { "class" } else { "classes" },
        b.size_bound
    );
    human.push_str(&summarize("", &value));
    human.push_str(if ok { "all checks passed" } else { "some checks FAILED" });
    Ok(Outcome {
        code: if ok { 0 } else { 2 },
        value: json!({ "passed": ok, "report": value }),
        human,
    })
}

fn summarize(prefix: &str, v: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(m) = v {
        if let Some(Value::String(s)) = m.get("status") {
            out.push_str(&format!("{prefix}: {s}"));
            if s == "fail" {
                out.push_str(&format!(" {}", m["detail"]));
            }
            out.push('\n');
            return out;
        }
        for (k, x) in m {
            let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            out.push_str(&summarize(&p, x));
        }
    }
    out
}
