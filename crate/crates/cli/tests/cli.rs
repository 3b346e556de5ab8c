use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn qw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qw")).args(args).output().expect("qw runs")
}

fn code(args: &[&str]) -> i32 {
    qw(args).status.code().expect("exit code")
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    serde_json::from_slice(&qw(&all).stdout).expect("json on stdout")
}

#[test]
fn check_exit_codes() {
    assert_eq!(code(&["check", &fixture("bag.qit")]), 0);
    assert_eq!(code(&["check", &fixture("omega_tree.qit")]), 0);
    let neg = qw(&["check", &fixture("negative_pi.qit")]);
    assert_eq!(neg.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&neg.stderr).contains("domain of a function type"));
    let cond = qw(&["check", &fixture("conditional.qit")]);
    assert_eq!(cond.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&cond.stderr).contains("conditional"));
    assert_eq!(code(&["check", &fixture("missing.qit")]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["enumerate", &fixture("bag.qit"), "--size-bound", "0"]), 1);
}

#[test]
fn check_reports_classification() {
    let v = json(&["check", &fixture("bag.qit")]);
    assert_eq!(v["classification"], serde_json::json!({"recursive": true, "conditional": false, "finitary": true}));
}

#[test]
fn elaborate_matches_hand_written_encodings() {
    for (qit, expected) in [("bag.qit", "bag.example1.json"), ("omega_tree.qit", "omega_tree.example2.json")] {
        let v = json(&["elaborate", &fixture(qit)]);
        let want: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(fixture(expected)).unwrap()).unwrap();
        assert_eq!(v["signature"], want["signature"], "{qit}");
        assert_eq!(v["equations"], want["equations"], "{qit}");
    }
}

#[test]
fn eq_outcomes() {
    let bag = fixture("bag.qit");
    assert_eq!(code(&["eq", &bag, "a::b::[]", "b::a::[]"]), 0);
    assert_eq!(code(&["eq", &bag, "cons(a, cons(b, nil))", "cons(b, cons(a, nil))"]), 0);
    let sep = json(&["eq", &bag, "a::[]", "b::[]"]);
    assert_eq!(sep["result"], "separated");
    assert_eq!(sep["algebra"]["carrier"].as_array().unwrap().len(), 2);
    assert_eq!(code(&["eq", &bag, "a::[]", "b::[]"]), 4);
    assert_eq!(code(&["eq", &bag, "a::[]", "b::[]", "--no-separate"]), 3);
    let ord = fixture("ordinal.example.json");
    assert_eq!(code(&["eq", &ord, "zero", "succ[zero]", "--no-separate"]), 3);
    assert_eq!(code(&["eq", &bag, "a::[]", "c::[]"]), 2);
}

#[test]
fn enumerate_sat_rec_separate() {
    let v = json(&["enumerate", &fixture("bag.qit")]);
    assert_eq!(v["count"], 6);
    assert_eq!(json(&["enumerate", &fixture("wreductions.qit")])["count"], 1);
    assert_eq!(code(&["sat", &fixture("bag.qit"), &fixture("height_algebra.json")]), 0);
    assert_eq!(code(&["sat", &fixture("bag.qit"), &fixture("corrupted_algebra.json")]), 2);
    let r = json(&["rec", &fixture("bag.qit"), &fixture("height_algebra.json"), "a::b::[]"]);
    assert_eq!(r["label"], "2");
    assert_eq!(code(&["rec", &fixture("bag.qit"), &fixture("corrupted_algebra.json"), "a::[]"]), 2);
    assert_eq!(code(&["separate", &fixture("bag.qit"), "a::b::[]", "b::a::[]"]), 3);
    assert_eq!(code(&["separate", &fixture("bag.qit"), "a::[]", "a::a::[]"]), 4);
}

#[test]
fn selftest_suites() {
    assert_eq!(code(&["selftest", &fixture("bag.qit")]), 0);
    let w = json(&["selftest", &fixture("wreductions.qit")]);
    assert_eq!(w["passed"], true);
    assert_eq!(w["report"]["enumeration"]["classes"], 1);
    let bad = qw(&["selftest", &fixture("bag.qit"), "--algebra", &fixture("corrupted_algebra.json")]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("Counterexample"));
}

#[test]
fn json_output_is_deterministic() {
    for args in [
        vec!["selftest", "BAG"],
        vec!["enumerate", "BAG"],
        vec!["eq", "BAG", "a::b::a::[]", "a::a::b::[]"],
        vec!["eq", "BAG", "a::[]", "b::[]"],
    ] {
        let bag = fixture("bag.qit");
        let args: Vec<&str> = args.iter().map(|a| if *a == "BAG" { bag.as_str() } else { a }).collect();
        let mut full = args.clone();
        full.extend(["--format", "json"]);
        assert_eq!(qw(&full).stdout, qw(&full).stdout, "{args:?}");
    }
}

#[test]
fn reads_elaborated_output_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tree.json");
    let out = qw(&["elaborate", &fixture("omega_tree.qit"), "--format", "json"]);
    std::fs::write(&path, out.stdout).unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(code(&["enumerate", p, "--size-bound", "2"]), 0);
    assert_eq!(
        code(&["eq", p, "node(a){0: leaf, 1: node(b){_: leaf}, _: leaf}", "node(a){0: node(b){_: leaf}, _: leaf}"]),
        0
    );
}
