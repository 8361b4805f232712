use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> String {
    format!("{}/../core/corpus/{name}.pl", env!("CARGO_MANIFEST_DIR"))
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn metaterm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metaterm"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Runs with `--json` and returns the exit code and the parsed report.
fn with_report(name: &str, args: &[&str]) -> (i32, Value) {
    let path = tmp(&format!("{name}.json"));
    let _ = std::fs::remove_file(&path);
    let mut all = args.to_vec();
    let p = path.to_str().unwrap();
    all.extend(["--json", p]);
    let o = metaterm(&all);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for key in ["command", "inputs", "budgets", "result", "truncated"] {
        assert!(report.get(key).is_some(), "{name}: missing {key}");
    }
    assert!(report["budgets"]["max_nodes"].is_u64() && report["budgets"]["max_depth"].is_u64());
    assert!(report["truncated"].is_boolean());
    (o.status.code().unwrap(), report)
}

#[test]
fn m3_improvement_exits_4() {
    let f = corpus("ex32");
    let (code, r) = with_report("compare", &["compare", &f, "--interp", "m3", "-q", "p"]);
    assert_eq!(code, 4);
    assert_eq!(r["command"], "compare");
    assert_eq!(r["result"]["object_status"]["status"], "loop_detected");
    assert_eq!(r["result"]["meta_status"]["status"], "terminates");
    assert_eq!(r["result"]["verdict"]["verdict"], "counterexample");
    assert_eq!(r["result"]["verdict"]["kind"], "improvement");
    assert_eq!(
        r["result"]["answers"]["meta_answers"]
            .as_array()
            .unwrap()
            .len(),
        0
    );
}

#[test]
fn analyze_finds_mapping() {
    let f = corpus("ex12");
    let (code, r) = with_report(
        "analyze",
        &["analyze", &f, "-q", "l(0)", "--strategy", "linear:3"],
    );
    assert_eq!(code, 0);
    assert_eq!(r["result"]["outcome"]["search"]["outcome"], "found");
}

#[test]
fn analyze_with_seed_list_and_given_mapping() {
    let f = corpus("ex12");
    let mapping = tmp("bad_mapping.json");
    // a norm that ignores every argument cannot decrease
    std::fs::write(
        &mapping,
        r#"{"kind": "linear", "predicates": {}, "norm": {"functors": {"f/1": {"c": 0, "a": [0]}}}}"#,
    )
    .unwrap();
    let (code, r) = with_report(
        "given",
        &[
            "analyze",
            &f,
            "-q",
            "l(0); l(f(0))",
            "-q",
            "l(f(f(0)))",
            "--given-mapping",
            mapping.to_str().unwrap(),
        ],
    );
    assert_eq!(code, 4);
    assert_eq!(r["result"]["outcome"]["check"]["verdict"], "counterexample");
    assert_eq!(r["inputs"]["seeds"].as_array().unwrap().len(), 2);
}

#[test]
fn encode_ce_prints_three_facts() {
    let o = metaterm(&["encode", &corpus("ex31"), "--kind", "ce"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3);
    assert!(out
        .lines()
        .all(|l| l.starts_with("clause(") && l.ends_with(')') || l.ends_with(").")));
    assert!(out.contains("clause(q(b), true)"));
}

#[test]
fn encode_kinds() {
    let o = metaterm(&["encode", &corpus("ex31"), "--kind", "ced:2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
    let (code, r) = with_report(
        "ground",
        &["encode", &corpus("permute"), "--kind", "ground"],
    );
    assert_eq!(code, 0);
    assert_eq!(r["result"]["symbols"]["predicates"][0], "permute/2");
    assert_eq!(
        metaterm(&["encode", &corpus("ex31"), "--kind", "xyz"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn run_and_tree() {
    let (code, r) = with_report("run", &["run", &corpus("ex12"), "-q", "l(0)", "-q", "p(X)"]);
    assert_eq!(code, 0);
    let res = r["result"].as_array().unwrap();
    assert_eq!(res[0]["status"]["status"], "terminates");
    assert_eq!(res[1]["status"]["status"], "loop_detected");
    assert_eq!(r["truncated"], true);

    let o = metaterm(&["tree", &corpus("ex31"), "-q", "p(X)"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let first = out.lines().next().unwrap();
    assert!(first.starts_with("0 "), "{first}");
    assert!(
        out.lines().any(|l| l.trim_start().starts_with("2 success")),
        "{out}"
    );
}

#[test]
fn check_classify_semantics_meta() {
    let o = metaterm(&["check", &corpus("normal")]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("normal program"));

    let (code, r) = with_report("classify", &["classify", "--interp", "proof_tree"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["class"], "restricted");
    assert_eq!(r["result"]["restricted"]["verdict"], "yes");

    let o = metaterm(&[
        "classify",
        &format!("{}/../core/interpreters/m3.pl", env!("CARGO_MANIFEST_DIR")),
    ]);
    assert!(stdout(&o).starts_with("m3: other"), "{}", stdout(&o));

    let o = metaterm(&["semantics", &corpus("ex31"), "--powers", "3"]);
    assert!(stdout(&o).contains("stable from power 2"));
    assert_eq!(
        metaterm(&["semantics", &corpus("normal")]).status.code(),
        Some(3)
    );

    let (_, r) = with_report(
        "meta",
        &[
            "meta",
            &corpus("ex31"),
            "--interp",
            "proof_tree",
            "-q",
            "p(X)",
            "--extra",
            "true",
        ],
    );
    assert_eq!(r["result"]["restricted_query"], false);
    let (_, r) = with_report(
        "meta_fresh",
        &[
            "meta",
            &corpus("ex31"),
            "--interp",
            "proof_tree",
            "-q",
            "p(X)",
        ],
    );
    assert_eq!(r["result"]["restricted_query"], true);
    assert_eq!(r["result"]["answers"][0], "p(b)");
}

#[test]
fn exit_codes() {
    let bad = tmp("cut.pl");
    std::fs::write(&bad, "p :- !.\n").unwrap();
    let o = metaterm(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1:6"));
    assert_eq!(
        metaterm(&["run", &corpus("ex31"), "-q", "p(("])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(metaterm(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(metaterm(&["run", &corpus("ex31")]).status.code(), Some(1));
    assert_eq!(metaterm(&["--help"]).status.code(), Some(0));
    assert_eq!(
        metaterm(&["compare", &corpus("ex31"), "--interp", "nope", "-q", "p(X)"])
            .status
            .code(),
        Some(1)
    );
    // the object program may not define solve/1 itself
    let clash = tmp("clash.pl");
    std::fs::write(&clash, "solve(a).\n").unwrap();
    let o = metaterm(&[
        "compare",
        clash.to_str().unwrap(),
        "--interp",
        "m0",
        "-q",
        "solve(a)",
    ]);
    assert_eq!(o.status.code(), Some(3));
}
