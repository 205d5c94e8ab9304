use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tensera_core::transform::identity_derivation;
use tensera_core::{parse, Sequent, ShallowDerivation, ShallowRule};

fn tensera(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tensera"))
        .args(args)
        .output()
        .expect("run tensera")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn derivation(name: &str) -> String {
    format!("{}/../core/tests/data/derivations/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn prove_axiom_one_emits_checkable_json() {
    let o = tensera(&["prove", "--logic", "kt", "a -> []<*>a"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rule"], "or");
    let p = scratch("axiom1.json", &stdout(&o));
    let c = tensera(&["check", "--calc", "dkt", p.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0), "{}", String::from_utf8_lossy(&c.stderr));
}

#[test]
fn prove_exit_codes() {
    assert_eq!(tensera(&["prove", "[]a -> a"]).status.code(), Some(1));
    assert_eq!(
        tensera(&["prove", "--logic", "kts4", "[]a -> a"]).status.code(),
        Some(0)
    );
    assert_eq!(
        tensera(&["prove", "--logic", "kts4", "--depth", "2", "<>[]a"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        tensera(&["prove", "--logic", "path:ww->w", "<><>a -> <>a"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(tensera(&["prove", "--sequent", "a, o{~a}, <>a"]).status.code(), Some(0));
}

#[test]
fn dot_output() {
    let o = tensera(&["prove", "--emit", "dot", "a | ~a"]);
    assert!(stdout(&o).starts_with("digraph proof {"));
    let o = tensera(&["prove", "--emit", "dot", "[]a -> a"]);
    assert!(stdout(&o).starts_with("digraph sequent {"));
}

#[test]
fn grammar_queries() {
    let o = tensera(&["grammar", "--axioms", "bw->w", "--query", "bw"]);
    assert_eq!(stdout(&o).trim(), "accepted");
    let o = tensera(&["grammar", "--axioms", "ww->w", "--query", "bw"]);
    assert_eq!(stdout(&o).trim(), "rejected");
    let o = tensera(&["grammar", "--axioms", "bw->w", "--applicable", "b{o{}},r,0.0,w"]);
    assert_eq!(stdout(&o).trim(), "applicable via \"bw\"");
}

#[test]
fn corrupted_proof_is_rejected() {
    let o = tensera(&["prove", "a | ~a"]);
    let bad = stdout(&o).replace("\"id\"", "\"and\"");
    let p = scratch("corrupt.json", &bad);
    let c = tensera(&["check", "--calc", "dkt", p.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(70));
    assert!(String::from_utf8_lossy(&c.stderr).contains("validation failed"));
}

#[test]
fn transcriptions_check_in_their_systems() {
    let ok = |args: &[&str]| tensera(args).status.code();
    assert_eq!(ok(&["check", "--calc", "skt", &derivation("axiom1.json")]), Some(0));
    assert_eq!(
        ok(&[
            "check",
            "--calc",
            "skt",
            "--system",
            "sl0120",
            &derivation("psl_from_sl.json")
        ]),
        Some(0)
    );
    assert_eq!(
        ok(&[
            "check",
            "--calc",
            "skt",
            "--system",
            "U",
            "--cut",
            "--open",
            &derivation("u2.json")
        ]),
        Some(0)
    );
    // Without the structural rule the step is rejected.
    assert_eq!(
        ok(&["check", "--calc", "skt", &derivation("psl_from_sl.json")]),
        Some(70)
    );
}

#[test]
fn translate_round_trip() {
    let o = tensera(&["prove", "~a | [*]<>a"]);
    let d = scratch("deep.json", &stdout(&o));
    let s = tensera(&["translate", "--dir", "d2s", d.to_str().unwrap()]);
    assert_eq!(s.status.code(), Some(0));
    let sp = scratch("shallow.json", &stdout(&s));
    assert_eq!(
        tensera(&["check", "--calc", "skt", sp.to_str().unwrap()]).status.code(),
        Some(0)
    );
    let back = tensera(&["translate", "--dir", "s2d", sp.to_str().unwrap()]);
    assert_eq!(back.status.code(), Some(0));
}

#[test]
fn cutelim_removes_cuts() {
    let a = parse("[]a & <*>b").unwrap();
    let cut = ShallowDerivation::new(
        Sequent::from_formulas([a.clone(), a.negate()]),
        ShallowRule::Cut {
            formula: a.negate(),
            left_formulas: vec![0],
            left_children: vec![],
        },
        vec![identity_derivation(&a), identity_derivation(&a.negate())],
    );
    let p = scratch("cut.json", &cut.to_json().to_string());
    let o = tensera(&["cutelim", "--trace", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(!v["trace"].as_array().unwrap().is_empty());
    assert!(!v["proof"].to_string().contains("\"cut\""));
}

#[test]
fn countermodels() {
    let o = tensera(&["countermodel", "--bound", "3", "[]a -> a"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["worlds"], 1);
    let o = tensera(&["countermodel", "--bound", "3", "--frames", "refl+trans", "<><>a -> <>a"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_is_deterministic_tsv() {
    let corpus = scratch("corpus.txt", "# sample\n~a | []<*>a\n\n[]a -> a\n");
    let run = || {
        let o = tensera(&["bench", "--corpus", corpus.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        stdout(&o)
            .lines()
            .map(|l| l.rsplit_once('\t').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    let a = run();
    assert_eq!(a.len(), 3);
    assert_eq!(a[1], "~a | []<*>a\tkt\tproved\t4");
    assert_eq!(a, run());
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(tensera(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(tensera(&["prove", "--logic", "kt45", "a"]).status.code(), Some(64));
    assert_eq!(tensera(&["grammar", "--axioms", "ww->w"]).status.code(), Some(64));
}
