use std::process::Command;

use serde_json::Value;

fn wreath(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wreath")).args(args).current_dir(env!("CARGO_MANIFEST_DIR")).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn pi1_case_a_fixture() {
    let (code, out, _) = wreath(&["pi1", "fixtures/case_a_b3.json"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("Wr(Wr(Z, 2) x Z x Z x Z, 3)\ncase: A\nin class G: true"), "{out}");
    let (_, latex, _) = wreath(&["pi1", "--format", "latex", "fixtures/case_a_b3.json"]);
    assert!(latex.contains("\\wr_{3}"), "{latex}");
}

#[test]
fn pi1_json_record_is_stable() {
    let (code, out, _) = wreath(&["--format", "json", "pi1", "fixtures/case_c_b2.json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["case", "counts", "expression", "in_class_G", "latex"]);
    assert_eq!(v["counts"]["m"], 1);
}

#[test]
fn parity_failure_exits_two() {
    let (code, out, _) = wreath(&["pi1", "fixtures/parity_even_without_t2.json"]);
    assert_eq!(code, 2);
    assert!(out.contains("b odd when e = 0"), "{out}");
    let (code, _, _) = wreath(&["validate", "fixtures/parity_even_without_t2.json"]);
    assert_eq!(code, 2);
}

#[test]
fn empty_band_is_degenerate() {
    let (code, out, _) = wreath(&["pi1", "fixtures/empty_b1.json"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("Z x Z x Z\n"), "{out}");
}

#[test]
fn surface_aggregate() {
    let (code, out, _) = wreath(&["--format", "json", "pi1", "fixtures/surface_genus3.json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["case"], "aggregate");
    assert_eq!(v["a_factor"], "Wr(Z, 3) x Z");
    assert_eq!(v["pieces"].as_array().unwrap().len(), 2);
}

#[test]
fn cellular_files() {
    assert_eq!(wreath(&["validate", "fixtures/rp2_identity.json"]).0, 0);
    let (code, out, _) = wreath(&["validate", "fixtures/rp2_tampered.json"]);
    assert_eq!(code, 2);
    assert!(out.contains("conditions agree: false"), "{out}");
}

#[test]
fn verify_examples() {
    let (code, out, _) = wreath(&["verify", "twisted", "--g", "Z2", "--h", "Z3", "--gamma", "id", "--m", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("24 elements exhausted"), "{out}");
    assert_eq!(wreath(&["verify", "mul-oracle", "--samples", "1000", "--seed", "7"]).0, 0);
    assert_eq!(wreath(&["verify", "3x3", "--b", "Z12", "--a", "3Z12", "--l", "2Z12"]).0, 0);
    assert_eq!(wreath(&["verify", "wreath", "--g", "Z2", "--m", "2", "--depth", "2"]).0, 0);
}

#[test]
fn verify_errors() {
    assert_eq!(wreath(&["verify", "3x3", "--b", "Z12", "--a", "3Z10", "--l", "2Z12"]).0, 1);
    assert_eq!(wreath(&["verify", "wreath", "--g", "Z3", "--m", "4", "--cap", "100"]).0, 1);
    assert_eq!(wreath(&["verify", "twisted", "--g", "Z2", "--h", "Z", "--m", "1"]).0, 1);
}

#[test]
fn poly_examples() {
    assert_eq!(wreath(&["poly", "milnor", "x*y"]).1, "1\n");
    assert_eq!(wreath(&["poly", "milnor", "x^3 - 3*x*y^2"]).1, "4\n");
    assert_eq!(wreath(&["poly", "squarefree", "x^2*y"]).1, "false\n");
    let (code, out, _) = wreath(&["poly", "certificate", "x", "x^3 - 3*x*y^2"]);
    assert_eq!(code, 0);
    assert!(out.contains("m = 3") && out.ends_with("verified\n"), "{out}");
    assert_eq!(wreath(&["poly", "milnor", "x^2*y"]).0, 2);
    assert_eq!(wreath(&["poly", "milnor", "x^^2"]).0, 1);
}

#[test]
fn group_commands() {
    assert_eq!(wreath(&["group", "order", "WrM(Z2, 2)"]).1, "8\n");
    assert_eq!(wreath(&["group", "order", "Wr(Z2, 2)"]).1, "infinite\n");
    let (_, prod, _) = wreath(&["group", "mul", "Wr(Z2, 2)", "[[1,0],3]", "[[1,1],-1]"]);
    let (_, inv, _) = wreath(&["group", "inv", "Wr(Z2, 2)", prod.trim()]);
    let (_, back, _) = wreath(&["group", "mul", "Wr(Z2, 2)", prod.trim(), inv.trim()]);
    assert_eq!(back, "[[0,0],0]\n");
    let (code, out, _) = wreath(&["--depth", "2", "group", "quotient", "WrM(Z2, 2)"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 2);
    assert_eq!(wreath(&["group", "mul", "Z2", "5", "1"]).0, 1);
}

#[test]
fn usage_and_io_errors() {
    assert_eq!(wreath(&["frobnicate"]).0, 1);
    assert_eq!(wreath(&["pi1", "fixtures/missing.json"]).0, 1);
    assert_eq!(wreath(&["--depth", "0", "group", "order", "Z"]).0, 1);
    assert_eq!(wreath(&["--help"]).0, 0);
}

#[test]
fn seeded_runs_are_deterministic() {
    let a = wreath(&["--format", "json", "verify", "mul-oracle", "--samples", "50", "--seed", "3"]);
    let b = wreath(&["--format", "json", "verify", "mul-oracle", "--samples", "50", "--seed", "3"]);
    assert_eq!(a, b);
}
