//! End-to-end runs of the `wh` command dispatcher.

use std::fs;
use std::path::PathBuf;

use weakhilbert::cli::{dispatch, working_copy};
use weakhilbert::estimates::{basic_params, generate, Bundle, Kind};
use weakhilbert::{gen, Caps, RealVector, SigmaRegistry};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = dispatch(std::iter::once("wh").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wh-it-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn membership_query() {
    let (code, out, _) = call(&["schreier", "check", "--set", "2,3", "--n", "1"]);
    assert_eq!((code, out.as_str()), (0, "true\n"));
    let (code, out, _) = call(&["schreier", "enum", "--n", "0", "--max", "3"]);
    assert_eq!(code, 0);
    let sets: Vec<Vec<u32>> = serde_json::from_str(&out).unwrap();
    assert_eq!(sets, vec![vec![], vec![1], vec![2], vec![3]]);
}

#[test]
fn norm_json_and_csv() {
    let dir = scratch("norm");
    let params = dir.join("toy.json");
    fs::write(&params, r#"{"mode": "toy", "m": [2, 2, 2, 4, 4], "n": [1, 1, 1, 2, 2]}"#).unwrap();
    let x = dir.join("x.json");
    fs::write(&x, serde_json::to_string(&RealVector::new([(2, 1.0), (3, 1.0)])).unwrap()).unwrap();
    let (code, out, err) = call(&["norm", s(&x), "--params", s(&params)]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["lower"].as_f64().unwrap() >= 1.0);
    assert!(v["lower"].as_f64().unwrap() <= v["upper"].as_f64().unwrap());

    let xs = dir.join("xs.json");
    fs::write(&xs, r#"[{"coeffs": [[2, 1.0]]}, {"coeffs": [[3, 0.5], [4, -0.5]]}]"#).unwrap();
    let (code, out, _) = call(&["norm", s(&xs), "--params", s(&params), "--format", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "index,lower,upper,method,exact");
    assert_eq!(lines.len(), 3);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn registry_changes_go_to_a_copy_unless_committed() {
    let dir = scratch("reg");
    let reg = dir.join("reg.json");
    let (code, _, err) = call(&["gap-demo", "--registry", s(&reg)]);
    assert_eq!(code, 0, "{err}");
    assert!(!reg.exists());
    assert!(working_copy(&reg).exists());
    let (code, _, _) = call(&["gap-demo", "--registry", s(&reg), "--commit"]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&reg).unwrap();
    assert_eq!(text, fs::read_to_string(working_copy(&reg)).unwrap());
    // a committed run on the same registry reuses its codings
    let (code, _, _) = call(&["gap-demo", "--registry", s(&reg), "--commit"]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(&reg).unwrap(), text);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn certify_reports_validity_and_claims() {
    let dir = scratch("certify");
    let p = basic_params();
    let params = dir.join("p.json");
    fs::write(&params, serde_json::to_string(&p.config()).unwrap()).unwrap();
    let f = gen::even_functional(&mut gen::rng(5), &p, &[2, 3, 5], 2, &[2, 4]);
    let x = RealVector::new([(2, 1.0), (3, -0.5), (5, 0.25)]);
    let (fp, xp) = (dir.join("f.json"), dir.join("x.json"));
    fs::write(&fp, serde_json::to_string(&f).unwrap()).unwrap();
    fs::write(&xp, serde_json::to_string(&x).unwrap()).unwrap();
    let value = f.evaluate(&x).to_string();
    let (code, out, err) = call(&["certify", s(&fp), s(&xp), "--params", s(&params), "--claim", &value]);
    assert_eq!(code, 0, "{err}{out}");
    let (code, _, _) = call(&["certify", s(&fp), s(&xp), "--params", s(&params), "--claim", "17"]);
    assert_eq!(code, 1);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn estimate_check_and_fuzz_exit_codes() {
    let dir = scratch("estimate");
    let p = basic_params();
    let caps = Caps::default();
    let inst = generate(&mut gen::rng(8), Kind::Mfe, &p, &caps).unwrap();
    let bundle = Bundle {
        params: p.config(),
        registry: SigmaRegistry::new(),
        instance: inst,
        report: None,
    };
    let bp = dir.join("b.json");
    fs::write(&bp, serde_json::to_string(&bundle).unwrap()).unwrap();
    assert_eq!(call(&["estimate", "check", s(&bp)]).0, 0);

    let mut broken = bundle.clone();
    broken.instance.c = 1e-6;
    fs::write(&bp, serde_json::to_string(&broken).unwrap()).unwrap();
    let (code, _, err) = call(&["estimate", "check", s(&bp)]);
    assert_eq!(code, 2);
    assert!(err.contains("hypothesis"));

    let (code, out, _) = call(&["estimate", "fuzz", "--kind", "RISE", "--count", "10", "--seed", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"holds\": 10"));
    assert_eq!(call(&["estimate", "fuzz", "--kind", "P7_8"]).0, 2);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn counting_and_single_criterion() {
    let (code, out, _) = call(&["counting", "--size", "4"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"stated_holds\": true"));
    let (code, out, _) = call(&["verify-all", "--only", "9", "--seed", "7"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.starts_with("[PASS]  9"));
}
