use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drinfeld")).args(args).output().expect("spawn")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

#[test]
fn verify_passes_and_is_deterministic() {
    let args = ["verify", "counterexample", "--q", "3", "--no-timing"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["suite"], "counterexample");
    assert_eq!(v["elapsed_ms"], 0);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["verdict"] == "pass"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["verify", "nonexistent-suite"]), 2);
    assert_eq!(code(&["expand", "--form", "h", "--q", "6"]), 2);
    assert_eq!(code(&["hecke", "--form", "h", "--P", "T^2+2", "--q", "3"]), 2);
    assert_eq!(code(&["expand"]), 2);
    assert_eq!(code(&["expand", "--form", "h", "--q", "3", "--p", "3"]), 2);
    assert_eq!(code(&["suites"]), 0);
}

#[test]
fn expand_json_and_out_file() {
    let dir = std::env::temp_dir().join(format!("drinfeld-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("h.json");
    let p = path.to_str().unwrap();
    assert_eq!(code(&["expand", "--form", "h", "--q", "3", "--prec", "12", "--out", p]), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["coefficients"]["1"], "2");
    assert_eq!(v["coefficients"]["7"], "T^3+2*T");
    assert_eq!(v["weight"], 4);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn text_formats() {
    let o = run(&["goss", "--lattice", "toy", "--kmax", "4", "--q", "3", "--format", "text"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().last(), Some("G_4 = X^4 + (2)X^2"));
    let o = run(&["carlitz", "--a", "T", "--q", "3", "--format", "text"]);
    assert!(o.status.success());
    let o = run(&["matrix", "--P", "T", "--k", "8", "--l", "0", "--q", "3"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.get("char_poly").is_some());
}
