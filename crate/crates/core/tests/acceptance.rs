//! One pass/fail line per acceptance criterion. Exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use drinfeld::suites::{run_suite, Report, RunConfig};

struct Outcome {
    ok: bool,
    note: String,
}

fn suite(name: &str, cfg: RunConfig) -> (Report, Duration) {
    let t = Instant::now();
    let r = run_suite(name, &cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
    (r, t.elapsed())
}

fn summary(r: &Report) -> String {
    let n = r.checks.iter().filter(|c| c.passed()).count();
    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        format!("{} {}/{}", r.suite, n, r.checks.len())
    } else {
        format!("{} {}/{} failing {:?}", r.suite, n, r.checks.len(), failed)
    }
}

fn min_prec(r: &Report) -> Option<usize> {
    r.checks.iter().filter_map(|c| c.certified_prec).min()
}

fn max_prec(r: &Report) -> Option<usize> {
    r.checks.iter().filter_map(|c| c.certified_prec).max()
}

fn q(q: u32) -> RunConfig {
    RunConfig::q(q).expect("field")
}

fn combine(parts: Vec<(bool, String)>) -> Outcome {
    Outcome { ok: parts.iter().all(|p| p.0), note: parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join("; ") }
}

fn c1() -> Outcome {
    let mut parts = Vec::new();
    for qq in [3u32, 5] {
        let (r, dt) = suite("gen-expansions", q(qq));
        let bound = ((qq - 1) * (qq * qq - qq + 1) + 2) as usize;
        let ok = r.passed() && max_prec(&r) >= Some(bound) && dt < Duration::from_secs(10);
        parts.push((ok, format!("q={qq} {} prec {:?}≥{bound} {:.2?}", summary(&r), max_prec(&r), dt)));
    }
    combine(parts)
}

fn c2() -> Outcome {
    let mut parts = Vec::new();
    for s in ["eigen-h", "eigen-delta", "eigen-EP"] {
        let (r, _) = suite(s, q(3).with_prec(120));
        let ok = r.passed() && min_prec(&r) >= Some(120);
        parts.push((ok, format!("{} prec {:?}", summary(&r), min_prec(&r))));
    }
    combine(parts)
}

fn c3() -> Outcome {
    let mut parts = Vec::new();
    for qq in [3u32, 5] {
        let (r, dt) = suite("goss-toy", q(qq));
        let ok = r.passed() && r.checks.len() == (qq * qq + qq) as usize && dt < Duration::from_secs(30);
        parts.push((ok, format!("q={qq} {} {:.2?}", summary(&r), dt)));
    }
    combine(parts)
}

fn c4() -> Outcome {
    let (r, dt) = suite("dim1", q(3).with("P", "T").with("kmax", "60"));
    Outcome { ok: r.passed() && !r.checks.is_empty() && dt < Duration::from_secs(300), note: format!("{} {:.2?}", summary(&r), dt) }
}

fn single(name: &str, cfg: RunConfig) -> Outcome {
    let (r, _) = suite(name, cfg);
    Outcome { ok: r.passed() && !r.checks.is_empty(), note: summary(&r) }
}

fn c9() -> Outcome {
    let (r, _) = suite("commute", q(3).with_prec(80).with("count", "20"));
    let ok = r.passed() && min_prec(&r) >= Some(80) && r.checks.len() >= 20;
    let (w, _) = suite("involution", q(3).with("count", "20"));
    combine(vec![(ok, format!("{} prec {:?}", summary(&r), min_prec(&r))), (w.passed(), summary(&w))])
}

fn c12() -> Outcome {
    let parts = [3u32, 5]
        .into_iter()
        .map(|qq| {
            let (r, _) = suite("dimension-formula", q(qq).with("kmax", "100"));
            (r.passed(), format!("q={qq} {}", summary(&r)))
        })
        .collect();
    combine(parts)
}

fn c13() -> Outcome {
    let (a, _) = suite("newform-stability", q(3));
    let (b, _) = suite("simdiag", q(3));
    combine(vec![(a.passed(), summary(&a)), (b.passed(), summary(&b))])
}

type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("generator expansions, q in {3,5}", Box::new(c1)),
        ("eigen-identities to precision 120", Box::new(c2)),
        ("Goss toy-lattice identity, q in {3,5}", Box::new(c3)),
        ("dim <= 1 harness, P = T, k <= 60", Box::new(c4)),
        ("dim 2 harness and special values", Box::new(|| single("dim2", q(3).with("P", "T").with("kmax", "60")))),
        ("trace identities on the registry", Box::new(|| single("trace-identities", q(3)))),
        ("old and new counterexample", Box::new(|| single("counterexample", q(3).with("P", "T+1").with("Q", "T")))),
        ("T_P = P on span{Delta_T E_T, Delta_W E_T}", Box::new(|| single("exple2", q(3)))),
        ("commutation and involution scalar", Box::new(c9)),
        ("Frobenius commutation", Box::new(|| single("frobenius", q(3)))),
        ("low-coefficient oracle", Box::new(|| single("oracle-lowcoeff", q(3)))),
        ("dimension formula, k <= 100, q in {3,5}", Box::new(c12)),
        ("new-space stability and simultaneous diagonalization", Box::new(c13)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.ok {
            failed += 1;
        }
        println!("criterion {:>2} {} | {} | {}", i + 1, if o.ok { "PASS" } else { "FAIL" }, name, o.note);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
