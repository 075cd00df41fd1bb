//! Acceptance criteria, one pass/fail line each.

use std::collections::BTreeMap;
use std::time::Instant;

use grushin_verify::report::VerificationReport;
use grushin_verify::scenarios::{run_scenario, special_function_suite, ScenarioId, ScenarioSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(spec: &ScenarioSpec) -> VerificationReport {
    run_scenario(spec).unwrap_or_else(|e| panic!("{} failed to run: {e}", spec.scenario)).0
}

fn summarize(reports: &[&VerificationReport]) -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for r in reports {
        for c in &r.checks {
            if c.primary {
                pass &= c.pass;
            }
            let tag = match (c.pass, c.primary) {
                (true, true) => "ok",
                (false, true) => "FAILED",
                (true, false) => "ok, supplementary",
                (false, false) => "failed, supplementary",
            };
            lines.push(format!("    [{tag}] (d1 = {}, d2 = {}) {}", r.d1, r.d2, c.describe()));
        }
    }
    Outcome { pass, detail: lines.join("\n") }
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut defaults: BTreeMap<ScenarioId, String> = BTreeMap::new();
    let mut keep = |r: &VerificationReport, id: ScenarioId| {
        defaults.insert(id, r.to_json().expect("serializable"));
    };

    // 1
    let t = Instant::now();
    let suite = special_function_suite(50).expect("special functions");
    let pass = suite.hermite_orthonormality < 1e-10 && suite.laguerre_normalization < 1e-8;
    let detail = format!(
        "    max |<h_j,h_k> - delta_jk| = {:.3e} (< 1e-10); max |int L^2 - 1| = {:.3e} (< 1e-8)",
        suite.hermite_orthonormality, suite.laguerre_normalization
    );
    results.push((1, "special-function suite", Outcome { pass, detail }, t.elapsed().as_secs_f64()));

    // 2
    let t = Instant::now();
    let env = run(&ScenarioSpec::new(ScenarioId::LemmaEnvelope));
    keep(&env, ScenarioId::LemmaEnvelope);
    results.push((2, "Laguerre envelope constants stable within a factor 2 at gamma = 1/4", summarize(&[&env]), t.elapsed().as_secs_f64()));

    // 3
    let t = Instant::now();
    let l1 = run(&ScenarioSpec::new(ScenarioId::LemmaL1));
    keep(&l1, ScenarioId::LemmaL1);
    results.push((3, "uniform Laguerre L1 integral and k = 0 closed forms", summarize(&[&l1]), t.elapsed().as_secs_f64()));

    // 4
    let t = Instant::now();
    let w1 = run(&ScenarioSpec::new(ScenarioId::WeylIdentity));
    keep(&w1, ScenarioId::WeylIdentity);
    let w2 = run(&ScenarioSpec::new(ScenarioId::WeylIdentity).with(|p| p.d1 = Some(2)));
    results.push((4, "Weyl-transform route equals the eigensum projection kernel", summarize(&[&w1, &w2]), t.elapsed().as_secs_f64()));

    // 5
    let t = Instant::now();
    let p1 = run(&ScenarioSpec::new(ScenarioId::ProjectionEstimate));
    keep(&p1, ScenarioId::ProjectionEstimate);
    let p2 = run(&ScenarioSpec::new(ScenarioId::ProjectionEstimate).with(|p| p.d1 = Some(2)));
    results.push((5, "projection kernel covariance, sup growth and q = 2 contraction", summarize(&[&p1, &p2]), t.elapsed().as_secs_f64()));

    // 6
    let t = Instant::now();
    let syn = run(&ScenarioSpec::new(ScenarioId::Synthesis));
    keep(&syn, ScenarioId::Synthesis);
    results.push((6, "projection algebra and eigenrelations for H(a) and L", summarize(&[&syn]), t.elapsed().as_secs_f64()));

    // 7
    let t = Instant::now();
    let s_default = run(&ScenarioSpec::new(ScenarioId::RestrictionScaling));
    keep(&s_default, ScenarioId::RestrictionScaling);
    let s11 = run(&ScenarioSpec::new(ScenarioId::RestrictionScaling).with(|p| {
        p.d1 = Some(1);
        p.d2 = Some(1);
        p.pqr = Some([1.0, 2.0, 2.0]);
    }));
    let s23 = run(&ScenarioSpec::new(ScenarioId::RestrictionScaling).with(|p| {
        p.d1 = Some(2);
        p.d2 = Some(3);
        p.pqr = Some([4.0 / 3.0, 2.0, 2.0]);
    }));
    let s13inf = run(&ScenarioSpec::new(ScenarioId::RestrictionScaling).with(|p| {
        p.d1 = Some(1);
        p.d2 = Some(3);
        p.pqr = Some([1.0, 1.0, f64::INFINITY]);
    }));
    results.push((7, "mu-scaling slopes of the restriction operator and the generic band", summarize(&[&s11, &s_default, &s23, &s13inf]), t.elapsed().as_secs_f64()));

    // 8
    let t = Instant::now();
    let k11 = run(&ScenarioSpec::new(ScenarioId::Knapp));
    keep(&k11, ScenarioId::Knapp);
    let k12 = run(&ScenarioSpec::new(ScenarioId::Knapp).with(|p| p.d2 = Some(2)));
    results.push((8, "Knapp field routes and closed form of the restriction at mu = 1", summarize(&[&k11, &k12]), t.elapsed().as_secs_f64()));

    // 9
    let t = Instant::now();
    let mut same = Vec::new();
    for (id, first) in &defaults {
        let again = run(&ScenarioSpec::new(*id)).to_json().expect("serializable");
        same.push((*id, again == *first));
    }
    let pass = same.len() == ScenarioId::ALL.len() && same.iter().all(|(_, s)| *s);
    let detail = same
        .iter()
        .map(|(id, s)| format!("    [{}] {id} default report byte-identical on rerun", if *s { "ok" } else { "FAILED" }))
        .collect::<Vec<_>>()
        .join("\n");
    results.push((9, "determinism of default reports", Outcome { pass, detail }, t.elapsed().as_secs_f64()));

    println!();
    for (n, name, o, secs) in &results {
        println!("criterion {n}: {} ({name}; {secs:.1} s)", if o.pass { "PASS" } else { "FAIL" });
        println!("{}", o.detail);
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("\nacceptance: {} of {} criteria pass in {:.1} s", results.len() - failed.len(), results.len(), started.elapsed().as_secs_f64());
    if !failed.is_empty() {
        println!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
