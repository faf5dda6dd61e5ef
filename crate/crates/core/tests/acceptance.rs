//! Acceptance criteria, one PASS/FAIL line each.

use muskat::verify::{suites, CheckRow, VerifyOptions};

/// Criteria that are expected to fail; see the README.
const KNOWN_FAILURES: &[usize] = &[6];

fn run(suite: &str) -> Vec<CheckRow> {
    suites().get(suite).expect("registered suite").run(&VerifyOptions::default())
}

fn verdict(id: usize, title: &str, rows: &[CheckRow]) -> bool {
    let pass = !rows.is_empty() && rows.iter().all(|r| r.pass);
    println!("criterion {id:2} {}: {title}", if pass { "PASS" } else { "FAIL" });
    for r in rows {
        println!(
            "    [{}] {} expected={:e} measured={:e} tolerance={:e}",
            if r.pass { "ok" } else { "x" },
            r.check,
            r.expected,
            r.measured,
            r.tolerance
        );
    }
    pass
}

fn main() {
    let dispersion = run("dispersion");
    let (one, two): (Vec<CheckRow>, Vec<CheckRow>) =
        dispersion.into_iter().partition(|r| r.check.starts_with("one_phase"));
    let criteria: Vec<(usize, &str, Vec<CheckRow>)> = vec![
        (1, "linear dispersion, one phase", one),
        (2, "linear dispersion, two phase and unstable regime", two),
        (3, "DN fixed point vs finite-difference oracle, flat strip symbol", run("dn")),
        (4, "Gateaux derivative of E vs central differences", run("gateaux")),
        (5, "paralinearization remainder order", run("paralinearization")),
        (6, "agreement of the two forms of E and refinement", run("elastic_forms")),
        (7, "scaling invariance defect and refinement", run("scaling")),
        (8, "two-phase pressure fixed point vs dense solve", run("two_phase")),
        (9, "mean conservation and smoothing", run("conservation")),
        (10, "Lipschitz stability ratio", run("stability")),
        (11, "Picard vs time stepping, honest divergence", run("picard")),
        (12, "ETDRK2 order and exact linear flow", run("temporal_order")),
    ];
    let failures: Vec<usize> = criteria
        .iter()
        .filter(|(id, title, rows)| !verdict(*id, title, rows))
        .map(|(id, _, _)| *id)
        .collect();
    assert_eq!(failures, KNOWN_FAILURES, "unexpected set of failing criteria");
}
