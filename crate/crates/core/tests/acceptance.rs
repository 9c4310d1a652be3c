//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p unduloid-core --test acceptance -- --nocapture` to
//! see the lines. Every criterion runs on the default configuration (the full
//! necksize sweep at 400×100, three periods); the mesh and hemisphere checks
//! use their own pinned grids.

use std::time::{Duration, Instant};

use unduloid_core::config::{RunConfig, DEFAULT_SWEEP};
use unduloid_core::report::VerifyReport;
use unduloid_core::verify::{run_criterion, run_verify, CRITERIA, HEMISPHERE_GRID, MESH_GRID};

struct Criterion {
    id: u8,
    title: &'static str,
    /// Wall-clock budget for the whole criterion.
    budget: Duration,
}

fn criteria(sweep: usize) -> Vec<Criterion> {
    let secs = |s: u64| Duration::from_secs(s);
    let per_surface = |s: u64| secs(s * sweep as u64);
    vec![
        Criterion { id: 1, title: "Delaunay profile, neck radius and mesh mean curvature", budget: secs(10) },
        Criterion { id: 2, title: "cousin integrability and geometry", budget: per_surface(60) + secs(60) },
        Criterion { id: 3, title: "necksize equals spherical distance", budget: secs(300) },
        Criterion { id: 4, title: "cousin identities and their convergence", budget: secs(600) },
        Criterion { id: 5, title: "Jacobi mode structure", budget: per_surface(30) + secs(30) },
        Criterion { id: 6, title: "dimension count at k = 2 and dimension tables", budget: secs(600) },
        Criterion { id: 7, title: "necksize rate via dΦ and via dA", budget: secs(600) },
        Criterion { id: 8, title: "boundary classification", budget: secs(600) },
        Criterion { id: 9, title: "determinism and report round-trip", budget: secs(600) },
    ]
}

fn summarize(report: &VerifyReport) -> String {
    let checks = report.records.iter().filter(|r| !r.informational).count();
    if report.pass {
        format!("{checks} checks")
    } else {
        format!("{} of {checks} checks failed: {}", report.failed.len(), report.failed.join(", "))
    }
}

#[test]
fn acceptance() {
    let config = RunConfig::default();
    assert_eq!(config.necksizes, DEFAULT_SWEEP.to_vec());
    assert_eq!((config.n_t, config.n_phi), (400, 100));
    assert_eq!(MESH_GRID, (200, 100));
    assert_eq!(HEMISPHERE_GRID, (200, 200));

    let list = criteria(config.necksizes.len());
    assert_eq!(list.len(), CRITERIA as usize);
    let mut failures = Vec::new();
    for c in &list {
        let start = Instant::now();
        let outcome = run_criterion(c.id, &config);
        let elapsed = start.elapsed();
        let (pass, detail) = match &outcome {
            Ok(report) => (report.pass && elapsed <= c.budget, summarize(report)),
            Err(e) => (false, format!("error: {e}")),
        };
        let timing = format!("{:.1} s of {} s", elapsed.as_secs_f64(), c.budget.as_secs());
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {}: {} ({detail}; {timing})", c.id, c.title);
        if !pass {
            failures.push(c.id);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}

/// Byte-identical reports from two runs of a small configuration, and an
/// exact parse of the emitted JSON.
#[test]
fn whole_reports_are_reproducible() {
    let config = RunConfig { necksizes: vec![0.9], n_t: 200, n_phi: 100, t_range: 2.0, seed: 7, ..RunConfig::default() };
    let a = run_verify(&config).unwrap().to_json().unwrap();
    let b = run_verify(&config).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    let parsed = VerifyReport::parse(&a).unwrap();
    assert_eq!(parsed.to_json().unwrap(), a);
}
