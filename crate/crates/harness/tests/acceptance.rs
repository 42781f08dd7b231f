//! The eight acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria 1-4 call the verification routines directly; 5-8 run the
//! reference configurations under `configs/`. Artifacts land in
//! `target/acceptance/`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use aflow_harness::config::ExperimentConfig;
use aflow_harness::experiments::run_experiment;
use aflow_harness::verification;
use aflow_harness::{Check, Result};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn out_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance").join(name)
}

fn experiment(name: &str) -> Result<Vec<Check>> {
    let cfg = ExperimentConfig::load(&config(&format!("{name}.toml")))?;
    let out = out_dir(name);
    Ok(run_experiment(&cfg, &out)?.checks)
}

fn decay() -> Result<Vec<Check>> {
    let mut checks = experiment("decay_2d")?;
    for c in experiment("decay_3d")? {
        checks.push(Check { name: format!("3D {}", c.name), ..c });
    }
    Ok(checks)
}

type Criterion = (&'static str, fn() -> Result<Vec<Check>>);

const CRITERIA: [Criterion; 8] = [
    ("spectral identity suite", || verification::identity_suite(verification::IDENTITY_FIELDS, 2024)),
    ("bilinear orthogonality", || verification::orthogonality_suite(verification::ORTHOGONALITY_FIELDS, 99)),
    ("Taylor-Green regression", verification::taylor_green_regression),
    ("energy balance", verification::energy_balance),
    ("decay exponents", decay),
    ("non-uniform decay counterexample", || experiment("counterexample")),
    ("alpha -> 0 convergence", || experiment("alpha_sweep")),
    ("Galerkin truncation study", || experiment("truncation")),
];

fn main() {
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in CRITERIA.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(checks) => {
                let bad: Vec<String> = checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| format!("{} = {:e} (need {})", c.name, c.value, c.requirement))
                    .collect();
                let pass = !checks.is_empty() && bad.is_empty();
                let detail = if pass { format!("{} checks", checks.len()) } else { bad.join("; ") };
                (pass, detail)
            }
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n} {}: {name} [{detail}] ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
