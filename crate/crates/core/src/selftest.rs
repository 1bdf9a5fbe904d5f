//! Bundled property checks, runnable from an installed binary.
//!
//! Each check is small (well under a second) and independent of the test
//! suite, so a user can confirm a build behaves on their machine.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classifier::{theorem1_conditions, theorem3_conditions, DecayProfile, SystemConfig};
use crate::iteration::{kernel_bounds_check, IterationState, RadialGrid};
use crate::lair::{lair_inner, outer_integrand};
use crate::scan::{run_scan, ScanSpec};
use crate::shooting::{shoot, Outcome, ShootingProblem};

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = fn() -> (bool, String);

const CHECKS: [(&str, Check); 6] = [
    ("classifier_disjointness", disjointness),
    ("kernel_bounds", kernel_bounds),
    ("recursion_closed_form", recursion_closed_form),
    ("lair_closed_form", lair_closed_form),
    ("shooting_blowup", shooting_blowup),
    ("scan_determinism", scan_determinism),
];

pub fn run_all() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&(name, check)| {
            let t = Instant::now();
            let (passed, detail) = check();
            CheckResult {
                name,
                passed,
                detail,
                seconds: t.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn disjointness() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 20_000;
    let mut overlaps = 0;
    let mut checked = 0;
    for _ in 0..trials {
        // quarter-integer exponents make equality cases common
        let mut q = |lo: f64, hi: f64| (rng.random_range(lo..hi) * 4.0).round() / 4.0;
        let alpha = q(1.0, 4.0);
        let beta = q(1.0, 4.0);
        let prof = DecayProfile::exponents(q(-1.0, 5.0), q(-2.0, 3.0), q(-1.0, 5.0), q(-2.0, 3.0));
        let Ok(cfg) = SystemConfig::new(3, alpha, beta) else {
            continue;
        };
        let (Ok(t1), Ok(t3)) = (
            theorem1_conditions(&cfg, &prof, false),
            theorem3_conditions(&cfg, &prof),
        ) else {
            continue;
        };
        checked += 1;
        if t1.iter().any(|&b| b) && t3.iter().any(|&b| b) {
            overlaps += 1;
        }
    }
    (overlaps == 0, format!("{overlaps} overlaps in {checked} tuples"))
}

fn kernel_bounds() -> (bool, String) {
    let mut ok = true;
    for n in [3, 4, 5] {
        for b in [1.5, 2.0] {
            for m in [1, 2, 3] {
                ok &= kernel_bounds_check(n, b, m, 20_000, u64::from(n * 100 + m));
            }
        }
    }
    (ok, "18 (N, b, m) combinations, 2e4 triples each".into())
}

fn recursion_closed_form() -> (bool, String) {
    let run = || -> crate::Result<f64> {
        let cfg = SystemConfig::new(3, 2.0, 2.0)?;
        let grid = RadialGrid::log_uniform(1.0, 1e3, 512)?;
        let st = IterationState::new(cfg, grid, &|r: f64| 1.0 / r, &|r: f64| 1.0 / r)?.iterate()?;
        let mut worst: f64 = 0.0;
        for (r, u) in st.grid.nodes().iter().zip(&st.u).skip(1) {
            let want = r / 2.0 - 1.0 + 1.0 / (2.0 * r);
            worst = worst.max((u / want - 1.0).abs());
        }
        Ok(worst)
    };
    match run() {
        Ok(w) => (w < 1e-4, format!("max relative error {w:.2e}")),
        Err(e) => (false, e.to_string()),
    }
}

fn lair_closed_form() -> (bool, String) {
    let run = || -> crate::Result<f64> {
        let cfg = SystemConfig::new(3, 2.0, 2.0)?;
        let one = |_: f64| 1.0;
        let mut worst: f64 = 0.0;
        for t in [1.0, 10.0, 100.0] {
            let inner = lair_inner(&cfg, &one, t)?;
            let g = outer_integrand(&cfg, &one, &one, 2.0, t)?;
            let want = t.powi(5) / 36.0;
            worst = worst
                .max((inner / (t * t / 6.0) - 1.0).abs())
                .max((g / want - 1.0).abs());
        }
        Ok(worst)
    };
    match run() {
        Ok(w) => (w < 1e-8, format!("max relative error {w:.2e}")),
        Err(e) => (false, e.to_string()),
    }
}

fn shooting_blowup() -> (bool, String) {
    let one: std::sync::Arc<dyn crate::Radial> = std::sync::Arc::new(|_: f64| 1.0);
    let run = || -> crate::Result<(Outcome, f64)> {
        let cfg = SystemConfig::new(3, 2.0, 2.0)?;
        let res = shoot(&ShootingProblem::new(cfg, one.clone(), one.clone(), 1.0, 1.0))?;
        Ok((res.outcome, res.blowup_radius.unwrap_or(f64::NAN)))
    };
    match run() {
        Ok((o, r)) => {
            let rel = (r / 3.964_340_682_519_843_7 - 1.0).abs();
            (o == Outcome::BlowUp && rel < 1e-2, format!("{o} at r = {r:.6}"))
        }
        Err(e) => (false, e.to_string()),
    }
}

fn scan_determinism() -> (bool, String) {
    let text = r#"{"fixed": {"alpha": "2", "beta": "2", "lambda": "2", "mu": "2"},
        "axes": [{"param": "nu", "min": "-1", "max": "3", "count": 9},
                 {"param": "xi", "min": "-1", "max": "3", "count": 9}],
        "include_critical_lines": true}"#;
    let run = || -> crate::Result<bool> {
        let spec = ScanSpec::from_json(text)?;
        let a = run_scan(&spec)?;
        let b = run_scan(&spec)?;
        Ok(a.csv == b.csv && a.svg == b.svg)
    };
    match run() {
        Ok(same) => (
            same,
            if same {
                "identical CSV and SVG".into()
            } else {
                "outputs differ".into()
            },
        ),
        Err(e) => (false, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for r in super::run_all() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
