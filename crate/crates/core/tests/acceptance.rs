//! Acceptance suite: prints one PASS/FAIL line per headline criterion and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ctmc_freshness::ctmc::{spectral_decomposition, stationary_distribution, Generator};
use ctmc_freshness::freshness::{fwc_rational, fwe_rational, fws_rational, Model, ProximityMatrix};
use ctmc_freshness::optimizer::{
    grid_oracle, kkt_check, normalize_weights, water_fill, water_fill_with, InnerStep, SourceSpec,
};
use ctmc_freshness::oracle::{fws_chain_solve, joint_chain_solve};
use ctmc_freshness::scenarios::{
    log_grid, run_experiment, validation_checks, validation_rows, ScenarioSpec, TwoStateLinear,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn three_state() -> (Generator, ProximityMatrix) {
    let g = Generator::new(&[
        vec![-1.95, 1.95, 0.0],
        vec![1.0, -2.95, 1.95],
        vec![0.0, 2.0, -2.0],
    ])
    .unwrap();
    let p = ProximityMatrix::new(&[
        vec![1.0, 0.5, 0.0],
        vec![0.5, 1.0, 0.5],
        vec![0.0, 0.5, 1.0],
    ])
    .unwrap();
    (g, p)
}

/// Random reversible generator: `q_ij = s_ij pi_j` with `s` symmetric.
fn random_reversible(rng: &mut ChaCha8Rng, k: usize, lo: f64, hi: f64) -> Generator {
    let pi: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let mut rows = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let s = rng.random_range(lo..hi);
            rows[i][j] = s * pi[j];
            rows[j][i] = s * pi[i];
        }
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = -row.iter().sum::<f64>();
    }
    Generator::new(&rows).unwrap()
}

fn formula_cross_validation() -> Outcome {
    let (g, p) = three_state();
    let lambdas = log_grid(1e-2, 1e2, 32);
    let start = Instant::now();
    let pi = stationary_distribution(&g).unwrap();
    let sf = spectral_decomposition(&g, &pi).unwrap();
    let fwe = fwe_rational(&sf);
    let fwc = fwc_rational(&sf, &p).unwrap();
    let fws = fws_rational(&g, &pi);
    let mut worst = [0.0f64; 3];
    for &l in &lambdas {
        worst[0] = worst[0].max((fwe.eval(l) - joint_chain_solve(&g, l, None).unwrap()).abs());
        worst[1] = worst[1].max((fwc.eval(l) - joint_chain_solve(&g, l, Some(&p)).unwrap()).abs());
        worst[2] = worst[2].max((fws.eval(l) - fws_chain_solve(&g, l).unwrap()).abs());
    }
    let elapsed = start.elapsed();
    let passed = worst[0] <= 1e-9
        && worst[1] <= 1e-9
        && worst[2] <= 1e-10
        && elapsed < Duration::from_secs(1);
    outcome(
        passed,
        format!(
            "max |analytic - oracle|: FWE {:.2e}, FWC {:.2e}, FWS {:.2e}; {:.3} s",
            worst[0],
            worst[1],
            worst[2],
            elapsed.as_secs_f64()
        ),
    )
}

fn monte_carlo_agreement() -> Outcome {
    let (g, p) = three_state();
    let lambdas = log_grid(1e-2, 1e2, 32);
    let start = Instant::now();
    let rows = validation_rows(&g, &p, &lambdas, 2e4, 20, 1).unwrap();
    let elapsed = start.elapsed();
    let checks: Vec<_> = validation_checks(&rows)
        .into_iter()
        .filter(|c| c.name.contains("Monte Carlo"))
        .collect();
    let passed =
        checks.len() == 3 && checks.iter().all(|c| c.passed) && elapsed < Duration::from_secs(60);
    let detail: Vec<String> = checks
        .iter()
        .map(|c| c.detail.split(' ').next().unwrap_or("").to_string())
        .collect();
    outcome(
        passed,
        format!(
            "covered FWE/FWC/FWS = {}; {:.1} s",
            detail.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn two_state_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut single_term = true;
    for _ in 0..100 {
        let alpha = rng.random_range(0.1..10.0);
        let beta = rng.random_range(0.1..10.0);
        let g = Generator::new(&[vec![-alpha, alpha], vec![beta, -beta]]).unwrap();
        let pi = stationary_distribution(&g).unwrap();
        let rf = fwe_rational(&spectral_decomposition(&g, &pi).unwrap());
        if rf.terms().len() != 1 {
            single_term = false;
            continue;
        }
        let t = rf.terms()[0];
        worst = worst
            .max((t.a - 2.0 * alpha * beta / (alpha + beta)).abs())
            .max((t.d - (alpha + beta)).abs());
    }
    outcome(
        single_term && worst <= 1e-12,
        format!("single term: {single_term}; max error {worst:.2e}"),
    )
}

fn scenario_constant() -> Outcome {
    let spec = TwoStateLinear {
        num_sources: 50,
        pi1: 0.3,
        r1: 0.01,
        r_mean: 10.0,
    };
    let delta = spec.delta();
    outcome(
        (delta - 0.4078).abs() <= 5e-5,
        format!("delta = {delta:.6}"),
    )
}

fn random_source(rng: &mut ChaCha8Rng, id: usize) -> SourceSpec {
    let k = if rng.random_bool(0.5) { 2 } else { 3 };
    let model = if rng.random_bool(0.5) {
        Model::Fwe
    } else {
        Model::Fws
    };
    let g = random_reversible(rng, k, 0.5, 5.0);
    let weight = rng.random_range(0.5..2.0);
    SourceSpec::new(format!("s{id}"), g, weight, model, None).unwrap()
}

fn optimizer_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_f = 0.0f64;
    let mut worst_rate = 0.0f64;
    let mut kkt_ok = 0;
    let mut max_rounds = 0;
    let instances = 50;
    for _ in 0..instances {
        let mut sources: Vec<SourceSpec> = (0..3).map(|i| random_source(&mut rng, i)).collect();
        normalize_weights(&mut sources);
        let budget = rng.random_range(0.5..20.0);
        let wf = water_fill(&sources, budget).unwrap();
        let grid = grid_oracle(&sources, budget, 1e-3 * budget).unwrap();
        worst_f = worst_f.max((wf.system_freshness - grid.system_freshness).abs());
        for (a, b) in wf.lambdas.iter().zip(&grid.lambdas) {
            worst_rate = worst_rate.max((a - b).abs() / budget);
        }
        if kkt_check(&sources, &wf, budget, 1e-6).passed {
            kkt_ok += 1;
        }
        max_rounds = max_rounds.max(wf.iterations);
    }
    let passed = worst_f <= 1e-6 && worst_rate <= 2e-3 && kkt_ok == instances && max_rounds <= 2;
    outcome(
        passed,
        format!(
            "max |dF_S| {worst_f:.2e}, max |d lambda|/budget {worst_rate:.2e}, KKT {kkt_ok}/{instances}, max rounds {max_rounds}"
        ),
    )
}

fn single_shot_equivalence() -> Outcome {
    let spec = TwoStateLinear {
        num_sources: 50,
        pi1: 0.3,
        r1: 0.01,
        r_mean: 10.0,
    };
    let sources = spec.sources(Model::Fwe).unwrap();
    let r: f64 = sources.iter().map(|s| s.intensity).sum();
    let mut worst = 0.0f64;
    for kappa in log_grid(0.1, 10.0, 16) {
        let a = water_fill_with(&sources, kappa * r, InnerStep::SingleShot).unwrap();
        let b = water_fill_with(&sources, kappa * r, InnerStep::Bisection).unwrap();
        for (x, y) in a.lambdas.iter().zip(&b.lambdas) {
            worst = worst.max((x - y).abs());
        }
    }
    outcome(
        worst <= 1e-7,
        format!("max per-source difference {worst:.2e} over 16 budgets"),
    )
}

fn experiment_checks(spec: &ScenarioSpec, filter: &[&str]) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(spec, dir.path()).unwrap();
    let selected: Vec<_> = report
        .checks
        .iter()
        .filter(|c| filter.iter().any(|f| c.name.contains(f)))
        .collect();
    let failed: Vec<String> = selected
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.to_string())
        .collect();
    let detail = if failed.is_empty() {
        format!("{} properties hold", selected.len())
    } else {
        failed.join("; ")
    };
    outcome(!selected.is_empty() && failed.is_empty(), detail)
}

fn ordering_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let lambdas = [0.01, 0.1, 1.0, 10.0, 100.0];
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let k = rng.random_range(2..=6);
        let g = random_reversible(&mut rng, k, 0.1, 10.0);
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        if i == j {
                            1.0
                        } else {
                            rng.random_range(0.0..1.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let p = ProximityMatrix::new(&rows).unwrap();
        let pi = stationary_distribution(&g).unwrap();
        let sf = spectral_decomposition(&g, &pi).unwrap();
        let fwe = fwe_rational(&sf);
        let fwc = fwc_rational(&sf, &p).unwrap();
        let fws = fws_rational(&g, &pi);
        for &l in &lambdas {
            let (c, e, s) = (fwc.eval(l), fwe.eval(l), fws.eval(l));
            worst = worst.min(c - e).min(e - s);
            if c < e - 1e-12 || e < s - 1e-12 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations; min gap {worst:.2e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("formula cross-validation", formula_cross_validation),
        ("Monte Carlo agreement", monte_carlo_agreement),
        ("two-state closed form", two_state_closed_form),
        ("scenario constant", scenario_constant),
        ("optimizer vs grid oracle", optimizer_correctness),
        ("single-shot equivalence", single_shot_equivalence),
        ("policy dominance over kappa", || {
            experiment_checks(
                &ScenarioSpec::two_state_sweep(),
                &["dominates", "UNIFORM near optimal"],
            )
        }),
        ("optimal rate structure", || {
            experiment_checks(
                &ScenarioSpec::two_state_sweep(),
                &["unsampled", "nondecreasing in intensity"],
            )
        }),
        ("M/M/c/c sweep structure", || {
            experiment_checks(&ScenarioSpec::mmcc_sweep(), &["F_S", "UNIFORM"])
        }),
        ("freshness ordering", ordering_suite),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        let tag = if out.passed { "PASS" } else { "FAIL" };
        if !out.passed {
            failures += 1;
        }
        println!("{tag} [{:02}] {name}: {}", i + 1, out.detail);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
