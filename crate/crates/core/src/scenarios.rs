//! Baseline policies, scenario builders and the experiment runner that
//! regenerates the validation and allocation studies as CSV files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::ctmc::{build_birth_death, Generator};
use crate::error::{Error, Result};
use crate::freshness::{proximity_band, Model, ProximityMatrix};
use crate::optimizer::{normalize_weights, water_fill_with, InnerStep, SourceSpec};
use crate::oracle::{fws_chain_solve, joint_chain_solve};
use crate::simulator::simulate_shared;

/// Sampling policies compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    /// Water-filling optimum.
    Wf,
    /// `lambda_n = budget / N`.
    Uniform,
    /// `lambda_n` proportional to the transition intensity `r_n`.
    Prop,
    /// `lambda_n` proportional to `1 / r_n`.
    InvProp,
}

impl Policy {
    pub const BASELINES: [Policy; 3] = [Policy::Uniform, Policy::Prop, Policy::InvProp];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Wf => "WF",
            Policy::Uniform => "UNIFORM",
            Policy::Prop => "PROP",
            Policy::InvProp => "INVPROP",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "WF" => Ok(Policy::Wf),
            "UNIFORM" => Ok(Policy::Uniform),
            "PROP" => Ok(Policy::Prop),
            "INVPROP" => Ok(Policy::InvProp),
            _ => Err(Error::BadParameters(format!("unknown policy {s:?}"))),
        }
    }
}

/// Rates prescribed by a heuristic baseline. `Policy::Wf` is not a baseline.
pub fn baseline_allocation(
    policy: Policy,
    sources: &[SourceSpec],
    budget: f64,
) -> Result<Vec<f64>> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::InfeasibleBudget(budget));
    }
    if sources.is_empty() {
        return Err(Error::BadParameters("no sources to allocate".into()));
    }
    let scores: Vec<f64> = match policy {
        Policy::Wf => {
            return Err(Error::BadParameters("WF is not a baseline policy".into()));
        }
        Policy::Uniform => vec![1.0; sources.len()],
        Policy::Prop => sources.iter().map(|s| s.intensity).collect(),
        Policy::InvProp => sources
            .iter()
            .map(|s| {
                if s.intensity > 0.0 {
                    Ok(1.0 / s.intensity)
                } else {
                    Err(Error::ZeroIntensity(s.id.clone()))
                }
            })
            .collect::<Result<_>>()?,
    };
    let total: f64 = scores.iter().sum();
    Ok(scores.iter().map(|x| budget * x / total).collect())
}

/// Rates under any policy, including water-filling.
pub fn policy_rates(
    policy: Policy,
    sources: &[SourceSpec],
    budget: f64,
    step: InnerStep,
) -> Result<Vec<f64>> {
    match policy {
        Policy::Wf => Ok(water_fill_with(sources, budget, step)?.lambdas),
        _ => baseline_allocation(policy, sources, budget),
    }
}

/// Weighted sum freshness `F_S = sum_n w_n f_n(lambda_n)`.
pub fn system_freshness(sources: &[SourceSpec], rates: &[f64]) -> f64 {
    debug_assert_eq!(sources.len(), rates.len());
    sources
        .iter()
        .zip(rates)
        .map(|(s, &l)| s.weight * s.rf.eval(l))
        .sum()
}

/// Two-state sources with a common stationary law `(pi1, 1 - pi1)` and
/// linearly spaced transition intensities `r_n = r_1 + (n - 1) delta` whose
/// mean is `r_mean`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateLinear {
    pub num_sources: usize,
    pub pi1: f64,
    pub r1: f64,
    pub r_mean: f64,
}

impl TwoStateLinear {
    pub fn validate(&self) -> Result<()> {
        let ok = self.num_sources >= 1
            && self.pi1 > 0.0
            && self.pi1 < 1.0
            && self.r1 > 0.0
            && self.r1 < 2.0 * self.r_mean
            && (self.num_sources > 1 || self.r1 == self.r_mean);
        if ok {
            Ok(())
        } else {
            Err(Error::BadParameters(format!(
                "invalid two-state scenario {self:?}"
            )))
        }
    }

    /// `delta = 2 (r_mean - r_1) / (N - 1)`.
    pub fn delta(&self) -> f64 {
        if self.num_sources < 2 {
            return 0.0;
        }
        2.0 * (self.r_mean - self.r1) / (self.num_sources - 1) as f64
    }

    pub fn intensities(&self) -> Vec<f64> {
        let delta = self.delta();
        (0..self.num_sources)
            .map(|n| self.r1 + n as f64 * delta)
            .collect()
    }

    /// Generator with stationary law `(pi1, pi2)` and intensity `r`:
    /// detailed balance gives `r = 2 pi1 alpha`, so `alpha = r / (2 pi1)`
    /// and `beta = r / (2 pi2)`.
    pub fn generator(&self, r: f64) -> Result<Generator> {
        let alpha = r / (2.0 * self.pi1);
        let beta = r / (2.0 * (1.0 - self.pi1));
        Generator::new(&[vec![-alpha, alpha], vec![beta, -beta]])
    }

    /// Sources with uniform weights.
    pub fn sources(&self, model: Model) -> Result<Vec<SourceSpec>> {
        two_state_linear_scenario(self, model, None)
    }
}

/// Builds the linear two-state scenario; `weights` default to `1/N`.
pub fn two_state_linear_scenario(
    spec: &TwoStateLinear,
    model: Model,
    weights: Option<&[f64]>,
) -> Result<Vec<SourceSpec>> {
    spec.validate()?;
    if model == Model::Fwc {
        return Err(Error::MissingProximity);
    }
    if let Some(w) = weights {
        if w.len() != spec.num_sources {
            return Err(Error::DimensionMismatch {
                expected: spec.num_sources,
                actual: w.len(),
            });
        }
    }
    let mut sources = spec
        .intensities()
        .into_iter()
        .enumerate()
        .map(|(n, r)| {
            let w = weights.map_or(1.0, |w| w[n]);
            SourceSpec::new(format!("{:02}", n + 1), spec.generator(r)?, w, model, None)
        })
        .collect::<Result<Vec<_>>>()?;
    normalize_weights(&mut sources);
    Ok(sources)
}

/// `N` M/M/c/c occupancy sources with linearly spaced loads
/// `rho_n = rho_1 + (n - 1) delta` averaging `rho_avg`, scored by FWC with a
/// band proximity matrix of half-width `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmccScenario {
    pub num_sources: usize,
    pub servers: usize,
    pub gamma: f64,
    pub rho1: f64,
    pub rho_avg: f64,
    pub v: usize,
    pub budget: f64,
}

impl MmccScenario {
    pub fn validate(&self) -> Result<()> {
        let ok = self.num_sources >= 1
            && self.servers >= 1
            && self.gamma > 0.0
            && self.rho1 > 0.0
            && self.rho1 <= self.rho_avg
            && self.budget > 0.0
            && (self.num_sources > 1 || self.rho1 == self.rho_avg);
        if ok {
            Ok(())
        } else {
            Err(Error::BadParameters(format!(
                "invalid M/M/c/c scenario {self:?}"
            )))
        }
    }

    pub fn delta(&self) -> f64 {
        if self.num_sources < 2 {
            return 0.0;
        }
        2.0 * (self.rho_avg - self.rho1) / (self.num_sources - 1) as f64
    }

    pub fn loads(&self) -> Vec<f64> {
        let delta = self.delta();
        (0..self.num_sources)
            .map(|n| self.rho1 + n as f64 * delta)
            .collect()
    }

    /// Occupancy chain with arrival rate `xi = rho c gamma` and `i` busy
    /// servers completing at rate `i gamma`.
    pub fn generator(&self, rho: f64) -> Result<Generator> {
        let xi = rho * self.servers as f64 * self.gamma;
        let births = vec![xi; self.servers];
        let deaths: Vec<f64> = (1..=self.servers).map(|i| i as f64 * self.gamma).collect();
        build_birth_death(&births, &deaths)
    }
}

/// Builds the M/M/c/c scenario; returns the sources and their proximity matrices.
pub fn mmcc_scenario(spec: &MmccScenario) -> Result<(Vec<SourceSpec>, Vec<ProximityMatrix>)> {
    spec.validate()?;
    let p = proximity_band(spec.servers + 1, spec.v);
    let mut sources = spec
        .loads()
        .into_iter()
        .enumerate()
        .map(|(n, rho)| {
            SourceSpec::new(
                format!("{:02}", n + 1),
                spec.generator(rho)?,
                1.0,
                Model::Fwc,
                Some(p.clone()),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    normalize_weights(&mut sources);
    let ps = vec![p; spec.num_sources];
    Ok((sources, ps))
}

/// `count` log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi / lo).ln() / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i + 1 == count {
                        hi
                    } else {
                        lo * (step * i as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Formats with 12 significant digits, `%.12g` style.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let mantissa = trim_zeros(mantissa.to_string());
        format!(
            "{mantissa}e{}{:02}",
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Experiment descriptions with their parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSpec {
    /// Analytic vs. product-chain vs. Monte Carlo mean freshness for one
    /// source over a `lambda` grid (`fig3.csv`).
    ThreeStateValidation {
        generator: Vec<Vec<f64>>,
        proximity: Vec<Vec<f64>>,
        lambdas: Vec<f64>,
        horizon: f64,
        replications: usize,
        seed: u64,
    },
    /// Policy comparison over the sampling ratio `kappa = budget / r`
    /// (`fig4.csv`) and optimal per-source rates (`fig5.csv`).
    TwoStateSweep {
        scenario: TwoStateLinear,
        kappas: Vec<f64>,
        rate_kappas: Vec<f64>,
    },
    /// WF vs. UNIFORM for M/M/c/c sources over `N` and `v` (`fig6.csv`).
    MmccSweep {
        servers: usize,
        gamma: f64,
        rho_avg: f64,
        budget: f64,
        rho1s: Vec<f64>,
        vs: Vec<usize>,
        source_counts: Vec<usize>,
    },
}

impl ScenarioSpec {
    pub fn three_state_validation() -> Self {
        ScenarioSpec::ThreeStateValidation {
            generator: vec![
                vec![-1.95, 1.95, 0.0],
                vec![1.0, -2.95, 1.95],
                vec![0.0, 2.0, -2.0],
            ],
            proximity: vec![
                vec![1.0, 0.5, 0.0],
                vec![0.5, 1.0, 0.5],
                vec![0.0, 0.5, 1.0],
            ],
            lambdas: log_grid(1e-2, 1e2, 32),
            horizon: 2e4,
            replications: 20,
            seed: 1,
        }
    }

    pub fn two_state_sweep() -> Self {
        ScenarioSpec::TwoStateSweep {
            scenario: TwoStateLinear {
                num_sources: 50,
                pi1: 0.3,
                r1: 0.01,
                r_mean: 10.0,
            },
            kappas: log_grid(0.1, 10.0, 16),
            rate_kappas: vec![0.25, 1.0, 4.0, 10.0],
        }
    }

    pub fn mmcc_sweep() -> Self {
        ScenarioSpec::MmccSweep {
            servers: 10,
            gamma: 1.0,
            rho_avg: 0.9,
            budget: 20.0,
            rho1s: vec![0.01, 0.89],
            vs: vec![0, 1, 2, 3],
            source_counts: (1..=10).map(|i| 5 * i).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let nonempty = match self {
            ScenarioSpec::ThreeStateValidation {
                lambdas,
                replications,
                horizon,
                ..
            } => !lambdas.is_empty() && *replications > 0 && *horizon > 0.0,
            ScenarioSpec::TwoStateSweep {
                kappas,
                rate_kappas,
                ..
            } => !kappas.is_empty() && !rate_kappas.is_empty(),
            ScenarioSpec::MmccSweep {
                rho1s,
                vs,
                source_counts,
                ..
            } => !rho1s.is_empty() && !vs.is_empty() && !source_counts.is_empty(),
        };
        if nonempty {
            Ok(())
        } else {
            Err(Error::BadParameters(
                "experiment grids must be nonempty".into(),
            ))
        }
    }
}

/// One headline property evaluated on generated data.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Row {
    pub model: Model,
    pub lambda: f64,
    pub analytic: f64,
    pub oracle: f64,
    pub sim_mean: f64,
    pub sim_ci: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Row {
    pub model: Model,
    pub kappa: f64,
    pub policy: Policy,
    pub system_freshness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig5Row {
    pub model: Model,
    pub kappa: f64,
    pub source_index: usize,
    pub lambda_over_kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig6Row {
    pub rho1: f64,
    pub v: usize,
    pub num_sources: usize,
    pub policy: Policy,
    pub system_freshness: f64,
}

/// Data generated by one experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentData {
    Validation(Vec<Fig3Row>),
    Sweep {
        fig4: Vec<Fig4Row>,
        fig5: Vec<Fig5Row>,
    },
    Mmcc(Vec<Fig6Row>),
}

/// Outcome of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub data: ExperimentData,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Analytic, oracle and simulated freshness of one source over a `lambda` grid.
pub fn validation_rows(
    g: &Generator,
    p: &ProximityMatrix,
    lambdas: &[f64],
    horizon: f64,
    replications: usize,
    seed: u64,
) -> Result<Vec<Fig3Row>> {
    let fwe = SourceSpec::new("fwe", g.clone(), 1.0, Model::Fwe, None)?.rf;
    let fwc = SourceSpec::new("fwc", g.clone(), 1.0, Model::Fwc, Some(p.clone()))?.rf;
    let fws = SourceSpec::new("fws", g.clone(), 1.0, Model::Fws, None)?.rf;
    let per_lambda = lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let sim = simulate_shared(
                g,
                lambda,
                Some(p),
                horizon,
                replications,
                seed.wrapping_add(1000 * i as u64),
            )?;
            let oracle = [
                joint_chain_solve(g, lambda, None)?,
                joint_chain_solve(g, lambda, Some(p))?,
                fws_chain_solve(g, lambda)?,
            ];
            Ok((lambda, oracle, sim))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(3 * lambdas.len());
    for (m, model) in Model::ALL.into_iter().enumerate() {
        let rf = match model {
            Model::Fwe => &fwe,
            Model::Fwc => &fwc,
            Model::Fws => &fws,
        };
        for (lambda, oracle, sim) in &per_lambda {
            let est = sim.get(model).expect("proximity supplied");
            rows.push(Fig3Row {
                model,
                lambda: *lambda,
                analytic: rf.eval(*lambda),
                oracle: oracle[m],
                sim_mean: est.mean,
                sim_ci: est.half_width_95,
            });
        }
    }
    Ok(rows)
}

/// `fig4` and `fig5` rows for the linear two-state scenario.
pub fn sweep_rows(
    scenario: &TwoStateLinear,
    kappas: &[f64],
    rate_kappas: &[f64],
) -> Result<(Vec<Fig4Row>, Vec<Fig5Row>)> {
    let mut fig4 = Vec::new();
    let mut fig5 = Vec::new();
    for model in [Model::Fwe, Model::Fws] {
        let sources = scenario.sources(model)?;
        let step = if model == Model::Fwe {
            InnerStep::SingleShot
        } else {
            InnerStep::Bisection
        };
        let r: f64 = sources.iter().map(|s| s.intensity).sum();
        let policies = [Policy::Wf, Policy::Uniform, Policy::Prop, Policy::InvProp];
        let rows = kappas
            .par_iter()
            .map(|&kappa| {
                policies
                    .iter()
                    .map(|&policy| {
                        let rates = policy_rates(policy, &sources, kappa * r, step)?;
                        Ok(Fig4Row {
                            model,
                            kappa,
                            policy,
                            system_freshness: system_freshness(&sources, &rates),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        fig4.extend(rows.into_iter().flatten());
        for &kappa in rate_kappas {
            let rates = water_fill_with(&sources, kappa * r, step)?.lambdas;
            fig5.extend(rates.iter().enumerate().map(|(n, &l)| Fig5Row {
                model,
                kappa,
                source_index: n + 1,
                lambda_over_kappa: l / kappa,
            }));
        }
    }
    Ok((fig4, fig5))
}

/// `fig6` rows for the M/M/c/c sweep.
pub fn mmcc_rows(
    servers: usize,
    gamma: f64,
    rho_avg: f64,
    budget: f64,
    rho1s: &[f64],
    vs: &[usize],
    source_counts: &[usize],
) -> Result<Vec<Fig6Row>> {
    let mut keys = Vec::new();
    for &rho1 in rho1s {
        for &v in vs {
            for &n in source_counts {
                keys.push((rho1, v, n));
            }
        }
    }
    let rows = keys
        .par_iter()
        .map(|&(rho1, v, num_sources)| {
            let spec = MmccScenario {
                num_sources,
                servers,
                gamma,
                rho1,
                rho_avg,
                v,
                budget,
            };
            let (sources, _) = mmcc_scenario(&spec)?;
            [Policy::Wf, Policy::Uniform]
                .into_iter()
                .map(|policy| {
                    let rates = policy_rates(policy, &sources, budget, InnerStep::Bisection)?;
                    Ok(Fig6Row {
                        rho1,
                        v,
                        num_sources,
                        policy,
                        system_freshness: system_freshness(&sources, &rates),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Checks on `fig3` data: oracle agreement and Monte Carlo coverage.
pub fn validation_checks(rows: &[Fig3Row]) -> Vec<Check> {
    let mut checks = Vec::new();
    for model in Model::ALL {
        let sel: Vec<&Fig3Row> = rows.iter().filter(|r| r.model == model).collect();
        if sel.is_empty() {
            continue;
        }
        let tol = if model == Model::Fws { 1e-10 } else { 1e-9 };
        let worst = sel
            .iter()
            .map(|r| (r.analytic - r.oracle).abs())
            .fold(0.0, f64::max);
        checks.push(Check::new(
            &format!("{model} analytic vs oracle"),
            worst <= tol,
            format!("max |diff| = {worst:.3e} (tol {tol:e})"),
        ));
        let covered = sel
            .iter()
            .filter(|r| {
                let diff = (r.analytic - r.sim_mean).abs();
                diff <= r.sim_ci || diff <= 3.0 * r.sim_ci / crate::simulator::Z_95
            })
            .count();
        let needed = sel.len() - sel.len() / 16;
        checks.push(Check::new(
            &format!("{model} Monte Carlo coverage"),
            covered >= needed,
            format!(
                "{covered}/{} grid points inside the 95% CI or 3 standard errors (need {needed})",
                sel.len()
            ),
        ));
    }
    checks
}

/// Checks on `fig4`/`fig5` data.
pub fn sweep_checks(fig4: &[Fig4Row], fig5: &[Fig5Row]) -> Vec<Check> {
    let mut checks = Vec::new();
    for model in [Model::Fwe, Model::Fws] {
        let mut kappas: Vec<f64> = fig4
            .iter()
            .filter(|r| r.model == model)
            .map(|r| r.kappa)
            .collect();
        kappas.dedup();
        let value = |kappa: f64, policy: Policy| {
            fig4.iter()
                .find(|r| r.model == model && r.kappa == kappa && r.policy == policy)
                .map(|r| r.system_freshness)
        };
        let mut worst_gap = f64::INFINITY;
        for &k in &kappas {
            let wf = value(k, Policy::Wf).unwrap_or(f64::NAN);
            for b in Policy::BASELINES {
                worst_gap = worst_gap.min(wf - value(k, b).unwrap_or(f64::NAN));
            }
        }
        checks.push(Check::new(
            &format!("{model} WF dominates baselines"),
            !kappas.is_empty() && worst_gap >= -1e-9,
            format!(
                "min F_S(WF) - F_S(baseline) = {worst_gap:.3e} over {} kappas",
                kappas.len()
            ),
        ));
        if let Some(&k_max) = kappas.last() {
            let gap = value(k_max, Policy::Wf).unwrap_or(f64::NAN)
                - value(k_max, Policy::Uniform).unwrap_or(f64::NAN);
            checks.push(Check::new(
                &format!("{model} UNIFORM near optimal at kappa = {}", fmt_sig(k_max)),
                gap < 0.01,
                format!("gap = {gap:.3e}"),
            ));
        }

        let mut rate_kappas: Vec<f64> = fig5
            .iter()
            .filter(|r| r.model == model)
            .map(|r| r.kappa)
            .collect();
        rate_kappas.dedup();
        let rates = |kappa: f64| -> Vec<f64> {
            fig5.iter()
                .filter(|r| r.model == model && r.kappa == kappa)
                .map(|r| r.lambda_over_kappa)
                .collect()
        };
        if let Some(&k_min) = rate_kappas.first() {
            let lo = rates(k_min);
            let zeros = lo.iter().skip(lo.len() / 2).filter(|&&l| l == 0.0).count();
            checks.push(Check::new(
                &format!(
                    "{model} high-intensity sources unsampled at kappa = {}",
                    fmt_sig(k_min)
                ),
                zeros > 0,
                format!("{zeros} of the upper half of sources receive zero rate"),
            ));
        }
        if model == Model::Fwe {
            if let Some(&k_top) = rate_kappas.last() {
                let hi = rates(k_top);
                let monotone = hi.windows(2).all(|w| w[1] >= w[0]);
                checks.push(Check::new(
                    &format!(
                        "{model} rates nondecreasing in intensity at kappa = {}",
                        fmt_sig(k_top)
                    ),
                    monotone,
                    format!("{} sources", hi.len()),
                ));
            }
        }
    }
    checks
}

/// Checks on `fig6` data.
pub fn mmcc_checks(rows: &[Fig6Row]) -> Vec<Check> {
    let mut checks = Vec::new();
    let value = |rho1: f64, v: usize, n: usize, policy: Policy| {
        rows.iter()
            .find(|r| r.rho1 == rho1 && r.v == v && r.num_sources == n && r.policy == policy)
            .map(|r| r.system_freshness)
            .unwrap_or(f64::NAN)
    };
    let mut rho1s: Vec<f64> = rows.iter().map(|r| r.rho1).collect();
    rho1s.sort_by(f64::total_cmp);
    rho1s.dedup();
    let mut vs: Vec<usize> = rows.iter().map(|r| r.v).collect();
    vs.sort();
    vs.dedup();
    let mut ns: Vec<usize> = rows.iter().map(|r| r.num_sources).collect();
    ns.sort();
    ns.dedup();

    if let Some(&rho_lo) = rho1s.first() {
        let mut min_gap = f64::INFINITY;
        for &v in &vs {
            for &n in &ns {
                min_gap = min_gap
                    .min(value(rho_lo, v, n, Policy::Wf) - value(rho_lo, v, n, Policy::Uniform));
            }
        }
        checks.push(Check::new(
            &format!("WF beats UNIFORM at rho1 = {}", fmt_sig(rho_lo)),
            min_gap > 0.0,
            format!("min gap = {min_gap:.3e}"),
        ));
    }
    if let Some(&rho_hi) = rho1s.last() {
        let mut max_gap = 0.0f64;
        for &v in &vs {
            for &n in &ns {
                max_gap = max_gap.max(
                    (value(rho_hi, v, n, Policy::Wf) - value(rho_hi, v, n, Policy::Uniform)).abs(),
                );
            }
        }
        checks.push(Check::new(
            &format!("WF close to UNIFORM at rho1 = {}", fmt_sig(rho_hi)),
            max_gap <= 0.02,
            format!("max gap = {max_gap:.3e}"),
        ));
    }
    let mut n_monotone = true;
    let mut v_monotone = true;
    for &rho1 in &rho1s {
        for policy in [Policy::Wf, Policy::Uniform] {
            for &v in &vs {
                for w in ns.windows(2) {
                    n_monotone &=
                        value(rho1, v, w[1], policy) <= value(rho1, v, w[0], policy) + 1e-12;
                }
            }
            for &n in &ns {
                for w in vs.windows(2) {
                    v_monotone &=
                        value(rho1, w[1], n, policy) >= value(rho1, w[0], n, policy) - 1e-12;
                }
            }
        }
    }
    checks.push(Check::new(
        "F_S nonincreasing in N",
        n_monotone,
        format!("N grid {ns:?}"),
    ));
    checks.push(Check::new(
        "F_S nondecreasing in v",
        v_monotone,
        format!("v grid {vs:?}"),
    ));
    checks
}

fn write_fig3(path: &Path, rows: &[Fig3Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "model", "lambda", "analytic", "oracle", "sim_mean", "sim_ci",
    ])?;
    for r in rows {
        w.write_record([
            r.model.to_string(),
            fmt_sig(r.lambda),
            fmt_sig(r.analytic),
            fmt_sig(r.oracle),
            fmt_sig(r.sim_mean),
            fmt_sig(r.sim_ci),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_fig4(path: &Path, rows: &[Fig4Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "kappa", "policy", "system_freshness"])?;
    for r in rows {
        w.write_record([
            r.model.to_string(),
            fmt_sig(r.kappa),
            r.policy.to_string(),
            fmt_sig(r.system_freshness),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_fig5(path: &Path, rows: &[Fig5Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "kappa", "source_index", "lambda_over_kappa"])?;
    for r in rows {
        w.write_record([
            r.model.to_string(),
            fmt_sig(r.kappa),
            r.source_index.to_string(),
            fmt_sig(r.lambda_over_kappa),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_fig6(path: &Path, rows: &[Fig6Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rho1", "v", "num_sources", "policy", "system_freshness"])?;
    for r in rows {
        w.write_record([
            fmt_sig(r.rho1),
            r.v.to_string(),
            r.num_sources.to_string(),
            r.policy.to_string(),
            fmt_sig(r.system_freshness),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs an experiment, writes its CSV files into `out_dir` and evaluates the
/// headline properties on the generated data.
pub fn run_experiment(spec: &ScenarioSpec, out_dir: &Path) -> Result<ExperimentReport> {
    spec.validate()?;
    fs::create_dir_all(out_dir)?;
    match spec {
        ScenarioSpec::ThreeStateValidation {
            generator,
            proximity,
            lambdas,
            horizon,
            replications,
            seed,
        } => {
            let g = Generator::new(generator)?;
            let p = ProximityMatrix::new(proximity)?;
            let rows = validation_rows(&g, &p, lambdas, *horizon, *replications, *seed)?;
            let path = out_dir.join("fig3.csv");
            write_fig3(&path, &rows)?;
            Ok(ExperimentReport {
                files: vec![path],
                checks: validation_checks(&rows),
                data: ExperimentData::Validation(rows),
            })
        }
        ScenarioSpec::TwoStateSweep {
            scenario,
            kappas,
            rate_kappas,
        } => {
            let (fig4, fig5) = sweep_rows(scenario, kappas, rate_kappas)?;
            let p4 = out_dir.join("fig4.csv");
            let p5 = out_dir.join("fig5.csv");
            write_fig4(&p4, &fig4)?;
            write_fig5(&p5, &fig5)?;
            Ok(ExperimentReport {
                files: vec![p4, p5],
                checks: sweep_checks(&fig4, &fig5),
                data: ExperimentData::Sweep { fig4, fig5 },
            })
        }
        ScenarioSpec::MmccSweep {
            servers,
            gamma,
            rho_avg,
            budget,
            rho1s,
            vs,
            source_counts,
        } => {
            let rows = mmcc_rows(
                *servers,
                *gamma,
                *rho_avg,
                *budget,
                rho1s,
                vs,
                source_counts,
            )?;
            let path = out_dir.join("fig6.csv");
            write_fig6(&path, &rows)?;
            Ok(ExperimentReport {
                files: vec![path],
                checks: mmcc_checks(&rows),
                data: ExperimentData::Mmcc(rows),
            })
        }
    }
}
