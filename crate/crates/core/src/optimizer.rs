//! Water-filling allocation of a total sampling budget across sources.
//!
//! Maximizes `sum_n w_n f_n(lambda_n)` subject to `sum_n lambda_n <= budget`
//! and `lambda_n >= 0`. Each `f_n` is increasing and concave, so the optimum
//! equalizes the weighted marginal freshness `w_n f_n'(lambda_n)` at a common
//! water level `mu` across the sources that receive a positive rate.
//!
//! The active-set loop:
//! 1. start with every source active;
//! 2. find `mu` such that the per-source solutions of `w_n f_n'(lambda_n) = mu`
//!    sum to the budget over the active set;
//! 3. stop if every active rate is positive;
//! 4. otherwise deactivate all sources with a nonpositive rate and repeat.

use crate::ctmc::{
    spectral_decomposition, stationary_distribution, transition_intensity, Generator,
    StationaryDist,
};
use crate::error::{Error, Result};
use crate::freshness::{
    fwc_rational, fwe_rational, fws_rational, Model, ProximityMatrix, RationalFreshness,
};
use crate::scenarios::system_freshness;

/// Relative residual target of the inner solve.
pub const INNER_TOL: f64 = 1e-12;
/// Budget residual target of the outer solve, relative to the budget.
pub const OUTER_TOL: f64 = 1e-9;
/// Largest source count accepted by [`grid_oracle`].
pub const GRID_MAX_SOURCES: usize = 4;

/// One monitored source with its freshness model resolved to closed form.
#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub id: String,
    pub generator: Generator,
    pub weight: f64,
    pub model: Model,
    pub proximity: Option<ProximityMatrix>,
    pub stationary: StationaryDist,
    /// Transition intensity `r = sum_i pi_i sigma_i`.
    pub intensity: f64,
    pub rf: RationalFreshness,
}

impl SourceSpec {
    /// Resolves the source's rational freshness. FWE and FWC need a
    /// reversible generator; FWS accepts any irreducible one.
    pub fn new(
        id: impl Into<String>,
        generator: Generator,
        weight: f64,
        model: Model,
        proximity: Option<ProximityMatrix>,
    ) -> Result<Self> {
        let id = id.into();
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::BadParameters(format!(
                "source {id}: weight must be positive, got {weight}"
            )));
        }
        let stationary = stationary_distribution(&generator)?;
        let rf = match model {
            Model::Fwe => fwe_rational(&spectral_decomposition(&generator, &stationary)?),
            Model::Fwc => {
                let p = proximity.as_ref().ok_or(Error::MissingProximity)?;
                fwc_rational(&spectral_decomposition(&generator, &stationary)?, p)?
            }
            Model::Fws => fws_rational(&generator, &stationary),
        };
        let intensity = transition_intensity(&generator, &stationary);
        Ok(Self {
            id,
            generator,
            weight,
            model,
            proximity,
            stationary,
            intensity,
            rf,
        })
    }

    pub fn num_states(&self) -> usize {
        self.generator.num_states()
    }
}

/// Rescales weights to sum to one.
pub fn normalize_weights(sources: &mut [SourceSpec]) {
    let total: f64 = sources.iter().map(|s| s.weight).sum();
    if total > 0.0 {
        sources.iter_mut().for_each(|s| s.weight /= total);
    }
}

/// Output of [`water_fill`].
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub lambdas: Vec<f64>,
    /// Water level: the multiplier of the budget constraint.
    pub mu: f64,
    pub active: Vec<bool>,
    pub system_freshness: f64,
    /// Number of deactivation rounds performed.
    pub iterations: usize,
}

impl AllocationResult {
    pub fn total_rate(&self) -> f64 {
        self.lambdas.iter().sum()
    }
}

/// How step 2 of the active-set loop is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerStep {
    /// Nested bisection: outer on `mu`, inner on each `lambda_n`.
    #[default]
    Bisection,
    /// Closed form for two-state FWE sources, see [`two_state_single_shot`].
    SingleShot,
}

/// Solves `w f'(lambda) = mu` for `lambda` in `(-d*, inf)`.
///
/// Negative solutions are returned as-is; the caller decides whether to
/// deactivate the source. A source with no rational terms has `f' = 0` and
/// yields negative infinity.
pub fn solve_inner(rf: &RationalFreshness, w: f64, mu: f64) -> Result<f64> {
    if !rf.concavity_verified() {
        return Err(Error::NotConcave(format!(
            "{} freshness is not verified concave",
            rf.model()
        )));
    }
    if !(mu > 0.0) || !(w > 0.0) {
        return Err(Error::NonPositiveParam(format!(
            "water level and weight must be positive, got mu = {mu}, w = {w}"
        )));
    }
    let Some(d_star) = rf.min_pole() else {
        return Ok(f64::NEG_INFINITY);
    };
    let excess = |x: f64| w * rf.derivative_unchecked(x) - mu;

    let at_zero = excess(0.0);
    if at_zero == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = if at_zero > 0.0 {
        let (mut lo, mut hi) = (0.0, d_star.max(1.0));
        while excess(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NonPositiveParam(format!(
                    "no finite root for mu = {mu}"
                )));
            }
        }
        (lo, hi)
    } else {
        // `lo` sits on the pole, where the excess is treated as +inf.
        (-d_star, 0.0)
    };
    for _ in 0..2048 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let e = excess(mid);
        if e == 0.0 {
            return Ok(mid);
        }
        if e > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
    }
    if lo <= -d_star {
        return Ok(hi);
    }
    Ok(if excess(lo).abs() <= excess(hi).abs() {
        lo
    } else {
        hi
    })
}

fn active_rates(sources: &[SourceSpec], active: &[bool], mu: f64) -> Result<(f64, Vec<f64>)> {
    let mut rates = vec![0.0; sources.len()];
    let mut sum = 0.0;
    for (n, s) in sources.iter().enumerate() {
        if active[n] {
            rates[n] = solve_inner(&s.rf, s.weight, mu)?;
            sum += rates[n];
        }
    }
    Ok((sum, rates))
}

/// Step 2 by nested bisection: geometric bisection on `mu` until the active
/// rates sum to the budget.
fn step_two_bisection(
    sources: &[SourceSpec],
    active: &[bool],
    budget: f64,
) -> Result<(f64, Vec<f64>)> {
    let top = sources
        .iter()
        .zip(active)
        .filter(|(_, &a)| a)
        .map(|(s, _)| s.weight * s.rf.derivative_unchecked(0.0))
        .fold(0.0, f64::max);
    // At `hi` every active rate is negative, so the sum is below the budget.
    let mut hi = top + 1.0;
    let mut lo = 1.0f64.min(0.5 * hi);
    loop {
        let (sum, rates) = active_rates(sources, active, lo)?;
        if sum > budget {
            break;
        }
        if (sum - budget).abs() <= OUTER_TOL * 1e-4 * budget {
            return Ok((lo, rates));
        }
        hi = lo;
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::BadParameters("water level underflow".into()));
        }
    }

    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for _ in 0..400 {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        let (sum, rates) = active_rates(sources, active, mid)?;
        let residual = (sum - budget).abs();
        if best.as_ref().is_none_or(|b| residual < b.0) {
            best = Some((residual, mid, rates));
        }
        // Iterate well past the required tolerance so rates agree across
        // solution paths to ~1e-10.
        if residual <= OUTER_TOL * 1e-4 * budget {
            break;
        }
        if sum > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (residual, mu, rates) = best.expect("bisection ran at least once");
    if residual > OUTER_TOL * budget {
        return Err(Error::SingularSystem(format!(
            "outer bisection stalled with budget residual {residual:e}"
        )));
    }
    Ok((mu, rates))
}

/// Closed-form step 2 for two-state FWE sources:
/// `mu = (sum sqrt(w a I) / (budget + sum d I))^2`, `lambda_n = sqrt(w a / mu) - d`.
pub fn two_state_single_shot(
    sources: &[SourceSpec],
    active: &[bool],
    budget: f64,
) -> Result<(f64, Vec<f64>)> {
    if active.len() != sources.len() {
        return Err(Error::DimensionMismatch {
            expected: sources.len(),
            actual: active.len(),
        });
    }
    let mut num = 0.0;
    let mut den = budget;
    for (s, &on) in sources.iter().zip(active) {
        if s.model != Model::Fwe || s.num_states() != 2 || s.rf.terms().len() != 1 {
            return Err(Error::NotTwoState(format!(
                "source {} is a {}-state {} source",
                s.id,
                s.num_states(),
                s.model
            )));
        }
        if on {
            let t = s.rf.terms()[0];
            num += (s.weight * t.a).sqrt();
            den += t.d;
        }
    }
    if num == 0.0 {
        return Err(Error::BadParameters("no active source".into()));
    }
    let mu = (num / den).powi(2);
    let rates = sources
        .iter()
        .zip(active)
        .map(|(s, &on)| {
            if on {
                let t = s.rf.terms()[0];
                (s.weight * t.a / mu).sqrt() - t.d
            } else {
                0.0
            }
        })
        .collect();
    Ok((mu, rates))
}

/// Optimal allocation with the bisection inner step.
pub fn water_fill(sources: &[SourceSpec], budget: f64) -> Result<AllocationResult> {
    water_fill_with(sources, budget, InnerStep::Bisection)
}

pub fn water_fill_with(
    sources: &[SourceSpec],
    budget: f64,
    step: InnerStep,
) -> Result<AllocationResult> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::InfeasibleBudget(budget));
    }
    if sources.is_empty() {
        return Err(Error::BadParameters("no sources to allocate".into()));
    }
    if let Some(s) = sources.iter().find(|s| !s.rf.concavity_verified()) {
        return Err(Error::NotConcave(format!(
            "source {}: {} freshness is not concave on the probe grid",
            s.id, s.model
        )));
    }

    // Constant freshness functions never benefit from sampling.
    let mut active: Vec<bool> = sources.iter().map(|s| !s.rf.terms().is_empty()).collect();
    let mut lambdas = vec![0.0; sources.len()];
    let mut mu = 0.0;
    let mut rounds = 0;
    while active.iter().any(|&a| a) {
        let (level, rates) = match step {
            InnerStep::Bisection => step_two_bisection(sources, &active, budget)?,
            InnerStep::SingleShot => two_state_single_shot(sources, &active, budget)?,
        };
        let mut deactivated = false;
        for (n, &r) in rates.iter().enumerate() {
            if active[n] && r <= 0.0 {
                active[n] = false;
                deactivated = true;
            }
        }
        if !deactivated {
            lambdas = rates;
            mu = level;
            break;
        }
        rounds += 1;
    }
    let system_freshness = system_freshness(sources, &lambdas);
    Ok(AllocationResult {
        lambdas,
        mu,
        active,
        system_freshness,
        iterations: rounds,
    })
}

/// Result of [`kkt_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub passed: bool,
    /// Worst `|w f'(lambda) - mu|` over active sources.
    pub max_stationarity: f64,
    /// Worst `w f'(0) - mu` over inactive sources (positive means violated).
    pub max_inactive_excess: f64,
    /// `sum lambda - budget`.
    pub budget_residual: f64,
    pub failures: Vec<String>,
}

/// Verifies the optimality conditions of an allocation.
pub fn kkt_check(
    sources: &[SourceSpec],
    result: &AllocationResult,
    budget: f64,
    tol: f64,
) -> KktReport {
    let mut failures = Vec::new();
    let mut max_stationarity = 0.0f64;
    let mut max_inactive_excess = f64::NEG_INFINITY;
    for (n, s) in sources.iter().enumerate() {
        let lambda = result.lambdas[n];
        let marginal = s.weight * s.rf.derivative_unchecked(lambda);
        if result.active[n] {
            let gap = (marginal - result.mu).abs();
            max_stationarity = max_stationarity.max(gap);
            if gap > tol {
                failures.push(format!("source {}: |w f'(lambda) - mu| = {gap:e}", s.id));
            }
            if lambda < 0.0 {
                failures.push(format!("source {}: negative rate {lambda}", s.id));
            }
        } else {
            let excess = marginal - result.mu;
            max_inactive_excess = max_inactive_excess.max(excess);
            if lambda != 0.0 {
                failures.push(format!("source {}: inactive with rate {lambda}", s.id));
            }
            if excess > tol {
                failures.push(format!(
                    "source {}: inactive but w f'(0) exceeds mu by {excess:e}",
                    s.id
                ));
            }
        }
    }
    let budget_residual = result.total_rate() - budget;
    if budget_residual.abs() > tol * budget.max(1.0) {
        failures.push(format!("budget residual {budget_residual:e}"));
    }
    KktReport {
        passed: failures.is_empty(),
        max_stationarity,
        max_inactive_excess,
        budget_residual,
        failures,
    }
}

/// Exhaustive search over the lattice `{lambda : sum = budget, lambda_n = k_n step}`.
pub fn grid_oracle(sources: &[SourceSpec], budget: f64, step: f64) -> Result<AllocationResult> {
    let n = sources.len();
    if n > GRID_MAX_SOURCES {
        return Err(Error::TooManySources {
            count: n,
            max: GRID_MAX_SOURCES,
        });
    }
    if n == 0 {
        return Err(Error::BadParameters("no sources to allocate".into()));
    }
    if !(budget > 0.0) {
        return Err(Error::InfeasibleBudget(budget));
    }
    if !(step > 0.0) || step > budget {
        return Err(Error::BadParameters(format!(
            "grid step {step} must lie in (0, budget]"
        )));
    }
    let cells = (budget / step).round() as usize;
    let h = budget / cells as f64;
    let tables: Vec<Vec<f64>> = sources
        .iter()
        .map(|s| {
            (0..=cells)
                .map(|k| s.weight * s.rf.eval(k as f64 * h))
                .collect()
        })
        .collect();

    let mut counts = vec![0usize; n];
    let mut best = (f64::NEG_INFINITY, vec![0usize; n]);
    enumerate(&tables, cells, 0, 0.0, &mut counts, &mut best);

    let lambdas: Vec<f64> = best.1.iter().map(|&k| k as f64 * h).collect();
    let active: Vec<bool> = lambdas.iter().map(|&l| l > 0.0).collect();
    let marginals: Vec<f64> = sources
        .iter()
        .zip(&lambdas)
        .zip(&active)
        .filter(|(_, &a)| a)
        .map(|((s, &l), _)| s.weight * s.rf.derivative_unchecked(l))
        .collect();
    let mu = marginals.iter().sum::<f64>() / marginals.len().max(1) as f64;
    Ok(AllocationResult {
        system_freshness: system_freshness(sources, &lambdas),
        lambdas,
        mu,
        active,
        iterations: 0,
    })
}

fn enumerate(
    tables: &[Vec<f64>],
    remaining: usize,
    idx: usize,
    acc: f64,
    counts: &mut [usize],
    best: &mut (f64, Vec<usize>),
) {
    if idx + 1 == tables.len() {
        counts[idx] = remaining;
        let value = acc + tables[idx][remaining];
        if value > best.0 {
            best.0 = value;
            best.1.copy_from_slice(counts);
        }
        return;
    }
    for k in 0..=remaining {
        counts[idx] = k;
        enumerate(
            tables,
            remaining - k,
            idx + 1,
            acc + tables[idx][k],
            counts,
            best,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freshness::Term;

    fn two_state_source(id: &str, alpha: f64, beta: f64, weight: f64, model: Model) -> SourceSpec {
        let g = Generator::new(&[vec![-alpha, alpha], vec![beta, -beta]]).unwrap();
        SourceSpec::new(id, g, weight, model, None).unwrap()
    }

    fn single(a: f64, d: f64) -> RationalFreshness {
        RationalFreshness::new(Model::Fwe, 1.0, [Term { a, d }], 1.0 - a / d).unwrap()
    }

    #[test]
    fn inner_solve_examples() {
        let rf = single(1.0, 2.0);
        assert!(solve_inner(&rf, 1.0, 0.25).unwrap().abs() < 1e-12);
        assert!((solve_inner(&rf, 1.0, 1.0).unwrap() + 1.0).abs() < 1e-12);
        assert!(solve_inner(&rf, 1.0, 1e-12).unwrap() > 1e5);
        for mu in [1e-6, 0.01, 0.25, 3.0, 100.0] {
            let lambda = solve_inner(&rf, 0.7, mu).unwrap();
            let residual = (0.7 * rf.eval_derivative(lambda).unwrap() - mu).abs();
            assert!(residual <= INNER_TOL * mu, "mu {mu}: residual {residual:e}");
            let exact = (0.7 / mu).sqrt() - 2.0;
            assert!((lambda - exact).abs() <= 1e-9 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn inner_solve_rejects_unverified_concavity() {
        let rf = RationalFreshness::new(
            Model::Fwc,
            1.0,
            [Term { a: 0.1, d: 0.1 }, Term { a: -0.5, d: 10.0 }],
            0.0,
        )
        .unwrap();
        assert!(matches!(
            solve_inner(&rf, 1.0, 0.1).unwrap_err(),
            Error::NotConcave(_)
        ));
    }

    #[test]
    fn single_source_takes_whole_budget() {
        let s = vec![two_state_source("a", 1.0, 2.0, 1.0, Model::Fwe)];
        let res = water_fill(&s, 5.0).unwrap();
        assert!((res.lambdas[0] - 5.0).abs() < 1e-9);
        assert_eq!(res.iterations, 0);
        assert!(res.active[0]);
    }

    #[test]
    fn identical_sources_split_evenly() {
        let s = vec![
            two_state_source("a", 1.0, 2.0, 0.5, Model::Fws),
            two_state_source("b", 1.0, 2.0, 0.5, Model::Fws),
        ];
        let res = water_fill(&s, 3.0).unwrap();
        assert_eq!(res.lambdas[0], res.lambdas[1]);
        assert!((res.lambdas[0] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn single_shot_examples() {
        // a = 2 alpha beta / (alpha + beta) = 1 and d = 2 for alpha = beta = 1.
        let s = vec![two_state_source("a", 1.0, 1.0, 1.0, Model::Fwe)];
        let (mu, rates) = two_state_single_shot(&s, &[true], 2.0).unwrap();
        assert!((mu - 1.0 / 16.0).abs() < 1e-15);
        assert!((rates[0] - 2.0).abs() < 1e-12);

        let s = vec![
            two_state_source("a", 1.0, 1.0, 0.3, Model::Fwe),
            two_state_source("b", 4.0, 1.0, 0.3, Model::Fwe),
            two_state_source("c", 0.2, 9.0, 0.4, Model::Fwe),
        ];
        let (_, rates) = two_state_single_shot(&s, &[false, true, false], 7.0).unwrap();
        assert!((rates[1] - 7.0).abs() < 1e-12);
        assert_eq!(rates[0], 0.0);

        let fws = vec![two_state_source("a", 1.0, 1.0, 1.0, Model::Fws)];
        assert!(matches!(
            two_state_single_shot(&fws, &[true], 1.0).unwrap_err(),
            Error::NotTwoState(_)
        ));
    }

    #[test]
    fn single_shot_and_bisection_agree() {
        let s: Vec<SourceSpec> = (0..6)
            .map(|n| {
                let r = 0.2 + 3.0 * n as f64;
                two_state_source(&n.to_string(), r / 0.6, r / 1.4, 1.0 / 6.0, Model::Fwe)
            })
            .collect();
        for budget in [0.5, 5.0, 60.0] {
            let a = water_fill_with(&s, budget, InnerStep::Bisection).unwrap();
            let b = water_fill_with(&s, budget, InnerStep::SingleShot).unwrap();
            assert_eq!(a.active, b.active);
            for (x, y) in a.lambdas.iter().zip(&b.lambdas) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn infeasible_budget() {
        let s = vec![two_state_source("a", 1.0, 2.0, 1.0, Model::Fwe)];
        assert!(matches!(
            water_fill(&s, 0.0).unwrap_err(),
            Error::InfeasibleBudget(_)
        ));
        assert!(matches!(
            water_fill(&s, -1.0).unwrap_err(),
            Error::InfeasibleBudget(_)
        ));
    }

    #[test]
    fn kkt_report_flags_violations() {
        let mut s = vec![
            two_state_source("slow", 0.05, 0.1, 0.5, Model::Fwe),
            two_state_source("fast", 40.0, 60.0, 0.5, Model::Fwe),
        ];
        let res = water_fill(&s, 0.5).unwrap();
        assert_eq!(res.active, vec![true, false]);
        let report = kkt_check(&s, &res, 0.5, 1e-6);
        assert!(report.passed, "{:?}", report.failures);

        s[1].weight = 1e6;
        let report = kkt_check(&s, &res, 0.5, 1e-6);
        assert!(!report.passed);
        assert!(report.failures.iter().any(|f| f.contains("fast")));
    }

    #[test]
    fn perturbation_lowers_freshness() {
        let s = vec![
            two_state_source("a", 1.0, 2.0, 0.2, Model::Fwe),
            two_state_source("b", 0.4, 0.3, 0.5, Model::Fwe),
            two_state_source("c", 3.0, 5.0, 0.3, Model::Fws),
        ];
        let res = water_fill(&s, 4.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i == j || res.lambdas[j] < 0.01 {
                    continue;
                }
                let mut moved = res.lambdas.clone();
                moved[i] += 0.01;
                moved[j] -= 0.01;
                assert!(system_freshness(&s, &moved) < res.system_freshness);
            }
        }
    }

    #[test]
    fn grid_oracle_basics() {
        let one = vec![two_state_source("a", 1.0, 2.0, 1.0, Model::Fwe)];
        assert!((grid_oracle(&one, 3.0, 0.01).unwrap().lambdas[0] - 3.0).abs() < 1e-12);

        let two = vec![
            two_state_source("a", 1.0, 2.0, 0.5, Model::Fwe),
            two_state_source("b", 1.0, 2.0, 0.5, Model::Fwe),
        ];
        let res = grid_oracle(&two, 2.0, 0.01).unwrap();
        assert!((res.lambdas[0] - 1.0).abs() <= 0.01);

        let five: Vec<SourceSpec> = (0..5)
            .map(|i| two_state_source(&i.to_string(), 1.0, 2.0, 0.2, Model::Fwe))
            .collect();
        assert!(matches!(
            grid_oracle(&five, 1.0, 0.1).unwrap_err(),
            Error::TooManySources { count: 5, .. }
        ));
    }

    #[test]
    fn heterogeneous_intensities_match_grid() {
        // Stationary law (0.3, 0.7) with intensity r: alpha = r / 0.6, beta = r / 1.4.
        let s: Vec<SourceSpec> = [0.01, 5.0, 20.0]
            .iter()
            .map(|&r| two_state_source(&r.to_string(), r / 0.6, r / 1.4, 1.0 / 3.0, Model::Fwe))
            .collect();
        let budget = 0.1 * 25.01;
        let wf = water_fill(&s, budget).unwrap();
        assert_eq!(wf.lambdas[2], 0.0);
        assert!(!wf.active[2]);
        // A lattice of step h only resolves rates to h / 2, so the absolute
        // 1e-3 comparison uses a finer lattice than the 1e-3 budget one.
        for (step, tol) in [(1e-3 * budget, 1e-3 * budget), (2e-4 * budget, 1e-3)] {
            let grid = grid_oracle(&s, budget, step).unwrap();
            assert!(wf.system_freshness >= grid.system_freshness - 1e-12);
            for (a, b) in wf.lambdas.iter().zip(&grid.lambdas) {
                assert!((a - b).abs() <= tol, "step {step}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_nonpositive_weight() {
        let g = Generator::new(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        assert!(SourceSpec::new("z", g, 0.0, Model::Fwe, None).is_err());
    }

    #[test]
    fn fwc_requires_proximity() {
        let g = Generator::new(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        assert!(matches!(
            SourceSpec::new("z", g, 1.0, Model::Fwc, None).unwrap_err(),
            Error::MissingProximity
        ));
    }
}
