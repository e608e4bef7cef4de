//! Monte Carlo discrete-event simulation of a Poisson-sampled source.
//!
//! One trajectory of `X(t)` and one Poisson query stream drive all three
//! freshness processes at once, so FWS <= FWE <= FWC holds pathwise. Between
//! events every freshness process is constant, so time averages are
//! accumulated exactly per event interval.
//!
//! Replication `r` draws from `ChaCha8Rng::seed_from_u64(seed + r)`.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::ctmc::{stationary_distribution, Generator};
use crate::error::{Error, Result};
use crate::freshness::{Model, ProximityMatrix};

/// Fraction of each replication's horizon discarded as warmup.
pub const WARMUP_FRACTION: f64 = 0.05;
/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959963984540054;

/// What happened at an event epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Start,
    Query,
    Transition,
}

/// State of the sampled system right after an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epoch {
    pub time: f64,
    pub kind: EventKind,
    /// True source state `X(t)`.
    pub state: usize,
    /// Martingale estimate `X~(t)`: the last sampled state.
    pub estimate: usize,
    /// FWS flag: set by a query, cleared by the next source transition.
    pub sampled_fresh: bool,
}

impl Epoch {
    pub fn fwe(&self) -> f64 {
        if self.state == self.estimate {
            1.0
        } else {
            0.0
        }
    }

    pub fn fwc(&self, p: &ProximityMatrix) -> f64 {
        p.get(self.state, self.estimate)
    }

    pub fn fws(&self) -> f64 {
        if self.sampled_fresh {
            1.0
        } else {
            0.0
        }
    }
}

/// Event-by-event trajectory of `(X(t), X~(t), F_s(t))`.
///
/// The initial state is drawn from the stationary law and sampled at time 0.
pub struct SamplePath<R> {
    rng: R,
    lambda: f64,
    exit: Vec<f64>,
    jumps: Vec<WeightedIndex<f64>>,
    current: Epoch,
}

impl<R: Rng> SamplePath<R> {
    pub fn new(g: &Generator, initial: &[f64], lambda: f64, mut rng: R) -> Result<Self> {
        let k = g.num_states();
        if initial.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: initial.len(),
            });
        }
        let jumps = (0..k)
            .map(|i| {
                let row = (0..k).map(|j| if i == j { 0.0 } else { g.rate(i, j) });
                WeightedIndex::new(row).map_err(|e| Error::BadParameters(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let start = WeightedIndex::new(initial.iter().copied())
            .map_err(|e| Error::BadParameters(e.to_string()))?
            .sample(&mut rng);
        Ok(Self {
            rng,
            lambda,
            exit: g.exit_rates().to_vec(),
            jumps,
            current: Epoch {
                time: 0.0,
                kind: EventKind::Start,
                state: start,
                estimate: start,
                sampled_fresh: true,
            },
        })
    }

    pub fn current(&self) -> Epoch {
        self.current
    }

    /// Advances to the next query or source transition.
    pub fn advance(&mut self) -> Epoch {
        let x = self.current.state;
        let total = self.exit[x] + self.lambda;
        let dt: f64 = self.rng.sample::<f64, _>(Exp1) / total;
        let mut next = self.current;
        next.time += dt;
        if self.rng.random::<f64>() * total < self.lambda {
            next.kind = EventKind::Query;
            next.estimate = x;
            next.sampled_fresh = true;
        } else {
            next.kind = EventKind::Transition;
            next.state = self.jumps[x].sample(&mut self.rng);
            next.sampled_fresh = false;
        }
        self.current = next;
        next
    }
}

impl<R: Rng> Iterator for SamplePath<R> {
    type Item = Epoch;

    fn next(&mut self) -> Option<Epoch> {
        Some(self.advance())
    }
}

/// Time averages of one replication over `[warmup, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathAverages {
    pub fwe: f64,
    pub fwc: Option<f64>,
    pub fws: f64,
    /// Fraction of time spent in each source state.
    pub occupancy: Vec<f64>,
}

/// Mean and 95% half-width over independent replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub half_width_95: f64,
    pub horizon: f64,
    pub replications: usize,
    pub seed: u64,
}

impl SimEstimate {
    fn from_samples(samples: &[f64], horizon: f64, seed: u64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let half_width_95 = if samples.len() > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Z_95 * (var / n).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            half_width_95,
            horizon,
            replications: samples.len(),
            seed,
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.half_width_95 / Z_95
    }

    /// `|mean - target| <= half_width_95`.
    pub fn covers(&self, target: f64) -> bool {
        (self.mean - target).abs() <= self.half_width_95
    }

    /// `|mean - target| <= 3` standard errors.
    pub fn within_sigmas(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.std_error()
    }
}

/// Estimates for all models from shared trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedEstimate {
    pub fwe: SimEstimate,
    pub fwc: Option<SimEstimate>,
    pub fws: SimEstimate,
    /// Per-replication averages, in replication order.
    pub replications: Vec<PathAverages>,
}

impl SharedEstimate {
    pub fn get(&self, model: Model) -> Option<SimEstimate> {
        match model {
            Model::Fwe => Some(self.fwe),
            Model::Fwc => self.fwc,
            Model::Fws => Some(self.fws),
        }
    }
}

/// Runs one replication and integrates every freshness process exactly.
pub fn simulate_replication(
    g: &Generator,
    initial: &[f64],
    lambda: f64,
    p: Option<&ProximityMatrix>,
    horizon: f64,
    seed: u64,
) -> Result<PathAverages> {
    let mut path = SamplePath::new(g, initial, lambda, ChaCha8Rng::seed_from_u64(seed))?;
    let warmup = WARMUP_FRACTION * horizon;
    let span = horizon - warmup;
    let (mut fwe, mut fwc, mut fws) = (0.0, 0.0, 0.0);
    let mut occupancy = vec![0.0; g.num_states()];
    let mut epoch = path.current();
    loop {
        let next = path.advance();
        let lo = epoch.time.max(warmup);
        let hi = next.time.min(horizon);
        if hi > lo {
            let dt = hi - lo;
            fwe += dt * epoch.fwe();
            fws += dt * epoch.fws();
            if let Some(p) = p {
                fwc += dt * epoch.fwc(p);
            }
            occupancy[epoch.state] += dt;
        }
        if next.time >= horizon {
            break;
        }
        epoch = next;
    }
    occupancy.iter_mut().for_each(|o| *o /= span);
    Ok(PathAverages {
        fwe: fwe / span,
        fwc: p.map(|_| fwc / span),
        fws: fws / span,
        occupancy,
    })
}

fn check_params(
    g: &Generator,
    lambda: f64,
    p: Option<&ProximityMatrix>,
    horizon: f64,
    replications: usize,
) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveParam(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::NonPositiveParam(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if replications == 0 {
        return Err(Error::NonPositiveParam(
            "at least one replication is required".into(),
        ));
    }
    if let Some(p) = p {
        if p.num_states() != g.num_states() {
            return Err(Error::DimensionMismatch {
                expected: g.num_states(),
                actual: p.num_states(),
            });
        }
    }
    Ok(())
}

/// Simulates FWE, FWS and (when `p` is given) FWC on shared randomness.
///
/// Replications run in parallel; results are bit-identical for a fixed seed.
pub fn simulate_shared(
    g: &Generator,
    lambda: f64,
    p: Option<&ProximityMatrix>,
    horizon: f64,
    replications: usize,
    seed: u64,
) -> Result<SharedEstimate> {
    check_params(g, lambda, p, horizon, replications)?;
    let pi = stationary_distribution(g)?;
    let runs = (0..replications)
        .into_par_iter()
        .map(|r| {
            simulate_replication(
                g,
                pi.as_slice(),
                lambda,
                p,
                horizon,
                seed.wrapping_add(r as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let collect = |f: &dyn Fn(&PathAverages) -> f64| -> SimEstimate {
        let samples: Vec<f64> = runs.iter().map(f).collect();
        SimEstimate::from_samples(&samples, horizon, seed)
    };
    let fwe = collect(&|r| r.fwe);
    let fws = collect(&|r| r.fws);
    let fwc = p.map(|_| collect(&|r| r.fwc.unwrap_or_default()));
    Ok(SharedEstimate {
        fwe,
        fwc,
        fws,
        replications: runs,
    })
}

/// Time-average freshness estimate for one model.
pub fn simulate_freshness(
    g: &Generator,
    lambda: f64,
    model: Model,
    p: Option<&ProximityMatrix>,
    horizon: f64,
    replications: usize,
    seed: u64,
) -> Result<SimEstimate> {
    if model == Model::Fwc && p.is_none() {
        return Err(Error::MissingProximity);
    }
    let p = if model == Model::Fwc { p } else { None };
    let shared = simulate_shared(g, lambda, p, horizon, replications, seed)?;
    Ok(shared.get(model).expect("proximity supplied for FWC"))
}
