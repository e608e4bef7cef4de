//! Mean freshness of a Poisson-sampled source under the martingale estimator.
//!
//! All three freshness models share one analytic shape,
//!
//! ```text
//! f(lambda) = c_inf - sum_j a_j / (lambda + d_j),     d_j > 0,
//! ```
//!
//! captured by [`RationalFreshness`]. For FWE and FWS every `a_j` is positive,
//! which makes `f` increasing and strictly concave. FWC coefficients may be of
//! either sign, so concavity is checked numerically and recorded on the value.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ctmc::{Generator, SpectralForm, StationaryDist};
use crate::error::{Error, Result};

/// Poles closer than this are merged into a single term.
pub const MERGE_TOL: f64 = 1e-12;
/// Terms with `|a_j|` below this are dropped.
pub const PRUNE_TOL: f64 = 1e-15;
/// Number of log-spaced points used for the concavity probe.
pub const CONCAVITY_POINTS: usize = 64;
/// Concavity probe range `[lo, hi]` for `lambda`.
pub const CONCAVITY_RANGE: (f64, f64) = (1e-4, 1e4);

/// Freshness model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Model {
    /// Fresh when the estimate equals the source state.
    Fwe,
    /// Freshness `p_{X, X~}` read from a proximity matrix.
    Fwc,
    /// Fresh from a sample until the next source transition.
    Fws,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Fwe, Model::Fwc, Model::Fws];

    pub fn as_str(self) -> &'static str {
        match self {
            Model::Fwe => "FWE",
            Model::Fwc => "FWC",
            Model::Fws => "FWS",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FWE" => Ok(Model::Fwe),
            "FWC" => Ok(Model::Fwc),
            "FWS" => Ok(Model::Fws),
            _ => Err(Error::BadParameters(format!(
                "unknown freshness model {s:?}"
            ))),
        }
    }
}

/// Proximity scores `p_ij` between true state `i` and estimate `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityMatrix {
    p: DMatrix<f64>,
}

impl ProximityMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidProximity(
                "matrix must be square and nonempty".into(),
            ));
        }
        let p = DMatrix::from_fn(k, k, |i, j| rows[i][j]);
        for i in 0..k {
            for j in 0..k {
                let v = p[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidProximity(format!(
                        "p[{i}][{j}] = {v} outside [0, 1]"
                    )));
                }
            }
            if p[(i, i)] != 1.0 {
                return Err(Error::InvalidProximity(format!(
                    "diagonal entry p[{i}][{i}] = {} must be 1",
                    p[(i, i)]
                )));
            }
        }
        Ok(Self { p })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            p: DMatrix::identity(k, k),
        }
    }

    /// `p_ij = 1` when `|i - j| <= v`, zero otherwise.
    pub fn band(k: usize, v: usize) -> Self {
        Self {
            p: DMatrix::from_fn(k, k, |i, j| if i.abs_diff(j) <= v { 1.0 } else { 0.0 }),
        }
    }

    pub fn num_states(&self) -> usize {
        self.p.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.num_states())
            .map(|i| self.p.row(i).iter().copied().collect())
            .collect()
    }
}

/// Banded 0/1 proximity matrix; `v >= K - 1` yields all ones.
pub fn proximity_band(k: usize, v: usize) -> ProximityMatrix {
    ProximityMatrix::band(k, v)
}

/// One `a / (lambda + d)` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub a: f64,
    pub d: f64,
}

/// `f(lambda) = c_inf - sum_j a_j / (lambda + d_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFreshness {
    model: Model,
    cinf: f64,
    terms: Vec<Term>,
    f0: f64,
    concavity_verified: bool,
}

impl RationalFreshness {
    /// Builds a normalized rational form: terms sorted by `d`, near-equal
    /// poles merged and numerically zero coefficients removed.
    pub fn new(
        model: Model,
        cinf: f64,
        raw: impl IntoIterator<Item = Term>,
        f0: f64,
    ) -> Result<Self> {
        let mut raw: Vec<Term> = raw.into_iter().collect();
        if let Some(t) = raw.iter().find(|t| !(t.d > 0.0) || !t.a.is_finite()) {
            return Err(Error::NonPositiveRate(format!(
                "rational term needs finite a and d > 0, got a = {}, d = {}",
                t.a, t.d
            )));
        }
        raw.sort_by(|x, y| x.d.total_cmp(&y.d));
        let mut terms: Vec<Term> = Vec::with_capacity(raw.len());
        for t in raw {
            match terms.last_mut() {
                Some(last) if (t.d - last.d).abs() < MERGE_TOL => last.a += t.a,
                _ => terms.push(t),
            }
        }
        terms.retain(|t| t.a.abs() >= PRUNE_TOL);
        let mut rf = Self {
            model,
            cinf,
            terms,
            f0,
            concavity_verified: false,
        };
        rf.concavity_verified = rf.probe_concavity();
        Ok(rf)
    }

    pub fn model(&self) -> Model {
        self.model
    }

    /// Value as `lambda -> infinity`.
    pub fn cinf(&self) -> f64 {
        self.cinf
    }

    /// Value as `lambda -> 0+`.
    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Whether `f'' <= 0` held on the probe grid.
    pub fn concavity_verified(&self) -> bool {
        self.concavity_verified
    }

    /// Smallest pole offset `d*`, if any term is present.
    pub fn min_pole(&self) -> Option<f64> {
        self.terms.first().map(|t| t.d)
    }

    /// `f(lambda)` for `lambda >= 0`.
    pub fn eval(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return self.f0;
        }
        self.cinf - self.terms.iter().map(|t| t.a / (lambda + t.d)).sum::<f64>()
    }

    /// `f'(lambda) = sum_j a_j / (lambda + d_j)^2`, defined above `-d*`.
    pub fn eval_derivative(&self, lambda: f64) -> Result<f64> {
        if let Some(d) = self.min_pole() {
            if !(lambda > -d) {
                return Err(Error::PoleViolation { lambda, bound: -d });
            }
        }
        Ok(self.derivative_unchecked(lambda))
    }

    pub(crate) fn derivative_unchecked(&self, lambda: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let x = lambda + t.d;
                t.a / (x * x)
            })
            .sum()
    }

    /// `f''(lambda) = -2 sum_j a_j / (lambda + d_j)^3`.
    pub fn second_derivative(&self, lambda: f64) -> f64 {
        -2.0 * self
            .terms
            .iter()
            .map(|t| {
                let x = lambda + t.d;
                t.a / (x * x * x)
            })
            .sum::<f64>()
    }

    fn probe_concavity(&self) -> bool {
        if self.terms.iter().all(|t| t.a > 0.0) {
            return true;
        }
        let (lo, hi) = CONCAVITY_RANGE;
        let step = (hi / lo).ln() / (CONCAVITY_POINTS - 1) as f64;
        (0..CONCAVITY_POINTS).all(|i| {
            let lambda = lo * (step * i as f64).exp();
            let scale: f64 = self
                .terms
                .iter()
                .map(|t| t.a.abs() / (lambda + t.d).powi(3))
                .sum();
            self.second_derivative(lambda) <= 1e-12 * scale
        })
    }
}

/// `f(lambda) = lambda pi diag[(lambda I - Q)^{-1}]`, valid for any irreducible source.
pub fn fwe_mean_general(g: &Generator, pi: &StationaryDist, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveRate(format!(
            "sampling rate must be positive and finite, got {lambda}"
        )));
    }
    let k = g.num_states();
    let resolvent = DMatrix::<f64>::identity(k, k) * lambda - g.matrix();
    let inv = resolvent
        .try_inverse()
        .ok_or(Error::SingularResolvent { lambda })?;
    Ok(lambda * (0..k).map(|i| pi[i] * inv[(i, i)]).sum::<f64>())
}

/// FWE rational form of a reversible source: `a_j = d_j sum_i pi_i^2 t_ij^2`.
pub fn fwe_rational(sf: &SpectralForm) -> RationalFreshness {
    let pi = sf.stationary();
    let t = sf.right();
    let terms = sf.decay_rates().iter().enumerate().map(|(j, &d)| {
        let b: f64 = (0..pi.len()).map(|i| (pi[i] * t[(i, j)]).powi(2)).sum();
        Term { a: b * d, d }
    });
    let f0 = pi.as_slice().iter().map(|p| p * p).sum();
    RationalFreshness::new(Model::Fwe, 1.0, terms, f0).expect("decay rates are positive")
}

/// FWC rational form: `b_j = T~(j,:) sum_i pi_i t_ij P(:,i)`, `a_j = b_j d_j`.
pub fn fwc_rational(sf: &SpectralForm, p: &ProximityMatrix) -> Result<RationalFreshness> {
    let k = sf.num_states();
    if p.num_states() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: p.num_states(),
        });
    }
    let pi = sf.stationary();
    let t = sf.right();
    let left = sf.left();
    let pm = p.matrix();
    let terms: Vec<Term> = sf
        .decay_rates()
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            // sum_i pi_i t_ij (T~(j,:) . P(:,i))
            let b: f64 = (0..k)
                .map(|i| {
                    let proj: f64 = (0..k).map(|m| left[(j, m)] * pm[(m, i)]).sum();
                    pi[i] * t[(i, j)] * proj
                })
                .sum();
            Term { a: b * d, d }
        })
        .collect();
    let f0 = (0..k)
        .map(|m| pi[m] * (0..k).map(|i| pi[i] * pm[(m, i)]).sum::<f64>())
        .sum();
    RationalFreshness::new(Model::Fwc, 1.0, terms, f0)
}

/// FWS rational form, valid for any irreducible source: `a_i = pi_i sigma_i`, `d_i = sigma_i`.
pub fn fws_rational(g: &Generator, pi: &StationaryDist) -> RationalFreshness {
    let terms = g
        .exit_rates()
        .iter()
        .zip(pi.as_slice())
        .map(|(&s, &p)| Term { a: p * s, d: s });
    RationalFreshness::new(Model::Fws, 1.0, terms, 0.0).expect("exit rates are positive")
}

/// Free-function form of [`RationalFreshness::eval`].
pub fn eval(rf: &RationalFreshness, lambda: f64) -> f64 {
    rf.eval(lambda)
}

/// Free-function form of [`RationalFreshness::eval_derivative`].
pub fn eval_derivative(rf: &RationalFreshness, lambda: f64) -> Result<f64> {
    rf.eval_derivative(lambda)
}
