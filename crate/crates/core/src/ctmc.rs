//! Finite-state irreducible CTMC generators.
//!
//! A [`Generator`] is validated once at construction; everything downstream
//! (stationary law, reversibility test, spectral form) assumes its invariants:
//! nonnegative off-diagonal rates, zero row sums and a strongly connected
//! positive-rate graph.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest tolerated gap between a supplied diagonal entry and the negated
/// off-diagonal row sum, relative to `max(1, sigma_i)`.
pub const DIAGONAL_TOL: f64 = 1e-9;

/// Tolerance used by [`spectral_decomposition`] for the detailed-balance test.
pub const REVERSIBILITY_TOL: f64 = 1e-9;

/// Validated infinitesimal generator of an irreducible CTMC.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    q: DMatrix<f64>,
    sigma: Vec<f64>,
}

impl Generator {
    /// Validates a dense row-major rate matrix.
    ///
    /// The diagonal is recomputed from the off-diagonal rates; supplied
    /// diagonal entries only have to agree with it up to [`DIAGONAL_TOL`].
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if k < 2 {
            return Err(Error::BadShape(format!(
                "a generator needs at least 2 states, got {k}"
            )));
        }
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != k) {
            return Err(Error::BadShape(format!(
                "row {i} has {} entries, expected {k}",
                row.len()
            )));
        }
        let mut q = DMatrix::<f64>::zeros(k, k);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::BadShape(format!("q[{i}][{j}] = {v} is not finite")));
                }
                q[(i, j)] = v;
            }
        }
        Self::from_matrix(q)
    }

    /// Same as [`Generator::new`] for an already assembled matrix.
    pub fn from_matrix(mut q: DMatrix<f64>) -> Result<Self> {
        let k = q.nrows();
        if q.ncols() != k {
            return Err(Error::BadShape(format!(
                "generator must be square, got {}x{}",
                k,
                q.ncols()
            )));
        }
        if k < 2 {
            return Err(Error::BadShape(format!(
                "a generator needs at least 2 states, got {k}"
            )));
        }
        if let Some(v) = q.iter().find(|v| !v.is_finite()) {
            return Err(Error::BadShape(format!("entry {v} is not finite")));
        }
        let mut sigma = vec![0.0; k];
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let v = q[(i, j)];
                if v < 0.0 {
                    return Err(Error::NegativeRate {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                sigma[i] += v;
            }
        }
        for i in 0..k {
            let supplied = q[(i, i)];
            if (supplied + sigma[i]).abs() > DIAGONAL_TOL * sigma[i].max(1.0) {
                return Err(Error::BadDiagonal {
                    row: i,
                    value: supplied,
                    expected: -sigma[i],
                });
            }
            q[(i, i)] = -sigma[i];
        }
        check_irreducible(&q)?;
        Ok(Self { q, sigma })
    }

    pub fn num_states(&self) -> usize {
        self.sigma.len()
    }

    /// The rate matrix `Q`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Transition rate from `i` to `j`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.q[(i, j)]
    }

    /// Exit rates `sigma_i = sum_{j != i} q_ij`.
    pub fn exit_rates(&self) -> &[f64] {
        &self.sigma
    }

    /// Row-major copy of `Q`.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.num_states())
            .map(|i| self.q.row(i).iter().copied().collect())
            .collect()
    }

    /// Multiplies every rate by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::NonPositiveRate(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        Ok(Self {
            q: &self.q * factor,
            sigma: self.sigma.iter().map(|s| s * factor).collect(),
        })
    }
}

/// Forward and reverse breadth-first reachability from state 0 over `q_ij > 0`.
fn check_irreducible(q: &DMatrix<f64>) -> Result<()> {
    let k = q.nrows();
    for reverse in [false, true] {
        let mut seen = vec![false; k];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..k {
                let rate = if reverse { q[(j, i)] } else { q[(i, j)] };
                if j != i && rate > 0.0 && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if let Some(state) = seen.iter().position(|s| !s) {
            return Err(Error::NotIrreducible { state });
        }
    }
    Ok(())
}

/// Tridiagonal generator with `q_{i,i+1} = birth[i]` and `q_{i+1,i} = death[i]`.
pub fn build_birth_death(birth: &[f64], death: &[f64]) -> Result<Generator> {
    if birth.is_empty() || birth.len() != death.len() {
        return Err(Error::BadShape(format!(
            "birth and death vectors must be nonempty and of equal length, got {} and {}",
            birth.len(),
            death.len()
        )));
    }
    if let Some(r) = birth
        .iter()
        .chain(death)
        .find(|&&r| !(r > 0.0) || !r.is_finite())
    {
        return Err(Error::NonPositiveRate(format!(
            "birth-death rates must be positive, got {r}"
        )));
    }
    let k = birth.len() + 1;
    let mut q = DMatrix::<f64>::zeros(k, k);
    for i in 0..k - 1 {
        q[(i, i + 1)] = birth[i];
        q[(i + 1, i)] = death[i];
    }
    for i in 0..k {
        q[(i, i)] = -q.row(i).sum();
    }
    Generator::from_matrix(q)
}

/// Stationary distribution of a validated generator.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDist(Vec<f64>);

impl StationaryDist {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.clone()
    }
}

impl std::ops::Index<usize> for StationaryDist {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Solves `pi Q = 0, pi e = 1` with the last balance equation replaced by the
/// normalization row. No structural checks: callers own irreducibility.
/// Stationary vector by GTH elimination (state reduction). Only sums of
/// nonnegative terms appear, so every entry keeps full relative accuracy even
/// when `pi` spans many orders of magnitude.
pub(crate) fn solve_stationary(q: &DMatrix<f64>) -> Result<DVector<f64>> {
    let k = q.nrows();
    let mut a = q.clone();
    for n in (1..k).rev() {
        let out: f64 = (0..n).map(|j| a[(n, j)]).sum();
        if !(out > 0.0) || !out.is_finite() {
            return Err(Error::SingularSystem(format!(
                "{k}-state balance system is singular at reduction step {n}"
            )));
        }
        for i in 0..n {
            a[(i, n)] /= out;
        }
        for i in 0..n {
            let ain = a[(i, n)];
            if ain == 0.0 {
                continue;
            }
            for j in 0..n {
                if j != i {
                    a[(i, j)] += ain * a[(n, j)];
                }
            }
        }
    }
    let mut pi = DVector::<f64>::zeros(k);
    pi[0] = 1.0;
    for j in 1..k {
        pi[j] = (0..j).map(|i| pi[i] * a[(i, j)]).sum();
    }
    let total = pi.sum();
    if !total.is_finite() {
        return Err(Error::SingularSystem(format!(
            "{k}-state balance system produced non-finite values"
        )));
    }
    Ok(pi / total)
}

pub fn stationary_distribution(g: &Generator) -> Result<StationaryDist> {
    let pi = solve_stationary(g.matrix())?;
    if let Some(p) = pi.iter().find(|&&p| !(p > 0.0)) {
        return Err(Error::SingularSystem(format!(
            "stationary vector has a nonpositive entry {p}"
        )));
    }
    let total: f64 = pi.iter().sum();
    Ok(StationaryDist(pi.iter().map(|p| p / total).collect()))
}

/// Largest detailed-balance violation `max_{i != j} |pi_i q_ij - pi_j q_ji|`.
pub fn detailed_balance_violation(g: &Generator, pi: &StationaryDist) -> f64 {
    let k = g.num_states();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in i + 1..k {
            worst = worst.max((pi[i] * g.rate(i, j) - pi[j] * g.rate(j, i)).abs());
        }
    }
    worst
}

pub fn check_reversibility(g: &Generator, pi: &StationaryDist, tol: f64) -> bool {
    detailed_balance_violation(g, pi) <= tol
}

/// Long-run frequency of state changes, `r = sum_i pi_i sigma_i`.
pub fn transition_intensity(g: &Generator, pi: &StationaryDist) -> f64 {
    g.exit_rates()
        .iter()
        .zip(pi.as_slice())
        .map(|(s, p)| s * p)
        .sum()
}

/// Real spectral form of a reversible generator: `Q = T diag(-d, 0) T~`.
///
/// Columns `0..K-1` of `T` hold the right eigenvectors for the decay rates
/// `d` in ascending order; the last column is the all-ones vector. Rows of
/// `T~` are the matching left eigenvectors and the last row is `pi`.
#[derive(Debug, Clone)]
pub struct SpectralForm {
    pi: StationaryDist,
    decay: Vec<f64>,
    right: DMatrix<f64>,
    left: DMatrix<f64>,
}

impl SpectralForm {
    pub fn stationary(&self) -> &StationaryDist {
        &self.pi
    }

    /// Decay rates `d_1 <= ... <= d_{K-1}`, all strictly positive.
    pub fn decay_rates(&self) -> &[f64] {
        &self.decay
    }

    /// Right eigenvector matrix `T`.
    pub fn right(&self) -> &DMatrix<f64> {
        &self.right
    }

    /// Left eigenvector matrix `T~ = T^{-1}`.
    pub fn left(&self) -> &DMatrix<f64> {
        &self.left
    }

    pub fn num_states(&self) -> usize {
        self.pi.len()
    }

    /// `T diag(-d_1, .., -d_{K-1}, 0) T~`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let k = self.num_states();
        let mut scaled = self.right.clone();
        for j in 0..k {
            let eig = if j + 1 < k { -self.decay[j] } else { 0.0 };
            scaled.column_mut(j).scale_mut(eig);
        }
        scaled * &self.left
    }
}

pub fn spectral_decomposition(g: &Generator, pi: &StationaryDist) -> Result<SpectralForm> {
    let k = g.num_states();
    if pi.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: pi.len(),
        });
    }
    let violation = detailed_balance_violation(g, pi);
    if violation > REVERSIBILITY_TOL {
        return Err(Error::NotReversible { violation });
    }

    let sqrt_pi: Vec<f64> = pi.as_slice().iter().map(|p| p.sqrt()).collect();
    let q = g.matrix();
    let s = DMatrix::from_fn(k, k, |i, j| sqrt_pi[i] * q[(i, j)] / sqrt_pi[j]);
    // Detailed balance makes `s` symmetric up to rounding.
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenFailure(format!("no convergence for {k}-state chain")))?;

    // The zero eigenvalue is the largest one; the rest are -d_j.
    let zero_idx = (0..k)
        .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .expect("k >= 2");
    let mut order: Vec<usize> = (0..k).filter(|&j| j != zero_idx).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut decay = Vec::with_capacity(k - 1);
    let mut right = DMatrix::<f64>::zeros(k, k);
    for (col, &src) in order.iter().enumerate() {
        let d = -eig.eigenvalues[src];
        if !(d > 0.0) {
            return Err(Error::EigenFailure(format!(
                "nonzero eigenvalue {} is not strictly negative",
                -d
            )));
        }
        decay.push(d);
        let u = eig.eigenvectors.column(src);
        // Sign convention: the largest-magnitude entry of each column is positive.
        let pivot = (0..k)
            .max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()))
            .expect("k >= 2");
        let sign = if u[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..k {
            right[(i, col)] = sign * u[i] / sqrt_pi[i];
        }
    }
    right.column_mut(k - 1).fill(1.0);

    // T~ = T^T Pi, with the last row replaced exactly by pi.
    let mut left = right.transpose();
    for j in 0..k {
        left.column_mut(j).scale_mut(pi[j]);
    }
    for j in 0..k {
        left[(k - 1, j)] = pi[j];
    }

    Ok(SpectralForm {
        pi: pi.clone(),
        decay,
        right,
        left,
    })
}
