//! Numerical ground truth from the product chains behind the closed forms.
//!
//! * `Y(t) = (X~(t), X(t))` on `K^2` states, pair `(i, j)` stored at `i * K + j`
//!   (0-based; `i` is the estimate, `j` the true state).
//! * `Z(t) = (F_s(t), X(t))` on `2K` states, pair `(b, j)` stored at `b * K + j`.
//!
//! Both are dense steady-state solves meant for validation only.

use nalgebra::DMatrix;

use crate::ctmc::{solve_stationary, Generator};
use crate::error::{Error, Result};
use crate::freshness::ProximityMatrix;

pub const MAX_ORACLE_STATES: usize = 60;

fn check_inputs(g: &Generator, lambda: f64) -> Result<usize> {
    let k = g.num_states();
    if k > MAX_ORACLE_STATES {
        return Err(Error::OracleTooLarge {
            states: k,
            max: MAX_ORACLE_STATES,
        });
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveRate(format!(
            "sampling rate must be positive and finite, got {lambda}"
        )));
    }
    Ok(k)
}

/// Generator of the joint (estimate, state) chain.
pub fn joint_chain_generator(g: &Generator, lambda: f64) -> Result<DMatrix<f64>> {
    let k = check_inputs(g, lambda)?;
    let n = k * k;
    let mut y = DMatrix::<f64>::zeros(n, n);
    for i in 0..k {
        for j in 0..k {
            let s = i * k + j;
            for jp in 0..k {
                if jp != j {
                    y[(s, i * k + jp)] += g.rate(j, jp);
                }
            }
            if j != i {
                y[(s, j * k + j)] += lambda;
            }
        }
    }
    for s in 0..n {
        let out: f64 = y.row(s).sum();
        y[(s, s)] = -out;
    }
    Ok(y)
}

/// Stationary law of the joint chain as a `K x K` matrix `y[(i, j)]`.
pub fn joint_chain_stationary(g: &Generator, lambda: f64) -> Result<DMatrix<f64>> {
    let k = g.num_states();
    let y = solve_stationary(&joint_chain_generator(g, lambda)?)?;
    Ok(DMatrix::from_fn(k, k, |i, j| y[i * k + j]))
}

/// Mean FWE freshness `sum_i y_ii`, or FWC freshness `sum_{i,j} y_ij p_ji` when
/// a proximity matrix is supplied.
pub fn joint_chain_solve(g: &Generator, lambda: f64, p: Option<&ProximityMatrix>) -> Result<f64> {
    let k = g.num_states();
    if let Some(p) = p {
        if p.num_states() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: p.num_states(),
            });
        }
    }
    let y = joint_chain_stationary(g, lambda)?;
    let value = match p {
        None => (0..k).map(|i| y[(i, i)]).sum(),
        Some(p) => (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| y[(i, j)] * p.get(j, i))
            .sum(),
    };
    Ok(value)
}

/// Generator of the (FWS flag, state) chain.
pub fn fws_chain_generator(g: &Generator, lambda: f64) -> Result<DMatrix<f64>> {
    let k = check_inputs(g, lambda)?;
    let n = 2 * k;
    let mut z = DMatrix::<f64>::zeros(n, n);
    for j in 0..k {
        for jp in 0..k {
            if jp != j {
                // Any source transition leaves the flag cleared.
                z[(j, jp)] += g.rate(j, jp);
                z[(k + j, jp)] += g.rate(j, jp);
            }
        }
        z[(j, k + j)] += lambda;
    }
    for s in 0..n {
        let out: f64 = z.row(s).sum();
        z[(s, s)] = -out;
    }
    Ok(z)
}

/// Stationary law of the FWS chain as `[z_0, z_1]`, each of length `K`.
pub fn fws_chain_stationary(g: &Generator, lambda: f64) -> Result<[Vec<f64>; 2]> {
    let k = g.num_states();
    let z = solve_stationary(&fws_chain_generator(g, lambda)?)?;
    Ok([
        z.rows(0, k).iter().copied().collect(),
        z.rows(k, k).iter().copied().collect(),
    ])
}

/// Mean FWS freshness `1 - sum_j z_{0j}`.
pub fn fws_chain_solve(g: &Generator, lambda: f64) -> Result<f64> {
    let [stale, _] = fws_chain_stationary(g, lambda)?;
    Ok(1.0 - stale.iter().sum::<f64>())
}
