#![allow(dead_code)]

use ctmc_freshness::ctmc::{build_birth_death, Generator};
use ctmc_freshness::freshness::ProximityMatrix;
use proptest::prelude::*;

/// Birth-death chain with `2..=max_k` states and rates in `[0.1, 10]`.
pub fn birth_death(max_k: usize) -> impl Strategy<Value = Generator> {
    (2..=max_k)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(0.1f64..10.0, k - 1),
                prop::collection::vec(0.1f64..10.0, k - 1),
            )
        })
        .prop_map(|(b, d)| build_birth_death(&b, &d).unwrap())
}

/// Reversible chain on a complete graph: `q_ij = s_ij pi_j`, `s` symmetric.
pub fn reversible(max_k: usize) -> impl Strategy<Value = Generator> {
    (2..=max_k)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(0.2f64..1.0, k),
                prop::collection::vec(0.1f64..10.0, k * (k - 1) / 2),
            )
        })
        .prop_map(|(pi, s)| reversible_from(&pi, &s))
}

pub fn reversible_from(pi: &[f64], s: &[f64]) -> Generator {
    let k = pi.len();
    let mut rows = vec![vec![0.0; k]; k];
    let mut idx = 0;
    for i in 0..k {
        for j in (i + 1)..k {
            rows[i][j] = s[idx] * pi[j];
            rows[j][i] = s[idx] * pi[i];
            idx += 1;
        }
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = -row.iter().sum::<f64>();
    }
    Generator::new(&rows).unwrap()
}

/// Generator paired with a random unit-diagonal proximity matrix.
pub fn reversible_with_proximity(
    max_k: usize,
) -> impl Strategy<Value = (Generator, ProximityMatrix)> {
    reversible(max_k).prop_flat_map(|g| {
        let k = g.num_states();
        prop::collection::vec(0.0f64..=1.0, k * k).prop_map(move |vals| {
            let rows: Vec<Vec<f64>> = (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| if i == j { 1.0 } else { vals[i * k + j] })
                        .collect()
                })
                .collect();
            (g.clone(), ProximityMatrix::new(&rows).unwrap())
        })
    })
}

pub const LAMBDAS: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
