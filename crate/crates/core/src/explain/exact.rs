use super::{instance_dense, varying_features, Attribution, Background, Method};
use crate::error::{Error, Result};
use crate::models::{Features, Model};

/// Largest number of varying features `exact_shapley` will enumerate.
pub const MAX_EXACT_PLAYERS: usize = 20;

/// Centered interventional coalition value
/// `f_x(S) = mean_z f(x_S, z_rest) − mean_z f(z)`, evaluated by direct averaging.
pub fn coalition_value<F: Features + ?Sized>(
    model: &Model,
    x: &F,
    background: &Background,
    subset: &[usize],
) -> Result<f64> {
    let x = instance_dense(model, x, background)?;
    if let Some(&bad) = subset.iter().find(|&&i| i >= x.len()) {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: bad + 1,
        });
    }
    let mut hybrid = vec![0.0; x.len()];
    let mut total = 0.0;
    let mut base = 0.0;
    for row in background.rows() {
        hybrid.iter_mut().for_each(|v| *v = 0.0);
        row.scatter_into(&mut hybrid);
        base += model.margin(&hybrid);
        for &i in subset {
            hybrid[i] = x[i];
        }
        total += model.margin(&hybrid);
    }
    let n = background.len() as f64;
    Ok(total / n - base / n)
}

/// Shapley values by enumerating every coalition of the varying features.
///
/// Coalitions are visited in Gray-code order per background row so each step
/// changes a single coordinate of the hybrid row.
pub fn exact_shapley<F: Features + ?Sized>(
    model: &Model,
    x: &F,
    background: &Background,
) -> Result<Attribution> {
    let x = instance_dense(model, x, background)?;
    let players = varying_features(&x, background);
    let p = players.len();
    if p > MAX_EXACT_PLAYERS {
        return Err(Error::TooManyFeatures {
            players: p,
            max: MAX_EXACT_PLAYERS,
        });
    }

    let n_coalitions = 1usize << p;
    let mut values = vec![0.0; n_coalitions];
    let mut hybrid = vec![0.0; x.len()];
    for row in background.rows() {
        hybrid.iter_mut().for_each(|v| *v = 0.0);
        row.scatter_into(&mut hybrid);
        let mut mask = 0usize;
        values[0] += model.margin(&hybrid);
        for k in 1..n_coalitions {
            let bit = k.trailing_zeros() as usize;
            mask ^= 1 << bit;
            let feature = players[bit];
            hybrid[feature] = if mask & (1 << bit) != 0 {
                x[feature]
            } else {
                row.get(feature)
            };
            values[mask] += model.margin(&hybrid);
        }
    }
    let n = background.len() as f64;
    values.iter_mut().for_each(|v| *v /= n);

    let weights = coalition_weights(p);
    let mut phi = vec![0.0; x.len()];
    for (bit, &feature) in players.iter().enumerate() {
        let with = 1usize << bit;
        let mut acc = 0.0;
        for mask in 0..n_coalitions {
            if mask & with == 0 {
                let size = mask.count_ones() as usize;
                acc += weights[size] * (values[mask | with] - values[mask]);
            }
        }
        phi[feature] = acc;
    }

    Ok(Attribution {
        phi,
        base_logodds: values[0],
        base_probability: background.base_probability,
        output_logodds: model.margin(&x),
        method: Method::BruteForce,
        samples: None,
        seed: None,
    })
}

/// `w[s] = s! (p − s − 1)! / p!` for coalition sizes `s < p`.
fn coalition_weights(p: usize) -> Vec<f64> {
    if p == 0 {
        return Vec::new();
    }
    // s!(p-s-1)!/p! = 1 / (p * C(p-1, s))
    let mut weights = Vec::with_capacity(p);
    let mut binom = 1.0;
    for s in 0..p {
        weights.push(1.0 / (p as f64 * binom));
        binom = binom * (p - 1 - s) as f64 / (s + 1) as f64;
    }
    weights
}
