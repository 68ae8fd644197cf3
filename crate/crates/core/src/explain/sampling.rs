use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{instance_dense, varying_features, Attribution, Background, Method};
use crate::error::{Error, Result};
use crate::models::{Features, Model};

/// Monte-Carlo Shapley values from random feature orderings.
///
/// Each permutation of the varying features is applied against every
/// background row: features are switched to the instance's value one at a
/// time and each switch credits the change in log-odds to that feature. The
/// credits telescope, so `base + Σφ` equals the output for any sample size.
/// The same seed always gives the same values, bit for bit.
pub fn sampling_shapley<F: Features + ?Sized>(
    model: &Model,
    x: &F,
    background: &Background,
    n_permutations: usize,
    seed: u64,
) -> Result<Attribution> {
    if n_permutations == 0 {
        return Err(Error::InvalidArgument(
            "n_permutations must be positive".into(),
        ));
    }
    let x = instance_dense(model, x, background)?;
    let mut order = varying_features(&x, background);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut phi = vec![0.0; x.len()];
    let mut hybrid = vec![0.0; x.len()];
    let mut base = 0.0;
    for row in background.rows() {
        hybrid.iter_mut().for_each(|v| *v = 0.0);
        row.scatter_into(&mut hybrid);
        base += model.margin(&hybrid);
    }

    for _ in 0..n_permutations {
        order.shuffle(&mut rng);
        for row in background.rows() {
            hybrid.iter_mut().for_each(|v| *v = 0.0);
            row.scatter_into(&mut hybrid);
            let mut previous = model.margin(&hybrid);
            for &feature in &order {
                hybrid[feature] = x[feature];
                let current = model.margin(&hybrid);
                phi[feature] += current - previous;
                previous = current;
            }
        }
    }
    let draws = (n_permutations * background.len()) as f64;
    phi.iter_mut().for_each(|v| *v /= draws);

    Ok(Attribution {
        phi,
        base_logodds: base / background.len() as f64,
        base_probability: background.base_probability,
        output_logodds: model.margin(&x),
        method: Method::Sampling,
        samples: Some(n_permutations),
        seed: Some(seed),
    })
}
