use super::{instance_dense, Attribution, Background, Method};
use crate::error::{Error, Result};
use crate::models::{Features, Model};

/// Closed-form Shapley values of a logistic model's log-odds:
/// `φ_i = β_i · (x_i − E[x_i])`, base `β·E[x] + bias`.
pub fn linear_shap<F: Features + ?Sized>(
    model: &Model,
    x: &F,
    background: &Background,
) -> Result<Attribution> {
    let Model::Logistic(logistic) = model else {
        return Err(Error::UnsupportedModel(model.kind()));
    };
    let x = instance_dense(model, x, background)?;
    let phi = logistic
        .weights
        .iter()
        .zip(&x)
        .zip(&background.feature_means)
        .map(|((w, xi), mean)| w * (xi - mean))
        .collect();
    Ok(Attribution {
        phi,
        base_logodds: logistic.margin(&background.feature_means),
        base_probability: background.base_probability,
        output_logodds: logistic.margin(&x),
        method: Method::LinearExact,
        samples: None,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::build_background;
    use crate::models::{LogisticModel, TreeModel};
    use crate::textprep::FeatureVector;

    #[test]
    fn instance_at_the_mean_gets_nothing() {
        let model = Model::Logistic(LogisticModel::new(vec![1.5, -0.5, 2.0], 0.3));
        let rows = vec![
            FeatureVector::from_dense(&[1.0, 0.0, 2.0]),
            FeatureVector::from_dense(&[0.0, 1.0, 4.0]),
        ];
        let bg = build_background(&model, rows).unwrap();
        let a = linear_shap(&model, &bg.feature_means.clone(), &bg).unwrap();
        assert!(a.phi.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn worked_example() {
        // β=(2,−1), bias 0, x=(1,3), E[x]=(0.5,1)
        let model = Model::Logistic(LogisticModel::new(vec![2.0, -1.0], 0.0));
        let rows = vec![
            FeatureVector::from_dense(&[0.0, 0.0]),
            FeatureVector::from_dense(&[1.0, 2.0]),
        ];
        let bg = build_background(&model, rows).unwrap();
        assert_eq!(bg.feature_means, vec![0.5, 1.0]);
        let a = linear_shap(&model, &vec![1.0, 3.0], &bg).unwrap();
        assert_eq!(a.phi, vec![1.0, -2.0]);
        assert_eq!(a.base_logodds, 0.0);
        assert_eq!(a.output_logodds, -1.0);
        assert!(a.additivity_residual().abs() <= 1e-12);
    }

    #[test]
    fn rejects_trees() {
        let model = Model::Tree(TreeModel::leaf(0.4, 1));
        let bg = build_background(&model, vec![FeatureVector::from_dense(&[1.0])]).unwrap();
        assert!(matches!(
            linear_shap(&model, &vec![1.0], &bg),
            Err(Error::UnsupportedModel("tree"))
        ));
    }
}
