use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::ScoreModel;
use crate::data::Label;
use crate::error::{Error, Result};
use crate::neural::{DenseLayer, Layer, Matrix, Network};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2_lambda: 1e-3,
            learning_rate: 0.5,
            epochs: 500,
        }
    }
}

/// Logistic regression as a one-layer sigmoid network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub network: Network,
    pub l2_lambda: f64,
}

impl LogisticModel {
    fn dense(&self) -> &DenseLayer {
        self.network.dense_layers().next().expect("logistic network has one dense layer")
    }

    pub fn weights(&self) -> &[f64] {
        &self.dense().weights
    }

    pub fn intercept(&self) -> f64 {
        self.dense().bias[0]
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.network.predict(x)
    }
}

impl ScoreModel for LogisticModel {
    fn score(&self, z: &[f64]) -> Result<f64> {
        self.predict_proba(z)
    }
}

/// Full-batch gradient descent on L2-regularized cross-entropy.
pub fn fit_logistic(rows: &[Vec<f64>], labels: &[Label], params: LogisticParams, seed: u64) -> Result<LogisticModel> {
    if rows.len() < 2 {
        return Err(Error::invalid("logistic regression needs at least 2 samples"));
    }
    if rows.len() != labels.len() {
        return Err(Error::Dimension {
            context: "labels",
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    if !labels.contains(&Label::Trusted) || !labels.contains(&Label::NotTrusted) {
        return Err(Error::invalid("logistic regression needs both classes in the training data"));
    }
    let k = rows[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut network = Network::new(
        vec![Layer::Dense(DenseLayer::he_uniform(k, 1, &mut rng)), Layer::Sigmoid],
        seed,
    )?;
    let batch = Matrix::from_rows(rows)?;
    let targets: Vec<f64> = labels.iter().map(|l| l.target()).collect();
    for _ in 0..params.epochs {
        let cache = network.forward_train::<ChaCha8Rng>(&batch, None)?;
        let grads = network.backward(&cache, &targets, params.l2_lambda)?;
        network.sgd_step(&grads, params.learning_rate)?;
    }
    Ok(LogisticModel {
        network,
        l2_lambda: params.l2_lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Vec<Vec<f64>>, Vec<Label>) {
        let rows = vec![
            vec![1.0, 2.0],
            vec![2.0, 1.5],
            vec![1.5, 3.0],
            vec![-1.0, -0.5],
            vec![-2.0, -1.0],
            vec![-0.5, -2.0],
        ];
        let labels = vec![
            Label::Trusted,
            Label::Trusted,
            Label::Trusted,
            Label::NotTrusted,
            Label::NotTrusted,
            Label::NotTrusted,
        ];
        (rows, labels)
    }

    #[test]
    fn separable_fixture_fits_perfectly() {
        let (rows, labels) = separable();
        let m = fit_logistic(
            &rows,
            &labels,
            LogisticParams {
                l2_lambda: 1e-4,
                learning_rate: 0.5,
                epochs: 2000,
            },
            1,
        )
        .unwrap();
        for (r, l) in rows.iter().zip(&labels) {
            assert_eq!(Label::from_target(m.predict_proba(r).unwrap()), *l);
        }
    }

    #[test]
    fn heavy_regularization_shrinks_weights() {
        let (rows, labels) = separable();
        let p = LogisticParams {
            l2_lambda: 5.0,
            learning_rate: 0.1,
            epochs: 3000,
        };
        let m = fit_logistic(&rows, &labels, p, 1).unwrap();
        assert!(m.weights().iter().all(|w| w.abs() < 0.3), "{:?}", m.weights());
        for r in &rows {
            assert!((m.predict_proba(r).unwrap() - 0.5).abs() < 0.35);
        }
        let light = fit_logistic(&rows, &labels, LogisticParams { l2_lambda: 0.0, ..p }, 1).unwrap();
        let norm = |m: &LogisticModel| m.weights().iter().map(|w| w * w).sum::<f64>();
        assert!(norm(&m) < norm(&light));
    }

    #[test]
    fn zero_learning_rate_keeps_init() {
        let (rows, labels) = separable();
        let m = fit_logistic(
            &rows,
            &labels,
            LogisticParams {
                learning_rate: 0.0,
                ..Default::default()
            },
            4,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let init = DenseLayer::he_uniform(2, 1, &mut rng);
        assert_eq!(m.weights(), init.weights.as_slice());
        assert_eq!(m.intercept(), 0.0);
    }

    #[test]
    fn single_class_rejected() {
        let rows = vec![vec![1.0], vec![2.0]];
        assert!(fit_logistic(&rows, &[Label::Trusted, Label::Trusted], LogisticParams::default(), 0).is_err());
    }
}
