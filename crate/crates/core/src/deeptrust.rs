//! The seven-layer trust classifier:
//!
//! ```text
//! input(k) → dense(k,h)+ReLU → dropout(p) → dense(h,h)+ReLU → dropout(p) → dense(h,1) → sigmoid
//! ```
//!
//! trained with shuffled minibatch SGD on cross-entropy plus an L2 weight
//! penalty, keeping the parameters from the best validation epoch.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, Learner};
use crate::data::{split_dataset, Label, SplitSpec};
use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureVector, Standardizer};
use crate::neural::{bce_with_logit, DenseLayer, DropoutLayer, Layer, Matrix, Network, TrainConfig};

pub const DEFAULT_HIDDEN: usize = 250;
pub const DEFAULT_DROPOUT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepTrustModel {
    pub network: Network,
    /// Fitted on the training set by [`train`]; `None` until then.
    pub standardizer: Option<Standardizer>,
    pub feature_schema_version: String,
    /// Probability at or above which a user is labeled trusted.
    pub threshold: f64,
}

/// Wires the stack with seeded He-uniform weights.
pub fn build_model(k: usize, hidden: usize, dropout: f64, seed: u64) -> Result<DeepTrustModel> {
    let mut problems = Vec::new();
    if k == 0 {
        problems.push("input dimension k must be at least 1".to_string());
    }
    if hidden == 0 {
        problems.push("hidden units h must be at least 1".to_string());
    }
    if !(0.0..1.0).contains(&dropout) {
        problems.push(format!("dropout p must be in [0, 1), got {dropout}"));
    }
    if !problems.is_empty() {
        return Err(Error::InvalidConfig(problems));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = vec![
        Layer::Dense(DenseLayer::he_uniform(k, hidden, &mut rng)),
        Layer::Relu,
        Layer::Dropout(DropoutLayer::new(dropout)?),
        Layer::Dense(DenseLayer::he_uniform(hidden, hidden, &mut rng)),
        Layer::Relu,
        Layer::Dropout(DropoutLayer::new(dropout)?),
        Layer::Dense(DenseLayer::he_uniform(hidden, 1, &mut rng)),
        Layer::Sigmoid,
    ];
    Ok(DeepTrustModel {
        network: Network::new(layers, seed)?,
        standardizer: None,
        feature_schema_version: crate::features::SCHEMA_VERSION.to_string(),
        threshold: 0.5,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
}

impl TrainingHistory {
    /// `history.csv`: `epoch,train_loss,train_acc,val_loss,val_acc`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])?;
        for e in &self.epochs {
            out.write_record([
                e.epoch.to_string(),
                e.train_loss.to_string(),
                e.train_acc.to_string(),
                e.val_loss.to_string(),
                e.val_acc.to_string(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Mean cross-entropy (no L2 term) and 0.5-threshold accuracy in eval mode.
fn evaluate(network: &Network, x: &Matrix, targets: &[f64]) -> Result<(f64, f64)> {
    let logits = network.logits(x)?;
    let n = targets.len() as f64;
    let loss = logits.iter().zip(targets).map(|(z, y)| bce_with_logit(*z, *y)).sum::<f64>() / n;
    let correct = logits
        .iter()
        .zip(targets)
        .filter(|(z, y)| (**z >= 0.0) == (**y >= 0.5))
        .count();
    Ok((loss, correct as f64 / n))
}

/// Fits the standardizer on `train`, then runs up to `cfg.epochs` epochs of
/// shuffled minibatch SGD with dropout active. Returns the parameters from
/// the epoch with the lowest validation loss.
pub fn train(
    mut model: DeepTrustModel,
    train: &Dataset,
    validation: &Dataset,
    cfg: &TrainConfig,
) -> Result<(DeepTrustModel, TrainingHistory)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if validation.is_empty() {
        return Err(Error::invalid("empty validation set"));
    }
    let k = model.network.input_dim();
    if train.dim() != k {
        return Err(Error::Dimension {
            context: "training features",
            expected: k,
            actual: train.dim(),
        });
    }
    let standardizer = Standardizer::fit(&train.rows)?;
    let x_train = Matrix::from_rows(&standardizer.transform_all(&train.rows)?)?;
    let x_val = Matrix::from_rows(&standardizer.transform_all(&validation.rows)?)?;
    let y_train = train.targets();
    let y_val = validation.targets();
    model.standardizer = Some(standardizer);
    model.feature_schema_version = train.schema_version.clone();

    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dropout_rng.set_stream(1);

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainingHistory::default();
    let mut best: Option<(f64, Network)> = None;
    let mut stale = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        let lr = cfg.learning_rate_at(epoch);
        for (batch_no, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut xb = Matrix::zeros(chunk.len(), k);
            for (r, &i) in chunk.iter().enumerate() {
                xb.data[r * k..(r + 1) * k].copy_from_slice(x_train.row(i));
            }
            let yb: Vec<f64> = chunk.iter().map(|&i| y_train[i]).collect();
            let cache = model.network.forward_train(&xb, Some(&mut dropout_rng))?;
            let loss = model.network.loss(&cache, &yb, cfg.l2_lambda)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                });
            }
            let grads = model.network.backward(&cache, &yb, cfg.l2_lambda)?;
            model.network.sgd_step(&grads, lr)?;
        }

        let (train_loss, train_acc) = evaluate(&model.network, &x_train, &y_train)?;
        let (val_loss, val_acc) = evaluate(&model.network, &x_val, &y_val)?;
        if !(train_loss.is_finite() && val_loss.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch, batch: 0 });
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            train_acc,
            val_loss,
            val_acc,
        });

        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            best = Some((val_loss, model.network.clone()));
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if cfg.patience.is_some_and(|p| stale >= p) {
                break;
            }
        }
    }

    if let Some((_, network)) = best {
        model.network = network;
    }
    Ok((model, history))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub label: Label,
}

impl DeepTrustModel {
    pub fn probability(&self, raw: &[f64]) -> Result<f64> {
        match &self.standardizer {
            Some(s) => self.network.predict(&s.transform(raw)?),
            None => self.network.predict(raw),
        }
    }

    pub fn label_for(&self, probability: f64) -> Label {
        if probability >= self.threshold {
            Label::Trusted
        } else {
            Label::NotTrusted
        }
    }
}

/// Trust probability T(U) and label for one user's feature vector.
pub fn predict(model: &DeepTrustModel, v: &FeatureVector) -> Result<Prediction> {
    if v.schema_version != model.feature_schema_version {
        return Err(Error::SchemaMismatch {
            expected: model.feature_schema_version.clone(),
            found: v.schema_version.clone(),
        });
    }
    let probability = model.probability(&v.values)?;
    Ok(Prediction {
        probability,
        label: model.label_for(probability),
    })
}

impl Classifier for DeepTrustModel {
    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.probability(x)
    }

    fn predict_label(&self, x: &[f64]) -> Result<Label> {
        Ok(self.label_for(self.probability(x)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeepTrustConfig {
    pub hidden: usize,
    pub dropout: f64,
    pub train: TrainConfig,
    /// Share of the training data held out for best-epoch selection.
    pub validation_fraction: f64,
}

impl Default for DeepTrustConfig {
    fn default() -> Self {
        DeepTrustConfig {
            hidden: DEFAULT_HIDDEN,
            dropout: DEFAULT_DROPOUT,
            train: TrainConfig::default(),
            validation_fraction: 0.1,
        }
    }
}

/// Learner adapter: carves a validation share out of the given training
/// data, then builds and trains a fresh model.
pub struct DeepTrustLearner(pub DeepTrustConfig);

impl DeepTrustLearner {
    pub fn fit_model(&self, data: &Dataset, seed: u64) -> Result<(DeepTrustModel, TrainingHistory)> {
        let c = &self.0;
        let idx: Vec<usize> = (0..data.len()).collect();
        let split = split_dataset(
            &idx,
            &SplitSpec {
                train: 1.0 - c.validation_fraction,
                validation: c.validation_fraction,
                test: 0.0,
                seed,
                stratify: false,
            },
        )?;
        let model = build_model(data.dim(), c.hidden, c.dropout, seed)?;
        let cfg = TrainConfig { seed, ..c.train };
        train(model, &data.subset(&split.train), &data.subset(&split.validation), &cfg)
    }
}

impl Learner for DeepTrustLearner {
    fn name(&self) -> &str {
        "deeptrust"
    }

    fn fit(&self, train: &Dataset, seed: u64) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(self.fit_model(train, seed)?.0))
    }
}
