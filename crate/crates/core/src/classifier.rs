//! Common interface for every trust classifier, so the evaluation harness
//! can treat DeepTrust and the baselines uniformly.

use crate::data::Label;
use crate::error::Result;
use crate::features::{Dataset, Standardizer};

/// A fitted binary classifier over raw (unstandardized) feature rows.
pub trait Classifier: Send + Sync {
    /// Probability that the user is trusted.
    fn predict_proba(&self, x: &[f64]) -> Result<f64>;

    fn predict_label(&self, x: &[f64]) -> Result<Label> {
        Ok(Label::from_target(self.predict_proba(x)?))
    }

    fn predict_proba_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_proba(r)).collect()
    }
}

/// Something that can be fitted on a labeled dataset. Learners receive raw
/// features and are responsible for any scaling, fitted on `train` only.
pub trait Learner: Sync {
    fn name(&self) -> &str;

    fn fit(&self, train: &Dataset, seed: u64) -> Result<Box<dyn Classifier>>;
}

/// Applies a training-set z-score transform before an inner model.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized<M> {
    pub standardizer: Standardizer,
    pub model: M,
}

/// Inner models that score already-standardized rows.
pub trait ScoreModel: Send + Sync {
    fn score(&self, z: &[f64]) -> Result<f64>;
}

impl<M: ScoreModel> Classifier for Standardized<M> {
    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.model.score(&self.standardizer.transform(x)?)
    }
}

impl<M> Standardized<M> {
    /// Fits the standardizer on `train` and the model on the transformed rows.
    pub fn fit_with(
        train: &Dataset,
        fit: impl FnOnce(&[Vec<f64>], &[Label]) -> Result<M>,
    ) -> Result<Self> {
        let standardizer = Standardizer::fit(&train.rows)?;
        let z = standardizer.transform_all(&train.rows)?;
        let model = fit(&z, &train.labels)?;
        Ok(Standardized { standardizer, model })
    }
}
