//! `model.json`: a fitted classifier together with the feature schema and
//! standardization it expects.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{DecisionTree, LogisticModel, NaiveBayesModel, RandomForest};
use crate::classifier::{Classifier, Standardized};
use crate::data::Label;
use crate::deeptrust::DeepTrustModel;
use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureVector, Standardizer};
use crate::neural::Network;

pub const MODEL_SCHEMA_VERSION: &str = "deeptrust-model-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoredClassifier {
    #[serde(rename = "deeptrust")]
    DeepTrust { network: Network, threshold: f64 },
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    NaiveBayes(NaiveBayesModel),
    #[serde(rename = "logistic_regression")]
    Logistic(LogisticModel),
}

impl StoredClassifier {
    pub fn kind(&self) -> &'static str {
        match self {
            StoredClassifier::DeepTrust { .. } => "deeptrust",
            StoredClassifier::DecisionTree(_) => "decision_tree",
            StoredClassifier::RandomForest(_) => "random_forest",
            StoredClassifier::NaiveBayes(_) => "naive_bayes",
            StoredClassifier::Logistic(_) => "logistic_regression",
        }
    }

    fn score(&self, z: &[f64]) -> Result<f64> {
        match self {
            StoredClassifier::DeepTrust { network, .. } => network.predict(z),
            StoredClassifier::DecisionTree(t) => t.predict_proba(z),
            StoredClassifier::RandomForest(f) => f.predict_proba(z),
            StoredClassifier::NaiveBayes(m) => Ok(m.posterior(z)?[1]),
            StoredClassifier::Logistic(m) => m.predict_proba(z),
        }
    }

    fn threshold(&self) -> f64 {
        match self {
            StoredClassifier::DeepTrust { threshold, .. } => *threshold,
            _ => 0.5,
        }
    }
}

/// A fitted model as persisted to `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: String,
    pub feature_schema_version: String,
    pub feature_names: Vec<String>,
    pub standardization: Option<Standardizer>,
    pub classifier: StoredClassifier,
}

impl TrainedModel {
    pub fn new(ds: &Dataset, standardization: Option<Standardizer>, classifier: StoredClassifier) -> Self {
        TrainedModel {
            schema_version: MODEL_SCHEMA_VERSION.to_string(),
            feature_schema_version: ds.schema_version.clone(),
            feature_names: ds.feature_names.clone(),
            standardization,
            classifier,
        }
    }

    pub fn from_deeptrust(m: DeepTrustModel, ds: &Dataset) -> Self {
        let mut t = TrainedModel::new(
            ds,
            m.standardizer,
            StoredClassifier::DeepTrust {
                network: m.network,
                threshold: m.threshold,
            },
        );
        t.feature_schema_version = m.feature_schema_version;
        t
    }

    pub fn from_standardized<M>(s: Standardized<M>, ds: &Dataset, wrap: impl FnOnce(M) -> StoredClassifier) -> Self {
        TrainedModel::new(ds, Some(s.standardizer), wrap(s.model))
    }

    pub fn kind(&self) -> &'static str {
        self.classifier.kind()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn check_schema(&self, ds: &Dataset) -> Result<()> {
        if ds.schema_version != self.feature_schema_version || ds.feature_names != self.feature_names {
            return Err(Error::SchemaMismatch {
                expected: self.feature_schema_version.clone(),
                found: ds.schema_version.clone(),
            });
        }
        Ok(())
    }

    /// Probability and label for a single feature vector.
    pub fn predict_vector(&self, v: &FeatureVector) -> Result<(f64, Label)> {
        if v.schema_version != self.feature_schema_version {
            return Err(Error::SchemaMismatch {
                expected: self.feature_schema_version.clone(),
                found: v.schema_version.clone(),
            });
        }
        let p = self.predict_proba(&v.values)?;
        Ok((p, self.label_for(p)))
    }

    fn label_for(&self, p: f64) -> Label {
        if p >= self.classifier.threshold() {
            Label::Trusted
        } else {
            Label::NotTrusted
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(format!(
                "unsupported model schema {:?}, expected {MODEL_SCHEMA_VERSION:?}",
                self.schema_version
            ));
        }
        let k = self.dim();
        if let Some(s) = &self.standardization {
            if s.dim() != k {
                return Err(format!("standardization has {} columns, schema has {k}", s.dim()));
            }
        }
        let model_dim = match &self.classifier {
            StoredClassifier::DeepTrust { network, .. } => {
                network.validate().map_err(|e| e.to_string())?;
                network.input_dim()
            }
            StoredClassifier::DecisionTree(t) => t.n_features,
            StoredClassifier::RandomForest(f) => f.n_features,
            StoredClassifier::NaiveBayes(m) => m.means[0].len(),
            StoredClassifier::Logistic(m) => {
                m.network.validate().map_err(|e| e.to_string())?;
                m.network.input_dim()
            }
        };
        if model_dim != k {
            return Err(format!("classifier expects {model_dim} features, schema has {k}"));
        }
        Ok(())
    }
}

impl Classifier for TrainedModel {
    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                context: "model input",
                expected: self.dim(),
                actual: x.len(),
            });
        }
        match &self.standardization {
            Some(s) => self.classifier.score(&s.transform(x)?),
            None => self.classifier.score(x),
        }
    }

    fn predict_label(&self, x: &[f64]) -> Result<Label> {
        Ok(self.label_for(self.predict_proba(x)?))
    }
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(model)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |message: String| Error::CorruptModel {
        path: path.to_path_buf(),
        message,
    };
    if text.trim().is_empty() {
        return Err(corrupt("file is empty".into()));
    }
    let model: TrainedModel = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    model.validate().map_err(corrupt)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{fit_forest, fit_logistic, fit_naive_bayes, fit_tree, ForestParams, LogisticParams, TreeParams};
    use crate::deeptrust::build_model;

    fn data() -> Dataset {
        let n = 30;
        Dataset {
            feature_names: vec!["a".into(), "b".into()],
            schema_version: "fs-1".into(),
            user_ids: (0..n).map(|i| format!("u{i}")).collect(),
            rows: (0..n).map(|i| vec![i as f64 * 0.37, ((i * 7) % 11) as f64]).collect(),
            labels: (0..n).map(|i| if i < 15 { Label::NotTrusted } else { Label::Trusted }).collect(),
        }
    }

    fn all_models(ds: &Dataset) -> Vec<TrainedModel> {
        let mut dt = build_model(2, 6, 0.5, 3).unwrap();
        dt.standardizer = Some(Standardizer::fit(&ds.rows).unwrap());
        dt.feature_schema_version = ds.schema_version.clone();
        let std = |f: &dyn Fn(&[Vec<f64>], &[Label]) -> StoredClassifier| {
            let s = Standardizer::fit(&ds.rows).unwrap();
            let z = s.transform_all(&ds.rows).unwrap();
            TrainedModel::new(ds, Some(s), f(&z, &ds.labels))
        };
        vec![
            TrainedModel::from_deeptrust(dt, ds),
            std(&|z, l| StoredClassifier::DecisionTree(fit_tree(z, l, TreeParams::default(), 0).unwrap())),
            std(&|z, l| {
                StoredClassifier::RandomForest(
                    fit_forest(z, l, ForestParams { trees: 7, ..Default::default() }, 1).unwrap(),
                )
            }),
            std(&|z, l| StoredClassifier::NaiveBayes(fit_naive_bayes(z, l).unwrap())),
            std(&|z, l| StoredClassifier::Logistic(fit_logistic(z, l, LogisticParams::default(), 2).unwrap())),
        ]
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let ds = data();
        let dir = tempfile::tempdir().unwrap();
        for m in all_models(&ds) {
            let path = dir.path().join(format!("{}.json", m.kind()));
            save_model(&m, &path).unwrap();
            let back = load_model(&path).unwrap();
            assert_eq!(back, m);
            for r in &ds.rows {
                assert_eq!(
                    back.predict_proba(r).unwrap().to_bits(),
                    m.predict_proba(r).unwrap().to_bits()
                );
            }
            let path2 = dir.path().join("again.json");
            save_model(&back, &path2).unwrap();
            assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
        }
    }

    #[test]
    fn corrupt_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(&p, "").unwrap();
        assert!(matches!(load_model(&p), Err(Error::CorruptModel { .. })));
        std::fs::write(&p, "{\"schema_version\": 3").unwrap();
        assert!(matches!(load_model(&p), Err(Error::CorruptModel { .. })));
        let ds = data();
        let mut m = all_models(&ds).remove(0);
        m.schema_version = "deeptrust-model-v0".into();
        save_model(&m, &p).unwrap();
        let err = load_model(&p).unwrap_err();
        assert!(err.to_string().contains("deeptrust-model-v0"));
        assert!(load_model(&dir.path().join("nope.json")).unwrap_err().is_io());
    }

    #[test]
    fn schema_checked() {
        let ds = data();
        let m = all_models(&ds).remove(1);
        let mut other = ds.clone();
        other.schema_version = "fs-2".into();
        assert!(matches!(m.check_schema(&other), Err(Error::SchemaMismatch { .. })));
        let v = FeatureVector {
            values: vec![1.0, 2.0],
            schema_version: "fs-2".into(),
        };
        assert!(m.predict_vector(&v).is_err());
        assert!(m.predict_proba(&[1.0]).is_err());
    }
}
