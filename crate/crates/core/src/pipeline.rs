//! End-to-end glue used by the command-line tool: corpus → dataset →
//! model, with the reputation signal optionally folded in.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    fit_forest, fit_logistic, fit_naive_bayes, fit_tree, ForestLearner, ForestParams, LogisticLearner,
    LogisticParams, NaiveBayesLearner, TreeLearner, TreeParams,
};
use crate::classifier::{Classifier, Learner, Standardized};
use crate::data::{join_labels, Corpus, Label, LabelSet, LabeledUser};
use crate::deeptrust::{DeepTrustConfig, DeepTrustLearner, TrainingHistory};
use crate::error::{Error, Result};
use crate::features::{extract_dataset, Dataset, FeatureExtractor};
use crate::model_io::{StoredClassifier, TrainedModel};
use crate::reputation::{score_users, ReputationScore, ThresholdConfig};
use crate::sentiment::Lexicon;

/// Name of the column appended in [`ReputationMode::Feature`].
pub const REPUTATION_COLUMN: &str = "reputation_rank";

/// How the acquaintance reputation enters classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReputationMode {
    #[default]
    Off,
    /// Normalized rank becomes an extra feature column.
    Feature,
    /// Users at or above θ are labeled trusted regardless of the classifier.
    Gate,
}

impl FromStr for ReputationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(ReputationMode::Off),
            "feature" => Ok(ReputationMode::Feature),
            "gate" => Ok(ReputationMode::Gate),
            other => Err(Error::invalid(format!("unknown reputation mode {other:?} (off, feature, gate)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[serde(rename = "deeptrust")]
    DeepTrust,
    DecisionTree,
    RandomForest,
    NaiveBayes,
    #[serde(rename = "logistic_regression")]
    Logistic,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::DeepTrust,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::NaiveBayes,
        ModelKind::Logistic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DeepTrust => "deeptrust",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::NaiveBayes => "naive_bayes",
            ModelKind::Logistic => "logistic_regression",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ModelKind::ALL.iter().map(|k| k.name()).collect();
                Error::invalid(format!("unknown model {s:?} (expected one of: {})", names.join(", ")))
            })
    }
}

/// Hyperparameters for every model kind.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelSettings {
    pub deeptrust: DeepTrustConfig,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub logistic: LogisticParams,
}

pub fn learner(kind: ModelKind, s: &ModelSettings) -> Box<dyn Learner> {
    match kind {
        ModelKind::DeepTrust => Box::new(DeepTrustLearner(s.deeptrust)),
        ModelKind::DecisionTree => Box::new(TreeLearner(s.tree)),
        ModelKind::RandomForest => Box::new(ForestLearner(s.forest)),
        ModelKind::NaiveBayes => Box::new(NaiveBayesLearner),
        ModelKind::Logistic => Box::new(LogisticLearner(s.logistic)),
    }
}

/// Trains `kind` on all of `ds`. DeepTrust also returns its epoch history.
pub fn fit_model(kind: ModelKind, s: &ModelSettings, ds: &Dataset, seed: u64) -> Result<(TrainedModel, Option<TrainingHistory>)> {
    Ok(match kind {
        ModelKind::DeepTrust => {
            let (m, h) = DeepTrustLearner(s.deeptrust).fit_model(ds, seed)?;
            (TrainedModel::from_deeptrust(m, ds), Some(h))
        }
        ModelKind::DecisionTree => {
            let m = Standardized::fit_with(ds, |z, l| fit_tree(z, l, s.tree, seed))?;
            (TrainedModel::from_standardized(m, ds, StoredClassifier::DecisionTree), None)
        }
        ModelKind::RandomForest => {
            let m = Standardized::fit_with(ds, |z, l| fit_forest(z, l, s.forest, seed))?;
            (TrainedModel::from_standardized(m, ds, StoredClassifier::RandomForest), None)
        }
        ModelKind::NaiveBayes => {
            let m = Standardized::fit_with(ds, fit_naive_bayes)?;
            (TrainedModel::from_standardized(m, ds, StoredClassifier::NaiveBayes), None)
        }
        ModelKind::Logistic => {
            let m = Standardized::fit_with(ds, |z, l| fit_logistic(z, l, s.logistic, seed))?;
            (TrainedModel::from_standardized(m, ds, StoredClassifier::Logistic), None)
        }
    })
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    /// Users with no messages; their message-derived features are zero.
    pub empty_history: usize,
    pub unlabeled: usize,
    pub dangling_labels: usize,
    /// Present unless the mode is `Off`.
    pub reputation: Option<BTreeMap<String, ReputationScore>>,
}

fn reputation_by_user(corpus: &Corpus, theta: ThresholdConfig) -> Result<BTreeMap<String, ReputationScore>> {
    Ok(score_users(&corpus.users, &theta)?
        .into_iter()
        .map(|s| (s.user_id.clone(), s))
        .collect())
}

fn finish(
    corpus: &Corpus,
    pairs: &[LabeledUser],
    lexicon: &Lexicon,
    mode: ReputationMode,
    theta: ThresholdConfig,
) -> Result<(Dataset, usize, Option<BTreeMap<String, ReputationScore>>)> {
    let extractor = FeatureExtractor::for_corpus(lexicon.clone(), corpus);
    let (mut dataset, empty) = extract_dataset(corpus, pairs, &extractor)?;
    let reputation = match mode {
        ReputationMode::Off => None,
        _ => Some(reputation_by_user(corpus, theta)?),
    };
    if let (ReputationMode::Feature, Some(rep)) = (mode, &reputation) {
        let col: Vec<f64> = dataset.user_ids.iter().map(|u| rep[u].normalized_rank).collect();
        dataset.push_column(REPUTATION_COLUMN, &col)?;
    }
    Ok((dataset, empty, reputation))
}

/// Features for every labeled user, in corpus order.
pub fn prepare_labeled(
    corpus: &Corpus,
    labels: &LabelSet,
    lexicon: &Lexicon,
    mode: ReputationMode,
    theta: ThresholdConfig,
) -> Result<Prepared> {
    let join = join_labels(corpus, labels)?;
    let (dataset, empty_history, reputation) = finish(corpus, &join.pairs, lexicon, mode, theta)?;
    Ok(Prepared {
        dataset,
        empty_history,
        unlabeled: join.unlabeled,
        dangling_labels: join.dangling,
        reputation,
    })
}

/// Features for every user in the corpus. Labels in the returned dataset
/// are placeholders and carry no meaning.
pub fn prepare_unlabeled(corpus: &Corpus, lexicon: &Lexicon, mode: ReputationMode, theta: ThresholdConfig) -> Result<Prepared> {
    if corpus.users.is_empty() {
        return Err(Error::invalid("corpus has no users"));
    }
    let pairs: Vec<LabeledUser> = corpus
        .users
        .iter()
        .map(|u| LabeledUser {
            user_id: u.user_id.clone(),
            label: Label::NotTrusted,
        })
        .collect();
    let (dataset, empty_history, reputation) = finish(corpus, &pairs, lexicon, mode, theta)?;
    Ok(Prepared {
        dataset,
        empty_history,
        unlabeled: 0,
        dangling_labels: 0,
        reputation,
    })
}

/// Reputation mode a model was trained with, read from its schema.
pub fn mode_of(model: &TrainedModel) -> ReputationMode {
    if model.feature_names.iter().any(|n| n == REPUTATION_COLUMN) {
        ReputationMode::Feature
    } else {
        ReputationMode::Off
    }
}

/// Copy of `prepared.dataset` with the normalized rank appended, for use
/// with [`GatedLearner`].
pub fn with_reputation_column(prepared: &Prepared) -> Result<Dataset> {
    let rep = prepared
        .reputation
        .as_ref()
        .ok_or_else(|| Error::invalid("reputation scores were not computed"))?;
    let mut ds = prepared.dataset.clone();
    let col: Vec<f64> = ds.user_ids.iter().map(|u| rep[u].normalized_rank).collect();
    ds.push_column(REPUTATION_COLUMN, &col)?;
    Ok(ds)
}

/// Wraps a learner for gate mode. Expects the normalized rank as the last
/// column: the inner model never sees it, and rows at or above θ score 1.
pub struct GatedLearner<'a> {
    pub inner: &'a dyn Learner,
    pub theta: ThresholdConfig,
}

struct Gated {
    inner: Box<dyn Classifier>,
    theta: f64,
}

impl Classifier for Gated {
    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        let (rank, rest) = x
            .split_last()
            .ok_or_else(|| Error::invalid("gated input has no reputation column"))?;
        if *rank >= self.theta {
            Ok(1.0)
        } else {
            self.inner.predict_proba(rest)
        }
    }
}

impl Learner for GatedLearner<'_> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn fit(&self, train: &Dataset, seed: u64) -> Result<Box<dyn Classifier>> {
        if train.feature_names.last().map(String::as_str) != Some(REPUTATION_COLUMN) {
            return Err(Error::invalid("gated training data lacks the reputation column"));
        }
        let mut stripped = train.clone();
        stripped.feature_names.pop();
        for row in &mut stripped.rows {
            row.pop();
        }
        Ok(Box::new(Gated {
            inner: self.inner.fit(&stripped, seed)?,
            theta: self.theta.theta,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserPrediction {
    pub user_id: String,
    pub probability: f64,
    pub label: Label,
    /// Label came from the reputation gate rather than the classifier.
    pub gated: bool,
}

/// Per-user T(U) and label; in gate mode, users at or above θ are trusted.
pub fn predict_users(
    model: &TrainedModel,
    prepared: &Prepared,
    gate: Option<&BTreeMap<String, ReputationScore>>,
) -> Result<Vec<UserPrediction>> {
    model.check_schema(&prepared.dataset)?;
    prepared
        .dataset
        .user_ids
        .iter()
        .zip(&prepared.dataset.rows)
        .map(|(id, row)| {
            let probability = model.predict_proba(row)?;
            let gated = gate
                .and_then(|g| g.get(id))
                .is_some_and(|r| r.trusted_by_threshold);
            let label = if gated { Label::Trusted } else { model.predict_label(row)? };
            Ok(UserPrediction {
                user_id: id.clone(),
                probability,
                label,
                gated,
            })
        })
        .collect()
}

/// `predictions.csv`: `user_id,probability,label,gated`.
pub fn write_predictions_csv<W: std::io::Write>(preds: &[UserPrediction], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["user_id", "probability", "label", "gated"])?;
    for p in preds {
        out.write_record([
            p.user_id.as_str(),
            &p.probability.to_string(),
            p.label.as_str(),
            if p.gated { "true" } else { "false" },
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
