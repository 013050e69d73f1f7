//! Comparison classifiers: CART decision tree, random forest with
//! impurity-based feature ranking, Gaussian naive Bayes and logistic
//! regression.

pub mod bayes;
pub mod forest;
pub mod logistic;
pub mod tree;

pub use bayes::{fit_naive_bayes, NaiveBayesModel};
pub use forest::{feature_importance, fit_forest, ForestParams, RandomForest};
pub use logistic::{fit_logistic, LogisticModel, LogisticParams};
pub use tree::{fit_tree, gini, DecisionTree, TreeParams};

use crate::classifier::{Classifier, Learner, Standardized};
use crate::error::Result;
use crate::features::Dataset;

pub struct TreeLearner(pub TreeParams);
pub struct ForestLearner(pub ForestParams);
pub struct NaiveBayesLearner;
pub struct LogisticLearner(pub LogisticParams);

impl Learner for TreeLearner {
    fn name(&self) -> &str {
        "decision_tree"
    }

    fn fit(&self, train: &Dataset, seed: u64) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(Standardized::fit_with(train, |z, l| fit_tree(z, l, self.0, seed))?))
    }
}

impl Learner for ForestLearner {
    fn name(&self) -> &str {
        "random_forest"
    }

    fn fit(&self, train: &Dataset, seed: u64) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(Standardized::fit_with(train, |z, l| fit_forest(z, l, self.0, seed))?))
    }
}

impl Learner for NaiveBayesLearner {
    fn name(&self) -> &str {
        "naive_bayes"
    }

    fn fit(&self, train: &Dataset, _seed: u64) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(Standardized::fit_with(train, fit_naive_bayes)?))
    }
}

impl Learner for LogisticLearner {
    fn name(&self) -> &str {
        "logistic_regression"
    }

    fn fit(&self, train: &Dataset, seed: u64) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(Standardized::fit_with(train, |z, l| fit_logistic(z, l, self.0, seed))?))
    }
}
