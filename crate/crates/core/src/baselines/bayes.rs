use serde::{Deserialize, Serialize};

use crate::classifier::ScoreModel;
use crate::data::Label;
use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes over two classes; index 0 is not trusted, 1 trusted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

pub fn fit_naive_bayes(rows: &[Vec<f64>], labels: &[Label]) -> Result<NaiveBayesModel> {
    if rows.len() != labels.len() {
        return Err(Error::Dimension {
            context: "labels",
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    let k = rows.first().map_or(0, Vec::len);
    let mut priors = [0.0; 2];
    let mut means = [vec![0.0; k], vec![0.0; k]];
    let mut variances = [vec![0.0; k], vec![0.0; k]];
    for class in [Label::NotTrusted, Label::Trusted] {
        let c = (class == Label::Trusted) as usize;
        let members: Vec<&Vec<f64>> = rows
            .iter()
            .zip(labels)
            .filter(|(_, l)| **l == class)
            .map(|(r, _)| r)
            .collect();
        if members.is_empty() {
            return Err(Error::invalid(format!("class {class} absent from training data")));
        }
        let n = members.len() as f64;
        priors[c] = n / rows.len() as f64;
        for j in 0..k {
            let mean = members.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = members.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            means[c][j] = mean;
            variances[c][j] = var.max(VARIANCE_FLOOR);
        }
    }
    Ok(NaiveBayesModel {
        priors,
        means,
        variances,
    })
}

impl NaiveBayesModel {
    fn log_joint(&self, c: usize, x: &[f64]) -> f64 {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        self.priors[c].ln()
            + x.iter()
                .zip(self.means[c].iter().zip(&self.variances[c]))
                .map(|(x, (m, v))| -0.5 * (ln_2pi + v.ln() + (x - m).powi(2) / v))
                .sum::<f64>()
    }

    /// `[P(not trusted | x), P(trusted | x)]` via log-sum-exp.
    pub fn posterior(&self, x: &[f64]) -> Result<[f64; 2]> {
        if x.len() != self.means[0].len() {
            return Err(Error::Dimension {
                context: "naive Bayes input",
                expected: self.means[0].len(),
                actual: x.len(),
            });
        }
        let l = [self.log_joint(0, x), self.log_joint(1, x)];
        let max = l[0].max(l[1]);
        let lse = max + ((l[0] - max).exp() + (l[1] - max).exp()).ln();
        Ok([(l[0] - lse).exp(), (l[1] - lse).exp()])
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        let p = self.posterior(x)?;
        Ok(if p[1] >= p[0] { Label::Trusted } else { Label::NotTrusted })
    }
}

impl ScoreModel for NaiveBayesModel {
    fn score(&self, z: &[f64]) -> Result<f64> {
        Ok(self.posterior(z)?[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(n_not: usize, n_tr: usize) -> Vec<Label> {
        std::iter::repeat_n(Label::NotTrusted, n_not)
            .chain(std::iter::repeat_n(Label::Trusted, n_tr))
            .collect()
    }

    #[test]
    fn symmetric_midpoint_is_even() {
        let rows = vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]];
        let m = fit_naive_bayes(&rows, &labels(2, 2)).unwrap();
        let p = m.posterior(&[0.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn priors_from_counts() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let m = fit_naive_bayes(&rows, &labels(30, 70)).unwrap();
        assert!((m.priors[0] - 0.3).abs() < 1e-15 && (m.priors[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn far_point_goes_to_nearer_class() {
        // Class means -1 and +1, both variance 1: the log-odds at x are 2x,
        // so at x = 10 the trusted posterior is 1/(1+e^-20).
        let rows = vec![vec![-2.0], vec![0.0], vec![0.0], vec![2.0]];
        let m = fit_naive_bayes(&rows, &labels(2, 2)).unwrap();
        let p = m.posterior(&[10.0]).unwrap();
        let expected = 1.0 / (1.0 + (-20f64).exp());
        assert!((p[1] - expected).abs() < 1e-12);
        assert!(p[1] > 0.999_999);
    }

    #[test]
    fn missing_class_rejected() {
        let rows = vec![vec![1.0], vec![2.0]];
        assert!(fit_naive_bayes(&rows, &labels(2, 0)).is_err());
    }

    #[test]
    fn variance_floor_applies() {
        let rows = vec![vec![1.0], vec![1.0], vec![2.0], vec![3.0]];
        let m = fit_naive_bayes(&rows, &labels(2, 2)).unwrap();
        assert_eq!(m.variances[0][0], VARIANCE_FLOOR);
        assert!(m.posterior(&[1.0]).unwrap().iter().all(|p| p.is_finite()));
    }

    proptest! {
        #[test]
        fn posteriors_sum_to_one(
            rows in proptest::collection::vec(proptest::collection::vec(-5f64..5.0, 3), 4..30),
            q in proptest::collection::vec(-50f64..50.0, 3),
        ) {
            let n = rows.len();
            let l: Vec<Label> = (0..n).map(|i| if i % 2 == 0 { Label::Trusted } else { Label::NotTrusted }).collect();
            let m = fit_naive_bayes(&rows, &l).unwrap();
            let p = m.posterior(&q).unwrap();
            prop_assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        }
    }
}
