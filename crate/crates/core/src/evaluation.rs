//! K-fold cross-validation, the classification metric set and report files.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::Learner;
use crate::error::{Error, Result};
use crate::features::Dataset;

pub const REPORT_SCHEMA_VERSION: &str = "deeptrust-report-v1";
pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub n: usize,
    pub folds: Vec<Vec<usize>>,
}

/// Seeded shuffle of `0..n`, then round-robin assignment into `k` folds.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(vec![format!("K must be at least 2, got {k}")]));
    }
    if n < k {
        return Err(Error::invalid(format!("n < K: {n} samples cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan { k, seed, n, folds })
}

impl FoldPlan {
    /// Indices outside fold `i`, ascending.
    pub fn train_indices(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        v.sort_unstable();
        v
    }

    /// Seed handed to the learner for fold `i`.
    pub fn fold_seed(&self, i: usize) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64 + 1);
        rng.gen()
    }
}

/// Counts with not_trusted as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// Cohen's kappa. When both marginals collapse onto one class the
    /// chance agreement is 1 and agreement is perfect, reported as 1.
    pub fn kappa(&self) -> f64 {
        let n = self.total() as f64;
        let p0 = self.accuracy();
        let pred_pos = (self.tp + self.fp) as f64 / n;
        let true_pos = (self.tp + self.fn_) as f64 / n;
        let pe = pred_pos * true_pos + (1.0 - pred_pos) * (1.0 - true_pos);
        if pe >= 1.0 {
            return 1.0;
        }
        (p0 - pe) / (1.0 - pe)
    }

    pub fn precision(&self) -> f64 {
        match self.tp + self.fp {
            0 if self.fn_ == 0 => 1.0,
            0 => 0.0,
            d => self.tp as f64 / d as f64,
        }
    }

    pub fn recall(&self) -> f64 {
        match self.tp + self.fn_ {
            0 => 1.0,
            d => self.tp as f64 / d as f64,
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn add(&mut self, o: &Confusion) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
    }
}

/// Probabilities are P(trusted); a sample is predicted trusted at q ≥ 0.5.
pub fn confusion(probs: &[f64], targets: &[f64]) -> Confusion {
    let mut c = Confusion::default();
    for (q, t) in probs.iter().zip(targets) {
        match (*q >= 0.5, *t >= 0.5) {
            (false, false) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, true) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    c
}

/// Area under the ROC curve by the trapezoid rule over every distinct
/// score threshold. `None` when only one class is present.
pub fn roc_auc(scores: &[f64], targets: &[f64]) -> Option<f64> {
    let pos = targets.iter().filter(|t| **t >= 0.5).count();
    let neg = targets.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if targets[order[i]] >= 0.5 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let tpr = tp as f64 / pos as f64;
        let fpr = fp as f64 / neg as f64;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    Some(area)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub confusion: Confusion,
    pub accuracy: f64,
    pub kappa: f64,
    pub mae: f64,
    pub rmse: f64,
    /// `None` when every target equals its baseline.
    pub rae: Option<f64>,
    pub rrse: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
}

/// Metric set against 0/1 targets, with RAE/RRSE relative to the constant
/// predictor `tbar` (the training-target mean).
pub fn compute_metrics(probs: &[f64], targets: &[f64], tbar: f64) -> Result<Metrics> {
    metrics_with_baselines(probs, targets, &vec![tbar; targets.len()])
}

/// As [`compute_metrics`] with a per-sample baseline, used when pooling
/// folds that each have their own training mean.
pub fn metrics_with_baselines(probs: &[f64], targets: &[f64], baselines: &[f64]) -> Result<Metrics> {
    if probs.is_empty() {
        return Err(Error::invalid("no predictions to score"));
    }
    for (what, len) in [("targets", targets.len()), ("baselines", baselines.len())] {
        if len != probs.len() {
            return Err(Error::Dimension {
                context: what,
                expected: probs.len(),
                actual: len,
            });
        }
    }
    if let Some(q) = probs.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::invalid(format!("probability {q} outside [0, 1]")));
    }
    let n = probs.len() as f64;
    let (mut abs, mut sq, mut base_abs, mut base_sq) = (0.0, 0.0, 0.0, 0.0);
    for ((q, t), b) in probs.iter().zip(targets).zip(baselines) {
        abs += (q - t).abs();
        sq += (q - t).powi(2);
        base_abs += (b - t).abs();
        base_sq += (b - t).powi(2);
    }
    let c = confusion(probs, targets);
    Ok(Metrics {
        n: probs.len(),
        confusion: c,
        accuracy: c.accuracy(),
        kappa: c.kappa(),
        mae: abs / n,
        rmse: (sq / n).sqrt(),
        rae: (base_abs > 0.0).then(|| abs / base_abs),
        rrse: (base_sq > 0.0).then(|| (sq / base_sq).sqrt()),
        precision: c.precision(),
        recall: c.recall(),
        f1: c.f1(),
        auc: roc_auc(probs, targets),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub size: usize,
    pub seed: u64,
    pub error: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub metrics: Metrics,
    /// Mean of per-fold misclassification rates; `1 - accuracy` for holdout.
    pub mean_error: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub folds: Option<Vec<FoldResult>>,
}

struct FoldOutcome {
    indices: Vec<usize>,
    probs: Vec<f64>,
    tbar: f64,
    result: FoldResult,
}

fn train_mean(ds: &Dataset) -> f64 {
    ds.targets().iter().sum::<f64>() / ds.len() as f64
}

/// Runs one train/test cycle per fold (in parallel, each with its own seed)
/// and pools the predictions into one confusion matrix.
pub fn cross_validate(learner: &dyn Learner, dataset: &Dataset, plan: &FoldPlan) -> Result<EvalReport> {
    if plan.n != dataset.len() {
        return Err(Error::Dimension {
            context: "fold plan size",
            expected: dataset.len(),
            actual: plan.n,
        });
    }
    let outcomes = (0..plan.k)
        .into_par_iter()
        .map(|i| -> Result<FoldOutcome> {
            let wrap = |e| Error::Fold {
                fold: i,
                source: Box::new(e),
            };
            let train = dataset.subset(&plan.train_indices(i));
            let test = dataset.subset(&plan.folds[i]);
            let seed = plan.fold_seed(i);
            let model = learner.fit(&train, seed).map_err(wrap)?;
            let probs = model.predict_proba_batch(&test.rows).map_err(wrap)?;
            let c = confusion(&probs, &test.targets());
            Ok(FoldOutcome {
                indices: plan.folds[i].clone(),
                probs,
                tbar: train_mean(&train),
                result: FoldResult {
                    fold: i,
                    size: test.len(),
                    seed,
                    error: 1.0 - c.accuracy(),
                    accuracy: c.accuracy(),
                    confusion: c,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let targets = dataset.targets();
    let (mut probs, mut ts, mut bases) = (Vec::new(), Vec::new(), Vec::new());
    let mut pooled = Confusion::default();
    for o in &outcomes {
        for (idx, q) in o.indices.iter().zip(&o.probs) {
            probs.push(*q);
            ts.push(targets[*idx]);
            bases.push(o.tbar);
        }
        pooled.add(&o.result.confusion);
    }
    let metrics = metrics_with_baselines(&probs, &ts, &bases)?;
    debug_assert_eq!(metrics.confusion, pooled);
    let folds: Vec<FoldResult> = outcomes.into_iter().map(|o| o.result).collect();
    let mean_error = folds.iter().map(|f| f.error).sum::<f64>() / folds.len() as f64;
    Ok(EvalReport {
        model: learner.name().to_string(),
        metrics,
        mean_error,
        folds: Some(folds),
    })
}

/// Single train/test evaluation.
pub fn evaluate_holdout(learner: &dyn Learner, train: &Dataset, test: &Dataset, seed: u64) -> Result<EvalReport> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid("holdout needs non-empty train and test sets"));
    }
    let model = learner.fit(train, seed)?;
    let probs = model.predict_proba_batch(&test.rows)?;
    let metrics = compute_metrics(&probs, &test.targets(), train_mean(train))?;
    Ok(EvalReport {
        model: learner.name().to_string(),
        mean_error: 1.0 - metrics.accuracy,
        metrics,
        folds: None,
    })
}

/// Outcome of a paired sign-flip permutation test on per-fold accuracies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub mean_difference: f64,
    pub p_value: f64,
    pub permutations: usize,
    pub exact: bool,
}

/// Two-sided test of whether two classifiers evaluated on the same folds
/// differ in accuracy. Enumerates all sign patterns for up to 16 folds,
/// otherwise samples `samples` patterns with `seed`.
pub fn permutation_test(a: &[f64], b: &[f64], samples: usize, seed: u64) -> Result<PermutationTest> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            context: "paired fold scores",
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::invalid("permutation test needs at least one pair"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let k = d.len();
    let observed = d.iter().sum::<f64>() / k as f64;
    let tol = 1e-12 * observed.abs().max(1.0);
    let stat = |mask: u64| {
        d.iter()
            .enumerate()
            .map(|(i, v)| if mask >> i & 1 == 1 { -v } else { *v })
            .sum::<f64>()
            / k as f64
    };
    let (hits, total, exact) = if k <= 16 {
        let total = 1usize << k;
        let hits = (0..total as u64).filter(|m| stat(*m).abs() >= observed.abs() - tol).count();
        (hits, total, true)
    } else {
        let samples = samples.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = 1;
        for _ in 0..samples {
            let s: f64 = d.iter().map(|v| if rng.gen::<bool>() { -v } else { *v }).sum::<f64>() / k as f64;
            if s.abs() >= observed.abs() - tol {
                hits += 1;
            }
        }
        (hits, samples + 1, false)
    };
    Ok(PermutationTest {
        mean_difference: observed,
        p_value: hits as f64 / total as f64,
        permutations: total,
        exact,
    })
}

/// Cross-validates each candidate on the same plan and returns the index of
/// the one with the lowest mean error (earliest wins ties) with all reports.
pub fn select_model(candidates: &[&dyn Learner], dataset: &Dataset, plan: &FoldPlan) -> Result<(usize, Vec<EvalReport>)> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate models"));
    }
    let reports = candidates
        .iter()
        .map(|l| cross_validate(*l, dataset, plan))
        .collect::<Result<Vec<_>>>()?;
    let best = reports
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.mean_error.total_cmp(&b.1.mean_error).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok((best, reports))
}

/// Everything that goes into `report.json` besides the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: String,
    pub tool: String,
    pub tool_version: String,
    pub feature_schema_version: String,
    pub protocol: String,
    pub config: serde_json::Value,
    pub report: EvalReport,
}

impl ReportFile {
    pub fn new(report: EvalReport, feature_schema_version: &str, config: serde_json::Value) -> Self {
        ReportFile {
            schema_version: REPORT_SCHEMA_VERSION.to_string(),
            tool: "deeptrust".to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            feature_schema_version: feature_schema_version.to_string(),
            protocol: if report.folds.is_some() { "cross_validation" } else { "holdout" }.to_string(),
            config,
            report,
        }
    }
}

pub fn emit_report(report: &ReportFile, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(report)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<ReportFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// One-row `metrics.csv` summary; undefined values are left empty.
pub fn write_metrics_csv<W: Write>(report: &EvalReport, w: W) -> Result<()> {
    let m = &report.metrics;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "model", "n", "tp", "fp", "tn", "fn", "accuracy", "kappa", "mae", "rmse", "rae", "rrse", "precision",
        "recall", "f1", "auc", "mean_error",
    ])?;
    out.write_record([
        report.model.clone(),
        m.n.to_string(),
        m.confusion.tp.to_string(),
        m.confusion.fp.to_string(),
        m.confusion.tn.to_string(),
        m.confusion.fn_.to_string(),
        m.accuracy.to_string(),
        m.kappa.to_string(),
        m.mae.to_string(),
        m.rmse.to_string(),
        opt(m.rae),
        opt(m.rrse),
        m.precision.to_string(),
        m.recall.to_string(),
        m.f1.to_string(),
        opt(m.auc),
        report.mean_error.to_string(),
    ])?;
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::Classifier;
    use crate::data::Label;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fold_sizes() {
        let p = make_folds(10, 10, 1).unwrap();
        assert!(p.folds.iter().all(|f| f.len() == 1));
        let p = make_folds(11, 10, 1).unwrap();
        let mut sizes: Vec<usize> = p.folds.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, [1, 1, 1, 1, 1, 1, 1, 1, 1, 2]);
        assert_eq!(make_folds(105, 10, 3).unwrap(), make_folds(105, 10, 3).unwrap());
        assert!(make_folds(9, 10, 0).unwrap_err().to_string().contains("n < K"));
        assert!(make_folds(5, 1, 0).is_err());
    }

    #[test]
    fn kappa_fixture() {
        let c = Confusion {
            tp: 45,
            fn_: 5,
            fp: 10,
            tn: 40,
        };
        assert!(close(c.accuracy(), 0.85, 1e-12));
        assert!(close(c.kappa(), 0.70, 1e-12));
    }

    #[test]
    fn error_fixture() {
        let m = compute_metrics(&[0.8, 0.3], &[1.0, 0.0], 0.5).unwrap();
        assert!(close(m.mae, 0.25, 1e-9));
        assert!(close(m.rmse, 0.065f64.sqrt(), 1e-9));
        assert!(close(m.rmse, 0.25495, 1e-5));
        assert!(close(m.rae.unwrap(), 0.5, 1e-9));
        assert!(close(m.rrse.unwrap(), 0.26f64.sqrt(), 1e-9));
        assert!(close(m.rrse.unwrap(), 0.50990, 1e-5));
    }

    #[test]
    fn degenerate_relative_errors_are_undefined() {
        let m = compute_metrics(&[0.9, 0.7], &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(m.rae, None);
        assert_eq!(m.rrse, None);
        assert_eq!(m.auc, None);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"rae\":null"));
    }

    #[test]
    fn perfect_predictions() {
        let m = compute_metrics(&[1.0, 0.0, 0.9, 0.2], &[1.0, 0.0, 1.0, 0.0], 0.5).unwrap();
        assert_eq!((m.kappa, m.f1, m.auc), (1.0, 1.0, Some(1.0)));
    }

    #[test]
    fn invalid_inputs() {
        assert!(compute_metrics(&[], &[], 0.5).is_err());
        assert!(compute_metrics(&[0.5], &[1.0, 0.0], 0.5).is_err());
        assert!(compute_metrics(&[1.5], &[1.0], 0.5).is_err());
    }

    fn brute(probs: &[f64], targets: &[f64], tbar: f64) -> (f64, f64, f64, f64, f64, f64) {
        let n = probs.len() as f64;
        let (mut tp, mut fp, mut tn, mut fn_) = (0.0, 0.0, 0.0, 0.0);
        let (mut a, mut s, mut ba, mut bs) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..probs.len() {
            let pred_trusted = probs[i] >= 0.5;
            let trusted = targets[i] == 1.0;
            if !pred_trusted && !trusted {
                tp += 1.0;
            } else if !pred_trusted && trusted {
                fp += 1.0;
            } else if pred_trusted && trusted {
                tn += 1.0;
            } else {
                fn_ += 1.0;
            }
            a += (probs[i] - targets[i]).abs();
            s += (probs[i] - targets[i]) * (probs[i] - targets[i]);
            ba += (tbar - targets[i]).abs();
            bs += (tbar - targets[i]) * (tbar - targets[i]);
        }
        let acc = (tp + tn) / n;
        let pe = ((tp + fp) / n) * ((tp + fn_) / n) + ((tn + fn_) / n) * ((tn + fp) / n);
        let kappa = if pe == 1.0 { 1.0 } else { (acc - pe) / (1.0 - pe) };
        (acc, kappa, a / n, (s / n).sqrt(), a / ba, (s / bs).sqrt())
    }

    /// Fraction of (positive, negative) pairs ranked correctly, ties half.
    fn mann_whitney(scores: &[f64], targets: &[f64]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if targets[i] == 1.0 && targets[j] == 0.0 {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    fn prediction_set() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                proptest::collection::vec(prop_oneof![0f64..=1.0, Just(0.5), Just(0.25)], n),
                proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0)], n),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn agrees_with_brute_force((probs, mut targets) in prediction_set()) {
            targets[0] = 0.0;
            targets[1] = 1.0;
            let tbar = 0.37;
            let m = compute_metrics(&probs, &targets, tbar).unwrap();
            let (acc, kappa, mae, rmse, rae, rrse) = brute(&probs, &targets, tbar);
            prop_assert!(close(m.accuracy, acc, 1e-12));
            prop_assert!(close(m.kappa, kappa, 1e-12));
            prop_assert!(close(m.mae, mae, 1e-12));
            prop_assert!(close(m.rmse, rmse, 1e-12));
            prop_assert!(close(m.rae.unwrap(), rae, 1e-12));
            prop_assert!(close(m.rrse.unwrap(), rrse, 1e-12));
            prop_assert!(close(m.auc.unwrap(), mann_whitney(&probs, &targets), 1e-12));
            prop_assert!(m.mae <= m.rmse + 1e-15);
            prop_assert!(m.kappa <= m.accuracy + 1e-12);
            for r in [m.accuracy, m.precision, m.recall, m.f1, m.auc.unwrap()] {
                prop_assert!((0.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn auc_invariant_under_monotone_transform((probs, mut targets) in prediction_set()) {
            targets[0] = 0.0;
            targets[1] = 1.0;
            let squashed: Vec<f64> = probs.iter().map(|p| p.powi(3)).collect();
            prop_assert!(close(roc_auc(&probs, &targets).unwrap(), roc_auc(&squashed, &targets).unwrap(), 1e-12));
        }

        #[test]
        fn constant_predictor_has_zero_kappa((_, mut targets) in prediction_set(), q in prop_oneof![Just(0.1), Just(0.9)]) {
            targets[0] = 0.0;
            targets[1] = 1.0;
            let m = compute_metrics(&vec![q; targets.len()], &targets, 0.5).unwrap();
            prop_assert!(close(m.kappa, 0.0, 1e-12));
        }

        #[test]
        fn folds_partition(n in 2usize..300, k in 2usize..12, seed in any::<u64>()) {
            prop_assume!(n >= k);
            let p = make_folds(n, k, seed).unwrap();
            let mut all: Vec<usize> = p.folds.iter().flatten().copied().collect();
            all.sort();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let sizes: Vec<usize> = p.folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for i in 0..k {
                let tr = p.train_indices(i);
                prop_assert!(p.folds[i].iter().all(|x| tr.binary_search(x).is_err()));
                prop_assert_eq!(tr.len() + p.folds[i].len(), n);
            }
        }
    }

    fn dataset(n: usize) -> Dataset {
        Dataset {
            feature_names: vec!["x".into()],
            schema_version: "test".into(),
            user_ids: (0..n).map(|i| format!("u{i}")).collect(),
            rows: (0..n).map(|i| vec![i as f64]).collect(),
            labels: (0..n).map(|i| if i % 2 == 0 { Label::Trusted } else { Label::NotTrusted }).collect(),
        }
    }

    struct Parity;
    impl Classifier for Parity {
        fn predict_proba(&self, x: &[f64]) -> Result<f64> {
            Ok(if (x[0] as usize).is_multiple_of(2) { 1.0 } else { 0.0 })
        }
    }
    struct Constant;
    impl Classifier for Constant {
        fn predict_proba(&self, _: &[f64]) -> Result<f64> {
            Ok(1.0)
        }
    }

    struct Fixed(bool);
    impl Learner for Fixed {
        fn name(&self) -> &str {
            if self.0 {
                "oracle"
            } else {
                "constant"
            }
        }
        fn fit(&self, _: &Dataset, _: u64) -> Result<Box<dyn Classifier>> {
            Ok(if self.0 { Box::new(Parity) } else { Box::new(Constant) })
        }
    }

    struct Failing;
    impl Learner for Failing {
        fn name(&self) -> &str {
            "failing"
        }
        fn fit(&self, train: &Dataset, _: u64) -> Result<Box<dyn Classifier>> {
            if train.rows.iter().any(|r| r[0] == 3.0) {
                Ok(Box::new(Constant))
            } else {
                Err(Error::invalid("boom"))
            }
        }
    }

    #[test]
    fn oracle_and_constant_cv() {
        let ds = dataset(40);
        let plan = make_folds(40, 10, 2).unwrap();
        let r = cross_validate(&Fixed(true), &ds, &plan).unwrap();
        assert_eq!(r.metrics.accuracy, 1.0);
        assert_eq!(r.mean_error, 0.0);
        let r = cross_validate(&Fixed(false), &ds, &plan).unwrap();
        assert_eq!(r.metrics.accuracy, 0.5);
        assert_eq!(r.metrics.kappa, 0.0);
        assert_eq!(r.metrics.confusion.total(), 40);
        let folds = r.folds.as_ref().unwrap();
        let mean = folds.iter().map(|f| f.error).sum::<f64>() / 10.0;
        assert!(close(r.mean_error, mean, 1e-15));
    }

    #[test]
    fn fold_failure_names_fold() {
        let ds = dataset(20);
        let plan = make_folds(20, 10, 0).unwrap();
        let bad = plan.folds.iter().position(|f| f.contains(&3)).unwrap();
        let err = cross_validate(&Failing, &ds, &plan).unwrap_err();
        assert!(matches!(err, Error::Fold { fold, .. } if fold == bad), "{err}");
    }

    #[test]
    fn selection_prefers_lower_error() {
        let ds = dataset(30);
        let plan = make_folds(30, 5, 0).unwrap();
        let (best, reports) = select_model(&[&Fixed(false), &Fixed(true)], &ds, &plan).unwrap();
        assert_eq!(best, 1);
        assert_eq!(reports.len(), 2);
    }

    #[test]
    fn permutation_test_exact() {
        let a = [0.9; 10];
        let b = [0.5; 10];
        let t = permutation_test(&a, &b, 0, 0).unwrap();
        assert!(t.exact);
        assert_eq!(t.permutations, 1024);
        assert!(close(t.p_value, 2.0 / 1024.0, 1e-15));
        let same = permutation_test(&a, &a, 0, 0).unwrap();
        assert_eq!(same.p_value, 1.0);
        let big = permutation_test(&[0.9; 20], &[0.5; 20], 999, 1).unwrap();
        assert!(!big.exact && big.p_value < 0.01);
    }

    #[test]
    fn report_emission() {
        let ds = dataset(20);
        let r = cross_validate(&Fixed(false), &ds, &make_folds(20, 4, 0).unwrap()).unwrap();
        let file = ReportFile::new(r.clone(), "test", serde_json::json!({"cv": 4}));
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.json"), dir.path().join("b.json"));
        emit_report(&file, &p1).unwrap();
        emit_report(&file, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        assert_eq!(read_report(&p1).unwrap(), file);

        let holdout = evaluate_holdout(&Fixed(true), &ds.subset(&[0, 1, 2]), &ds.subset(&[3, 4]), 0).unwrap();
        let text = serde_json::to_string(&ReportFile::new(holdout, "test", serde_json::json!({}))).unwrap();
        assert!(!text.contains("\"folds\""));
        assert!(text.contains("\"holdout\""));
        assert!(emit_report(&file, &dir.path().join("missing/x.json")).unwrap_err().is_io());

        let mut buf = Vec::new();
        write_metrics_csv(&r, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }
}
