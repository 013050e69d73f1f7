//! Per-user feature vectors in three tiers (message, account, combined),
//! z-score standardization, and CDF / scatter-matrix exports.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Corpus, DuplicateStats, Label, LabeledUser, MessageRecord, UserRecord};
use crate::error::{Error, Result};
use crate::sentiment::{profile_from_polarities, score_text, Lexicon};
use crate::text;

pub const SCHEMA_VERSION: &str = "deeptrust-features-v1";

const DAY_SECONDS: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Message,
    Account,
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: &'static str,
    pub tier: Tier,
    pub description: &'static str,
}

const fn spec(name: &'static str, tier: Tier, description: &'static str) -> FeatureSpec {
    FeatureSpec {
        name,
        tier,
        description,
    }
}

/// Feature order of [`SCHEMA_VERSION`]. Never reorder within a version.
pub const FEATURES: &[FeatureSpec] = &[
    spec("mean_char_count", Tier::Message, "mean characters per message"),
    spec("mean_word_count", Tier::Message, "mean whitespace-delimited words per message"),
    spec("mean_hashtag_count", Tier::Message, "mean hashtags per message"),
    spec("mean_mention_count", Tier::Message, "mean mentions per message"),
    spec("mean_url_count", Tier::Message, "mean URLs per message"),
    spec("mean_emoji_count", Tier::Message, "mean emoji code points per message"),
    spec("mean_retweet_count", Tier::Message, "mean retweets received per message"),
    spec("mean_reply_count", Tier::Message, "mean replies received per message"),
    spec("retweet_fraction", Tier::Message, "fraction of messages that are retweets"),
    spec("mean_positive_terms", Tier::Message, "mean positive lexicon terms per message"),
    spec("mean_negative_terms", Tier::Message, "mean negative lexicon terms per message"),
    spec("mean_polarity", Tier::Message, "mean message polarity"),
    spec("follower_count", Tier::Account, "followers"),
    spec("friend_count", Tier::Account, "accounts followed"),
    spec("listed_count", Tier::Account, "public lists containing the account"),
    spec("statuses_count", Tier::Account, "lifetime messages posted"),
    spec("account_age_days", Tier::Account, "days between account creation and the reference time"),
    spec("verified", Tier::Account, "1 if verified"),
    spec("has_profile_image", Tier::Account, "1 if a profile image is set"),
    spec("follower_friend_ratio", Tier::Account, "followers / friends, 0 when friends is 0"),
    spec("hashtag_message_fraction", Tier::Combined, "fraction of messages with at least one hashtag"),
    spec("url_message_fraction", Tier::Combined, "fraction of messages with at least one URL"),
    spec("mention_message_fraction", Tier::Combined, "fraction of messages with at least one mention"),
    spec("profile_sentiment", Tier::Combined, "(positive - negative messages) / messages"),
    spec("duplicate_fraction", Tier::Combined, "fraction of posted texts that repeated an earlier one"),
    spec("negative_message_fraction", Tier::Combined, "fraction of messages with negative polarity"),
    spec("messages_per_day", Tier::Combined, "messages per day over the observed span (min one day)"),
];

pub fn feature_names() -> Vec<String> {
    FEATURES.iter().map(|f| f.name.to_string()).collect()
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURES.iter().position(|f| f.name == name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema_version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub vector: FeatureVector,
    /// Set when the user had no messages; message and combined tiers are 0.
    pub empty_history: bool,
}

#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    lexicon: Lexicon,
    reference_time: i64,
}

impl FeatureExtractor {
    /// `reference_time` anchors account age (epoch seconds).
    pub fn new(lexicon: Lexicon, reference_time: i64) -> Self {
        FeatureExtractor {
            lexicon,
            reference_time,
        }
    }

    /// Uses the corpus's latest message timestamp as the reference time,
    /// falling back to the latest account creation time.
    pub fn for_corpus(lexicon: Lexicon, corpus: &Corpus) -> Self {
        let reference = corpus
            .latest_timestamp()
            .or_else(|| corpus.users.iter().map(|u| u.account_created).max())
            .unwrap_or(0);
        Self::new(lexicon, reference)
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// `duplicates` carries the pre-filtering duplicate counts; when absent
    /// the duplicate fraction is measured on `messages` directly.
    pub fn extract(
        &self,
        user: &UserRecord,
        messages: &[MessageRecord],
        duplicates: Option<DuplicateStats>,
    ) -> Extracted {
        let mut v = Vec::with_capacity(FEATURES.len());
        let n = messages.len();
        let nf = n.max(1) as f64;
        let mean = |f: &dyn Fn(&MessageRecord) -> f64| messages.iter().map(f).sum::<f64>() / nf;
        let frac = |f: &dyn Fn(&MessageRecord) -> bool| messages.iter().filter(|m| f(m)).count() as f64 / nf;

        let scores: Vec<_> = messages.iter().map(|m| score_text(&self.lexicon, &m.text)).collect();
        let score_mean = |f: &dyn Fn(&crate::sentiment::SentimentResult) -> f64| {
            scores.iter().map(f).sum::<f64>() / nf
        };

        v.push(mean(&|m| m.text.chars().count() as f64));
        v.push(mean(&|m| m.text.split_whitespace().count() as f64));
        v.push(mean(&|m| m.hashtags.len() as f64));
        v.push(mean(&|m| m.mentions.len() as f64));
        v.push(mean(&|m| m.urls.len() as f64));
        v.push(mean(&|m| text::emoji_count(&m.text) as f64));
        v.push(mean(&|m| m.retweet_count as f64));
        v.push(mean(&|m| m.reply_count as f64));
        v.push(frac(&|m| m.is_retweet));
        v.push(score_mean(&|s| s.positive_count as f64));
        v.push(score_mean(&|s| s.negative_count as f64));
        v.push(score_mean(&|s| s.polarity));

        let age_secs = (self.reference_time - user.account_created).max(0);
        v.push(user.follower_count as f64);
        v.push(user.friend_count as f64);
        v.push(user.listed_count as f64);
        v.push(user.statuses_count as f64);
        v.push(age_secs as f64 / DAY_SECONDS);
        v.push(if user.verified { 1.0 } else { 0.0 });
        v.push(if user.has_profile_image { 1.0 } else { 0.0 });
        v.push(if user.friend_count == 0 {
            0.0
        } else {
            user.follower_count as f64 / user.friend_count as f64
        });

        v.push(frac(&|m| !m.hashtags.is_empty()));
        v.push(frac(&|m| !m.urls.is_empty()));
        v.push(frac(&|m| !m.mentions.is_empty()));
        v.push(profile_from_polarities(scores.iter().map(|s| s.polarity)));
        let dup = duplicates.unwrap_or_else(|| DuplicateStats::of(messages));
        v.push(if n == 0 { 0.0 } else { dup.fraction() });
        v.push(scores.iter().filter(|s| s.polarity < 0.0).count() as f64 / nf);
        v.push(match (messages.iter().map(|m| m.timestamp).min(), messages.iter().map(|m| m.timestamp).max()) {
            (Some(lo), Some(hi)) => n as f64 / ((hi - lo) as f64 / DAY_SECONDS).max(1.0),
            _ => 0.0,
        });

        debug_assert_eq!(v.len(), FEATURES.len());
        Extracted {
            vector: FeatureVector {
                values: v,
                schema_version: SCHEMA_VERSION.to_string(),
            },
            empty_history: n == 0,
        }
    }
}

/// Feature rows for labeled users, in a fixed user order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub schema_version: String,
    pub user_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.target()).collect()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            schema_version: self.schema_version.clone(),
            user_ids: indices.iter().map(|&i| self.user_ids[i].clone()).collect(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownFeature {
                name: name.to_string(),
                valid: self.feature_names.clone(),
            })
    }

    /// Appends one column; the schema version gains a `+name` suffix.
    pub fn push_column(&mut self, name: &str, values: &[f64]) -> Result<()> {
        if values.len() != self.rows.len() {
            return Err(Error::Dimension {
                context: "appended feature column",
                expected: self.rows.len(),
                actual: values.len(),
            });
        }
        self.feature_names.push(name.to_string());
        self.schema_version = format!("{}+{}", self.schema_version, name);
        for (row, v) in self.rows.iter_mut().zip(values) {
            row.push(*v);
        }
        Ok(())
    }

    /// `features.csv`: schema names then `label`, one row per user.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("label");
        out.write_record(&header)?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
            rec.push(label.as_str().to_string());
            out.write_record(&rec)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Extracts one row per labeled user. Users are processed in parallel;
/// the output order follows `pairs`.
pub fn extract_dataset(corpus: &Corpus, pairs: &[LabeledUser], extractor: &FeatureExtractor) -> Result<(Dataset, usize)> {
    let extracted: Vec<Extracted> = pairs
        .par_iter()
        .map(|p| {
            let user = corpus
                .user(&p.user_id)
                .ok_or_else(|| Error::invalid(format!("labeled user {:?} not in corpus", p.user_id)))?;
            Ok(extractor.extract(
                user,
                corpus.messages_of(&p.user_id),
                corpus.duplicates.get(&p.user_id).copied(),
            ))
        })
        .collect::<Result<_>>()?;
    let empty = extracted.iter().filter(|e| e.empty_history).count();
    Ok((
        Dataset {
            feature_names: feature_names(),
            schema_version: SCHEMA_VERSION.to_string(),
            user_ids: pairs.iter().map(|p| p.user_id.clone()).collect(),
            rows: extracted.into_iter().map(|e| e.vector.values).collect(),
            labels: pairs.iter().map(|p| p.label).collect(),
        },
        empty,
    ))
}

/// Per-feature z-score transform fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation per column.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::invalid(format!(
                "standardization needs at least 2 training vectors, got {}",
                rows.len()
            )));
        }
        let k = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::Dimension {
                context: "standardizer fit",
                expected: k,
                actual: bad.len(),
            });
        }
        let n = rows.len() as f64;
        let means: Vec<f64> = (0..k).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let stddevs = (0..k)
            .map(|j| (rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        Ok(Standardizer { means, stddevs })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// Zero-variance columns map to 0.
    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::Dimension {
                context: "standardizer transform",
                expected: self.dim(),
                actual: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.stddevs))
            .map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { 0.0 })
            .collect())
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }

    pub fn inverse(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.means.iter().zip(&self.stddevs))
            .map(|(z, (m, s))| z * s + m)
            .collect()
    }
}

/// Fits on `train` and applies to both sets.
pub fn standardize(train: &[Vec<f64>], apply_to: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, Standardizer)> {
    let s = Standardizer::fit(train)?;
    Ok((s.transform_all(train)?, s.transform_all(apply_to)?, s))
}

/// Empirical CDF over distinct values: `(value, fraction of samples <= value)`.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = if i + 1 == sorted.len() { 1.0 } else { (i + 1) as f64 / n };
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => out.push((*v, frac)),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    pub feature: String,
    /// `(class, value, cumulative fraction)` grouped by class.
    pub rows: Vec<(Label, f64, f64)>,
}

impl CdfTable {
    pub fn class_rows(&self, label: Label) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.0 == label)
            .map(|r| (r.1, r.2))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["label", &self.feature, "cumulative_fraction"])?;
        for (label, v, c) in &self.rows {
            out.write_record([label.as_str(), &v.to_string(), &c.to_string()])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub fn export_cdf(ds: &Dataset, feature: &str) -> Result<CdfTable> {
    let col = ds.column_index(feature)?;
    let mut rows = Vec::new();
    for label in [Label::NotTrusted, Label::Trusted] {
        let values: Vec<f64> = ds
            .rows
            .iter()
            .zip(&ds.labels)
            .filter(|(_, l)| **l == label)
            .map(|(r, _)| r[col])
            .collect();
        rows.extend(empirical_cdf(&values).into_iter().map(|(v, c)| (label, v, c)));
    }
    Ok(CdfTable {
        feature: feature.to_string(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterTable {
    pub features: Vec<String>,
    pub rows: Vec<(Vec<f64>, Label)>,
}

impl ScatterTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.features.iter().map(String::as_str).collect();
        header.push("label");
        out.write_record(&header)?;
        for (values, label) in &self.rows {
            let mut rec: Vec<String> = values.iter().map(f64::to_string).collect();
            rec.push(label.as_str().to_string());
            out.write_record(&rec)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub fn export_scatter_matrix(ds: &Dataset, features: &[&str]) -> Result<ScatterTable> {
    if features.len() < 2 {
        return Err(Error::invalid("scatter matrix needs at least 2 features"));
    }
    let mut cols = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        if features[..i].contains(f) {
            return Err(Error::invalid(format!("feature {f:?} requested twice")));
        }
        cols.push(ds.column_index(f)?);
    }
    Ok(ScatterTable {
        features: features.iter().map(|s| s.to_string()).collect(),
        rows: ds
            .rows
            .iter()
            .zip(&ds.labels)
            .map(|(r, l)| (cols.iter().map(|&c| r[c]).collect(), *l))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn extractor() -> FeatureExtractor {
        FeatureExtractor::new(Lexicon::builtin(), 100 * 86_400)
    }

    fn value(e: &Extracted, name: &str) -> f64 {
        e.vector.values[feature_index(name).unwrap()]
    }

    fn user() -> UserRecord {
        UserRecord {
            follower_count: 10,
            friend_count: 4,
            ..UserRecord::new("a")
        }
    }

    #[test]
    fn schema_has_unique_names() {
        let names = feature_names();
        let mut dedup = names.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), names.len());
        assert_eq!(names.len(), 27);
    }

    #[test]
    fn single_message_entity_counts() {
        let m = MessageRecord::from_text("1", "a", "Vote! #election @bob http://t.co/x", 0);
        let e = extractor().extract(&user(), &[m], None);
        assert_eq!(value(&e, "mean_hashtag_count"), 1.0);
        assert_eq!(value(&e, "mean_mention_count"), 1.0);
        assert_eq!(value(&e, "mean_url_count"), 1.0);
        assert_eq!(value(&e, "follower_friend_ratio"), 2.5);
        assert!(!e.empty_history);
    }

    #[test]
    fn zero_friends_gives_zero_ratio() {
        let u = UserRecord {
            friend_count: 0,
            ..user()
        };
        assert_eq!(value(&extractor().extract(&u, &[], None), "follower_friend_ratio"), 0.0);
    }

    #[test]
    fn url_fraction() {
        let ms = [
            MessageRecord::from_text("1", "a", "see https://x.y/z", 0),
            MessageRecord::from_text("2", "a", "no link", 10),
        ];
        assert_eq!(value(&extractor().extract(&user(), &ms, None), "url_message_fraction"), 0.5);
    }

    #[test]
    fn empty_history_zeroes_message_tiers() {
        let e = extractor().extract(&user(), &[], None);
        assert!(e.empty_history);
        for (f, v) in FEATURES.iter().zip(&e.vector.values) {
            if f.tier != Tier::Account {
                assert_eq!(*v, 0.0, "{}", f.name);
            }
        }
        assert_eq!(value(&e, "account_age_days"), 100.0);
    }

    #[test]
    fn duplicate_fraction_prefers_recorded_stats() {
        let ms = [
            MessageRecord::from_text("1", "a", "same", 0),
            MessageRecord::from_text("2", "a", "same", 1),
        ];
        let e = extractor().extract(&user(), &ms, None);
        assert_eq!(value(&e, "duplicate_fraction"), 0.5);
        let stats = DuplicateStats {
            posted: 4,
            duplicates: 1,
        };
        let e = extractor().extract(&user(), &ms[..1], Some(stats));
        assert_eq!(value(&e, "duplicate_fraction"), 0.25);
    }

    #[test]
    fn standardize_examples() {
        let train = vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![6.0, 5.0]];
        let (zt, _, s) = standardize(&train, &[]).unwrap();
        let col: Vec<f64> = zt.iter().map(|r| r[0]).collect();
        let mean = col.iter().sum::<f64>() / 3.0;
        let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
        assert!(mean.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
        assert!(zt.iter().all(|r| r[1] == 0.0));
        assert_eq!(s.transform(&s.means.clone()).unwrap(), vec![0.0, 0.0]);
        assert!(Standardizer::fit(&train[..1]).is_err());
    }

    #[test]
    fn cdf_of_three_values() {
        assert_eq!(empirical_cdf(&[3.0, 1.0, 2.0]), vec![(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)]);
        assert_eq!(empirical_cdf(&[2.0, 2.0]), vec![(2.0, 1.0)]);
        assert!(empirical_cdf(&[]).is_empty());
    }

    fn tiny_dataset() -> Dataset {
        Dataset {
            feature_names: vec!["a".into(), "b".into(), "c".into()],
            schema_version: "t".into(),
            user_ids: vec!["x".into(), "y".into(), "z".into()],
            rows: vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]],
            labels: vec![Label::Trusted, Label::Trusted, Label::Trusted],
        }
    }

    #[test]
    fn cdf_export_handles_empty_class_and_unknown_feature() {
        let ds = tiny_dataset();
        let t = export_cdf(&ds, "b").unwrap();
        assert!(t.class_rows(Label::NotTrusted).is_empty());
        assert_eq!(t.class_rows(Label::Trusted).last().unwrap().1, 1.0);
        match export_cdf(&ds, "nope") {
            Err(Error::UnknownFeature { valid, .. }) => assert_eq!(valid, vec!["a", "b", "c"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scatter_shape_and_validation() {
        let ds = tiny_dataset();
        let t = export_scatter_matrix(&ds, &["c", "a"]).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[0].0, vec![3.0, 1.0]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let csv = String::from_utf8(buf).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "c,a,label");
        assert_eq!(csv.lines().nth(1).unwrap(), "3,1,trusted");
        assert!(export_scatter_matrix(&ds, &["a", "a"]).is_err());
        assert!(export_scatter_matrix(&ds, &["a", "q"]).is_err());
        assert!(export_scatter_matrix(&ds, &["a"]).is_err());
    }

    proptest! {
        #[test]
        fn vectors_are_finite_and_full_length(
            texts in proptest::collection::vec("[a-z #@:/.😀]{0,30}", 0..6),
            followers in 0u64..1000, friends in 0u64..1000, created in -10i64..10_000_000,
            stamps in proptest::collection::vec(0i64..1_000_000, 6),
        ) {
            let u = UserRecord { follower_count: followers, friend_count: friends, account_created: created, ..UserRecord::new("a") };
            let ms: Vec<_> = texts.iter().enumerate()
                .map(|(i, t)| MessageRecord::from_text(i.to_string(), "a", t.clone(), stamps[i]))
                .collect();
            let e = extractor().extract(&u, &ms, None);
            prop_assert_eq!(e.vector.values.len(), FEATURES.len());
            prop_assert!(e.vector.values.iter().all(|v| v.is_finite()));
            prop_assert_eq!(&e, &extractor().extract(&u, &ms, None));
        }

        #[test]
        fn standardize_inverts(rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 3), 2..20)) {
            let s = Standardizer::fit(&rows).unwrap();
            for r in &rows {
                let back = s.inverse(&s.transform(r).unwrap());
                for (j, (a, b)) in r.iter().zip(&back).enumerate() {
                    if s.stddevs[j] > 0.0 {
                        prop_assert!((a - b).abs() < 1e-9);
                    }
                }
            }
        }

        #[test]
        fn cdf_monotone_and_complete(values in proptest::collection::vec(-100f64..100.0, 1..50)) {
            let c = empirical_cdf(&values);
            prop_assert_eq!(c.last().unwrap().1, 1.0);
            for w in c.windows(2) {
                prop_assert!(w[0].0 < w[1].0 && w[0].1 <= w[1].1);
            }
        }
    }
}
