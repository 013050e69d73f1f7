//! Domain records, line-delimited ingestion, corpus filtering, label joins
//! and dataset splitting.

pub mod synth;

pub use synth::{generate_synthetic, SynthConfig, SyntheticCorpus};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

/// Per-author cap on retained messages, matching the timeline API limit.
pub const DEFAULT_MESSAGE_CAP: usize = 3200;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub message_id: String,
    pub author_id: String,
    pub text: String,
    pub timestamp: i64,
    pub retweet_count: u64,
    pub reply_count: u64,
    pub is_retweet: bool,
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
    pub urls: Vec<String>,
}

/// On-disk message shape; entity lists are recomputed from the text when
/// they are absent.
#[derive(Deserialize)]
struct RawMessage {
    message_id: String,
    author_id: String,
    text: String,
    #[serde(default)]
    timestamp: i64,
    #[serde(default)]
    retweet_count: u64,
    #[serde(default)]
    reply_count: u64,
    #[serde(default)]
    is_retweet: bool,
    hashtags: Option<Vec<String>>,
    mentions: Option<Vec<String>>,
    urls: Option<Vec<String>>,
}

impl From<RawMessage> for MessageRecord {
    fn from(raw: RawMessage) -> Self {
        let hashtags = raw.hashtags.unwrap_or_else(|| text::hashtags(&raw.text));
        let mentions = raw.mentions.unwrap_or_else(|| text::mentions(&raw.text));
        let urls = raw.urls.unwrap_or_else(|| text::urls(&raw.text));
        MessageRecord {
            message_id: raw.message_id,
            author_id: raw.author_id,
            text: raw.text,
            timestamp: raw.timestamp,
            retweet_count: raw.retweet_count,
            reply_count: raw.reply_count,
            is_retweet: raw.is_retweet,
            hashtags,
            mentions,
            urls,
        }
    }
}

impl MessageRecord {
    /// Builds a record with entity lists extracted from `text`.
    pub fn from_text(
        message_id: impl Into<String>,
        author_id: impl Into<String>,
        text: impl Into<String>,
        timestamp: i64,
    ) -> Self {
        let text = text.into();
        MessageRecord {
            message_id: message_id.into(),
            author_id: author_id.into(),
            hashtags: text::hashtags(&text),
            mentions: text::mentions(&text),
            urls: text::urls(&text),
            text,
            timestamp,
            retweet_count: 0,
            reply_count: 0,
            is_retweet: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    #[serde(default)]
    pub follower_count: u64,
    #[serde(default)]
    pub friend_count: u64,
    #[serde(default)]
    pub listed_count: u64,
    #[serde(default)]
    pub statuses_count: u64,
    #[serde(default)]
    pub account_created: i64,
    #[serde(default)]
    pub verified: bool,
    #[serde(default)]
    pub has_profile_image: bool,
    #[serde(default)]
    pub replied_by_others: u64,
    #[serde(default)]
    pub mentioned_by_others: u64,
    #[serde(default)]
    pub retweeted_by_others: u64,
}

impl UserRecord {
    pub fn new(user_id: impl Into<String>) -> Self {
        UserRecord {
            user_id: user_id.into(),
            follower_count: 0,
            friend_count: 0,
            listed_count: 0,
            statuses_count: 0,
            account_created: 0,
            verified: false,
            has_profile_image: false,
            replied_by_others: 0,
            mentioned_by_others: 0,
            retweeted_by_others: 0,
        }
    }
}

/// Duplicate texts an author posted, as observed by the first filtering
/// pass that saw their raw history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DuplicateStats {
    pub posted: usize,
    pub duplicates: usize,
}

impl DuplicateStats {
    pub fn fraction(&self) -> f64 {
        if self.posted == 0 {
            0.0
        } else {
            self.duplicates as f64 / self.posted as f64
        }
    }

    /// Counts exact duplicates (after NFC + trim) in a message history.
    pub fn of(messages: &[MessageRecord]) -> Self {
        let mut seen = HashSet::new();
        let duplicates = messages
            .iter()
            .filter(|m| !seen.insert(text::dedup_key(&m.text)))
            .count();
        DuplicateStats {
            posted: messages.len(),
            duplicates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub users: Vec<UserRecord>,
    /// Messages keyed by author id.
    pub messages: BTreeMap<String, Vec<MessageRecord>>,
    pub topic: String,
    /// Filled by [`filter_corpus`]; empty for raw corpora.
    pub duplicates: BTreeMap<String, DuplicateStats>,
}

impl Corpus {
    /// Number of users, the population size used by the acquaintance score.
    pub fn n(&self) -> usize {
        self.users.len()
    }

    pub fn message_count(&self) -> usize {
        self.messages.values().map(Vec::len).sum()
    }

    pub fn messages_of(&self, user_id: &str) -> &[MessageRecord] {
        self.messages.get(user_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn user(&self, user_id: &str) -> Option<&UserRecord> {
        self.users.iter().find(|u| u.user_id == user_id)
    }

    /// Latest message timestamp in the corpus, if any message exists.
    pub fn latest_timestamp(&self) -> Option<i64> {
        self.messages.values().flatten().map(|m| m.timestamp).max()
    }

    /// Recomputes the per-user interaction aggregates from the message set:
    /// replies and retweets received on the user's own messages, and
    /// mentions by other authors.
    pub fn recompute_interactions(&mut self) {
        let mut mention_counts: HashMap<String, u64> = HashMap::new();
        for (author, msgs) in &self.messages {
            for m in msgs {
                for target in &m.mentions {
                    let target = target.to_lowercase();
                    if target != author.to_lowercase() {
                        *mention_counts.entry(target).or_default() += 1;
                    }
                }
            }
        }
        for user in &mut self.users {
            let own = self.messages.get(&user.user_id).map(Vec::as_slice).unwrap_or(&[]);
            user.replied_by_others = own.iter().map(|m| m.reply_count).sum();
            user.retweeted_by_others = own
                .iter()
                .filter(|m| !m.is_retweet)
                .map(|m| m.retweet_count)
                .sum();
            user.mentioned_by_others = mention_counts
                .get(&user.user_id.to_lowercase())
                .copied()
                .unwrap_or(0);
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Malformed lines and orphan messages become errors instead of being
    /// skipped and counted.
    pub strict: bool,
    /// Derive replied/mentioned/retweeted-by-others from the message set.
    pub recompute_interactions: bool,
    pub topic: String,
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub orphans_dropped: usize,
    pub malformed_skipped: usize,
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l)))
}

/// Reads `users.jsonl` and `messages.jsonl` one line at a time.
pub fn load_corpus(users_path: &Path, messages_path: &Path, opts: &LoadOptions) -> Result<LoadedCorpus> {
    let mut malformed = 0usize;
    let mut users = Vec::new();
    let mut user_ids = HashSet::new();

    for (line_no, line) in open_lines(users_path)? {
        let line = line.map_err(|e| Error::io(users_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let problem = match serde_json::from_str::<UserRecord>(&line) {
            Ok(u) if user_ids.contains(&u.user_id) => format!("duplicate user_id {:?}", u.user_id),
            Ok(u) => {
                user_ids.insert(u.user_id.clone());
                users.push(u);
                continue;
            }
            Err(e) => e.to_string(),
        };
        if opts.strict {
            return Err(Error::Parse {
                path: users_path.to_path_buf(),
                line: line_no,
                message: problem,
            });
        }
        malformed += 1;
    }

    let mut messages: BTreeMap<String, Vec<MessageRecord>> = BTreeMap::new();
    let mut message_ids = HashSet::new();
    let mut orphans = 0usize;
    for (line_no, line) in open_lines(messages_path)? {
        let line = line.map_err(|e| Error::io(messages_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let problem = match serde_json::from_str::<RawMessage>(&line) {
            Ok(m) if message_ids.contains(&m.message_id) => {
                format!("duplicate message_id {:?}", m.message_id)
            }
            Ok(m) if !user_ids.contains(&m.author_id) => {
                if opts.strict {
                    format!("message {:?} has unknown author {:?}", m.message_id, m.author_id)
                } else {
                    orphans += 1;
                    continue;
                }
            }
            Ok(m) => {
                message_ids.insert(m.message_id.clone());
                messages
                    .entry(m.author_id.clone())
                    .or_default()
                    .push(m.into());
                continue;
            }
            Err(e) => e.to_string(),
        };
        if opts.strict {
            return Err(Error::Parse {
                path: messages_path.to_path_buf(),
                line: line_no,
                message: problem,
            });
        }
        malformed += 1;
    }

    let mut corpus = Corpus {
        users,
        messages,
        topic: opts.topic.clone(),
        duplicates: BTreeMap::new(),
    };
    if opts.recompute_interactions {
        corpus.recompute_interactions();
    }
    Ok(LoadedCorpus {
        corpus,
        orphans_dropped: orphans,
        malformed_skipped: malformed,
    })
}

fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl Iterator<Item = &'a T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the corpus in the same line-delimited format `load_corpus` reads.
/// Messages are grouped by author in user order.
pub fn save_corpus(corpus: &Corpus, users_path: &Path, messages_path: &Path) -> Result<()> {
    write_jsonl(users_path, corpus.users.iter())?;
    write_jsonl(
        messages_path,
        corpus.users.iter().flat_map(|u| corpus.messages_of(&u.user_id)),
    )
}

/// Drops zero-follower users, removes per-author duplicate texts (earliest
/// kept) and keeps each author's `per_user_cap` most recent messages.
///
/// Output messages are ordered by `(timestamp, message_id)`, which makes the
/// operation idempotent.
pub fn filter_corpus(c: &Corpus, per_user_cap: usize) -> Result<Corpus> {
    if per_user_cap == 0 {
        return Err(Error::invalid("per_user_cap must be at least 1"));
    }
    let users: Vec<UserRecord> = c
        .users
        .iter()
        .filter(|u| u.follower_count > 0)
        .cloned()
        .collect();

    let mut messages = BTreeMap::new();
    let mut duplicates = BTreeMap::new();
    for user in &users {
        let mut msgs = c.messages_of(&user.user_id).to_vec();
        msgs.sort_by(|a, b| (a.timestamp, &a.message_id).cmp(&(b.timestamp, &b.message_id)));
        let before = msgs.len();
        let mut seen = HashSet::new();
        msgs.retain(|m| seen.insert(text::dedup_key(&m.text)));
        let removed = before - msgs.len();

        let stats = match c.duplicates.get(&user.user_id) {
            Some(prev) => DuplicateStats {
                posted: prev.posted,
                duplicates: prev.duplicates + removed,
            },
            None => DuplicateStats {
                posted: before,
                duplicates: removed,
            },
        };
        duplicates.insert(user.user_id.clone(), stats);

        if msgs.len() > per_user_cap {
            msgs.drain(..msgs.len() - per_user_cap);
        }
        if !msgs.is_empty() {
            messages.insert(user.user_id.clone(), msgs);
        }
    }

    Ok(Corpus {
        users,
        messages,
        topic: c.topic.clone(),
        duplicates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NotTrusted,
    Trusted,
}

impl Label {
    /// Numeric target: 1 for trusted, 0 for not trusted.
    pub fn target(self) -> f64 {
        match self {
            Label::Trusted => 1.0,
            Label::NotTrusted => 0.0,
        }
    }

    pub fn from_target(t: f64) -> Self {
        if t >= 0.5 {
            Label::Trusted
        } else {
            Label::NotTrusted
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Trusted => "trusted",
            Label::NotTrusted => "not_trusted",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "trusted" => Ok(Label::Trusted),
            "not_trusted" => Ok(Label::NotTrusted),
            other => Err(Error::invalid(format!(
                "label must be trusted or not_trusted, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSet(pub BTreeMap<String, Label>);

impl LabelSet {
    pub fn get(&self, user_id: &str) -> Option<Label> {
        self.0.get(user_id).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(String, Label)> for LabelSet {
    fn from_iter<I: IntoIterator<Item = (String, Label)>>(iter: I) -> Self {
        LabelSet(iter.into_iter().collect())
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct LabelRow {
    user_id: String,
    label: String,
}

/// Reads `labels.csv` (`user_id,label`).
pub fn load_labels(path: &Path) -> Result<LabelSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let mut labels = BTreeMap::new();
    for (i, row) in reader.deserialize::<LabelRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        let label = row.label.parse().map_err(|e: Error| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        labels.insert(row.user_id, label);
    }
    Ok(LabelSet(labels))
}

pub fn save_labels(labels: &LabelSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for (user_id, label) in &labels.0 {
        w.serialize(LabelRow {
            user_id: user_id.clone(),
            label: label.as_str().to_string(),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledUser {
    pub user_id: String,
    pub label: Label,
}

#[derive(Debug, Clone)]
pub struct JoinResult {
    /// In corpus user order.
    pub pairs: Vec<LabeledUser>,
    pub unlabeled: usize,
    pub dangling: usize,
}

pub fn join_labels(c: &Corpus, labels: &LabelSet) -> Result<JoinResult> {
    let mut pairs = Vec::new();
    let mut unlabeled = 0;
    for user in &c.users {
        match labels.get(&user.user_id) {
            Some(label) => pairs.push(LabeledUser {
                user_id: user.user_id.clone(),
                label,
            }),
            None => unlabeled += 1,
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoLabeledUsers);
    }
    let ids: BTreeSet<&str> = c.users.iter().map(|u| u.user_id.as_str()).collect();
    let dangling = labels.0.keys().filter(|k| !ids.contains(k.as_str())).count();
    Ok(JoinResult {
        pairs,
        unlabeled,
        dangling,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
    pub stratify: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
            seed: 0,
            stratify: false,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, f) in [("train", self.train), ("validation", self.validation), ("test", self.test)] {
            if !(0.0..=1.0).contains(&f) {
                problems.push(format!("{name} fraction {f} outside [0, 1]"));
            }
        }
        let sum = self.train + self.validation + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            problems.push(format!("fractions sum to {sum}, expected 1"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }

    fn demanding(&self) -> usize {
        [self.train, self.validation, self.test]
            .iter()
            .filter(|&&f| f > 0.0)
            .count()
    }

    /// (train, validation, test) sizes for `n` items: floors for validation
    /// and test, at least one element for any partition with a positive
    /// fraction, remainder to train.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let alloc = |f: f64| {
            if f <= 0.0 {
                0
            } else {
                ((n as f64 * f + 1e-9).floor() as usize).max(1)
            }
        };
        let val = alloc(self.validation);
        let test = alloc(self.test);
        (n - val - test, val, test)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded shuffle followed by contiguous allocation per [`SplitSpec::sizes`].
pub fn split_dataset<T: Clone>(items: &[T], spec: &SplitSpec) -> Result<Split<T>> {
    spec.validate()?;
    let parts = spec.demanding();
    if items.len() < parts.max(3) {
        return Err(Error::invalid(format!(
            "cannot split {} items into {} non-empty partitions",
            items.len(),
            parts.max(3)
        )));
    }
    let mut shuffled = items.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let (n_train, n_val, _) = spec.sizes(items.len());
    let test = shuffled.split_off(n_train + n_val);
    let validation = shuffled.split_off(n_train);
    Ok(Split {
        train: shuffled,
        validation,
        test,
    })
}

/// Splits each stratum independently, then concatenates the partitions in
/// stratum order.
pub fn split_dataset_stratified<T: Clone, K: Ord>(
    items: &[T],
    spec: &SplitSpec,
    key: impl Fn(&T) -> K,
) -> Result<Split<T>> {
    spec.validate()?;
    let mut strata: BTreeMap<K, Vec<T>> = BTreeMap::new();
    for item in items {
        strata.entry(key(item)).or_default().push(item.clone());
    }
    let mut out = Split {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for (i, group) in strata.into_values().enumerate() {
        let sub = SplitSpec {
            seed: spec.seed.wrapping_add(i as u64),
            ..*spec
        };
        let part = split_dataset(&group, &sub)?;
        out.train.extend(part.train);
        out.validation.extend(part.validation);
        out.test.extend(part.test);
    }
    Ok(out)
}

/// Splits labeled users, honoring `spec.stratify`.
pub fn split_labeled(pairs: &[LabeledUser], spec: &SplitSpec) -> Result<Split<LabeledUser>> {
    if spec.stratify {
        split_dataset_stratified(pairs, spec, |p| p.label)
    } else {
        split_dataset(pairs, spec)
    }
}
