//! Seeded synthetic corpus with a planted trusted / not-trusted signal.
//!
//! Each user has a class direction `z` in `[-1, 1]` (`+1` trusted, `-1` not
//! trusted, scaled by `1 - noise`). Trusted users get larger audiences,
//! longer and more positive messages, more links and mentions, and repost
//! their own text less often. With noise above zero a fraction `noise / 2`
//! of users additionally behave like the opposite class.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Corpus, Label, LabelSet, MessageRecord, UserRecord};
use crate::error::{Error, Result};
use crate::sentiment::Lexicon;
use crate::text;

/// Reference "collection time" for generated timestamps.
const COLLECTED_AT: i64 = 1_600_000_000;
const DAY: i64 = 86_400;

const NEUTRAL_WORDS: &[&str] = &[
    "the", "vote", "election", "today", "people", "state", "news", "report", "county",
    "ballot", "campaign", "debate", "poll", "speech", "rally", "city", "policy", "tax",
    "health", "jobs", "economy", "media", "watch", "live", "update", "week", "night",
    "morning", "president", "senate", "house", "court", "candidate", "result", "count",
    "district", "local", "national", "video", "story", "read", "share", "about", "with",
    "from", "this", "that", "here", "more", "still",
];

const HASHTAGS: &[&str] = &["election", "vote", "debate", "news", "breaking", "politics", "usa"];
const EMOJI: &[char] = &['😀', '🔥', '🇺', '👍', '😡', '🎉', '⭐', '🙏'];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub users: usize,
    pub trusted_fraction: f64,
    pub seed: u64,
    pub noise: f64,
    pub min_messages: usize,
    pub max_messages: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            users: 1000,
            trusted_fraction: 0.5,
            seed: 7,
            noise: 0.0,
            min_messages: 6,
            max_messages: 24,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.users < 2 {
            problems.push(format!("users must be at least 2, got {}", self.users));
        }
        if !(self.trusted_fraction > 0.0 && self.trusted_fraction < 1.0) {
            problems.push(format!("trusted_fraction must be in (0, 1), got {}", self.trusted_fraction));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            problems.push(format!("noise must be in [0, 1], got {}", self.noise));
        }
        if self.min_messages > self.max_messages {
            problems.push(format!(
                "min_messages ({}) exceeds max_messages ({})",
                self.min_messages, self.max_messages
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub labels: LabelSet,
    /// Feature names the generator plants class signal in.
    pub signal_features: Vec<&'static str>,
}

pub const SIGNAL_FEATURES: &[&str] = &[
    "mean_char_count",
    "mean_word_count",
    "mean_positive_terms",
    "mean_negative_terms",
    "mean_polarity",
    "mean_url_count",
    "mean_mention_count",
    "mean_hashtag_count",
    "mean_emoji_count",
    "retweet_fraction",
    "follower_count",
    "friend_count",
    "listed_count",
    "account_age_days",
    "verified",
    "follower_friend_ratio",
    "url_message_fraction",
    "mention_message_fraction",
    "hashtag_message_fraction",
    "profile_sentiment",
    "duplicate_fraction",
    "negative_message_fraction",
];

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        Normal::new(mean, sd).expect("finite parameters").sample(&mut self.rng)
    }

    fn log_normal_count(&mut self, mu: f64, sd: f64) -> u64 {
        self.normal(mu, sd).exp().floor().max(0.0) as u64
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen::<f64>() < p.clamp(0.0, 1.0)
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.rng.gen_range(0..items.len())]
    }
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };
    let lexicon = Lexicon::builtin();
    let positive: Vec<&str> = lexicon.positive_terms().iter().map(String::as_str).collect();
    let negative: Vec<&str> = lexicon.negative_terms().iter().map(String::as_str).collect();

    let width = cfg.users.to_string().len().max(5);
    let ids: Vec<String> = (0..cfg.users).map(|i| format!("u{i:0width$}")).collect();

    let n_trusted = (cfg.users as f64 * cfg.trusted_fraction).round() as usize;
    let mut order: Vec<usize> = (0..cfg.users).collect();
    order.shuffle(&mut g.rng);
    let mut is_trusted = vec![false; cfg.users];
    for &i in &order[..n_trusted] {
        is_trusted[i] = true;
    }

    let strength = 1.0 - cfg.noise;
    let mut users = Vec::with_capacity(cfg.users);
    let mut messages: BTreeMap<String, Vec<MessageRecord>> = BTreeMap::new();
    let mut labels = BTreeMap::new();

    for (i, id) in ids.iter().enumerate() {
        let label = if is_trusted[i] { Label::Trusted } else { Label::NotTrusted };
        labels.insert(id.clone(), label);

        let mut direction = if is_trusted[i] { 1.0 } else { -1.0 };
        if cfg.noise > 0.0 && g.chance(cfg.noise / 2.0) {
            direction = -direction;
        }
        let z = direction * strength;

        let followers = g.log_normal_count(5.0 + 1.6 * z, 0.7).max(1);
        let age_days = g.normal(6.5 + 0.5 * z, 0.5).exp().round() as i64;
        let user = UserRecord {
            user_id: id.clone(),
            follower_count: followers,
            friend_count: g.log_normal_count(5.0 - 0.3 * z, 0.8),
            listed_count: g.log_normal_count(1.5 + 1.2 * z, 0.8).saturating_sub(1),
            statuses_count: g.log_normal_count(7.0 + 0.3 * z, 1.0),
            account_created: COLLECTED_AT - (age_days + 60) * DAY,
            verified: g.chance(0.15 + 0.15 * z),
            has_profile_image: g.chance(0.85 + 0.1 * z),
            replied_by_others: 0,
            mentioned_by_others: 0,
            retweeted_by_others: 0,
        };

        let count = g.rng.gen_range(cfg.min_messages..=cfg.max_messages);
        let mut stamps: Vec<i64> = (0..count)
            .map(|_| COLLECTED_AT - g.rng.gen_range(0..60 * DAY))
            .collect();
        stamps.sort_unstable();

        let audience = (followers as f64 + 1.0).ln();
        let mut texts: Vec<String> = Vec::with_capacity(count);
        let mut user_msgs = Vec::with_capacity(count);
        for (j, &ts) in stamps.iter().enumerate() {
            let repost = !texts.is_empty() && g.chance(0.08 - 0.07 * z);
            let is_retweet = g.chance(0.25 - 0.1 * z);
            let body = if repost {
                g.pick(&texts).clone()
            } else {
                let mut words: Vec<String> = Vec::new();
                if is_retweet {
                    words.push("RT".into());
                    words.push(format!("@{}:", g.pick(&ids)));
                }
                let n_words = g.normal(16.0 + 7.0 * z, 3.0).round().max(3.0) as usize;
                for _ in 0..n_words {
                    let r: f64 = g.rng.gen();
                    let p_pos = 0.06 + 0.05 * z;
                    let p_neg = 0.06 - 0.05 * z;
                    let w = if r < p_pos {
                        *g.pick(&positive)
                    } else if r < p_pos + p_neg {
                        *g.pick(&negative)
                    } else {
                        *g.pick(NEUTRAL_WORDS)
                    };
                    words.push(w.to_string());
                }
                if g.chance(0.35 - 0.1 * z) {
                    words.push(format!("#{}", g.pick(HASHTAGS)));
                }
                if g.chance(0.4 + 0.15 * z) {
                    let target = g.pick(&ids).clone();
                    if &target != id {
                        words.push(format!("@{target}"));
                    }
                }
                if g.chance(0.5 + 0.2 * z) {
                    words.push(format!("https://t.co/{:08x}", g.rng.gen::<u32>()));
                }
                if g.chance(0.2 - 0.1 * z) {
                    words.push(g.pick(EMOJI).to_string());
                }
                words.join(" ")
            };
            texts.push(body.clone());

            let retweet_count = g.log_normal_count(0.5 * audience - 0.5, 1.0);
            let reply_count = g.log_normal_count(0.3 * audience - 0.8, 1.0);
            user_msgs.push(MessageRecord {
                message_id: format!("{id}-{j:04}"),
                author_id: id.clone(),
                hashtags: text::hashtags(&body),
                mentions: text::mentions(&body),
                urls: text::urls(&body),
                text: body,
                timestamp: ts,
                retweet_count,
                reply_count,
                is_retweet: is_retweet && !repost,
            });
        }
        messages.insert(id.clone(), user_msgs);
        users.push(user);
    }

    let mut corpus = Corpus {
        users,
        messages,
        topic: "synthetic-election".into(),
        duplicates: BTreeMap::new(),
    };
    corpus.recompute_interactions();

    Ok(SyntheticCorpus {
        corpus,
        labels: LabelSet(labels),
        signal_features: SIGNAL_FEATURES.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_a_seed() {
        let cfg = SynthConfig {
            users: 200,
            ..Default::default()
        };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.labels, b.labels);
        let c = generate_synthetic(&SynthConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn exact_trusted_allocation() {
        let cfg = SynthConfig {
            users: 1000,
            trusted_fraction: 0.3,
            max_messages: 6,
            ..Default::default()
        };
        let s = generate_synthetic(&cfg).unwrap();
        let trusted = s.labels.0.values().filter(|l| **l == Label::Trusted).count();
        assert_eq!(trusted, 300);
        assert_eq!(s.labels.len(), 1000);
    }

    #[test]
    fn trusted_messages_are_longer_without_noise() {
        let s = generate_synthetic(&SynthConfig {
            users: 400,
            ..Default::default()
        })
        .unwrap();
        let mut sums = [(0usize, 0usize); 2];
        for (author, msgs) in &s.corpus.messages {
            let k = (s.labels.get(author).unwrap() == Label::Trusted) as usize;
            for m in msgs {
                sums[k].0 += m.text.chars().count();
                sums[k].1 += 1;
            }
        }
        let mean = |(t, n): (usize, usize)| t as f64 / n as f64;
        assert!(mean(sums[1]) > mean(sums[0]));
    }

    #[test]
    fn invalid_config_lists_every_field() {
        let err = generate_synthetic(&SynthConfig {
            users: 1,
            trusted_fraction: 1.0,
            noise: 2.0,
            ..Default::default()
        })
        .unwrap_err();
        match err {
            Error::InvalidConfig(p) => assert_eq!(p.len(), 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn every_message_has_a_known_author() {
        let s = generate_synthetic(&SynthConfig {
            users: 50,
            ..Default::default()
        })
        .unwrap();
        for author in s.corpus.messages.keys() {
            assert!(s.corpus.user(author).is_some());
        }
        assert!(s.corpus.users.iter().all(|u| u.follower_count >= 1));
    }
}
