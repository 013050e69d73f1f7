//! Acquaintance (popularity) scores, engagement-weighted affinity, ranking
//! and the trust threshold.
//!
//! For a topic population of `N` users:
//!
//! ```text
//! acq_scr(u) = (followers + replied_by_others + mentioned_by_others + retweeted_by_others) / N
//! acq_aff(u) = RPL(u) * Σᵢ acq_scr(i)/RPL(i)
//!            + MEN(u) * Σᵢ acq_scr(i)/MEN(i)
//!            + RTW(u) * Σᵢ acq_scr(i)/RTW(i)
//! ```
//!
//! Summands with a zero denominator contribute nothing.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::UserRecord;
use crate::error::{Error, Result};

pub const DEFAULT_THETA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub theta: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig { theta: DEFAULT_THETA }
    }
}

impl ThresholdConfig {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidConfig(vec![format!("theta must be in [0, 1], got {theta}")]));
        }
        Ok(ThresholdConfig { theta })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReputationScore {
    pub user_id: String,
    pub acq_scr: f64,
    pub acq_aff: f64,
    pub normalized_rank: f64,
    pub trusted_by_threshold: bool,
}

/// Order-independent sum: terms are sorted before Neumaier-compensated
/// accumulation, so any permutation of the input gives identical bits.
fn stable_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

pub fn acquaintance_score(user: &UserRecord, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("acquaintance score needs N >= 1"));
    }
    let total = user.follower_count as f64
        + user.replied_by_others as f64
        + user.mentioned_by_others as f64
        + user.retweeted_by_others as f64;
    Ok(total / n as f64)
}

/// Affinity for every user, in input order. `scores[i]` is the acquaintance
/// score of `users[i]`.
pub fn acquaintance_affinity(users: &[UserRecord], scores: &[f64]) -> Result<Vec<f64>> {
    if users.is_empty() {
        return Err(Error::invalid("affinity needs a non-empty corpus"));
    }
    if users.len() != scores.len() {
        return Err(Error::Dimension {
            context: "acquaintance scores",
            expected: users.len(),
            actual: scores.len(),
        });
    }
    let weighted_sum = |count: fn(&UserRecord) -> u64| {
        stable_sum(
            users
                .iter()
                .zip(scores)
                .filter(|(u, _)| count(u) > 0)
                .map(|(u, s)| s / count(u) as f64)
                .collect(),
        )
    };
    let reply_sum = weighted_sum(|u| u.replied_by_others);
    let mention_sum = weighted_sum(|u| u.mentioned_by_others);
    let retweet_sum = weighted_sum(|u| u.retweeted_by_others);
    Ok(users
        .iter()
        .map(|u| {
            u.replied_by_others as f64 * reply_sum
                + u.mentioned_by_others as f64 * mention_sum
                + u.retweeted_by_others as f64 * retweet_sum
        })
        .collect())
}

/// Sorts by affinity (descending, ties by user id), min-max normalizes and
/// flags users at or above `theta`.
pub fn rank_and_threshold(
    entries: impl IntoIterator<Item = (String, f64, f64)>,
    cfg: &ThresholdConfig,
) -> Vec<ReputationScore> {
    let mut scores: Vec<ReputationScore> = entries
        .into_iter()
        .map(|(user_id, acq_scr, acq_aff)| ReputationScore {
            user_id,
            acq_scr,
            acq_aff,
            normalized_rank: 0.0,
            trusted_by_threshold: false,
        })
        .collect();
    scores.sort_by(|a, b| b.acq_aff.total_cmp(&a.acq_aff).then_with(|| a.user_id.cmp(&b.user_id)));
    let max = scores.iter().map(|s| s.acq_aff).fold(f64::NEG_INFINITY, f64::max);
    let min = scores.iter().map(|s| s.acq_aff).fold(f64::INFINITY, f64::min);
    for s in &mut scores {
        s.normalized_rank = if max > min { (s.acq_aff - min) / (max - min) } else { 0.5 };
        s.trusted_by_threshold = s.normalized_rank >= cfg.theta;
    }
    scores
}

/// Full reputation pass over a user population.
pub fn score_users(users: &[UserRecord], cfg: &ThresholdConfig) -> Result<Vec<ReputationScore>> {
    let n = users.len();
    let scr = users
        .iter()
        .map(|u| acquaintance_score(u, n))
        .collect::<Result<Vec<_>>>()?;
    let aff = acquaintance_affinity(users, &scr)?;
    Ok(rank_and_threshold(
        users
            .iter()
            .zip(scr.iter().zip(&aff))
            .map(|(u, (s, a))| (u.user_id.clone(), *s, *a)),
        cfg,
    ))
}

/// `reputation.csv`: `user_id,acq_scr,acq_aff,normalized_rank,trusted`.
pub fn write_reputation_csv<W: Write>(scores: &[ReputationScore], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["user_id", "acq_scr", "acq_aff", "normalized_rank", "trusted"])?;
    for s in scores {
        out.write_record([
            s.user_id.as_str(),
            &s.acq_scr.to_string(),
            &s.acq_aff.to_string(),
            &s.normalized_rank.to_string(),
            if s.trusted_by_threshold { "true" } else { "false" },
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
