//! Lexicon-based polarity scoring.
//!
//! A message's polarity is `(pos - neg) / (pos + neg)` over token matches
//! against a flat positive/negative term list; a profile's score is the
//! balance of positive over negative messages.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::MessageRecord;
use crate::error::{Error, Result};
use crate::text::{normalize_term, tokenize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    positive: BTreeSet<String>,
    negative: BTreeSet<String>,
}

const BUILTIN_POSITIVE: &[&str] = &[
    "accurate", "agree", "amazing", "best", "better", "brilliant", "clear", "confirmed",
    "excellent", "fair", "glad", "good", "great", "happy", "helpful", "honest", "hope",
    "love", "nice", "official", "positive", "proud", "reliable", "respect", "safe",
    "strong", "success", "support", "thanks", "true", "trust", "verified", "welcome",
    "win", "wonderful",
];

const BUILTIN_NEGATIVE: &[&str] = &[
    "angry", "awful", "bad", "corrupt", "crisis", "danger", "disaster", "disgusting",
    "evil", "fail", "fake", "fear", "fraud", "hate", "hoax", "horrible", "liar", "lie",
    "lies", "lose", "negative", "outrage", "panic", "rigged", "sad", "scam", "scandal",
    "shame", "stupid", "terrible", "threat", "ugly", "worse", "worst", "wrong",
];

impl Lexicon {
    pub fn new<P, N>(positive: P, negative: N) -> Result<Self>
    where
        P: IntoIterator,
        P::Item: AsRef<str>,
        N: IntoIterator,
        N::Item: AsRef<str>,
    {
        let positive: BTreeSet<String> = positive.into_iter().map(|t| normalize_term(t.as_ref())).collect();
        let negative: BTreeSet<String> = negative.into_iter().map(|t| normalize_term(t.as_ref())).collect();
        if let Some(t) = positive.intersection(&negative).next() {
            return Err(Error::ConflictingTerm(t.clone()));
        }
        if positive.is_empty() && negative.is_empty() {
            return Err(Error::invalid("lexicon is empty"));
        }
        Ok(Lexicon { positive, negative })
    }

    /// Small English election-domain lexicon used by the synthetic corpus
    /// and as the default when no lexicon file is supplied.
    pub fn builtin() -> Self {
        Lexicon::new(BUILTIN_POSITIVE, BUILTIN_NEGATIVE).expect("builtin lexicon is valid")
    }

    pub fn positive_terms(&self) -> &BTreeSet<String> {
        &self.positive
    }

    pub fn negative_terms(&self) -> &BTreeSet<String> {
        &self.negative
    }

    /// The same lexicon with polarities exchanged.
    pub fn swapped(&self) -> Self {
        Lexicon {
            positive: self.negative.clone(),
            negative: self.positive.clone(),
        }
    }

    /// Parses `term<TAB>polarity` lines; `#` lines and blank lines are ignored.
    pub fn parse(src: &str, origin: &Path) -> Result<Self> {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (i, line) in src.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            let (term, polarity) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected term<TAB>polarity".into()))?;
            let term = term.trim();
            if term.is_empty() {
                return Err(parse_err("empty term".into()));
            }
            match polarity.trim() {
                "+" => pos.push(term.to_string()),
                "-" => neg.push(term.to_string()),
                other => return Err(parse_err(format!("polarity must be + or -, got {other:?}"))),
            }
        }
        Lexicon::new(pos, neg)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.positive {
            let _ = writeln!(out, "{t}\t+");
        }
        for t in &self.negative {
            let _ = writeln!(out, "{t}\t-");
        }
        out
    }
}

pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Lexicon::parse(&src, path)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SentimentResult {
    pub positive_count: usize,
    pub negative_count: usize,
    pub polarity: f64,
}

pub fn score_text(lex: &Lexicon, text: &str) -> SentimentResult {
    let (mut pos, mut neg) = (0usize, 0usize);
    for tok in tokenize(text) {
        if lex.positive.contains(&tok) {
            pos += 1;
        } else if lex.negative.contains(&tok) {
            neg += 1;
        }
    }
    let polarity = if pos + neg > 0 {
        (pos as f64 - neg as f64) / (pos + neg) as f64
    } else {
        0.0
    };
    SentimentResult {
        positive_count: pos,
        negative_count: neg,
        polarity,
    }
}

/// `(#positive - #negative) / #messages`; neutral messages count in the
/// denominator only.
pub fn profile_sentiment(lex: &Lexicon, messages: &[MessageRecord]) -> f64 {
    profile_from_polarities(messages.iter().map(|m| score_text(lex, &m.text).polarity))
}

pub(crate) fn profile_from_polarities(polarities: impl Iterator<Item = f64>) -> f64 {
    let (mut n, mut balance) = (0usize, 0i64);
    for p in polarities {
        n += 1;
        if p > 0.0 {
            balance += 1;
        } else if p < 0.0 {
            balance -= 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        balance as f64 / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex() -> Lexicon {
        Lexicon::parse("good\t+\nbad\t-\n", Path::new("t")).unwrap()
    }

    fn msgs(texts: &[&str]) -> Vec<MessageRecord> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| MessageRecord::from_text(i.to_string(), "a", *t, i as i64))
            .collect()
    }

    #[test]
    fn parse_basic_and_dedup() {
        let l = lex();
        assert_eq!((l.positive_terms().len(), l.negative_terms().len()), (1, 1));
        let l = Lexicon::parse("# comment\ngood\t+\ngood\t+\n\n", Path::new("t")).unwrap();
        assert_eq!(l.positive_terms().len(), 1);
    }

    #[test]
    fn conflicting_term_is_named() {
        let err = Lexicon::parse("x\t+\nx\t-\n", Path::new("t")).unwrap_err();
        assert!(matches!(&err, Error::ConflictingTerm(t) if t == "x"));
        assert!(err.to_string().contains("\"x\""));
    }

    #[test]
    fn empty_lexicon_rejected() {
        assert!(Lexicon::parse("# nothing\n", Path::new("t")).is_err());
        assert!(Lexicon::parse("good +\n", Path::new("t")).is_err());
    }

    #[test]
    fn scoring_examples() {
        let l = lex();
        let r = score_text(&l, "good good bad");
        assert_eq!((r.positive_count, r.negative_count), (2, 1));
        assert!((r.polarity - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(score_text(&l, ""), SentimentResult::default());
        let r = score_text(&l, "GOOD, bad!");
        assert_eq!((r.positive_count, r.negative_count, r.polarity), (1, 1, 0.0));
    }

    #[test]
    fn profile_examples() {
        let l = lex();
        let p = profile_sentiment(&l, &msgs(&["good", "good day", "bad"]));
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(profile_sentiment(&l, &msgs(&["meh", "ok"])), 0.0);
        assert_eq!(profile_sentiment(&l, &[]), 0.0);
    }

    #[test]
    fn builtin_lexicon_round_trips_through_tsv() {
        let b = Lexicon::builtin();
        assert_eq!(Lexicon::parse(&b.to_tsv(), Path::new("t")).unwrap(), b);
    }

    proptest! {
        #[test]
        fn swapping_sets_negates_polarity(words in proptest::collection::vec("(good|bad|fine|meh|GOOD|Bad!)", 0..20)) {
            let text = words.join(" ");
            let l = lex();
            prop_assert_eq!(score_text(&l, &text).polarity, -score_text(&l.swapped(), &text).polarity);
        }

        #[test]
        fn case_and_whitespace_invariant(words in proptest::collection::vec("(good|bad|fine|meh)", 0..20), gap in 1usize..4) {
            let l = lex();
            let plain = words.join(" ");
            let shouted = words.join(&" ".repeat(gap)).to_uppercase();
            prop_assert_eq!(score_text(&l, &plain), score_text(&l, &shouted));
        }

        #[test]
        fn profile_bounded(texts in proptest::collection::vec("(good|bad|meh)( (good|bad|meh)){0,3}", 0..15)) {
            let l = lex();
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let m = msgs(&refs);
            let p = profile_sentiment(&l, &m);
            prop_assert!((-1.0..=1.0).contains(&p));
            let all_pos = !m.is_empty() && m.iter().all(|x| score_text(&l, &x.text).polarity > 0.0);
            prop_assert_eq!(p == 1.0, all_pos);
        }
    }
}
