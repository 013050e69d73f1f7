//! Tokenization and entity extraction shared by ingestion, sentiment
//! scoring and feature extraction.

use unicode_normalization::UnicodeNormalization;

/// Lowercase then NFC-normalize a single term.
pub fn normalize_term(s: &str) -> String {
    s.to_lowercase().nfc().collect()
}

/// Key used for duplicate-message detection: NFC, then trimmed.
pub fn dedup_key(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    nfc.trim().to_string()
}

/// Splits on Unicode whitespace, strips non-alphanumeric characters from
/// both ends of each token, lowercases and NFC-normalizes. Empty tokens are
/// dropped.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().filter_map(|raw| {
        let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if trimmed.is_empty() {
            None
        } else {
            Some(normalize_term(trimmed))
        }
    })
}

fn is_entity_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn sigil_entities(text: &str, sigil: char) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let at_boundary = i == 0 || !(is_entity_char(chars[i - 1]) || chars[i - 1] == '/');
        if chars[i] == sigil && at_boundary {
            let start = i + 1;
            let mut end = start;
            while end < chars.len() && is_entity_char(chars[end]) {
                end += 1;
            }
            if end > start {
                out.push(chars[start..end].iter().collect());
                i = end;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// `#tag` occurrences, returned without the sigil.
pub fn hashtags(text: &str) -> Vec<String> {
    sigil_entities(text, '#')
}

/// `@user` occurrences, returned without the sigil.
pub fn mentions(text: &str) -> Vec<String> {
    sigil_entities(text, '@')
}

/// Whitespace-delimited tokens beginning with `http://` or `https://`,
/// with trailing sentence punctuation removed.
pub fn urls(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter(|t| t.starts_with("http://") || t.starts_with("https://"))
        .map(|t| t.trim_end_matches(['.', ',', ';', ':', '!', '?', ')', '"', '\'']))
        .map(str::to_string)
        .collect()
}

/// Code points treated as emoji. Modifiers, joiners and variation
/// selectors are not counted on their own.
pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1F02F
        | 0x1F0A0..=0x1F0FF
        | 0x1F170..=0x1F251
        | 0x1F300..=0x1F3FA
        | 0x1F400..=0x1F64F
        | 0x1F680..=0x1F6FF
        | 0x1F700..=0x1F77F
        | 0x1F900..=0x1F9FF
        | 0x1FA70..=0x1FAFF
        | 0x2600..=0x26FF
        | 0x2700..=0x27BF
        | 0x231A..=0x231B
        | 0x23E9..=0x23FA
        | 0x2B50
        | 0x2B55)
}

pub fn emoji_count(text: &str) -> usize {
    text.chars().filter(|&c| is_emoji(c)).count()
}
