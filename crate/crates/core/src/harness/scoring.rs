//! Automatic scoring of multiple-choice answers.
//!
//! Normalization: trim, upper-case, then
//! 1. a bracketed letter anywhere (`"ANSWER: [A] 6"`) is the key;
//! 2. otherwise, after stripping leading brackets and punctuation, a letter
//!    followed by end-of-text or a non-alphanumeric character is the key
//!    (`"a."`, `"B)"`, `"C 27.4"`);
//! 3. otherwise the text with non-alphanumeric characters stripped from both
//!    ends is returned, and no key is recognized.

use serde::{Deserialize, Serialize};

use super::bank::{ItemBank, ItemFormat};
use super::records::RawResponseRecord;
use crate::error::{Error, Result};
use crate::model::ScoredResponse;

/// Normalized form of an extracted answer; a single letter when a key was found.
pub fn normalize_answer(raw: &str) -> String {
    let upper = raw.trim().to_uppercase();
    let chars: Vec<char> = upper.chars().collect();
    for w in chars.windows(3) {
        if w[0] == '[' && w[1].is_ascii_uppercase() && w[2] == ']' {
            return w[1].to_string();
        }
    }
    let stripped: Vec<char> = chars
        .iter()
        .copied()
        .skip_while(|c| !c.is_alphanumeric())
        .collect();
    if let Some(&first) = stripped.first() {
        if first.is_ascii_uppercase() && stripped.get(1).is_none_or(|c| !c.is_alphanumeric()) {
            return first.to_string();
        }
    }
    let start = chars.iter().position(|c| c.is_alphanumeric());
    let end = chars.iter().rposition(|c| c.is_alphanumeric());
    match (start, end) {
        (Some(s), Some(e)) => chars[s..=e].iter().collect(),
        _ => String::new(),
    }
}

/// Option letter recognized in an extracted answer, if any.
pub fn extract_key(raw: &str) -> Option<char> {
    let n = normalize_answer(raw);
    let mut it = n.chars();
    match (it.next(), it.next()) {
        (Some(c), None) if c.is_ascii_uppercase() => Some(c),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    pub taker_id: String,
    pub variant_id: String,
    pub item_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McScore {
    pub response: ScoredResponse,
    pub diagnostic: Option<Diagnostic>,
}

/// Category 1 iff the normalized answer equals the key; unparseable answers and
/// letters beyond the item's options score 0 with a diagnostic.
pub fn score_multiple_choice(record: &RawResponseRecord, bank: &ItemBank) -> Result<McScore> {
    let item = bank
        .get(&record.item_id)
        .ok_or_else(|| Error::contract(format!("unknown item {}", record.item_id)))?;
    if item.format != ItemFormat::MultipleChoice {
        return Err(Error::contract(format!(
            "item {} is not multiple choice",
            record.item_id
        )));
    }
    let key = item.answer_key.expect("validated multiple-choice item has a key");
    let diag = |message: String| Diagnostic {
        line: record.line,
        taker_id: record.taker_id.clone(),
        variant_id: record.variant_id.clone(),
        item_id: record.item_id.clone(),
        message,
    };
    let (category, diagnostic) = match extract_key(&record.extracted_answer) {
        Some(letter) if (letter as u8) < b'A' + item.option_count() => (usize::from(letter == key), None),
        Some(letter) => (
            0,
            Some(diag(format!(
                "option {letter} does not exist on a {}-option item",
                item.option_count()
            ))),
        ),
        None => (
            0,
            Some(diag(format!(
                "no option key found in answer {:?}",
                record.extracted_answer
            ))),
        ),
    };
    if let Some(d) = &diagnostic {
        log::warn!(
            "line {}: {}/{}/{}: {}",
            d.line,
            d.taker_id,
            d.variant_id,
            d.item_id,
            d.message
        );
    }
    Ok(McScore {
        response: ScoredResponse::new(&record.item_id, category),
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepted_spellings() {
        for raw in ["A", "[A]", "A.", " a. ", "[A] 6", "Answer: [A] 6", "(a)", "A) 27.4"] {
            assert_eq!(extract_key(raw), Some('A'), "{raw:?}");
        }
        for raw in ["", "   ", "27.4", "ABC", "answer"] {
            assert_eq!(extract_key(raw), None, "{raw:?}");
        }
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_answer("  [b] "), "B");
        assert_eq!(normalize_answer("...hello world!!"), "HELLO WORLD");
        assert_eq!(normalize_answer("?!"), "");
    }
}
