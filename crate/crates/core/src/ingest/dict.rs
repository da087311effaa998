//! CMU-style pronunciation dictionaries.
//!
//! One entry per line: `WORD  CODE CODE ...`. Alternative pronunciations use
//! `WORD(2)`, `WORD(3)`, and so on. `#` starts a comment, as does a leading `;;;`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::phoneme::PhoneLabel;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PronunciationDict {
    entries: HashMap<String, Vec<Vec<PhoneLabel>>>,
}

/// Upper-cases a word and strips surrounding punctuation (apostrophes stay).
pub fn normalize_word(word: &str) -> String {
    word.trim_matches(|c: char| !(c.is_alphanumeric() || c == '\''))
        .to_uppercase()
}

fn strip_variant(token: &str) -> &str {
    match token.find('(') {
        Some(i) if token.ends_with(')') => &token[..i],
        _ => token,
    }
}

pub fn parse_dictionary(source: &str) -> Result<PronunciationDict> {
    let mut entries: HashMap<String, Vec<Vec<PhoneLabel>>> = HashMap::new();
    for (lineno, raw) in source.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with(";;;") {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let head = tokens.next().expect("non-empty line has a token");
        let word = normalize_word(strip_variant(head));
        if word.is_empty() {
            return Err(Error::parse(
                "dictionary",
                format!("line {}: empty word", lineno + 1),
            ));
        }
        let codes = tokens
            .map(PhoneLabel::parse)
            .collect::<Result<Vec<_>>>()?;
        if codes.is_empty() {
            return Err(Error::parse(
                "dictionary",
                format!("line {}: `{word}` has no phonemes", lineno + 1),
            ));
        }
        entries.entry(word).or_default().push(codes);
    }
    Ok(PronunciationDict { entries })
}

impl PronunciationDict {
    pub fn variants(&self, word: &str) -> Option<&[Vec<PhoneLabel>]> {
        self.entries.get(&normalize_word(word)).map(Vec::as_slice)
    }

    /// Pronunciation `variant` (0-based) of `word`.
    pub fn lookup(&self, word: &str, variant: usize) -> Option<&[PhoneLabel]> {
        self.variants(word)?.get(variant).map(Vec::as_slice)
    }

    pub fn insert(&mut self, word: &str, codes: Vec<PhoneLabel>) {
        self.entries
            .entry(normalize_word(word))
            .or_default()
            .push(codes);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
