//! Word/phone alignment documents.
//!
//! ```json
//! {"words":[{"text":"hello","t_in":0.0,"t_out":0.4,
//!            "phones":[{"lbl":"HH","t_in":0.0,"t_out":0.08}, ...]}],
//!  "sentences":[[0,1,2]]}
//! ```
//!
//! `sentences` is optional. Without it, sentence-final punctuation in word
//! text splits sentences; failing that, silences longer than
//! [`SENTENCE_SILENCE`] seconds do.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phoneme::{Phone, PhoneLabel, PhoneSequence};

/// Minimum `sp` length that ends a sentence when the text has no punctuation.
pub const SENTENCE_SILENCE: f64 = 0.3;

#[derive(Clone, Debug, PartialEq)]
pub struct Word {
    pub text: String,
    pub t_in: f64,
    pub t_out: f64,
    pub phones: Range<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignedTranscript {
    pub words: Vec<Word>,
    pub phones: PhoneSequence,
    /// Word index ranges, partitioning `0..words.len()` in order.
    pub sentences: Vec<Range<usize>>,
}

#[derive(Serialize, Deserialize)]
struct PhoneDoc {
    lbl: String,
    t_in: f64,
    t_out: f64,
}

#[derive(Serialize, Deserialize)]
struct WordDoc {
    text: String,
    t_in: f64,
    t_out: f64,
    phones: Vec<PhoneDoc>,
}

#[derive(Serialize, Deserialize)]
struct AlignmentDoc {
    words: Vec<WordDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sentences: Option<Vec<Vec<usize>>>,
}

pub fn parse_alignment(source: &str) -> Result<AlignedTranscript> {
    let doc: AlignmentDoc =
        serde_json::from_str(source).map_err(|e| Error::parse("alignment", e))?;

    let mut words = Vec::with_capacity(doc.words.len());
    let mut phones = Vec::new();
    for (wi, w) in doc.words.into_iter().enumerate() {
        if !(w.t_in.is_finite() && w.t_out.is_finite()) || w.t_out < w.t_in {
            return Err(Error::parse(
                "alignment",
                format!("word {wi} has invalid times [{}, {}]", w.t_in, w.t_out),
            ));
        }
        if w.phones.is_empty() {
            return Err(Error::parse("alignment", format!("word {wi} has no phones")));
        }
        let start = phones.len();
        for p in w.phones {
            let label = PhoneLabel::parse(&p.lbl)?;
            let index = phones.len();
            let phone = Phone::new(label, p.t_in, p.t_out).map_err(|e| match e {
                Error::InvalidPhone { reason, .. } => Error::InvalidPhone { index, reason },
                other => other,
            })?;
            phones.push(phone);
        }
        words.push(Word {
            text: w.text,
            t_in: w.t_in,
            t_out: w.t_out,
            phones: start..phones.len(),
        });
    }
    let phones = PhoneSequence::new(phones)?;

    let sentences = match doc.sentences {
        Some(lists) => explicit_sentences(lists, words.len())?,
        None => infer_sentences(&words, &phones),
    };
    Ok(AlignedTranscript {
        words,
        phones,
        sentences,
    })
}

fn explicit_sentences(lists: Vec<Vec<usize>>, n_words: usize) -> Result<Vec<Range<usize>>> {
    let mut next = 0;
    let mut out = Vec::with_capacity(lists.len());
    for (si, list) in lists.into_iter().enumerate() {
        if list.is_empty() {
            return Err(Error::parse("alignment", format!("sentence {si} is empty")));
        }
        for (k, &w) in list.iter().enumerate() {
            if w != next + k {
                return Err(Error::parse(
                    "alignment",
                    format!("sentence {si} does not continue the word order at word {w}"),
                ));
            }
        }
        out.push(next..next + list.len());
        next += list.len();
    }
    if next != n_words {
        return Err(Error::parse(
            "alignment",
            format!("sentences cover {next} of {n_words} words"),
        ));
    }
    Ok(out)
}

fn ends_with_terminal(text: &str) -> bool {
    text.trim_end_matches(['"', '\'', ')'])
        .ends_with(['.', '?', '!'])
}

fn infer_sentences(words: &[Word], phones: &PhoneSequence) -> Vec<Range<usize>> {
    if words.is_empty() {
        return Vec::new();
    }
    let by_punct = words.iter().any(|w| ends_with_terminal(&w.text));
    let is_break = |w: &Word| {
        if by_punct {
            ends_with_terminal(&w.text)
        } else {
            phones.phones()[w.phones.clone()]
                .iter()
                .any(|p| p.label.is_silence() && p.duration() > SENTENCE_SILENCE)
        }
    };
    let mut out = Vec::new();
    let mut start = 0;
    for (i, w) in words.iter().enumerate() {
        if is_break(w) {
            out.push(start..i + 1);
            start = i + 1;
        }
    }
    if start < words.len() {
        out.push(start..words.len());
    }
    out
}

impl AlignedTranscript {
    pub fn to_json(&self) -> String {
        let doc = AlignmentDoc {
            words: self
                .words
                .iter()
                .map(|w| WordDoc {
                    text: w.text.clone(),
                    t_in: w.t_in,
                    t_out: w.t_out,
                    phones: self.phones.phones()[w.phones.clone()]
                        .iter()
                        .map(|p| PhoneDoc {
                            lbl: p.label.as_str().to_string(),
                            t_in: p.t_in,
                            t_out: p.t_out,
                        })
                        .collect(),
                })
                .collect(),
            sentences: Some(self.sentences.iter().map(|r| r.clone().collect()).collect()),
        };
        serde_json::to_string(&doc).expect("alignment serializes")
    }

    /// Phone index range covered by a range of words.
    pub fn word_phones(&self, words: Range<usize>) -> Range<usize> {
        if words.is_empty() {
            let at = self
                .words
                .get(words.start)
                .map_or(self.phones.len(), |w| w.phones.start);
            return at..at;
        }
        self.words[words.start].phones.start..self.words[words.end - 1].phones.end
    }

    pub fn sentence_of_word(&self, word: usize) -> Option<usize> {
        self.sentences.iter().position(|s| s.contains(&word))
    }

    /// The word that owns phone `phone`.
    pub fn word_of_phone(&self, phone: usize) -> Option<usize> {
        let i = self.words.partition_point(|w| w.phones.end <= phone);
        (i < self.words.len() && self.words[i].phones.contains(&phone)).then_some(i)
    }

    /// Label sequence of each sentence.
    pub fn sentence_labels(&self) -> Vec<Vec<PhoneLabel>> {
        self.sentences
            .iter()
            .map(|s| {
                self.phones.phones()[self.word_phones(s.clone())]
                    .iter()
                    .map(|p| p.label)
                    .collect()
            })
            .collect()
    }

    /// End time of the last phone.
    pub fn duration(&self) -> f64 {
        self.phones.phones().last().map_or(0.0, |p| p.t_out)
    }
}
