#![allow(dead_code)]

use visedit::ingest::{parse_alignment, parse_dictionary, AlignedTranscript, EditWord, PronunciationDict};
use visedit::{PhoneLabel, PhoneSequence};

pub fn dict(text: &str) -> PronunciationDict {
    parse_dictionary(text).unwrap()
}

/// Aligns dictionary words back to back. Vowels last 120 ms, consonants
/// 70 ms, pauses 250 ms. Each sentence starts with a pause.
pub fn transcript(sentences: &[&str], dict: &PronunciationDict) -> AlignedTranscript {
    let mut t = 0.0f64;
    let mut words = Vec::new();
    let mut spans = Vec::new();
    for s in sentences {
        let mut ids = Vec::new();
        for w in std::iter::once("sp").chain(s.split_whitespace()) {
            let codes: Vec<String> = if w == "sp" {
                vec!["sp".into()]
            } else {
                dict.lookup(w, 0)
                    .unwrap_or_else(|| panic!("{w} missing"))
                    .iter()
                    .map(|l| l.to_string())
                    .collect()
            };
            let t_in = t;
            let phones: Vec<_> = codes
                .iter()
                .map(|c| {
                    let d = match c.as_str() {
                        "sp" => 0.25,
                        c if c.ends_with(|x: char| x.is_ascii_digit()) => 0.12,
                        _ => 0.07,
                    };
                    let p = serde_json::json!({"lbl": c, "t_in": t, "t_out": t + d});
                    t += d;
                    p
                })
                .collect();
            ids.push(words.len());
            words.push(serde_json::json!({"text": w, "t_in": t_in, "t_out": t, "phones": phones}));
        }
        spans.push(ids);
    }
    parse_alignment(&serde_json::json!({"words": words, "sentences": spans}).to_string()).unwrap()
}

pub fn word(t: &AlignedTranscript, text: &str) -> usize {
    t.words.iter().position(|w| w.text == text).unwrap()
}

pub fn new_word(text: &str) -> EditWord {
    EditWord {
        text: text.into(),
        orig_index: None,
        phone_timings: None,
        variant: None,
    }
}

pub fn kept(t: &AlignedTranscript, i: usize) -> EditWord {
    EditWord {
        text: t.words[i].text.clone(),
        orig_index: Some(i),
        phone_timings: None,
        variant: None,
    }
}

pub fn labels(seq: &PhoneSequence, r: std::ops::Range<usize>) -> Vec<PhoneLabel> {
    seq.phones()[r].iter().map(|p| p.label).collect()
}
