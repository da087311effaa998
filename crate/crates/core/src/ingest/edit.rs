//! Word-level edit specifications and the phone query they produce.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::alignment::AlignedTranscript;
use super::dict::PronunciationDict;
use crate::error::{Error, Result};
use crate::phoneme::{PhoneLabel, PhoneSequence};
use crate::stats::DurationStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Insert,
    Delete,
    Rearrange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditWord {
    pub text: String,
    /// Index of the original word this one reuses; `None` for new words.
    #[serde(default)]
    pub orig_index: Option<usize>,
    /// Per-phone durations in seconds, for new words.
    #[serde(default)]
    pub phone_timings: Option<Vec<f64>>,
    /// Dictionary pronunciation to use (0-based).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<usize>,
}

/// The words `W` of an edited region and how they relate to the original.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditSpec {
    pub kind: EditKind,
    pub anchor: usize,
    pub words: Vec<EditWord>,
    /// Number of original words, starting at `anchor`, that the region replaces.
    /// When absent the region runs from the first to the last referenced
    /// original word (and is empty at `anchor` if nothing is referenced).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<usize>,
}

pub fn parse_edit_spec(source: &str) -> Result<EditSpec> {
    let spec: EditSpec = serde_json::from_str(source).map_err(|e| Error::parse("edit", e))?;
    spec.check_shape()?;
    Ok(spec)
}

impl EditSpec {
    fn check_shape(&self) -> Result<()> {
        if self.words.is_empty() && self.kind != EditKind::Delete {
            return Err(Error::InvalidEdit("edit has no words".into()));
        }
        if matches!(self.kind, EditKind::Delete | EditKind::Rearrange) {
            if let Some(w) = self.words.iter().find(|w| w.orig_index.is_none()) {
                return Err(Error::InvalidEdit(format!(
                    "`{}` has no original word in a {:?} edit",
                    w.text, self.kind
                )));
            }
        }
        let mapped: Vec<usize> = self.words.iter().filter_map(|w| w.orig_index).collect();
        match self.kind {
            EditKind::Delete if mapped.windows(2).any(|w| w[0] >= w[1]) => {
                return Err(Error::InvalidEdit(
                    "delete edits must keep the original word order".into(),
                ));
            }
            _ => {}
        }
        let mut sorted = mapped.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidEdit("an original word is used twice".into()));
        }
        for w in &self.words {
            if let Some(t) = &w.phone_timings {
                if t.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
                    return Err(Error::InvalidEdit(format!(
                        "`{}` has a non-positive phone timing",
                        w.text
                    )));
                }
            }
        }
        Ok(())
    }

    /// Original word range the edit replaces.
    pub fn region(&self, transcript: &AlignedTranscript) -> Result<Range<usize>> {
        self.check_shape()?;
        let n = transcript.words.len();
        let region = match self.span {
            Some(span) => self.anchor..self.anchor + span,
            None => {
                let mapped = self.words.iter().filter_map(|w| w.orig_index);
                match (mapped.clone().min(), mapped.max()) {
                    (Some(lo), Some(hi)) => lo.min(self.anchor)..hi + 1,
                    _ => self.anchor..self.anchor,
                }
            }
        };
        if region.end > n || self.anchor > n {
            return Err(Error::InvalidEdit(format!(
                "edit region {region:?} lies outside the {n}-word transcript"
            )));
        }
        if let Some(w) = self
            .words
            .iter()
            .find(|w| w.orig_index.is_some_and(|i| !region.contains(&i)))
        {
            return Err(Error::InvalidEdit(format!(
                "`{}` refers to a word outside the edit region",
                w.text
            )));
        }
        Ok(region)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("edit spec serializes")
    }
}

/// Phone query for an edit, laid out contiguously from time zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub phones: PhoneSequence,
    /// Phone range of each edit word, in edit order.
    pub word_phones: Vec<Range<usize>>,
}

/// Where new words get their phone durations when the edit gives none.
#[derive(Clone, Copy, Debug)]
pub enum DurationSource<'a> {
    /// Per-viseme median duration of the source corpus.
    CorpusMedians(&'a DurationStats),
    /// New words must carry explicit timings.
    ExplicitOnly,
}

pub fn build_query(
    spec: &EditSpec,
    dict: &PronunciationDict,
    transcript: &AlignedTranscript,
    defaults: DurationSource<'_>,
) -> Result<Query> {
    spec.region(transcript)?;
    let mut items: Vec<(PhoneLabel, f64)> = Vec::new();
    let mut word_phones = Vec::with_capacity(spec.words.len());
    for w in &spec.words {
        let start = items.len();
        if let Some(orig) = w.orig_index {
            let word = &transcript.words[orig];
            items.extend(
                transcript.phones.phones()[word.phones.clone()]
                    .iter()
                    .map(|p| (p.label, p.duration())),
            );
        } else {
            let variant = w.variant.unwrap_or(0);
            let labels = dict
                .lookup(&w.text, variant)
                .ok_or_else(|| Error::OutOfVocabulary(w.text.clone()))?;
            match (&w.phone_timings, defaults) {
                (Some(t), _) => {
                    if t.len() != labels.len() {
                        return Err(Error::InvalidEdit(format!(
                            "`{}` has {} phones but {} timings",
                            w.text,
                            labels.len(),
                            t.len()
                        )));
                    }
                    items.extend(labels.iter().copied().zip(t.iter().copied()));
                }
                (None, DurationSource::CorpusMedians(stats)) => {
                    for &l in labels {
                        let d = stats
                            .get(l.viseme())
                            .map(|s| s.median)
                            .ok_or_else(|| Error::MissingTiming(w.text.clone()))?;
                        items.push((l, d));
                    }
                }
                (None, DurationSource::ExplicitOnly) => {
                    return Err(Error::MissingTiming(w.text.clone()))
                }
            }
        }
        word_phones.push(start..items.len());
    }
    Ok(Query {
        phones: PhoneSequence::contiguous(items)?,
        word_phones,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::alignment::parse_alignment;
    use crate::ingest::dict::parse_dictionary;
    use crate::stats::duration_stats;

    fn hello_wonderful_world() -> AlignedTranscript {
        let doc = r#"{"words":[
          {"text":"hello","t_in":0.0,"t_out":0.3,"phones":[
            {"lbl":"HH","t_in":0.0,"t_out":0.05},{"lbl":"AH0","t_in":0.05,"t_out":0.1},
            {"lbl":"L","t_in":0.1,"t_out":0.18},{"lbl":"OW1","t_in":0.18,"t_out":0.3}]},
          {"text":"wonderful","t_in":0.3,"t_out":0.8,"phones":[
            {"lbl":"W","t_in":0.3,"t_out":0.38},{"lbl":"AH1","t_in":0.38,"t_out":0.48},
            {"lbl":"N","t_in":0.48,"t_out":0.54},{"lbl":"D","t_in":0.54,"t_out":0.6},
            {"lbl":"ER0","t_in":0.6,"t_out":0.66},{"lbl":"F","t_in":0.66,"t_out":0.72},
            {"lbl":"AH0","t_in":0.72,"t_out":0.76},{"lbl":"L","t_in":0.76,"t_out":0.8}]},
          {"text":"world.","t_in":0.8,"t_out":1.2,"phones":[
            {"lbl":"W","t_in":0.8,"t_out":0.88},{"lbl":"ER1","t_in":0.88,"t_out":1.0},
            {"lbl":"L","t_in":1.0,"t_out":1.1},{"lbl":"D","t_in":1.1,"t_out":1.2}]}]}"#;
        parse_alignment(doc).unwrap()
    }

    fn mapped(text: &str, i: usize) -> EditWord {
        EditWord {
            text: text.into(),
            orig_index: Some(i),
            phone_timings: None,
            variant: None,
        }
    }

    fn fresh(text: &str, timings: Option<Vec<f64>>) -> EditWord {
        EditWord {
            text: text.into(),
            orig_index: None,
            phone_timings: timings,
            variant: None,
        }
    }

    #[test]
    fn delete_keeps_original_phones() {
        let t = hello_wonderful_world();
        let spec = EditSpec {
            kind: EditKind::Delete,
            anchor: 1,
            words: vec![mapped("hello", 0), mapped("world", 2)],
            span: None,
        };
        assert_eq!(spec.region(&t).unwrap(), 0..3);
        let q = build_query(&spec, &PronunciationDict::default(), &t, DurationSource::ExplicitOnly)
            .unwrap();
        let labels: Vec<&str> = q.phones.labels().map(|l| l.as_str()).collect();
        assert_eq!(labels, ["HH", "AH0", "L", "OW1", "W", "ER1", "L", "D"]);
        let durs: Vec<f64> = q.phones.phones().iter().map(|p| p.duration()).collect();
        let orig: Vec<f64> = t.phones.phones()[0..4]
            .iter()
            .chain(&t.phones.phones()[12..16])
            .map(|p| p.duration())
            .collect();
        for (a, b) in durs.iter().zip(&orig) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(q.word_phones, vec![0..4, 4..8]);
    }

    #[test]
    fn insert_with_timings() {
        let t = hello_wonderful_world();
        let dict = parse_dictionary("FOX  F AA1 K S\n").unwrap();
        let spec = EditSpec {
            kind: EditKind::Insert,
            anchor: 1,
            words: vec![fresh("fox", Some(vec![0.08, 0.1, 0.09, 0.11]))],
            span: None,
        };
        let q = build_query(&spec, &dict, &t, DurationSource::ExplicitOnly).unwrap();
        let expect = [("F", 0.0, 0.08), ("AA1", 0.08, 0.18), ("K", 0.18, 0.27), ("S", 0.27, 0.38)];
        for (p, (l, a, b)) in q.phones.phones().iter().zip(expect) {
            assert_eq!(p.label.as_str(), l);
            assert!((p.t_in - a).abs() < 1e-12 && (p.t_out - b).abs() < 1e-12);
        }
    }

    #[test]
    fn insert_out_of_vocabulary() {
        let t = hello_wonderful_world();
        let spec = EditSpec {
            kind: EditKind::Insert,
            anchor: 1,
            words: vec![fresh("zyzzyva", None)],
            span: None,
        };
        let err = build_query(&spec, &PronunciationDict::default(), &t, DurationSource::ExplicitOnly)
            .unwrap_err();
        assert!(matches!(err, Error::OutOfVocabulary(w) if w == "zyzzyva"));
    }

    #[test]
    fn insert_uses_corpus_medians() {
        let t = hello_wonderful_world();
        let stats = duration_stats(&t);
        let dict = parse_dictionary("LOW  L OW1\n").unwrap();
        let spec = EditSpec {
            kind: EditKind::Insert,
            anchor: 1,
            words: vec![fresh("low", None)],
            span: Some(1),
        };
        let q = build_query(&spec, &dict, &t, DurationSource::CorpusMedians(&stats)).unwrap();
        // L instances: 0.08, 0.04, 0.1 -> median 0.08. OW1 alone in v04: 0.12.
        assert!((q.phones[0].duration() - 0.08).abs() < 1e-12);
        assert!((q.phones[1].duration() - 0.12).abs() < 1e-12);

        let dict = parse_dictionary("CHEW  CH UW1\n").unwrap();
        let spec = EditSpec {
            words: vec![fresh("chew", None)],
            ..spec
        };
        assert!(matches!(
            build_query(&spec, &dict, &t, DurationSource::CorpusMedians(&stats)),
            Err(Error::MissingTiming(_))
        ));
    }

    #[test]
    fn shape_checks() {
        let t = hello_wonderful_world();
        let unmapped_delete = EditSpec {
            kind: EditKind::Delete,
            anchor: 0,
            words: vec![fresh("hello", None)],
            span: None,
        };
        assert!(unmapped_delete.region(&t).is_err());
        let reordered_delete = EditSpec {
            kind: EditKind::Delete,
            anchor: 0,
            words: vec![mapped("world", 2), mapped("hello", 0)],
            span: None,
        };
        assert!(reordered_delete.region(&t).is_err());
        let outside = EditSpec {
            kind: EditKind::Rearrange,
            anchor: 0,
            words: vec![mapped("world", 2)],
            span: Some(1),
        };
        assert!(outside.region(&t).is_err());
    }

    #[test]
    fn json_schema() {
        let spec = parse_edit_spec(
            r#"{"kind":"insert","anchor":1,"words":[{"text":"fox","orig_index":null,"phone_timings":[0.1,0.1,0.1,0.1]}]}"#,
        )
        .unwrap();
        assert_eq!(spec.kind, EditKind::Insert);
        assert_eq!(parse_edit_spec(&spec.to_json()).unwrap(), spec);
        assert!(parse_edit_spec(r#"{"kind":"move","anchor":0,"words":[]}"#).is_err());
    }
}
