//! JSON edit decision lists and plain-text plan reports.

use std::fmt::Write as _;
use std::ops::Range;

use serde::Serialize;

use super::blend::{CrossFade, Source};
use super::{EditPlan, PieceKind};
use crate::ingest::{AlignedTranscript, EditSpec};
use crate::phoneme::PhoneSequence;

pub const EDL_VERSION: u32 = 1;

fn pair(r: &Range<usize>) -> [usize; 2] {
    [r.start, r.end]
}

#[derive(Serialize)]
struct Edl<'a> {
    version: u32,
    fps: f64,
    source_fps: f64,
    source_track_sha256: &'a str,
    edit: &'a EditSpec,
    region_words: [usize; 2],
    background: BackgroundDoc,
    search: Option<SearchDoc>,
    snippets: Vec<SnippetDoc>,
    transitions: Vec<TransitionDoc>,
    edited_frames: [usize; 2],
    illumination_bounds: [usize; 2],
    frames: Vec<FrameDoc>,
}

#[derive(Serialize)]
struct BackgroundDoc {
    region: [usize; 2],
    retime_factor: f64,
    out_frames: usize,
}

#[derive(Serialize)]
struct SearchDoc {
    total_cost: f64,
    segments: Vec<SegmentDoc>,
}

#[derive(Serialize)]
struct SegmentDoc {
    query_range: [usize; 2],
    corpus_range: [usize; 2],
    cost: f64,
    length_cost: f64,
    query_phones: String,
    source_phones: String,
    source_words: Vec<String>,
    t_in: f64,
    t_out: f64,
}

#[derive(Serialize)]
struct SnippetDoc {
    kind: PieceKind,
    out_frames: [usize; 2],
    t_in: f64,
    t_out: f64,
}

#[derive(Serialize)]
struct TransitionDoc {
    time: f64,
    half_width: f64,
}

#[derive(Serialize)]
#[serde(untagged)]
enum ParamSource {
    Tag(&'static str),
    Snippet { snippet: usize, t_src: f64 },
}

#[derive(Serialize)]
struct FrameDoc {
    bg_src_frame: usize,
    param_source: ParamSource,
    weights: Vec<(usize, f64)>,
}

fn labels(seq: &PhoneSequence, r: Range<usize>) -> String {
    seq.phones()[r]
        .iter()
        .map(|p| p.label.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

fn source_words(transcript: &AlignedTranscript, r: &Range<usize>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut last = None;
    for p in r.clone() {
        if let Some(w) = transcript.word_of_phone(p) {
            if last != Some(w) {
                out.push(transcript.words[w].text.clone());
                last = Some(w);
            }
        }
    }
    out
}

fn segment_docs(plan: &EditPlan, transcript: &AlignedTranscript, phi: f64) -> Option<SearchDoc> {
    let search = plan.search.as_ref()?;
    let corpus = &transcript.phones;
    let segments = search
        .split
        .iter()
        .map(|m| {
            let (t_in, t_out) = if m.corpus_range.is_empty() {
                let t = corpus
                    .phones()
                    .get(m.corpus_range.start)
                    .map_or(transcript.duration(), |p| p.t_in);
                (t, t)
            } else {
                (
                    corpus[m.corpus_range.start].t_in,
                    corpus[m.corpus_range.end - 1].t_out,
                )
            };
            SegmentDoc {
                query_range: pair(&m.query_range),
                corpus_range: pair(&m.corpus_range),
                cost: m.cost,
                length_cost: phi / m.query_range.len() as f64,
                query_phones: labels(&plan.query.phones, m.query_range.clone()),
                source_phones: labels(corpus, m.corpus_range.clone()),
                source_words: source_words(transcript, &m.corpus_range),
                t_in,
                t_out,
            }
        })
        .collect();
    Some(SearchDoc {
        total_cost: search.total_cost,
        segments,
    })
}

/// Serializes a plan as a JSON edit decision list.
///
/// `phi` is the segment-length weight used for the search, reported per segment.
pub fn to_edl_json(plan: &EditPlan, transcript: &AlignedTranscript, phi: f64) -> String {
    let t = &plan.track;
    let frames = (0..t.len())
        .map(|j| {
            let (param_source, weights) = match (t.provenance[j].expression, t.crossfade[j]) {
                (
                    Source::Interpolated,
                    Some(CrossFade {
                        left,
                        left_weight,
                        right,
                        right_weight,
                    }),
                ) => (
                    ParamSource::Tag("xfade"),
                    vec![(left, left_weight), (right, right_weight)],
                ),
                (Source::Piece(k), _) => (
                    ParamSource::Snippet {
                        snippet: k,
                        t_src: t.src_times[j],
                    },
                    vec![(k, 1.0)],
                ),
                _ => (ParamSource::Tag("bg"), Vec::new()),
            };
            FrameDoc {
                bg_src_frame: plan.background.mapping[j],
                param_source,
                weights,
            }
        })
        .collect();

    let edl = Edl {
        version: EDL_VERSION,
        fps: t.fps,
        source_fps: plan.source_fps,
        source_track_sha256: &plan.source_sha256,
        edit: &plan.edit,
        region_words: pair(&plan.region),
        background: BackgroundDoc {
            region: pair(&plan.background.region),
            retime_factor: plan.background.retime_factor,
            out_frames: plan.background.out_frames,
        },
        search: segment_docs(plan, transcript, phi),
        snippets: plan
            .pieces
            .iter()
            .map(|p| SnippetDoc {
                kind: p.kind,
                out_frames: pair(&p.out_frames),
                t_in: p.src_t_in,
                t_out: p.src_t_out,
            })
            .collect(),
        transitions: plan
            .transitions
            .iter()
            .map(|x| TransitionDoc {
                time: x.time,
                half_width: x.half_width,
            })
            .collect(),
        edited_frames: pair(&plan.edited_frames),
        illumination_bounds: [plan.illumination_bounds.0, plan.illumination_bounds.1],
        frames,
    };
    serde_json::to_string_pretty(&edl).expect("EDL serializes")
}

/// Human-readable summary: the chosen split with donor words and timestamps.
pub fn report(plan: &EditPlan, transcript: &AlignedTranscript, phi: f64) -> String {
    let mut out = String::new();
    let words: Vec<&str> = plan.edit.words.iter().map(|w| w.text.as_str()).collect();
    let _ = writeln!(out, "edit: {:?} [{}]", plan.edit.kind, words.join(" "));
    let _ = writeln!(
        out,
        "replaces words {}..{} of the source",
        plan.region.start, plan.region.end
    );
    let _ = writeln!(
        out,
        "query: {} ({} phones, {:.3} s)",
        labels(&plan.query.phones, 0..plan.query.phones.len()),
        plan.query.phones.len(),
        plan.query.phones.total_duration()
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "search:");
    match segment_docs(plan, transcript, phi) {
        None => {
            let _ = writeln!(out, "  (none)");
        }
        Some(doc) => {
            let _ = writeln!(out, "  total cost {:.6}", doc.total_cost);
            for (k, s) in doc.segments.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "  [{k}] {:<16} <- {:<16} from {:<24} {:>8.3}-{:<8.3} cost {:.6} + {:.6}",
                    s.query_phones,
                    s.source_phones,
                    format!("'{}'", s.source_words.join(" ")),
                    s.t_in,
                    s.t_out,
                    s.cost,
                    s.length_cost
                );
            }
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "background: source frames {}..{}, retimed x{:.4} to {} frames at {} fps",
        plan.background.region.start,
        plan.background.region.end,
        plan.background.retime_factor,
        plan.background.out_frames,
        plan.track.fps
    );
    let _ = writeln!(
        out,
        "edited frames: {}..{}",
        plan.edited_frames.start, plan.edited_frames.end
    );
    let _ = writeln!(out, "pieces:");
    for (k, p) in plan.pieces.iter().enumerate() {
        let _ = writeln!(
            out,
            "  [{k}] {:?} frames {}..{} from {:.3}-{:.3} s",
            p.kind, p.out_frames.start, p.out_frames.end, p.src_t_in, p.src_t_out
        );
    }
    let _ = writeln!(out, "transitions:");
    if plan.transitions.is_empty() {
        let _ = writeln!(out, "  (none)");
    }
    for x in &plan.transitions {
        let _ = writeln!(
            out,
            "  at {:.4} s, half-width {:.4} s (pieces {} -> {})",
            x.time, x.half_width, x.left, x.right
        );
    }
    out
}
