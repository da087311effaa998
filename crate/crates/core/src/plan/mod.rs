//! Turning an edit into a retimed, blended parameter sequence.
//!
//! The output covers a background region (by default the sentence around the
//! edit). It is laid out as pieces: the unedited footage before the edit, the
//! edited material, and the unedited footage after it. Inserts fill the
//! edited material with retrieved snippets; deletes and rearrangements reuse
//! the original words in their new order.

pub mod blend;
pub mod edl;
pub mod retime;

use std::ops::Range;

use serde::Serialize;

pub use blend::{blend, BlendInput, BlendedTrack, FrameProvenance, Source, Transition, DEFAULT_WINDOW};
pub use retime::{retime_background, retime_snippet, BackgroundMap, RetimedSnippet};

use crate::error::{Error, Result};
use crate::ingest::{
    build_query, AlignedTranscript, DurationSource, EditKind, EditSpec, ParameterTrack,
    PronunciationDict, Query,
};
use crate::phoneme::{CostParams, PhoneSequence};
use crate::search::{search_with, AlignedPair, SearchOptions, SearchResult, SubsequenceMatch};
use crate::stats::duration_stats;

#[derive(Clone, Debug)]
pub struct PlanOptions {
    /// Output frame rate; the source rate when `None`.
    pub fps_out: Option<f64>,
    /// Cross-fade width in seconds. Zero disables blending.
    pub window: f64,
    /// Source frame range used as background instead of the enclosing sentence.
    pub bg_region: Option<Range<usize>>,
    /// Keep retrieval out of the background region.
    pub exclude_background: bool,
    pub search: SearchOptions,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            fps_out: None,
            window: DEFAULT_WINDOW,
            bg_region: None,
            exclude_background: true,
            search: SearchOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    /// Unedited footage before the edit.
    Leading,
    /// A run of original words placed inside the edit.
    Original,
    /// A snippet found by the viseme search; holds the split index.
    Retrieved(usize),
    /// Unedited footage after the edit.
    Trailing,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Piece {
    pub kind: PieceKind,
    pub out_frames: Range<usize>,
    /// Source time span the piece samples from.
    pub src_t_in: f64,
    pub src_t_out: f64,
    /// Query phones the piece realizes, if any.
    pub query_range: Option<Range<usize>>,
}

#[derive(Clone, Debug)]
pub struct EditPlan {
    pub edit: EditSpec,
    pub query: Query,
    /// `None` for deletes and rearrangements.
    pub search: Option<SearchResult>,
    pub background: BackgroundMap,
    pub track: BlendedTrack,
    pub pieces: Vec<Piece>,
    pub transitions: Vec<Transition>,
    /// Output frames realizing the query.
    pub edited_frames: Range<usize>,
    /// Original word range replaced by the edit.
    pub region: Range<usize>,
    pub illumination_bounds: (usize, usize),
    pub source_fps: f64,
    pub source_sha256: String,
}

impl EditPlan {
    pub fn duration(&self) -> f64 {
        self.background.out_frames as f64 / self.track.fps
    }
}

struct Layout {
    bg_t: (f64, f64),
    edit_t: (f64, f64),
    bg_frames: Range<usize>,
    bg_phones: Range<usize>,
}

fn layout(
    region: &Range<usize>,
    transcript: &AlignedTranscript,
    track: &ParameterTrack,
    opts: &PlanOptions,
) -> Result<Layout> {
    let n_words = transcript.words.len();
    if n_words == 0 {
        return Err(Error::InvalidEdit("transcript has no words".into()));
    }
    let phones = transcript.phones.phones();
    let edit_t = if region.is_empty() {
        let at = transcript.word_phones(region.clone()).start;
        let t = phones.get(at).map_or(transcript.duration(), |p| p.t_in);
        (t, t)
    } else {
        let r = transcript.word_phones(region.clone());
        (phones[r.start].t_in, phones[r.end - 1].t_out)
    };

    let (bg_t, bg_frames) = match &opts.bg_region {
        Some(frames) => {
            if frames.is_empty() {
                return Err(Error::EmptyRegion);
            }
            let t = (
                frames.start as f64 / track.fps,
                frames.end as f64 / track.fps,
            );
            if t.0 > edit_t.0 + 1e-9 || t.1 < edit_t.1 - 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "background frames {frames:?} do not contain the edit"
                )));
            }
            (t, frames.clone())
        }
        None => {
            let first = region.start.min(n_words - 1);
            let last = if region.is_empty() {
                first
            } else {
                region.end - 1
            };
            let s0 = transcript.sentence_of_word(first).expect("sentences partition words");
            let s1 = transcript.sentence_of_word(last).expect("sentences partition words");
            let words = transcript.sentences[s0].start..transcript.sentences[s1].end;
            let r = transcript.word_phones(words);
            let t = (phones[r.start].t_in, phones[r.end - 1].t_out);
            let f = (t.0 * track.fps).round() as usize..(t.1 * track.fps).round() as usize;
            (t, f)
        }
    };
    if bg_frames.end > track.len() + 1 {
        return Err(Error::OutOfTrackRange { time: bg_t.1 });
    }
    let bg_frames = bg_frames.start..bg_frames.end.min(track.len());
    let bg_phones = {
        let lo = phones.partition_point(|p| p.t_out <= bg_t.0);
        let hi = phones.partition_point(|p| p.t_in < bg_t.1);
        lo..hi.max(lo)
    };
    Ok(Layout {
        bg_t,
        edit_t,
        bg_frames,
        bg_phones,
    })
}

/// Runs of consecutive original word indices, in edit order.
fn word_runs(edit: &EditSpec) -> Vec<Range<usize>> {
    let mut runs: Vec<Range<usize>> = Vec::new();
    for (k, w) in edit.words.iter().enumerate() {
        let orig = w.orig_index.expect("checked by EditSpec::region");
        match runs.last_mut() {
            Some(r) if orig > 0 && edit.words[r.end - 1].orig_index == Some(orig - 1) => {
                r.end = k + 1
            }
            _ => runs.push(k..k + 1),
        }
    }
    runs
}

/// Identity match of query phones onto the original phones they came from.
fn original_snippet(
    query_range: Range<usize>,
    corpus_range: Range<usize>,
) -> SubsequenceMatch {
    SubsequenceMatch {
        alignment: query_range
            .clone()
            .zip(corpus_range.clone())
            .map(|(q, c)| AlignedPair {
                query: Some(q),
                corpus: Some(c),
            })
            .collect(),
        query_range,
        corpus_range,
        cost: 0.0,
    }
}

fn snippet_span(m: &SubsequenceMatch, query: &PhoneSequence, corpus: &PhoneSequence) -> (f64, f64) {
    let iv = retime::source_intervals(m, query, corpus);
    (
        iv.first().map_or(0.0, |x| x.0),
        iv.last().map_or(0.0, |x| x.1),
    )
}

pub fn plan_edit(
    edit: &EditSpec,
    transcript: &AlignedTranscript,
    track: &ParameterTrack,
    dict: &PronunciationDict,
    params: &CostParams,
    opts: &PlanOptions,
) -> Result<EditPlan> {
    params.validate()?;
    let fps_out = opts.fps_out.unwrap_or(track.fps);
    if !(fps_out.is_finite() && fps_out > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "output fps must be positive, got {fps_out}"
        )));
    }
    let region = edit.region(transcript)?;
    let lay = layout(&region, transcript, track, opts)?;

    let medians = duration_stats(transcript);
    let query = build_query(edit, dict, transcript, DurationSource::CorpusMedians(&medians))?;
    let corpus = &transcript.phones;

    // Snippets realizing the query, in query order.
    let (search, snippets): (Option<SearchResult>, Vec<(PieceKind, SubsequenceMatch)>) =
        match edit.kind {
            EditKind::Insert => {
                let mut sopts = opts.search.clone();
                if opts.exclude_background {
                    sopts.exclude.push(lay.bg_phones.clone());
                }
                let result = search_with(&query.phones, corpus, params, &sopts)?;
                let snippets = result
                    .split
                    .iter()
                    .enumerate()
                    .map(|(k, m)| (PieceKind::Retrieved(k), m.clone()))
                    .collect();
                (Some(result), snippets)
            }
            EditKind::Delete | EditKind::Rearrange => {
                let snippets = word_runs(edit)
                    .into_iter()
                    .map(|run| {
                        let q = query.word_phones[run.start].start..query.word_phones[run.end - 1].end;
                        let first = edit.words[run.start].orig_index.expect("mapped");
                        let last = edit.words[run.end - 1].orig_index.expect("mapped");
                        let c = transcript.word_phones(first..last + 1);
                        (PieceKind::Original, original_snippet(q, c))
                    })
                    .collect();
                (None, snippets)
            }
        };

    let lead_len = (fps_out * (lay.edit_t.0 - lay.bg_t.0)).max(0.0).round() as usize;
    let trail_len = (fps_out * (lay.bg_t.1 - lay.edit_t.1)).max(0.0).round() as usize;

    let mut pieces: Vec<Piece> = Vec::new();
    let mut retimed = Vec::new();
    let mut push = |kind, span: (f64, f64), q: Option<Range<usize>>, r: RetimedSnippet| {
        let at = pieces.last().map_or(0, |p| p.out_frames.end);
        let end = at + r.len();
        pieces.push(Piece {
            kind,
            out_frames: at..end,
            src_t_in: span.0,
            src_t_out: span.1,
            query_range: q,
        });
        retimed.push(r);
        end
    };

    push(
        PieceKind::Leading,
        (lay.bg_t.0, lay.edit_t.0),
        None,
        retime::retime_span(track, lay.bg_t.0, lay.edit_t.0, lead_len)?,
    );
    let edited_start = lead_len;
    let mut edited_end = edited_start;
    for (kind, m) in &snippets {
        let span = snippet_span(m, &query.phones, corpus);
        let r = retime_snippet(track, m, &query.phones, corpus, fps_out)?;
        edited_end = push(*kind, span, Some(m.query_range.clone()), r);
    }
    let edited_frames = edited_start..edited_end;
    let total = push(
        PieceKind::Trailing,
        (lay.edit_t.1, lay.bg_t.1),
        None,
        retime::retime_span(track, lay.edit_t.1, lay.bg_t.1, trail_len)?,
    );

    // A junction is seamless when both sides are original footage that meet
    // in the source.
    let continuous: Vec<bool> = pieces
        .windows(2)
        .map(|w| {
            let original = |k: PieceKind| !matches!(k, PieceKind::Retrieved(_));
            original(w[0].kind) && original(w[1].kind) && (w[0].src_t_out - w[1].src_t_in).abs() < 1e-9
        })
        .collect();

    let background = retime_background(
        track,
        lay.bg_frames.clone(),
        total as f64 / fps_out,
        fps_out,
    )?;

    let last = track.len() - 1;
    let edge_in = ((lay.edit_t.0 * track.fps).round() as usize).min(last + 1);
    let edge_out = ((lay.edit_t.1 * track.fps).round() as usize).min(last);
    let illumination_bounds = (edge_in.saturating_sub(1), edge_out);

    let blended = blend(&BlendInput {
        pieces: &retimed,
        continuous: &continuous,
        background: &background,
        track,
        edited: edited_frames.clone(),
        illumination_bounds,
        window: opts.window,
    })?;

    Ok(EditPlan {
        edit: edit.clone(),
        query,
        search,
        background,
        track: blended.track,
        pieces,
        transitions: blended.transitions,
        edited_frames,
        region,
        illumination_bounds,
        source_fps: track.fps,
        source_sha256: track.sha256(),
    })
}
