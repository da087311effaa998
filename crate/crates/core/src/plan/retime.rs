//! Background and snippet retiming.
//!
//! Frame counts are derived with `f64::round` (half away from zero). Phone
//! boundaries inside a query are rounded cumulatively from the query start,
//! so a query lasting `T` seconds always yields `round(fps * T)` frames even
//! though individual phones may gain or lose a frame.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{ParameterTrack, ParameterVector};
use crate::phoneme::PhoneSequence;
use crate::search::SubsequenceMatch;

/// Nearest-neighbor time warp of a source frame range onto the output grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BackgroundMap {
    pub out_frames: usize,
    pub fps_out: f64,
    /// Source frame for each output frame.
    pub mapping: Vec<usize>,
    pub region: Range<usize>,
    /// New duration over original duration.
    pub retime_factor: f64,
}

pub fn retime_background(
    track: &ParameterTrack,
    region: Range<usize>,
    new_duration: f64,
    fps_out: f64,
) -> Result<BackgroundMap> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if region.end > track.len() {
        return Err(Error::OutOfTrackRange {
            time: region.end as f64 / track.fps,
        });
    }
    if !(new_duration.is_finite() && new_duration > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "background duration must be positive, got {new_duration}"
        )));
    }
    if !(fps_out.is_finite() && fps_out > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "output fps must be positive, got {fps_out}"
        )));
    }
    let original = region.len() as f64 / track.fps;
    let retime_factor = new_duration / original;
    let out_frames = (new_duration * fps_out).round() as usize;
    // Output frames per source frame.
    let step = retime_factor * (fps_out / track.fps);
    let last = region.len() - 1;
    let mapping = (0..out_frames)
        .map(|j| region.start + ((j as f64 / step).round() as usize).min(last))
        .collect();
    Ok(BackgroundMap {
        out_frames,
        fps_out,
        mapping,
        region,
        retime_factor,
    })
}

/// Output frame range of each query phone, relative to the query start.
pub fn phone_frames(query: &PhoneSequence, fps_out: f64) -> Vec<Range<usize>> {
    let Some(first) = query.phones().first() else {
        return Vec::new();
    };
    let t0 = first.t_in;
    query
        .phones()
        .iter()
        .map(|p| {
            let a = ((p.t_in - t0) * fps_out).round() as usize;
            let b = ((p.t_out - t0) * fps_out).round() as usize;
            a..b.max(a)
        })
        .collect()
}

/// A resampled stretch of source parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RetimedSnippet {
    pub frames: Vec<ParameterVector>,
    /// Source time of each output frame.
    pub src_times: Vec<f64>,
}

impl RetimedSnippet {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Source time interval each query phone of `snippet` draws from.
///
/// Swapped phones use their corpus phone. Query phones aligned to a gap share
/// the stretch between the neighboring swapped corpus phones, split in
/// proportion to their query durations; an empty stretch holds one instant.
pub fn source_intervals(
    snippet: &SubsequenceMatch,
    query: &PhoneSequence,
    corpus: &PhoneSequence,
) -> Vec<(f64, f64)> {
    let c = corpus.phones();
    let time_at = |idx: usize| {
        if idx < c.len() {
            c[idx].t_in
        } else {
            c.last().map_or(0.0, |p| p.t_out)
        }
    };
    let range = &snippet.corpus_range;
    let range_end_time = if range.is_empty() {
        time_at(range.start)
    } else {
        c[range.end - 1].t_out
    };

    let mut out = vec![(0.0, 0.0); snippet.query_range.len()];
    let mut left = time_at(range.start);
    let mut pending: Vec<usize> = Vec::new();
    let flush = |pending: &mut Vec<usize>, out: &mut Vec<(f64, f64)>, a: f64, b: f64| {
        let b = b.max(a);
        let total: f64 = pending.iter().map(|&i| query[i].duration()).sum();
        let mut t = a;
        for &i in pending.iter() {
            let share = (b - a) * query[i].duration() / total;
            out[i - snippet.query_range.start] = (t, t + share);
            t += share;
        }
        pending.clear();
    };
    for pair in &snippet.alignment {
        match (pair.query, pair.corpus) {
            (Some(qi), Some(pj)) => {
                flush(&mut pending, &mut out, left, c[pj].t_in);
                out[qi - snippet.query_range.start] = (c[pj].t_in, c[pj].t_out);
                left = c[pj].t_out;
            }
            (Some(qi), None) => pending.push(qi),
            _ => {}
        }
    }
    flush(&mut pending, &mut out, left, range_end_time);
    out
}

/// Resamples the source frames of `snippet` so each query phone lasts as long
/// as in the query. Frames inside a phone are spaced uniformly over its source
/// interval and interpolated linearly between adjacent track frames.
pub fn retime_snippet(
    track: &ParameterTrack,
    snippet: &SubsequenceMatch,
    query: &PhoneSequence,
    corpus: &PhoneSequence,
    fps_out: f64,
) -> Result<RetimedSnippet> {
    let grid = phone_frames(query, fps_out);
    let intervals = source_intervals(snippet, query, corpus);
    let mut frames = Vec::new();
    let mut src_times = Vec::new();
    for (qi, &(a, b)) in snippet.query_range.clone().zip(&intervals) {
        let n = grid[qi].len();
        for k in 0..n {
            let t = a + k as f64 * (b - a) / n as f64;
            frames.push(track.sample(t)?);
            src_times.push(t);
        }
    }
    Ok(RetimedSnippet { frames, src_times })
}

/// Uniformly resamples source time `[t_in, t_out)` into `frames` output frames.
pub fn retime_span(
    track: &ParameterTrack,
    t_in: f64,
    t_out: f64,
    frames: usize,
) -> Result<RetimedSnippet> {
    let mut out = RetimedSnippet {
        frames: Vec::with_capacity(frames),
        src_times: Vec::with_capacity(frames),
    };
    for k in 0..frames {
        let t = t_in + k as f64 * (t_out - t_in) / frames as f64;
        out.frames.push(track.sample(t)?);
        out.src_times.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::PARAM_DIM;
    use crate::phoneme::PhoneLabel;
    use crate::search::AlignedPair;

    fn track(n: usize, fps: f64) -> ParameterTrack {
        let frames = (0..n)
            .map(|i| {
                let mut v = [0.0; PARAM_DIM];
                v.iter_mut().for_each(|x| *x = i as f64);
                ParameterVector(v)
            })
            .collect();
        ParameterTrack::new(fps, frames).unwrap()
    }

    fn seq(items: &[(&str, f64)]) -> PhoneSequence {
        PhoneSequence::contiguous(
            items
                .iter()
                .map(|(l, d)| (PhoneLabel::parse(l).unwrap(), *d)),
        )
        .unwrap()
    }

    #[test]
    fn background_stretch() {
        let t = track(200, 60.0);
        let map = retime_background(&t, 10..130, 2.5, 60.0).unwrap();
        assert_eq!(map.out_frames, 150);
        assert_eq!(map.retime_factor, 1.25);
        for (j, &m) in map.mapping.iter().enumerate() {
            assert_eq!(m, 10 + (j as f64 / 1.25).round() as usize);
        }
        assert_eq!(map.mapping[0], 10);
        assert_eq!(*map.mapping.last().unwrap(), 129);
    }

    #[test]
    fn background_identity() {
        let t = track(50, 25.0);
        let map = retime_background(&t, 5..45, 40.0 / 25.0, 25.0).unwrap();
        assert_eq!(map.retime_factor, 1.0);
        assert_eq!(map.mapping, (5..45).collect::<Vec<_>>());
    }

    #[test]
    fn background_single_frame() {
        let t = track(10, 25.0);
        let map = retime_background(&t, 3..4, 0.4, 25.0).unwrap();
        assert_eq!(map.out_frames, 10);
        assert!(map.mapping.iter().all(|&m| m == 3));
        assert!(matches!(
            retime_background(&t, 3..3, 0.4, 25.0),
            Err(Error::EmptyRegion)
        ));
    }

    fn identity_match(range: Range<usize>, corpus: Range<usize>) -> SubsequenceMatch {
        SubsequenceMatch {
            alignment: range
                .clone()
                .zip(corpus.clone())
                .map(|(q, c)| AlignedPair {
                    query: Some(q),
                    corpus: Some(c),
                })
                .collect(),
            query_range: range,
            corpus_range: corpus,
            cost: 0.0,
        }
    }

    #[test]
    fn snippet_frame_counts() {
        let t = track(120, 60.0);
        let corpus = seq(&[("AA1", 0.5), ("B", 0.5)]);
        let query = seq(&[("AA1", 0.5)]);
        let r = retime_snippet(&t, &identity_match(0..1, 0..1), &query, &corpus, 60.0).unwrap();
        assert_eq!(r.len(), 30);
    }

    #[test]
    fn snippet_identity_retiming() {
        let t = track(120, 60.0);
        let corpus = seq(&[("S", 0.25), ("AA1", 0.5), ("B", 0.25)]);
        let query = seq(&[("AA1", 0.5), ("B", 0.25)]);
        let r = retime_snippet(&t, &identity_match(0..2, 1..3), &query, &corpus, 60.0).unwrap();
        assert_eq!(r.len(), 45);
        for (k, f) in r.frames.iter().enumerate() {
            assert_eq!(*f, t.frames[15 + k]);
        }
    }

    #[test]
    fn snippet_stretches_between_frames() {
        let t = track(120, 60.0);
        let corpus = seq(&[("AA1", 0.05)]);
        let query = seq(&[("AA1", 0.1)]);
        let r = retime_snippet(&t, &identity_match(0..1, 0..1), &query, &corpus, 60.0).unwrap();
        assert_eq!(r.len(), 6);
        let got: Vec<f64> = r.frames.iter().map(|f| f.0[0]).collect();
        for (k, g) in got.iter().enumerate() {
            assert!((g - k as f64 * 0.5).abs() < 1e-9, "{got:?}");
        }
    }

    #[test]
    fn insertions_interpolate_across_the_gap() {
        let corpus = seq(&[("F", 0.1), ("M", 0.2), ("S", 0.1)]);
        let query = seq(&[("F", 0.1), ("AA1", 0.05), ("EH1", 0.15), ("S", 0.1)]);
        let m = SubsequenceMatch {
            query_range: 0..4,
            corpus_range: 0..3,
            alignment: vec![
                AlignedPair { query: Some(0), corpus: Some(0) },
                AlignedPair { query: None, corpus: Some(1) },
                AlignedPair { query: Some(1), corpus: None },
                AlignedPair { query: Some(2), corpus: None },
                AlignedPair { query: Some(3), corpus: Some(2) },
            ],
            cost: 2.0,
        };
        let iv = source_intervals(&m, &query, &corpus);
        let close = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12;
        assert!(close(iv[0], (0.0, 0.1)));
        assert!(close(iv[1], (0.1, 0.15)));
        assert!(close(iv[2], (0.15, 0.3)));
        assert!(close(iv[3], (0.3, 0.4)));
    }

    #[test]
    fn cumulative_rounding_preserves_total() {
        let query = seq(&[("F", 0.021), ("AA1", 0.033), ("K", 0.029), ("S", 0.047)]);
        let frames = phone_frames(&query, 60.0);
        assert_eq!(frames.last().unwrap().end, (0.13f64 * 60.0).round() as usize);
        for w in frames.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }

    #[test]
    fn out_of_track() {
        let t = track(10, 10.0);
        let corpus = seq(&[("AA1", 2.0)]);
        let query = seq(&[("AA1", 2.0)]);
        assert!(matches!(
            retime_snippet(&t, &identity_match(0..1, 0..1), &query, &corpus, 10.0),
            Err(Error::OutOfTrackRange { .. })
        ));
    }
}
