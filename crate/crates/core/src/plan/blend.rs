//! Per-block parameter blending.
//!
//! * geometry and reflectance: held at the first background frame
//! * pose: copied from the retimed background, frame by frame
//! * illumination: linear ramp over the edited span between the frames that
//!   bound the edit in the source, endpoints excluded
//! * expression: pieces concatenated; every junction between pieces that are
//!   not contiguous in the source is cross-faded over a window centered on
//!   the junction
//!
//! Inside a window each side is continued past the junction by its
//! neighbor's motion, offset to meet it: frames left of the junction get
//! `+ lambda * d`, frames right of it `- (1 - lambda) * d`, where `d` is the
//! expression jump at the junction and `lambda` ramps 0 to 1 across the
//! window. With constant pieces this is the plain linear cross-fade; with
//! moving pieces the per-frame step never exceeds the pieces' own motion
//! plus `|d| / window frames`.

use std::ops::Range;

use serde::Serialize;

use super::retime::{BackgroundMap, RetimedSnippet};
use crate::error::{Error, Result};
use crate::ingest::{Block, ParameterTrack, ParameterVector};

pub const DEFAULT_WINDOW: f64 = 0.067;

/// Where one block of one output frame came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Background,
    Piece(usize),
    Interpolated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FrameProvenance {
    pub pose: Source,
    pub geometry: Source,
    pub reflectance: Source,
    pub expression: Source,
    pub illumination: Source,
}

/// Cross-fade weights of one frame: `(left piece, weight, right piece, weight)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrossFade {
    pub left: usize,
    pub left_weight: f64,
    pub right: usize,
    pub right_weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Transition {
    /// Output time of the junction, seconds.
    pub time: f64,
    pub half_width: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlendedTrack {
    pub fps: f64,
    pub frames: Vec<ParameterVector>,
    pub provenance: Vec<FrameProvenance>,
    /// Piece each frame belongs to before blending.
    pub piece: Vec<usize>,
    pub src_times: Vec<f64>,
    pub crossfade: Vec<Option<CrossFade>>,
}

impl BlendedTrack {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn to_track(&self) -> ParameterTrack {
        ParameterTrack {
            fps: self.fps,
            frames: self.frames.clone(),
        }
    }
}

pub struct BlendInput<'a> {
    /// Retimed pieces in output order.
    pub pieces: &'a [RetimedSnippet],
    /// `continuous[k]` marks the junction between pieces `k` and `k + 1` as
    /// contiguous in the source, so it is left alone.
    pub continuous: &'a [bool],
    pub background: &'a BackgroundMap,
    pub track: &'a ParameterTrack,
    /// Output frames whose illumination is ramped.
    pub edited: Range<usize>,
    /// Source frames bounding the edit, for the illumination ramp.
    pub illumination_bounds: (usize, usize),
    /// Full cross-fade width in seconds; zero disables blending.
    pub window: f64,
}

pub struct Blended {
    pub track: BlendedTrack,
    pub transitions: Vec<Transition>,
}

pub fn blend(input: &BlendInput<'_>) -> Result<Blended> {
    let BlendInput {
        pieces,
        continuous,
        background,
        track,
        ref edited,
        illumination_bounds,
        window,
    } = *input;
    if !(window.is_finite() && window >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "blend window must be non-negative, got {window}"
        )));
    }
    let total: usize = pieces.iter().map(RetimedSnippet::len).sum();
    if total == 0 {
        return Err(Error::WindowTooLarge);
    }
    if total != background.out_frames {
        return Err(Error::InvalidParameter(format!(
            "pieces hold {total} frames but the background has {}",
            background.out_frames
        )));
    }
    if edited.end > total {
        return Err(Error::InvalidParameter("edited span exceeds output".into()));
    }
    let fps = background.fps_out;

    let mut frames = Vec::with_capacity(total);
    let mut piece_of = Vec::with_capacity(total);
    let mut src_times = Vec::with_capacity(total);
    let mut starts = Vec::with_capacity(pieces.len());
    for (k, p) in pieces.iter().enumerate() {
        starts.push(frames.len());
        frames.extend(p.frames.iter().cloned());
        src_times.extend(p.src_times.iter().copied());
        piece_of.extend(std::iter::repeat_n(k, p.len()));
    }
    let raw_expr: Vec<Vec<f64>> = frames
        .iter()
        .map(|f| f.block(Block::Expression).to_vec())
        .collect();

    let identity = track.frames[background.mapping[0]].clone();
    let mut provenance: Vec<FrameProvenance> = piece_of
        .iter()
        .map(|&k| FrameProvenance {
            pose: Source::Background,
            geometry: Source::Background,
            reflectance: Source::Background,
            expression: Source::Piece(k),
            illumination: Source::Piece(k),
        })
        .collect();
    let mut crossfade = vec![None; total];

    for (j, f) in frames.iter_mut().enumerate() {
        for block in [Block::Geometry, Block::Reflectance] {
            f.block_mut(block).copy_from_slice(identity.block(block));
        }
        let bg = &track.frames[background.mapping[j]];
        f.block_mut(Block::Pose).copy_from_slice(bg.block(Block::Pose));
    }

    // Illumination ramp, endpoint-exclusive.
    let (lo, hi) = illumination_bounds;
    let ga = track.frames[lo].block(Block::Illumination).to_vec();
    let gb = track.frames[hi].block(Block::Illumination).to_vec();
    let n = edited.len();
    for (k, j) in edited.clone().enumerate() {
        let w = (k + 1) as f64 / (n + 1) as f64;
        for ((dst, a), b) in frames[j]
            .block_mut(Block::Illumination)
            .iter_mut()
            .zip(&ga)
            .zip(&gb)
        {
            *dst = a + (b - a) * w;
        }
        provenance[j].illumination = Source::Interpolated;
    }

    // Expression cross-fades between non-empty neighbors.
    let nonempty: Vec<usize> = (0..pieces.len()).filter(|&k| !pieces[k].is_empty()).collect();
    let mut transitions = Vec::new();
    for pair in nonempty.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let contiguous = (a..b).all(|k| continuous.get(k).copied().unwrap_or(false));
        if contiguous {
            continue;
        }
        let junction = starts[b];
        let len_a = pieces[a].len() as f64 / fps;
        let len_b = pieces[b].len() as f64 / fps;
        let half = (window / 2.0).min(len_a / 2.0).min(len_b / 2.0);
        let t_j = junction as f64 / fps;
        transitions.push(Transition {
            time: t_j,
            half_width: half,
            left: a,
            right: b,
        });
        if half <= 0.0 {
            continue;
        }
        let d: Vec<f64> = raw_expr[junction]
            .iter()
            .zip(&raw_expr[junction - 1])
            .map(|(r, l)| r - l)
            .collect();
        let lambda = |j: usize| (j as f64 / fps - (t_j - half)) / (2.0 * half);

        let mut j = junction;
        while j > starts[a] {
            j -= 1;
            let l = lambda(j);
            if l <= 0.0 {
                break;
            }
            for (e, dk) in frames[j].block_mut(Block::Expression).iter_mut().zip(&d) {
                *e += l * dk;
            }
            mark(&mut provenance[j], &mut crossfade[j], a, b, l);
        }
        let end_b = starts[b] + pieces[b].len();
        for j in junction..end_b {
            let l = lambda(j);
            if l >= 1.0 {
                break;
            }
            for (e, dk) in frames[j].block_mut(Block::Expression).iter_mut().zip(&d) {
                *e -= (1.0 - l) * dk;
            }
            mark(&mut provenance[j], &mut crossfade[j], a, b, l);
        }
    }

    Ok(Blended {
        track: BlendedTrack {
            fps,
            frames,
            provenance,
            piece: piece_of,
            src_times,
            crossfade,
        },
        transitions,
    })
}

fn mark(p: &mut FrameProvenance, x: &mut Option<CrossFade>, a: usize, b: usize, l: f64) {
    p.expression = Source::Interpolated;
    *x = Some(CrossFade {
        left: a,
        left_weight: 1.0 - l,
        right: b,
        right_weight: l,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::PARAM_DIM;
    use crate::plan::retime::retime_background;

    fn constant(n: usize, expr0: f64) -> RetimedSnippet {
        let mut v = ParameterVector([0.0; PARAM_DIM]);
        v.block_mut(Block::Expression)[0] = expr0;
        RetimedSnippet {
            frames: vec![v; n],
            src_times: vec![0.0; n],
        }
    }

    fn source_track(n: usize, fps: f64) -> ParameterTrack {
        let frames = (0..n)
            .map(|i| {
                let mut v = ParameterVector([0.0; PARAM_DIM]);
                for (k, x) in v.0.iter_mut().enumerate() {
                    *x = (i * 1000 + k) as f64;
                }
                v
            })
            .collect();
        ParameterTrack::new(fps, frames).unwrap()
    }

    fn run(window: f64) -> Blended {
        let track = source_track(100, 60.0);
        let pieces = [constant(30, 0.0), constant(30, 1.0)];
        let bg = retime_background(&track, 0..60, 1.0, 60.0).unwrap();
        blend(&BlendInput {
            pieces: &pieces,
            continuous: &[false],
            background: &bg,
            track: &track,
            edited: 0..60,
            illumination_bounds: (0, 99),
            window,
        })
        .unwrap()
    }

    #[test]
    fn midpoint_of_crossfade() {
        let b = run(DEFAULT_WINDOW);
        let e = |j: usize| b.track.frames[j].block(Block::Expression)[0];
        assert!((e(30) - 0.5).abs() < 1e-12);
        assert_eq!(e(0), 0.0);
        assert_eq!(e(59), 1.0);
        assert_eq!(b.transitions.len(), 1);
        // 0.067 s at 60 fps: frames 28..=32 lie strictly inside the window.
        let blended: Vec<usize> = (0..60)
            .filter(|&j| b.track.provenance[j].expression == Source::Interpolated)
            .collect();
        assert_eq!(blended, vec![28, 29, 30, 31, 32]);
        for w in blended.windows(2) {
            assert!(e(w[1]) > e(w[0]));
        }
    }

    #[test]
    fn disabled_blend_is_a_hard_cut() {
        let b = run(0.0);
        let e = |j: usize| b.track.frames[j].block(Block::Expression)[0];
        assert_eq!(e(29), 0.0);
        assert_eq!(e(30), 1.0);
    }

    #[test]
    fn block_rules() {
        let track = source_track(100, 60.0);
        let b = run(DEFAULT_WINDOW);
        for (j, f) in b.track.frames.iter().enumerate() {
            assert_eq!(f.block(Block::Pose), track.frames[j].block(Block::Pose));
            assert_eq!(f.block(Block::Geometry), track.frames[0].block(Block::Geometry));
            assert_eq!(f.block(Block::Reflectance), track.frames[0].block(Block::Reflectance));
            let g = f.block(Block::Illumination)[0];
            let a = track.frames[0].block(Block::Illumination)[0];
            let z = track.frames[99].block(Block::Illumination)[0];
            let want = a + (z - a) * ((j + 1) as f64 / 61.0);
            assert!((g - want).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_input() {
        let track = source_track(10, 60.0);
        let bg = retime_background(&track, 0..5, 0.05, 60.0).unwrap();
        let pieces = [constant(0, 0.0)];
        let err = blend(&BlendInput {
            pieces: &pieces,
            continuous: &[],
            background: &bg,
            track: &track,
            edited: 0..0,
            illumination_bounds: (0, 9),
            window: DEFAULT_WINDOW,
        });
        assert!(matches!(err, Err(Error::WindowTooLarge)));
    }
}
