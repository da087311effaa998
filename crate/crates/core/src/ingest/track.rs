//! Per-frame face-model parameter tracks.
//!
//! Binary layout (`VFTK`), all little-endian:
//!
//! | field         | type          |
//! |---------------|---------------|
//! | magic         | `b"VFTK"`     |
//! | version       | `u32` (1)     |
//! | fps           | `f64`         |
//! | frame_count   | `u64`         |
//! | frames        | `frame_count * 257` `f64` |
//!
//! A JSON form `{"fps":..,"frame_count":..,"frames":[[257 numbers], ...]}` is
//! accepted as well.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const PARAM_DIM: usize = 257;
pub const MAGIC: &[u8; 4] = b"VFTK";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

/// Snap distance (in frames) under which a sample time counts as on-frame.
const FRAME_SNAP: f64 = 1e-9;

/// Parameter blocks in layout order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// Rigid head pose: 3 rotation then 3 translation components.
    Pose,
    Geometry,
    Reflectance,
    Expression,
    Illumination,
}

impl Block {
    pub const ALL: [Block; 5] = [
        Block::Pose,
        Block::Geometry,
        Block::Reflectance,
        Block::Expression,
        Block::Illumination,
    ];

    pub const fn range(self) -> Range<usize> {
        match self {
            Block::Pose => 0..6,
            Block::Geometry => 6..86,
            Block::Reflectance => 86..166,
            Block::Expression => 166..230,
            Block::Illumination => 230..257,
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct ParameterVector(pub [f64; PARAM_DIM]);

impl Default for ParameterVector {
    fn default() -> Self {
        ParameterVector([0.0; PARAM_DIM])
    }
}

impl std::fmt::Debug for ParameterVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParameterVector")
            .field("pose", &self.block(Block::Pose))
            .finish_non_exhaustive()
    }
}

impl ParameterVector {
    pub fn from_slice(values: &[f64]) -> Option<Self> {
        <[f64; PARAM_DIM]>::try_from(values).ok().map(ParameterVector)
    }

    pub fn block(&self, block: Block) -> &[f64] {
        &self.0[block.range()]
    }

    pub fn block_mut(&mut self, block: Block) -> &mut [f64] {
        &mut self.0[block.range()]
    }

    /// `self + w * (other - self)`, component-wise.
    pub fn lerp(&self, other: &ParameterVector, w: f64) -> ParameterVector {
        let mut out = self.clone();
        for (o, b) in out.0.iter_mut().zip(other.0.iter()) {
            *o += w * (b - *o);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterTrack {
    pub fps: f64,
    pub frames: Vec<ParameterVector>,
}

#[derive(Serialize, Deserialize)]
struct TrackDoc {
    fps: f64,
    frame_count: usize,
    frames: Vec<Vec<f64>>,
}

fn check_fps(fps: f64) -> Result<()> {
    if fps.is_finite() && fps > 0.0 {
        Ok(())
    } else {
        Err(Error::parse("track", format!("fps must be positive, got {fps}")))
    }
}

/// Parses either container form, chosen by the leading magic bytes.
pub fn parse_parameter_track(bytes: &[u8]) -> Result<ParameterTrack> {
    if bytes.starts_with(MAGIC) {
        parse_binary(bytes)
    } else {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::parse("track", e))?;
        parse_json(text)
    }
}

fn parse_binary(bytes: &[u8]) -> Result<ParameterTrack> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::parse("track", "truncated header"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::parse("track", format!("unsupported version {version}")));
    }
    let fps = f64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    check_fps(fps)?;
    let count = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
    let body = &bytes[HEADER_LEN..];
    let expected = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(PARAM_DIM * 8));
    if expected != Some(body.len()) {
        return Err(Error::parse(
            "track",
            format!(
                "header declares {count} frames but body holds {} bytes",
                body.len()
            ),
        ));
    }
    let frames = body
        .chunks_exact(PARAM_DIM * 8)
        .map(|chunk| {
            let mut v = [0.0; PARAM_DIM];
            for (dst, src) in v.iter_mut().zip(chunk.chunks_exact(8)) {
                *dst = f64::from_le_bytes(src.try_into().expect("8 bytes"));
            }
            ParameterVector(v)
        })
        .collect();
    Ok(ParameterTrack { fps, frames })
}

fn parse_json(text: &str) -> Result<ParameterTrack> {
    let doc: TrackDoc = serde_json::from_str(text).map_err(|e| Error::parse("track", e))?;
    check_fps(doc.fps)?;
    if doc.frame_count != doc.frames.len() {
        return Err(Error::parse(
            "track",
            format!(
                "header declares {} frames, found {}",
                doc.frame_count,
                doc.frames.len()
            ),
        ));
    }
    let frames = doc
        .frames
        .iter()
        .enumerate()
        .map(|(i, row)| {
            ParameterVector::from_slice(row).ok_or(Error::Dimension {
                frame: i,
                found: row.len(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ParameterTrack {
        fps: doc.fps,
        frames,
    })
}

impl ParameterTrack {
    pub fn new(fps: f64, frames: Vec<ParameterVector>) -> Result<Self> {
        check_fps(fps)?;
        Ok(ParameterTrack { fps, frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Frame `i` covers `[i / fps, (i + 1) / fps)`.
    pub fn duration(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }

    /// Parameters at time `t`, linearly interpolated between adjacent frames.
    /// Times on a frame boundary return that frame verbatim.
    pub fn sample(&self, t: f64) -> Result<ParameterVector> {
        let n = self.frames.len();
        let u = t * self.fps;
        if n == 0 || !u.is_finite() || u < -FRAME_SNAP || u > n as f64 + FRAME_SNAP {
            return Err(Error::OutOfTrackRange { time: t });
        }
        let u = u.clamp(0.0, (n - 1) as f64);
        let nearest = u.round();
        if (u - nearest).abs() < FRAME_SNAP {
            return Ok(self.frames[nearest as usize].clone());
        }
        let i = u.floor() as usize;
        let w = u - i as f64;
        Ok(self.frames[i].lerp(&self.frames[i + 1], w))
    }

    pub fn to_vftk(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.frames.len() * PARAM_DIM * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.fps.to_le_bytes());
        out.extend_from_slice(&(self.frames.len() as u64).to_le_bytes());
        for f in &self.frames {
            for v in f.0 {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = TrackDoc {
            fps: self.fps,
            frame_count: self.frames.len(),
            frames: self.frames.iter().map(|f| f.0.to_vec()).collect(),
        };
        serde_json::to_string(&doc).expect("track serializes")
    }

    /// Hex SHA-256 of the binary encoding.
    pub fn sha256(&self) -> String {
        Sha256::digest(self.to_vftk())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
