//! Edit planning for transcript-driven talking-head video.
//!
//! Given a phone-aligned transcript, a per-frame face-model parameter track
//! and a word-level edit, [`plan::plan_edit`] finds footage whose visemes
//! match the edited words ([`search`]), retimes it to the new phone lengths
//! and blends it into the surrounding parameters. The result is an edit
//! decision list plus a blended parameter track for a downstream renderer.

pub mod error;
pub mod exec;
pub mod ingest;
pub mod phoneme;
pub mod plan;
pub mod search;
pub mod stats;
pub mod synth;

pub use error::{Error, Result, Stage};
pub use exec::Parallelism;
pub use phoneme::{
    swap_cost, viseme_distance, viseme_of, CostParams, LabelEquality, Phone, PhoneLabel,
    PhoneSequence, VisemeId,
};
pub use plan::{plan_edit, EditPlan, PlanOptions};
pub use search::{
    enumerate_splits, match_subsequence, search, search_with, SearchOptions, SearchResult,
    SubsequenceMatch,
};
