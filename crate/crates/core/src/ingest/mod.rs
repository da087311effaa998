//! Parsers for alignments, dictionaries, parameter tracks and edit specs.

pub mod alignment;
pub mod dict;
pub mod edit;
pub mod track;

pub use alignment::{parse_alignment, AlignedTranscript, Word};
pub use dict::{parse_dictionary, PronunciationDict};
pub use edit::{build_query, parse_edit_spec, DurationSource, EditKind, EditSpec, EditWord, Query};
pub use track::{parse_parameter_track, Block, ParameterTrack, ParameterVector, PARAM_DIM};
