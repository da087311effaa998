//! Synthetic aligned corpora and parameter tracks.
//!
//! The corpus generator builds a pseudo-lexicon from English-like phone
//! frequencies and syllable shapes, draws words with a Zipf law, and gives
//! each phone a log-normal duration around a per-phone median. It stands in
//! for licensed read-speech corpora when measuring match statistics.
//!
//! The track generator derives parameters from the transcript with integer
//! hashing and piecewise-linear motion only, so output is bit-identical
//! across platforms.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Zipf};

use crate::ingest::{AlignedTranscript, Block, ParameterTrack, ParameterVector, Word, PARAM_DIM};
use crate::phoneme::{Phone, PhoneLabel, PhoneSequence};

/// (base code, relative frequency, median duration in seconds)
const VOWELS: &[(&str, f64, f64)] = &[
    ("AH", 12.0, 0.070),
    ("IH", 6.0, 0.070),
    ("IY", 4.0, 0.100),
    ("EH", 3.0, 0.090),
    ("AE", 3.0, 0.120),
    ("ER", 3.0, 0.100),
    ("AA", 2.0, 0.120),
    ("EY", 2.0, 0.130),
    ("AY", 1.7, 0.150),
    ("AO", 1.5, 0.120),
    ("OW", 1.5, 0.130),
    ("UW", 1.2, 0.110),
    ("AW", 0.6, 0.160),
    ("UH", 0.4, 0.070),
    ("OY", 0.1, 0.170),
];

const CONSONANTS: &[(&str, f64, f64)] = &[
    ("N", 7.0, 0.055),
    ("T", 7.0, 0.050),
    ("S", 4.5, 0.100),
    ("D", 4.0, 0.045),
    ("R", 4.0, 0.055),
    ("L", 4.0, 0.060),
    ("DH", 3.0, 0.035),
    ("K", 3.0, 0.060),
    ("M", 3.0, 0.065),
    ("Z", 2.5, 0.075),
    ("W", 2.0, 0.055),
    ("B", 2.0, 0.050),
    ("V", 2.0, 0.055),
    ("P", 2.0, 0.060),
    ("F", 1.8, 0.090),
    ("HH", 1.5, 0.060),
    ("NG", 1.0, 0.070),
    ("G", 0.8, 0.050),
    ("SH", 0.8, 0.110),
    ("Y", 0.8, 0.050),
    ("CH", 0.5, 0.090),
    ("JH", 0.5, 0.080),
    ("TH", 0.4, 0.090),
    ("ZH", 0.1, 0.080),
];

const FUNCTION_WORDS: &[(&str, &str)] = &[
    ("the", "DH AH0"),
    ("of", "AH1 V"),
    ("and", "AE1 N D"),
    ("a", "AH0"),
    ("to", "T UW1"),
    ("in", "IH0 N"),
    ("is", "IH1 Z"),
    ("it", "IH1 T"),
    ("that", "DH AE1 T"),
    ("for", "F AO1 R"),
    ("was", "W AA1 Z"),
    ("on", "AA1 N"),
    ("with", "W IH1 DH"),
    ("as", "AE1 Z"),
    ("his", "HH IH1 Z"),
    ("be", "B IY1"),
    ("at", "AE1 T"),
    ("by", "B AY1"),
    ("this", "DH IH1 S"),
    ("had", "HH AE1 D"),
];

const SILENCE_MEDIAN: f64 = 0.15;
const DURATION_SIGMA: f64 = 0.35;
/// Alignment time resolution: 10 ms ticks.
const TICKS_PER_SECOND: f64 = 100.0;

#[derive(Clone, Debug)]
pub struct CorpusConfig {
    pub sentences: usize,
    pub lexicon: usize,
    pub words_per_sentence: (usize, usize),
    /// Zipf exponent of word frequencies.
    pub zipf: f64,
    /// Chance of a short pause between two words.
    pub pause_rate: f64,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            sentences: 1000,
            lexicon: 10_000,
            words_per_sentence: (6, 14),
            zipf: 0.8,
            pause_rate: 0.1,
            seed: 1,
        }
    }
}

pub struct SyntheticCorpus {
    pub transcript: AlignedTranscript,
    /// Word text and pronunciation, most frequent first.
    pub lexicon: Vec<(String, Vec<PhoneLabel>)>,
}

impl SyntheticCorpus {
    /// The lexicon as a CMU-style dictionary.
    pub fn dictionary_text(&self) -> String {
        let mut out = String::new();
        for (w, p) in &self.lexicon {
            let codes: Vec<&str> = p.iter().map(|l| l.as_str()).collect();
            out.push_str(&format!("{}  {}\n", w.to_uppercase(), codes.join(" ")));
        }
        out
    }
}

fn label(code: &str) -> PhoneLabel {
    PhoneLabel::parse(code).expect("generator codes are valid")
}

fn median_of(l: PhoneLabel) -> f64 {
    if l.is_silence() {
        return SILENCE_MEDIAN;
    }
    let base = l.base();
    let stress = l.as_str().as_bytes().last().copied();
    if let Some(&(_, _, m)) = VOWELS.iter().find(|v| v.0 == base) {
        return match stress {
            Some(b'1') => m * 1.2,
            Some(b'0') => m * 0.8,
            _ => m,
        };
    }
    CONSONANTS
        .iter()
        .find(|c| c.0 == base)
        .map_or(0.06, |c| c.2)
}

/// Rough English spelling of a pronunciation.
fn spell(phones: &[PhoneLabel]) -> String {
    phones
        .iter()
        .map(|l| match l.base() {
            "AA" | "AE" => "a",
            "AH" | "UH" => "u",
            "AO" | "OW" => "o",
            "AW" => "ow",
            "AY" | "IH" => "i",
            "EH" => "e",
            "ER" => "er",
            "EY" => "ay",
            "IY" => "ee",
            "OY" => "oy",
            "UW" => "oo",
            "DH" | "TH" => "th",
            "HH" => "h",
            "JH" => "j",
            other => return other.to_lowercase(),
        }
        .to_string())
        .collect()
}

struct Lexer {
    vowels: WeightedIndex<f64>,
    consonants: WeightedIndex<f64>,
}

impl Lexer {
    fn new() -> Self {
        Lexer {
            vowels: WeightedIndex::new(VOWELS.iter().map(|v| v.1)).expect("weights"),
            consonants: WeightedIndex::new(CONSONANTS.iter().map(|c| c.1)).expect("weights"),
        }
    }

    fn word(&self, rng: &mut ChaCha8Rng) -> Vec<PhoneLabel> {
        let syllables = match rng.random_range(0..10) {
            0..=3 => 1,
            4..=7 => 2,
            _ => 3,
        };
        let primary = rng.random_range(0..syllables);
        let mut out = Vec::new();
        for s in 0..syllables {
            for _ in 0..rng.random_range(0..=2) {
                out.push(label(CONSONANTS[self.consonants.sample(rng)].0));
            }
            let stress = if s == primary {
                1
            } else if rng.random_bool(0.2) {
                2
            } else {
                0
            };
            let base = VOWELS[self.vowels.sample(rng)].0;
            out.push(label(&format!("{base}{stress}")));
            let coda = if s + 1 == syllables {
                rng.random_range(0..=2)
            } else {
                rng.random_range(0..=1)
            };
            for _ in 0..coda {
                out.push(label(CONSONANTS[self.consonants.sample(rng)].0));
            }
        }
        out
    }
}

struct Timeline {
    t: u64,
    words: Vec<Word>,
    phones: Vec<Phone>,
}

impl Timeline {
    fn push_word(&mut self, text: String, labels: &[PhoneLabel], rng: &mut ChaCha8Rng) {
        let start = self.phones.len();
        let t_word = self.t;
        for &l in labels {
            let dist = LogNormal::new(median_of(l).ln(), DURATION_SIGMA).expect("sigma > 0");
            let ticks = ((dist.sample(rng) * TICKS_PER_SECOND).round() as u64).clamp(1, 60);
            let t_in = self.t as f64 / TICKS_PER_SECOND;
            self.t += ticks;
            self.phones.push(Phone {
                label: l,
                t_in,
                t_out: self.t as f64 / TICKS_PER_SECOND,
            });
        }
        self.words.push(Word {
            text,
            t_in: t_word as f64 / TICKS_PER_SECOND,
            t_out: self.t as f64 / TICKS_PER_SECOND,
            phones: start..self.phones.len(),
        });
    }
}

/// Generates a phonetically varied corpus of read-style sentences.
pub fn corpus(config: &CorpusConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lexer = Lexer::new();
    let mut lexicon: Vec<(String, Vec<PhoneLabel>)> = FUNCTION_WORDS
        .iter()
        .map(|(w, p)| (w.to_string(), p.split_whitespace().map(label).collect()))
        .collect();
    let mut spellings: HashSet<String> = lexicon.iter().map(|(w, _)| w.clone()).collect();
    while lexicon.len() < config.lexicon.max(FUNCTION_WORDS.len()) {
        let w = lexer.word(&mut rng);
        let text = spell(&w);
        if spellings.insert(text.clone()) {
            lexicon.push((text, w));
        }
    }
    let zipf = Zipf::new(lexicon.len() as f64, config.zipf).expect("valid zipf");
    let sp = [PhoneLabel::SILENCE];

    let mut tl = Timeline {
        t: 0,
        words: Vec::new(),
        phones: Vec::new(),
    };
    let mut sentences = Vec::with_capacity(config.sentences);
    let (lo, hi) = config.words_per_sentence;
    for _ in 0..config.sentences {
        let first = tl.words.len();
        tl.push_word("sp".into(), &sp, &mut rng);
        let n = rng.random_range(lo..=hi);
        for i in 0..n {
            let rank = zipf.sample(&mut rng) as usize - 1;
            let (text, pron) = &lexicon[rank];
            let text = if i + 1 == n {
                format!("{text}.")
            } else {
                text.clone()
            };
            tl.push_word(text, pron, &mut rng);
            if i + 1 < n && rng.random_bool(config.pause_rate) {
                tl.push_word("sp".into(), &sp, &mut rng);
            }
        }
        sentences.push(first..tl.words.len());
    }
    let phones = PhoneSequence::new(tl.phones).expect("generated phones are ordered");
    SyntheticCorpus {
        transcript: AlignedTranscript {
            words: tl.words,
            phones,
            sentences,
        },
        lexicon,
    }
}

/// splitmix64, mapped to [-1, 1).
fn unit(key: u64) -> f64 {
    let mut z = key.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// Triangle wave with the given period in frames, in [-1, 1].
fn triangle(i: usize, period: usize) -> f64 {
    let p = (i % period) as f64 / period as f64;
    if p < 0.5 {
        4.0 * p - 1.0
    } else {
        3.0 - 4.0 * p
    }
}

/// A parameter track covering `transcript` at `fps`.
///
/// Expression follows a per-viseme target pose, moving linearly from each
/// phone's target to the next across the phone. Pose and illumination drift
/// slowly; identity blocks are constant.
pub fn track_for(transcript: &AlignedTranscript, fps: f64, seed: u64) -> ParameterTrack {
    let n = ((transcript.duration() * fps).ceil() as usize).max(1);
    let phones = transcript.phones.phones();
    let target = |l: PhoneLabel, k: usize| {
        0.5 * unit(seed ^ ((l.viseme().get() as u64) << 32) ^ k as u64)
    };
    let mut frames = Vec::with_capacity(n);
    let mut p = 0;
    for i in 0..n {
        let t = i as f64 / fps;
        while p + 1 < phones.len() && phones[p].t_out <= t {
            p += 1;
        }
        let mut v = ParameterVector([0.0; PARAM_DIM]);
        for (k, x) in v.block_mut(Block::Pose).iter_mut().enumerate() {
            *x = 0.05 * triangle(i + 37 * k, 180 + 20 * k) + 0.01 * k as f64;
        }
        for (k, x) in v.block_mut(Block::Geometry).iter_mut().enumerate() {
            *x = unit(seed.wrapping_add(1000 + k as u64));
        }
        for (k, x) in v.block_mut(Block::Reflectance).iter_mut().enumerate() {
            *x = unit(seed.wrapping_add(2000 + k as u64));
        }
        let (cur, next) = (phones[p], phones[(p + 1).min(phones.len() - 1)]);
        let w = ((t - cur.t_in) / cur.duration()).clamp(0.0, 1.0);
        for (k, x) in v.block_mut(Block::Expression).iter_mut().enumerate() {
            let a = target(cur.label, k);
            let b = target(next.label, k);
            *x = a + w * (b - a);
        }
        for (k, x) in v.block_mut(Block::Illumination).iter_mut().enumerate() {
            *x = 0.3 + 0.02 * triangle(i + 11 * k, 600);
        }
        frames.push(v);
    }
    ParameterTrack::new(fps, frames).expect("positive fps")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_well_formed() {
        let c = corpus(&CorpusConfig {
            sentences: 20,
            ..CorpusConfig::default()
        });
        let t = &c.transcript;
        assert_eq!(t.sentences.len(), 20);
        assert_eq!(t.sentences.last().unwrap().end, t.words.len());
        let back = crate::ingest::parse_alignment(&t.to_json()).unwrap();
        assert_eq!(&back, t);
        let dict = crate::ingest::parse_dictionary(&c.dictionary_text()).unwrap();
        assert!(dict.lookup("the", 0).is_some());
    }

    #[test]
    fn corpus_is_seeded() {
        let cfg = CorpusConfig {
            sentences: 5,
            ..CorpusConfig::default()
        };
        assert_eq!(corpus(&cfg).transcript, corpus(&cfg).transcript);
    }

    #[test]
    fn track_covers_transcript() {
        let c = corpus(&CorpusConfig {
            sentences: 3,
            ..CorpusConfig::default()
        });
        let tr = track_for(&c.transcript, 25.0, 9);
        assert!(tr.duration() >= c.transcript.duration());
        assert!(tr.frames.iter().all(|f| f.block(Block::Geometry) == tr.frames[0].block(Block::Geometry)));
    }
}
