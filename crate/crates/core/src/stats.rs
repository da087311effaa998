//! Corpus statistics: how often label subsequences recur, and how long
//! visemes last.
//!
//! Match probability is leave-one-out at sentence granularity: a length-`K`
//! window of one sentence matches when the same symbols occur contiguously in
//! some other sentence. Windows containing silence are skipped, both as
//! queries and as match targets.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::ingest::AlignedTranscript;
use crate::phoneme::{PhoneLabel, VisemeId};

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Phoneme,
    Viseme,
}

impl MatchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchMode::Phoneme => "phoneme",
            MatchMode::Viseme => "viseme",
        }
    }

    fn symbol(self, l: PhoneLabel) -> u8 {
        match self {
            MatchMode::Phoneme => l.index() as u8,
            MatchMode::Viseme => l.viseme().get(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    Exhaustive,
    /// Uniform draws over all windows; trial `t` uses its own ChaCha stream,
    /// so the estimate does not depend on scheduling.
    MonteCarlo { trials: u64, seed: u64 },
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::MonteCarlo {
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatchEstimate {
    pub probability: f64,
    /// Windows evaluated.
    pub trials: u64,
}

/// Symbol sequences of a corpus under one mode, split at silences.
pub struct MatchIndex {
    mode: MatchMode,
    /// (sentence, run symbols)
    runs: Vec<(usize, Vec<u8>)>,
    sentences: usize,
}

impl MatchIndex {
    pub fn new(sentences: &[Vec<PhoneLabel>], mode: MatchMode) -> Result<Self> {
        if sentences.len() < 2 {
            return Err(Error::InsufficientCorpus(sentences.len()));
        }
        let mut runs = Vec::new();
        for (s, labels) in sentences.iter().enumerate() {
            for run in labels.split(|l| l.is_silence()) {
                if !run.is_empty() {
                    runs.push((s, run.iter().map(|&l| mode.symbol(l)).collect()));
                }
            }
        }
        Ok(MatchIndex {
            mode,
            runs,
            sentences: sentences.len(),
        })
    }

    pub fn mode(&self) -> MatchMode {
        self.mode
    }

    /// Per-window match flags for length `k`, in corpus order.
    fn window_flags(&self, k: usize) -> Vec<bool> {
        // symbols -> (last sentence seen, distinct sentences)
        let mut seen: HashMap<&[u8], (usize, u32)> = HashMap::new();
        for (s, run) in &self.runs {
            if run.len() < k {
                continue;
            }
            for w in run.windows(k) {
                let e = seen.entry(w).or_insert((usize::MAX, 0));
                if e.0 != *s {
                    *e = (*s, e.1 + 1);
                }
            }
        }
        self.runs
            .iter()
            .filter(|(_, run)| run.len() >= k)
            .flat_map(|(_, run)| run.windows(k))
            .map(|w| seen[w].1 >= 2)
            .collect()
    }

    pub fn probability(&self, k: usize, sampling: Sampling, par: Parallelism) -> MatchEstimate {
        assert!(k >= 1, "window length must be positive");
        let flags = self.window_flags(k);
        let n = flags.len();
        if n == 0 {
            return MatchEstimate {
                probability: 0.0,
                trials: 0,
            };
        }
        match sampling {
            Sampling::Exhaustive => {
                let hits = flags.iter().filter(|&&f| f).count();
                MatchEstimate {
                    probability: hits as f64 / n as f64,
                    trials: n as u64,
                }
            }
            Sampling::MonteCarlo { trials, seed } => {
                let base = ChaCha8Rng::seed_from_u64(seed);
                let hits = exec::count_indexed(trials as usize, par, |t| {
                    flags[trial_rng(&base, t as u64).random_range(0..n)]
                });
                MatchEstimate {
                    probability: hits as f64 / trials as f64,
                    trials,
                }
            }
        }
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences
    }
}

fn trial_rng(base: &ChaCha8Rng, trial: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(trial);
    rng
}

/// Probability that a length-`k` window recurs in another sentence.
pub fn match_probability(
    sentences: &[Vec<PhoneLabel>],
    k: usize,
    mode: MatchMode,
    sampling: Sampling,
    par: Parallelism,
) -> Result<MatchEstimate> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    Ok(MatchIndex::new(sentences, mode)?.probability(k, sampling, par))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchProbabilityCurve {
    pub mode: MatchMode,
    /// `(K, estimate)` for each K in ascending order.
    pub points: Vec<(usize, MatchEstimate)>,
}

pub fn match_probability_curve(
    sentences: &[Vec<PhoneLabel>],
    ks: std::ops::RangeInclusive<usize>,
    mode: MatchMode,
    sampling: Sampling,
    par: Parallelism,
) -> Result<MatchProbabilityCurve> {
    if *ks.start() == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    let index = MatchIndex::new(sentences, mode)?;
    Ok(MatchProbabilityCurve {
        mode,
        points: ks
            .map(|k| (k, index.probability(k, sampling, par)))
            .collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VisemeDurations {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl VisemeDurations {
    /// Sorted, non-empty input.
    fn from_sorted(xs: &[f64]) -> Self {
        VisemeDurations {
            count: xs.len(),
            min: xs[0],
            q1: quantile(xs, 0.25),
            median: quantile(xs, 0.5),
            q3: quantile(xs, 0.75),
            max: xs[xs.len() - 1],
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(xs: &[f64], p: f64) -> f64 {
    let h = (xs.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(xs.len() - 1);
    xs[lo] + (h - lo as f64) * (xs[hi] - xs[lo])
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DurationStats {
    pub per_viseme: BTreeMap<VisemeId, VisemeDurations>,
}

impl DurationStats {
    pub fn get(&self, v: VisemeId) -> Option<&VisemeDurations> {
        self.per_viseme.get(&v)
    }

    /// Ratio of the largest to the smallest per-viseme median.
    pub fn median_spread(&self) -> f64 {
        let medians = self.per_viseme.values().map(|d| d.median);
        let hi = medians.clone().fold(f64::NEG_INFINITY, f64::max);
        let lo = medians.fold(f64::INFINITY, f64::min);
        hi / lo
    }
}

pub fn duration_stats(corpus: &AlignedTranscript) -> DurationStats {
    duration_stats_of(corpus.phones.phones().iter().map(|p| (p.label, p.duration())))
}

pub fn duration_stats_of(items: impl IntoIterator<Item = (PhoneLabel, f64)>) -> DurationStats {
    let mut by: BTreeMap<VisemeId, Vec<f64>> = BTreeMap::new();
    for (l, d) in items {
        by.entry(l.viseme()).or_default().push(d);
    }
    DurationStats {
        per_viseme: by
            .into_iter()
            .map(|(v, mut xs)| {
                xs.sort_by(f64::total_cmp);
                (v, VisemeDurations::from_sorted(&xs))
            })
            .collect(),
    }
}

/// CSV documents: match curves and duration statistics.
/// Rounds to nanoseconds so durations from differenced times print cleanly.
fn clean(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

pub fn export_curves(curves: &[MatchProbabilityCurve], stats: &DurationStats) -> (String, String) {
    let mut probs = String::from("k,probability,trials,mode\n");
    for c in curves {
        for (k, e) in &c.points {
            let _ = writeln!(probs, "{k},{},{},{}", e.probability, e.trials, c.mode.as_str());
        }
    }
    let mut durs = String::from("viseme,count,min,q1,median,q3,max\n");
    for (v, d) in &stats.per_viseme {
        let _ = writeln!(
            durs,
            "{v},{},{},{},{},{},{}",
            d.count,
            clean(d.min),
            clean(d.q1),
            clean(d.median),
            clean(d.q3),
            clean(d.max)
        );
    }
    (probs, durs)
}
