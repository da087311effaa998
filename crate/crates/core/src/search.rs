//! Viseme search.
//!
//! A query phone sequence is split into contiguous segments. Each segment is
//! matched against the best contiguous stretch of the corpus under a
//! Levenshtein-style cost (unit insert/delete, duration-aware swap), and the
//! split minimizing `sum(match cost + phi / segment length)` wins.
//!
//! Matching a segment is a free-start, free-end alignment: the DP may enter
//! the corpus at any column for free and leave at the best column. Running one
//! DP per query start position yields the match cost of every segment that
//! begins there, so all `m (m + 1) / 2` segment costs come out of `m` passes
//! over the corpus. Those passes are independent and run in parallel.

use std::fmt::Write as _;
use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::phoneme::{swap_cost_raw, CostParams, PhoneLabel, PhoneSequence};

pub const DEFAULT_MAX_QUERY_LEN: usize = 64;

/// One step of an alignment. `None` on either side is a gap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AlignedPair {
    pub query: Option<usize>,
    pub corpus: Option<usize>,
}

impl AlignedPair {
    pub fn is_swap(&self) -> bool {
        self.query.is_some() && self.corpus.is_some()
    }
}

/// Best corpus match for one query segment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsequenceMatch {
    pub query_range: Range<usize>,
    /// May be empty when every query phone of the segment is an insertion.
    pub corpus_range: Range<usize>,
    pub alignment: Vec<AlignedPair>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentCost {
    pub query_start: usize,
    pub query_end: usize,
    pub cost: f64,
    pub corpus_start: usize,
    pub corpus_end: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub split: Vec<SubsequenceMatch>,
    pub total_cost: f64,
    /// Match cost of every query segment, ordered by (start, end).
    #[serde(skip)]
    pub table: Vec<SegmentCost>,
}

impl SearchResult {
    /// The segment cost table as CSV.
    pub fn table_csv(&self) -> String {
        let mut out = String::from("query_start,query_end,cost,corpus_start,corpus_end\n");
        for s in &self.table {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.query_start, s.query_end, s.cost, s.corpus_start, s.corpus_end
            );
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub max_query_len: usize,
    /// Corpus phone ranges that matches may not touch.
    pub exclude: Vec<Range<usize>>,
    pub parallelism: Parallelism,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_query_len: DEFAULT_MAX_QUERY_LEN,
            exclude: Vec::new(),
            parallelism: Parallelism::default(),
        }
    }
}

/// Number of ways to cut a sequence of `m` items into contiguous non-empty parts.
///
/// # Panics
///
/// If `m` is zero or above 128.
pub fn enumerate_splits(m: usize) -> u128 {
    assert!((1..=128).contains(&m), "split count undefined for m = {m}");
    1u128 << (m - 1)
}

/// Flat view of the phones used by the DP.
struct Seq {
    labels: Vec<PhoneLabel>,
    durs: Vec<f64>,
}

impl Seq {
    fn new(seq: &PhoneSequence) -> Self {
        Seq {
            labels: seq.labels().collect(),
            durs: seq.phones().iter().map(|p| p.duration()).collect(),
        }
    }

    fn len(&self) -> usize {
        self.labels.len()
    }
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    cost: f64,
    start: usize,
}

impl Cell {
    #[inline]
    fn better_than(&self, other: &Cell) -> bool {
        self.cost < other.cost || (self.cost == other.cost && self.start < other.start)
    }
}

#[derive(Clone, Copy, Debug)]
struct Best {
    cost: f64,
    start: usize,
    end: usize,
}

impl Best {
    const NONE: Best = Best {
        cost: f64::INFINITY,
        start: usize::MAX,
        end: usize::MAX,
    };

    #[inline]
    fn offer(&mut self, cell: Cell, end: usize) {
        let better = cell.cost < self.cost
            || (cell.cost == self.cost
                && (cell.start < self.start || (cell.start == self.start && end < self.end)));
        if better {
            *self = Best {
                cost: cell.cost,
                start: cell.start,
                end,
            };
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Move {
    Origin,
    Diag,
    Up,
    Left,
}

/// Complement of `exclude` within `0..n`, as ascending non-empty ranges.
fn allowed_runs(n: usize, exclude: &[Range<usize>]) -> Vec<Range<usize>> {
    let mut blocked = vec![false; n];
    for r in exclude {
        for b in &mut blocked[r.start.min(n)..r.end.min(n)] {
            *b = true;
        }
    }
    let mut runs = Vec::new();
    let mut i = 0;
    while i < n {
        if blocked[i] {
            i += 1;
            continue;
        }
        let s = i;
        while i < n && !blocked[i] {
            i += 1;
        }
        runs.push(s..i);
    }
    runs
}

/// Rolling-column DP of `query` against one corpus run. `best[r]` receives the
/// best match of the first `r + 1` query phones.
fn scan_run(
    q_labels: &[PhoneLabel],
    q_durs: &[f64],
    corpus: &Seq,
    run: Range<usize>,
    params: &CostParams,
    best: &mut [Best],
) {
    let rows = q_labels.len();
    let mut prev = Vec::with_capacity(rows + 1);
    prev.push(Cell {
        cost: 0.0,
        start: run.start,
    });
    for i in 1..=rows {
        let c = Cell {
            cost: prev[i - 1].cost + params.c_insert,
            start: run.start,
        };
        prev.push(c);
        best[i - 1].offer(c, run.start);
    }
    let mut cur = prev.clone();
    for j in run.start + 1..=run.end {
        let pl = corpus.labels[j - 1];
        let pd = corpus.durs[j - 1];
        cur[0] = Cell {
            cost: 0.0,
            start: j,
        };
        for i in 1..=rows {
            let mut cell = Cell {
                cost: prev[i - 1].cost
                    + swap_cost_raw(pl, pd, q_labels[i - 1], q_durs[i - 1], params),
                start: prev[i - 1].start,
            };
            let up = Cell {
                cost: cur[i - 1].cost + params.c_insert,
                start: cur[i - 1].start,
            };
            if up.better_than(&cell) {
                cell = up;
            }
            let left = Cell {
                cost: prev[i].cost + params.c_delete,
                start: prev[i].start,
            };
            if left.better_than(&cell) {
                cell = left;
            }
            cur[i] = cell;
            best[i - 1].offer(cell, j);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
}

/// Full-matrix DP over corpus columns `from..=to` with traceback, for a match
/// already known to end at column `to`.
fn trace(
    q_labels: &[PhoneLabel],
    q_durs: &[f64],
    q_offset: usize,
    corpus: &Seq,
    from: usize,
    to: usize,
    params: &CostParams,
) -> (Vec<AlignedPair>, Cell) {
    let rows = q_labels.len();
    let cols = to - from + 1;
    let mut cells = vec![
        Cell {
            cost: 0.0,
            start: 0
        };
        (rows + 1) * cols
    ];
    let mut moves = vec![Move::Origin; (rows + 1) * cols];
    let at = |i: usize, c: usize| i * cols + c;
    for c in 0..cols {
        cells[at(0, c)] = Cell {
            cost: 0.0,
            start: from + c,
        };
    }
    for i in 1..=rows {
        cells[at(i, 0)] = Cell {
            cost: cells[at(i - 1, 0)].cost + params.c_insert,
            start: from,
        };
        moves[at(i, 0)] = Move::Up;
    }
    for c in 1..cols {
        let j = from + c;
        let pl = corpus.labels[j - 1];
        let pd = corpus.durs[j - 1];
        for i in 1..=rows {
            let d = cells[at(i - 1, c - 1)];
            let mut cell = Cell {
                cost: d.cost + swap_cost_raw(pl, pd, q_labels[i - 1], q_durs[i - 1], params),
                start: d.start,
            };
            let mut mv = Move::Diag;
            let u = cells[at(i - 1, c)];
            let up = Cell {
                cost: u.cost + params.c_insert,
                start: u.start,
            };
            if up.better_than(&cell) {
                cell = up;
                mv = Move::Up;
            }
            let l = cells[at(i, c - 1)];
            let left = Cell {
                cost: l.cost + params.c_delete,
                start: l.start,
            };
            if left.better_than(&cell) {
                cell = left;
                mv = Move::Left;
            }
            cells[at(i, c)] = cell;
            moves[at(i, c)] = mv;
        }
    }
    let end_cell = cells[at(rows, cols - 1)];
    let mut path = Vec::new();
    let (mut i, mut c) = (rows, cols - 1);
    while i > 0 || moves[at(i, c)] != Move::Origin {
        match moves[at(i, c)] {
            Move::Diag => {
                path.push(AlignedPair {
                    query: Some(q_offset + i - 1),
                    corpus: Some(from + c - 1),
                });
                i -= 1;
                c -= 1;
            }
            Move::Up => {
                path.push(AlignedPair {
                    query: Some(q_offset + i - 1),
                    corpus: None,
                });
                i -= 1;
            }
            Move::Left => {
                path.push(AlignedPair {
                    query: None,
                    corpus: Some(from + c - 1),
                });
                c -= 1;
            }
            Move::Origin => break,
        }
    }
    path.reverse();
    (path, end_cell)
}

fn runs_for(n: usize, exclude: &[Range<usize>]) -> Result<Vec<Range<usize>>> {
    let runs = allowed_runs(n, exclude);
    if runs.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(runs)
}

/// Best matches for every segment starting at `a`: entry `r` is segment `a..a + r + 1`.
fn scan_from(
    query: &Seq,
    a: usize,
    corpus: &Seq,
    runs: &[Range<usize>],
    params: &CostParams,
) -> Vec<Best> {
    let mut best = vec![Best::NONE; query.len() - a];
    for run in runs {
        scan_run(
            &query.labels[a..],
            &query.durs[a..],
            corpus,
            run.clone(),
            params,
            &mut best,
        );
    }
    best
}

fn materialize(
    query: &Seq,
    range: Range<usize>,
    corpus: &Seq,
    best: Best,
    params: &CostParams,
) -> SubsequenceMatch {
    let (alignment, cell) = trace(
        &query.labels[range.clone()],
        &query.durs[range.clone()],
        range.start,
        corpus,
        best.start,
        best.end,
        params,
    );
    debug_assert_eq!(cell.cost.to_bits(), best.cost.to_bits());
    debug_assert_eq!(cell.start, best.start);
    SubsequenceMatch {
        query_range: range,
        corpus_range: best.start..best.end,
        alignment,
        cost: best.cost,
    }
}

/// Best match of the whole `query` against any contiguous stretch of `corpus`.
///
/// Ties go to the earlier corpus start, then the shorter span.
pub fn match_subsequence(
    query: &PhoneSequence,
    corpus: &PhoneSequence,
    params: &CostParams,
) -> Result<SubsequenceMatch> {
    match_subsequence_excluding(query, corpus, params, &[])
}

pub fn match_subsequence_excluding(
    query: &PhoneSequence,
    corpus: &PhoneSequence,
    params: &CostParams,
    exclude: &[Range<usize>],
) -> Result<SubsequenceMatch> {
    if query.is_empty() || corpus.is_empty() {
        return Err(Error::EmptyInput);
    }
    params.validate()?;
    let q = Seq::new(query);
    let p = Seq::new(corpus);
    let runs = runs_for(p.len(), exclude)?;
    let best = *scan_from(&q, 0, &p, &runs, params)
        .last()
        .expect("query is non-empty");
    Ok(materialize(&q, 0..q.len(), &p, best, params))
}

/// Split the query and match each part so the summed cost is minimal.
pub fn search(
    query: &PhoneSequence,
    corpus: &PhoneSequence,
    params: &CostParams,
) -> Result<SearchResult> {
    search_with(query, corpus, params, &SearchOptions::default())
}

#[derive(Clone)]
struct Prefix {
    cost: f64,
    cuts: Vec<usize>,
    starts: Vec<usize>,
}

impl Prefix {
    /// Lower cost, then fewer segments, then earlier corpus starts.
    fn better_than(&self, other: &Prefix) -> bool {
        if self.cost != other.cost {
            return self.cost < other.cost;
        }
        if self.cuts.len() != other.cuts.len() {
            return self.cuts.len() < other.cuts.len();
        }
        self.starts < other.starts
    }
}

pub fn search_with(
    query: &PhoneSequence,
    corpus: &PhoneSequence,
    params: &CostParams,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    if query.is_empty() || corpus.is_empty() {
        return Err(Error::EmptyInput);
    }
    if query.len() > opts.max_query_len {
        return Err(Error::QueryTooLong {
            len: query.len(),
            max: opts.max_query_len,
        });
    }
    params.validate()?;
    let q = Seq::new(query);
    let p = Seq::new(corpus);
    let runs = runs_for(p.len(), &opts.exclude)?;
    let m = q.len();

    // segments[a][r] is the best match of query[a..a + r + 1].
    let segments: Vec<Vec<Best>> = exec::map_indexed(m, opts.parallelism, |a| {
        scan_from(&q, a, &p, &runs, params)
    });

    let mut prefix: Vec<Option<Prefix>> = vec![None; m + 1];
    prefix[0] = Some(Prefix {
        cost: 0.0,
        cuts: Vec::new(),
        starts: Vec::new(),
    });
    for k in 1..=m {
        let mut best: Option<Prefix> = None;
        for a in 0..k {
            let head = prefix[a].as_ref().expect("prefix filled in order");
            let seg = segments[a][k - a - 1];
            let len = (k - a) as f64;
            let mut cuts = head.cuts.clone();
            cuts.push(a);
            let mut starts = head.starts.clone();
            starts.push(seg.start);
            let cand = Prefix {
                cost: head.cost + (seg.cost + params.phi / len),
                cuts,
                starts,
            };
            if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                best = Some(cand);
            }
        }
        prefix[k] = best;
    }
    let winner = prefix[m].take().expect("m >= 1");

    let mut bounds = winner.cuts.clone();
    bounds.push(m);
    let split = bounds
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            materialize(&q, a..b, &p, segments[a][b - a - 1], params)
        })
        .collect();

    let table = segments
        .iter()
        .enumerate()
        .flat_map(|(a, row)| {
            row.iter().enumerate().map(move |(r, b)| SegmentCost {
                query_start: a,
                query_end: a + r + 1,
                cost: b.cost,
                corpus_start: b.start,
                corpus_end: b.end,
            })
        })
        .collect();

    Ok(SearchResult {
        split,
        total_cost: winner.cost,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phoneme::PhoneLabel;

    fn seq(items: &[(&str, f64)]) -> PhoneSequence {
        PhoneSequence::contiguous(
            items
                .iter()
                .map(|(l, d)| (PhoneLabel::parse(l).unwrap(), *d)),
        )
        .unwrap()
    }

    #[test]
    fn split_counts() {
        assert_eq!(enumerate_splits(1), 1);
        assert_eq!(enumerate_splits(4), 8);
        assert_eq!(enumerate_splits(10), 512);
    }

    #[test]
    fn verbatim_match_costs_nothing() {
        let corpus = seq(&[("M", 0.1), ("F", 0.07), ("R", 0.05), ("EH1", 0.12), ("S", 0.1)]);
        let query = PhoneSequence::new(corpus.phones()[1..4].to_vec()).unwrap();
        let m = match_subsequence(&query, &corpus, &CostParams::default()).unwrap();
        assert_eq!(m.cost, 0.0);
        assert_eq!(m.corpus_range, 1..4);
        assert!(m.alignment.iter().all(AlignedPair::is_swap));
    }

    #[test]
    fn single_phone_prefers_same_viseme() {
        let corpus = seq(&[("M", 0.1), ("AA2", 0.1), ("S", 0.1)]);
        let query = seq(&[("AA1", 0.1)]);
        let m = match_subsequence(&query, &corpus, &CostParams::default()).unwrap();
        assert_eq!(m.corpus_range, 1..2);
        assert!((m.cost - 0.1).abs() < 1e-15);
    }

    #[test]
    fn two_phones_against_one() {
        // AA1 vs M (different viseme) swap = 0.1 + 0.1, plus one insertion.
        let corpus = seq(&[("M", 0.1)]);
        let query = seq(&[("AA1", 0.1), ("AA1", 0.1)]);
        let m = match_subsequence(&query, &corpus, &CostParams::default()).unwrap();
        assert!((m.cost - 1.2).abs() < 1e-12, "{}", m.cost);
        assert_eq!(m.alignment.len(), 2);
        assert_eq!(m.alignment.iter().filter(|p| p.is_swap()).count(), 1);
    }

    #[test]
    fn exact_query_is_one_segment() {
        let corpus = seq(&[("S", 0.1), ("F", 0.08), ("R", 0.06), ("EH1", 0.11), ("T", 0.05)]);
        let query = seq(&[("F", 0.08), ("R", 0.06), ("EH1", 0.11)]);
        let r = search(&query, &corpus, &CostParams::default()).unwrap();
        assert_eq!(r.split.len(), 1);
        assert_eq!(r.split[0].corpus_range, 1..4);
        assert!((r.total_cost - 0.001 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exclusion_blocks_matches() {
        let corpus = seq(&[("F", 0.1), ("AA1", 0.1), ("F", 0.1)]);
        let query = seq(&[("F", 0.1)]);
        let opts = SearchOptions {
            exclude: std::iter::once(0..2).collect(),
            ..SearchOptions::default()
        };
        let r = search_with(&query, &corpus, &CostParams::default(), &opts).unwrap();
        assert_eq!(r.split[0].corpus_range, 2..3);
        let all = SearchOptions {
            exclude: std::iter::once(0..3).collect(),
            ..SearchOptions::default()
        };
        assert!(matches!(
            search_with(&query, &corpus, &CostParams::default(), &all),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn query_limit() {
        let corpus = seq(&[("F", 0.1)]);
        let query = seq(&[("F", 0.1), ("F", 0.1), ("F", 0.1)]);
        let opts = SearchOptions {
            max_query_len: 2,
            ..SearchOptions::default()
        };
        assert!(matches!(
            search_with(&query, &corpus, &CostParams::default(), &opts),
            Err(Error::QueryTooLong { len: 3, max: 2 })
        ));
    }

    #[test]
    fn table_covers_all_segments() {
        let corpus = seq(&[("F", 0.1), ("AA1", 0.1), ("K", 0.1), ("S", 0.1)]);
        let query = seq(&[("F", 0.1), ("AA1", 0.1), ("S", 0.1)]);
        let r = search(&query, &corpus, &CostParams::default()).unwrap();
        assert_eq!(r.table.len(), 6);
        assert!(r.table_csv().starts_with("query_start,query_end,cost"));
    }

    #[test]
    fn empty_inputs() {
        let corpus = seq(&[("F", 0.1)]);
        let empty = PhoneSequence::default();
        assert!(matches!(
            match_subsequence(&empty, &corpus, &CostParams::default()),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            search(&corpus, &empty, &CostParams::default()),
            Err(Error::EmptyInput)
        ));
    }
}
