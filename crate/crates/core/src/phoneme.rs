//! Phoneme and viseme domain types and the elementary matching costs.
//!
//! Labels are ARPABET codes. Vowels carry a stress digit (`AA0`, `AA1`, `AA2`)
//! and every stress variant is its own code. The 17 viseme groups partition
//! those codes plus the silence marker `sp`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Viseme groups, one slice of ARPABET codes per group, in group order.
const GROUPS: [&[&str]; 17] = [
    &["AA0", "AA1", "AA2"],
    &["AH0", "AH1", "AH2", "HH"],
    &["AO0", "AO1", "AO2"],
    &["AW0", "AW1", "AW2", "OW0", "OW1", "OW2"],
    &["OY0", "OY1", "OY2", "UH0", "UH1", "UH2", "UW0", "UW1", "UW2"],
    &["EH0", "EH1", "EH2", "AE0", "AE1", "AE2"],
    &["IH0", "IH1", "IH2", "AY0", "AY1", "AY2"],
    &["EY0", "EY1", "EY2"],
    &["Y", "IY0", "IY1", "IY2"],
    &["R", "ER0", "ER1", "ER2"],
    &["L"],
    &["W"],
    &["M", "P", "B"],
    &["N", "NG", "DH", "D", "G", "T", "Z", "ZH", "TH", "K", "S"],
    &["CH", "JH", "SH"],
    &["F", "V"],
    &["sp"],
];

/// Number of distinct label codes (69 ARPABET codes plus `sp`).
pub const LABEL_COUNT: usize = 70;

pub const VISEME_COUNT: usize = 17;

struct Entry {
    code: &'static str,
    viseme: u8,
    base: &'static str,
}

const fn build_table() -> [Entry; LABEL_COUNT] {
    let mut table = [const {
        Entry {
            code: "",
            viseme: 0,
            base: "",
        }
    }; LABEL_COUNT];
    let mut idx = 0;
    let mut g = 0;
    while g < GROUPS.len() {
        let group = GROUPS[g];
        let mut k = 0;
        while k < group.len() {
            let code = group[k];
            let bytes = code.as_bytes();
            let last = bytes[bytes.len() - 1];
            let base = if last.is_ascii_digit() {
                let (head, _) = code.split_at(bytes.len() - 1);
                head
            } else {
                code
            };
            table[idx] = Entry {
                code,
                viseme: (g + 1) as u8,
                base,
            };
            idx += 1;
            k += 1;
        }
        g += 1;
    }
    assert!(idx == LABEL_COUNT);
    table
}

static TABLE: [Entry; LABEL_COUNT] = build_table();

/// An ARPABET phoneme code, stored as an index into the viseme table.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhoneLabel(u8);

impl PhoneLabel {
    pub const SILENCE: PhoneLabel = PhoneLabel((LABEL_COUNT - 1) as u8);

    /// Parses a code case-insensitively. `sp` is the only lower-case canonical form.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        TABLE
            .iter()
            .position(|e| e.code.eq_ignore_ascii_case(text))
            .map(|i| PhoneLabel(i as u8))
            .ok_or_else(|| Error::UnknownPhoneme(text.to_string()))
    }

    pub fn all() -> impl Iterator<Item = PhoneLabel> {
        (0..LABEL_COUNT as u8).map(PhoneLabel)
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < LABEL_COUNT).then_some(PhoneLabel(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn as_str(self) -> &'static str {
        TABLE[self.index()].code
    }

    /// The code without its stress digit (`AA1` -> `AA`).
    pub fn base(self) -> &'static str {
        TABLE[self.index()].base
    }

    pub fn viseme(self) -> VisemeId {
        VisemeId(TABLE[self.index()].viseme)
    }

    pub fn is_silence(self) -> bool {
        self == Self::SILENCE
    }
}

impl fmt::Debug for PhoneLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for PhoneLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhoneLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PhoneLabel::parse(s)
    }
}

impl Serialize for PhoneLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PhoneLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PhoneLabel::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// One of the viseme groups `v01`..`v17`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VisemeId(u8);

impl VisemeId {
    pub fn new(id: u8) -> Option<Self> {
        (1..=VISEME_COUNT as u8).contains(&id).then_some(VisemeId(id))
    }

    pub fn all() -> impl Iterator<Item = VisemeId> {
        (1..=VISEME_COUNT as u8).map(VisemeId)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Members of this group, in table order.
    pub fn members(self) -> impl Iterator<Item = PhoneLabel> {
        PhoneLabel::all().filter(move |l| l.viseme() == self)
    }
}

impl Serialize for VisemeId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for VisemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{:02}", self.0)
    }
}

/// Viseme group of a code given as text.
pub fn viseme_of(label: &str) -> Result<VisemeId> {
    PhoneLabel::parse(label).map(PhoneLabel::viseme)
}

/// How two labels are judged "the same phoneme".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelEquality {
    /// Codes must match including the stress digit.
    #[default]
    Exact,
    /// `AA1` and `AA2` count as the same phoneme.
    IgnoreStress,
}

/// Label distance: 0 for the same phoneme, 0.5 for the same viseme, 1 otherwise.
pub fn viseme_distance(a: PhoneLabel, b: PhoneLabel, equality: LabelEquality) -> f64 {
    let same = match equality {
        LabelEquality::Exact => a == b,
        LabelEquality::IgnoreStress => a.base() == b.base(),
    };
    if same {
        0.0
    } else if a.viseme() == b.viseme() {
        0.5
    } else {
        1.0
    }
}

/// One aligned phone occurrence. Times are seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phone {
    #[serde(rename = "lbl")]
    pub label: PhoneLabel,
    pub t_in: f64,
    pub t_out: f64,
}

impl Phone {
    pub fn new(label: PhoneLabel, t_in: f64, t_out: f64) -> Result<Self> {
        if !(t_in.is_finite() && t_out.is_finite()) {
            return Err(Error::InvalidPhone {
                index: 0,
                reason: "non-finite time".into(),
            });
        }
        if t_out <= t_in {
            return Err(Error::InvalidPhone {
                index: 0,
                reason: format!("non-positive duration [{t_in}, {t_out}]"),
            });
        }
        Ok(Phone { label, t_in, t_out })
    }

    pub fn duration(&self) -> f64 {
        self.t_out - self.t_in
    }
}

/// Ordered, non-overlapping phones.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PhoneSequence {
    phones: Vec<Phone>,
}

impl PhoneSequence {
    pub fn new(phones: Vec<Phone>) -> Result<Self> {
        for (i, p) in phones.iter().enumerate() {
            Phone::new(p.label, p.t_in, p.t_out).map_err(|e| match e {
                Error::InvalidPhone { reason, .. } => Error::InvalidPhone { index: i, reason },
                other => other,
            })?;
        }
        for (i, w) in phones.windows(2).enumerate() {
            if w[0].t_out > w[1].t_in {
                return Err(Error::Overlap {
                    prev: i,
                    index: i + 1,
                });
            }
        }
        Ok(PhoneSequence { phones })
    }

    /// Lays phones out back to back from time zero.
    pub fn contiguous(items: impl IntoIterator<Item = (PhoneLabel, f64)>) -> Result<Self> {
        let mut t = 0.0;
        let mut phones = Vec::new();
        for (label, dur) in items {
            let t_out = t + dur;
            phones.push(Phone {
                label,
                t_in: t,
                t_out,
            });
            t = t_out;
        }
        PhoneSequence::new(phones)
    }

    pub fn phones(&self) -> &[Phone] {
        &self.phones
    }

    pub fn len(&self) -> usize {
        self.phones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phones.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = PhoneLabel> + '_ {
        self.phones.iter().map(|p| p.label)
    }

    /// Sum of phone durations (gaps excluded).
    pub fn total_duration(&self) -> f64 {
        self.phones.iter().map(Phone::duration).sum()
    }

    pub fn into_inner(self) -> Vec<Phone> {
        self.phones
    }
}

impl std::ops::Index<usize> for PhoneSequence {
    type Output = Phone;

    fn index(&self, i: usize) -> &Phone {
        &self.phones[i]
    }
}

/// Weights of the matching cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub c_insert: f64,
    pub c_delete: f64,
    /// Weight of the absolute length difference in the swap cost.
    pub chi: f64,
    /// Short-segment penalty weight; a segment of n phones costs `phi / n`.
    pub phi: f64,
    #[serde(default)]
    pub equality: LabelEquality,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            c_insert: 1.0,
            c_delete: 1.0,
            chi: 1e-4,
            phi: 0.001,
            equality: LabelEquality::Exact,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_insert", self.c_insert),
            ("c_delete", self.c_delete),
            ("chi", self.chi),
            ("phi", self.phi),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Swap cost from labels and durations.
#[inline]
pub fn swap_cost_raw(
    a: PhoneLabel,
    a_len: f64,
    b: PhoneLabel,
    b_len: f64,
    params: &CostParams,
) -> f64 {
    viseme_distance(a, b, params.equality) * (a_len + b_len) + params.chi * (a_len - b_len).abs()
}

/// Cost of substituting `q` for `p`: label distance weighted by the summed
/// lengths, plus `chi` times the length difference.
pub fn swap_cost(p: &Phone, q: &Phone, params: &CostParams) -> f64 {
    swap_cost_raw(p.label, p.duration(), q.label, q.duration(), params)
}
