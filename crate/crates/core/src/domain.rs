//! Trial records, per-(student, KC) histories and decks.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side of a two-sided knowledge component served as the cue.
///
/// `Forward` cues with side A and expects side B; `Backward` is the inverse
/// item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::Forward, Direction::Backward];

    pub fn inverse(self) -> Direction {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Direction::Forward => 0,
            Direction::Backward => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        match s {
            "forward" => Some(Direction::Forward),
            "backward" => Some(Direction::Backward),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatKind {
    CuedRecall,
    MultipleChoice,
    MultipleChoiceWithNone,
    TrueFalse,
    SelfGraded,
}

impl FormatKind {
    pub const ALL: [FormatKind; 5] = [
        FormatKind::CuedRecall,
        FormatKind::MultipleChoice,
        FormatKind::MultipleChoiceWithNone,
        FormatKind::TrueFalse,
        FormatKind::SelfGraded,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FormatKind::CuedRecall => "cued_recall",
            FormatKind::MultipleChoice => "multiple_choice",
            FormatKind::MultipleChoiceWithNone => "multiple_choice_with_none",
            FormatKind::TrueFalse => "true_false",
            FormatKind::SelfGraded => "self_graded",
        }
    }

    pub fn parse(s: &str) -> Option<FormatKind> {
        FormatKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Formats answered by choosing among options carry a guess probability.
    pub fn has_options(self) -> bool {
        matches!(
            self,
            FormatKind::MultipleChoice | FormatKind::MultipleChoiceWithNone | FormatKind::TrueFalse
        )
    }
}

/// A question format together with its option count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "FormatWire", into = "FormatWire")]
pub struct QuestionFormat {
    kind: FormatKind,
    options_count: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct FormatWire {
    name: FormatKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    options_count: Option<u32>,
}

impl TryFrom<FormatWire> for QuestionFormat {
    type Error = Error;

    fn try_from(w: FormatWire) -> Result<Self> {
        QuestionFormat::new(w.name, w.options_count)
    }
}

impl From<QuestionFormat> for FormatWire {
    fn from(f: QuestionFormat) -> Self {
        FormatWire { name: f.kind, options_count: f.options_count }
    }
}

impl QuestionFormat {
    /// Option-based formats need at least two options; cued recall and
    /// self-graded formats ignore any option count.
    pub fn new(kind: FormatKind, options_count: Option<u32>) -> Result<Self> {
        if kind.has_options() {
            match options_count {
                Some(n) if n >= 2 => Ok(Self { kind, options_count: Some(n) }),
                Some(n) => Err(Error::InvalidRecord(format!(
                    "format {} needs options_count >= 2, got {n}",
                    kind.as_str()
                ))),
                None => Err(Error::InvalidRecord(format!(
                    "format {} requires options_count",
                    kind.as_str()
                ))),
            }
        } else {
            Ok(Self { kind, options_count: None })
        }
    }

    pub const fn cued_recall() -> Self {
        Self { kind: FormatKind::CuedRecall, options_count: None }
    }

    pub const fn self_graded() -> Self {
        Self { kind: FormatKind::SelfGraded, options_count: None }
    }

    pub fn multiple_choice(options: u32) -> Result<Self> {
        Self::new(FormatKind::MultipleChoice, Some(options))
    }

    pub fn multiple_choice_with_none(options: u32) -> Result<Self> {
        Self::new(FormatKind::MultipleChoiceWithNone, Some(options))
    }

    pub const fn true_false() -> Self {
        Self { kind: FormatKind::TrueFalse, options_count: Some(2) }
    }

    pub fn kind(&self) -> FormatKind {
        self.kind
    }

    pub fn options_count(&self) -> Option<u32> {
        self.options_count
    }

    /// Chance of answering correctly without knowing the answer: zero for cued
    /// recall and self-graded cards, `1 / options` otherwise.
    pub fn guess_probability(&self) -> f64 {
        match self.options_count {
            Some(n) if self.kind.has_options() => 1.0 / f64::from(n),
            _ => 0.0,
        }
    }
}

/// One answer event. Serializes to the flat JSONL trial-log schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrialWire", into = "TrialWire")]
pub struct TrialRecord {
    pub student_id: String,
    pub kc_id: String,
    pub direction: Direction,
    pub format: QuestionFormat,
    pub timestamp_s: i64,
    pub correct: bool,
}

#[derive(Serialize, Deserialize)]
struct TrialWire {
    student_id: String,
    kc_id: String,
    direction: Direction,
    format: FormatKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    options_count: Option<u32>,
    timestamp_s: i64,
    correct: bool,
}

impl TryFrom<TrialWire> for TrialRecord {
    type Error = Error;

    fn try_from(w: TrialWire) -> Result<Self> {
        let format = QuestionFormat::new(w.format, w.options_count)?;
        TrialRecord::new(w.student_id, w.kc_id, w.direction, format, w.timestamp_s, w.correct)
    }
}

impl From<TrialRecord> for TrialWire {
    fn from(t: TrialRecord) -> Self {
        TrialWire {
            student_id: t.student_id,
            kc_id: t.kc_id,
            direction: t.direction,
            format: t.format.kind,
            options_count: t.format.options_count,
            timestamp_s: t.timestamp_s,
            correct: t.correct,
        }
    }
}

impl TrialRecord {
    pub fn new(
        student_id: impl Into<String>,
        kc_id: impl Into<String>,
        direction: Direction,
        format: QuestionFormat,
        timestamp_s: i64,
        correct: bool,
    ) -> Result<Self> {
        let student_id = student_id.into();
        let kc_id = kc_id.into();
        if student_id.is_empty() {
            return Err(Error::InvalidRecord("empty student_id".into()));
        }
        if kc_id.is_empty() {
            return Err(Error::InvalidRecord("empty kc_id".into()));
        }
        if timestamp_s <= 0 {
            return Err(Error::InvalidRecord(format!("timestamp_s must be positive, got {timestamp_s}")));
        }
        Ok(Self { student_id, kc_id, direction, format, timestamp_s, correct })
    }
}

/// Time-ordered trials of one student on one knowledge component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KcHistory {
    pub student_id: String,
    pub kc_id: String,
    trials: Vec<TrialRecord>,
}

impl KcHistory {
    pub fn empty(student_id: impl Into<String>, kc_id: impl Into<String>) -> Self {
        Self { student_id: student_id.into(), kc_id: kc_id.into(), trials: Vec::new() }
    }

    /// Validates an already-ordered sequence of trials.
    pub fn from_trials(trials: Vec<TrialRecord>) -> Result<Self> {
        let first = trials
            .first()
            .ok_or_else(|| Error::Precondition("history needs at least one trial".into()))?;
        let mut h = Self::empty(first.student_id.clone(), first.kc_id.clone());
        for t in trials {
            h.push(t)?;
        }
        Ok(h)
    }

    /// Appends a trial, rejecting foreign ids and out-of-order timestamps.
    pub fn push(&mut self, trial: TrialRecord) -> Result<()> {
        if trial.student_id != self.student_id || trial.kc_id != self.kc_id {
            return Err(Error::Precondition(format!(
                "trial for ({}, {}) pushed onto history ({}, {})",
                trial.student_id, trial.kc_id, self.student_id, self.kc_id
            )));
        }
        if let Some(last) = self.trials.last() {
            if trial.timestamp_s < last.timestamp_s {
                return Err(Error::Precondition(format!(
                    "trial at {} precedes last trial at {}",
                    trial.timestamp_s, last.timestamp_s
                )));
            }
        }
        self.trials.push(trial);
        Ok(())
    }

    pub fn trials(&self) -> &[TrialRecord] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }
}

/// Partitions records into per-(student, kc) histories, each sorted by
/// timestamp with ties kept in input order.
pub fn group_histories<I>(records: I) -> BTreeMap<(String, String), KcHistory>
where
    I: IntoIterator<Item = TrialRecord>,
{
    let mut buckets: BTreeMap<(String, String), Vec<TrialRecord>> = BTreeMap::new();
    for r in records {
        buckets.entry((r.student_id.clone(), r.kc_id.clone())).or_default().push(r);
    }
    buckets
        .into_iter()
        .map(|(key, mut trials)| {
            // stable
            trials.sort_by_key(|t| t.timestamp_s);
            let history = KcHistory { student_id: key.0.clone(), kc_id: key.1.clone(), trials };
            (key, history)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeckItem {
    pub kc_id: String,
    pub side_a: String,
    pub side_b: String,
}

impl DeckItem {
    pub fn cue(&self, direction: Direction) -> &str {
        match direction {
            Direction::Forward => &self.side_a,
            Direction::Backward => &self.side_b,
        }
    }

    pub fn answer(&self, direction: Direction) -> &str {
        match direction {
            Direction::Forward => &self.side_b,
            Direction::Backward => &self.side_a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deck {
    pub deck_id: String,
    pub items: Vec<DeckItem>,
}

impl Deck {
    pub fn validate(&self) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::InvalidDeck("deck has no items".into()));
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for item in &self.items {
            if item.kc_id.is_empty() {
                return Err(Error::InvalidDeck("empty kc_id".into()));
            }
            if !seen.insert(item.kc_id.as_str()) {
                return Err(Error::InvalidDeck(format!("duplicate kc_id {}", item.kc_id)));
            }
            if item.side_a.trim().is_empty() || item.side_b.trim().is_empty() {
                return Err(Error::InvalidDeck(format!("item {} has an empty side", item.kc_id)));
            }
        }
        Ok(())
    }

    pub fn item(&self, kc_id: &str) -> Option<&DeckItem> {
        self.items.iter().find(|i| i.kc_id == kc_id)
    }
}
