//! Greedy study sessions: always ask the item with the lowest predicted
//! recall, update its knowledge state from the answer, and stop once every
//! item reaches the mastery threshold.
//!
//! The session never reads a clock. Every operation takes `now` explicitly.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Deck, Direction, FormatKind, QuestionFormat, TrialRecord};
use crate::error::{Error, Result};
use crate::mlr::MlrModel;
use crate::replay::{CausalModel, Prediction, Query};
use crate::rpl::{RplModel, RplState};

pub const DEFAULT_MASTERY_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "model")]
pub enum SessionModel {
    Mlr(MlrModel),
    Rpl(RplModel),
}

impl SessionModel {
    fn predict(&self, item: &ItemEntry, query: &Query) -> Result<Prediction> {
        match self {
            SessionModel::Mlr(m) => m.predict(&item.history, query),
            SessionModel::Rpl(m) => m.predict(&item.rpl, query),
        }
    }

    fn observe(&self, item: &mut ItemEntry, trial: &TrialRecord) -> Result<()> {
        if let SessionModel::Rpl(m) = self {
            m.observe(&mut item.rpl, trial)?;
        }
        item.history.push(trial.clone());
        item.last_studied = Some(trial.timestamp_s);
        Ok(())
    }
}

impl serde::Serialize for MlrModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        self.params.serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for MlrModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let params = crate::mlr::MlrParams::deserialize(d)?;
        MlrModel::new(params).map_err(serde::de::Error::custom)
    }
}

/// Which directions of each card are studied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionPolicy {
    Forward,
    Backward,
    Both,
}

impl DirectionPolicy {
    pub fn directions(self) -> &'static [Direction] {
        match self {
            DirectionPolicy::Forward => &[Direction::Forward],
            DirectionPolicy::Backward => &[Direction::Backward],
            DirectionPolicy::Both => &Direction::ALL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FormatPolicy {
    /// Recognition formats while an item is weak, cued recall once predicted
    /// recall reaches `cued_recall_from`. Weak items get multiple choice with
    /// up to `choice_options` options, or a self-graded card when the deck is
    /// too small to supply distractors.
    Adaptive { cued_recall_from: f64, choice_options: u32 },
    Fixed { format: QuestionFormat },
}

impl Default for FormatPolicy {
    fn default() -> Self {
        FormatPolicy::Adaptive { cued_recall_from: 0.5, choice_options: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub direction_policy: DirectionPolicy,
    pub format_policy: FormatPolicy,
    pub mastery_threshold: f64,
    /// Seeds distractor sampling.
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            direction_policy: DirectionPolicy::Forward,
            format_policy: FormatPolicy::default(),
            mastery_threshold: DEFAULT_MASTERY_THRESHOLD,
            seed: 0,
        }
    }
}

/// Per-card state: the raw trial history plus the recurrent state when the
/// session model is RPL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemEntry {
    pub kc_id: String,
    pub history: Vec<TrialRecord>,
    pub rpl: RplState,
    pub last_studied: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub question_id: u64,
    pub kc_id: String,
    pub direction: Direction,
    pub format: QuestionFormat,
    pub prompt: String,
    /// Expected answer text (for true/false: `"true"` or `"false"`).
    pub answer: String,
    /// Choices for option formats; exactly one equals `answer`.
    pub options: Vec<String>,
    pub predicted_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum NextQuestion {
    Question(Question),
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub kc_id: String,
    pub direction: Direction,
    pub predicted_recall: f64,
    pub cold_start: bool,
    pub last_studied: Option<i64>,
    pub deck_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    /// In rank order, weakest first.
    pub items: Vec<RankedItem>,
    pub mastered: usize,
    pub total: usize,
    pub mean_predicted_recall: f64,
    pub mastery_threshold: f64,
    pub answered: usize,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerOutcome {
    pub trial: TrialRecord,
    pub correct_answer: String,
    /// Cued-recall prediction for the answered item at the answer time.
    pub predicted_recall: f64,
    pub ranking: Vec<RankedItem>,
}

/// Recurrent state of one studied card direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub kc_id: String,
    pub direction: Direction,
    pub tau: f64,
    pub s: f64,
    pub last_trial_time: i64,
    pub trial_count: u32,
}

/// One answer-log line: the trial schema plus the session id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerLogEntry {
    pub session_id: String,
    #[serde(flatten)]
    pub trial: TrialRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySession {
    pub session_id: String,
    pub deck: Deck,
    pub model: SessionModel,
    pub config: SessionConfig,
    items: Vec<ItemEntry>,
    answer_log: Vec<TrialRecord>,
    outstanding: Option<Question>,
    previous_kc: Option<String>,
    questions_issued: u64,
}

impl StudySession {
    pub fn new(session_id: impl Into<String>, deck: Deck, model: SessionModel, config: SessionConfig) -> Result<Self> {
        deck.validate()?;
        if !(config.mastery_threshold > 0.0 && config.mastery_threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "mastery threshold {} outside (0, 1]",
                config.mastery_threshold
            )));
        }
        let session_id = session_id.into();
        if session_id.is_empty() {
            return Err(Error::InvalidConfig("empty session id".into()));
        }
        let items = fresh_items(&deck);
        Ok(Self { session_id, deck, model, config, items, answer_log: Vec::new(), outstanding: None, previous_kc: None, questions_issued: 0 })
    }

    pub fn items(&self) -> &[ItemEntry] {
        &self.items
    }

    pub fn answer_log(&self) -> &[TrialRecord] {
        &self.answer_log
    }

    pub fn outstanding(&self) -> Option<&Question> {
        self.outstanding.as_ref()
    }

    pub fn previous_kc(&self) -> Option<&str> {
        self.previous_kc.as_deref()
    }

    pub fn answer_log_entries(&self) -> impl Iterator<Item = AnswerLogEntry> + '_ {
        self.answer_log.iter().map(|t| AnswerLogEntry { session_id: self.session_id.clone(), trial: t.clone() })
    }

    /// Forgetting-curve states of every studied direction, in deck order.
    /// Empty for sessions driven by the logistic model, which keeps raw
    /// histories instead.
    pub fn state_snapshots(&self) -> Vec<StateSnapshot> {
        if !matches!(self.model, SessionModel::Rpl(_)) {
            return Vec::new();
        }
        let mut out = Vec::new();
        for item in &self.items {
            for direction in Direction::ALL {
                if let Some(st) = item.rpl.get(direction) {
                    out.push(StateSnapshot {
                        kc_id: item.kc_id.clone(),
                        direction,
                        tau: st.tau,
                        s: st.s,
                        last_trial_time: st.last_trial_time,
                        trial_count: st.trial_count,
                    });
                }
            }
        }
        out
    }

    /// Cued-recall prediction for one card direction at `now`.
    pub fn predicted_recall(&self, kc_id: &str, direction: Direction, now: i64) -> Result<Prediction> {
        let item = self.item(kc_id)?;
        self.model.predict(item, &Query::cued_recall(direction, now))
    }

    /// Weakest first. Ties go to the item studied longest ago (never-studied
    /// first), then deck order, then forward before backward.
    pub fn rank_items(&self, now: i64) -> Result<Vec<RankedItem>> {
        let mut ranked = Vec::with_capacity(self.items.len() * 2);
        for (deck_index, item) in self.items.iter().enumerate() {
            for &direction in self.config.direction_policy.directions() {
                let p = self.model.predict(item, &Query::cued_recall(direction, now))?;
                ranked.push(RankedItem {
                    kc_id: item.kc_id.clone(),
                    direction,
                    predicted_recall: p.probability,
                    cold_start: p.cold_start,
                    last_studied: item.last_studied,
                    deck_index,
                });
            }
        }
        ranked.sort_by(|a, b| {
            a.predicted_recall
                .total_cmp(&b.predicted_recall)
                .then(a.last_studied.cmp(&b.last_studied))
                .then(a.deck_index.cmp(&b.deck_index))
                .then(a.direction.cmp(&b.direction))
        });
        Ok(ranked)
    }

    /// The ranked entry the next question targets, or `None` when every entry
    /// is at or above the mastery threshold.
    ///
    /// The card asked last is skipped while some other card is below the
    /// threshold.
    pub fn select(&self, ranking: &[RankedItem]) -> Option<usize> {
        let threshold = self.config.mastery_threshold;
        let below = |r: &RankedItem| r.predicted_recall < threshold;
        let head = ranking.iter().position(below)?;
        match &self.previous_kc {
            Some(prev) if ranking[head].kc_id == *prev => {
                ranking.iter().position(|r| below(r) && r.kc_id != *prev).or(Some(head))
            }
            _ => Some(head),
        }
    }

    /// Returns the outstanding question if there is one, otherwise issues a
    /// new question for the weakest eligible item.
    pub fn next_question(&mut self, now: i64) -> Result<NextQuestion> {
        if let Some(q) = &self.outstanding {
            return Ok(NextQuestion::Question(q.clone()));
        }
        let ranking = self.rank_items(now)?;
        let Some(pick) = self.select(&ranking) else {
            return Ok(NextQuestion::Complete);
        };
        let target = &ranking[pick];
        let question = self.build_question(target)?;
        self.questions_issued += 1;
        self.outstanding = Some(question.clone());
        Ok(NextQuestion::Question(question))
    }

    fn build_question(&self, target: &RankedItem) -> Result<Question> {
        let item = &self.deck.items[target.deck_index];
        let direction = target.direction;
        let answer = item.answer(direction).to_string();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(self.questions_issued);

        let mut distractors: Vec<&str> = self
            .deck
            .items
            .iter()
            .map(|i| i.answer(direction))
            .filter(|a| *a != answer)
            .collect();
        distractors.sort_unstable();
        distractors.dedup();

        let wanted = match self.config.format_policy {
            FormatPolicy::Fixed { format } => format,
            FormatPolicy::Adaptive { cued_recall_from, choice_options } => {
                if target.predicted_recall >= cued_recall_from {
                    QuestionFormat::cued_recall()
                } else {
                    let options = choice_options.min(distractors.len() as u32 + 1);
                    if options >= 2 {
                        QuestionFormat::multiple_choice(options)?
                    } else {
                        QuestionFormat::self_graded()
                    }
                }
            }
        };

        let mut prompt = item.cue(direction).to_string();
        let mut expected = answer;
        let mut options = Vec::new();
        let format = match wanted.kind() {
            FormatKind::CuedRecall | FormatKind::SelfGraded => wanted,
            FormatKind::TrueFalse => {
                // pair the cue with the true answer or a distractor, equally likely
                let shown = if distractors.is_empty() || rand::Rng::random_bool(&mut rng, 0.5) {
                    expected.clone()
                } else {
                    distractors.choose(&mut rng).expect("non-empty").to_string()
                };
                let truth = shown == expected;
                prompt = format!("{prompt} = {shown}");
                expected = String::from(if truth { "true" } else { "false" });
                options = alloc::vec![String::from("true"), String::from("false")];
                wanted
            }
            FormatKind::MultipleChoice | FormatKind::MultipleChoiceWithNone => {
                let requested = wanted.options_count().unwrap_or(2);
                let with_none = wanted.kind() == FormatKind::MultipleChoiceWithNone;
                let slots = requested - u32::from(with_none);
                let take = (slots.saturating_sub(1) as usize).min(distractors.len());
                let mut picked: Vec<String> =
                    distractors.choose_multiple(&mut rng, take).map(|s| s.to_string()).collect();
                picked.push(expected.clone());
                picked.shuffle(&mut rng);
                if with_none {
                    picked.push(String::from("none of the above"));
                }
                options = picked;
                if options.len() < 2 {
                    options.clear();
                    QuestionFormat::self_graded()
                } else {
                    QuestionFormat::new(wanted.kind(), Some(options.len() as u32))?
                }
            }
        };
        Ok(Question {
            question_id: self.questions_issued + 1,
            kc_id: item.kc_id.clone(),
            direction,
            format,
            prompt,
            answer: expected,
            options,
            predicted_recall: target.predicted_recall,
        })
    }

    /// Applies the answer to the outstanding question.
    pub fn record_answer(
        &mut self,
        kc_id: &str,
        direction: Direction,
        format: QuestionFormat,
        correct: bool,
        now: i64,
    ) -> Result<AnswerOutcome> {
        let q = self
            .outstanding
            .as_ref()
            .ok_or_else(|| Error::Protocol(format!("no outstanding question; answer for {kc_id} rejected")))?;
        if q.kc_id != kc_id || q.direction != direction || q.format != format {
            return Err(Error::Protocol(format!(
                "answer for ({kc_id}, {}, {}) does not match outstanding question ({}, {}, {})",
                direction.as_str(),
                format.kind().as_str(),
                q.kc_id,
                q.direction.as_str(),
                q.format.kind().as_str()
            )));
        }
        if let Some(last) = self.answer_log.last() {
            if now < last.timestamp_s {
                return Err(Error::Precondition(format!("answer at {now} precedes previous answer at {}", last.timestamp_s)));
            }
        }
        let correct_answer = q.answer.clone();
        let trial = TrialRecord::new(self.session_id.clone(), kc_id, direction, format, now, correct)?;
        let idx = self.index_of(kc_id)?;
        self.model.observe(&mut self.items[idx], &trial)?;
        self.answer_log.push(trial.clone());
        self.outstanding = None;
        self.previous_kc = Some(kc_id.to_string());
        let predicted_recall = self.model.predict(&self.items[idx], &Query::cued_recall(direction, now))?.probability;
        Ok(AnswerOutcome { trial, correct_answer, predicted_recall, ranking: self.rank_items(now)? })
    }

    /// Grades a typed or chosen answer against the outstanding question, then
    /// records it. Surrounding whitespace is ignored.
    pub fn record_typed_answer(
        &mut self,
        kc_id: &str,
        direction: Direction,
        format: QuestionFormat,
        typed: &str,
        case_insensitive: bool,
        now: i64,
    ) -> Result<AnswerOutcome> {
        let q = self
            .outstanding
            .as_ref()
            .ok_or_else(|| Error::Protocol(format!("no outstanding question; answer for {kc_id} rejected")))?;
        let correct = grade(&q.answer, typed, case_insensitive);
        self.record_answer(kc_id, direction, format, correct, now)
    }

    pub fn progress(&self, now: i64) -> Result<Progress> {
        let items = self.rank_items(now)?;
        let threshold = self.config.mastery_threshold;
        let mastered = items.iter().filter(|r| r.predicted_recall >= threshold).count();
        let total = items.len();
        let mean = items.iter().map(|r| r.predicted_recall).sum::<f64>() / total as f64;
        Ok(Progress {
            complete: mastered == total,
            items,
            mastered,
            total,
            mean_predicted_recall: mean,
            mastery_threshold: threshold,
            answered: self.answer_log.len(),
        })
    }

    /// Rebuilds every item's state from the deck and the answer log alone.
    pub fn replay_items(&self) -> Result<Vec<ItemEntry>> {
        let mut items = fresh_items(&self.deck);
        for trial in &self.answer_log {
            let idx = items
                .iter()
                .position(|i| i.kc_id == trial.kc_id)
                .ok_or_else(|| Error::Protocol(format!("answer log names unknown kc {}", trial.kc_id)))?;
            self.model.observe(&mut items[idx], trial)?;
        }
        Ok(items)
    }

    fn item(&self, kc_id: &str) -> Result<&ItemEntry> {
        Ok(&self.items[self.index_of(kc_id)?])
    }

    fn index_of(&self, kc_id: &str) -> Result<usize> {
        self.items
            .iter()
            .position(|i| i.kc_id == kc_id)
            .ok_or_else(|| Error::Protocol(format!("unknown kc {kc_id}")))
    }
}

fn fresh_items(deck: &Deck) -> Vec<ItemEntry> {
    deck.items
        .iter()
        .map(|i| ItemEntry { kc_id: i.kc_id.clone(), history: Vec::new(), rpl: RplState::default(), last_studied: None })
        .collect()
}

/// Exact match after trimming, optionally ignoring case.
pub fn grade(expected: &str, typed: &str, case_insensitive: bool) -> bool {
    let (e, t) = (expected.trim(), typed.trim());
    if case_insensitive {
        e.to_lowercase() == t.to_lowercase()
    } else {
        e == t
    }
}
