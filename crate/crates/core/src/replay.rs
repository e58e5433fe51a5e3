//! Causal prediction interface shared by evaluation, fitting and scheduling.
//!
//! A [`CausalModel`] only ever sees trials through [`CausalModel::observe`],
//! and [`replay`] calls `predict` for trial `i` before observing it, so a
//! prediction can depend on trials `0..i` of its history and nothing else.

use serde::{Deserialize, Serialize};

use crate::domain::{Direction, KcHistory, QuestionFormat, TrialRecord};
use crate::error::{Error, Result};

/// What is being predicted: a `format` question in `direction` at `now`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub direction: Direction,
    pub format: QuestionFormat,
    pub now: i64,
}

impl Query {
    pub fn for_trial(trial: &TrialRecord) -> Self {
        Self { direction: trial.direction, format: trial.format, now: trial.timestamp_s }
    }

    pub fn cued_recall(direction: Direction, now: i64) -> Self {
        Self { direction, format: QuestionFormat::cued_recall(), now }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probability: f64,
    /// No trial in either direction informed this prediction.
    pub cold_start: bool,
}

impl Prediction {
    pub fn informed(probability: f64) -> Self {
        Self { probability, cold_start: false }
    }
}

pub trait CausalModel {
    /// Per-(student, kc) knowledge state.
    type State: Clone;

    fn initial_state(&self) -> Self::State;

    fn predict(&self, state: &Self::State, query: &Query) -> Result<Prediction>;

    fn observe(&self, state: &mut Self::State, trial: &TrialRecord) -> Result<()>;
}

impl<M: CausalModel + ?Sized> CausalModel for &M {
    type State = M::State;

    fn initial_state(&self) -> Self::State {
        (**self).initial_state()
    }

    fn predict(&self, state: &Self::State, query: &Query) -> Result<Prediction> {
        (**self).predict(state, query)
    }

    fn observe(&self, state: &mut Self::State, trial: &TrialRecord) -> Result<()> {
        (**self).observe(state, trial)
    }
}

/// Predicts the same probability for everything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantModel(pub f64);

impl CausalModel for ConstantModel {
    type State = ();

    fn initial_state(&self) {}

    fn predict(&self, _: &(), _: &Query) -> Result<Prediction> {
        Ok(Prediction::informed(self.0))
    }

    fn observe(&self, _: &mut (), _: &TrialRecord) -> Result<()> {
        Ok(())
    }
}

/// One replayed trial: the model's prediction made just before the trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayStep<'a> {
    pub trial: &'a TrialRecord,
    pub past_trial_count: usize,
    pub prediction: Prediction,
}

/// Walks a history in time order, predicting each trial before observing it.
///
/// Fails if the model returns a probability outside `[0, 1]`.
pub fn replay<'h, M, F>(model: &M, history: &'h KcHistory, mut visit: F) -> Result<M::State>
where
    M: CausalModel + ?Sized,
    F: FnMut(ReplayStep<'h>) -> Result<()>,
{
    let mut state = model.initial_state();
    for (i, trial) in history.trials().iter().enumerate() {
        let prediction = model.predict(&state, &Query::for_trial(trial))?;
        let p = prediction.probability;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange {
                value: p,
                context: alloc::format!(
                    "trial {i} of ({}, {}) at t={}",
                    history.student_id,
                    history.kc_id,
                    trial.timestamp_s
                ),
            });
        }
        visit(ReplayStep { trial, past_trial_count: i, prediction })?;
        model.observe(&mut state, trial)?;
    }
    Ok(state)
}
