//! Recurrent power-law forgetting model.
//!
//! Each direction of a knowledge component is its own item with a forgetting
//! curve `p_cr(r) = (1 + e^-s r)^(-e^-τ)`. The curve restarts at 1 after every
//! trial and its shape `(τ, s)` is updated from the trial outcome, the recall
//! probability just before the trial and the format's guess probability.
//! A prediction then adjusts `p_cr` for format difficulty (an odds ratio),
//! guessing, and transfer from the inverse direction.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Direction, FormatKind, KcHistory, TrialRecord};
use crate::error::{Error, Result};
use crate::math::{self, CompensatedSum};
use crate::optim::{nelder_mead, OptimizerConfig, TraceEntry};
use crate::replay::{replay, CausalModel, Prediction, Query};

/// Lower bound applied to both update multipliers.
pub const MIN_MULTIPLIER: f64 = 1e-6;

/// Prediction returned when neither direction has been studied.
pub const DEFAULT_COLD_START: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RplParams {
    pub s_0: f64,
    pub s_c: f64,
    pub s_i: f64,
    pub tau_0c: f64,
    pub tau_0i: f64,
    pub tau_c: f64,
    pub tau_i: f64,
    pub gamma_c: f64,
    pub gamma_i: f64,
    /// Probability that knowledge of the inverse item transfers.
    pub transfer_t: f64,
    /// Difficulty factor per format; cued recall is always 1 and formats
    /// missing from the map default to 1.
    pub k_factors: BTreeMap<FormatKind, f64>,
}

impl RplParams {
    /// The production fit, with `p_0` as the transfer probability.
    pub fn published() -> Self {
        let mut k_factors = BTreeMap::new();
        k_factors.insert(FormatKind::MultipleChoice, 2.055274);
        k_factors.insert(FormatKind::MultipleChoiceWithNone, 1.826852);
        k_factors.insert(FormatKind::TrueFalse, 1.9616543);
        Self {
            s_0: -3.51706760045,
            s_c: 0.00643324313615,
            s_i: -0.0544722896411,
            tau_0c: 3.86991863068,
            tau_0i: 3.54103122648,
            tau_c: 0.396606246542,
            tau_i: 0.294149151118,
            gamma_c: 0.887589628199,
            gamma_i: 1.39704082213,
            transfer_t: 0.378245635733,
            k_factors,
        }
    }

    /// Uninformative starting point for fitting.
    pub fn neutral() -> Self {
        let k_factors = [FormatKind::MultipleChoice, FormatKind::MultipleChoiceWithNone, FormatKind::TrueFalse, FormatKind::SelfGraded]
            .into_iter()
            .map(|k| (k, 1.5))
            .collect();
        Self {
            s_0: -1.0,
            s_c: 0.01,
            s_i: 0.01,
            tau_0c: 1.0,
            tau_0i: 1.0,
            tau_c: 0.1,
            tau_i: 0.1,
            gamma_c: 1.0,
            gamma_i: 1.0,
            transfer_t: 0.3,
            k_factors,
        }
    }

    pub fn k_factor(&self, format: FormatKind) -> f64 {
        match format {
            FormatKind::CuedRecall => 1.0,
            other => self.k_factors.get(&other).copied().unwrap_or(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = [
            ("s_0", self.s_0),
            ("s_c", self.s_c),
            ("s_i", self.s_i),
            ("tau_0c", self.tau_0c),
            ("tau_0i", self.tau_0i),
            ("tau_c", self.tau_c),
            ("tau_i", self.tau_i),
            ("gamma_c", self.gamma_c),
            ("gamma_i", self.gamma_i),
            ("transfer_t", self.transfer_t),
        ];
        if let Some((name, _)) = scalars.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name} is not finite")));
        }
        let positive = [
            ("tau_0c", self.tau_0c),
            ("tau_0i", self.tau_0i),
            ("gamma_c", self.gamma_c),
            ("gamma_i", self.gamma_i),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
        }
        // the update raises τ_c(1-p) and τ_i·p to fractional powers
        if self.tau_c < 0.0 || self.tau_i < 0.0 {
            return Err(Error::InvalidParams("tau_c and tau_i must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.transfer_t) {
            return Err(Error::InvalidParams(format!("transfer_t must lie in [0, 1], got {}", self.transfer_t)));
        }
        for (kind, k) in &self.k_factors {
            if !(k.is_finite() && *k > 0.0) {
                return Err(Error::InvalidParams(format!("k factor for {} must be positive", kind.as_str())));
            }
        }
        Ok(())
    }
}

/// Forgetting-curve state of one direction of one knowledge component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemState {
    pub tau: f64,
    pub s: f64,
    pub last_trial_time: i64,
    pub trial_count: u32,
}

/// `(1 + e^-s r)^(-e^-τ)`: 1 at `r = 0`, strictly decreasing, never 0.
pub fn recall_probability(state: &ItemState, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Precondition(format!("retention interval must be non-negative, got {r}")));
    }
    let s_prime = math::exp(-state.s);
    let tau_prime = math::exp(-state.tau);
    Ok(math::exp(-tau_prime * math::ln_1p(s_prime * r)))
}

pub fn init_state(first_trial_correct: bool, trial_time: i64, params: &RplParams) -> ItemState {
    ItemState {
        tau: if first_trial_correct { params.tau_0c } else { params.tau_0i },
        s: params.s_0,
        last_trial_time: trial_time,
        trial_count: 1,
    }
}

/// `(τ multiplier, s multiplier)` for an outcome given the pre-trial recall
/// probability `p` and guess probability `g`, each clamped below at
/// [`MIN_MULTIPLIER`].
pub fn update_multipliers(p: f64, correct: bool, g: f64, params: &RplParams) -> (f64, f64) {
    let (tau_mult, s_mult) = if correct {
        (
            1.0 + math::powf(params.tau_c * (1.0 - p), params.gamma_c) * (1.0 - g),
            1.0 + params.s_c * (1.0 - p) * (1.0 - g),
        )
    } else {
        (
            1.0 - math::powf(params.tau_i * p, params.gamma_i) / (1.0 - g),
            1.0 - params.s_i * p / (1.0 - g),
        )
    };
    (tau_mult.max(MIN_MULTIPLIER), s_mult.max(MIN_MULTIPLIER))
}

/// Applies a trial outcome. `p_cr` is evaluated on the pre-update curve at
/// the trial's retention interval.
pub fn update_state(
    state: &ItemState,
    correct: bool,
    trial_time: i64,
    guess_probability: f64,
    params: &RplParams,
) -> Result<ItemState> {
    if !(0.0..1.0).contains(&guess_probability) {
        return Err(Error::Precondition(format!("guess probability must lie in [0, 1), got {guess_probability}")));
    }
    if trial_time < state.last_trial_time {
        return Err(Error::Precondition(format!(
            "trial at {trial_time} precedes previous trial at {}",
            state.last_trial_time
        )));
    }
    let r = (trial_time - state.last_trial_time) as f64;
    let p = recall_probability(state, r)?;
    let (tau_mult, s_mult) = update_multipliers(p, correct, guess_probability, params);
    Ok(ItemState {
        tau: state.tau * tau_mult,
        s: state.s * s_mult,
        last_trial_time: trial_time,
        trial_count: state.trial_count.saturating_add(1),
    })
}

/// Odds-ratio adjustment `k p / (1 - p (1 - k))`.
pub fn apply_difficulty(p_cr: f64, k: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_cr) {
        return Err(Error::OutOfRange { value: p_cr, context: "recall probability".into() });
    }
    if !(k > 0.0) {
        return Err(Error::InvalidParams(format!("difficulty factor must be positive, got {k}")));
    }
    if p_cr == 1.0 {
        return Ok(1.0);
    }
    let denom = 1.0 - p_cr * (1.0 - k);
    if !(denom > 0.0) {
        return Err(Error::NonFinite("difficulty adjustment denominator".into()));
    }
    Ok((k * p_cr / denom).min(1.0))
}

/// `p_k + (1 - p_k) g`.
pub fn correct_probability(p_k: f64, guess_probability: f64) -> f64 {
    p_k + (1.0 - p_k) * guess_probability
}

/// `p_c + (1 - p_c) p_o t` when the inverse item has been studied.
pub fn apply_transfer(p_c: f64, p_o: Option<f64>, transfer_t: f64) -> f64 {
    match p_o {
        Some(p_o) => p_c + (1.0 - p_c) * p_o * transfer_t,
        None => p_c,
    }
}

/// Both directions of one knowledge component for one student.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RplState {
    pub forward: Option<ItemState>,
    pub backward: Option<ItemState>,
}

impl RplState {
    pub fn get(&self, direction: Direction) -> Option<&ItemState> {
        match direction {
            Direction::Forward => self.forward.as_ref(),
            Direction::Backward => self.backward.as_ref(),
        }
    }

    pub fn get_mut(&mut self, direction: Direction) -> &mut Option<ItemState> {
        match direction {
            Direction::Forward => &mut self.forward,
            Direction::Backward => &mut self.backward,
        }
    }

    pub fn last_trial_time(&self) -> Option<i64> {
        self.forward.iter().chain(self.backward.iter()).map(|s| s.last_trial_time).max()
    }
}

/// Full prediction pipeline for a `query.format` question in
/// `query.direction`.
///
/// An unstudied target direction contributes `p_cr = 0`. The inverse item
/// enters through its cued-recall probability. With no trial in either
/// direction, returns `cold_start` flagged as such.
pub fn predict_rpl(params: &RplParams, state: &RplState, query: &Query, cold_start: f64) -> Result<Prediction> {
    let target = state.get(query.direction);
    let inverse = state.get(query.direction.inverse());
    if target.is_none() && inverse.is_none() {
        return Ok(Prediction { probability: cold_start, cold_start: true });
    }
    let p_cr = match target {
        Some(s) => recall_probability(s, elapsed(s, query.now)?)?,
        None => 0.0,
    };
    let p_k = apply_difficulty(p_cr, params.k_factor(query.format.kind()))?;
    let p_c = correct_probability(p_k, query.format.guess_probability());
    let p_o = match inverse {
        Some(s) => Some(recall_probability(s, elapsed(s, query.now)?)?),
        None => None,
    };
    Ok(Prediction::informed(apply_transfer(p_c, p_o, params.transfer_t)))
}

fn elapsed(state: &ItemState, now: i64) -> Result<f64> {
    if now < state.last_trial_time {
        return Err(Error::Precondition(format!(
            "prediction time {now} precedes last trial at {}",
            state.last_trial_time
        )));
    }
    Ok((now - state.last_trial_time) as f64)
}

/// Applies one trial to the state of its own direction.
pub fn observe_trial(params: &RplParams, state: &mut RplState, trial: &TrialRecord) -> Result<()> {
    let slot = state.get_mut(trial.direction);
    *slot = Some(match slot {
        None => init_state(trial.correct, trial.timestamp_s, params),
        Some(s) => update_state(s, trial.correct, trial.timestamp_s, trial.format.guess_probability(), params)?,
    });
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RplModel {
    pub params: RplParams,
    pub cold_start: f64,
}

impl RplModel {
    pub fn new(params: RplParams) -> Result<Self> {
        Self::with_cold_start(params, DEFAULT_COLD_START)
    }

    pub fn with_cold_start(params: RplParams, cold_start: f64) -> Result<Self> {
        params.validate()?;
        if !(0.0..=1.0).contains(&cold_start) {
            return Err(Error::InvalidConfig(format!("cold-start probability {cold_start} outside [0, 1]")));
        }
        Ok(Self { params, cold_start })
    }

    pub fn published() -> Self {
        Self { params: RplParams::published(), cold_start: DEFAULT_COLD_START }
    }
}

impl CausalModel for RplModel {
    type State = RplState;

    fn initial_state(&self) -> RplState {
        RplState::default()
    }

    fn predict(&self, state: &RplState, query: &Query) -> Result<Prediction> {
        predict_rpl(&self.params, state, query, self.cold_start)
    }

    fn observe(&self, state: &mut RplState, trial: &TrialRecord) -> Result<()> {
        observe_trial(&self.params, state, trial)
    }
}

/// Total Bernoulli log-likelihood of `histories` under `model` and the number
/// of trials scored. Probabilities are clamped to `[1e-9, 1 - 1e-9]`.
pub fn rpl_log_likelihood(model: &RplModel, histories: &[KcHistory]) -> Result<(f64, usize)> {
    let mut total = CompensatedSum::new();
    let mut n = 0;
    for h in histories {
        replay(model, h, |step| {
            total.add(math::bernoulli_ll(step.prediction.probability, step.trial.correct));
            n += 1;
            Ok(())
        })?;
    }
    Ok((total.value(), n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RplFitConfig {
    pub optimizer: OptimizerConfig,
    /// Extra random starts after the one at `init`.
    pub restarts: usize,
    /// Simplex rebuilds around the best point after each run.
    pub polish_rounds: usize,
    pub seed: u64,
    pub init: RplParams,
    pub cold_start: f64,
}

impl Default for RplFitConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig { max_iterations: 4_000, ..OptimizerConfig::nelder_mead() },
            restarts: 3,
            polish_rounds: 2,
            seed: 0,
            init: RplParams::neutral(),
            cold_start: DEFAULT_COLD_START,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RplFit {
    pub params: RplParams,
    pub log_likelihood: f64,
    pub trials: usize,
    pub evaluations: usize,
    /// Best value of each start's final run, in start order.
    pub start_values: Vec<f64>,
    /// Concatenated simplex traces, iterations numbered globally.
    pub trace: Vec<TraceEntry>,
    pub warnings: Vec<String>,
}

impl RplFit {
    pub fn mean_log_likelihood(&self) -> f64 {
        self.log_likelihood / self.trials as f64
    }
}

/// Maps `RplParams` to the simplex coordinates: the ten scalars followed by
/// the k factor of each non-cued format present in the data.
#[derive(Debug, Clone)]
struct Layout {
    formats: Vec<FormatKind>,
    base: RplParams,
}

impl Layout {
    fn coordinates(&self, p: &RplParams) -> Vec<f64> {
        let mut v = alloc::vec![
            p.s_0, p.s_c, p.s_i, p.tau_0c, p.tau_0i, p.tau_c, p.tau_i, p.gamma_c, p.gamma_i, p.transfer_t
        ];
        v.extend(self.formats.iter().map(|f| p.k_factor(*f)));
        v
    }

    fn params_at(&self, v: &[f64]) -> RplParams {
        let mut p = self.base.clone();
        p.s_0 = v[0];
        p.s_c = v[1];
        p.s_i = v[2];
        p.tau_0c = v[3];
        p.tau_0i = v[4];
        p.tau_c = v[5];
        p.tau_i = v[6];
        p.gamma_c = v[7];
        p.gamma_i = v[8];
        p.transfer_t = v[9];
        for (f, k) in self.formats.iter().zip(&v[10..]) {
            p.k_factors.insert(*f, *k);
        }
        p
    }
}

/// Maximum-likelihood fit by Nelder-Mead with seeded random restarts.
///
/// Every start runs the simplex to convergence, then rebuilds the simplex
/// around the best vertex up to `polish_rounds` times while that still
/// improves the likelihood. Parameter vectors violating
/// [`RplParams::validate`] score `+inf`.
pub fn fit_rpl(histories: &[KcHistory], config: &RplFitConfig) -> Result<RplFit> {
    let trials: usize = histories.iter().map(KcHistory::len).sum();
    if trials == 0 {
        return Err(Error::Precondition("RPL training log is empty".into()));
    }
    let any = |c: bool| histories.iter().flat_map(|h| h.trials()).any(|t| t.correct == c);
    if !any(true) {
        return Err(Error::SingleClass { missing: "correct" });
    }
    if !any(false) {
        return Err(Error::SingleClass { missing: "incorrect" });
    }
    config.init.validate()?;

    let mut formats: Vec<FormatKind> = histories
        .iter()
        .flat_map(|h| h.trials())
        .map(|t| t.format.kind())
        .filter(|k| *k != FormatKind::CuedRecall)
        .collect();
    formats.sort();
    formats.dedup();
    let layout = Layout { formats, base: config.init.clone() };
    let cold_start = config.cold_start;

    let mut evaluations = 0usize;
    let mut objective = |v: &[f64]| -> f64 {
        evaluations += 1;
        let params = layout.params_at(v);
        if params.validate().is_err() {
            return f64::INFINITY;
        }
        let model = RplModel { params, cold_start };
        match rpl_log_likelihood(&model, histories) {
            Ok((ll, _)) if ll.is_finite() => -ll,
            _ => f64::INFINITY,
        }
    };

    let x_init = layout.coordinates(&config.init);
    let init_value = objective(&x_init);
    if !init_value.is_finite() {
        return Err(Error::NonFinite("RPL log-likelihood at initial parameters".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: (Vec<f64>, f64) = (x_init.clone(), init_value);
    let mut start_values = Vec::new();
    let mut trace = Vec::new();
    let mut warnings = Vec::new();
    for start in 0..=config.restarts {
        let mut x = if start == 0 { x_init.clone() } else { jitter(&x_init, &mut rng) };
        if !objective(&x).is_finite() {
            x = x_init.clone();
        }
        let mut value = f64::INFINITY;
        for round in 0..=config.polish_rounds {
            let out = match nelder_mead(&mut objective, &x, &config.optimizer) {
                Ok(o) => o,
                Err(e) => {
                    warnings.push(format!("start {start} round {round}: {e}"));
                    break;
                }
            };
            let offset = trace.len();
            trace.extend(out.trace.into_iter().map(|mut t| {
                t.iteration += offset;
                t
            }));
            let improved = value - out.value;
            x = out.x;
            value = out.value;
            if !out.converged {
                warnings.push(format!("start {start} round {round}: iteration cap reached"));
            }
            if improved.is_finite() && improved < config.optimizer.tolerance.max(1e-9) * trials as f64 {
                break;
            }
        }
        start_values.push(value);
        if value < best.1 {
            best = (x, value);
        }
    }
    if !has_direction_mixing(histories) {
        warnings.push(String::from("no knowledge component was studied in both directions; transfer_t is unidentified"));
    }
    if !(best.1 < init_value) {
        warnings.push(String::from("optimizer did not improve on the initial parameters"));
    }
    Ok(RplFit {
        params: layout.params_at(&best.0),
        log_likelihood: -best.1,
        trials,
        evaluations,
        start_values,
        trace,
        warnings,
    })
}

fn jitter(x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, v)| {
            let factor = rng.random_range(0.5..1.5);
            let shifted = v * factor;
            // keep the transfer probability inside [0, 1]
            if i == 9 {
                shifted.clamp(0.0, 1.0)
            } else {
                shifted
            }
        })
        .collect()
}

/// Whether a trial log contains both directions of any knowledge component.
pub fn has_direction_mixing(histories: &[KcHistory]) -> bool {
    histories.iter().any(|h| {
        let t = h.trials();
        t.iter().any(|x| x.direction == Direction::Forward) && t.iter().any(|x| x.direction == Direction::Backward)
    })
}
