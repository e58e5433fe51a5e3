//! Synthetic students whose answers are drawn from a known memory model.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Direction, KcHistory, QuestionFormat, TrialRecord};
use crate::error::{Error, Result};
use crate::math;
use crate::replay::{CausalModel, Prediction, Query};
use crate::rpl::{RplModel, RplParams, DEFAULT_COLD_START};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedFormat {
    pub format: QuestionFormat,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionMix {
    pub forward: f64,
    pub backward: f64,
}

/// Memory model that generates outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GroundTruth {
    /// The recurrent power-law model with `SimulationConfig::params`.
    Rpl,
    /// Exponential forgetting `p = 2^(-r / h)` per direction; the half-life
    /// starts at `initial_half_life_s` and is multiplied by `growth` after a
    /// correct answer and by `shrink` after an incorrect one.
    ExponentialDecay { initial_half_life_s: f64, growth: f64, shrink: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub student_count: usize,
    pub kcs_per_student: usize,
    /// Trials per knowledge component, uniform over `min..=max`.
    pub trials_per_kc_min: usize,
    pub trials_per_kc_max: usize,
    /// Inter-trial gaps are log-uniform over `[gap_min_s, gap_max_s]`.
    pub gap_min_s: f64,
    pub gap_max_s: f64,
    pub format_mix: Vec<WeightedFormat>,
    pub direction_mix: DirectionMix,
    pub params: RplParams,
    #[serde(default = "default_cold_start")]
    pub cold_start: f64,
    #[serde(default = "default_ground_truth")]
    pub ground_truth: GroundTruth,
    #[serde(default = "default_start_time")]
    pub start_time: i64,
    pub seed: u64,
}

fn default_cold_start() -> f64 {
    DEFAULT_COLD_START
}

fn default_ground_truth() -> GroundTruth {
    GroundTruth::Rpl
}

fn default_start_time() -> i64 {
    1_500_000_000
}

impl SimulationConfig {
    /// Cued recall only, forward direction, published parameters.
    pub fn cued_recall(student_count: usize, kcs_per_student: usize, trials: (usize, usize), seed: u64) -> Self {
        Self {
            student_count,
            kcs_per_student,
            trials_per_kc_min: trials.0,
            trials_per_kc_max: trials.1,
            gap_min_s: 30.0,
            gap_max_s: 7.0 * 86_400.0,
            format_mix: alloc::vec![WeightedFormat { format: QuestionFormat::cued_recall(), weight: 1.0 }],
            direction_mix: DirectionMix { forward: 1.0, backward: 0.0 },
            params: RplParams::published(),
            cold_start: DEFAULT_COLD_START,
            ground_truth: GroundTruth::Rpl,
            start_time: default_start_time(),
            seed,
        }
    }

    /// Cued recall, multiple choice, true/false and self-graded questions in
    /// both directions.
    pub fn mixed(student_count: usize, kcs_per_student: usize, trials: (usize, usize), seed: u64) -> Self {
        let f = |format, weight| WeightedFormat { format, weight };
        Self {
            format_mix: alloc::vec![
                f(QuestionFormat::cued_recall(), 0.3),
                f(QuestionFormat::multiple_choice(4).expect("4 options"), 0.35),
                f(QuestionFormat::true_false(), 0.2),
                f(QuestionFormat::self_graded(), 0.15),
            ],
            direction_mix: DirectionMix { forward: 0.5, backward: 0.5 },
            ..Self::cued_recall(student_count, kcs_per_student, trials, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.student_count == 0 || self.kcs_per_student == 0 {
            return bad("student_count and kcs_per_student must be positive".into());
        }
        if self.trials_per_kc_min == 0 || self.trials_per_kc_max < self.trials_per_kc_min {
            return bad(format!(
                "trials per kc range {}..={} is invalid",
                self.trials_per_kc_min, self.trials_per_kc_max
            ));
        }
        if !(self.gap_min_s >= 1.0 && self.gap_max_s >= self.gap_min_s && self.gap_max_s.is_finite()) {
            return bad(format!("gap range [{}, {}] is invalid", self.gap_min_s, self.gap_max_s));
        }
        if self.format_mix.is_empty() || self.format_mix.iter().any(|f| !(f.weight >= 0.0)) {
            return bad("format_mix needs non-negative weights".into());
        }
        let total: f64 = self.format_mix.iter().map(|f| f.weight).sum();
        if libm::fabs(total - 1.0) > 1e-9 {
            return bad(format!("format_mix weights sum to {total}, not 1"));
        }
        let d = self.direction_mix;
        if !(d.forward >= 0.0 && d.backward >= 0.0) || libm::fabs(d.forward + d.backward - 1.0) > 1e-9 {
            return bad("direction_mix must be non-negative and sum to 1".into());
        }
        if !(0.0..=1.0).contains(&self.cold_start) {
            return bad("cold_start must lie in [0, 1]".into());
        }
        if let GroundTruth::ExponentialDecay { initial_half_life_s, growth, shrink } = self.ground_truth {
            if !(initial_half_life_s > 0.0 && growth > 0.0 && shrink > 0.0) {
                return bad("exponential ground truth needs positive half-life and factors".into());
            }
        }
        self.params.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedLog {
    pub records: Vec<TrialRecord>,
    /// Generating probability of each record, same order.
    pub p_true: Vec<f64>,
}

impl SimulatedLog {
    pub fn histories(&self) -> Vec<KcHistory> {
        crate::domain::group_histories(self.records.iter().cloned()).into_values().collect()
    }
}

/// Generates a trial log. Output depends only on `config`; each student draws
/// from its own stream derived from `(seed, student index)`.
pub fn simulate(config: &SimulationConfig) -> Result<SimulatedLog> {
    config.validate()?;
    let mut log = SimulatedLog { records: Vec::new(), p_true: Vec::new() };
    for student in 0..config.student_count {
        let student_log = simulate_student(config, student)?;
        log.records.extend(student_log.records);
        log.p_true.extend(student_log.p_true);
    }
    Ok(log)
}

/// One student's trials; independent of every other student.
pub fn simulate_student(config: &SimulationConfig, student: usize) -> Result<SimulatedLog> {
    match config.ground_truth {
        GroundTruth::Rpl => {
            let model = RplModel::with_cold_start(config.params.clone(), config.cold_start)?;
            run_student(config, student, &model)
        }
        GroundTruth::ExponentialDecay { initial_half_life_s, growth, shrink } => {
            let model = ExponentialDecayModel { initial_half_life_s, growth, shrink, cold_start: config.cold_start };
            run_student(config, student, &model)
        }
    }
}

fn run_student<M: CausalModel>(config: &SimulationConfig, student: usize, model: &M) -> Result<SimulatedLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(student as u64);
    let student_id = format!("s{student:05}");
    let (ln_lo, ln_hi) = (math::ln(config.gap_min_s), math::ln(config.gap_max_s));
    let mut out = SimulatedLog { records: Vec::new(), p_true: Vec::new() };
    for kc in 0..config.kcs_per_student {
        let kc_id = format!("k{kc:04}");
        let trials = rng.random_range(config.trials_per_kc_min..=config.trials_per_kc_max);
        let mut state = model.initial_state();
        let mut now = config.start_time + rng.random_range(0..86_400i64);
        for i in 0..trials {
            if i > 0 {
                let gap = math::exp(rng.random_range(ln_lo..=ln_hi));
                now += (libm::round(gap) as i64).max(1);
            }
            let direction = if rng.random::<f64>() < config.direction_mix.forward {
                Direction::Forward
            } else {
                Direction::Backward
            };
            let format = pick_format(&config.format_mix, &mut rng);
            let query = Query { direction, format, now };
            let p = model.predict(&state, &query)?.probability;
            let correct = rng.random::<f64>() < p;
            let trial = TrialRecord::new(student_id.clone(), kc_id.clone(), direction, format, now, correct)?;
            model.observe(&mut state, &trial)?;
            out.records.push(trial);
            out.p_true.push(p);
        }
    }
    Ok(out)
}

fn pick_format(mix: &[WeightedFormat], rng: &mut ChaCha8Rng) -> QuestionFormat {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for f in mix {
        acc += f.weight;
        if u < acc {
            return f.format;
        }
    }
    mix.last().expect("validated non-empty").format
}

/// Exponential-forgetting ground truth used to probe model misspecification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialDecayModel {
    pub initial_half_life_s: f64,
    pub growth: f64,
    pub shrink: f64,
    pub cold_start: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DecayState {
    /// `(half-life, last trial time)` per direction.
    items: [Option<(f64, i64)>; 2],
}

impl CausalModel for ExponentialDecayModel {
    type State = DecayState;

    fn initial_state(&self) -> DecayState {
        DecayState::default()
    }

    fn predict(&self, state: &DecayState, query: &Query) -> Result<Prediction> {
        match state.items[query.direction.index()] {
            None if state.items.iter().all(Option::is_none) => {
                Ok(Prediction { probability: self.cold_start, cold_start: true })
            }
            None => Ok(Prediction::informed(query.format.guess_probability())),
            Some((half_life, last)) => {
                let r = (query.now - last).max(0) as f64;
                let p_know = math::exp(-core::f64::consts::LN_2 * r / half_life);
                let g = query.format.guess_probability();
                Ok(Prediction::informed(p_know + (1.0 - p_know) * g))
            }
        }
    }

    fn observe(&self, state: &mut DecayState, trial: &TrialRecord) -> Result<()> {
        let slot = &mut state.items[trial.direction.index()];
        let h = slot.map_or(self.initial_half_life_s, |(h, _)| h);
        let h = if trial.correct { h * self.growth } else { h * self.shrink };
        *slot = Some((h, trial.timestamp_s));
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBin {
    pub lower_s: f64,
    pub upper_s: f64,
    /// Geometric mean of the bounds.
    pub center_s: f64,
    pub n: usize,
    pub rate: f64,
    /// Binomial standard error `sqrt(rate (1 - rate) / n)`.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgettingCurve {
    pub bins: Vec<CurveBin>,
    pub notes: Vec<String>,
}

/// Empirical accuracy of second trials after a correct first trial, binned by
/// the retention interval between them.
///
/// Only pairs where the second trial is a cued-recall question in the same
/// direction as the first are used, so each rate estimates the bare
/// forgetting curve. Bins are half-open `[lower, upper)` in seconds; empty
/// bins are dropped with a note.
pub fn empirical_forgetting_curve(histories: &[KcHistory], bins: &[(f64, f64)]) -> ForgettingCurve {
    let mut counts = alloc::vec![(0usize, 0usize); bins.len()];
    for h in histories {
        let t = h.trials();
        if t.len() < 2 || !t[0].correct {
            continue;
        }
        let (first, second) = (&t[0], &t[1]);
        if second.direction != first.direction || second.format != QuestionFormat::cued_recall() {
            continue;
        }
        let r = (second.timestamp_s - first.timestamp_s) as f64;
        for (i, (lo, hi)) in bins.iter().enumerate() {
            if r >= *lo && r < *hi {
                counts[i].0 += 1;
                counts[i].1 += usize::from(second.correct);
            }
        }
    }
    let mut curve = ForgettingCurve { bins: Vec::new(), notes: Vec::new() };
    for ((lo, hi), (n, k)) in bins.iter().zip(counts) {
        if n == 0 {
            curve.notes.push(format!("bin [{lo}, {hi}) is empty"));
            continue;
        }
        let rate = k as f64 / n as f64;
        curve.bins.push(CurveBin {
            lower_s: *lo,
            upper_s: *hi,
            center_s: math::sqrt(lo.max(0.0) * hi),
            n,
            rate,
            se: math::sqrt(rate * (1.0 - rate) / n as f64),
        });
    }
    curve
}
