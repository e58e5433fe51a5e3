//! AUC, log-likelihood and calibration of causal predictions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{FormatKind, KcHistory, QuestionFormat, TrialRecord};
use crate::error::{Error, Result};
use crate::math::{self, CompensatedSum};
use crate::replay::{replay, CausalModel, Prediction, Query};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Cued recall only.
    WriteLike,
    /// Mixed question formats.
    LearnLike,
}

impl Source {
    pub fn detect(histories: &[KcHistory]) -> Source {
        let mixed = histories
            .iter()
            .flat_map(|h| h.trials())
            .any(|t| t.format.kind() != FormatKind::CuedRecall);
        if mixed {
            Source::LearnLike
        } else {
            Source::WriteLike
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredTrial {
    pub predicted: f64,
    pub actual: bool,
    pub past_trial_count: usize,
    pub format: QuestionFormat,
    pub source: Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucEstimate {
    pub auc: f64,
    /// Hanley-McNeil standard error.
    pub se: f64,
    pub positives: usize,
    pub negatives: usize,
}

/// Mann-Whitney AUC: the share of (positive, negative) pairs where the
/// positive scores higher, ties counting one half. `O(n log n)`.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<AucEstimate> {
    if scores.len() != labels.len() {
        return Err(Error::Precondition(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("AUC scores".into()));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    let negatives = labels.len() - positives;
    if positives == 0 {
        return Err(Error::SingleClass { missing: "positive" });
    }
    if negatives == 0 {
        return Err(Error::SingleClass { missing: "negative" });
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; tied block i..=j shares the average rank
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let tied_pos = order[i..=j].iter().filter(|&&k| labels[k]).count();
        positive_rank_sum += avg_rank * tied_pos as f64;
        i = j + 1;
    }
    let (np, nn) = (positives as f64, negatives as f64);
    let u = positive_rank_sum - np * (np + 1.0) / 2.0;
    let a = u / (np * nn);
    Ok(AucEstimate { auc: a, se: hanley_mcneil_se(a, positives, negatives), positives, negatives })
}

pub fn hanley_mcneil_se(a: f64, positives: usize, negatives: usize) -> f64 {
    let (np, nn) = (positives as f64, negatives as f64);
    let q1 = a / (2.0 - a);
    let q2 = 2.0 * a * a / (1.0 + a);
    let var = (a * (1.0 - a) + (np - 1.0) * (q1 - a * a) + (nn - 1.0) * (q2 - a * a)) / (np * nn);
    math::sqrt(var.max(0.0))
}

pub fn auc_of(trials: &[ScoredTrial]) -> Result<AucEstimate> {
    let scores: Vec<f64> = trials.iter().map(|t| t.predicted).collect();
    let labels: Vec<bool> = trials.iter().map(|t| t.actual).collect();
    auc(&scores, &labels)
}

/// Seeded bootstrap standard error of the AUC, resampling trials. Resamples
/// that draw a single class are skipped.
pub fn bootstrap_auc_se(scores: &[f64], labels: &[bool], resamples: usize, seed: u64) -> Result<f64> {
    auc(scores, labels)?;
    let n = scores.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(resamples);
    let mut s = vec![0.0; n];
    let mut l = vec![false; n];
    for _ in 0..resamples {
        for k in 0..n {
            let i = rng.random_range(0..n);
            s[k] = scores[i];
            l[k] = labels[i];
        }
        if let Ok(est) = auc(&s, &l) {
            values.push(est.auc);
        }
    }
    if values.len() < 2 {
        return Err(Error::Precondition("too few usable bootstrap resamples".into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64;
    Ok(math::sqrt(var))
}

/// How scored trials are bucketed in a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Segmenter {
    /// Buckets `0, 1, .., open_from - 1` and `>=open_from` past trials.
    PastTrials { open_from: usize },
    Format,
}

impl Default for Segmenter {
    fn default() -> Self {
        Segmenter::PastTrials { open_from: 2 }
    }
}

impl Segmenter {
    /// Sort key and label.
    pub fn segment(&self, t: &ScoredTrial) -> (usize, String) {
        match *self {
            Segmenter::PastTrials { open_from } if t.past_trial_count >= open_from => {
                (open_from, format!(">={open_from}"))
            }
            Segmenter::PastTrials { .. } => (t.past_trial_count, format!("{}", t.past_trial_count)),
            Segmenter::Format => {
                let kind = t.format.kind();
                let idx = FormatKind::ALL.iter().position(|k| *k == kind).unwrap_or(0);
                (idx, String::from(kind.as_str()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub label: String,
    /// Absent when the segment holds a single outcome class.
    pub auc: Option<f64>,
    pub se: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub mean_predicted: f64,
    pub empirical_rate: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub auc: f64,
    pub auc_se: f64,
    pub n: usize,
    pub source: Source,
    pub segments: Vec<SegmentReport>,
    pub mean_log_likelihood: f64,
    pub calibration: Vec<CalibrationBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOptions {
    pub segmenter: Segmenter,
    /// Detected from the log when absent.
    pub source: Option<Source>,
    pub calibration_bins: usize,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        Self { segmenter: Segmenter::default(), source: None, calibration_bins: 10 }
    }
}

/// Replays every history, scoring each trial with the prediction made just
/// before it. Predictions are audited: a model never holds a trial at or
/// after the position being predicted, nor one timestamped later than it.
pub fn score_trials<M: CausalModel>(model: &M, histories: &[KcHistory], source: Source) -> Result<Vec<ScoredTrial>> {
    let audited = Audited(model);
    let mut out = Vec::with_capacity(histories.iter().map(KcHistory::len).sum());
    for h in histories {
        replay(&audited, h, |step| {
            out.push(ScoredTrial {
                predicted: step.prediction.probability,
                actual: step.trial.correct,
                past_trial_count: step.past_trial_count,
                format: step.trial.format,
                source,
            });
            Ok(())
        })?;
    }
    Ok(out)
}

pub fn evaluate_model<M: CausalModel>(
    model: &M,
    histories: &[KcHistory],
    options: &EvaluateOptions,
) -> Result<EvaluationReport> {
    let source = options.source.unwrap_or_else(|| Source::detect(histories));
    let scored = score_trials(model, histories, source)?;
    report_from_scored(&scored, source, options)
}

pub fn report_from_scored(scored: &[ScoredTrial], source: Source, options: &EvaluateOptions) -> Result<EvaluationReport> {
    let overall = auc_of(scored)?;
    let mut buckets: BTreeMap<(usize, String), Vec<ScoredTrial>> = BTreeMap::new();
    for t in scored {
        buckets.entry(options.segmenter.segment(t)).or_default().push(*t);
    }
    let segments = buckets
        .into_iter()
        .map(|((_, label), trials)| {
            let est = auc_of(&trials).ok();
            SegmentReport { label, auc: est.map(|e| e.auc), se: est.map(|e| e.se), n: trials.len() }
        })
        .collect();
    let ll: CompensatedSum = scored.iter().map(|t| math::bernoulli_ll(t.predicted, t.actual)).collect();
    Ok(EvaluationReport {
        auc: overall.auc,
        auc_se: overall.se,
        n: scored.len(),
        source,
        segments,
        mean_log_likelihood: ll.value() / scored.len() as f64,
        calibration: calibration(scored, options.calibration_bins.max(1)),
    })
}

/// Equal-width bins over `[0, 1]`; empty bins are omitted.
pub fn calibration(scored: &[ScoredTrial], bins: usize) -> Vec<CalibrationBin> {
    let mut sums = vec![(0.0f64, 0usize, 0usize); bins];
    for t in scored {
        let i = ((t.predicted * bins as f64) as usize).min(bins - 1);
        sums[i].0 += t.predicted;
        sums[i].1 += usize::from(t.actual);
        sums[i].2 += 1;
    }
    sums.into_iter()
        .enumerate()
        .filter(|(_, s)| s.2 > 0)
        .map(|(i, (p, pos, n))| CalibrationBin {
            lower: i as f64 / bins as f64,
            upper: (i + 1) as f64 / bins as f64,
            mean_predicted: p / n as f64,
            empirical_rate: pos as f64 / n as f64,
            n,
        })
        .collect()
}

/// Mean Bernoulli log-likelihood in nats per trial, with predictions clamped
/// to `[1e-9, 1 - 1e-9]`.
pub fn log_likelihood<M: CausalModel>(model: &M, histories: &[KcHistory]) -> Result<f64> {
    let mut total = CompensatedSum::new();
    let mut n = 0usize;
    for h in histories {
        replay(&Audited(model), h, |step| {
            total.add(math::bernoulli_ll(step.prediction.probability, step.trial.correct));
            n += 1;
            Ok(())
        })?;
    }
    if n == 0 {
        return Err(Error::Precondition("no trials to score".into()));
    }
    Ok(total.value() / n as f64)
}

/// Splits histories by student: a seeded shuffle of the distinct student ids
/// sends roughly `test_fraction` of them to the test side.
pub fn train_test_split(histories: &[KcHistory], test_fraction: f64, seed: u64) -> (Vec<KcHistory>, Vec<KcHistory>) {
    let mut students: Vec<&str> = histories.iter().map(|h| h.student_id.as_str()).collect();
    students.sort_unstable();
    students.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..students.len()).rev() {
        let j = rng.random_range(0..=i);
        students.swap(i, j);
    }
    let n_test = libm::round((students.len() as f64) * test_fraction.clamp(0.0, 1.0)) as usize;
    let test: alloc::collections::BTreeSet<&str> = students[..n_test].iter().copied().collect();
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for h in histories {
        if test.contains(h.student_id.as_str()) {
            held.push(h.clone());
        } else {
            train.push(h.clone());
        }
    }
    (train, held)
}

/// Wraps a model and checks at every prediction that the observed trials all
/// precede the query.
struct Audited<'a, M>(&'a M);

#[derive(Clone)]
struct AuditState<S> {
    inner: S,
    last_observed: Option<i64>,
}

impl<M: CausalModel> CausalModel for Audited<'_, M> {
    type State = AuditState<M::State>;

    fn initial_state(&self) -> Self::State {
        AuditState { inner: self.0.initial_state(), last_observed: None }
    }

    fn predict(&self, state: &Self::State, query: &Query) -> Result<Prediction> {
        if let Some(t) = state.last_observed {
            if t > query.now {
                return Err(Error::Precondition(format!(
                    "causality violation: trial at {t} observed before predicting t={}",
                    query.now
                )));
            }
        }
        self.0.predict(&state.inner, query)
    }

    fn observe(&self, state: &mut Self::State, trial: &TrialRecord) -> Result<()> {
        state.last_observed = Some(trial.timestamp_s);
        self.0.observe(&mut state.inner, trial)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Direction;
    use crate::replay::ConstantModel;
    use alloc::vec;

    /// Counts (positive, negative) pairs directly.
    fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in labels.iter().enumerate() {
            for (j, &yj) in labels.iter().enumerate() {
                if yi && !yj {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn perfect_and_tied() {
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap().auc, 1.0);
        assert_eq!(auc(&[0.4; 6], &[true, false, true, false, false, true]).unwrap().auc, 0.5);
    }

    #[test]
    fn small_worked_case() {
        let s = [0.9, 0.8, 0.7, 0.6];
        let y = [true, false, true, false];
        assert_eq!(brute_force_auc(&s, &y), 0.75);
        assert_eq!(auc(&s, &y).unwrap().auc, 0.75);
    }

    #[test]
    fn matches_brute_force_with_ties() {
        let s = [0.1, 0.4, 0.4, 0.35, 0.8, 0.8, 0.8, 0.2, 0.65, 0.4];
        let y = [false, true, false, true, true, false, true, false, true, false];
        assert!((auc(&s, &y).unwrap().auc - brute_force_auc(&s, &y)).abs() < 1e-15);
    }

    #[test]
    fn hanley_mcneil_reference() {
        // A = 0.8, 50 positives, 50 negatives
        let se = hanley_mcneil_se(0.8, 50, 50);
        let q1 = 0.8 / 1.2;
        let q2 = 2.0 * 0.64 / 1.8;
        let expected = libm::sqrt((0.8 * 0.2 + 49.0 * (q1 - 0.64) + 49.0 * (q2 - 0.64)) / 2500.0);
        assert!((se - expected).abs() < 1e-15);
    }

    #[test]
    fn single_class_errors() {
        assert_eq!(auc(&[0.2, 0.3], &[true, true]).unwrap_err(), Error::SingleClass { missing: "negative" });
        assert_eq!(auc(&[0.2, 0.3], &[false, false]).unwrap_err(), Error::SingleClass { missing: "positive" });
    }

    #[test]
    fn bootstrap_agrees_roughly_with_hanley_mcneil() {
        let n = 400;
        let scores: Vec<f64> = (0..n).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
        let labels: Vec<bool> = scores.iter().enumerate().map(|(i, s)| (*s + ((i * 31) % 17) as f64 / 17.0) > 0.9).collect();
        let est = auc(&scores, &labels).unwrap();
        let boot = bootstrap_auc_se(&scores, &labels, 300, 7).unwrap();
        assert!((boot / est.se - 1.0).abs() < 0.35, "boot {boot} hm {}", est.se);
        assert_eq!(boot, bootstrap_auc_se(&scores, &labels, 300, 7).unwrap());
    }

    fn history(student: &str, outcomes: &[bool]) -> KcHistory {
        let trials = outcomes
            .iter()
            .enumerate()
            .map(|(i, &c)| TrialRecord::new(student, "k", Direction::Forward, QuestionFormat::cued_recall(), 100 + 60 * i as i64, c).unwrap())
            .collect();
        KcHistory::from_trials(trials).unwrap()
    }

    #[test]
    fn constant_predictor_report() {
        let hs = vec![history("a", &[true, false, true]), history("b", &[false, true])];
        let r = evaluate_model(&ConstantModel(0.5), &hs, &EvaluateOptions::default()).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.n, 5);
        assert_eq!(r.source, Source::WriteLike);
        assert_eq!(r.segments.iter().map(|s| s.n).sum::<usize>(), 5);
        let labels: Vec<&str> = r.segments.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, vec!["0", "1", ">=2"]);
        // ">=2" holds one trial: single class, no AUC
        assert_eq!(r.segments[2].auc, None);
        assert!((r.mean_log_likelihood + core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn log_likelihood_examples() {
        let hs = vec![history("a", &[true, true, true, false])];
        assert!((log_likelihood(&ConstantModel(0.75), &hs).unwrap() - -0.5623351446188083).abs() < 1e-12);
        assert!((log_likelihood(&ConstantModel(0.5), &hs).unwrap() + core::f64::consts::LN_2).abs() < 1e-12);
    }

    struct Oracle;
    impl CausalModel for Oracle {
        type State = ();
        fn initial_state(&self) {}
        fn predict(&self, _: &(), q: &Query) -> Result<Prediction> {
            // cheats by reading the outcome from the timestamp parity
            Ok(Prediction::informed(if q.now % 2 == 0 { 1.0 } else { 0.0 }))
        }
        fn observe(&self, _: &mut (), _: &TrialRecord) -> Result<()> {
            Ok(())
        }
    }

    #[test]
    fn perfect_predictor_has_near_zero_loss() {
        let trials = (0..6)
            .map(|i| TrialRecord::new("a", "k", Direction::Forward, QuestionFormat::cued_recall(), 10 + i, i % 2 == 0).unwrap())
            .collect();
        let hs = vec![KcHistory::from_trials(trials).unwrap()];
        let ll = log_likelihood(&Oracle, &hs).unwrap();
        assert!(ll > -1e-8 && ll <= 0.0);
    }

    struct OutOfRange;
    impl CausalModel for OutOfRange {
        type State = ();
        fn initial_state(&self) {}
        fn predict(&self, _: &(), _: &Query) -> Result<Prediction> {
            Ok(Prediction::informed(1.5))
        }
        fn observe(&self, _: &mut (), _: &TrialRecord) -> Result<()> {
            Ok(())
        }
    }

    #[test]
    fn out_of_range_prediction_names_trial() {
        let err = evaluate_model(&OutOfRange, &[history("a", &[true, false])], &EvaluateOptions::default()).unwrap_err();
        match err {
            Error::OutOfRange { value, context } => {
                assert_eq!(value, 1.5);
                assert!(context.contains("trial 0 of (a, k)"), "{context}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_is_by_student_and_seeded() {
        let hs: Vec<KcHistory> = (0..20).map(|i| history(&alloc::format!("s{i}"), &[true])).collect();
        let (train, test) = train_test_split(&hs, 0.25, 3);
        assert_eq!(test.len(), 5);
        assert_eq!(train.len(), 15);
        assert_eq!(train_test_split(&hs, 0.25, 3).1, test);
    }

    #[test]
    fn calibration_bins_cover_all() {
        let scored: Vec<ScoredTrial> = (0..10)
            .map(|i| ScoredTrial {
                predicted: i as f64 / 10.0 + 0.05,
                actual: i >= 5,
                past_trial_count: 0,
                format: QuestionFormat::cued_recall(),
                source: Source::WriteLike,
            })
            .collect();
        let bins = calibration(&scored, 5);
        assert_eq!(bins.len(), 5);
        assert_eq!(bins.iter().map(|b| b.n).sum::<usize>(), 10);
        assert_eq!(bins[4].empirical_rate, 1.0);
    }
}
