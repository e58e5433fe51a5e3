//! Multiple logistic regression over trial-history features.
//!
//! Past trials are indexed reverse-chronologically (trial 1 is the most
//! recent). Five feature groups feed the logit:
//!
//! * `a`: correctness of trials `1..=n`
//! * `b`: `ln(now - t_j)` for trials `j = 1..=m`
//! * `c`: `ln(t_{k+1} - t_{k+2})` for `k = 1..=l`
//! * `d`: share of past trials studied in the query direction
//! * `e`: total trial count and `ln(now - t_first)`
//!
//! Terms whose trial index exceeds the history are omitted, and every
//! elapsed time is clamped to at least one second before taking the log.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::{Direction, KcHistory, TrialRecord};
use crate::error::{Error, Result};
use crate::math::{self, CompensatedSum};
use crate::optim::{newton_raphson, Matrix, ObjectiveEvaluation, OptimizerConfig, TraceEntry};
use crate::replay::{CausalModel, Prediction, Query};

/// Look-back window sizes for the correctness, recency and spacing families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Windows {
    pub n: usize,
    pub m: usize,
    pub l: usize,
}

impl Windows {
    pub const fn new(n: usize, m: usize, l: usize) -> Self {
        Self { n, m, l }
    }

    /// Windows of the deployed coefficient table.
    pub const PUBLISHED: Windows = Windows::new(6, 5, 3);

    /// Number of coefficients including the intercept.
    pub fn coefficient_count(&self) -> usize {
        1 + self.n + self.m + self.l + 3
    }

    /// Windows a history of `h` trials can actually fill.
    pub fn truncated_to(&self, h: usize) -> Windows {
        Windows::new(self.n.min(h), self.m.min(h), self.l.min(h.saturating_sub(2)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlrParams {
    pub beta: f64,
    pub w_c: Vec<f64>,
    pub w_t: Vec<f64>,
    pub w_s: Vec<f64>,
    pub w_r0: f64,
    pub w_r1: f64,
    pub w_r2: f64,
}

impl MlrParams {
    /// The production coefficients (windows 6, 5, 3).
    pub fn published() -> Self {
        Self {
            beta: 0.4742,
            w_c: vec![1.8193, 0.8491, 0.7068, 0.4325, 0.4940, 0.3857],
            w_t: vec![-0.0958, -0.0778, -0.0535, -0.0257, -0.0238],
            w_s: vec![0.0657, 0.0285, 0.0325],
            w_r0: 0.2126,
            w_r1: -0.0719,
            w_r2: 0.0407,
        }
    }

    pub fn zeros(windows: Windows) -> Self {
        Self::from_vector(windows, &vec![0.0; windows.coefficient_count()])
    }

    pub fn windows(&self) -> Windows {
        Windows::new(self.w_c.len(), self.w_t.len(), self.w_s.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_vector().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("MLR coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Coefficients in design-column order: intercept, `w_c`, `w_t`, `w_s`,
    /// `w_r0`, `w_r1`, `w_r2`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.windows().coefficient_count());
        v.push(self.beta);
        v.extend_from_slice(&self.w_c);
        v.extend_from_slice(&self.w_t);
        v.extend_from_slice(&self.w_s);
        v.extend_from_slice(&[self.w_r0, self.w_r1, self.w_r2]);
        v
    }

    pub fn from_vector(windows: Windows, v: &[f64]) -> Self {
        assert_eq!(v.len(), windows.coefficient_count(), "coefficient vector length");
        let (n, m, l) = (windows.n, windows.m, windows.l);
        let mut at = 1;
        let mut take = |len: usize| {
            let s = v[at..at + len].to_vec();
            at += len;
            s
        };
        let w_c = take(n);
        let w_t = take(m);
        let w_s = take(l);
        let tail = take(3);
        Self { beta: v[0], w_c, w_t, w_s, w_r0: tail[0], w_r1: tail[1], w_r2: tail[2] }
    }

    /// Keeps the leading coefficients of each family.
    pub fn truncated(&self, windows: Windows) -> Self {
        let w = self.windows();
        assert!(windows.n <= w.n && windows.m <= w.m && windows.l <= w.l, "can only shrink windows");
        Self {
            beta: self.beta,
            w_c: self.w_c[..windows.n].to_vec(),
            w_t: self.w_t[..windows.m].to_vec(),
            w_s: self.w_s[..windows.l].to_vec(),
            w_r0: self.w_r0,
            w_r1: self.w_r1,
            w_r2: self.w_r2,
        }
    }

    pub fn coefficient_names(windows: Windows) -> Vec<String> {
        let mut names = vec![String::from("beta")];
        names.extend((1..=windows.n).map(|i| format!("w_c{i}")));
        names.extend((1..=windows.m).map(|j| format!("w_t{j}")));
        names.extend((1..=windows.l).map(|k| format!("w_s{k}")));
        names.extend(["w_r0", "w_r1", "w_r2"].map(String::from));
        names
    }
}

/// Raw feature components for one prediction; weights are applied in
/// [`predict_mlr`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub windows: Windows,
    /// `c_i` for the available trials `1..=min(n, h)`.
    pub correctness: Vec<f64>,
    /// `ln(now - t_j)` for `j = 1..=min(m, h)`.
    pub log_recency: Vec<f64>,
    /// `ln(t_{k+1} - t_{k+2})` for the available `k = 1..=l`.
    pub log_spacing: Vec<f64>,
    /// `count(same direction) / count(all)`, 0 for an empty history.
    pub same_direction_ratio: f64,
    pub trial_count: f64,
    /// `ln(now - t_first)`, 0 for an empty history.
    pub log_since_first: f64,
}

impl FeatureVector {
    /// Design row `[1, c.., b.., s.., d, count, ln_first]`, zero-padded to the
    /// full windows.
    pub fn design_row(&self) -> Vec<f64> {
        let w = self.windows;
        let mut row = Vec::with_capacity(w.coefficient_count());
        row.push(1.0);
        pad_into(&mut row, &self.correctness, w.n);
        pad_into(&mut row, &self.log_recency, w.m);
        pad_into(&mut row, &self.log_spacing, w.l);
        row.extend_from_slice(&[self.same_direction_ratio, self.trial_count, self.log_since_first]);
        row
    }

    /// The weighted group sums `[a, b, c, d, e]`.
    pub fn group_sums(&self, params: &MlrParams) -> [f64; 5] {
        let dot = |x: &[f64], w: &[f64]| x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        [
            dot(&self.correctness, &params.w_c),
            dot(&self.log_recency, &params.w_t),
            dot(&self.log_spacing, &params.w_s),
            params.w_r0 * self.same_direction_ratio,
            params.w_r1 * self.trial_count + params.w_r2 * self.log_since_first,
        ]
    }

    fn is_finite(&self) -> bool {
        self.correctness.iter().chain(&self.log_recency).chain(&self.log_spacing).all(|v| v.is_finite())
            && self.same_direction_ratio.is_finite()
            && self.trial_count.is_finite()
            && self.log_since_first.is_finite()
    }
}

fn pad_into(row: &mut Vec<f64>, values: &[f64], len: usize) {
    row.extend_from_slice(&values[..values.len().min(len)]);
    row.extend(core::iter::repeat_n(0.0, len.saturating_sub(values.len())));
}

/// Extracts features from `past` (ascending time order) for a query at `now`.
///
/// A query at the same second as the last trial is allowed; its elapsed times
/// clamp to one second. A query earlier than the last trial is an error.
pub fn extract_features(
    past: &[TrialRecord],
    now: i64,
    query_direction: Direction,
    windows: Windows,
) -> Result<FeatureVector> {
    if let Some(last) = past.last() {
        if now < last.timestamp_s {
            return Err(Error::Precondition(format!(
                "prediction time {now} precedes last trial at {}",
                last.timestamp_s
            )));
        }
    }
    // reverse-chronological: recent[0] is trial 1
    let recent = past.iter().rev();
    let correctness = recent.clone().take(windows.n).map(|t| if t.correct { 1.0 } else { 0.0 }).collect();
    let log_recency = recent.clone().take(windows.m).map(|t| math::ln_seconds(now - t.timestamp_s)).collect();
    let times: Vec<i64> = recent.map(|t| t.timestamp_s).collect();
    // term k (1-based) spans trials k+1 and k+2, i.e. times[k] and times[k+1]
    let log_spacing = (1..=windows.l)
        .take_while(|k| k + 1 < times.len())
        .map(|k| math::ln_seconds(times[k] - times[k + 1]))
        .collect();
    let (same_direction_ratio, trial_count, log_since_first) = match past.first() {
        None => (0.0, 0.0, 0.0),
        Some(first) => {
            let same = past.iter().filter(|t| t.direction == query_direction).count();
            (
                same as f64 / past.len() as f64,
                past.len() as f64,
                math::ln_seconds(now - first.timestamp_s),
            )
        }
    };
    Ok(FeatureVector { windows, correctness, log_recency, log_spacing, same_direction_ratio, trial_count, log_since_first })
}

/// `σ(β + a + b + c + d + e)`.
pub fn predict_mlr(params: &MlrParams, features: &FeatureVector) -> Result<f64> {
    if params.windows() != features.windows {
        return Err(Error::Precondition(format!(
            "features extracted with windows {:?}, parameters use {:?}",
            features.windows,
            params.windows()
        )));
    }
    if !features.is_finite() {
        return Err(Error::NonFinite("MLR feature vector".into()));
    }
    let logit = params.beta + features.group_sums(params).iter().sum::<f64>();
    if !logit.is_finite() {
        return Err(Error::NonFinite("MLR logit".into()));
    }
    Ok(math::sigmoid(logit))
}

/// MLR as a causal model; its state is the list of past trials.
#[derive(Debug, Clone, PartialEq)]
pub struct MlrModel {
    pub params: MlrParams,
}

impl MlrModel {
    pub fn new(params: MlrParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl CausalModel for MlrModel {
    type State = Vec<TrialRecord>;

    fn initial_state(&self) -> Self::State {
        Vec::new()
    }

    fn predict(&self, past: &Self::State, query: &Query) -> Result<Prediction> {
        let features = extract_features(past, query.now, query.direction, self.params.windows())?;
        let p = predict_mlr(&self.params, &features)?;
        Ok(Prediction { probability: p, cold_start: past.is_empty() })
    }

    fn observe(&self, past: &mut Self::State, trial: &TrialRecord) -> Result<()> {
        past.push(trial.clone());
        Ok(())
    }
}

/// One row of a fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub value: f64,
    pub std_err: f64,
    pub z: f64,
    pub p_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlrFit {
    pub params: MlrParams,
    /// Standard errors in design-column order.
    pub std_errors: Vec<f64>,
    pub covariance: Matrix,
    pub log_likelihood: f64,
    pub samples: usize,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

const Z_975: f64 = 1.959963984540054;

/// Coefficient magnitude treated as divergence; `σ(25)` is within 1.4e-11 of 1.
const SEPARATION_LIMIT: f64 = 25.0;

impl MlrFit {
    pub fn coefficients(&self) -> Vec<CoefficientRow> {
        let names = MlrParams::coefficient_names(self.params.windows());
        names
            .into_iter()
            .zip(self.params.to_vector())
            .zip(&self.std_errors)
            .map(|((name, value), &se)| {
                let z = value / se;
                CoefficientRow {
                    name,
                    value,
                    std_err: se,
                    z,
                    p_value: math::two_sided_p(z),
                    ci_low: value - Z_975 * se,
                    ci_high: value + Z_975 * se,
                }
            })
            .collect()
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.coefficients().iter().map(|r| r.p_value).collect()
    }
}

/// Maximum-likelihood fit by Newton-Raphson with step halving.
///
/// Starts from `init` (zeros when absent). Standard errors come from the
/// inverse observed information at the optimum.
pub fn fit_mlr(
    dataset: &[(FeatureVector, bool)],
    windows: Windows,
    init: Option<&MlrParams>,
    config: &OptimizerConfig,
) -> Result<MlrFit> {
    let rows: Vec<Vec<f64>> = dataset
        .iter()
        .map(|(f, _)| {
            if f.windows != windows {
                return Err(Error::Precondition(format!(
                    "feature windows {:?} differ from fit windows {windows:?}",
                    f.windows
                )));
            }
            if !f.is_finite() {
                return Err(Error::NonFinite("MLR training features".into()));
            }
            Ok(f.design_row())
        })
        .collect::<Result<_>>()?;
    let labels: Vec<bool> = dataset.iter().map(|(_, y)| *y).collect();
    let x0 = match init {
        Some(p) if p.windows() != windows => {
            return Err(Error::Precondition(format!(
                "initial parameters have windows {:?}, fit uses {windows:?}",
                p.windows()
            )))
        }
        Some(p) => Some(p.to_vector()),
        None => None,
    };
    let fit = fit_logistic(&rows, &labels, x0.as_deref(), config)?;
    Ok(MlrFit {
        params: MlrParams::from_vector(windows, &fit.coefficients),
        std_errors: fit.std_errors,
        covariance: fit.covariance,
        log_likelihood: fit.log_likelihood,
        samples: rows.len(),
        iterations: fit.iterations,
        converged: fit.converged,
        trace: fit.trace,
    })
}

/// Result of a plain logistic-regression fit on a design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub covariance: Matrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

/// Maximum-likelihood logistic regression of `labels` on the rows of a
/// design matrix (include a constant column for an intercept).
///
/// Diverging coefficients are reported as [`Error::Separation`]; an exactly
/// singular information matrix as [`Error::SingularHessian`].
pub fn fit_logistic(
    rows: &[Vec<f64>],
    labels: &[bool],
    init: Option<&[f64]>,
    config: &OptimizerConfig,
) -> Result<LogisticFit> {
    if rows.is_empty() {
        return Err(Error::Precondition("training set is empty".into()));
    }
    if rows.len() != labels.len() {
        return Err(Error::Precondition(format!("{} rows for {} labels", rows.len(), labels.len())));
    }
    if !labels.iter().any(|&y| y) {
        return Err(Error::SingleClass { missing: "correct" });
    }
    if labels.iter().all(|&y| y) {
        return Err(Error::SingleClass { missing: "incorrect" });
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Precondition("design rows differ in length".into()));
    }
    let x0 = match init {
        Some(v) if v.len() == dim => v.to_vec(),
        Some(v) => return Err(Error::Precondition(format!("initial vector has {} entries, design has {dim}", v.len()))),
        None => vec![0.0; dim],
    };

    let mut furthest = 0.0f64;
    let objective = |w: &[f64]| {
        furthest = w.iter().fold(furthest, |m, v| m.max(libm::fabs(*v)));
        Ok(negative_log_likelihood(rows, labels, w))
    };
    let outcome = match newton_raphson(objective, &x0, config) {
        Ok(o) => o,
        Err(Error::SingularHessian) if furthest > SEPARATION_LIMIT => {
            return Err(Error::Separation(format!("|coefficient| reached {furthest:.1}")))
        }
        Err(e) => return Err(e),
    };
    let max_coef = outcome.x.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    if max_coef > SEPARATION_LIMIT {
        return Err(Error::Separation(format!("|coefficient| reached {max_coef:.1}")));
    }
    let std_errors = outcome.covariance.diagonal().iter().map(|v| math::sqrt(v.max(0.0))).collect();
    Ok(LogisticFit {
        coefficients: outcome.x,
        std_errors,
        covariance: outcome.covariance,
        log_likelihood: -outcome.value,
        iterations: outcome.iterations,
        converged: outcome.converged,
        trace: outcome.trace,
    })
}

fn negative_log_likelihood(rows: &[Vec<f64>], labels: &[bool], w: &[f64]) -> ObjectiveEvaluation {
    let dim = w.len();
    let mut value = CompensatedSum::new();
    let mut grad = vec![0.0; dim];
    let mut hess = Matrix::zeros(dim);
    for (row, &y) in rows.iter().zip(labels) {
        let eta: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum();
        // -ln σ(η) = ln(1 + e^-η); -ln(1 - σ(η)) = ln(1 + e^η)
        let nll = if y { softplus(-eta) } else { softplus(eta) };
        value.add(nll);
        let p = math::sigmoid(eta);
        let resid = p - if y { 1.0 } else { 0.0 };
        let weight = p * (1.0 - p);
        for i in 0..dim {
            if row[i] == 0.0 {
                continue;
            }
            grad[i] += resid * row[i];
            let wi = weight * row[i];
            for j in i..dim {
                hess[(i, j)] += wi * row[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            hess[(i, j)] = hess[(j, i)];
        }
    }
    ObjectiveEvaluation::full(value.value(), grad, hess)
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + math::ln_1p(math::exp(-x))
    } else {
        math::ln_1p(math::exp(x))
    }
}

/// Histories from which causal training examples are drawn: every trial is
/// one example, predicted from the trials before it.
#[derive(Debug, Clone, Default)]
pub struct MlrTrainingSet {
    histories: Vec<KcHistory>,
}

impl MlrTrainingSet {
    pub fn new(histories: Vec<KcHistory>) -> Self {
        Self { histories }
    }

    pub fn histories(&self) -> &[KcHistory] {
        &self.histories
    }

    pub fn example_count(&self) -> usize {
        self.histories.iter().map(KcHistory::len).sum()
    }

    pub fn dataset(&self, windows: Windows) -> Result<Vec<(FeatureVector, bool)>> {
        let mut out = Vec::with_capacity(self.example_count());
        for h in &self.histories {
            let trials = h.trials();
            for (i, t) in trials.iter().enumerate() {
                let f = extract_features(&trials[..i], t.timestamp_s, t.direction, windows)?;
                out.push((f, t.correct));
            }
        }
        Ok(out)
    }

    pub fn fit(&self, windows: Windows, config: &OptimizerConfig) -> Result<MlrFit> {
        fit_mlr(&self.dataset(windows)?, windows, None, config)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSelection {
    pub windows: Windows,
    pub warnings: Vec<String>,
}

/// Picks each window independently: grows it from 1 while every coefficient
/// of that family stays significant (Wald `p < alpha`), holding the other two
/// families at size 1. A failed fit at some size ends that family's search.
pub fn select_windows(
    training: &MlrTrainingSet,
    alpha: f64,
    max: Windows,
    config: &OptimizerConfig,
) -> Result<WindowSelection> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let mut warnings = Vec::new();
    let mut chosen = [0usize; 3];
    let limits = [max.n, max.m, max.l];
    let labels = ["n", "m", "l"];
    for family in 0..3 {
        for size in 1..=limits[family] {
            let mut sizes = [1usize; 3];
            sizes[family] = size;
            let windows = Windows::new(sizes[0], sizes[1], sizes[2]);
            let fit = match training.fit(windows, config) {
                Ok(f) => f,
                Err(e) => {
                    warnings.push(format!("{} = {size}: fit failed ({e})", labels[family]));
                    break;
                }
            };
            let offset = 1 + sizes[..family].iter().sum::<usize>();
            let p = fit.p_values();
            if p[offset..offset + size].iter().all(|&pv| pv < alpha) {
                chosen[family] = size;
            } else {
                break;
            }
        }
        if chosen[family] == 0 {
            warnings.push(format!(
                "{}: no significant coefficient even at size 1; family disabled",
                labels[family]
            ));
        }
    }
    Ok(WindowSelection { windows: Windows::new(chosen[0], chosen[1], chosen[2]), warnings })
}

impl core::fmt::Display for Windows {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{},{},{}", self.n, self.m, self.l)
    }
}

impl core::str::FromStr for Windows {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let parse = |p: &str| p.parse::<usize>().map_err(|_| Error::InvalidConfig(format!("bad window size {p:?}")));
        match parts.as_slice() {
            [n, m, l] => Ok(Windows::new(parse(n)?, parse(m)?, parse(l)?)),
            _ => Err(Error::InvalidConfig(format!("windows must be n,m,l; got {:?}", s.to_string()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::QuestionFormat;

    fn trial(ts: i64, dir: Direction, correct: bool) -> TrialRecord {
        TrialRecord::new("s", "k", dir, QuestionFormat::cued_recall(), ts, correct).unwrap()
    }

    #[test]
    fn empty_history_features() {
        let f = extract_features(&[], 1_000, Direction::Forward, Windows::PUBLISHED).unwrap();
        assert!(f.correctness.is_empty() && f.log_recency.is_empty() && f.log_spacing.is_empty());
        assert_eq!((f.same_direction_ratio, f.trial_count, f.log_since_first), (0.0, 0.0, 0.0));
        assert_eq!(f.group_sums(&MlrParams::published()), [0.0; 5]);
    }

    #[test]
    fn single_trial_features() {
        let f = extract_features(&[trial(940, Direction::Forward, true)], 1_000, Direction::Forward, Windows::PUBLISHED).unwrap();
        let ln60 = 4.0943445622221;
        assert_eq!(f.correctness, vec![1.0]);
        assert!((f.log_recency[0] - ln60).abs() < 1e-12);
        assert!(f.log_spacing.is_empty());
        assert_eq!(f.same_direction_ratio, 1.0);
        assert_eq!(f.trial_count, 1.0);
        assert!((f.log_since_first - ln60).abs() < 1e-12);
    }

    #[test]
    fn three_trials_give_one_spacing_term() {
        let past = [trial(100, Direction::Forward, true), trial(400, Direction::Backward, false), trial(1_000, Direction::Forward, true)];
        let f = extract_features(&past, 2_000, Direction::Backward, Windows::PUBLISHED).unwrap();
        // t_2 - t_3 = 400 - 100
        assert_eq!(f.log_spacing.len(), 1);
        assert!((f.log_spacing[0] - libm::log(300.0)).abs() < 1e-12);
        assert_eq!(f.correctness, vec![1.0, 0.0, 1.0]);
        assert!((f.same_direction_ratio - 1.0 / 3.0).abs() < 1e-15);
        assert!((f.log_since_first - libm::log(1_900.0)).abs() < 1e-12);
    }

    #[test]
    fn query_before_last_trial_rejected_and_same_second_clamped() {
        let past = [trial(100, Direction::Forward, true), trial(100, Direction::Forward, true)];
        assert!(matches!(extract_features(&past, 99, Direction::Forward, Windows::PUBLISHED), Err(Error::Precondition(_))));
        let f = extract_features(&past, 100, Direction::Forward, Windows::PUBLISHED).unwrap();
        assert_eq!(f.log_recency, vec![0.0, 0.0]);
    }

    #[test]
    fn published_predictions() {
        let p = MlrParams::published();
        let empty = extract_features(&[], 1_000, Direction::Forward, Windows::PUBLISHED).unwrap();
        assert!((predict_mlr(&p, &empty).unwrap() - 0.6163773570927845).abs() < 1e-12);
        let one = extract_features(&[trial(940, Direction::Forward, true)], 1_000, Direction::Forward, Windows::PUBLISHED).unwrap();
        let logit = p.beta + one.group_sums(&p).iter().sum::<f64>();
        assert!((logit - 2.2086016146215623).abs() < 1e-12);
        assert!((predict_mlr(&p, &one).unwrap() - 0.9010192837894162).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_predict_half() {
        let w = Windows::new(2, 2, 1);
        let f = extract_features(&[trial(10, Direction::Forward, false), trial(50, Direction::Forward, true)], 90, Direction::Forward, w).unwrap();
        assert_eq!(predict_mlr(&MlrParams::zeros(w), &f).unwrap(), 0.5);
    }

    #[test]
    fn mismatched_windows_and_nan_rejected() {
        let f = extract_features(&[], 10, Direction::Forward, Windows::new(1, 1, 1)).unwrap();
        assert!(predict_mlr(&MlrParams::published(), &f).is_err());
        let mut g = extract_features(&[trial(1, Direction::Forward, true)], 10, Direction::Forward, Windows::PUBLISHED).unwrap();
        g.log_recency[0] = f64::NAN;
        assert!(matches!(predict_mlr(&MlrParams::published(), &g), Err(Error::NonFinite(_))));
    }

    #[test]
    fn vector_layout_round_trips() {
        let p = MlrParams::published();
        assert_eq!(MlrParams::from_vector(p.windows(), &p.to_vector()), p);
        assert_eq!(MlrParams::coefficient_names(p.windows()).len(), 18);
        assert_eq!("6,5,3".parse::<Windows>().unwrap(), Windows::PUBLISHED);
        assert!("6,5".parse::<Windows>().is_err());
    }

    #[test]
    fn intercept_only_matches_closed_form() {
        let n = 1000;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![1.0]).collect();
        let labels: Vec<bool> = (0..n).map(|i| i % 10 < 7).collect();
        let fit = fit_logistic(&rows, &labels, None, &OptimizerConfig::default()).unwrap();
        let expected = libm::log(0.7 / 0.3);
        assert!((fit.coefficients[0] - expected).abs() < 1e-8);
        let se = 1.0 / libm::sqrt(n as f64 * 0.7 * 0.3);
        assert!((fit.std_errors[0] - se).abs() < 1e-8);
        assert!(fit.converged);
    }

    #[test]
    fn two_column_closed_form() {
        // intercept + binary indicator: MLE reproduces each group's rate
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..400 {
            let x = if i < 200 { 0.0 } else { 1.0 };
            let positive = if x == 0.0 { i % 4 == 0 } else { i % 5 != 0 };
            rows.push(vec![1.0, x]);
            labels.push(positive);
        }
        let fit = fit_logistic(&rows, &labels, None, &OptimizerConfig::default()).unwrap();
        let b0 = libm::log(0.25 / 0.75);
        let b1 = libm::log(0.8 / 0.2) - b0;
        assert!((fit.coefficients[0] - b0).abs() < 1e-8);
        assert!((fit.coefficients[1] - b1).abs() < 1e-8);
    }

    #[test]
    fn one_class_rejected() {
        let rows = vec![vec![1.0]; 5];
        assert_eq!(fit_logistic(&rows, &[true; 5], None, &OptimizerConfig::default()).unwrap_err(), Error::SingleClass { missing: "incorrect" });
        assert_eq!(fit_logistic(&rows, &[false; 5], None, &OptimizerConfig::default()).unwrap_err(), Error::SingleClass { missing: "correct" });
    }

    #[test]
    fn separation_detected() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64 - 9.5]).collect();
        let labels: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let err = fit_logistic(&rows, &labels, None, &OptimizerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Separation(_)), "{err:?}");
    }

    #[test]
    fn duplicated_feature_is_singular() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| {
            let x = (i % 7) as f64;
            vec![1.0, x, x]
        }).collect();
        let labels: Vec<bool> = (0..50).map(|i| (i * 37) % 11 < 5).collect();
        assert_eq!(fit_logistic(&rows, &labels, None, &OptimizerConfig::default()).unwrap_err(), Error::SingularHessian);
    }

    #[test]
    fn causal_model_flags_empty_history() {
        let m = MlrModel::new(MlrParams::published()).unwrap();
        let p = m.predict(&Vec::new(), &Query::cued_recall(Direction::Forward, 5)).unwrap();
        assert!(p.cold_start);
        assert!((p.probability - 0.6163773570927845).abs() < 1e-12);
    }
}
