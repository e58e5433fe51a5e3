use alloc::format;
use alloc::vec::Vec;

use super::{Matrix, ObjectiveEvaluation, OptimizerConfig, TraceEntry};
use crate::error::{Error, Result};

const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    /// Inverse Hessian at `x`.
    pub covariance: Matrix,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

/// Minimizes `objective` by damped Newton steps `x <- x - t * H^-1 g`.
///
/// `t` starts at 1 and is halved (at most 30 times) while the candidate is
/// worse than the current point or non-finite. Stops once the accepted step
/// moves every coordinate by less than `config.tolerance`. The objective must
/// return a gradient and Hessian at every point.
///
/// Hitting the iteration cap returns the best point with `converged = false`.
pub fn newton_raphson<F>(mut objective: F, init: &[f64], config: &OptimizerConfig) -> Result<NewtonOutcome>
where
    F: FnMut(&[f64]) -> Result<ObjectiveEvaluation>,
{
    config.validate()?;
    let dim = init.len();
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("newton initial point".into()));
    }
    let mut x = init.to_vec();
    let mut current = evaluate(&mut objective, &x, dim)?;
    if !current.value.is_finite() {
        return Err(Error::NonFinite("objective at newton initial point".into()));
    }
    let mut trace = Vec::new();
    trace.push(TraceEntry { iteration: 0, value: current.value, params: x.clone() });

    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        let (g, h) = derivatives(&current)?;
        let step = h.solve(g)?;
        if step.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularHessian);
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi - t * si).collect();
            let eval = evaluate(&mut objective, &candidate, dim)?;
            if eval.value.is_finite() && eval.value <= current.value {
                accepted = Some((candidate, eval));
                break;
            }
            t *= 0.5;
        }

        let max_step = step.iter().fold(0.0f64, |m, s| m.max(libm::fabs(t * s)));
        match accepted {
            Some((candidate, eval)) => {
                x = candidate;
                current = eval;
                trace.push(TraceEntry { iteration: iterations, value: current.value, params: x.clone() });
                if max_step < config.tolerance {
                    converged = true;
                    break;
                }
            }
            None => {
                // No halving improves the objective: numerical floor reached.
                converged = max_step < config.tolerance.max(1e-6);
                break;
            }
        }
    }

    let (_, h) = derivatives(&current)?;
    let covariance = h.inverse()?;
    Ok(NewtonOutcome { x, value: current.value, covariance, iterations, converged, trace })
}

fn evaluate<F>(objective: &mut F, x: &[f64], dim: usize) -> Result<ObjectiveEvaluation>
where
    F: FnMut(&[f64]) -> Result<ObjectiveEvaluation>,
{
    let eval = objective(x)?;
    eval.check_dim(dim)?;
    Ok(eval)
}

fn derivatives(eval: &ObjectiveEvaluation) -> Result<(&[f64], &Matrix)> {
    match (&eval.gradient, &eval.hessian) {
        (Some(g), Some(h)) => {
            if !h.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("derivatives at value {}", eval.value)));
            }
            Ok((g.as_slice(), h))
        }
        _ => Err(Error::InvalidConfig("newton objective must supply gradient and hessian".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn quadratic(x: &[f64]) -> Result<ObjectiveEvaluation> {
        let d = x[0] - 3.0;
        Ok(ObjectiveEvaluation::full(d * d, vec![2.0 * d], Matrix::from_rows(&[vec![2.0]])))
    }

    #[test]
    fn quadratic_in_one_step() {
        let out = newton_raphson(quadratic, &[0.0], &OptimizerConfig::default()).unwrap();
        assert_eq!(out.x, vec![3.0]);
        // first iteration lands exactly; second confirms a zero step
        assert_eq!(out.trace[1].params, vec![3.0]);
        assert!(out.converged);
        assert!((out.covariance[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn singular_hessian_is_an_error() {
        let f = |x: &[f64]| {
            let s = x[0] + x[1] - 1.0;
            Ok(ObjectiveEvaluation::full(
                s * s,
                vec![2.0 * s, 2.0 * s],
                Matrix::from_rows(&[vec![2.0, 2.0], vec![2.0, 2.0]]),
            ))
        };
        assert_eq!(newton_raphson(f, &[0.0, 0.0], &OptimizerConfig::default()).unwrap_err(), Error::SingularHessian);
    }

    #[test]
    fn non_finite_init_is_an_error() {
        let f = |_: &[f64]| Ok(ObjectiveEvaluation::full(f64::NAN, vec![0.0], Matrix::identity(1)));
        assert!(matches!(newton_raphson(f, &[0.0], &OptimizerConfig::default()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn step_halving_never_worsens() {
        // f(x) = sqrt(1 + x^2) has Newton step -x(1+x^2), which overshoots for |x| > 1.
        let f = |x: &[f64]| {
            let v = libm::sqrt(1.0 + x[0] * x[0]);
            let g = x[0] / v;
            let h = 1.0 / (v * v * v);
            Ok(ObjectiveEvaluation::full(v, vec![g], Matrix::from_rows(&[vec![h]])))
        };
        let out = newton_raphson(f, &[2.0], &OptimizerConfig::default()).unwrap();
        assert!(out.x[0].abs() < 1e-6);
        for w in out.trace.windows(2) {
            assert!(w[1].value <= w[0].value);
        }
    }
}
