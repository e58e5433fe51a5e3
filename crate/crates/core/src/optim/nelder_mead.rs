use alloc::vec::Vec;

use super::{OptimizerConfig, TraceEntry};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best vertex after each iteration; values are non-increasing.
    pub trace: Vec<TraceEntry>,
}

/// Minimizes `objective` with the reflect/expand/contract/shrink simplex
/// method.
///
/// The initial simplex is `init` plus one vertex per coordinate, offset by
/// `max(s, s * |x_i|)` with `s = config.initial_scale`. Non-finite values met
/// after initialization are treated as `+inf`, so infeasible regions can be
/// signalled by returning `f64::INFINITY`. Terminates when the spread of
/// vertex values falls below `config.tolerance` or after
/// `config.max_iterations` iterations.
pub fn nelder_mead<F>(mut objective: F, init: &[f64], config: &OptimizerConfig) -> Result<NelderMeadOutcome>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate()?;
    let n = init.len();
    if n == 0 {
        return Err(Error::InvalidConfig("nelder-mead needs at least one parameter".into()));
    }
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(init, &mut evaluations);
    if !v0.is_finite() {
        return Err(Error::NonFinite("objective at initial simplex vertex 0".into()));
    }
    simplex.push((init.to_vec(), v0));
    for i in 0..n {
        let mut x = init.to_vec();
        x[i] += (config.initial_scale * libm::fabs(x[i])).max(config.initial_scale);
        let v = eval(&x, &mut evaluations);
        if !v.is_finite() {
            return Err(Error::NonFinite(alloc::format!("objective at initial simplex vertex {}", i + 1)));
        }
        simplex.push((x, v));
    }

    let mut trace = Vec::new();
    sort(&mut simplex);
    trace.push(TraceEntry { iteration: 0, value: simplex[0].1, params: simplex[0].0.clone() });

    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        if simplex[n].1 - simplex[0].1 < config.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = alloc::vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        let worst = simplex[n].clone();
        let along = |coef: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + coef * (c - w)).collect()
        };

        let reflected = along(config.reflection);
        let fr = eval(&reflected, &mut evaluations);
        if fr < simplex[0].1 {
            let expanded = along(config.reflection * config.expansion);
            let fe = eval(&expanded, &mut evaluations);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (contracted, fc, accepted) = if fr < worst.1 {
                let c = along(config.reflection * config.contraction);
                let fc = eval(&c, &mut evaluations);
                (c, fc, fc <= fr)
            } else {
                let c = along(-config.contraction);
                let fc = eval(&c, &mut evaluations);
                (c, fc, fc < worst.1)
            };
            if accepted {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> =
                        best.iter().zip(&vertex.0).map(|(b, v)| b + config.shrink * (v - b)).collect();
                    let v = eval(&x, &mut evaluations);
                    *vertex = (x, v);
                }
            }
        }
        sort(&mut simplex);
        trace.push(TraceEntry { iteration: iterations, value: simplex[0].1, params: simplex[0].0.clone() });
    }

    let (x, value) = simplex.swap_remove(0);
    Ok(NelderMeadOutcome { x, value, iterations, evaluations, converged, trace })
}

// Stable sort keeps the older vertex first on ties, so the best value never regresses.
fn sort(simplex: &mut [(Vec<f64>, f64)]) {
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
}
