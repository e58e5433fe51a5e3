#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use recall_core::mlr::{extract_features, predict_mlr, FeatureVector, MlrParams};
use recall_core::{Direction, QuestionFormat, TrialRecord};

/// Random trial history of 0..=12 trials with log-uniform gaps of 30 s to a week,
/// followed by a query time one more gap later.
pub fn random_history(rng: &mut ChaCha8Rng) -> (Vec<TrialRecord>, i64, Direction) {
    let len = rng.random_range(0..=12);
    let mut t = 1_000_000_000i64;
    let gap = |rng: &mut ChaCha8Rng| rng.random_range(30f64.ln()..604_800f64.ln()).exp().round() as i64;
    let mut past = Vec::with_capacity(len);
    for _ in 0..len {
        t += gap(rng);
        let dir = if rng.random_bool(0.7) { Direction::Forward } else { Direction::Backward };
        past.push(TrialRecord::new("s", "k", dir, QuestionFormat::cued_recall(), t, rng.random_bool(0.7)).unwrap());
    }
    let now = t + gap(rng);
    let query = if rng.random_bool(0.7) { Direction::Forward } else { Direction::Backward };
    (past, now, query)
}

/// `samples` feature vectors with labels drawn from `params`.
pub fn mlr_dataset(params: &MlrParams, samples: usize, seed: u64) -> Vec<(FeatureVector, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let (past, now, dir) = random_history(&mut rng);
            let f = extract_features(&past, now, dir, params.windows()).unwrap();
            let p = predict_mlr(params, &f).unwrap();
            let y = rng.random_bool(p);
            (f, y)
        })
        .collect()
}
