//! Recall-probability modelling for flashcard study.
//!
//! Two knowledge-state models live here: a multiple logistic regression over
//! trial-history features ([`mlr`]) and a recurrent power-law forgetting model
//! ([`rpl`]). Both are trained by maximum likelihood with the in-crate
//! optimizers ([`optim`]), scored with a causal replay harness
//! ([`evaluation`]), exercised by a synthetic student simulator
//! ([`simulator`]) and drive a greedy study scheduler ([`scheduler`]).
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the CLI and the
//! HTTP session service live in the `recall-engine` companion crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod domain;
pub mod error;
pub mod evaluation;
pub mod math;
pub mod mlr;
pub mod optim;
pub mod replay;
pub mod rpl;
pub mod scheduler;
pub mod simulator;

pub use domain::{group_histories, Deck, DeckItem, Direction, FormatKind, KcHistory, QuestionFormat, TrialRecord};
pub use error::{Error, Result};
