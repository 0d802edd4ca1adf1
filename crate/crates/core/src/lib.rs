//! Pool-based active learning for three-way claim verification.
//!
//! The centrepiece is a weighted query-by-committee strategy: committee
//! members vote in proportion to their size, instances are ranked by the
//! entropy of the pooled hard votes ([`committee`]), and the labelled set can
//! be rebalanced by repeating minority-class instances in disagreement order
//! ([`oversample`]). Random, BADGE, CAL and ALPS baselines live in
//! [`baselines`]; [`runner`] drives the budget loop.
//!
//! Committee members implement [`predictor::Predictor`]. The bundled
//! [`predictor::MockPredictor`] is a seeded naive-Bayes model that produces
//! every signal the strategies need, so whole experiments run in seconds;
//! [`predictor::SidecarClient`] attaches real language models served over a
//! line-delimited JSON protocol.
//!
//! Runnable walkthroughs for each capability are in `examples/`.

pub mod baselines;
pub mod committee;
pub mod data;
pub mod error;
pub mod metrics;
pub mod oversample;
pub mod predictor;
pub mod retrieval;
pub mod runner;
pub mod synthetic;
pub mod text;

pub use data::{GoldOracle, Instance, Label, LabelledEntry, Oracle, Partition, Pool, PoolStats};
pub use error::{Error, Result};
