//! Comparison query strategies: random sampling, BADGE, CAL and ALPS.
//!
//! The randomized strategies sort their input by instance id before drawing,
//! so a selection depends on the seed and the ids, never on storage order.

mod alps;
mod badge;
mod cal;
mod kmeans;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Instance, Pool};
use crate::error::{Error, Result};
use crate::predictor::{EmbeddingKind, PredictionBundle};

pub use alps::alps_query;
pub use badge::badge_query;
pub use cal::{cal_query, cal_scores, kl_divergence, smooth, CAL_EPSILON, DEFAULT_KNN};
pub use kmeans::{kmeans, KMeans, KMEANS_MAX_ITER, KMEANS_TOLERANCE};

/// Row vectors keyed by instance id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    kind: EmbeddingKind,
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl EmbeddingMatrix {
    pub fn new(kind: EmbeddingKind, ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::LengthMismatch(ids.len(), rows.len()));
        }
        if let Some(first) = rows.first() {
            if let Some(bad) = rows.iter().find(|r| r.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    kind: kind.to_string(),
                    expected: first.len(),
                    actual: bad.len(),
                });
            }
        }
        Ok(EmbeddingMatrix { kind, ids, rows })
    }

    /// Collects `kind` from bundles predicted for `instances`.
    pub fn from_bundles(
        kind: EmbeddingKind,
        instances: &[&Instance],
        bundles: &[PredictionBundle],
    ) -> Result<Self> {
        if instances.len() != bundles.len() {
            return Err(Error::LengthMismatch(instances.len(), bundles.len()));
        }
        let rows = bundles
            .iter()
            .map(|b| {
                b.embedding(kind)
                    .map(<[f64]>::to_vec)
                    .ok_or_else(|| Error::Protocol(format!("bundle without {kind} embedding")))
            })
            .collect::<Result<_>>()?;
        Self::new(kind, instances.iter().map(|i| i.id.clone()).collect(), rows)
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Same rows, reordered by ascending id.
    pub fn sorted_by_id(&self) -> EmbeddingMatrix {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.ids[a].cmp(&self.ids[b]));
        EmbeddingMatrix {
            kind: self.kind,
            ids: order.iter().map(|&i| self.ids[i].clone()).collect(),
            rows: order.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Uniform sample of `k` ids without replacement.
pub fn random_sample(ids: &[String], k: usize, seed: u64) -> Result<Vec<String>> {
    if k > ids.len() {
        return Err(Error::KTooLarge {
            k,
            available: ids.len(),
        });
    }
    let mut sorted: Vec<&String> = ids.iter().collect();
    sorted.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, sorted.len(), k)
        .into_iter()
        .map(|i| sorted[i].clone())
        .collect())
}

/// Uniform sample of `k` unlabelled ids.
pub fn random_query(pool: &Pool, k: usize, seed: u64) -> Result<Vec<String>> {
    let ids: Vec<String> = pool.unlabelled_ids().map(String::from).collect();
    random_sample(&ids, k, seed)
}
