use super::{squared_distance, EmbeddingMatrix};
use crate::committee::{select_topk, DisagreementScore};
use crate::data::Label;
use crate::error::{Error, Result};
use crate::predictor::LabelDistribution;

/// Neighbour count when none is configured.
pub const DEFAULT_KNN: usize = 10;
/// Additive smoothing applied to both sides of every KL divergence.
pub const CAL_EPSILON: f64 = 1e-8;

/// `(d + ε) / (1 + 3ε)`.
pub fn smooth(d: [f64; Label::COUNT]) -> [f64; Label::COUNT] {
    let z = 1.0 + Label::COUNT as f64 * CAL_EPSILON;
    d.map(|p| (p + CAL_EPSILON) / z)
}

/// KL(p ‖ q) in nats.
pub fn kl_divergence(p: &[f64; Label::COUNT], q: &[f64; Label::COUNT]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum()
}

/// Contrastive score of every unlabelled row: the mean, over its `knn_k`
/// nearest labelled rows (Euclidean, ties by id), of
/// KL(smoothed one-hot neighbour label ‖ smoothed predictive distribution).
pub fn cal_scores(
    labelled: &EmbeddingMatrix,
    labels: &[Label],
    unlabelled: &EmbeddingMatrix,
    probas: &[LabelDistribution],
    knn_k: usize,
) -> Result<Vec<DisagreementScore>> {
    if labelled.is_empty() {
        return Err(Error::WarmStartRequired);
    }
    if labels.len() != labelled.len() {
        return Err(Error::LengthMismatch(labelled.len(), labels.len()));
    }
    if probas.len() != unlabelled.len() {
        return Err(Error::LengthMismatch(unlabelled.len(), probas.len()));
    }
    if knn_k == 0 || knn_k > labelled.len() {
        return Err(Error::KnnTooLarge {
            knn_k,
            labelled: labelled.len(),
        });
    }
    if !unlabelled.is_empty() && unlabelled.dim() != labelled.dim() {
        return Err(Error::DimensionMismatch {
            kind: labelled.kind().to_string(),
            expected: labelled.dim(),
            actual: unlabelled.dim(),
        });
    }
    let references: Vec<[f64; Label::COUNT]> = Label::ALL
        .iter()
        .map(|l| {
            let mut one_hot = [0.0; Label::COUNT];
            one_hot[l.index()] = 1.0;
            smooth(one_hot)
        })
        .collect();

    let mut order: Vec<(f64, usize)> = Vec::with_capacity(labelled.len());
    Ok(unlabelled
        .rows()
        .iter()
        .zip(unlabelled.ids())
        .zip(probas)
        .map(|((row, id), proba)| {
            order.clear();
            order.extend(
                labelled
                    .rows()
                    .iter()
                    .enumerate()
                    .map(|(j, l)| (squared_distance(row, l), j)),
            );
            order.sort_by(|a, b| {
                a.0.total_cmp(&b.0)
                    .then_with(|| labelled.ids()[a.1].cmp(&labelled.ids()[b.1]))
            });
            let predictive = smooth(proba.0);
            let total: f64 = order[..knn_k]
                .iter()
                .map(|&(_, j)| kl_divergence(&references[labels[j].index()], &predictive))
                .sum();
            DisagreementScore {
                id: id.clone(),
                score: total / knn_k as f64,
            }
        })
        .collect())
}

/// CAL: the `k` unlabelled instances whose predictions diverge most from
/// their labelled neighbours.
pub fn cal_query(
    labelled: &EmbeddingMatrix,
    labels: &[Label],
    unlabelled: &EmbeddingMatrix,
    probas: &[LabelDistribution],
    k: usize,
    knn_k: usize,
) -> Result<Vec<String>> {
    if k > unlabelled.len() {
        return Err(Error::KTooLarge {
            k,
            available: unlabelled.len(),
        });
    }
    let scores = cal_scores(labelled, labels, unlabelled, probas, knn_k)?;
    select_topk(&scores, k)
}
