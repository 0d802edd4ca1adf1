//! Evaluation and corpus-analysis metrics.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::baselines::EmbeddingMatrix;
use crate::data::{Label, Partition, Pool, PoolStats};
use crate::error::{Error, Result};
use crate::text::tokenize;

/// Rows are gold labels, columns predictions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix(pub [[u64; Label::COUNT]; Label::COUNT]);

impl ConfusionMatrix {
    pub fn new(predictions: &[Label], golds: &[Label]) -> Result<Self> {
        if predictions.len() != golds.len() {
            return Err(Error::LengthMismatch(predictions.len(), golds.len()));
        }
        let mut m = ConfusionMatrix::default();
        for (p, g) in predictions.iter().zip(golds) {
            m.0[g.index()][p.index()] += 1;
        }
        Ok(m)
    }

    /// F1 of one class; 0 when the class has no true positives.
    pub fn f1(&self, label: Label) -> f64 {
        let c = label.index();
        let tp = self.0[c][c] as f64;
        let predicted: u64 = (0..Label::COUNT).map(|g| self.0[g][c]).sum();
        let actual: u64 = self.0[c].iter().sum();
        if tp == 0.0 {
            return 0.0;
        }
        let precision = tp / predicted as f64;
        let recall = tp / actual as f64;
        2.0 * precision * recall / (precision + recall)
    }
}

/// Unweighted mean of the three per-class F1 scores.
pub fn macro_f1(predictions: &[Label], golds: &[Label]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::LengthMismatch(0, golds.len()));
    }
    let m = ConfusionMatrix::new(predictions, golds)?;
    Ok(Label::ALL.iter().map(|&l| m.f1(l)).sum::<f64>() / Label::COUNT as f64)
}

/// Maas' `a² = (log N − log V) / (log N)²` with base-10 logarithms, over
/// the token multiset of the whole corpus.
pub fn maas_ttr<S: AsRef<str>>(corpus: &[S]) -> Result<f64> {
    let mut n = 0usize;
    let mut types = HashSet::new();
    for text in corpus {
        for t in tokenize(text.as_ref()) {
            n += 1;
            types.insert(t);
        }
    }
    maas_from_counts(n, types.len())
}

/// Maas' index from a token count `n` and a type count `v`.
pub fn maas_from_counts(n: usize, v: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::TooFewTokens(n));
    }
    let log_n = (n as f64).log10();
    Ok((log_n - (v as f64).log10()) / (log_n * log_n))
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
}

/// Mean cosine similarity over every (claim, evidence) combination.
pub fn avg_semantic_similarity(
    claims: &EmbeddingMatrix,
    evidences: &EmbeddingMatrix,
) -> Result<f64> {
    if claims.is_empty() || evidences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if claims.dim() != evidences.dim() {
        return Err(Error::DimensionMismatch {
            kind: claims.kind().to_string(),
            expected: claims.dim(),
            actual: evidences.dim(),
        });
    }
    // normalize once, then the pair sum factorizes into a dot of sums
    let unit = |rows: &[Vec<f64>]| -> Vec<f64> {
        let mut acc = vec![0.0; claims.dim()];
        for r in rows {
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                acc.iter_mut().zip(r).for_each(|(a, x)| *a += x / norm);
            }
        }
        acc
    };
    let c = unit(claims.rows());
    let e = unit(evidences.rows());
    let total: f64 = c.iter().zip(&e).map(|(x, y)| x * y).sum();
    Ok(total / (claims.len() * evidences.len()) as f64)
}

/// Reference double loop for [`avg_semantic_similarity`].
pub fn avg_semantic_similarity_pairwise(
    claims: &EmbeddingMatrix,
    evidences: &EmbeddingMatrix,
) -> f64 {
    let mut total = 0.0;
    for c in claims.rows() {
        for e in evidences.rows() {
            total += cosine(c, e);
        }
    }
    total / (claims.len() * evidences.len()) as f64
}

/// Labelled-pool composition at one budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionPoint {
    pub budget: usize,
    pub unique: PoolStats,
    pub weighted: PoolStats,
}

/// One point per snapshot, keyed by its labelled-id count.
pub fn distribution_trace(history: &[Pool]) -> Vec<DistributionPoint> {
    history
        .iter()
        .map(|pool| DistributionPoint {
            budget: pool.labelled().len(),
            unique: pool.stats(Partition::LabelledUnique),
            weighted: pool.stats(Partition::LabelledWeighted),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::EmbeddingKind;
    use Label::*;

    #[test]
    fn perfect_predictions() {
        let g = [Support, Neutral, Contradict, Neutral];
        assert_eq!(macro_f1(&g, &g).unwrap(), 1.0);
    }

    #[test]
    fn one_error_per_class() {
        let golds = [Support, Support, Neutral, Neutral, Contradict, Contradict];
        let preds = [Support, Neutral, Neutral, Contradict, Contradict, Support];
        assert!((macro_f1(&preds, &golds).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_predictor_on_balanced_golds() {
        let golds = [Support, Neutral, Contradict];
        let preds = [Neutral; 3];
        let f1_neutral = 2.0 * (1.0 / 3.0) * 1.0 / (1.0 / 3.0 + 1.0);
        assert!((macro_f1(&preds, &golds).unwrap() - f1_neutral / 3.0).abs() < 1e-12);
        assert!((macro_f1(&preds, &golds).unwrap() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn absent_class_scores_zero() {
        let g = [Support, Support];
        assert!((macro_f1(&g, &g).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(macro_f1(&[Support], &[]).is_err());
        assert!(macro_f1(&[], &[]).is_err());
    }

    #[test]
    fn maas_values() {
        assert_eq!(maas_ttr(&["a b c d"]).unwrap(), 0.0);
        let expected = (2.0 - 50f64.log10()) / 4.0;
        assert!((maas_from_counts(100, 50).unwrap() - expected).abs() < 1e-15);
        assert!((maas_from_counts(100, 50).unwrap() - 0.0752575).abs() < 1e-6);
        assert!(matches!(maas_ttr(&["one"]), Err(Error::TooFewTokens(1))));
        let text: Vec<String> = (0..100).map(|i| format!("w{}", i % 50)).collect();
        let joined = text.join(" ");
        assert!((maas_ttr(&[joined]).unwrap() - expected).abs() < 1e-15);
    }

    fn m(rows: Vec<Vec<f64>>) -> EmbeddingMatrix {
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        EmbeddingMatrix::new(EmbeddingKind::Representation, ids, rows).unwrap()
    }

    #[test]
    fn similarity_values() {
        let c = m(vec![vec![1.0, 0.0]]);
        let e = m(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!((avg_semantic_similarity(&c, &e).unwrap() - 0.5).abs() < 1e-15);
        let same = m(vec![vec![0.3, 0.4]; 3]);
        assert!((avg_semantic_similarity(&same, &same).unwrap() - 1.0).abs() < 1e-12);
        let zero = m(vec![vec![0.0, 0.0]]);
        assert_eq!(avg_semantic_similarity(&zero, &e).unwrap(), 0.0);
        let wide = m(vec![vec![1.0, 0.0, 0.0]]);
        assert!(matches!(
            avg_semantic_similarity(&wide, &e),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
