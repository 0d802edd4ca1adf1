//! Post-run reports over result tables and dumped labelled pools.

use std::collections::BTreeMap;

use super::config::Strategy;
use super::results::{LabelledRecord, ResultRow};
use crate::baselines::EmbeddingMatrix;
use crate::data::{Instance, Label};
use crate::error::Result;
use crate::metrics::{avg_semantic_similarity, maas_ttr};
use crate::predictor::{CommitteeMember, EmbeddingKind};

/// Means over seeds and members for one (strategy, budget).
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSummary {
    pub strategy: Strategy,
    pub budget: usize,
    pub macro_f1: f64,
    pub unique: [f64; Label::COUNT],
    pub weighted: [f64; Label::COUNT],
    pub rows: usize,
}

pub fn summarize(rows: &[ResultRow]) -> Vec<BudgetSummary> {
    let mut groups: BTreeMap<(Strategy, usize), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.strategy, r.budget)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((strategy, budget), rs)| {
            let n = rs.len() as f64;
            let mean3 = |f: fn(&ResultRow) -> [f64; 3]| {
                let mut acc = [0.0; 3];
                for r in &rs {
                    for (a, x) in acc.iter_mut().zip(f(r)) {
                        *a += x / n;
                    }
                }
                acc
            };
            BudgetSummary {
                strategy,
                budget,
                macro_f1: rs.iter().map(|r| r.macro_f1).sum::<f64>() / n,
                unique: mean3(ResultRow::unique_fractions),
                weighted: mean3(ResultRow::weighted_fractions),
                rows: rs.len(),
            }
        })
        .collect()
}

/// Lexical richness and claim–evidence similarity of a labelled corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusReport {
    pub instances: usize,
    /// Counts duplicates from oversampling.
    pub weighted_instances: usize,
    pub maas_ttr: f64,
    pub semantic_similarity: f64,
}

/// Maas TTR over every copy of every claim and evidence, and the all-pairs
/// cosine similarity of claim and evidence representations from `encoder`.
pub fn corpus_report(
    records: &[LabelledRecord],
    encoder: &mut CommitteeMember,
) -> Result<CorpusReport> {
    let mut texts = Vec::new();
    let mut claims = Vec::new();
    let mut evidences = Vec::new();
    for r in records {
        for _ in 0..r.multiplicity {
            texts.push(format!("{} {}", r.claim, r.evidence));
            // each side encoded alone; the label is irrelevant to the encoder
            claims.push(Instance::new(
                format!("{}#claim", r.id),
                r.claim.clone(),
                " ",
                Label::Neutral,
            ));
            evidences.push(Instance::new(
                format!("{}#evidence", r.id),
                " ",
                r.evidence.clone(),
                Label::Neutral,
            ));
        }
    }
    let encode = |member: &mut CommitteeMember, insts: &[Instance]| -> Result<EmbeddingMatrix> {
        let refs: Vec<&Instance> = insts.iter().collect();
        let bundles = member.predict(&refs, &[EmbeddingKind::Representation])?;
        EmbeddingMatrix::from_bundles(EmbeddingKind::Representation, &refs, &bundles)
    };
    let c = encode(encoder, &claims)?;
    let e = encode(encoder, &evidences)?;
    Ok(CorpusReport {
        instances: records.len(),
        weighted_instances: texts.len(),
        maas_ttr: maas_ttr(&texts)?,
        semantic_similarity: avg_semantic_similarity(&c, &e)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PoolStats;

    #[test]
    fn summary_averages_members_and_seeds() {
        let a = ResultRow::new(
            Strategy::Random,
            "m1",
            10,
            1,
            0.2,
            &PoolStats::from_counts([1, 1, 0]),
            &PoolStats::from_counts([1, 1, 0]),
            0.0,
        );
        let mut b = a.clone();
        b.member = "m2".into();
        b.macro_f1 = 0.4;
        let s = summarize(&[a, b]);
        assert_eq!(s.len(), 1);
        assert!((s[0].macro_f1 - 0.3).abs() < 1e-12);
        assert_eq!(s[0].unique, [0.5, 0.5, 0.0]);
    }

    #[test]
    fn duplicates_enter_the_corpus() {
        let rec = |id: &str, m| LabelledRecord {
            id: id.into(),
            claim: format!("claim about {id}"),
            evidence: format!("evidence on {id} today"),
            label: Label::Support,
            multiplicity: m,
            score: None,
        };
        let mut enc = CommitteeMember::mock("enc", 4, 1).unwrap();
        let once = corpus_report(&[rec("a", 1), rec("b", 1)], &mut enc).unwrap();
        let twice = corpus_report(&[rec("a", 2), rec("b", 1)], &mut enc).unwrap();
        assert_eq!(twice.weighted_instances, 3);
        assert!(twice.maas_ttr > once.maas_ttr);
        assert!((0.0..=1.0).contains(&once.semantic_similarity));
    }
}
