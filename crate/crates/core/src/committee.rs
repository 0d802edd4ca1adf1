//! Weighted query-by-committee.
//!
//! Every member gets a number of votes proportional to its size; each casts
//! all of its votes for its argmax label; instances are ranked by the
//! entropy of the pooled votes.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::{Label, Pool};
use crate::error::{Error, Result};
use crate::predictor::CommitteeMember;

/// Votes per member, in committee order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteAllocation {
    pub votes: Vec<u32>,
    pub total: u32,
}

/// Votes per label for one instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteTally(pub [u32; Label::COUNT]);

impl VoteTally {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_unanimous(&self) -> bool {
        self.0.iter().filter(|&&v| v > 0).count() <= 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementScore {
    pub id: String,
    pub score: f64,
}

/// Outcome of one committee query.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitteeQuery {
    pub selected: Vec<String>,
    /// Score of every unlabelled instance, in ascending id order.
    pub scores: Vec<DisagreementScore>,
}

/// `v_i = round(size_i / min size)`, rounding halves to even, at least 1.
pub fn allocate_votes_for_sizes(sizes: &[u32]) -> Result<VoteAllocation> {
    let min = *sizes.iter().min().ok_or(Error::EmptyCommittee)?;
    if min == 0 {
        return Err(Error::ZeroSize(String::from("<unnamed>")));
    }
    let votes: Vec<u32> = sizes
        .iter()
        .map(|&s| (f64::from(s) / f64::from(min)).round_ties_even().max(1.0) as u32)
        .collect();
    let total = votes.iter().sum();
    Ok(VoteAllocation { votes, total })
}

pub fn allocate_votes(committee: &[CommitteeMember]) -> Result<VoteAllocation> {
    let sizes: Vec<u32> = committee.iter().map(CommitteeMember::size_units).collect();
    allocate_votes_for_sizes(&sizes)
}

/// Pools the members' hard votes for one instance.
pub fn tally_votes(predictions: &[Label], alloc: &VoteAllocation) -> VoteTally {
    debug_assert_eq!(predictions.len(), alloc.votes.len());
    let mut tally = VoteTally::default();
    for (label, votes) in predictions.iter().zip(&alloc.votes) {
        tally.0[label.index()] += votes;
    }
    tally
}

/// Natural-log entropy of the vote fractions; empty labels contribute 0.
pub fn vote_entropy(tally: &VoteTally, total: u32) -> f64 {
    debug_assert_eq!(tally.total(), total);
    let total = f64::from(total);
    // summing in a fixed count order keeps permuted tallies bit-identical
    let mut counts = tally.0;
    counts.sort_unstable();
    let h: f64 = counts
        .iter()
        .filter(|&&v| v > 0)
        .map(|&v| {
            let p = f64::from(v) / total;
            -p * p.ln()
        })
        .sum();
    // a unanimous tally gives -1·ln 1 = -0.0
    h.max(0.0)
}

/// Descending score, then ascending id.
pub(crate) fn by_score_then_id(a: &DisagreementScore, b: &DisagreementScore) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id))
}

/// The `k` highest-scoring ids, best first; ties go to the smaller id.
pub fn select_topk(scores: &[DisagreementScore], k: usize) -> Result<Vec<String>> {
    if k > scores.len() {
        return Err(Error::KTooLarge {
            k,
            available: scores.len(),
        });
    }
    let mut sorted: Vec<&DisagreementScore> = scores.iter().collect();
    sorted.sort_by(|a, b| by_score_then_id(a, b));
    Ok(sorted.into_iter().take(k).map(|s| s.id.clone()).collect())
}

/// One query iteration: every member predicts the unlabelled pool, votes are
/// pooled by allocation, and the `k` highest vote entropies are selected.
pub fn active_pets_query(
    committee: &mut [CommitteeMember],
    pool: &Pool,
    k: usize,
) -> Result<CommitteeQuery> {
    let unlabelled = pool.unlabelled_instances();
    if k > unlabelled.len() {
        return Err(Error::KTooLarge {
            k,
            available: unlabelled.len(),
        });
    }
    let alloc = allocate_votes(committee)?;
    let mut argmaxes: Vec<Vec<Label>> = Vec::with_capacity(committee.len());
    for member in committee.iter_mut() {
        let bundles = member.predict(&unlabelled, &[])?;
        argmaxes.push(bundles.iter().map(|b| b.proba.argmax()).collect());
    }
    let mut votes = Vec::with_capacity(committee.len());
    let scores: Vec<DisagreementScore> = unlabelled
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            votes.clear();
            votes.extend(argmaxes.iter().map(|m| m[i]));
            let tally = tally_votes(&votes, &alloc);
            DisagreementScore {
                id: inst.id.clone(),
                score: vote_entropy(&tally, alloc.total),
            }
        })
        .collect();
    let selected = select_topk(&scores, k)?;
    Ok(CommitteeQuery { selected, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(id: &str, score: f64) -> DisagreementScore {
        DisagreementScore {
            id: id.to_string(),
            score,
        }
    }

    #[test]
    fn footnote_allocation() {
        let a = allocate_votes_for_sizes(&[12, 12, 12, 24, 24, 24]).unwrap();
        assert_eq!(a.votes, vec![1, 1, 1, 2, 2, 2]);
        assert_eq!(a.total, 9);
    }

    #[test]
    fn single_member_gets_one_vote() {
        let a = allocate_votes_for_sizes(&[355]).unwrap();
        assert_eq!((a.votes, a.total), (vec![1], 1));
    }

    #[test]
    fn half_ratio_rounds_to_even() {
        // 30 / 12 = 2.5 → 2
        let a = allocate_votes_for_sizes(&[12, 30]).unwrap();
        assert_eq!((a.votes, a.total), (vec![1, 2], 3));
        // 42 / 12 = 3.5 → 4
        assert_eq!(
            allocate_votes_for_sizes(&[12, 42]).unwrap().votes,
            vec![1, 4]
        );
        assert!(allocate_votes_for_sizes(&[]).is_err());
    }

    #[test]
    fn tallies() {
        let alloc = allocate_votes_for_sizes(&[12, 12, 12, 24, 24, 24]).unwrap();
        let s = Label::Support;
        let n = Label::Neutral;
        assert_eq!(tally_votes(&[s; 6], &alloc), VoteTally([9, 0, 0]));
        assert_eq!(
            tally_votes(&[s, s, s, n, n, n], &alloc),
            VoteTally([3, 6, 0])
        );
    }

    #[test]
    fn entropy_values() {
        assert_eq!(vote_entropy(&VoteTally([9, 0, 0]), 9), 0.0);
        assert!((vote_entropy(&VoteTally([3, 3, 3]), 9) - 3f64.ln()).abs() < 1e-15);
        let expected = -(5.0 / 9.0) * (5.0f64 / 9.0).ln() - (4.0 / 9.0) * (4.0f64 / 9.0).ln();
        let h = vote_entropy(&VoteTally([5, 4, 0]), 9);
        assert!((h - expected).abs() < 1e-15);
        assert!((h - 0.686962).abs() < 1e-6);
    }

    #[test]
    fn topk_orders_and_breaks_ties() {
        let scores = vec![score("a", 0.69), score("b", 1.10), score("c", 0.0)];
        assert_eq!(select_topk(&scores, 2).unwrap(), vec!["b", "a"]);
        assert_eq!(select_topk(&scores, 3).unwrap(), vec!["b", "a", "c"]);
        let flat = vec![
            score("d", 0.5),
            score("b", 0.5),
            score("c", 0.5),
            score("a", 0.5),
        ];
        assert_eq!(select_topk(&flat, 3).unwrap(), vec!["a", "b", "c"]);
        assert!(matches!(
            select_topk(&flat, 5),
            Err(Error::KTooLarge { k: 5, available: 4 })
        ));
    }
}
