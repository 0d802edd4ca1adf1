//! Balancing the labelled multiset by repeating minority-class instances.
//!
//! Oversampling never reveals new labels: it only raises the multiplicity of
//! entries already in the labelled list, so the labelling budget is untouched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Label, LabelledEntry};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Oversampled {
    /// Input entries in input order, with multiplicities set.
    pub entries: Vec<LabelledEntry>,
    /// Per-class target: the largest unique class count.
    pub target: u32,
    /// Labels with no labelled instance; left empty rather than fabricated.
    pub absent: Vec<Label>,
}

/// Indices of `labelled` grouped by label, each group in ascending id order.
fn groups(labelled: &[LabelledEntry]) -> [Vec<usize>; Label::COUNT] {
    let mut g: [Vec<usize>; Label::COUNT] = Default::default();
    for (i, e) in labelled.iter().enumerate() {
        g[e.label.index()].push(i);
    }
    for members in &mut g {
        members.sort_by(|&a, &b| labelled[a].id.cmp(&labelled[b].id));
    }
    g
}

/// All multiplicities reset to 1, plus the per-class index groups.
fn prepare(labelled: &[LabelledEntry]) -> Result<(Oversampled, [Vec<usize>; Label::COUNT])> {
    if labelled.is_empty() {
        return Err(Error::EmptyLabelled);
    }
    let entries: Vec<LabelledEntry> = labelled
        .iter()
        .map(|e| LabelledEntry {
            multiplicity: 1,
            ..e.clone()
        })
        .collect();
    let groups = groups(&entries);
    let target = groups.iter().map(Vec::len).max().unwrap_or(0) as u32;
    let absent: Vec<Label> = Label::ALL
        .into_iter()
        .filter(|l| groups[l.index()].is_empty())
        .collect();
    if !absent.is_empty() {
        log::warn!("oversampling skips classes with no labelled instance: {absent:?}");
    }
    Ok((
        Oversampled {
            entries,
            target,
            absent,
        },
        groups,
    ))
}

/// Repeats minority-class instances in descending disagreement order,
/// cycling through the class until it reaches the majority count.
///
/// With `by_committee_priority` every entry must carry a score; without it
/// the cycle runs in ascending id order.
pub fn oversample(labelled: &[LabelledEntry], by_committee_priority: bool) -> Result<Oversampled> {
    if by_committee_priority {
        if let Some(e) = labelled.iter().find(|e| e.score.is_none()) {
            return Err(Error::MissingScore(e.id.clone()));
        }
    }
    let (mut out, mut groups) = prepare(labelled)?;
    let entries = &mut out.entries;
    for members in groups.iter_mut().filter(|m| !m.is_empty()) {
        if by_committee_priority {
            // stable sort keeps ascending id among equal scores
            members.sort_by(|&a, &b| {
                let (sa, sb) = (entries[a].score.unwrap(), entries[b].score.unwrap());
                sb.total_cmp(&sa)
            });
        }
        let n = members.len() as u32;
        let extras = out.target - n;
        for (rank, &i) in members.iter().enumerate() {
            let rank = rank as u32;
            entries[i].multiplicity = 1 + extras / n + u32::from(rank < extras % n);
        }
    }
    Ok(out)
}

/// The random-resampling alternative: extra copies are drawn uniformly with
/// replacement from each minority class.
pub fn oversample_random(labelled: &[LabelledEntry], seed: u64) -> Result<Oversampled> {
    let (mut out, groups) = prepare(labelled)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for members in groups.iter().filter(|m| !m.is_empty()) {
        let extras = out.target as usize - members.len();
        for _ in 0..extras {
            let pick = members[rng.gen_range(0..members.len())];
            out.entries[pick].multiplicity += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, label: Label, score: f64) -> LabelledEntry {
        LabelledEntry::new(id, label, Some(score))
    }

    fn mult(out: &Oversampled, id: &str) -> u32 {
        out.entries
            .iter()
            .find(|e| e.id == id)
            .unwrap()
            .multiplicity
    }

    fn worked_fixture() -> Vec<LabelledEntry> {
        let mut v = vec![
            entry("s2", Label::Support, 0.4),
            entry("s1", Label::Support, 0.9),
            entry("c1", Label::Contradict, 0.7),
        ];
        for i in 0..5 {
            v.push(entry(&format!("n{i}"), Label::Neutral, 0.1 * i as f64));
        }
        v
    }

    #[test]
    fn worked_example() {
        let out = oversample(&worked_fixture(), true).unwrap();
        assert_eq!(out.target, 5);
        assert_eq!(mult(&out, "s1"), 3);
        assert_eq!(mult(&out, "s2"), 2);
        assert_eq!(mult(&out, "c1"), 5);
        for i in 0..5 {
            assert_eq!(mult(&out, &format!("n{i}")), 1);
        }
        assert!(out.absent.is_empty());
        // input order preserved
        assert_eq!(out.entries[0].id, "s2");
    }

    #[test]
    fn balanced_is_identity() {
        let v: Vec<LabelledEntry> = Label::ALL
            .iter()
            .flat_map(|&l| (0..2).map(move |i| entry(&format!("{l}{i}"), l, 0.5)))
            .collect();
        let out = oversample(&v, true).unwrap();
        assert!(out.entries.iter().all(|e| e.multiplicity == 1));
        let out = oversample_random(&v, 3).unwrap();
        assert!(out.entries.iter().all(|e| e.multiplicity == 1));
    }

    #[test]
    fn single_class_reports_absent() {
        let v = vec![
            entry("a", Label::Neutral, 0.1),
            entry("b", Label::Neutral, 0.2),
        ];
        let out = oversample(&v, true).unwrap();
        assert!(out.entries.iter().all(|e| e.multiplicity == 1));
        assert_eq!(out.absent, vec![Label::Support, Label::Contradict]);
    }

    #[test]
    fn errors() {
        assert!(matches!(oversample(&[], true), Err(Error::EmptyLabelled)));
        let v = vec![LabelledEntry::new("a", Label::Support, None)];
        assert!(matches!(oversample(&v, true), Err(Error::MissingScore(id)) if id == "a"));
        assert!(oversample(&v, false).is_ok());
    }

    #[test]
    fn score_ties_break_by_id() {
        let v = vec![
            entry("b", Label::Support, 0.5),
            entry("a", Label::Support, 0.5),
            entry("n0", Label::Neutral, 0.0),
            entry("n1", Label::Neutral, 0.0),
            entry("n2", Label::Neutral, 0.0),
        ];
        let out = oversample(&v, true).unwrap();
        assert_eq!((mult(&out, "a"), mult(&out, "b")), (2, 1));
    }

    #[test]
    fn random_single_candidate_takes_all_copies() {
        let v = vec![
            entry("s", Label::Support, 0.0),
            entry("n0", Label::Neutral, 0.0),
            entry("n1", Label::Neutral, 0.0),
            entry("n2", Label::Neutral, 0.0),
        ];
        let out = oversample_random(&v, 42).unwrap();
        assert_eq!(mult(&out, "s"), 3);
    }

    #[test]
    fn random_is_seeded() {
        let v = worked_fixture();
        assert_eq!(
            oversample_random(&v, 1).unwrap(),
            oversample_random(&v, 1).unwrap()
        );
        let out = oversample_random(&v, 1).unwrap();
        assert_eq!(mult(&out, "s1") + mult(&out, "s2"), 5);
    }
}
