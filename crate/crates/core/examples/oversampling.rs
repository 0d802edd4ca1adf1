//! Balancing a labelled pool by repeating minority-class instances, most
//! disputed first.

use active_pets::oversample::{oversample, oversample_random};
use active_pets::{Label, LabelledEntry, PoolStats};

fn main() -> active_pets::Result<()> {
    let labelled = vec![
        LabelledEntry::new("s1", Label::Support, Some(0.9)),
        LabelledEntry::new("s2", Label::Support, Some(0.4)),
        LabelledEntry::new("n1", Label::Neutral, Some(1.0)),
        LabelledEntry::new("n2", Label::Neutral, Some(0.8)),
        LabelledEntry::new("n3", Label::Neutral, Some(0.6)),
        LabelledEntry::new("n4", Label::Neutral, Some(0.3)),
        LabelledEntry::new("n5", Label::Neutral, Some(0.1)),
        LabelledEntry::new("c1", Label::Contradict, Some(0.5)),
    ];
    let out = oversample(&labelled, true)?;
    println!("target per class: {}", out.target);
    for e in &out.entries {
        println!(
            "  {:<3} {:<10} score {:.1}  x{}",
            e.id,
            e.label,
            e.score.unwrap_or(0.0),
            e.multiplicity
        );
    }
    let mut counts = [0u64; 3];
    for e in &out.entries {
        counts[e.label.index()] += u64::from(e.multiplicity);
    }
    println!("weighted: {}", PoolStats::from_counts(counts));

    let random = oversample_random(&labelled, 7)?;
    let mult: Vec<u32> = random.entries.iter().map(|e| e.multiplicity).collect();
    println!("random variant multiplicities: {mult:?}");

    let lopsided = vec![
        LabelledEntry::new("a", Label::Neutral, Some(0.2)),
        LabelledEntry::new("b", Label::Neutral, Some(0.1)),
        LabelledEntry::new("c", Label::Support, Some(0.3)),
    ];
    println!(
        "absent classes are reported, not invented: {:?}",
        oversample(&lopsided, true)?.absent
    );
    Ok(())
}
