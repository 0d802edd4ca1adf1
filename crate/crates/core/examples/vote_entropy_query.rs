//! One committee query by hand: allocate votes, tally, score, select.

use active_pets::committee::{
    active_pets_query, allocate_votes, tally_votes, vote_entropy, VoteTally,
};
use active_pets::predictor::CommitteeMember;
use active_pets::synthetic::SyntheticSpec;
use active_pets::{GoldOracle, Label, Pool};

fn main() -> active_pets::Result<()> {
    let sizes = [
        ("base-a", 12),
        ("base-b", 12),
        ("base-c", 12),
        ("large-a", 24),
        ("large-b", 24),
        ("large-c", 24),
    ];
    let mut committee = sizes
        .iter()
        .map(|&(name, size)| CommitteeMember::mock(name, size, 123))
        .collect::<active_pets::Result<Vec<_>>>()?;
    let alloc = allocate_votes(&committee)?;
    println!("votes per member {:?}, total {}", alloc.votes, alloc.total);

    // three base members say Support, three large ones say Neutral
    let votes = [
        Label::Support,
        Label::Support,
        Label::Support,
        Label::Neutral,
        Label::Neutral,
        Label::Neutral,
    ];
    let tally = tally_votes(&votes, &alloc);
    println!(
        "tally {:?} -> entropy {:.6}",
        tally.0,
        vote_entropy(&tally, alloc.total)
    );
    println!(
        "{{3,3,3}} -> {:.6} (ln 3)",
        vote_entropy(&VoteTally([3, 3, 3]), 9)
    );

    let mut pool = Pool::new(SyntheticSpec::skewed(400, [0.15, 0.80, 0.05], 1).generate())?;
    // warm the committee on a few gold labels so it has something to disagree about
    let seed_ids: Vec<String> = pool.unlabelled_ids().take(20).map(String::from).collect();
    pool.annotate(&seed_ids, &mut GoldOracle, |_| None)?;
    let examples = pool.labelled_examples();
    for m in &mut committee {
        m.train(&examples, &Default::default())?;
    }

    let query = active_pets_query(&mut committee, &pool, 10)?;
    let mut ranked = query.scores.clone();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    println!("\ntop of {} unlabelled instances:", query.scores.len());
    for s in ranked.iter().take(10) {
        println!("  {}  {:.4}", s.id, s.score);
    }
    println!("selected: {:?}", query.selected);
    Ok(())
}
