//! Random, BADGE, CAL and ALPS queries over embeddings from a mock model.

use active_pets::baselines::{alps_query, badge_query, cal_query, random_query, EmbeddingMatrix};
use active_pets::predictor::{CommitteeMember, EmbeddingKind};
use active_pets::synthetic::SyntheticSpec;
use active_pets::{GoldOracle, Instance, Pool};

fn main() -> active_pets::Result<()> {
    let mut pool = Pool::new(SyntheticSpec::skewed(300, [0.15, 0.80, 0.05], 3).generate())?;
    let mut model = CommitteeMember::mock("deberta-large", 24, 123)?;
    let k = 5;

    println!("random: {:?}", random_query(&pool, k, 123)?);

    // cold start: an untrained model still yields gradients and surprisals
    let unl = pool.unlabelled_instances();
    let kinds = [EmbeddingKind::Gradient, EmbeddingKind::Surprisal];
    let bundles = model.predict(&unl, &kinds)?;
    let grads = EmbeddingMatrix::from_bundles(EmbeddingKind::Gradient, &unl, &bundles)?;
    let surp = EmbeddingMatrix::from_bundles(EmbeddingKind::Surprisal, &unl, &bundles)?;
    println!(
        "badge ({}-d gradients): {:?}",
        grads.dim(),
        badge_query(&grads, k, 123)?
    );
    println!(
        "alps ({}-d surprisals): {:?}",
        surp.dim(),
        alps_query(&surp, k, 123)?
    );

    // CAL needs labelled neighbours
    let warm = random_query(&pool, 30, 1)?;
    pool.annotate(&warm, &mut GoldOracle, |_| None)?;
    model.train(&pool.labelled_examples(), &Default::default())?;
    let rep = [EmbeddingKind::Representation];
    let lab_insts: Vec<&Instance> = pool
        .labelled()
        .iter()
        .map(|e| pool.instance(&e.id).unwrap())
        .collect();
    let labels: Vec<_> = pool.labelled().iter().map(|e| e.label).collect();
    let lab = EmbeddingMatrix::from_bundles(
        EmbeddingKind::Representation,
        &lab_insts,
        &model.predict(&lab_insts, &rep)?,
    )?;
    let unl = pool.unlabelled_instances();
    let bundles = model.predict(&unl, &rep)?;
    let probas: Vec<_> = bundles.iter().map(|b| b.proba).collect();
    let unl_rep = EmbeddingMatrix::from_bundles(EmbeddingKind::Representation, &unl, &bundles)?;
    println!(
        "cal (k=10 neighbours): {:?}",
        cal_query(&lab, &labels, &unl_rep, &probas, k, 10)?
    );
    Ok(())
}
