//! Macro-F1, Maas TTR and claim–evidence similarity on small corpora.

use active_pets::baselines::EmbeddingMatrix;
use active_pets::metrics::{
    avg_semantic_similarity, maas_from_counts, maas_ttr, macro_f1, ConfusionMatrix,
};
use active_pets::predictor::{CommitteeMember, EmbeddingKind};
use active_pets::runner::analysis::corpus_report;
use active_pets::runner::LabelledRecord;
use active_pets::Label::{Contradict as C, Neutral as N, Support as S};
use active_pets::{Instance, Label};

fn main() -> active_pets::Result<()> {
    let gold = [S, S, N, N, C, C];
    let pred = [S, N, N, N, C, S];
    let cm = ConfusionMatrix::new(&pred, &gold)?;
    for l in Label::ALL {
        println!("F1({l}) = {:.4}", cm.f1(l));
    }
    println!("macro-F1 = {:.4}", macro_f1(&pred, &gold)?);

    println!(
        "\nMaas a^2 for N=100, V=50: {:.7}",
        maas_from_counts(100, 50)?
    );
    let texts = [
        "the sea level rises",
        "the sea level rises again",
        "glaciers retreat quickly",
    ];
    println!("Maas a^2 of a toy corpus: {:.4}", maas_ttr(&texts)?);

    let mut encoder = CommitteeMember::mock("encoder", 24, 0)?;
    let claims: Vec<Instance> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Instance::new(format!("c{i}"), *t, " ", N))
        .collect();
    let refs: Vec<&Instance> = claims.iter().collect();
    let rep = [EmbeddingKind::Representation];
    let m = EmbeddingMatrix::from_bundles(
        EmbeddingKind::Representation,
        &refs,
        &encoder.predict(&refs, &rep)?,
    )?;
    println!(
        "mean cosine, claims vs themselves: {:.4}",
        avg_semantic_similarity(&m, &m)?
    );

    let rec = |id: &str, claim: &str, evidence: &str, label, multiplicity| LabelledRecord {
        id: id.into(),
        claim: claim.into(),
        evidence: evidence.into(),
        label,
        multiplicity,
        score: None,
    };
    let records = vec![
        rec(
            "a",
            "ice sheets are shrinking",
            "satellite data show ice loss",
            S,
            1,
        ),
        rec(
            "b",
            "warming has paused",
            "records show continued warming",
            C,
            3,
        ),
        rec(
            "c",
            "oceans absorb heat",
            "the study concerns forests",
            N,
            1,
        ),
    ];
    let report = corpus_report(&records, &mut encoder)?;
    println!("\n{report:#?}");
    Ok(())
}
