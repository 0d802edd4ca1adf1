//! Turning claims plus an abstract corpus into claim–evidence pairs with BM25.

use std::collections::BTreeMap;

use active_pets::data::label_stats;
use active_pets::retrieval::{build_pairs, gold_pairs, Abstract, Bm25Index, ClaimRecord};
use active_pets::Label;

fn doc(id: &str, title: &str, text: &str) -> Abstract {
    Abstract {
        doc_id: id.into(),
        title: title.into(),
        sentences: text.split(". ").map(String::from).collect(),
    }
}

fn main() -> active_pets::Result<()> {
    let corpus = vec![
        doc("101", "Vitamin D and bone density", "Vitamin D supplementation increases bone mineral density. Effects are larger in the elderly"),
        doc("102", "Statins in primary prevention", "Statins reduce cardiovascular events. Muscle pain is a common side effect"),
        doc("103", "Coffee consumption", "Moderate coffee intake is not associated with increased mortality"),
        doc("104", "Sleep and memory", "Sleep deprivation impairs memory consolidation in adults"),
        doc("105", "Bone loss in astronauts", "Microgravity accelerates bone loss. Vitamin D does not prevent it"),
        doc("106", "Exercise and mood", "Aerobic exercise improves mood in adults with mild depression"),
    ];
    let claims = vec![
        ClaimRecord {
            id: "1".into(),
            claim: "Vitamin D improves bone density".into(),
            evidence_map: BTreeMap::from([
                ("101".into(), Label::Support),
                ("105".into(), Label::Contradict),
            ]),
        },
        ClaimRecord {
            id: "2".into(),
            claim: "Coffee increases mortality".into(),
            evidence_map: BTreeMap::from([("103".into(), Label::Contradict)]),
        },
        ClaimRecord {
            id: "3".into(),
            claim: "Sleep loss harms memory in adults".into(),
            evidence_map: BTreeMap::from([("104".into(), Label::Support)]),
        },
    ];

    let index = Bm25Index::build(&corpus)?;
    println!("{} docs, avgdl {:.2}", index.len(), index.avgdl());
    for c in &claims {
        println!("{:?}", c.claim);
        for (doc_id, score) in index.retrieve_topk(&c.claim, 3) {
            println!("  {doc_id}  {score:.4}");
        }
    }

    let pairs = build_pairs(&claims, &corpus, &index, 3)?;
    println!("\nretrieved pairs: {}", label_stats(&pairs));
    println!(
        "gold pairs:      {}",
        label_stats(&gold_pairs(&claims, &corpus)?)
    );
    Ok(())
}
