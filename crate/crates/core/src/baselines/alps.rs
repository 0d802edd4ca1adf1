use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kmeans::kmeans;
use super::{squared_distance, EmbeddingMatrix};
use crate::error::{Error, Result};

fn l2_normalize(row: &[f64]) -> Option<Vec<f64>> {
    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    (norm > 0.0).then(|| row.iter().map(|x| x / norm).collect())
}

/// ALPS: L2-normalize surprisal rows, cluster them into `k` groups with
/// seeded k-means, and take the row nearest each centroid.
pub fn alps_query(surprisals: &EmbeddingMatrix, k: usize, seed: u64) -> Result<Vec<String>> {
    if k > surprisals.len() {
        return Err(Error::KTooLarge {
            k,
            available: surprisals.len(),
        });
    }
    let sorted = surprisals.sorted_by_id();
    let mut zero_rows = Vec::new();
    let rows: Vec<Vec<f64>> = sorted
        .rows()
        .iter()
        .zip(sorted.ids())
        .map(|(r, id)| {
            l2_normalize(r).unwrap_or_else(|| {
                zero_rows.push(id.as_str());
                vec![0.0; r.len()]
            })
        })
        .collect();
    if !zero_rows.is_empty() {
        log::warn!(
            "ALPS: {} zero surprisal rows left unnormalized: {:?}",
            zero_rows.len(),
            zero_rows
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let km = kmeans(&rows, k, &mut rng);

    let mut taken = BTreeSet::new();
    let mut selected = Vec::with_capacity(k);
    for (c, centroid) in km.centroids.iter().enumerate() {
        let closest = |in_cluster: bool| {
            (0..rows.len())
                .filter(|&i| !taken.contains(&i) && (!in_cluster || km.assignment[i] == c))
                .min_by(|&a, &b| {
                    squared_distance(&rows[a], centroid)
                        .total_cmp(&squared_distance(&rows[b], centroid))
                })
        };
        // an emptied cluster borrows the nearest free row
        let pick = closest(true).or_else(|| closest(false)).expect("k <= rows");
        taken.insert(pick);
        selected.push(sorted.ids()[pick].clone());
    }
    Ok(selected)
}
