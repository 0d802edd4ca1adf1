use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kmeans::kmeanspp_seeds;
use super::EmbeddingMatrix;
use crate::error::{Error, Result};

/// BADGE: k-means++ seeding over gradient embeddings; the seeded rows are the
/// selection, in pick order.
pub fn badge_query(grads: &EmbeddingMatrix, k: usize, seed: u64) -> Result<Vec<String>> {
    if k > grads.len() {
        return Err(Error::KTooLarge {
            k,
            available: grads.len(),
        });
    }
    let sorted = grads.sorted_by_id();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(kmeanspp_seeds(sorted.rows(), k, &mut rng)
        .into_iter()
        .map(|i| sorted.ids()[i].clone())
        .collect())
}
