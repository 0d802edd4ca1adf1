use rand::Rng;

use super::squared_distance;

pub const KMEANS_MAX_ITER: usize = 100;
pub const KMEANS_TOLERANCE: f64 = 1e-6;

/// k-means++ seeding: the first center uniformly, each later one with
/// probability proportional to its squared distance to the nearest chosen
/// center. Returns row indices in pick order.
///
/// When every remaining row coincides with a chosen center the D² weights
/// vanish; the rest are then taken in row order.
pub(crate) fn kmeanspp_seeds(rows: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = rows.len();
    if k == 0 || n == 0 {
        return Vec::new();
    }
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    let mut picks = vec![first];
    chosen[first] = true;
    let mut nearest: Vec<f64> = rows
        .iter()
        .map(|r| squared_distance(r, &rows[first]))
        .collect();
    while picks.len() < k.min(n) {
        let total: f64 = nearest
            .iter()
            .zip(&chosen)
            .filter(|(_, &c)| !c)
            .map(|(d, _)| *d)
            .sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            let mut last_positive = None;
            for i in 0..n {
                if chosen[i] || nearest[i] <= 0.0 {
                    continue;
                }
                last_positive = Some(i);
                acc += nearest[i];
                if acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.or(last_positive)
                .expect("positive total implies a candidate")
        } else {
            log::warn!("k-means++ seeding: remaining rows coincide with chosen centers; falling back to id order");
            (0..n).find(|&i| !chosen[i]).expect("fewer picks than rows")
        };
        chosen[next] = true;
        picks.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_distance(&rows[i], &rows[next]));
        }
    }
    picks
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index per row.
    pub assignment: Vec<usize>,
    pub iterations: usize,
}

fn nearest_centroid(row: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(row, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Lloyd's algorithm from k-means++ seeds. Stops once no centroid moves more
/// than `KMEANS_TOLERANCE` or after `KMEANS_MAX_ITER` rounds. An emptied
/// cluster keeps its previous centroid.
pub fn kmeans(rows: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> KMeans {
    let seeds = kmeanspp_seeds(rows, k, rng);
    let mut centroids: Vec<Vec<f64>> = seeds.iter().map(|&i| rows[i].clone()).collect();
    let dim = rows.first().map_or(0, Vec::len);
    let mut assignment: Vec<usize> = rows
        .iter()
        .map(|r| nearest_centroid(r, &centroids))
        .collect();
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITER {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (row, &c) in rows.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(row) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            if counts[c] == 0 {
                continue;
            }
            let updated: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(squared_distance(centroid, &updated).sqrt());
            *centroid = updated;
        }
        assignment = rows
            .iter()
            .map(|r| nearest_centroid(r, &centroids))
            .collect();
        if shift < KMEANS_TOLERANCE {
            break;
        }
    }
    KMeans {
        centroids,
        assignment,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seeds_are_distinct() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut picks = kmeanspp_seeds(&rows, 10, &mut rng);
        picks.sort();
        assert_eq!(picks, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn identical_rows_fall_back_to_row_order() {
        let rows = vec![vec![1.0, 1.0]; 5];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let picks = kmeanspp_seeds(&rows, 3, &mut rng);
        assert_eq!(picks.len(), 3);
        let first = picks[0];
        let rest: Vec<usize> = (0..5).filter(|&i| i != first).take(2).collect();
        assert_eq!(&picks[1..], &rest[..]);
    }

    #[test]
    fn lloyd_converges_on_separated_blobs() {
        let mut rows = Vec::new();
        for i in 0..5 {
            rows.push(vec![i as f64 * 0.01, 0.0]);
            rows.push(vec![10.0 + i as f64 * 0.01, 0.0]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let km = kmeans(&rows, 2, &mut rng);
        assert!(km.iterations < KMEANS_MAX_ITER);
        for pair in km.assignment.chunks(2) {
            assert_ne!(pair[0], pair[1]);
        }
    }
}
