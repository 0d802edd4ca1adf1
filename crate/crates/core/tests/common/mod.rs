//! Independent reference implementations and fixtures shared by the
//! integration tests. Nothing here calls the library's scoring code.
#![allow(dead_code)]

use active_pets::predictor::{Backend, CommitteeMember, MockConfig, MockPredictor};
use active_pets::synthetic::SyntheticSpec;
use active_pets::{GoldOracle, Instance, Label, Pool};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Entropy in nats written as `ln N - (1/N) Σ c ln c`.
pub fn entropy_oracle(counts: &[u32]) -> f64 {
    let mut counts = counts.to_vec();
    counts.sort_unstable();
    let n: f64 = counts.iter().map(|&c| f64::from(c)).sum();
    let s: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| f64::from(c) * f64::from(c).ln())
        .sum();
    n.ln() - s / n
}

/// Votes per member from sizes, by direct integer arithmetic.
pub fn votes_oracle(sizes: &[u32]) -> Vec<u32> {
    let min = *sizes.iter().min().unwrap();
    sizes
        .iter()
        .map(|&s| {
            let (q, r) = (s / min, s % min);
            // round half to even
            let v = match (2 * r).cmp(&min) {
                std::cmp::Ordering::Less => q,
                std::cmp::Ordering::Greater => q + 1,
                std::cmp::Ordering::Equal => q + (q % 2),
            };
            v.max(1)
        })
        .collect()
}

/// First label with the largest probability, scanning Support, Neutral, Contradict.
pub fn argmax_oracle(p: &[f64; 3]) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if p[i] > p[best] {
            best = i;
        }
    }
    best
}

/// Rescore every unlabelled instance one at a time and fully sort.
pub fn brute_force_selection(
    committee: &mut [CommitteeMember],
    pool: &Pool,
    k: usize,
) -> Vec<(String, f64)> {
    let sizes: Vec<u32> = committee.iter().map(|m| m.size_units()).collect();
    let votes = votes_oracle(&sizes);
    let mut scored: Vec<(String, f64)> = Vec::new();
    for inst in pool.instances().filter(|i| pool.is_unlabelled(&i.id)) {
        let mut counts = [0u32; 3];
        for (m, v) in committee.iter_mut().zip(&votes) {
            let b = m.predict(&[inst], &[]).unwrap();
            counts[argmax_oracle(&b[0].proba.0)] += v;
        }
        scored.push((inst.id.clone(), entropy_oracle(&counts)));
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// A six-member mock committee with explicit configs, so sizes can be
/// rescaled without changing member behaviour.
pub fn committee_with_sizes(sizes: &[u32], seed: u64) -> Vec<CommitteeMember> {
    sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let cfg = MockConfig {
                seed: seed.wrapping_mul(31).wrapping_add(i as u64),
                size_units: 4,
                view_fraction: 0.5 + 0.08 * i as f64,
            };
            CommitteeMember::new(
                format!("m{i}"),
                s,
                Backend::Mock,
                Box::new(MockPredictor::new(cfg)),
            )
            .unwrap()
        })
        .collect()
}

/// A pool of `n` synthetic instances with `labelled` of them revealed, and
/// a committee trained on the revealed part.
pub fn trained_fixture(
    n: usize,
    labelled: usize,
    sizes: &[u32],
    seed: u64,
) -> (Pool, Vec<CommitteeMember>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = rng.gen_range(0.1..0.4);
    let c = rng.gen_range(0.02..0.15);
    let mut pool =
        Pool::new(SyntheticSpec::skewed(n, [s, 1.0 - s - c, c], seed).generate()).unwrap();
    let ids: Vec<String> = pool
        .unlabelled_ids()
        .take(labelled)
        .map(String::from)
        .collect();
    pool.annotate(&ids, &mut GoldOracle, |_| None).unwrap();
    let mut committee = committee_with_sizes(sizes, seed);
    if labelled > 0 {
        let examples = pool.labelled_examples();
        for m in &mut committee {
            m.train(&examples, &Default::default()).unwrap();
        }
    }
    (pool, committee)
}

pub fn squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// CAL by brute force: for each unlabelled row sort all labelled rows by
/// distance (then id), average KL(smoothed one-hot ‖ smoothed prediction)
/// over the first `knn`, and fully sort.
#[allow(clippy::too_many_arguments)]
pub fn cal_oracle(
    lab_ids: &[String],
    lab_rows: &[Vec<f64>],
    labels: &[Label],
    unl_ids: &[String],
    unl_rows: &[Vec<f64>],
    probas: &[[f64; 3]],
    k: usize,
    knn: usize,
) -> Vec<String> {
    let eps = 1e-8;
    let sm = |p: [f64; 3]| p.map(|x| (x + eps) / (1.0 + 3.0 * eps));
    let mut scored: Vec<(String, f64)> = Vec::new();
    for (u, id) in unl_ids.iter().enumerate() {
        let mut nb: Vec<usize> = (0..lab_rows.len()).collect();
        nb.sort_by(|&a, &b| {
            squared(&unl_rows[u], &lab_rows[a])
                .partial_cmp(&squared(&unl_rows[u], &lab_rows[b]))
                .unwrap()
                .then(lab_ids[a].cmp(&lab_ids[b]))
        });
        let q = sm(probas[u]);
        let mut total = 0.0;
        for &j in &nb[..knn] {
            let mut one_hot = [0.0; 3];
            one_hot[labels[j].index()] = 1.0;
            let p = sm(one_hot);
            total += (0..3).map(|i| p[i] * (p[i] / q[i]).ln()).sum::<f64>();
        }
        scored.push((id.clone(), total / knn as f64));
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.into_iter().take(k).map(|s| s.0).collect()
}

/// Best 2-partition of `points` by total within-cluster squared error,
/// and the point nearest each part's centroid.
pub fn best_two_clustering(points: &[Vec<f64>]) -> Vec<usize> {
    let n = points.len();
    let centroid = |idx: &[usize]| {
        let mut c = vec![0.0; points[0].len()];
        for &i in idx {
            for (a, x) in c.iter_mut().zip(&points[i]) {
                *a += x / idx.len() as f64;
            }
        }
        c
    };
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    // point 0 fixed in part A; enumerate the rest
    for mask in 0u32..(1 << (n - 1)) {
        let a: Vec<usize> = (0..n)
            .filter(|&i| i == 0 || mask & (1 << (i - 1)) == 0)
            .collect();
        let b: Vec<usize> = (0..n).filter(|i| !a.contains(i)).collect();
        if b.is_empty() {
            continue;
        }
        let sse = |idx: &[usize]| {
            let c = centroid(idx);
            idx.iter().map(|&i| squared(&points[i], &c)).sum::<f64>()
        };
        let cost = sse(&a) + sse(&b);
        if best.as_ref().is_none_or(|(bc, _, _)| cost < *bc - 1e-12) {
            best = Some((cost, a, b));
        }
    }
    let (_, a, b) = best.unwrap();
    [a, b]
        .iter()
        .map(|part| {
            let c = centroid(part);
            *part
                .iter()
                .min_by(|&&x, &&y| {
                    squared(&points[x], &c)
                        .partial_cmp(&squared(&points[y], &c))
                        .unwrap()
                })
                .unwrap()
        })
        .collect()
}

/// The acceptance pool: 3000 instances, 80% Neutral, 15% Support, 5%
/// Contradict, plus a separate balanced test set.
pub fn skewed_pool_and_test() -> (Pool, Vec<Instance>) {
    let pool = Pool::new(SyntheticSpec::skewed(3000, [0.15, 0.80, 0.05], 7).generate()).unwrap();
    let test = SyntheticSpec::balanced(150, 8)
        .with_prefix("test")
        .generate();
    (pool, test)
}
