use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rerank_core::eval::{dcg_at_k, ndcg_at_k, Gain};

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

/// DCG of the ranking divided by the best DCG any ordering of the judged
/// documents achieves; 0 when that best is 0.
fn brute_force_ndcg(ranking: &[String], grades: &BTreeMap<String, u32>, k: usize, gain: Gain) -> f64 {
    let judged: Vec<String> = grades.keys().cloned().collect();
    let best = permutations(&judged)
        .iter()
        .map(|p| dcg_at_k(p, grades, k, gain))
        .fold(0.0, f64::max);
    if best == 0.0 {
        0.0
    } else {
        dcg_at_k(ranking, grades, k, gain) / best
    }
}

#[test]
fn matches_exhaustive_permutation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for draw in 0..10_000 {
        let m = rng.random_range(1..=6);
        let docs: Vec<String> = (0..m).map(|i| format!("d{i}")).collect();
        let grades: BTreeMap<String, u32> = docs.iter().map(|d| (d.clone(), rng.random_range(0..=3))).collect();
        let mut ranking = docs.clone();
        ranking.shuffle(&mut rng);
        let k = rng.random_range(1..=m + 1);
        let gain = if draw % 2 == 0 { Gain::Linear } else { Gain::Exponential };
        let got = ndcg_at_k(&ranking, &grades, k, gain);
        let want = brute_force_ndcg(&ranking, &grades, k, gain);
        assert!((got - want).abs() <= 1e-12, "m={m} k={k} {got} vs {want}");
        assert!((0.0..=1.0 + 1e-12).contains(&got));
    }
}

#[test]
fn unjudged_documents_contribute_nothing() {
    let grades: BTreeMap<String, u32> = [("a".to_string(), 2), ("b".to_string(), 1)].into();
    let with_noise = ndcg_at_k(&["x", "a", "y", "b"], &grades, 10, Gain::Linear);
    let expected = (2.0 / 3f64.log2() + 1.0 / 5f64.log2()) / (2.0 + 1.0 / 3f64.log2());
    assert!((with_noise - expected).abs() < 1e-12);
}
