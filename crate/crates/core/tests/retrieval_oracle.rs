use crisismine_core::embedding::EmbeddingMatrix;
use crisismine_core::retrieval::{kmeans_cluster, retrieve_topk};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn random_matrix(prefix: &str, n: usize, dim: usize, rng: &mut ChaCha8Rng) -> EmbeddingMatrix {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let rows = (0..n)
        .map(|_| (0..dim).map(|_| normal.sample(rng) as f32).collect())
        .collect();
    let ids = (0..n).map(|i| format!("{prefix}{i:05}")).collect();
    EmbeddingMatrix::from_rows(ids, rows).unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Full candidate × centroid cosine matrix, row max, full sort.
fn oracle(cands: &EmbeddingMatrix, centroids: &[Vec<f64>], top_k: usize) -> Vec<String> {
    let mut scored: Vec<(f64, String)> = (0..cands.len())
        .map(|i| {
            let x: Vec<f64> = cands.row(i).iter().map(|&v| v as f64).collect();
            let nx = norm(&x);
            let best = centroids
                .iter()
                .map(|c| {
                    let nc = norm(c);
                    x.iter().zip(c).map(|(a, b)| (a / nx) * (b / nc)).sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            (best, cands.ids()[i].clone())
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1)));
    scored.into_iter().take(top_k).map(|(_, id)| id).collect()
}

#[test]
fn flat_search_equals_full_sort() {
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reference = random_matrix("r", 120, 32, &mut rng);
        let cands = random_matrix("c", 1000, 32, &mut rng);
        let set = kmeans_cluster(&reference, 5, seed).unwrap();
        let got: Vec<String> = retrieve_topk(&cands, &set, 100)
            .unwrap()
            .ranked
            .into_iter()
            .map(|r| r.segment_id)
            .collect();
        assert_eq!(got, oracle(&cands, &set.centroids, 100), "seed {seed}");
    }
}

#[test]
fn prefix_containment_and_order_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let reference = random_matrix("r", 50, 16, &mut rng);
    let cands = random_matrix("c", 600, 16, &mut rng);
    let set = kmeans_cluster(&reference, 5, 1).unwrap();
    let ids = |k| -> Vec<String> {
        retrieve_topk(&cands, &set, k).unwrap().ranked.into_iter().map(|r| r.segment_id).collect()
    };
    let big = ids(200);
    let small = ids(50);
    assert_eq!(&big[..50], &small[..]);

    let mut order: Vec<usize> = (0..cands.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let shuffled = EmbeddingMatrix::from_rows(
        order.iter().map(|&i| cands.ids()[i].clone()).collect(),
        order.iter().map(|&i| cands.row(i).to_vec()).collect(),
    )
    .unwrap();
    let again: Vec<String> = retrieve_topk(&shuffled, &set, 200)
        .unwrap()
        .ranked
        .into_iter()
        .map(|r| r.segment_id)
        .collect();
    assert_eq!(again, big);
}

#[test]
fn well_separated_blobs_are_recovered() {
    let dim = 8;
    let sigma = 0.05;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        // centers on distinct axes: pairwise distance sqrt(2) ≈ 28σ
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for i in 0..60 {
            let blob = i % 3;
            let mut v: Vec<f32> = (0..dim).map(|_| noise.sample(&mut rng) as f32).collect();
            v[blob] += 1.0;
            rows.push(v);
            truth.push(blob);
        }
        let ids = (0..60).map(|i| format!("p{i}")).collect();
        let m = EmbeddingMatrix::from_rows(ids, rows).unwrap();
        let set = kmeans_cluster(&m, 3, seed).unwrap();
        // agreement up to relabeling: same-blob pairs share a cluster and vice versa
        for i in 0..60 {
            for j in 0..60 {
                assert_eq!(truth[i] == truth[j], set.assignments[i] == set.assignments[j], "seed {seed}");
            }
        }
        for w in set.inertia_history.windows(2) {
            assert!(w[1] <= w[0], "seed {seed}: {:?}", set.inertia_history);
        }
    }
}
