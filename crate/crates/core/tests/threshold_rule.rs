use crisismine_core::retrieval::RankedCandidate;
use crisismine_core::threshold::{make_partitions, select_threshold, DomainLabel, DomainLabelKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ranked(n: usize) -> Vec<RankedCandidate> {
    (0..n)
        .map(|i| RankedCandidate {
            segment_id: format!("c{i:05}"),
            score: 1.0 - i as f64 / n as f64,
            best_centroid: 0,
            rank: i + 1,
        })
        .collect()
}

fn label(id: &str, inside: bool) -> DomainLabel {
    let kind = if inside { DomainLabelKind::InDomain } else { DomainLabelKind::OutOfDomain };
    DomainLabel::new(id, kind, "a")
}

#[test]
fn worked_example_keeps_first_four() {
    let parts = make_partitions(&ranked(600), 6).unwrap();
    let props = [0.9, 0.8, 0.7, 0.6, 0.4, 0.2];
    let mut labels = Vec::new();
    for (p, &prop) in parts.iter().zip(&props) {
        let n_in = (prop * 50.0) as usize;
        for (k, id) in p.member_ids.iter().take(50).enumerate() {
            labels.push(label(id, k < n_in));
        }
    }
    let d = select_threshold(&parts, &labels).unwrap();
    assert_eq!(d.cut_partition, Some(5));
    assert_eq!(d.retained_rank_max, 400);
    assert_eq!(d.retained_ids.len(), 400);
    let props_got: Vec<f64> = d.per_partition_stats.iter().map(|s| s.proportion_in).collect();
    assert_eq!(props_got, props);
}

#[test]
fn flipping_out_to_in_never_moves_the_cut_earlier() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let parts = make_partitions(&ranked(300), 6).unwrap();
    let mut labels: Vec<DomainLabel> = parts
        .iter()
        .flat_map(|p| p.member_ids.iter().take(10).map(|id| (p.index, id.clone())).collect::<Vec<_>>())
        .map(|(pi, id)| label(&id, rng.random_bool(1.0 - pi as f64 / 7.0)))
        .collect();
    let cut_of = |ls: &[DomainLabel]| {
        let d = select_threshold(&parts, ls).unwrap();
        d.cut_partition.unwrap_or(usize::MAX)
    };
    for _ in 0..1000 {
        let before = cut_of(&labels);
        let i = rng.random_range(0..labels.len());
        let mut flipped = labels.clone();
        flipped[i].label = DomainLabelKind::InDomain;
        assert!(cut_of(&flipped) >= before);
        // random walk so later flips start from varied states
        if rng.random_bool(0.5) {
            labels[i].label = if rng.random_bool(0.5) { DomainLabelKind::InDomain } else { DomainLabelKind::OutOfDomain };
        }
    }
}
