//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; exits non-zero if any criterion fails.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crisismine::{Pipeline, PipelineConfig};
use crisismine_core::cleaning::{minhash_signature, near_dedup, CleaningConfig, MinHasher};
use crisismine_core::corpus::{Corpus, Segment};
use crisismine_core::dataset::parse_dpo_jsonl;
use crisismine_core::embedding::EmbeddingMatrix;
use crisismine_core::mteval::{
    bleu, chrf, cohens_kappa, mqm_segment_score, BleuConfig, ChrfConfig, MqmAnnotation, MqmCategory, Severity,
};
use crisismine_core::readability::readability_report;
use crisismine_core::retrieval::{kmeans_cluster, retrieve_topk, RankedCandidate};
use crisismine_core::threshold::{make_partitions, select_threshold, DomainLabel, DomainLabelKind};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; keeps the oracles free of the library's own samplers
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

// ---------------------------------------------------------------- MinHash

fn exact_jaccard(a: &HashSet<u64>, b: &HashSet<u64>) -> f64 {
    a.intersection(b).count() as f64 / a.union(b).count() as f64
}

const IT_WORDS: &[&str] = &[
    "alluvione", "pioggia", "fiume", "strada", "scuola", "vento", "neve", "allerta", "protezione", "civile",
    "cittadini", "zona", "rischio", "frana", "ponte", "chiuso", "evacuazione", "centro", "comune", "ore",
    "domani", "oggi", "sera", "mattina", "forte", "acqua", "livello", "sindaco", "emergenza", "soccorso",
];

fn dedup_brute_force(c: &Corpus, cfg: &CleaningConfig) -> Vec<String> {
    let sigs: Vec<_> = c.segments.iter().map(|s| minhash_signature(&s.source_text, cfg)).collect();
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..sigs.len() {
        let dup = kept.iter().any(|&j| {
            let agree = sigs[i].values.iter().zip(&sigs[j].values).filter(|(a, b)| a == b).count();
            agree as f64 / sigs[i].values.len() as f64 >= cfg.near_dup_threshold
        });
        if !dup {
            kept.push(i);
        }
    }
    kept.into_iter().map(|i| c.segments[i].id.clone()).collect()
}

fn minhash_fidelity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let hasher = MinHasher::new(128, 3, 17);
    let mut err = 0.0;
    for _ in 0..1000 {
        let shared = rng.random_range(0..150);
        let only_a = rng.random_range(1..100);
        let only_b = rng.random_range(0..100);
        let common: Vec<u64> = (0..shared).map(|_| rng.random()).collect();
        let a: HashSet<u64> = common.iter().copied().chain((0..only_a).map(|_| rng.random())).collect();
        let b: HashSet<u64> = common.iter().copied().chain((0..only_b).map(|_| rng.random())).collect();
        let est = hasher
            .signature_of_hashes(a.iter().copied())
            .estimate_jaccard(&hasher.signature_of_hashes(b.iter().copied()));
        err += (est - exact_jaccard(&a, &b)).abs();
    }
    let mean_err = err / 1000.0;
    ensure!(mean_err <= 0.05, "mean |est - exact| = {mean_err:.4} > 0.05");

    let cfg = CleaningConfig::default();
    let mut corpora = 0;
    for (seed, n) in [(1u64, 50usize), (2, 200), (3, 350), (4, 500)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut segs: Vec<Segment> = Vec::with_capacity(n);
        for i in 0..n {
            let text = if i > 0 && rng.random_bool(0.3) {
                // perturb an earlier row by one token
                let base = &segs[rng.random_range(0..i)].source_text;
                let mut words: Vec<&str> = base.split(' ').collect();
                let at = rng.random_range(0..words.len());
                words[at] = IT_WORDS.choose(&mut rng).unwrap();
                words.join(" ")
            } else {
                let len = rng.random_range(8..24);
                (0..len).map(|_| *IT_WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ")
            };
            segs.push(Segment::new(format!("s{i:04}"), text, "x", "t"));
        }
        let c = Corpus::new("t", segs);
        let got: Vec<String> = near_dedup(&c, &cfg).segments.into_iter().map(|s| s.id).collect();
        let want = dedup_brute_force(&c, &cfg);
        ensure!(got == want, "near_dedup differs from all-pairs on {n} segments ({} vs {} kept)", got.len(), want.len());
        corpora += 1;
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(30), "took {took:?}");
    Ok(format!("mean error {mean_err:.4}; {corpora} corpora match all-pairs; {took:.1?}"))
}

// -------------------------------------------------------------- retrieval

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn random_matrix(rng: &mut ChaCha8Rng, prefix: &str, n: usize, dim: usize) -> EmbeddingMatrix {
    let ids = (0..n).map(|i| format!("{prefix}{i:05}")).collect();
    let rows = (0..n).map(|_| (0..dim).map(|_| normal(rng) as f32).collect()).collect();
    EmbeddingMatrix::from_rows(ids, rows).unwrap()
}

fn retrieval_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let dim = 32;
    let reference = random_matrix(&mut rng, "r", 150, dim);
    let candidates = random_matrix(&mut rng, "c", 1000, dim);
    let set = kmeans_cluster(&reference, 5, 3).map_err(|e| e.to_string())?;
    let got: Vec<String> = retrieve_topk(&candidates, &set, 100)
        .map_err(|e| e.to_string())?
        .ranked
        .into_iter()
        .map(|c: RankedCandidate| c.segment_id)
        .collect();

    // full cosine matrix, then a plain sort
    let mut scored: Vec<(f64, String)> = (0..candidates.len())
        .map(|i| {
            let row: Vec<f64> = candidates.row(i).iter().map(|&x| x as f64).collect();
            let best = set.centroids.iter().map(|c| cosine(&row, c)).fold(f64::NEG_INFINITY, f64::max);
            (best, candidates.ids()[i].clone())
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1)));
    let want: Vec<String> = scored.into_iter().take(100).map(|(_, id)| id).collect();
    let diverge = got.iter().zip(&want).position(|(g, w)| g != w);
    ensure!(got.len() == 100 && diverge.is_none(), "first divergence at rank {:?}", diverge.map(|d| d + 1));
    Ok("1000 candidates, k=5, top 100 identical to brute force".into())
}

// ------------------------------------------------------------- clustering

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut map = HashMap::new();
    let mut back = HashMap::new();
    a.iter().zip(b).all(|(x, y)| *map.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

fn clustering_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dim = 8;
    let sigma = 0.1;
    // centers 1.5 apart on orthogonal axes: separation 15 sigma
    let centers: Vec<Vec<f64>> = (0..3)
        .map(|j| (0..dim).map(|d| if d == j { 1.5 / 2f64.sqrt() } else { 0.0 }).collect())
        .collect();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for i in 0..60 {
        let j = i % 3;
        ids.push(format!("p{i:02}"));
        rows.push(centers[j].iter().map(|c| (c + sigma * normal(&mut rng)) as f32).collect());
        truth.push(j);
    }
    let min_sep = (0..3)
        .flat_map(|a| (a + 1..3).map(move |b| (a, b)))
        .map(|(a, b)| centers[a].iter().zip(&centers[b]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min);
    ensure!(min_sep >= 10.0 * sigma, "fixture separation {min_sep} below 10 sigma");
    let m = EmbeddingMatrix::from_rows(ids, rows).unwrap();
    for seed in 0..20 {
        let set = kmeans_cluster(&m, 3, seed).map_err(|e| e.to_string())?;
        ensure!(same_partition(&set.assignments, &truth), "seed {seed}: partition differs from ground truth");
        let h = &set.inertia_history;
        ensure!(!h.is_empty(), "seed {seed}: no inertia history");
        ensure!(
            h.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs()),
            "seed {seed}: inertia increased: {h:?}"
        );
    }
    Ok(format!("20 seeds recover 3 blobs ({:.0} sigma apart); inertia non-increasing", min_sep / sigma))
}

// -------------------------------------------------------------- threshold

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

/// Independent restatement of the rule: the first partition where
/// out-of-domain labels outnumber in-domain ones is cut with everything after it.
fn oracle_cut(labels: &[(usize, bool)], partitions: usize) -> Option<usize> {
    (1..=partitions).find(|&p| {
        let n_in = labels.iter().filter(|(q, x)| *q == p && *x).count();
        let n_out = labels.iter().filter(|(q, x)| *q == p && !*x).count();
        n_out > n_in
    })
}

fn threshold_rule() -> Outcome {
    let parts = make_partitions(&ranked(600), 6).map_err(|e| e.to_string())?;
    let props = [0.9, 0.8, 0.7, 0.6, 0.4, 0.2];
    let mut labels = Vec::new();
    for (p, &prop) in parts.iter().zip(&props) {
        let n_in = (prop * 50.0f64).round() as usize;
        for (k, id) in p.member_ids.iter().take(50).enumerate() {
            labels.push(label(id, k < n_in));
        }
    }
    let d = select_threshold(&parts, &labels).map_err(|e| e.to_string())?;
    ensure!(d.cut_partition == Some(5), "worked example cut {:?}, expected 5", d.cut_partition);
    let want_ids: Vec<String> = parts[..4].iter().flat_map(|p| p.member_ids.clone()).collect();
    ensure!(d.retained_ids == want_ids, "worked example did not retain exactly partitions 1-4");

    // monotonicity: flipping a label toward in-domain never moves the cut earlier,
    // and toward out-of-domain never moves it later
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let parts = make_partitions(&ranked(300), 6).map_err(|e| e.to_string())?;
    let mut state: Vec<(usize, String, bool)> = parts
        .iter()
        .flat_map(|p| p.member_ids.iter().take(10).map(move |id| (p.index, id.clone())))
        .map(|(pi, id)| {
            let inside = rng.random_bool(1.0 - pi as f64 / 7.0);
            (pi, id, inside)
        })
        .collect();
    let cut_of = |s: &[(usize, String, bool)]| -> Result<usize, String> {
        let ls: Vec<DomainLabel> = s.iter().map(|(_, id, x)| label(id, *x)).collect();
        let d = select_threshold(&parts, &ls).map_err(|e| e.to_string())?;
        let o = oracle_cut(&s.iter().map(|(p, _, x)| (*p, *x)).collect::<Vec<_>>(), 6);
        if d.cut_partition != o {
            return Err(format!("cut {:?} vs oracle {o:?}", d.cut_partition));
        }
        Ok(d.cut_partition.unwrap_or(usize::MAX))
    };
    for flip in 0..1000 {
        let before = cut_of(&state)?;
        let i = rng.random_range(0..state.len());
        let mut up = state.clone();
        up[i].2 = true;
        let mut down = state.clone();
        down[i].2 = false;
        ensure!(cut_of(&up)? >= before, "flip {flip}: in-domain flip moved the cut earlier");
        ensure!(cut_of(&down)? <= before, "flip {flip}: out-of-domain flip moved the cut later");
        state[i].2 = rng.random_bool(0.5);
    }
    Ok("worked example keeps partitions 1-4; 1000 flips monotone and match the oracle".into())
}

// ------------------------------------------------------------ readability

struct Row {
    text: &'static str,
    sentences: f64,
    words: f64,
    syllables: f64,
    characters: f64,
    complex: f64,
    misses: f64,
}

// counts worked by hand from the syllable rules and familiar-word list
const WORKSHEET: &[Row] = &[
    Row { text: "The river is high.", sentences: 1.0, words: 4.0, syllables: 5.0, characters: 14.0, complex: 0.0, misses: 0.0 },
    Row { text: "Stay away from the water.", sentences: 1.0, words: 5.0, syllables: 7.0, characters: 20.0, complex: 0.0, misses: 0.0 },
    Row { text: "Do not drive on flooded roads.", sentences: 1.0, words: 6.0, syllables: 7.0, characters: 24.0, complex: 0.0, misses: 0.0 },
    Row { text: "Emergency services are working in the area.", sentences: 1.0, words: 7.0, syllables: 14.0, characters: 36.0, complex: 2.0, misses: 2.0 },
    Row { text: "Call 112 if you see a fire.", sentences: 1.0, words: 7.0, syllables: 7.0, characters: 20.0, complex: 0.0, misses: 0.0 },
    Row { text: "Wait. Help is coming.", sentences: 2.0, words: 4.0, syllables: 5.0, characters: 16.0, complex: 0.0, misses: 0.0 },
    Row { text: "Dangerous winds will continue tonight.", sentences: 1.0, words: 5.0, syllables: 10.0, characters: 33.0, complex: 2.0, misses: 1.0 },
    Row { text: "Keep your phone charged.", sentences: 1.0, words: 4.0, syllables: 5.0, characters: 20.0, complex: 0.0, misses: 0.0 },
    Row { text: "Schools will be closed on Monday.", sentences: 1.0, words: 6.0, syllables: 8.0, characters: 27.0, complex: 0.0, misses: 0.0 },
    Row { text: "Move to higher ground immediately!", sentences: 1.0, words: 5.0, syllables: 10.0, characters: 29.0, complex: 1.0, misses: 2.0 },
];

fn by_hand(r: &Row) -> [f64; 6] {
    let (s, w, y, c) = (r.sentences, r.words, r.syllables, r.characters);
    let hard = 100.0 * r.misses / w;
    [
        206.835 - 1.015 * (w / s) - 84.6 * (y / w),
        0.39 * (w / s) + 11.8 * (y / w) - 15.59,
        1.0430 * (r.complex * (30.0 / s)).sqrt() + 3.1291,
        0.0588 * (c / w * 100.0) - 0.296 * (s / w * 100.0) - 15.8,
        4.71 * (c / w) + 0.5 * (w / s) - 21.43,
        0.1579 * hard + 0.0496 * (w / s) + if hard > 5.0 { 3.6365 } else { 0.0 },
    ]
}

fn readability_oracle(demo_out: &Path) -> Outcome {
    let cat = readability_report("The cat sat on the mat.").map_err(|e| e.to_string())?;
    ensure!((cat.fre - 116.145).abs() < 1e-6, "FRE {}", cat.fre);
    ensure!((cat.fkgl - -1.45).abs() < 1e-6, "FKGL {}", cat.fkgl);
    for r in WORKSHEET {
        let got = readability_report(r.text).map_err(|e| e.to_string())?;
        let got = [got.fre, got.fkgl, got.smog, got.coleman_liau, got.ari, got.dale_chall];
        for (k, (g, w)) in got.iter().zip(by_hand(r)).enumerate() {
            ensure!((g - w).abs() < 1e-6, "{:?} index {k}: {g} vs {w}", r.text);
        }
    }
    let dpo = std::fs::read_to_string(demo_out.join("datasets/dpo.jsonl")).map_err(|e| e.to_string())?;
    let recs = parse_dpo_jsonl("dpo", &dpo).map_err(|e| e.to_string())?;
    ensure!(!recs.is_empty(), "demo emitted no preference pairs");
    let mut deltas = Vec::new();
    for r in &recs {
        let c = readability_report(&r.chosen).map_err(|e| e.to_string())?.fre;
        let o = readability_report(&r.rejected).map_err(|e| e.to_string())?.fre;
        deltas.push(c - o);
    }
    let min = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    ensure!(min >= 5.0, "a gate-passing pair has FRE delta {min:.2}");
    Ok(format!("cat/mat and 10-row worksheet exact; {} DPO pairs, FRE delta mean {mean:+.1}, min {min:+.1}", recs.len()))
}

// --------------------------------------------------------- surface metrics

fn chrf_oracle(hyps: &[String], refs: &[String], max_n: usize, beta: f64) -> f64 {
    let mut tot_h = vec![0usize; max_n + 1];
    let mut tot_r = vec![0usize; max_n + 1];
    let mut hit = vec![0usize; max_n + 1];
    for (h, r) in hyps.iter().zip(refs) {
        let hc: Vec<char> = h.chars().filter(|c| !c.is_whitespace()).collect();
        let rc: Vec<char> = r.chars().filter(|c| !c.is_whitespace()).collect();
        for n in 1..=max_n {
            let count = |cs: &[char]| {
                let mut m: BTreeMap<String, usize> = BTreeMap::new();
                if cs.len() >= n {
                    for i in 0..=cs.len() - n {
                        *m.entry(cs[i..i + n].iter().collect()).or_default() += 1;
                    }
                }
                m
            };
            let (hg, rg) = (count(&hc), count(&rc));
            tot_h[n] += hg.values().sum::<usize>();
            tot_r[n] += rg.values().sum::<usize>();
            hit[n] += hg.iter().map(|(g, c)| (*c).min(rg.get(g).copied().unwrap_or(0))).sum::<usize>();
        }
    }
    let b2 = beta * beta;
    let (mut sum, mut orders) = (0.0, 0);
    for n in 1..=max_n {
        if tot_h[n] == 0 || tot_r[n] == 0 {
            continue;
        }
        orders += 1;
        let p = hit[n] as f64 / tot_h[n] as f64;
        let r = hit[n] as f64 / tot_r[n] as f64;
        if p + r > 0.0 {
            sum += (1.0 + b2) * p * r / (b2 * p + r);
        }
    }
    if orders == 0 { 0.0 } else { 100.0 * sum / orders as f64 }
}

const EN_WORDS: &[&str] = &["the", "river", "flood", "warning", "stay", "home", "roads", "closed", "now", "rain", "alert", "area"];

fn surface_metrics() -> Outcome {
    let ident: Vec<String> = [
        "Residents of the lower valley must leave their homes before midnight.",
        "Schools and offices will remain closed on Monday because of the storm.",
    ]
    .map(String::from)
    .to_vec();
    let b = bleu(&ident, &ident, BleuConfig::default()).map_err(|e| e.to_string())?.score;
    let c = chrf(&ident, &ident, ChrfConfig::default()).map_err(|e| e.to_string())?;
    ensure!(b == 1.0 && c == 100.0, "identity BLEU {b}, chrF {c}");

    // precisions 3/3, 2/2, 1/1; BP = exp(1 - 4/3)
    let hand = (1.0f64 - 4.0 / 3.0).exp();
    let got = bleu(
        &["the cat sat".to_string()],
        &["the cat sat down".to_string()],
        BleuConfig { max_n: 3, smooth: false },
    )
    .map_err(|e| e.to_string())?
    .score;
    ensure!((got - 0.7165).abs() < 1e-4 && (got - hand).abs() < 1e-12, "hand BLEU case {got}");

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let text = |rng: &mut ChaCha8Rng| {
        let n = rng.random_range(1..12);
        (0..n).map(|_| *EN_WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
    };
    let hyps: Vec<String> = (0..50).map(|_| text(&mut rng)).collect();
    let refs: Vec<String> = (0..50).map(|_| text(&mut rng)).collect();
    let mut worst = 0.0f64;
    for i in 0..50 {
        let g = chrf(&hyps[i..=i], &refs[i..=i], ChrfConfig::default()).map_err(|e| e.to_string())?;
        worst = worst.max((g - chrf_oracle(&hyps[i..=i], &refs[i..=i], 6, 2.0)).abs());
    }
    let corpus = chrf(&hyps, &refs, ChrfConfig::default()).map_err(|e| e.to_string())?;
    worst = worst.max((corpus - chrf_oracle(&hyps, &refs, 6, 2.0)).abs());
    ensure!(worst < 1e-9, "chrF differs from recount by {worst:e}");
    Ok(format!("identity 1.0/100; hand BLEU {got:.4}; chrF max deviation {worst:.1e} over 50 pairs"))
}

// -------------------------------------------------------- MQM / agreement

fn mqm_agreement() -> Outcome {
    let weight = |s: &str| match s {
        "trivial" => 0.0,
        "minor" => 1.0,
        "major" => 5.0,
        "critical" => 25.0,
        _ => unreachable!(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..1000 {
        let n = rng.random_range(0..20);
        let mut anns = Vec::new();
        let mut want = 0.0;
        for _ in 0..n {
            let sev = *["trivial", "minor", "major", "critical"].choose(&mut rng).unwrap();
            let cat = *MqmCategory::ALL.choose(&mut rng).unwrap();
            want -= weight(sev);
            anns.push(MqmAnnotation {
                segment_id: "s".into(),
                category: cat,
                subtype: cat.subtypes().choose(&mut rng).unwrap().to_string(),
                severity: sev.parse::<Severity>().map_err(|e| e.to_string())?,
                annotator: "a".into(),
                span: None,
            });
        }
        let got = mqm_segment_score(&anns);
        ensure!(got == want, "case {case}: {got} vs {want}");
    }

    let mut a = Vec::new();
    let mut b = Vec::new();
    for (x, y, n) in [("in", "in", 45), ("in", "out", 5), ("out", "in", 5), ("out", "out", 45)] {
        for _ in 0..n {
            a.push(x);
            b.push(y);
        }
    }
    let k = cohens_kappa(&a, &b).map_err(|e| e.to_string())?.kappa;
    ensure!((k - 0.8).abs() < 1e-12, "kappa {k} on (45,5;5,45)");

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ra: Vec<&str> = (0..10_000).map(|_| *["in", "out"].choose(&mut rng).unwrap()).collect();
    let rb: Vec<&str> = (0..10_000).map(|_| *["in", "out"].choose(&mut rng).unwrap()).collect();
    let rk = cohens_kappa(&ra, &rb).map_err(|e| e.to_string())?.kappa;
    ensure!(rk > -0.1 && rk < 0.1, "random kappa {rk}");
    Ok(format!("1000 random annotation lists exact; kappa 0.8; random kappa {rk:+.4}"))
}

// ------------------------------------------------------------- end to end

fn demo_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("demo")
}

/// Copies the checked-in fixture (without any previous output) into `dst`.
fn copy_fixture(dst: &Path) -> Result<(), String> {
    let demo = crisismine::demo::build().map_err(|e| e.to_string())?;
    for name in demo.files.keys() {
        let to = dst.join(name);
        std::fs::create_dir_all(to.parent().unwrap()).map_err(|e| e.to_string())?;
        std::fs::copy(demo_dir().join(name), &to).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(())
}

fn run_demo(dir: &Path) -> Result<Duration, String> {
    copy_fixture(dir)?;
    let start = Instant::now();
    let cfg = PipelineConfig::load(&dir.join("crisismine.toml")).map_err(|e| e.to_string())?;
    Pipeline::new(cfg).and_then(|p| p.run_all()).map_err(|e| e.to_string())?;
    Ok(start.elapsed())
}

fn end_to_end(dir: &Path, took: Duration) -> Outcome {
    let demo = crisismine::demo::build().map_err(|e| e.to_string())?;
    let mut stale = Vec::new();
    for (name, bytes) in &demo.files {
        if std::fs::read(demo_dir().join(name)).ok().as_ref() != Some(bytes) {
            stale.push(name.clone());
        }
    }
    ensure!(stale.is_empty(), "checked-in fixture differs from the generator: {stale:?}");
    let planted: HashSet<String> = demo.planted.into_iter().collect();
    ensure!(planted.len() == 200, "fixture plants {} segments", planted.len());
    let raw = std::fs::read_to_string(dir.join("general.jsonl")).map_err(|e| e.to_string())?;
    ensure!(raw.lines().count() == 600, "fixture has {} candidates", raw.lines().count());

    let retained = std::fs::read_to_string(dir.join("out/threshold/retained.jsonl")).map_err(|e| e.to_string())?;
    let ids: Vec<String> = retained
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .collect();
    let tp = ids.iter().filter(|id| planted.contains(*id)).count();
    let precision = tp as f64 / ids.len().max(1) as f64;
    let recall = tp as f64 / planted.len() as f64;
    ensure!(precision >= 0.9 && recall >= 0.9, "precision {precision:.3}, recall {recall:.3}");
    ensure!(took < Duration::from_secs(60), "full run took {took:?}");
    Ok(format!("retained {}: precision {precision:.3}, recall {recall:.3}; full run {took:.1?}", ids.len()))
}

fn list_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let fa = list_files(&a.join("out"));
    let fb = list_files(&b.join("out"));
    ensure!(
        fa.keys().eq(fb.keys()),
        "artifact sets differ: {:?}",
        fa.keys().collect::<HashSet<_>>().symmetric_difference(&fb.keys().collect()).collect::<Vec<_>>()
    );
    let differing: Vec<&String> = fa.iter().filter(|(k, v)| fb[*k] != **v).map(|(k, _)| k).collect();
    ensure!(differing.is_empty(), "artifacts differ between runs: {differing:?}");
    let manifests = fa.keys().filter(|k| k.starts_with("manifests/")).count();
    ensure!(manifests >= 13, "only {manifests} stage manifests written");
    Ok(format!("{} files across {manifests} stage manifests byte-identical", fa.len()))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("MinHash fidelity", minhash_fidelity()),
        ("Retrieval exactness", retrieval_exactness()),
        ("Clustering recovery", clustering_recovery()),
        ("Threshold rule", threshold_rule()),
    ];

    let tmp = tempfile::tempdir().expect("temp dir");
    let (a, b) = (tmp.path().join("run-a"), tmp.path().join("run-b"));
    let run_a = run_demo(&a);
    let run_b = run_demo(&b);

    match &run_a {
        Ok(_) => results.push(("Readability oracle", readability_oracle(&a.join("out")))),
        Err(e) => results.push(("Readability oracle", Err(format!("demo run failed: {e}")))),
    }
    results.push(("Surface metrics", surface_metrics()));
    results.push(("MQM/agreement", mqm_agreement()));
    match &run_a {
        Ok(took) => results.push(("End-to-end desk-scale run", end_to_end(&a, *took))),
        Err(e) => results.push(("End-to-end desk-scale run", Err(format!("demo run failed: {e}")))),
    }
    match (&run_a, &run_b) {
        (Ok(_), Ok(_)) => results.push(("Determinism", determinism(&a, &b))),
        (Err(e), _) | (_, Err(e)) => results.push(("Determinism", Err(format!("demo run failed: {e}")))),
    }

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
