use std::collections::HashMap;

use super::bleu::check_pairs;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChrfConfig {
    pub char_n: usize,
    pub beta: f64,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        ChrfConfig { char_n: 6, beta: 2.0 }
    }
}

/// Per-order corpus totals: hypothesis n-grams, reference n-grams, matches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChrfStats {
    pub hyp: u64,
    pub reference: u64,
    pub matched: u64,
}

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], u64> {
    let mut m = HashMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

pub fn chrf_stats(hyps: &[String], refs: &[String], char_n: usize) -> Result<Vec<ChrfStats>> {
    check_pairs(hyps, refs)?;
    let mut stats = vec![ChrfStats::default(); char_n];
    for (h, r) in hyps.iter().zip(refs) {
        let hc: Vec<char> = h.chars().filter(|c| !c.is_whitespace()).collect();
        let rc: Vec<char> = r.chars().filter(|c| !c.is_whitespace()).collect();
        for n in 1..=char_n {
            let hg = char_ngrams(&hc, n);
            let rg = char_ngrams(&rc, n);
            let st = &mut stats[n - 1];
            st.hyp += hg.values().sum::<u64>();
            st.reference += rg.values().sum::<u64>();
            st.matched += hg
                .iter()
                .map(|(g, &k)| k.min(rg.get(g).copied().unwrap_or(0)))
                .sum::<u64>();
        }
    }
    Ok(stats)
}

/// Character n-gram F-score on a 0–100 scale.
///
/// Whitespace is removed before extracting n-grams. Counts are summed over
/// the corpus per order, an F-beta is computed per order, and the result is
/// the mean over orders for which both sides have n-grams.
pub fn chrf(hyps: &[String], refs: &[String], cfg: ChrfConfig) -> Result<f64> {
    if cfg.char_n == 0 || cfg.beta.is_nan() || cfg.beta <= 0.0 {
        return Err(crate::Error::Param("chrF needs char_n ≥ 1 and beta > 0".into()));
    }
    let stats = chrf_stats(hyps, refs, cfg.char_n)?;
    Ok(chrf_from_stats(&stats, cfg.beta))
}

pub fn chrf_from_stats(stats: &[ChrfStats], beta: f64) -> f64 {
    let b2 = beta * beta;
    let mut sum = 0.0;
    let mut effective = 0usize;
    for st in stats {
        if st.hyp == 0 || st.reference == 0 {
            continue;
        }
        effective += 1;
        let p = st.matched as f64 / st.hyp as f64;
        let r = st.matched as f64 / st.reference as f64;
        if p + r > 0.0 {
            sum += (1.0 + b2) * p * r / (b2 * p + r);
        }
    }
    if effective == 0 {
        0.0
    } else {
        100.0 * sum / effective as f64
    }
}
