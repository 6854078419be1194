use std::collections::HashMap;

use crate::{Error, Result};

/// Lowercases and splits on whitespace; every character that is neither
/// alphanumeric nor whitespace becomes a token of its own.
pub fn bleu_tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            cur.push(c);
            continue;
        }
        if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
        if !c.is_whitespace() {
            out.push(c.to_string());
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BleuConfig {
    pub max_n: usize,
    /// Add-one smoothing of precisions for orders above 1.
    pub smooth: bool,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig { max_n: 4, smooth: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BleuScore {
    /// In `[0, 1]`.
    pub score: f64,
    pub precisions: Vec<f64>,
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

pub(crate) fn check_pairs(hyps: &[String], refs: &[String]) -> Result<()> {
    if hyps.len() != refs.len() {
        return Err(Error::Param(format!(
            "{} hypotheses but {} references",
            hyps.len(),
            refs.len()
        )));
    }
    if hyps.is_empty() {
        return Err(Error::Param("no segments to score".into()));
    }
    Ok(())
}

/// Corpus BLEU with one reference per hypothesis.
pub fn bleu(hyps: &[String], refs: &[String], cfg: BleuConfig) -> Result<BleuScore> {
    check_pairs(hyps, refs)?;
    if cfg.max_n == 0 {
        return Err(Error::Param("max_n must be at least 1".into()));
    }
    let mut matches = vec![0u64; cfg.max_n];
    let mut totals = vec![0u64; cfg.max_n];
    let (mut c, mut r) = (0u64, 0u64);
    for (i, (h, rf)) in hyps.iter().zip(refs).enumerate() {
        let ht = bleu_tokenize(h);
        let rt = bleu_tokenize(rf);
        if rt.is_empty() {
            return Err(Error::Data(format!("reference {} is empty", i + 1)));
        }
        c += ht.len() as u64;
        r += rt.len() as u64;
        for n in 1..=cfg.max_n {
            let hc = ngram_counts(&ht, n);
            let rc = ngram_counts(&rt, n);
            matches[n - 1] += hc
                .iter()
                .map(|(g, &k)| k.min(rc.get(g).copied().unwrap_or(0)))
                .sum::<u64>();
            totals[n - 1] += ht.len().saturating_sub(n - 1) as u64;
        }
    }
    let precisions: Vec<f64> = (0..cfg.max_n)
        .map(|i| {
            if cfg.smooth && i > 0 {
                (matches[i] + 1) as f64 / (totals[i] + 1) as f64
            } else if totals[i] == 0 {
                0.0
            } else {
                matches[i] as f64 / totals[i] as f64
            }
        })
        .collect();
    let brevity_penalty = if c == 0 {
        0.0
    } else if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    };
    let score = if precisions.contains(&0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / cfg.max_n as f64;
        brevity_penalty * log_mean.exp()
    };
    Ok(BleuScore {
        score,
        precisions,
        matches,
        totals,
        brevity_penalty,
        hyp_len: c,
        ref_len: r,
    })
}
