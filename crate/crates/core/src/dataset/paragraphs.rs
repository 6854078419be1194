use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::embedding::{dot, EmbeddingMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Sentence,
    Paragraph,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParagraphExample {
    pub id: String,
    pub source_paragraph: String,
    pub target_paragraph: String,
    pub member_ids: Vec<String>,
    pub granularity: Granularity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParagraphConfig {
    /// Paragraphs per input segment.
    pub target_ratio: f64,
    pub min_size: usize,
    pub max_size: usize,
    /// A segment joins a paragraph only if its cosine to the paragraph mean
    /// is at least this.
    pub min_similarity: f64,
    pub seed: u64,
}

impl Default for ParagraphConfig {
    fn default() -> Self {
        ParagraphConfig {
            target_ratio: 0.1,
            min_size: 3,
            max_size: 6,
            min_similarity: 0.3,
            seed: 0x9a7a,
        }
    }
}

impl ParagraphConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.target_ratio) {
            return Err(Error::Config(format!("target_ratio {} outside [0, 1]", self.target_ratio)));
        }
        if self.min_size < 2 || self.min_size > self.max_size {
            return Err(Error::Config(format!(
                "paragraph size range {}..={} is invalid",
                self.min_size, self.max_size
            )));
        }
        if !(-1.0..=1.0).contains(&self.min_similarity) {
            return Err(Error::Config(format!("min_similarity {} outside [-1, 1]", self.min_similarity)));
        }
        Ok(())
    }
}

/// Source-side unit rows in corpus order.
fn aligned_rows(corpus: &Corpus, embeddings: &EmbeddingMatrix) -> Result<Vec<Vec<f64>>> {
    let pos: HashMap<&str, usize> = embeddings
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let missing: Vec<String> = corpus
        .segments
        .iter()
        .filter(|s| !pos.contains_key(s.id.as_str()))
        .map(|s| s.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingIds(missing));
    }
    corpus
        .segments
        .iter()
        .map(|s| {
            crate::embedding::unit(embeddings.row(pos[s.id.as_str()]))
                .ok_or_else(|| Error::Domain(format!("embedding of `{}` is the zero vector", s.id)))
        })
        .collect()
}

/// Groups similar segments into short paragraphs and emits every other
/// segment as a sentence-level example.
///
/// Seeds are visited in a seeded random order. Each paragraph draws a size
/// in `min_size..=max_size` and grows by the unused segment with the highest
/// cosine to the current member mean (ties to the earlier segment), stopping
/// early when no candidate reaches `min_similarity`. A paragraph that stays
/// below `min_size` is dropped and its members remain sentence-level.
/// About `target_ratio * n` paragraphs are built. Examples are ordered by
/// the corpus position of their first member.
pub fn build_paragraphs(
    corpus: &Corpus,
    embeddings: &EmbeddingMatrix,
    cfg: &ParagraphConfig,
) -> Result<Vec<ParagraphExample>> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Ok(Vec::new());
    }
    let rows = aligned_rows(corpus, embeddings)?;
    let n = rows.len();
    let target = (cfg.target_ratio * n as f64).round() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    // owner[i] = paragraph number for grouped segments
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &seed in &order {
        if groups.len() >= target {
            break;
        }
        if owner[seed].is_some() {
            continue;
        }
        let size = rng.random_range(cfg.min_size..=cfg.max_size);
        let mut members = vec![seed];
        // sum of member rows; cosine to the mean is dot(x, sum) / |sum|
        let mut sum = rows[seed].clone();
        let mut in_group = vec![false; n];
        in_group[seed] = true;
        while members.len() < size {
            let norm = dot(&sum, &sum).sqrt();
            if norm == 0.0 {
                break;
            }
            let best = (0..n)
                .into_par_iter()
                .filter(|&i| owner[i].is_none() && !in_group[i])
                .map(|i| (dot(&rows[i], &sum) / norm, i))
                .reduce_with(|a, b| {
                    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                        b
                    } else {
                        a
                    }
                });
            match best {
                Some((sim, i)) if sim >= cfg.min_similarity => {
                    members.push(i);
                    in_group[i] = true;
                    for (s, x) in sum.iter_mut().zip(&rows[i]) {
                        *s += x;
                    }
                }
                _ => break,
            }
        }
        if members.len() >= cfg.min_size {
            for &m in &members {
                owner[m] = Some(groups.len());
            }
            groups.push(members);
        }
    }

    let segs = &corpus.segments;
    let mut out: Vec<(usize, ParagraphExample)> = Vec::with_capacity(n);
    for (g, members) in groups.iter().enumerate() {
        let first = *members.iter().min().unwrap();
        let join = |f: fn(&crate::corpus::Segment) -> &str| {
            members.iter().map(|&m| f(&segs[m])).collect::<Vec<_>>().join(" ")
        };
        out.push((
            first,
            ParagraphExample {
                id: format!("para:{:05}", g + 1),
                source_paragraph: join(|s| s.source_text.as_str()),
                target_paragraph: join(|s| s.target_text.as_str()),
                member_ids: members.iter().map(|&m| segs[m].id.clone()).collect(),
                granularity: Granularity::Paragraph,
            },
        ));
    }
    for (i, s) in segs.iter().enumerate() {
        if owner[i].is_none() {
            out.push((
                i,
                ParagraphExample {
                    id: s.id.clone(),
                    source_paragraph: s.source_text.clone(),
                    target_paragraph: s.target_text.clone(),
                    member_ids: vec![s.id.clone()],
                    granularity: Granularity::Sentence,
                },
            ));
        }
    }
    out.sort_by_key(|(first, _)| *first);
    Ok(out.into_iter().map(|(_, ex)| ex).collect())
}
