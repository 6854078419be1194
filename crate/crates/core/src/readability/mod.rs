//! Readability indices for English text.
//!
//! Scores depend on the sentence splitter's abbreviation list, the syllable
//! rules and the familiar-word list shipped with this crate, so they are only
//! comparable between runs of the same crate version.

mod dale_chall;
mod syllables;
mod text;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Side};
use crate::{Error, Result};

pub use dale_chall::{familiar_word_count, is_familiar, FAMILIAR_WORDS_SHA256};
pub use syllables::count_syllables;
pub use text::{sentences, words, ABBREVIATIONS};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextStats {
    pub sentences: usize,
    pub words: usize,
    /// Letters and digits inside words.
    pub characters: usize,
    pub syllables: usize,
    /// Words of three or more syllables.
    pub complex_words: usize,
    /// Words not on the familiar-word list.
    pub familiar_word_misses: usize,
}

pub fn text_stats(text: &str) -> TextStats {
    let ws = words(text);
    let mut st = TextStats {
        sentences: sentences(text).len(),
        words: ws.len(),
        ..TextStats::default()
    };
    for w in ws {
        let syl = count_syllables(w);
        st.syllables += syl;
        st.complex_words += usize::from(syl >= 3);
        st.characters += w.chars().filter(|c| c.is_alphanumeric()).count();
        st.familiar_word_misses += usize::from(!is_familiar(w));
    }
    st
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityReport {
    pub fre: f64,
    pub fkgl: f64,
    pub smog: f64,
    pub coleman_liau: f64,
    pub ari: f64,
    pub dale_chall: f64,
    pub stats: TextStats,
}

impl ReadabilityReport {
    pub fn from_stats(stats: TextStats) -> Result<Self> {
        if stats.words == 0 || stats.sentences == 0 {
            return Err(Error::Domain(format!(
                "readability needs at least one word and one sentence (got {} words, {} sentences)",
                stats.words, stats.sentences
            )));
        }
        let w = stats.words as f64;
        let s = stats.sentences as f64;
        let wps = w / s;
        let spw = stats.syllables as f64 / w;
        let miss = stats.familiar_word_misses as f64 / w;
        let letters_per_100 = stats.characters as f64 / w * 100.0;
        let sentences_per_100 = s / w * 100.0;
        let mut dale_chall = 0.1579 * (miss * 100.0) + 0.0496 * wps;
        if miss > 0.05 {
            dale_chall += 3.6365;
        }
        Ok(ReadabilityReport {
            fre: 206.835 - 1.015 * wps - 84.6 * spw,
            fkgl: 0.39 * wps + 11.8 * spw - 15.59,
            smog: 1.0430 * (stats.complex_words as f64 * 30.0 / s).sqrt() + 3.1291,
            coleman_liau: 0.0588 * letters_per_100 - 0.296 * sentences_per_100 - 15.8,
            ari: 4.71 * (stats.characters as f64 / w) + 0.5 * wps - 21.43,
            dale_chall,
            stats,
        })
    }
}

pub fn readability_report(text: &str) -> Result<ReadabilityReport> {
    ReadabilityReport::from_stats(text_stats(text))
}

/// Mean and quantiles of one index over a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexSummary {
    pub mean: f64,
    pub p10: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
}

impl IndexSummary {
    fn of(values: &mut [f64]) -> Self {
        values.sort_by(f64::total_cmp);
        IndexSummary {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            p10: quantile(values, 0.10),
            p25: quantile(values, 0.25),
            p50: quantile(values, 0.50),
            p75: quantile(values, 0.75),
            p90: quantile(values, 0.90),
        }
    }
}

/// Linear interpolation between closest ranks of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReadability {
    pub side: Side,
    pub scored: usize,
    pub skipped_count: usize,
    pub skipped_ids: Vec<String>,
    pub fre: IndexSummary,
    pub fkgl: IndexSummary,
    pub smog: IndexSummary,
    pub coleman_liau: IndexSummary,
    pub ari: IndexSummary,
    pub dale_chall: IndexSummary,
}

/// Per-segment reports of one side, in corpus order. Segments without a
/// word or sentence map to `None`.
pub fn segment_reports(corpus: &Corpus, side: Side) -> Vec<Option<ReadabilityReport>> {
    corpus
        .segments
        .par_iter()
        .map(|s| readability_report(s.side(side)).ok())
        .collect()
}

/// Macro-average over segments; segments that cannot be scored are skipped
/// and counted.
pub fn corpus_readability(corpus: &Corpus, side: Side) -> Result<CorpusReadability> {
    if corpus.is_empty() {
        return Err(Error::Param(format!("corpus `{}` is empty", corpus.name)));
    }
    let reports = segment_reports(corpus, side);
    let skipped_ids: Vec<String> = corpus
        .segments
        .iter()
        .zip(&reports)
        .filter(|(_, r)| r.is_none())
        .map(|(s, _)| s.id.clone())
        .collect();
    let ok: Vec<ReadabilityReport> = reports.into_iter().flatten().collect();
    if ok.is_empty() {
        return Err(Error::Domain(format!(
            "no segment of `{}` could be scored",
            corpus.name
        )));
    }
    let summary = |f: fn(&ReadabilityReport) -> f64| {
        let mut v: Vec<f64> = ok.iter().map(f).collect();
        IndexSummary::of(&mut v)
    };
    Ok(CorpusReadability {
        side,
        scored: ok.len(),
        skipped_count: skipped_ids.len(),
        skipped_ids,
        fre: summary(|r| r.fre),
        fkgl: summary(|r| r.fkgl),
        smog: summary(|r| r.smog),
        coleman_liau: summary(|r| r.coleman_liau),
        ari: summary(|r| r.ari),
        dale_chall: summary(|r| r.dale_chall),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Segment;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn cat_sat_on_the_mat() {
        let st = text_stats("The cat sat on the mat.");
        assert_eq!((st.sentences, st.words, st.syllables), (1, 6, 6));
        assert_eq!(st.characters, 17);
        assert_eq!(st.complex_words, 0);
        let r = readability_report("The cat sat on the mat.").unwrap();
        // 206.835 - 1.015*6 - 84.6*1
        assert!(close(r.fre, 116.145), "{}", r.fre);
        // 0.39*6 + 11.8*1 - 15.59
        assert!(close(r.fkgl, -1.45), "{}", r.fkgl);
        assert!(close(r.smog, 3.1291));
        // L = 17/6*100, T = 1/6*100
        let cli = 0.0588 * (1700.0 / 6.0) - 0.296 * (100.0 / 6.0) - 15.8;
        assert!(close(r.coleman_liau, cli));
        assert!(close(r.ari, 4.71 * 17.0 / 6.0 + 3.0 - 21.43));
        assert_eq!(st.familiar_word_misses, 0);
        assert!(close(r.dale_chall, 0.0496 * 6.0));
    }

    #[test]
    fn evacuate_immediately() {
        let st = text_stats("Evacuate immediately.");
        assert_eq!((st.words, st.syllables, st.complex_words), (2, 9, 2));
    }

    #[test]
    fn empty_text() {
        assert_eq!(text_stats(""), TextStats::default());
        assert!(matches!(readability_report(""), Err(Error::Domain(_))));
        assert!(matches!(readability_report("?!"), Err(Error::Domain(_))));
    }

    #[test]
    fn duplicated_text_same_report() {
        let t = "Residents must leave the area now. Shelters are open at the school!";
        let a = readability_report(t).unwrap();
        let b = readability_report(&format!("{t} {t}")).unwrap();
        for (x, y) in [
            (a.fre, b.fre),
            (a.fkgl, b.fkgl),
            (a.smog, b.smog),
            (a.coleman_liau, b.coleman_liau),
            (a.ari, b.ari),
            (a.dale_chall, b.dale_chall),
        ] {
            assert!(close(x, y), "{x} vs {y}");
        }
    }

    #[test]
    fn dale_chall_jump_at_five_percent() {
        // 20 words, one miss = exactly 5%: no adjustment. Two misses: adjusted.
        let base = TextStats {
            sentences: 1,
            words: 20,
            characters: 80,
            syllables: 20,
            complex_words: 0,
            familiar_word_misses: 1,
        };
        let at = ReadabilityReport::from_stats(base).unwrap().dale_chall;
        assert!(close(at, 0.1579 * 5.0 + 0.0496 * 20.0));
        // 1000 words: 50 misses is 5%, 51 is just over
        let big = TextStats { words: 1000, sentences: 50, familiar_word_misses: 50, ..base };
        let below = ReadabilityReport::from_stats(big).unwrap().dale_chall;
        let above = ReadabilityReport::from_stats(TextStats { familiar_word_misses: 51, ..big })
            .unwrap()
            .dale_chall;
        assert!(close(above - below - 0.1579 * 0.1, 3.6365), "{}", above - below);
    }

    #[test]
    fn corpus_mean_and_skip() {
        let segs = vec![
            Segment::new("a", "x", "The cat sat on the mat.", "t"),
            Segment::new("b", "x", "...", "t"),
            Segment::new("c", "x", "Evacuate immediately.", "t"),
        ];
        let c = Corpus::new("t", segs);
        let agg = corpus_readability(&c, Side::Target).unwrap();
        assert_eq!(agg.skipped_count, 1);
        assert_eq!(agg.skipped_ids, ["b"]);
        assert_eq!(agg.scored, 2);
        let r1 = readability_report("The cat sat on the mat.").unwrap().fre;
        let r2 = readability_report("Evacuate immediately.").unwrap().fre;
        assert!(close(agg.fre.mean, (r1 + r2) / 2.0));
        assert!(close(agg.fre.p50, (r1 + r2) / 2.0));
        assert!(close(agg.fre.p10, r2 + (r1 - r2) * 0.1));
        assert!(corpus_readability(&Corpus::new("e", vec![]), Side::Target).is_err());
    }

    #[test]
    fn quantile_of_forty_and_sixty() {
        let mut v = vec![60.0, 40.0];
        let s = IndexSummary::of(&mut v);
        assert_eq!(s.mean, 50.0);
        assert_eq!(s.p25, 45.0);
    }

    const VOCAB: &[&str] = &[
        "water", "river", "people", "house", "road", "school", "flood", "rain", "the", "rescue",
        "emergency", "authorities", "dangerous", "evacuation", "shelter", "bridge", "mountain",
    ];

    fn sentence() -> impl Strategy<Value = String> {
        (prop::collection::vec(prop::sample::select(VOCAB), 1..15), prop::sample::select(vec![".", "!", "?"]))
            .prop_map(|(ws, p)| format!("{}{p}", ws.join(" ")))
    }

    proptest! {
        #[test]
        fn concatenation_invariance(ss in prop::collection::vec(sentence(), 1..6)) {
            let t = ss.join(" ");
            let a = readability_report(&t).unwrap();
            let b = readability_report(&format!("{t} {t}")).unwrap();
            prop_assert!(close(a.fre, b.fre) && close(a.fkgl, b.fkgl) && close(a.smog, b.smog));
            prop_assert!(close(a.coleman_liau, b.coleman_liau) && close(a.ari, b.ari));
            prop_assert!(close(a.dale_chall, b.dale_chall));
        }

        #[test]
        fn shorter_word_never_lowers_fre(ss in prop::collection::vec(sentence(), 1..4), pick in any::<prop::sample::Index>()) {
            let t = format!("{} The authorities arrived.", ss.join(" "));
            let ws = words(&t);
            let four: Vec<usize> = ws.iter().enumerate().filter(|(_, w)| count_syllables(w) == 4).map(|(i, _)| i).collect();
            let i = four[pick.index(four.len())];
            let mut replaced: Vec<String> = Vec::new();
            let mut n = 0;
            for tok in t.split(' ') {
                let wcount = words(tok).len();
                if n == i && wcount == 1 {
                    let punct: String = tok.chars().filter(|c| !c.is_alphanumeric()).collect();
                    replaced.push(format!("rain{punct}"));
                } else {
                    replaced.push(tok.to_string());
                }
                n += wcount;
            }
            let before = readability_report(&t).unwrap().fre;
            let after = readability_report(&replaced.join(" ")).unwrap().fre;
            prop_assert!(after >= before, "{} -> {}", before, after);
            prop_assert!(after > before);
        }
    }
}
