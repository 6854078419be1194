use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::readability::{readability_report, words};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    /// Minimum Flesch Reading Ease improvement.
    pub min_gain: f64,
    /// Minimum Flesch Reading Ease of the simplified text.
    pub fre_floor: f64,
    pub min_adequacy: f64,
    /// Every number in the original must reappear.
    pub require_numbers: bool,
    /// Safety keywords that must survive when present in the original.
    /// Matched by prefix of the keyword without a final `e`, so `evacuate`
    /// also covers `evacuation`.
    pub keywords: Vec<String>,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            min_gain: 5.0,
            fre_floor: 50.0,
            min_adequacy: 0.5,
            require_numbers: true,
            keywords: ["evacuate", "avoid", "shelter", "warning", "alert", "danger", "emergency", "closed", "forbidden", "112"]
                .map(String::from)
                .to_vec(),
        }
    }
}

/// Replaces the lexical overlap proxy with an external adequacy score.
pub trait AdequacyScorer: Send + Sync {
    fn name(&self) -> String;

    /// Higher is better; compared against `min_adequacy`.
    fn adequacy(&self, original: &str, simplified: &str) -> Result<f64>;
}

/// Measured quantities the gate decides on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateMetrics {
    pub original_fre: Option<f64>,
    pub simplified_fre: Option<f64>,
    pub adequacy: Option<f64>,
    pub adequacy_source: String,
    pub missing_numbers: Vec<String>,
    pub missing_keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub passed: bool,
    pub gain: Option<f64>,
    #[serde(flatten)]
    pub metrics: GateMetrics,
    pub reasons: Vec<String>,
}

impl GateConfig {
    pub fn judge(&self, metrics: GateMetrics) -> GateReport {
        let mut reasons = Vec::new();
        let gain = match (metrics.original_fre, metrics.simplified_fre) {
            (Some(o), Some(s)) => Some(s - o),
            _ => None,
        };
        match gain {
            None => reasons.push("readability could not be scored".to_string()),
            Some(g) if g <= 0.0 => reasons.push("no readability gain".to_string()),
            Some(g) if g < self.min_gain => {
                reasons.push(format!("readability gain {g:.2} below {}", self.min_gain))
            }
            _ => {}
        }
        if let Some(s) = metrics.simplified_fre {
            if s < self.fre_floor {
                reasons.push(format!("simplified FRE {s:.2} below {}", self.fre_floor));
            }
        }
        match metrics.adequacy {
            None => reasons.push(format!("adequacy unavailable ({})", metrics.adequacy_source)),
            Some(a) if a < self.min_adequacy => {
                reasons.push(format!("adequacy {a:.3} below {}", self.min_adequacy))
            }
            _ => {}
        }
        if !metrics.missing_numbers.is_empty() {
            reasons.push(format!("numbers dropped: {}", metrics.missing_numbers.join(", ")));
        }
        if !metrics.missing_keywords.is_empty() {
            reasons.push(format!("safety keywords dropped: {}", metrics.missing_keywords.join(", ")));
        }
        GateReport {
            passed: reasons.is_empty(),
            gain,
            metrics,
            reasons,
        }
    }
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+(?:[.,:/]\d+)*").unwrap())
}

/// Digit runs, keeping internal separators (`3.30`, `1,000`, `24/7`).
pub fn number_tokens(text: &str) -> BTreeSet<String> {
    number_re().find_iter(text).map(|m| m.as_str().to_string()).collect()
}

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been", "before",
    "but", "by", "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her",
    "his", "how", "i", "if", "in", "into", "is", "it", "its", "may", "more", "most", "must", "no", "not",
    "of", "on", "or", "other", "our", "out", "she", "should", "so", "some", "such", "than", "that",
    "the", "their", "them", "then", "there", "these", "they", "this", "those", "to", "up", "very",
    "was", "we", "were", "what", "when", "where", "which", "while", "who", "will", "with", "would",
    "you", "your",
];

/// Crude suffix stripping so that inflected forms compare equal.
pub fn crude_stem(word: &str) -> String {
    let w = word.to_lowercase().replace('’', "'");
    let w = w.strip_suffix("'s").unwrap_or(&w);
    for suffix in ["ingly", "edly", "ing", "ies", "ied", "ed", "es", "ly", "s", "e"] {
        if let Some(stem) = w.strip_suffix(suffix) {
            if stem.chars().count() >= 3 {
                return stem.to_string();
            }
        }
    }
    w.to_string()
}

fn content_stems(text: &str) -> BTreeSet<String> {
    words(text)
        .into_iter()
        .map(str::to_lowercase)
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .map(|w| crude_stem(&w))
        .collect()
}

/// Share of the original's content-word stems that reappear in the
/// simplification. 1.0 when the original has no content words.
pub fn content_overlap(original: &str, simplified: &str) -> f64 {
    let o = content_stems(original);
    if o.is_empty() {
        return 1.0;
    }
    let s = content_stems(simplified);
    o.intersection(&s).count() as f64 / o.len() as f64
}

fn keyword_present(keyword: &str, tokens: &[String]) -> bool {
    let k = keyword.to_lowercase();
    let k = k.strip_suffix('e').filter(|s| !s.is_empty()).unwrap_or(&k);
    tokens.iter().any(|t| t.starts_with(k))
}

fn missing_keywords(keywords: &[String], original: &str, simplified: &str) -> Vec<String> {
    let lower = |t: &str| words(t).into_iter().map(str::to_lowercase).collect::<Vec<_>>();
    let (o, s) = (lower(original), lower(simplified));
    keywords
        .iter()
        .filter(|k| keyword_present(k, &o) && !keyword_present(k, &s))
        .cloned()
        .collect()
}

/// Checks a simplification against `original`. Never fails; problems are
/// listed in the report's reasons.
pub fn quality_gate(
    original: &str,
    simplified: &str,
    cfg: &GateConfig,
    scorer: Option<&dyn AdequacyScorer>,
) -> GateReport {
    let (adequacy, adequacy_source) = match scorer {
        Some(sc) => match sc.adequacy(original, simplified) {
            Ok(a) if a.is_finite() => (Some(a), sc.name()),
            Ok(a) => (None, format!("{} returned {a}", sc.name())),
            Err(e) => (None, format!("{} failed: {e}", sc.name())),
        },
        None => (Some(content_overlap(original, simplified)), "content_overlap".to_string()),
    };
    let missing_numbers = if cfg.require_numbers {
        let have = number_tokens(simplified);
        number_tokens(original).into_iter().filter(|n| !have.contains(n)).collect()
    } else {
        Vec::new()
    };
    cfg.judge(GateMetrics {
        original_fre: readability_report(original).ok().map(|r| r.fre),
        simplified_fre: readability_report(simplified).ok().map(|r| r.fre),
        adequacy,
        adequacy_source,
        missing_numbers,
        missing_keywords: missing_keywords(&cfg.keywords, original, simplified),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    const ORIGINAL: &str = "The authorities have ordered the immediate evacuation of residents living \
        in hydrogeologically vulnerable neighbourhoods within 48 hours.";
    const SIMPLE: &str = "Residents must leave their homes in the danger area. Evacuation must happen within 48 hours. \
        The authorities say this.";

    fn metrics(o: f64, s: f64, a: f64) -> GateMetrics {
        GateMetrics {
            original_fre: Some(o),
            simplified_fre: Some(s),
            adequacy: Some(a),
            adequacy_source: "test".into(),
            missing_numbers: vec![],
            missing_keywords: vec![],
        }
    }

    #[test]
    fn identical_text_has_no_gain() {
        let r = quality_gate(ORIGINAL, ORIGINAL, &GateConfig::default(), None);
        assert!(!r.passed);
        assert!(r.reasons.iter().any(|x| x == "no readability gain"), "{:?}", r.reasons);
    }

    #[test]
    fn thirty_to_sixty_with_overlap_passes() {
        let r = GateConfig::default().judge(metrics(30.0, 60.0, 0.7));
        assert!(r.passed, "{:?}", r.reasons);
        assert_eq!(r.gain, Some(30.0));
    }

    #[test]
    fn threshold_edges() {
        let cfg = GateConfig::default();
        assert!(cfg.judge(metrics(45.0, 50.0, 0.5)).passed);
        assert!(!cfg.judge(metrics(45.1, 50.0, 0.5)).passed);
        assert!(!cfg.judge(metrics(40.0, 49.9, 0.9)).passed);
        assert!(!cfg.judge(metrics(10.0, 60.0, 0.49)).passed);
    }

    #[test]
    fn real_simplification_passes() {
        let r = quality_gate(ORIGINAL, SIMPLE, &GateConfig::default(), None);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn dropped_number_fails() {
        let dropped = SIMPLE.replace("within 48 hours", "soon");
        let r = quality_gate(ORIGINAL, &dropped, &GateConfig::default(), None);
        assert!(!r.passed);
        assert_eq!(r.metrics.missing_numbers, ["48"]);
    }

    #[test]
    fn dropped_keyword_fails() {
        let cfg = GateConfig::default();
        let r = quality_gate("Avoid the river banks until 6 pm.", "Do not go near the river until 6 pm.", &cfg, None);
        assert_eq!(r.metrics.missing_keywords, ["avoid"]);
        assert!(keyword_present("evacuate", &["evacuation".to_string()]));
        assert!(keyword_present("danger", &["dangerous".to_string()]));
    }

    #[test]
    fn number_tokens_keep_separators() {
        let n: Vec<String> = number_tokens("Call 112 at 3.30, or 1,000 people; 24/7.").into_iter().collect();
        assert_eq!(n, ["1,000", "112", "24/7", "3.30"]);
    }

    #[test]
    fn overlap_is_stem_based() {
        assert_eq!(content_overlap("Roads closed.", "The road is closing."), 1.0);
        assert_eq!(content_overlap("the and of", "x"), 1.0);
        assert_eq!(content_overlap("flood warning", "flood"), 0.5);
    }

    struct Fixed(Result<f64>);
    impl AdequacyScorer for Fixed {
        fn name(&self) -> String {
            "fixed".into()
        }
        fn adequacy(&self, _: &str, _: &str) -> Result<f64> {
            match &self.0 {
                Ok(v) => Ok(*v),
                Err(_) => Err(Error::Data("down".into())),
            }
        }
    }

    #[test]
    fn external_scorer_replaces_proxy() {
        let cfg = GateConfig::default();
        let low = quality_gate(ORIGINAL, SIMPLE, &cfg, Some(&Fixed(Ok(0.1))));
        assert!(!low.passed);
        assert_eq!(low.metrics.adequacy_source, "fixed");
        let failing = quality_gate(ORIGINAL, SIMPLE, &cfg, Some(&Fixed(Err(Error::Data(String::new())))));
        assert!(!failing.passed && failing.metrics.adequacy.is_none());
    }
}
