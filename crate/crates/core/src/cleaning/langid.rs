//! Language identification behind a pluggable detector.

use whatlang::{Detector, Lang};

use crate::{Error, Result};

pub trait LanguageDetector: Send + Sync {
    /// ISO 639-1 code of the most likely language, if any.
    fn detect(&self, text: &str) -> Option<String>;

    /// Whether the detector can return `code` at all.
    fn supports(&self, code: &str) -> bool;
}

/// Trigram-profile detector restricted to Latin-script European languages.
///
/// The candidate set is wider than the expected pair so that, e.g., German
/// text is labelled German instead of being forced to the closer of it/en.
pub struct TrigramDetector {
    detector: Detector,
    langs: Vec<(Lang, &'static str)>,
}

const LATIN_EUROPEAN: &[(Lang, &str)] = &[
    (Lang::Ita, "it"),
    (Lang::Eng, "en"),
    (Lang::Deu, "de"),
    (Lang::Fra, "fr"),
    (Lang::Spa, "es"),
    (Lang::Por, "pt"),
    (Lang::Nld, "nl"),
    (Lang::Ron, "ro"),
    (Lang::Cat, "ca"),
    (Lang::Pol, "pl"),
    (Lang::Swe, "sv"),
    (Lang::Dan, "da"),
];

impl TrigramDetector {
    pub fn new() -> Self {
        let langs = LATIN_EUROPEAN.to_vec();
        TrigramDetector {
            detector: Detector::with_allowlist(langs.iter().map(|(l, _)| *l).collect()),
            langs,
        }
    }
}

impl Default for TrigramDetector {
    fn default() -> Self {
        Self::new()
    }
}

impl LanguageDetector for TrigramDetector {
    fn detect(&self, text: &str) -> Option<String> {
        let info = self.detector.detect(text)?;
        self.langs
            .iter()
            .find(|(l, _)| *l == info.lang())
            .map(|(_, code)| code.to_string())
    }

    fn supports(&self, code: &str) -> bool {
        self.langs.iter().any(|(_, c)| *c == code)
    }
}

/// Resolves a detector by name; `trigram` is the only built-in.
pub fn detector_by_name(name: &str) -> Result<Box<dyn LanguageDetector>> {
    match name {
        "trigram" | "default" => Ok(Box::new(TrigramDetector::new())),
        other => Err(Error::Config(format!("language detector `{other}` is not available"))),
    }
}
