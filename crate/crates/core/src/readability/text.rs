//! Sentence and word segmentation for readability statistics.

/// Abbreviations whose trailing period does not end a sentence (lowercase,
/// without the final period). Version 1; changing it changes scores.
pub const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "no", "nos", "fig",
    "approx", "dept", "gov", "inc", "ltd", "co", "corp", "jan", "feb", "mar", "apr", "jun", "jul",
    "aug", "sep", "sept", "oct", "nov", "dec", "mt", "ft", "km", "a.m", "p.m", "u.s", "u.k", "sig",
    "dott", "ecc", "pag",
];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Words are maximal runs of letters and digits; an apostrophe between two
/// such characters stays inside the word (`don't`, `l'acqua`).
pub fn words(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut start: Option<usize> = None;
    for (k, &(i, c)) in chars.iter().enumerate() {
        let joins = (c == '\'' || c == '’')
            && start.is_some()
            && chars.get(k + 1).is_some_and(|&(_, n)| is_word_char(n));
        if is_word_char(c) || joins {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            out.push(&text[s..i]);
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    out
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

/// Splits after runs of `.`, `!`, `?` or `…` that are followed by whitespace
/// or the end of text, unless the period closes a known abbreviation or a
/// single-letter initial. Chunks without any word are dropped.
pub fn sentences(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut k = 0;
    while k < chars.len() {
        let (i, c) = chars[k];
        if !is_terminal(c) {
            k += 1;
            continue;
        }
        let mut end = k;
        while end + 1 < chars.len() && (is_terminal(chars[end + 1].1) || matches!(chars[end + 1].1, '"' | '”' | '’' | ')' | '»')) {
            end += 1;
        }
        let boundary = end + 1 == chars.len() || chars[end + 1].1.is_whitespace();
        let run_is_single_period = c == '.' && end == k;
        let guarded = run_is_single_period && {
            let before = &text[start..i];
            let token = before
                .rsplit(char::is_whitespace)
                .next()
                .unwrap_or("")
                .trim_start_matches(['(', '"', '“', '«', '\''])
                .to_lowercase();
            ABBREVIATIONS.contains(&token.as_str())
                || (token.chars().count() == 1 && token.chars().all(char::is_alphabetic))
        };
        if boundary && !guarded {
            let stop = chars.get(end + 1).map_or(text.len(), |&(j, _)| j);
            out.push(&text[start..stop]);
            start = stop;
        }
        k = end + 1;
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out.into_iter()
        .map(str::trim)
        .filter(|s| !words(s).is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_split() {
        assert_eq!(words("The cat sat on the mat."), ["The", "cat", "sat", "on", "the", "mat"]);
        assert_eq!(words("don't stop—now, l'acqua"), ["don't", "stop", "now", "l'acqua"]);
        assert_eq!(words("well-known 48 hours"), ["well", "known", "48", "hours"]);
        assert!(words(" ... ").is_empty());
    }

    #[test]
    fn sentence_split() {
        assert_eq!(sentences("The cat sat. The dog ran!"), ["The cat sat.", "The dog ran!"]);
        assert_eq!(sentences("Dr. Rossi arrived at 3.30 p.m. today. Stay home."), [
            "Dr. Rossi arrived at 3.30 p.m. today.",
            "Stay home."
        ]);
        assert_eq!(sentences("No punctuation here"), ["No punctuation here"]);
        assert_eq!(sentences("Wait... what?! Yes."), ["Wait...", "what?!", "Yes."]);
        assert_eq!(sentences("He said \"go.\" Then left."), ["He said \"go.\"", "Then left."]);
        assert!(sentences("").is_empty());
        assert!(sentences("...").is_empty());
    }
}
