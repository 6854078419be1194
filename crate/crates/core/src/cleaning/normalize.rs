use unicode_normalization::UnicodeNormalization;

/// NFKC normalization followed by whitespace collapsing and trimming.
///
/// NFKC folds compatibility spaces (no-break space, thin space, ...) into
/// U+0020, so they collapse like ordinary spaces. Idempotent.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.nfkc() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}
