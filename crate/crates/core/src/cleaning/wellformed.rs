//! Rule-based well-formedness check for segment text.

/// Decides whether a text is a complete, well-formed sentence.
pub trait WellformednessFilter: Send + Sync {
    fn is_well_formed(&self, text: &str) -> bool;
}

/// Heuristic rules:
///
/// - brackets `()[]{}` and `«»` balance and nest, straight double quotes pair up
/// - at least one alphabetic character
/// - at most `max_caps_ratio` of the letters are uppercase
/// - texts shorter than `short_words` words end in terminal punctuation
#[derive(Debug, Clone)]
pub struct HeuristicWellformedness {
    pub max_caps_ratio: f64,
    pub short_words: usize,
}

impl Default for HeuristicWellformedness {
    fn default() -> Self {
        HeuristicWellformedness {
            max_caps_ratio: 0.8,
            short_words: 12,
        }
    }
}

fn balanced(text: &str) -> bool {
    let mut stack = Vec::new();
    let mut straight_quotes = 0usize;
    for c in text.chars() {
        match c {
            '(' | '[' | '{' | '«' => stack.push(c),
            ')' | ']' | '}' | '»' => {
                let open = match c {
                    ')' => '(',
                    ']' => '[',
                    '}' => '{',
                    _ => '«',
                };
                if stack.pop() != Some(open) {
                    return false;
                }
            }
            '"' => straight_quotes += 1,
            _ => {}
        }
    }
    stack.is_empty() && straight_quotes.is_multiple_of(2)
}

fn ends_with_terminal(text: &str) -> bool {
    let trimmed = text
        .trim_end()
        .trim_end_matches(['"', '»', '”', '’', '\'', ')', ']']);
    trimmed.ends_with(['.', '!', '?', '…', ';', ':'])
}

impl WellformednessFilter for HeuristicWellformedness {
    fn is_well_formed(&self, text: &str) -> bool {
        let letters = text.chars().filter(|c| c.is_alphabetic()).count();
        if letters == 0 || !balanced(text) {
            return false;
        }
        let upper = text.chars().filter(|c| c.is_uppercase()).count();
        if upper as f64 / letters as f64 > self.max_caps_ratio {
            return false;
        }
        let words = text.split_whitespace().count();
        if words < self.short_words && !ends_with_terminal(text) {
            return false;
        }
        true
    }
}
