//! Rule-based English syllable counter.
//!
//! Rules, applied to the lowercased word with apostrophes removed:
//!
//! 1. drop one trailing `e`
//! 2. count maximal runs of vowels `[aeiouy]`
//! 3. subtract one for each pattern present: `cial`, `tia`, `cius`, `cious`,
//!    `giu`, `ion`, `iou`, `sia$`, `.ely$`
//! 4. add one for each pattern present: `ia`, `riet`, `dien`, `iu`, `io`,
//!    `ii`, `[aeiouym]bl$`, `[aeiou]{3}`, `^mc`, `ism$`, a doubled consonant
//!    followed by a final `l`, `[^l]lien`, `^coa[dglx].`, `[^gq]ua[^auieo]`,
//!    `dnt$`
//! 5. never less than one
//!
//! Each pattern counts at most once per word. Counts are only comparable
//! within one version of this rule list.

use std::sync::OnceLock;

use regex::Regex;

const SUBTRACT: &[&str] = &["cial", "tia", "cius", "cious", "giu", "ion", "iou", "sia$", ".ely$"];

const ADD: &[&str] = &[
    "ia",
    "riet",
    "dien",
    "iu",
    "io",
    "ii",
    "[aeiouym]bl$",
    "[aeiou]{3}",
    "^mc",
    "ism$",
    "[^l]lien",
    "^coa[dglx].",
    "[^gq]ua[^auieo]",
    "dnt$",
];

struct Rules {
    subtract: Vec<Regex>,
    add: Vec<Regex>,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| Rules {
        subtract: SUBTRACT.iter().map(|p| Regex::new(p).unwrap()).collect(),
        add: ADD.iter().map(|p| Regex::new(p).unwrap()).collect(),
    })
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// `([^aeiouy])\1l$`, which the regex engine cannot express directly.
fn doubled_consonant_before_final_l(w: &[char]) -> bool {
    let n = w.len();
    n >= 3 && w[n - 1] == 'l' && w[n - 2] == w[n - 3] && !is_vowel(w[n - 2])
}

pub fn count_syllables(word: &str) -> usize {
    let mut w: String = word
        .chars()
        .filter(|c| *c != '\'' && *c != '’')
        .flat_map(char::to_lowercase)
        .collect();
    if w.ends_with('e') {
        w.pop();
    }
    let chars: Vec<char> = w.chars().collect();
    let mut groups = 0i64;
    let mut in_vowel = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !in_vowel {
            groups += 1;
        }
        in_vowel = v;
    }
    let r = rules();
    groups -= r.subtract.iter().filter(|re| re.is_match(&w)).count() as i64;
    groups += r.add.iter().filter(|re| re.is_match(&w)).count() as i64;
    if doubled_consonant_before_final_l(&chars) {
        groups += 1;
    }
    groups.max(1) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    // golden list: pins the rule set above, including its known misses
    // ("area" and "people" come out one short)
    const GOLDEN: &[(&str, usize)] = &[
        ("the", 1),
        ("cat", 1),
        ("sat", 1),
        ("mat", 1),
        ("on", 1),
        ("evacuate", 4),
        ("immediately", 5),
        ("nation", 2),
        ("special", 2),
        ("table", 2),
        ("lately", 2),
        ("river", 2),
        ("flood", 1),
        ("emergency", 4),
        ("authorities", 4),
        ("area", 2),
        ("people", 1),
        ("because", 2),
        ("shelter", 2),
        ("warning", 2),
        ("earthquake", 2),
        ("dangerous", 3),
        ("hydrogeological", 6),
        ("residents", 3),
        ("a", 1),
        ("rhythm", 1),
        ("don't", 1),
        ("48", 1),
    ];

    #[test]
    fn golden_words() {
        let wrong: Vec<_> = GOLDEN
            .iter()
            .map(|(w, n)| (*w, *n, count_syllables(w)))
            .filter(|(_, n, got)| n != got)
            .collect();
        assert!(wrong.is_empty(), "(word, expected, got): {wrong:?}");
    }

    #[test]
    fn floor_is_one() {
        for w in ["", "h", "xyz'", "e", "'"] {
            assert!(count_syllables(w) >= 1);
        }
    }
}
