use alloc::string::String;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Canonical form for comparing spoken-answer transcripts: trimmed,
/// lowercased, with accents folded away (NFD minus combining marks).
pub fn normalize_answer(s: &str) -> String {
    s.trim()
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_case_accents_and_whitespace() {
        assert_eq!(normalize_answer("  LISBOA "), "lisboa");
        assert_eq!(normalize_answer("Avó"), "avo");
        assert_eq!(normalize_answer("BAÚ"), "bau");
        assert_eq!(normalize_answer("coração"), "coracao");
        assert_eq!(normalize_answer("\tÉvora\n"), "evora");
    }
}
