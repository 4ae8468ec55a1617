//! Hard pre-filtering of raw candidates.

use serde::Serialize;

use crate::lexicon::{AlphabetConfig, Candidate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    ProperNoun,
    NonAlphabetic,
    OutsideAlphabet,
    Length,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PrefilterStats {
    pub kept: usize,
    pub proper_noun: usize,
    pub non_alphabetic: usize,
    pub outside_alphabet: usize,
    pub length: usize,
}

/// Why `c` is dropped, if it is. Casing is checked first so that capitalised
/// forms count as proper nouns, not as out-of-alphabet.
pub fn drop_reason(c: &Candidate, cfg: &AlphabetConfig) -> Option<DropReason> {
    let s = c.surface();
    let starts_upper = s.chars().next().is_some_and(char::is_uppercase);
    if starts_upper || s.chars().filter(|ch| ch.is_uppercase()).count() >= 2 {
        return Some(DropReason::ProperNoun);
    }
    if s.chars().any(|ch| !ch.is_alphabetic()) {
        return Some(DropReason::NonAlphabetic);
    }
    if s.chars().any(|ch| !cfg.valid_chars().contains(&ch)) {
        return Some(DropReason::OutsideAlphabet);
    }
    let len = c.char_len();
    let out_of_bounds = len > cfg.max_length() || len < cfg.min_length();
    if out_of_bounds && !(len == 1 && cfg.is_whitelisted(s)) {
        return Some(DropReason::Length);
    }
    None
}

pub fn prefilter(raw: &[Candidate], cfg: &AlphabetConfig) -> Vec<Candidate> {
    prefilter_with_stats(raw, cfg).0
}

pub fn prefilter_with_stats(
    raw: &[Candidate],
    cfg: &AlphabetConfig,
) -> (Vec<Candidate>, PrefilterStats) {
    let mut stats = PrefilterStats::default();
    let mut kept = Vec::with_capacity(raw.len());
    for c in raw {
        match drop_reason(c, cfg) {
            None => {
                stats.kept += 1;
                kept.push(c.clone());
            }
            Some(DropReason::ProperNoun) => stats.proper_noun += 1,
            Some(DropReason::NonAlphabetic) => stats.non_alphabetic += 1,
            Some(DropReason::OutsideAlphabet) => stats.outside_alphabet += 1,
            Some(DropReason::Length) => stats.length += 1,
        }
    }
    (kept, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hu() -> AlphabetConfig {
        AlphabetConfig::new("abcdefghijklmnopqrstuvwxyzáéíóöőúüű".chars(), ['a'], 1, 30).unwrap()
    }

    fn reason(s: &str, cfg: &AlphabetConfig) -> Option<DropReason> {
        drop_reason(&Candidate::plain(s).unwrap(), cfg)
    }

    #[test]
    fn capitalised_is_dropped() {
        assert_eq!(reason("Budapest", &hu()), Some(DropReason::ProperNoun));
        assert_eq!(reason("NATO", &hu()), Some(DropReason::ProperNoun));
        assert_eq!(reason("xNATO", &hu()), Some(DropReason::ProperNoun));
        // A single interior capital is not an acronym, but it is not in the alphabet.
        assert_eq!(reason("taLo", &hu()), Some(DropReason::OutsideAlphabet));
    }

    #[test]
    fn digits_are_dropped() {
        assert_eq!(reason("abc123", &hu()), Some(DropReason::NonAlphabetic));
        assert_eq!(reason("a.b", &hu()), Some(DropReason::NonAlphabetic));
    }

    #[test]
    fn foreign_script_is_dropped() {
        assert_eq!(reason("дом", &hu()), Some(DropReason::OutsideAlphabet));
        assert_eq!(reason("häz", &hu()), Some(DropReason::OutsideAlphabet));
        assert_eq!(reason("ház", &hu()), None);
    }

    #[test]
    fn length_bounds() {
        assert_eq!(reason(&"a".repeat(31), &hu()), Some(DropReason::Length));
        assert_eq!(reason(&"a".repeat(30), &hu()), None);

        let strict = AlphabetConfig::new("abc".chars(), ['a'], 2, 30).unwrap();
        assert_eq!(
            reason("a", &strict),
            None,
            "whitelisted single char survives"
        );
        assert_eq!(reason("b", &strict), Some(DropReason::Length));
        assert_eq!(reason("bc", &strict), None);
    }

    #[test]
    fn stats_add_up() {
        let raw: Vec<Candidate> = ["talo", "Talo", "ta1o", "дом", "ab"]
            .iter()
            .map(|s| Candidate::plain(s).unwrap())
            .collect();
        let (kept, stats) = prefilter_with_stats(&raw, &hu());
        assert_eq!(kept.len(), 2);
        assert_eq!(
            stats,
            PrefilterStats {
                kept: 2,
                proper_noun: 1,
                non_alphabetic: 1,
                outside_alphabet: 1,
                length: 0
            }
        );
    }
}
