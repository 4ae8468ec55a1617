//! Candidate-list construction from Hunspell `.dic`/`.aff` files, plus the
//! plain wordlist loader used for evaluation.
//!
//! Only surface strings are harvested: stems from `.dic`, and the ADD part of
//! every `PFX`/`SFX` rule from `.aff`. Flags, strip strings and conditions are
//! never interpreted.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lexicon::{Candidate, Source};
use crate::text::{self, nfc};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DicEntry {
    pub stem: String,
    /// Raw flag text after the `/`; opaque.
    pub flags: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AffixKind {
    Prefix,
    Suffix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffRule {
    pub kind: AffixKind,
    pub affix_string: String,
}

pub fn parse_dic(path: &Path) -> Result<Vec<DicEntry>> {
    let lines = text::read_lines(path)?;
    parse_dic_lines(path, &lines)
}

fn parse_dic_lines(path: &Path, lines: &[String]) -> Result<Vec<DicEntry>> {
    let first = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .ok_or_else(|| Error::Empty(format!("{} has no entries", path.display())))?;

    let declared = lines[first].trim().parse::<usize>().ok();
    let body_start = if declared.is_some() { first + 1 } else { first };
    if declared.is_none() {
        log::warn!(
            "{}: first line is not an entry count; treating it as an entry",
            path.display()
        );
    }

    let mut entries = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(body_start) {
        let Some(field) = line.split_whitespace().next() else {
            continue;
        };
        let (stem, flags) = split_flags(field);
        if stem.is_empty() {
            log::warn!("{}:{}: entry without a stem", path.display(), i + 1);
            continue;
        }
        entries.push(DicEntry {
            stem: nfc(&stem),
            flags: flags.to_owned(),
        });
    }

    if let Some(n) = declared {
        if n != entries.len() {
            log::warn!(
                "{}: header declares {n} entries but {} were read",
                path.display(),
                entries.len()
            );
        }
    }
    Ok(entries)
}

/// Splits `stem/FLAGS` at the first unescaped slash; `\/` is a literal slash.
fn split_flags(field: &str) -> (String, &str) {
    let bytes = field.as_bytes();
    let mut stem = String::with_capacity(field.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' if bytes.get(i + 1) == Some(&b'/') => {
                stem.push('/');
                i += 2;
            }
            b'/' => return (stem, &field[i + 1..]),
            _ => {
                let ch = field[i..].chars().next().expect("char boundary");
                stem.push(ch);
                i += ch.len_utf8();
            }
        }
    }
    (stem, "")
}

pub fn parse_aff(path: &Path) -> Result<Vec<AffRule>> {
    let lines = text::read_lines(path)?;
    Ok(parse_aff_lines(&lines))
}

fn parse_aff_lines(lines: &[String]) -> Vec<AffRule> {
    let mut rules = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let kind = match fields.first() {
            Some(&"PFX") => AffixKind::Prefix,
            Some(&"SFX") => AffixKind::Suffix,
            _ => continue,
        };
        if fields.len() < 4 || is_affix_header(&fields) {
            continue;
        }
        // PFX|SFX flag strip add[/cont] [condition [morph...]]
        let add = fields[3].split('/').next().unwrap_or("");
        if add.is_empty() || add == "0" {
            continue;
        }
        rules.push(AffRule {
            kind,
            affix_string: nfc(add),
        });
    }
    rules
}

/// `SFX A Y 14`: class header with cross-product flag and rule count.
fn is_affix_header(fields: &[&str]) -> bool {
    fields.len() == 4 && matches!(fields[2], "Y" | "N") && fields[3].parse::<usize>().is_ok()
}

/// Unions stems and affixes into one candidate list, deduplicated on
/// (surface, markers) with the first occurrence kept.
pub fn merge_candidates(stems: &[DicEntry], affixes: &[AffRule]) -> Vec<Candidate> {
    let mut seen: HashSet<(String, bool, bool)> = HashSet::new();
    let mut out = Vec::with_capacity(stems.len() + affixes.len());

    let from_stems = stems.iter().filter_map(|e| {
        Candidate::new(&e.stem, false, false, Source::DicStem)
            .map_err(|r| log::debug!("stem skipped: {r}"))
            .ok()
    });
    let from_affixes = affixes.iter().filter_map(|r| {
        let (prefix, suffix) = match r.kind {
            AffixKind::Prefix => (true, false),
            AffixKind::Suffix => (false, true),
        };
        Candidate::new(&r.affix_string, prefix, suffix, Source::AffEntry)
            .map_err(|r| log::debug!("affix skipped: {r}"))
            .ok()
    });

    for c in from_stems.chain(from_affixes) {
        let key = (
            c.surface().to_owned(),
            c.is_prefix_marked,
            c.is_suffix_marked,
        );
        if seen.insert(key) {
            out.push(c);
        }
    }
    out
}

/// Unique words of a text file in first-seen order, truncated at `cap`.
pub fn load_wordlist(path: &Path, cap: Option<usize>) -> Result<Vec<String>> {
    let text = text::read_text(path)?;
    Ok(unique_words(&text, cap))
}

pub fn unique_words(text: &str, cap: Option<usize>) -> Vec<String> {
    let cap = cap.unwrap_or(usize::MAX);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for w in text::words(text) {
        if out.len() >= cap {
            break;
        }
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}
