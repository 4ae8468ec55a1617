//! Text helpers shared by the readers: line splitting with UTF-8 validation,
//! NFC normalization and whitespace word splitting.

use std::fs;
use std::path::Path;

use unicode_normalization::{is_nfc_quick, IsNormalized, UnicodeNormalization};
use unicode_properties::general_category::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::error::{Error, Result};

pub fn nfc(s: &str) -> String {
    match is_nfc_quick(s.chars()) {
        IsNormalized::Yes => s.to_owned(),
        _ => s.nfc().collect(),
    }
}

/// Number of Unicode scalar values.
#[inline]
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

pub fn is_punctuation(c: char) -> bool {
    c.general_category_group() == GeneralCategoryGroup::Punctuation
}

/// Strips Unicode punctuation (category P) from both edges of `word`.
pub fn strip_edge_punctuation(word: &str) -> &str {
    word.trim_matches(is_punctuation)
}

/// Splits on Unicode whitespace, strips edge punctuation and NFC-normalizes.
/// Tokens that are pure punctuation vanish.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(strip_edge_punctuation)
        .filter(|w| !w.is_empty())
        .map(nfc)
}

/// Reads a file as UTF-8 lines. Line numbers in errors are 1-based.
/// A leading byte-order mark and trailing `\r` are removed.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    split_lines(path, &bytes)
}

pub(crate) fn split_lines(path: &Path, bytes: &[u8]) -> Result<Vec<String>> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    if bytes.is_empty() {
        return Ok(Vec::new());
    }
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    body.split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, raw)| {
            let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
            std::str::from_utf8(raw)
                .map(str::to_owned)
                .map_err(|_| Error::InvalidUtf8 {
                    path: path.to_path_buf(),
                    line: i + 1,
                })
        })
        .collect()
}

/// Reads a whole file as UTF-8 text, reporting the line of the first bad byte.
pub fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match String::from_utf8(bytes) {
        Ok(s) => Ok(s),
        Err(e) => {
            let valid = e.utf8_error().valid_up_to();
            let line = e.as_bytes()[..valid]
                .iter()
                .filter(|&&b| b == b'\n')
                .count()
                + 1;
            Err(Error::InvalidUtf8 {
                path: path.to_path_buf(),
                line,
            })
        }
    }
}
