//! Shared domain types and the plain-text / CSV / JSON formats that move them
//! between pipeline stages.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{self, nfc};

/// Where a candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    DicStem,
    AffEntry,
    PlainList,
}

/// A surface form with its affix-position markers split off.
///
/// `ta-` is a prefix-marked `ta`, `-ssa` a suffix-marked `ssa`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Candidate {
    surface: String,
    pub is_prefix_marked: bool,
    pub is_suffix_marked: bool,
    pub source: Source,
}

impl Candidate {
    /// Builds a candidate from an already stripped surface.
    pub fn new(
        surface: &str,
        is_prefix_marked: bool,
        is_suffix_marked: bool,
        source: Source,
    ) -> std::result::Result<Self, String> {
        let surface = nfc(surface);
        if surface.is_empty() {
            return Err("empty surface".into());
        }
        if surface.chars().any(char::is_whitespace) {
            return Err(format!("`{surface}` contains whitespace"));
        }
        if surface.contains('-') {
            return Err(format!("`{surface}` contains an interior hyphen"));
        }
        Ok(Candidate {
            surface,
            is_prefix_marked,
            is_suffix_marked,
            source,
        })
    }

    /// Parses the marked notation: a leading hyphen marks a suffix, a trailing
    /// hyphen a prefix.
    pub fn parse_marked(text: &str, source: Source) -> std::result::Result<Self, String> {
        let text = text.trim();
        let (text, suffix) = match text.strip_prefix('-') {
            Some(rest) => (rest, true),
            None => (text, false),
        };
        let (text, prefix) = match text.strip_suffix('-') {
            Some(rest) => (rest, true),
            None => (text, false),
        };
        Candidate::new(text, prefix, suffix, source)
    }

    pub fn plain(surface: &str) -> std::result::Result<Self, String> {
        Candidate::new(surface, false, false, Source::PlainList)
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn char_len(&self) -> usize {
        text::char_len(&self.surface)
    }

    /// The surface with its markers put back.
    pub fn to_marked(&self) -> String {
        let mut out = String::with_capacity(self.surface.len() + 2);
        if self.is_suffix_marked {
            out.push('-');
        }
        out.push_str(&self.surface);
        if self.is_prefix_marked {
            out.push('-');
        }
        out
    }
}

/// Reads a candidate list, one token per line. Blank lines are skipped;
/// lines that cannot form a valid candidate (a lone hyphen, interior
/// whitespace or hyphens) are skipped with a warning. Order and duplicates
/// are preserved.
pub fn read_candidate_file(path: &Path) -> Result<Vec<Candidate>> {
    let lines = text::read_lines(path)?;
    let mut out = Vec::with_capacity(lines.len());
    let mut rejected = 0usize;
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match Candidate::parse_marked(line, Source::PlainList) {
            Ok(c) => out.push(c),
            Err(reason) => {
                rejected += 1;
                log::debug!("{}:{}: skipped ({reason})", path.display(), i + 1);
            }
        }
    }
    if rejected > 0 {
        log::warn!(
            "{}: skipped {rejected} line(s) that are not valid candidates",
            path.display()
        );
    }
    Ok(out)
}

pub fn write_candidate_file(candidates: &[Candidate], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for c in candidates {
        writeln!(w, "{}", c.to_marked()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// The alphabet, length bounds and single-character whitelist of one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphabetConfig {
    valid_chars: BTreeSet<char>,
    whitelist: BTreeSet<char>,
    min_length: usize,
    max_length: usize,
}

impl AlphabetConfig {
    pub fn new(
        valid_chars: impl IntoIterator<Item = char>,
        whitelist: impl IntoIterator<Item = char>,
        min_length: usize,
        max_length: usize,
    ) -> Result<Self> {
        let valid_chars: BTreeSet<char> = valid_chars.into_iter().collect();
        let whitelist: BTreeSet<char> = whitelist.into_iter().collect();
        if valid_chars.is_empty() {
            return Err(Error::Config("alphabet is empty".into()));
        }
        if min_length == 0 {
            return Err(Error::Config("min_length must be positive".into()));
        }
        if min_length > max_length {
            return Err(Error::Config(format!(
                "min_length {min_length} exceeds max_length {max_length}"
            )));
        }
        if let Some(c) = whitelist.iter().find(|c| !valid_chars.contains(c)) {
            return Err(Error::Config(format!(
                "whitelist entry `{c}` is not in the alphabet"
            )));
        }
        Ok(AlphabetConfig {
            valid_chars,
            whitelist,
            min_length,
            max_length,
        })
    }

    pub fn valid_chars(&self) -> &BTreeSet<char> {
        &self.valid_chars
    }

    pub fn whitelist(&self) -> &BTreeSet<char> {
        &self.whitelist
    }

    pub fn min_length(&self) -> usize {
        self.min_length
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    pub fn is_whitelisted(&self, token: &str) -> bool {
        let mut chars = token.chars();
        matches!((chars.next(), chars.next()), (Some(c), None) if self.whitelist.contains(&c))
    }
}

fn default_min_length() -> usize {
    1
}
fn default_max_length() -> usize {
    30
}
fn default_support_m() -> usize {
    3
}
fn default_epsilon() -> f64 {
    1e-7
}
fn default_max_iterations() -> usize {
    100
}
fn default_otsu_bins() -> usize {
    256
}

/// The JSON run configuration of the refinement pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Every valid character of the language, as one string.
    pub alphabet: String,
    /// Single-character morphemes allowed as segments and as short tokens.
    #[serde(default)]
    pub whitelist: Vec<String>,
    #[serde(default = "default_min_length")]
    pub min_length: usize,
    #[serde(default = "default_max_length")]
    pub max_length: usize,
    #[serde(default = "default_support_m")]
    pub support_m: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_otsu_bins")]
    pub otsu_bins: usize,
}

impl PipelineConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let mut cfg: PipelineConfig = serde_json::from_str(json)?;
        cfg.alphabet = nfc(&cfg.alphabet);
        for w in &mut cfg.whitelist {
            *w = nfc(w);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = text::read_text(path)?;
        Self::from_json(&json).map_err(|e| match e {
            Error::Json(j) => Error::parse(path, j.line(), j.to_string()),
            other => other,
        })
    }

    /// A bundled preset (`hu`, `fi`, `et`).
    pub fn preset(language: &str) -> Option<Self> {
        let json = crate::data::alphabet_preset(language)?;
        Some(Self::from_json(json).expect("bundled presets are valid"))
    }

    pub fn validate(&self) -> Result<()> {
        self.alphabet_config()?;
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.otsu_bins < 2 {
            return Err(Error::Config("otsu_bins must be at least 2".into()));
        }
        Ok(())
    }

    pub fn alphabet_config(&self) -> Result<AlphabetConfig> {
        let mut whitelist = Vec::with_capacity(self.whitelist.len());
        for w in &self.whitelist {
            let mut chars = w.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => whitelist.push(c),
                _ => {
                    return Err(Error::Config(format!(
                        "whitelist entry `{w}` is not a single character"
                    )))
                }
            }
        }
        AlphabetConfig::new(
            self.alphabet.chars().filter(|c| !c.is_whitespace()),
            whitelist,
            self.min_length,
            self.max_length,
        )
    }
}

/// Atomicity scores of one refinement iteration.
///
/// Keys are kept sorted so that every iteration order over the table is
/// deterministic; lookups go through a hash index.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    tokens: Vec<String>,
    scores: Vec<f64>,
    index: HashMap<String, usize>,
    iteration: usize,
}

impl ScoreTable {
    /// Builds a table; duplicate tokens and non-finite or negative scores are
    /// rejected.
    pub fn new(entries: impl IntoIterator<Item = (String, f64)>, iteration: usize) -> Result<Self> {
        let mut pairs: Vec<(String, f64)> = entries.into_iter().collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Config(format!("duplicate token `{}`", w[0].0)));
        }
        if let Some((t, s)) = pairs.iter().find(|(_, s)| !s.is_finite() || *s < 0.0) {
            return Err(Error::OutOfRange(format!("score {s} for `{t}`")));
        }
        let (tokens, scores): (Vec<String>, Vec<f64>) = pairs.into_iter().unzip();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(ScoreTable {
            tokens,
            scores,
            index,
            iteration,
        })
    }

    /// Same keys, new values. `scores` is indexed like [`ScoreTable::tokens`].
    pub(crate) fn with_scores(&self, scores: Vec<f64>, iteration: usize) -> Self {
        debug_assert_eq!(scores.len(), self.tokens.len());
        ScoreTable {
            tokens: self.tokens.clone(),
            scores,
            index: self.index.clone(),
            iteration,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.index.get(token).map(|&i| self.scores[i])
    }

    pub(crate) fn position(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Tokens in ascending order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Scores aligned with [`ScoreTable::tokens`].
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.tokens
            .iter()
            .map(String::as_str)
            .zip(self.scores.iter().copied())
    }

    pub fn same_keys(&self, other: &ScoreTable) -> bool {
        self.tokens == other.tokens
    }

    /// Rows in output order: score descending, then token ascending.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut rows: Vec<(&str, f64)> = self.iter().collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        rows
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["token", "score"]).expect("in-memory write");
        for (t, s) in self.ranked() {
            w.write_record([t, &format_score(s)])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }
}

/// At least 12 significant digits, never scientific notation.
pub fn format_score(s: f64) -> String {
    let decimals = if s > 0.0 {
        (11 - s.log10().floor() as i64).max(12) as usize
    } else {
        12
    };
    format!("{s:.decimals$}")
}

pub fn write_score_table(table: &ScoreTable, path: &Path) -> Result<()> {
    fs::write(path, table.to_csv_string()).map_err(|e| Error::io(path, e))
}

pub fn read_score_table(path: &Path) -> Result<ScoreTable> {
    let data = text::read_text(path)?;
    let mut reader = csv::Reader::from_reader(data.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["token", "score"] {
        return Err(Error::parse(path, 1, "expected header `token,score`"));
    }
    let mut entries = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::parse(path, line, "expected 2 fields"));
        }
        let score: f64 = rec[1]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad score `{}`", &rec[1])))?;
        entries.push((nfc(&rec[0]), score));
    }
    ScoreTable::new(entries, 0)
}

/// The final set of atomic morphemes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorphemeLexicon {
    morphemes: Vec<String>,
    /// `None` when the lexicon was loaded from a file.
    pub threshold_used: Option<f64>,
    pub language_tag: String,
}

impl MorphemeLexicon {
    /// Deduplicates and sorts `morphemes`.
    pub fn new(
        morphemes: impl IntoIterator<Item = String>,
        threshold_used: Option<f64>,
        language_tag: impl Into<String>,
    ) -> Self {
        let set: BTreeSet<String> = morphemes.into_iter().collect();
        MorphemeLexicon {
            morphemes: set.into_iter().collect(),
            threshold_used,
            language_tag: language_tag.into(),
        }
    }

    pub fn morphemes(&self) -> &[String] {
        &self.morphemes
    }

    pub fn len(&self) -> usize {
        self.morphemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.morphemes.is_empty()
    }

    pub fn contains(&self, m: &str) -> bool {
        self.morphemes
            .binary_search_by(|x| x.as_str().cmp(m))
            .is_ok()
    }
}

pub fn write_lexicon(lexicon: &MorphemeLexicon, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for m in lexicon.morphemes() {
        writeln!(w, "{m}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a lexicon file; affix markers are stripped, blank lines skipped.
pub fn read_lexicon(path: &Path, language_tag: &str) -> Result<MorphemeLexicon> {
    let mut morphemes = Vec::new();
    for (i, line) in text::read_lines(path)?.iter().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let c = Candidate::parse_marked(line, Source::PlainList)
            .map_err(|reason| Error::parse(path, i + 1, reason))?;
        morphemes.push(c.surface);
    }
    Ok(MorphemeLexicon::new(morphemes, None, language_tag))
}

/// A split of a token into at least two scored parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub parts: Vec<String>,
    pub total_score: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}
