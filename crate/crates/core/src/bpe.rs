//! Character-level byte-pair encoding.
//!
//! No end-of-word or continuation markers; merges never cross word
//! boundaries. The most frequent adjacent pair is merged first and ties go to
//! the lexicographically smallest `(left, right)` pair, so training is a pure
//! function of the word counts. Because the merge order does not depend on
//! the target size, a model trained to `k1` is a merge-list prefix of the one
//! trained to `k2 > k1`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fs;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

/// Word → occurrence count. Ordered so training input is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordCounts(BTreeMap<String, u64>);

impl WordCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, word: &str, n: u64) {
        if n > 0 && !word.is_empty() {
            *self.0.entry(word.to_owned()).or_default() += n;
        }
    }

    pub fn get(&self, word: &str) -> Option<u64> {
        self.0.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.0.iter().map(|(w, &c)| (w.as_str(), c))
    }
}

impl<S: AsRef<str>> FromIterator<(S, u64)> for WordCounts {
    fn from_iter<I: IntoIterator<Item = (S, u64)>>(iter: I) -> Self {
        let mut wc = WordCounts::new();
        for (w, n) in iter {
            wc.add(w.as_ref(), n);
        }
        wc
    }
}

/// Counts whitespace-separated words with edge punctuation stripped.
pub fn count_words(reader: impl BufRead, lowercase: bool) -> std::io::Result<WordCounts> {
    let mut counts = WordCounts::new();
    for line in reader.lines() {
        let line = line?;
        for w in text::words(&line) {
            if lowercase {
                counts.add(&w.to_lowercase(), 1);
            } else {
                counts.add(&w, 1);
            }
        }
    }
    Ok(counts)
}

pub fn count_words_file(path: &Path, lowercase: bool) -> Result<WordCounts> {
    let text = text::read_text(path)?;
    count_words(text.as_bytes(), lowercase).map_err(|e| Error::io(path, e))
}

/// One unit of an encoded word; `id` is `None` for characters outside the
/// vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub text: String,
    pub id: Option<u32>,
}

impl Piece {
    pub fn is_unknown(&self) -> bool {
        self.id.is_none()
    }
}

#[derive(Debug, Clone, Copy)]
struct MergeRule {
    rank: u32,
    merged: u32,
}

#[derive(Debug, Clone)]
pub struct BpeModel {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    merges: Option<Vec<(String, String)>>,
    rules: HashMap<(u32, u32), MergeRule>,
    vocab_size_target: usize,
}

impl PartialEq for BpeModel {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens
            && self.merges == other.merges
            && self.vocab_size_target == other.vocab_size_target
    }
}

impl BpeModel {
    /// Builds a model from id-ordered tokens and an optional merge list.
    pub fn from_parts(
        tokens: Vec<String>,
        merges: Option<Vec<(String, String)>>,
        vocab_size_target: usize,
    ) -> Result<Self> {
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), i as u32).is_some() {
                return Err(Error::Model(format!("token `{t}` appears twice")));
            }
        }
        let mut rules = HashMap::new();
        if let Some(merges) = &merges {
            for (rank, (l, r)) in merges.iter().enumerate() {
                let lookup = |s: &str| {
                    ids.get(s).copied().ok_or_else(|| {
                        Error::Model(format!("merge `{l} {r}` uses unknown token `{s}`"))
                    })
                };
                let key = (lookup(l)?, lookup(r)?);
                let merged = lookup(&format!("{l}{r}"))?;
                rules.entry(key).or_insert(MergeRule {
                    rank: rank as u32,
                    merged,
                });
            }
        }
        Ok(BpeModel {
            tokens,
            ids,
            merges,
            rules,
            vocab_size_target,
        })
    }

    pub fn vocab_len(&self) -> usize {
        self.tokens.len()
    }

    pub fn vocab_size_target(&self) -> usize {
        self.vocab_size_target
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    /// Tokens in id order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn merges(&self) -> Option<&[(String, String)]> {
        self.merges.as_deref()
    }

    pub fn can_encode(&self) -> bool {
        self.merges.is_some()
    }

    /// Splits `word` into characters and applies merges, lowest rank first.
    pub fn encode(&self, word: &str) -> Result<Vec<Piece>> {
        if self.merges.is_none() {
            return Err(Error::NoMerges);
        }
        let mut syms: Vec<(Option<u32>, String)> = word
            .chars()
            .map(|c| {
                let s = c.to_string();
                (self.ids.get(&s).copied(), s)
            })
            .collect();
        loop {
            let best = syms
                .windows(2)
                .filter_map(|w| match (w[0].0, w[1].0) {
                    (Some(a), Some(b)) => self.rules.get(&(a, b)).map(|r| (r.rank, a, b, r.merged)),
                    _ => None,
                })
                .min_by_key(|x| x.0);
            let Some((_, a, b, merged)) = best else {
                break;
            };
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i].0 == Some(a) && syms[i + 1].0 == Some(b) {
                    out.push((Some(merged), self.tokens[merged as usize].clone()));
                    i += 2;
                } else {
                    out.push(std::mem::take(&mut syms[i]));
                    i += 1;
                }
            }
            syms = out;
        }
        Ok(syms
            .into_iter()
            .map(|(id, text)| Piece { text, id })
            .collect())
    }

    /// The model a training run to `k` would have produced: the shortest
    /// merge prefix whose vocabulary reaches `k`.
    pub fn truncated(&self, k: usize) -> Result<BpeModel> {
        let merges = self.merges.as_ref().ok_or(Error::NoMerges)?;
        let produced: HashSet<String> = merges.iter().map(|(l, r)| format!("{l}{r}")).collect();
        let mut tokens: Vec<String> = self
            .tokens
            .iter()
            .filter(|t| !produced.contains(*t))
            .cloned()
            .collect();
        if k < tokens.len() {
            return Err(Error::Config(format!(
                "vocabulary size {k} is smaller than the alphabet ({})",
                tokens.len()
            )));
        }
        let mut seen: HashSet<String> = tokens.iter().cloned().collect();
        let mut kept = Vec::new();
        for (l, r) in merges {
            if tokens.len() >= k {
                break;
            }
            let m = format!("{l}{r}");
            if seen.insert(m.clone()) {
                tokens.push(m);
            }
            kept.push((l.clone(), r.clone()));
        }
        BpeModel::from_parts(tokens, Some(kept), k)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            vocab: self
                .tokens
                .iter()
                .enumerate()
                .map(|(i, t)| (t.clone(), i as u32))
                .collect(),
            merges: self.merges.as_ref().map(|m| {
                m.iter()
                    .map(|(l, r)| MergeEntry::Joined(format!("{l} {r}")))
                    .collect()
            }),
            vocab_size_target: Some(self.vocab_size_target),
        };
        serde_json::to_string_pretty(&file).expect("model serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(json)?;
        let n = file.vocab.len();
        let mut by_id: Vec<Option<String>> = vec![None; n];
        for (tok, id) in file.vocab {
            let slot = by_id
                .get_mut(id as usize)
                .ok_or_else(|| Error::Model(format!("id {id} of `{tok}` is outside 0..{n}")))?;
            if let Some(prev) = slot {
                return Err(Error::Model(format!(
                    "duplicate id {id} for `{prev}` and `{tok}`"
                )));
            }
            *slot = Some(tok);
        }
        let tokens: Vec<String> = by_id.into_iter().map(|t| t.expect("dense ids")).collect();
        let merges = match file.merges {
            None => None,
            Some(entries) => Some(
                entries
                    .into_iter()
                    .map(MergeEntry::into_pair)
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        BpeModel::from_parts(tokens, merges, file.vocab_size_target.unwrap_or(n))
    }

    pub fn write_merges(&self, path: &Path) -> Result<()> {
        let merges = self.merges.as_ref().ok_or(Error::NoMerges)?;
        let mut out = String::new();
        for (l, r) in merges {
            out.push_str(l);
            out.push(' ');
            out.push_str(r);
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Reads a `left right` per line merge list; a `#version` header is skipped.
pub fn read_merges(path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text::read_lines(path)?.iter().enumerate() {
        if line.is_empty() || (i == 0 && line.starts_with("#version")) {
            continue;
        }
        let (l, r) = line
            .split_once(' ')
            .filter(|(l, r)| !l.is_empty() && !r.is_empty())
            .ok_or_else(|| Error::parse(path, i + 1, "expected `left right`"))?;
        out.push((l.to_owned(), r.to_owned()));
    }
    Ok(out)
}

/// Loads a vocabulary JSON (`vocab` map, optional `merges`). Without merges
/// the model supports coverage checks but not encoding.
pub fn import_vocab(path: &Path) -> Result<BpeModel> {
    let json = text::read_text(path)?;
    BpeModel::from_json(&json).map_err(|e| match e {
        Error::Json(j) => Error::parse(path, j.line(), j.to_string()),
        other => other,
    })
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    vocab: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    merges: Option<Vec<MergeEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vocab_size_target: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MergeEntry {
    Joined(String),
    Pair([String; 2]),
}

impl MergeEntry {
    fn into_pair(self) -> Result<(String, String)> {
        match self {
            MergeEntry::Pair([l, r]) => Ok((l, r)),
            MergeEntry::Joined(s) => s
                .split_once(' ')
                .filter(|(l, r)| !l.is_empty() && !r.is_empty())
                .map(|(l, r)| (l.to_owned(), r.to_owned()))
                .ok_or_else(|| Error::Model(format!("bad merge entry `{s}`"))),
        }
    }
}

/// Heap entry: larger count first, then the smaller `(left, right)`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Candidate {
    count: u64,
    left: Arc<str>,
    right: Arc<str>,
    pair: (u32, u32),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn word_pairs(syms: &[u32]) -> impl Iterator<Item = (u32, u32)> + '_ {
    syms.windows(2).map(|w| (w[0], w[1]))
}

/// Trains to `k` tokens. Stops early when no pair reaches `min_frequency`.
pub fn train(counts: &WordCounts, k: usize, min_frequency: u64) -> Result<BpeModel> {
    let alphabet: BTreeSet<char> = counts.iter().flat_map(|(w, _)| w.chars()).collect();
    if k < alphabet.len() {
        return Err(Error::Config(format!(
            "vocabulary size {k} is smaller than the alphabet ({})",
            alphabet.len()
        )));
    }
    let mut symbols: Vec<Arc<str>> = alphabet.iter().map(|c| Arc::from(c.to_string())).collect();
    let mut ids: HashMap<Arc<str>, u32> = symbols
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i as u32))
        .collect();

    let mut words: Vec<(Vec<u32>, u64)> = counts
        .iter()
        .map(|(w, n)| (w.chars().map(|c| ids[c.to_string().as_str()]).collect(), n))
        .collect();

    let mut pair_counts: HashMap<(u32, u32), u64> = HashMap::new();
    let mut where_: HashMap<(u32, u32), HashSet<usize>> = HashMap::new();
    for (wi, (syms, n)) in words.iter().enumerate() {
        for p in word_pairs(syms) {
            *pair_counts.entry(p).or_default() += n;
            where_.entry(p).or_default().insert(wi);
        }
    }

    let entry = |p: (u32, u32), count: u64, symbols: &[Arc<str>]| Candidate {
        count,
        left: symbols[p.0 as usize].clone(),
        right: symbols[p.1 as usize].clone(),
        pair: p,
    };
    let mut heap: BinaryHeap<Candidate> = pair_counts
        .iter()
        .map(|(&p, &c)| entry(p, c, &symbols))
        .collect();

    let mut merges: Vec<(String, String)> = Vec::new();
    while symbols.len() < k {
        let Some(top) = heap.pop() else { break };
        if pair_counts.get(&top.pair).copied().unwrap_or(0) != top.count {
            continue; // stale
        }
        if top.count < min_frequency {
            break;
        }
        let (a, b) = top.pair;
        let merged_text: Arc<str> = Arc::from(format!("{}{}", top.left, top.right));
        let merged = match ids.get(&merged_text) {
            Some(&id) => id,
            None => {
                let id = symbols.len() as u32;
                symbols.push(merged_text.clone());
                ids.insert(merged_text, id);
                id
            }
        };
        merges.push((top.left.to_string(), top.right.to_string()));

        let mut touched: HashSet<(u32, u32)> = HashSet::new();
        let mut affected: Vec<usize> = where_
            .remove(&top.pair)
            .unwrap_or_default()
            .into_iter()
            .collect();
        affected.sort_unstable();
        for wi in affected {
            let (syms, n) = &mut words[wi];
            if !word_pairs(syms).any(|p| p == (a, b)) {
                continue;
            }
            for p in word_pairs(syms) {
                let c = pair_counts.get_mut(&p).expect("counted pair");
                *c -= *n;
                touched.insert(p);
            }
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == a && syms[i + 1] == b {
                    out.push(merged);
                    i += 2;
                } else {
                    out.push(syms[i]);
                    i += 1;
                }
            }
            *syms = out;
            for p in word_pairs(syms) {
                *pair_counts.entry(p).or_default() += *n;
                where_.entry(p).or_default().insert(wi);
                touched.insert(p);
            }
        }
        let mut touched: Vec<(u32, u32)> = touched.into_iter().collect();
        touched.sort_unstable();
        for p in touched {
            match pair_counts.get(&p).copied() {
                Some(0) | None => {
                    pair_counts.remove(&p);
                }
                Some(c) => heap.push(entry(p, c, &symbols)),
            }
        }
    }

    let tokens = symbols.iter().map(|s| s.to_string()).collect();
    BpeModel::from_parts(tokens, Some(merges), k)
}
