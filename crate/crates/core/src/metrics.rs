//! Lexical morpheme coverage (LMC), over-split rate (OSR) and the integrated
//! performance score (IPS) that combines them.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bpe::BpeModel;
use crate::error::{Error, Result};
use crate::imdp::CharAutomaton;
use crate::lexicon::MorphemeLexicon;

/// Marker convention of an imported vocabulary, stripped from token surfaces
/// before they are compared with morphemes. Built-in models use none.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerRule {
    pub strip_prefix: Option<String>,
    pub strip_suffix: Option<String>,
}

impl MarkerRule {
    pub fn apply<'a>(&self, token: &'a str) -> &'a str {
        let mut t = token;
        if let Some(p) = self.strip_prefix.as_deref().filter(|p| !p.is_empty()) {
            t = t.strip_prefix(p).unwrap_or(t);
        }
        if let Some(s) = self.strip_suffix.as_deref().filter(|s| !s.is_empty()) {
            t = t.strip_suffix(s).unwrap_or(t);
        }
        t
    }
}

fn morpheme_index(lexicon: &MorphemeLexicon) -> HashMap<&str, usize> {
    lexicon
        .morphemes()
        .iter()
        .enumerate()
        .map(|(i, m)| (m.as_str(), i))
        .collect()
}

/// Morphemes present verbatim in the vocabulary, ascending.
pub fn covered_morphemes(
    lexicon: &MorphemeLexicon,
    model: &BpeModel,
    markers: &MarkerRule,
) -> Result<Vec<String>> {
    if lexicon.is_empty() {
        return Err(Error::Empty("lexicon is empty".into()));
    }
    let index = morpheme_index(lexicon);
    let mut hit = vec![false; lexicon.len()];
    for t in model.tokens() {
        if let Some(&i) = index.get(markers.apply(t)) {
            hit[i] = true;
        }
    }
    Ok(lexicon
        .morphemes()
        .iter()
        .zip(hit)
        .filter(|(_, h)| *h)
        .map(|(m, _)| m.clone())
        .collect())
}

/// `|{m ∈ G : m ∈ V}| / |G|`.
pub fn lexical_morpheme_coverage(
    lexicon: &MorphemeLexicon,
    model: &BpeModel,
    markers: &MarkerRule,
) -> Result<f64> {
    let covered = covered_morphemes(lexicon, model, markers)?;
    Ok(covered.len() as f64 / lexicon.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverSplit {
    pub rate: f64,
    /// Morphemes occurring in at least one eval word.
    pub denominator: usize,
    /// Occurring morphemes never produced as a single token.
    pub oversplit: Vec<String>,
    /// Morphemes that occur in no eval word; excluded from the rate.
    pub absent: Vec<String>,
}

/// Fraction of the morphemes occurring (as substrings) in `eval_words` that
/// no tokenization of those words ever yields as a single token.
pub fn over_split_rate(
    lexicon: &MorphemeLexicon,
    model: &BpeModel,
    eval_words: &[String],
    markers: &MarkerRule,
) -> Result<OverSplit> {
    if lexicon.is_empty() {
        return Err(Error::Empty("lexicon is empty".into()));
    }
    if eval_words.is_empty() {
        return Err(Error::Empty("evaluation word set is empty".into()));
    }
    if !model.can_encode() {
        return Err(Error::NoMerges);
    }
    let index = morpheme_index(lexicon);
    let automaton = CharAutomaton::new(lexicon.morphemes());
    let g = lexicon.len();

    // (occurs, seen as token), merged by OR so the result is independent of
    // how rayon splits the work.
    let (occurs, as_token) = eval_words
        .par_iter()
        .try_fold(
            || (vec![false; g], vec![false; g]),
            |(mut occurs, mut as_token), word| {
                automaton.for_each_match(word, |id| occurs[id as usize] = true);
                for piece in model.encode(word)? {
                    if let Some(&i) = index.get(markers.apply(&piece.text)) {
                        as_token[i] = true;
                    }
                }
                Ok::<_, Error>((occurs, as_token))
            },
        )
        .try_reduce(
            || (vec![false; g], vec![false; g]),
            |(mut o1, mut t1), (o2, t2)| {
                o1.iter_mut().zip(o2).for_each(|(a, b)| *a |= b);
                t1.iter_mut().zip(t2).for_each(|(a, b)| *a |= b);
                Ok((o1, t1))
            },
        )?;

    let mut oversplit = Vec::new();
    let mut absent = Vec::new();
    let mut denominator = 0;
    for (i, m) in lexicon.morphemes().iter().enumerate() {
        if !occurs[i] {
            absent.push(m.clone());
            continue;
        }
        denominator += 1;
        if !as_token[i] {
            oversplit.push(m.clone());
        }
    }
    if denominator == 0 {
        return Err(Error::Degenerate(
            "no lexicon morpheme occurs in any evaluation word".into(),
        ));
    }
    Ok(OverSplit {
        rate: oversplit.len() as f64 / denominator as f64,
        denominator,
        oversplit,
        absent,
    })
}

/// `1 − ‖(1 − LMC, OSR)‖ / √2`: one minus the normalized distance from the
/// ideal point (LMC = 1, OSR = 0).
pub fn integrated_performance_score(lmc: f64, osr: f64) -> Result<f64> {
    for (name, v) in [("LMC", lmc), ("OSR", osr)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange(format!("{name} = {v} is outside [0, 1]")));
        }
    }
    let miss = 1.0 - lmc;
    Ok(1.0 - (miss * miss + osr * osr).sqrt() / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub k: usize,
    pub lmc: f64,
    pub osr: f64,
    pub ips: f64,
    pub covered_morphemes: Vec<String>,
    pub oversplit_morphemes: Vec<String>,
    pub absent_morphemes: Vec<String>,
    pub osr_denominator: usize,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "k,lmc,osr,ips,osr_denominator";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.k, self.lmc, self.osr, self.ips, self.osr_denominator
        )
    }
}

/// LMC, OSR and IPS of one model.
pub fn evaluate(
    k: usize,
    lexicon: &MorphemeLexicon,
    model: &BpeModel,
    eval_words: &[String],
    markers: &MarkerRule,
) -> Result<EvalReport> {
    let covered = covered_morphemes(lexicon, model, markers)?;
    let lmc = covered.len() as f64 / lexicon.len() as f64;
    let split = over_split_rate(lexicon, model, eval_words, markers)?;
    let ips = integrated_performance_score(lmc, split.rate)?;
    Ok(EvalReport {
        k,
        lmc,
        osr: split.rate,
        ips,
        covered_morphemes: covered,
        oversplit_morphemes: split.oversplit,
        absent_morphemes: split.absent,
        osr_denominator: split.denominator,
    })
}
