//! Self-referential atomicity scoring.
//!
//! Every token starts at `1/len`. Each iteration computes, for every token,
//! the best score-sum over its decompositions into two or more pool members
//! (the "best explanation"). A token whose best explanation beats its own
//! score is penalized to `S0 / (1 + best)`; otherwise it keeps its score.
//! All tokens of one iteration read the previous iteration's table.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lexicon::{Candidate, Decomposition, ScoreTable};
use crate::text::char_len;

/// `S0(t) = 1/|t|`, with `|t|` in Unicode scalar values. Duplicate surfaces
/// collapse to one entry.
pub fn initial_scores(pool: &[Candidate]) -> Result<ScoreTable> {
    if pool.is_empty() {
        return Err(Error::Empty("candidate pool is empty".into()));
    }
    let unique: BTreeSet<&str> = pool.iter().map(Candidate::surface).collect();
    ScoreTable::new(
        unique
            .into_iter()
            .map(|s| (s.to_owned(), 1.0 / char_len(s) as f64)),
        0,
    )
}

fn segment_allowed(len_chars: usize, segment: &str, whitelist: &BTreeSet<char>) -> bool {
    len_chars > 1
        || segment
            .chars()
            .next()
            .is_some_and(|c| whitelist.contains(&c))
}

/// Char-boundary byte offsets of `s`, including `s.len()`.
fn boundaries(s: &str) -> Vec<usize> {
    s.char_indices().map(|(i, _)| i).chain([s.len()]).collect()
}

/// The highest-scoring split of `token` into at least two parts, each a key
/// of `scores`, where single-character parts must be whitelisted.
///
/// Among equal sums the split with the earliest boundaries wins.
pub fn best_explanation(
    token: &str,
    scores: &ScoreTable,
    whitelist: &BTreeSet<char>,
) -> Result<Option<Decomposition>> {
    if scores.get(token).is_none() {
        return Err(Error::UnknownToken(token.to_owned()));
    }
    let b = boundaries(token);
    let n = b.len() - 1;

    // best[i]: best sum for token[i..], next[i]: end of the first segment.
    let mut best = vec![f64::NEG_INFINITY; n + 1];
    let mut next = vec![usize::MAX; n + 1];
    best[n] = 0.0;
    for i in (0..n).rev() {
        for j in i + 1..=n {
            if (i == 0 && j == n) || best[j] == f64::NEG_INFINITY {
                continue;
            }
            let seg = &token[b[i]..b[j]];
            if !segment_allowed(j - i, seg, whitelist) {
                continue;
            }
            if let Some(s) = scores.get(seg) {
                let total = s + best[j];
                if total > best[i] {
                    best[i] = total;
                    next[i] = j;
                }
            }
        }
    }
    if best[0] == f64::NEG_INFINITY {
        return Ok(None);
    }
    let mut parts = Vec::new();
    let mut i = 0;
    while i < n {
        let j = next[i];
        parts.push(token[b[i]..b[j]].to_owned());
        i = j;
    }
    Ok(Some(Decomposition {
        parts,
        total_score: best[0],
    }))
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    start: u32,
    end: u32,
    part: u32,
}

/// Every legal segment of every token, resolved to table positions once.
/// The pool is fixed during refinement, so only the scores change between
/// iterations.
#[derive(Debug, Clone)]
struct Lattice {
    offsets: Vec<usize>,
    lengths: Vec<u32>,
    edges: Vec<Edge>,
}

impl Lattice {
    fn new(table: &ScoreTable, whitelist: &BTreeSet<char>) -> Self {
        let per_token: Vec<(u32, Vec<Edge>)> = table
            .tokens()
            .par_iter()
            .map(|token| {
                let b = boundaries(token);
                let n = b.len() - 1;
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in i + 1..=n {
                        if i == 0 && j == n {
                            continue;
                        }
                        let seg = &token[b[i]..b[j]];
                        if !segment_allowed(j - i, seg, whitelist) {
                            continue;
                        }
                        if let Some(p) = table.position(seg) {
                            edges.push(Edge {
                                start: i as u32,
                                end: j as u32,
                                part: p as u32,
                            });
                        }
                    }
                }
                (n as u32, edges)
            })
            .collect();

        let mut offsets = Vec::with_capacity(per_token.len() + 1);
        let mut lengths = Vec::with_capacity(per_token.len());
        let mut edges = Vec::new();
        offsets.push(0);
        for (n, e) in per_token {
            lengths.push(n);
            edges.extend(e);
            offsets.push(edges.len());
        }
        Lattice {
            offsets,
            lengths,
            edges,
        }
    }

    /// Best explanation score of token `t`, 0 when it has none.
    fn best_score(&self, t: usize, scores: &[f64]) -> f64 {
        let edges = &self.edges[self.offsets[t]..self.offsets[t + 1]];
        if edges.is_empty() {
            return 0.0;
        }
        let n = self.lengths[t] as usize;
        let mut best = [f64::NEG_INFINITY; 64];
        let mut heap_best;
        let best: &mut [f64] = if n < best.len() {
            &mut best[..=n]
        } else {
            heap_best = vec![f64::NEG_INFINITY; n + 1];
            &mut heap_best
        };
        best[n] = 0.0;
        // Edges are sorted by start; walking backwards finalizes every
        // suffix before it is extended.
        for e in edges.iter().rev() {
            let tail = best[e.end as usize];
            if tail == f64::NEG_INFINITY {
                continue;
            }
            let total = scores[e.part as usize] + tail;
            if total > best[e.start as usize] {
                best[e.start as usize] = total;
            }
        }
        if best[0] == f64::NEG_INFINITY {
            0.0
        } else {
            best[0]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementState {
    pub scores: ScoreTable,
    /// Frozen `S0`.
    pub initial_scores: ScoreTable,
    pub iteration: usize,
    pub last_max_delta: f64,
}

impl RefinementState {
    pub fn new(initial: ScoreTable) -> Self {
        RefinementState {
            scores: initial.clone(),
            initial_scores: initial,
            iteration: 0,
            last_max_delta: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinementParams {
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for RefinementParams {
    fn default() -> Self {
        RefinementParams {
            epsilon: 1e-7,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefinementOutcome {
    pub state: RefinementState,
    pub stop_reason: StopReason,
    pub max_delta_history: Vec<f64>,
}

/// Refinement driver holding the precomputed decomposition lattice.
pub struct Refiner {
    lattice: Lattice,
}

impl Refiner {
    pub fn new(table: &ScoreTable, whitelist: &BTreeSet<char>) -> Self {
        Refiner {
            lattice: Lattice::new(table, whitelist),
        }
    }

    pub fn step(&self, state: &RefinementState) -> RefinementState {
        let prev = state.scores.scores();
        let initial = state.initial_scores.scores();
        let next: Vec<f64> = (0..prev.len())
            .into_par_iter()
            .map(|t| {
                let bep = self.lattice.best_score(t, prev);
                if bep <= prev[t] {
                    prev[t]
                } else {
                    initial[t] / (1.0 + bep)
                }
            })
            .collect();
        let max_delta = next
            .iter()
            .zip(prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let iteration = state.iteration + 1;
        RefinementState {
            scores: state.scores.with_scores(next, iteration),
            initial_scores: state.initial_scores.clone(),
            iteration,
            last_max_delta: max_delta,
        }
    }

    pub fn run(&self, mut state: RefinementState, params: RefinementParams) -> RefinementOutcome {
        let mut history = Vec::new();
        loop {
            state = self.step(&state);
            history.push(state.last_max_delta);
            log::debug!(
                "iteration {}: max delta {:e}",
                state.iteration,
                state.last_max_delta
            );
            if state.last_max_delta < params.epsilon {
                return RefinementOutcome {
                    state,
                    stop_reason: StopReason::Converged,
                    max_delta_history: history,
                };
            }
            if state.iteration >= params.max_iterations {
                return RefinementOutcome {
                    state,
                    stop_reason: StopReason::MaxIterations,
                    max_delta_history: history,
                };
            }
        }
    }
}

/// One synchronous update of every score.
pub fn refine_step(state: &RefinementState, whitelist: &BTreeSet<char>) -> RefinementState {
    Refiner::new(&state.initial_scores, whitelist).step(state)
}

/// Iterates [`refine_step`] until the largest score change drops below
/// `epsilon` or `max_iterations` steps have run.
pub fn run_refinement(
    pool: &[Candidate],
    whitelist: &BTreeSet<char>,
    params: RefinementParams,
) -> Result<RefinementOutcome> {
    if params.max_iterations == 0 {
        return Err(Error::Config("max_iterations must be at least 1".into()));
    }
    if params.epsilon.is_nan() {
        return Err(Error::Config("epsilon is NaN".into()));
    }
    let initial = initial_scores(pool)?;
    let refiner = Refiner::new(&initial, whitelist);
    Ok(refiner.run(RefinementState::new(initial), params))
}

/// Tokens of `table` that have at least one legal decomposition.
pub fn decomposable(table: &ScoreTable, whitelist: &BTreeSet<char>) -> HashSet<String> {
    let lattice = Lattice::new(table, whitelist);
    let ones = vec![1.0; table.len()];
    table
        .tokens()
        .iter()
        .enumerate()
        .filter(|&(t, _)| lattice.best_score(t, &ones) > 0.0)
        .map(|(_, s)| s.clone())
        .collect()
}
