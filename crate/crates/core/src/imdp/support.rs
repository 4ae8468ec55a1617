//! Type-support counting: for every candidate, how many *other* candidates
//! contain it as a contiguous substring.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU32, Ordering};

use rayon::prelude::*;

use super::automaton::CharAutomaton;
use crate::lexicon::Candidate;

#[derive(Debug, Clone)]
pub struct SupportIndex {
    candidates: Vec<Candidate>,
    support: Vec<u32>,
    by_surface: HashMap<String, usize>,
}

/// Collapses candidates sharing a surface; the first occurrence wins.
pub fn dedup_surfaces(candidates: &[Candidate]) -> Vec<Candidate> {
    let mut seen = HashSet::with_capacity(candidates.len());
    candidates
        .iter()
        .filter(|c| seen.insert(c.surface()))
        .cloned()
        .collect()
}

/// Counts support with one Aho–Corasick pass per candidate over a dictionary
/// of all surfaces. Surfaces are deduplicated first.
pub fn build_support_index(candidates: &[Candidate]) -> SupportIndex {
    let candidates = dedup_surfaces(candidates);
    let surfaces: Vec<&str> = candidates.iter().map(Candidate::surface).collect();
    let automaton = CharAutomaton::new(&surfaces);

    let counts: Vec<AtomicU32> = (0..surfaces.len()).map(|_| AtomicU32::new(0)).collect();
    surfaces.par_iter().enumerate().for_each(|(own, text)| {
        for id in automaton.distinct_matches(text) {
            if id as usize != own {
                counts[id as usize].fetch_add(1, Ordering::Relaxed);
            }
        }
    });
    let support = counts.into_iter().map(AtomicU32::into_inner).collect();

    let by_surface = surfaces
        .iter()
        .enumerate()
        .map(|(i, s)| (s.to_string(), i))
        .collect();
    SupportIndex {
        candidates,
        support,
        by_surface,
    }
}

impl SupportIndex {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn support(&self, surface: &str) -> Option<usize> {
        self.by_surface
            .get(surface)
            .map(|&i| self.support[i] as usize)
    }

    /// Support counts aligned with [`SupportIndex::candidates`].
    pub fn counts(&self) -> impl Iterator<Item = usize> + '_ {
        self.support.iter().map(|&s| s as usize)
    }
}

/// Keeps the candidates with support ≥ `m`, in index order.
pub fn support_filter(index: &SupportIndex, m: usize) -> Vec<Candidate> {
    index
        .candidates
        .iter()
        .zip(&index.support)
        .filter(|(_, &s)| s as usize >= m)
        .map(|(c, _)| c.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cands(v: &[&str]) -> Vec<Candidate> {
        v.iter().map(|s| Candidate::plain(s).unwrap()).collect()
    }

    fn surfaces(v: &[Candidate]) -> Vec<&str> {
        v.iter().map(Candidate::surface).collect()
    }

    // Quadratic reference count.
    fn brute_support(pool: &[String], i: usize) -> usize {
        pool.iter()
            .enumerate()
            .filter(|&(j, c)| j != i && c.contains(pool[i].as_str()))
            .count()
    }

    #[test]
    fn talo_family() {
        let idx = build_support_index(&cands(&["talo", "talossa", "talon", "taloja"]));
        assert_eq!(idx.support("talo"), Some(3));
        assert_eq!(idx.support("talossa"), Some(0));
        assert_eq!(idx.support("talon"), Some(0));
        assert_eq!(idx.support("missing"), None);
        assert_eq!(surfaces(&support_filter(&idx, 3)), ["talo"]);
        assert_eq!(support_filter(&idx, 0).len(), 4);
    }

    #[test]
    fn singleton() {
        let idx = build_support_index(&cands(&["talo"]));
        assert_eq!(idx.support("talo"), Some(0));
    }

    #[test]
    fn m_one() {
        let idx = build_support_index(&cands(&["aa", "aab", "aac"]));
        assert_eq!(idx.support("aa"), Some(2));
        assert_eq!(surfaces(&support_filter(&idx, 1)), ["aa"]);
    }

    #[test]
    fn repeated_occurrence_counts_once() {
        let idx = build_support_index(&cands(&["ab", "abab"]));
        assert_eq!(idx.support("ab"), Some(1));
    }

    #[test]
    fn flags_collapse_to_one_surface() {
        let mut pool = cands(&["ssa", "talossa"]);
        pool.push(Candidate::parse_marked("-ssa", crate::lexicon::Source::AffEntry).unwrap());
        let idx = build_support_index(&pool);
        assert_eq!(idx.len(), 2);
        assert_eq!(idx.support("ssa"), Some(1));
        assert!(
            !idx.candidates()[0].is_suffix_marked,
            "first occurrence wins"
        );
    }

    proptest! {
        #[test]
        fn equals_brute_force(pool in proptest::collection::btree_set("[abö]{1,6}", 1..80)) {
            let pool: Vec<String> = pool.into_iter().collect();
            let idx = build_support_index(&pool.iter().map(|s| Candidate::plain(s).unwrap()).collect::<Vec<_>>());
            for (i, s) in pool.iter().enumerate() {
                prop_assert_eq!(idx.support(s), Some(brute_support(&pool, i)));
            }
        }
    }
}
