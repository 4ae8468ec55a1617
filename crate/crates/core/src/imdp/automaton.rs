//! Aho–Corasick automaton over Unicode scalar values.
//!
//! Transitions are stored in CSR form (per-state slices of sorted characters)
//! which keeps a 500k-pattern dictionary at a few tens of megabytes. Matching
//! follows failure links on demand; there is no dense DFA.

const NONE: u32 = u32::MAX;
const ROOT: u32 = 0;

#[derive(Debug, Clone)]
pub struct CharAutomaton {
    edge_start: Vec<u32>,
    edge_chars: Vec<char>,
    edge_targets: Vec<u32>,
    fail: Vec<u32>,
    /// Nearest state on the failure chain (the state itself included) at
    /// which a pattern ends.
    output: Vec<u32>,
    pattern_at: Vec<u32>,
}

impl CharAutomaton {
    /// Builds the automaton. Pattern ids are indices into `patterns`, which
    /// must be pairwise distinct and non-empty.
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Self {
        assert!(patterns.len() < NONE as usize, "too many patterns");

        let mut order: Vec<u32> = (0..patterns.len() as u32).collect();
        order.sort_by(|&a, &b| {
            patterns[a as usize]
                .as_ref()
                .cmp(patterns[b as usize].as_ref())
        });

        // Trie by sorted insertion: each pattern shares its longest common
        // prefix with the previous one.
        let mut edges: Vec<(u32, char, u32)> = Vec::new();
        let mut pattern_at = vec![NONE];
        let mut path: Vec<u32> = vec![ROOT];
        let mut prev: Vec<char> = Vec::new();
        for id in order {
            let chars: Vec<char> = patterns[id as usize].as_ref().chars().collect();
            debug_assert!(!chars.is_empty(), "empty pattern");
            let lcp = prev.iter().zip(&chars).take_while(|(a, b)| a == b).count();
            path.truncate(lcp + 1);
            for &c in &chars[lcp..] {
                let s = pattern_at.len() as u32;
                pattern_at.push(NONE);
                edges.push((*path.last().expect("root"), c, s));
                path.push(s);
            }
            let end = path[chars.len()] as usize;
            debug_assert_eq!(pattern_at[end], NONE, "duplicate pattern");
            pattern_at[end] = id;
            prev = chars;
        }

        let n_states = pattern_at.len();
        edges.sort_unstable_by_key(|&(p, c, _)| (p, c));
        let mut edge_start = vec![0u32; n_states + 1];
        for &(p, _, _) in &edges {
            edge_start[p as usize + 1] += 1;
        }
        for i in 0..n_states {
            edge_start[i + 1] += edge_start[i];
        }
        let edge_chars = edges.iter().map(|e| e.1).collect();
        let edge_targets = edges.iter().map(|e| e.2).collect();

        let mut automaton = CharAutomaton {
            edge_start,
            edge_chars,
            edge_targets,
            fail: vec![ROOT; n_states],
            output: vec![NONE; n_states],
            pattern_at,
        };
        automaton.link();
        automaton
    }

    fn children(&self, s: u32) -> std::ops::Range<usize> {
        self.edge_start[s as usize] as usize..self.edge_start[s as usize + 1] as usize
    }

    fn child(&self, s: u32, c: char) -> Option<u32> {
        let r = self.children(s);
        self.edge_chars[r.clone()]
            .binary_search(&c)
            .ok()
            .map(|i| self.edge_targets[r.start + i])
    }

    fn next(&self, mut s: u32, c: char) -> u32 {
        loop {
            if let Some(t) = self.child(s, c) {
                return t;
            }
            if s == ROOT {
                return ROOT;
            }
            s = self.fail[s as usize];
        }
    }

    /// Failure and output links, breadth first.
    fn link(&mut self) {
        let mut queue = std::collections::VecDeque::new();
        for e in self.children(ROOT) {
            let t = self.edge_targets[e];
            self.fail[t as usize] = ROOT;
            self.output[t as usize] = if self.pattern_at[t as usize] != NONE {
                t
            } else {
                NONE
            };
            queue.push_back(t);
        }
        while let Some(s) = queue.pop_front() {
            for e in self.children(s) {
                let c = self.edge_chars[e];
                let t = self.edge_targets[e];
                let f = self.next(self.fail[s as usize], c);
                self.fail[t as usize] = f;
                self.output[t as usize] = if self.pattern_at[t as usize] != NONE {
                    t
                } else {
                    self.output[f as usize]
                };
                queue.push_back(t);
            }
        }
    }

    pub fn state_count(&self) -> usize {
        self.pattern_at.len()
    }

    /// Calls `f(pattern_id)` for every (possibly overlapping, possibly
    /// repeated) occurrence of a pattern in `text`.
    pub fn for_each_match(&self, text: &str, mut f: impl FnMut(u32)) {
        let mut s = ROOT;
        for c in text.chars() {
            s = self.next(s, c);
            let mut o = self.output[s as usize];
            while o != NONE {
                f(self.pattern_at[o as usize]);
                o = self.output[self.fail[o as usize] as usize];
            }
        }
    }

    /// Distinct pattern ids occurring in `text`, ascending.
    pub fn distinct_matches(&self, text: &str) -> Vec<u32> {
        let mut ids = Vec::new();
        self.for_each_match(text, |id| ids.push(id));
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}
