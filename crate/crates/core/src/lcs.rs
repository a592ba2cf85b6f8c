//! Longest common substring over sets of strings.
//!
//! The multi-string case runs the lexicographically smallest form through a
//! suffix automaton of every other form. For each end position `j` of the
//! reference form this gives the longest suffix of `reference[..j]` that
//! occurs in that form; the longest substring common to *all* forms ending
//! at `j` is the minimum over forms. The answer is the maximum of these
//! minima, taking the smallest end (and therefore start) position on ties.

use std::collections::HashMap;

#[derive(Debug, Clone)]
struct State {
    len: usize,
    link: Option<usize>,
    next: HashMap<char, usize>,
}

/// Suffix automaton over the characters of a single string.
#[derive(Debug, Clone)]
pub struct SuffixAutomaton {
    states: Vec<State>,
}

impl SuffixAutomaton {
    pub fn new(text: &[char]) -> Self {
        let mut states = vec![State {
            len: 0,
            link: None,
            next: HashMap::new(),
        }];
        let mut last = 0;
        for &c in text {
            let cur = states.len();
            states.push(State {
                len: states[last].len + 1,
                link: None,
                next: HashMap::new(),
            });
            let mut p = Some(last);
            while let Some(q) = p {
                if states[q].next.contains_key(&c) {
                    break;
                }
                states[q].next.insert(c, cur);
                p = states[q].link;
            }
            match p {
                None => states[cur].link = Some(0),
                Some(p) => {
                    let q = states[p].next[&c];
                    if states[p].len + 1 == states[q].len {
                        states[cur].link = Some(q);
                    } else {
                        let clone = states.len();
                        let mut cloned = states[q].clone();
                        cloned.len = states[p].len + 1;
                        states.push(cloned);
                        let mut r = Some(p);
                        while let Some(s) = r {
                            if states[s].next.get(&c) != Some(&q) {
                                break;
                            }
                            states[s].next.insert(c, clone);
                            r = states[s].link;
                        }
                        states[q].link = Some(clone);
                        states[cur].link = Some(clone);
                    }
                }
            }
            last = cur;
        }
        SuffixAutomaton { states }
    }

    /// For every prefix `text[..=j]`, the length of its longest suffix that
    /// is a substring of the automaton's string.
    pub fn matching_statistics(&self, text: &[char]) -> Vec<usize> {
        let mut state = 0;
        let mut len = 0;
        let mut out = Vec::with_capacity(text.len());
        for &c in text {
            loop {
                if let Some(&next) = self.states[state].next.get(&c) {
                    state = next;
                    len += 1;
                    break;
                }
                match self.states[state].link {
                    Some(link) => {
                        state = link;
                        len = self.states[state].len;
                    }
                    None => {
                        len = 0;
                        break;
                    }
                }
            }
            out.push(len);
        }
        out
    }
}

/// Longest substring shared by every form.
///
/// Ties go to the leftmost start position within the lexicographically
/// smallest form. Returns the empty string when `forms` is empty or the
/// forms share no character.
pub fn longest_common_substring<S: AsRef<str>>(forms: &[S]) -> String {
    let Some(reference) = forms.iter().map(AsRef::as_ref).min() else {
        return String::new();
    };
    let chars: Vec<char> = reference.chars().collect();
    let mut common: Vec<usize> = (1..=chars.len()).collect();
    for form in forms.iter().map(AsRef::as_ref) {
        if form == reference {
            continue;
        }
        let other: Vec<char> = form.chars().collect();
        let automaton = SuffixAutomaton::new(&other);
        for (c, m) in common.iter_mut().zip(automaton.matching_statistics(&chars)) {
            *c = (*c).min(m);
        }
    }
    let mut best_len = 0;
    let mut best_end = 0;
    for (j, &len) in common.iter().enumerate() {
        if len > best_len {
            best_len = len;
            best_end = j + 1;
        }
    }
    chars[best_end - best_len..best_end].iter().collect()
}

/// Length in characters of the longest common substring of two strings.
pub fn common_substring_len(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    let mut best = 0;
    for &ca in &a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}
