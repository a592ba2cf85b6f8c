//! A synthetic, fully regular concatenative language with gold paradigms.
//!
//! Every sentence is a sequence of phrases `marker form`, where the marker
//! word is specific to the part of speech and slot of the form that
//! follows it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GoldParadigm;
use crate::cluster::Clustering;
use crate::corpus::{ContextSample, Corpus};
use crate::error::{Error, Result};

const CONSONANTS: &[char] = &['b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v', 'z'];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];

/// Part of speech → suffix per slot, the first suffix giving the lemma.
pub type ToySpec = BTreeMap<String, Vec<String>>;

/// Parses `N:,ta;V:o,as,is`; an empty item is the empty suffix.
pub fn parse_toy_spec(s: &str) -> Result<ToySpec> {
    let mut out = ToySpec::new();
    for part in s.split(';').filter(|p| !p.trim().is_empty()) {
        let (pos, suffixes) = part
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("bad language spec item '{part}' (expected POS:suffix,...)")))?;
        let pos = pos.trim();
        if pos.is_empty() || out.contains_key(pos) {
            return Err(Error::Config(format!("missing or repeated POS in '{part}'")));
        }
        out.insert(pos.to_string(), suffixes.split(',').map(|x| x.trim().to_string()).collect());
    }
    Ok(out)
}

pub fn toy_spec_to_string(spec: &ToySpec) -> String {
    spec.iter()
        .map(|(pos, sfx)| format!("{pos}:{}", sfx.join(",")))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyLanguage {
    pub sentences: Vec<Vec<String>>,
    pub gold: Vec<GoldParadigm>,
    /// One cluster per gold paradigm, ids in gold order.
    pub clusters: Clustering,
    /// One item per gold paradigm, in gold order.
    pub test_items: Vec<ContextSample>,
}

impl ToyLanguage {
    pub fn corpus(&self) -> Corpus {
        Corpus::from_sentences(self.sentences.clone())
    }

    pub fn corpus_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            let _ = writeln!(out, "{}", s.join(" "));
        }
        out
    }

    pub fn test_tsv(&self) -> String {
        let mut out = String::new();
        for item in &self.test_items {
            let _ = writeln!(out, "{item}");
        }
        out
    }

    pub fn gold_clusters(&self) -> Vec<BTreeSet<String>> {
        self.clusters.iter().map(|c| c.forms.clone()).collect()
    }
}

fn marker(index: usize) -> String {
    let mut s = String::from("q");
    let mut i = index;
    loop {
        s.push(VOWELS[i % VOWELS.len()]);
        i /= VOWELS.len();
        if i == 0 {
            break;
        }
    }
    s
}

fn stem(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(4..=7);
    (0..len)
        .map(|i| {
            let pool = if i % 2 == 0 { CONSONANTS } else { VOWELS };
            pool[rng.gen_range(0..pool.len())]
        })
        .collect()
}

pub fn generate_toy_language(spec: &ToySpec, n_lemmas: usize, n_sentences: usize, seed: u64) -> Result<ToyLanguage> {
    if spec.is_empty() || n_lemmas == 0 {
        return Err(Error::InvalidInput("language needs at least one POS and one lemma".into()));
    }
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for (pos, suffixes) in spec {
        if suffixes.is_empty() {
            return Err(Error::InvalidInput(format!("POS {pos} has no suffixes")));
        }
        for s in suffixes {
            if let Some(other) = owner.insert(s, pos) {
                return Err(Error::InvalidInput(format!("suffix '{s}' is used by both {other} and {pos}")));
            }
            if s.contains(|c: char| c.is_whitespace() || c == 'q') {
                return Err(Error::InvalidInput(format!("suffix '{s}' contains a reserved character")));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut forms_seen = BTreeSet::new();
    let mut gold = Vec::new();
    let mut markers: Vec<Vec<String>> = Vec::new();
    for (pos, suffixes) in spec {
        markers.push((0..suffixes.len()).map(|i| marker(markers.iter().map(Vec::len).sum::<usize>() + i)).collect());
        for _ in 0..n_lemmas {
            let forms = loop {
                let stem = stem(&mut rng);
                let forms: Vec<String> = suffixes.iter().map(|s| format!("{stem}{s}")).collect();
                if forms.iter().all(|f| !forms_seen.contains(f)) {
                    break forms;
                }
            };
            forms_seen.extend(forms.iter().cloned());
            gold.push(GoldParadigm {
                lemma: forms[0].clone(),
                pos: pos.clone(),
                slots: forms
                    .iter()
                    .enumerate()
                    .map(|(i, f)| (format!("{pos};C{i}"), f.clone()))
                    .collect(),
            });
        }
    }

    // Gold paradigms are grouped by POS in spec order.
    let pos_of = |g: usize| g / n_lemmas;
    let form_at = |g: usize, slot: usize| gold[g].slots[&format!("{};C{slot}", gold[g].pos)].clone();
    let n_slots = |g: usize| gold[g].slots.len();
    let all_markers: Vec<&String> = markers.iter().flatten().collect();

    let mut sentences = Vec::with_capacity(n_sentences);
    for _ in 0..n_sentences {
        let phrases = rng.gen_range(3..=5);
        let mut sentence = Vec::with_capacity(2 * phrases);
        for _ in 0..phrases {
            let g = rng.gen_range(0..gold.len());
            let slot = rng.gen_range(0..n_slots(g));
            sentence.push(markers[pos_of(g)][slot].clone());
            sentence.push(form_at(g, slot));
        }
        sentences.push(sentence);
    }

    let test_items = (0..gold.len())
        .map(|g| {
            let slot = rng.gen_range(0..n_slots(g));
            let right = all_markers.choose(&mut rng).expect("at least one marker");
            ContextSample::new(markers[pos_of(g)][slot].clone(), form_at(g, slot), right.as_str())
        })
        .collect();
    let clusters = Clustering::from_sets(gold.iter().map(|g| g.slots.values().cloned().collect::<Vec<_>>()));
    Ok(ToyLanguage {
        sentences,
        gold,
        clusters,
        test_items,
    })
}
