//! Raw-text ingestion: tokenization, type counts and context windows.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use crate::error::Result;
use crate::textio;

/// Marker used for rare neighbors and sentence boundaries.
pub const OOV: &str = "<oov>";

/// Whitespace and punctuation tokenizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tokenizer {
    pub lowercase: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer { lowercase: true }
    }
}

/// Punctuation characters detached from the edges of a token.
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
            | '\u{037E}' | '\u{0387}' | '\u{055C}'..='\u{055F}' | '\u{0589}' | '\u{05BE}'
            | '\u{060C}' | '\u{061B}' | '\u{061F}' | '\u{06D4}' | '\u{0964}' | '\u{0965}'
            | '\u{2010}'..='\u{2027}' | '\u{2030}'..='\u{205E}'
            | '\u{3001}'..='\u{3003}' | '\u{3008}'..='\u{3011}' | '\u{3014}'..='\u{301F}'
            | '\u{FF01}'..='\u{FF0F}' | '\u{FF1A}'..='\u{FF1F}')
}

impl Tokenizer {
    /// Splits on Unicode whitespace, then detaches every leading and trailing
    /// punctuation character as a token of its own.
    pub fn tokenize(&self, line: &str) -> Vec<String> {
        let mut tokens = Vec::new();
        for chunk in line.split_whitespace() {
            let chars: Vec<char> = chunk.chars().collect();
            let start = chars.iter().position(|&c| !is_punctuation(c)).unwrap_or(chars.len());
            let end = chars[start..]
                .iter()
                .rposition(|&c| !is_punctuation(c))
                .map_or(start, |i| start + i + 1);

            tokens.extend(chars[..start].iter().map(|c| c.to_string()));
            if start < end {
                let core: String = chars[start..end].iter().collect();
                tokens.push(if self.lowercase { core.to_lowercase() } else { core });
            }
            tokens.extend(chars[end..].iter().map(|c| c.to_string()));
        }
        tokens
    }
}

/// Tokenizes with the default (lowercasing) tokenizer.
pub fn tokenize(line: &str) -> Vec<String> {
    Tokenizer::default().tokenize(line)
}

/// A tokenized corpus with its type-frequency table.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    sentences: Vec<Vec<String>>,
    type_counts: BTreeMap<String, u64>,
    n_tokens: u64,
    // (sentence, position) of every token, in corpus order.
    occurrences: HashMap<String, Vec<(usize, usize)>>,
}

impl Corpus {
    pub fn from_sentences(sentences: Vec<Vec<String>>) -> Self {
        let mut type_counts = BTreeMap::new();
        let mut occurrences: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        let mut n_tokens = 0;
        for (s, sentence) in sentences.iter().enumerate() {
            for (p, token) in sentence.iter().enumerate() {
                *type_counts.entry(token.clone()).or_insert(0) += 1;
                occurrences.entry(token.clone()).or_default().push((s, p));
                n_tokens += 1;
            }
        }
        Corpus {
            sentences,
            type_counts,
            n_tokens,
            occurrences,
        }
    }

    /// Builds a corpus from lines of text, one sentence per line. Empty lines
    /// yield no sentence.
    pub fn from_text(text: &str, tokenizer: Tokenizer) -> Self {
        let sentences = text
            .lines()
            .map(|line| tokenizer.tokenize(line))
            .filter(|tokens| !tokens.is_empty())
            .collect();
        Corpus::from_sentences(sentences)
    }

    pub fn sentences(&self) -> &[Vec<String>] {
        &self.sentences
    }

    pub fn type_counts(&self) -> &BTreeMap<String, u64> {
        &self.type_counts
    }

    pub fn count(&self, form: &str) -> u64 {
        self.type_counts.get(form).copied().unwrap_or(0)
    }

    pub fn n_tokens(&self) -> u64 {
        self.n_tokens
    }

    pub fn n_types(&self) -> usize {
        self.type_counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_tokens == 0
    }

    pub fn type_token_ratio(&self) -> f64 {
        if self.n_tokens == 0 {
            0.0
        } else {
            self.n_types() as f64 / self.n_tokens as f64
        }
    }

    fn occurrences(&self, form: &str) -> &[(usize, usize)] {
        self.occurrences.get(form).map_or(&[], Vec::as_slice)
    }
}

/// Reads a one-sentence-per-line UTF-8 file.
pub fn load_corpus(path: &Path, tokenizer: Tokenizer) -> Result<Corpus> {
    let text = textio::read_text(path)?;
    Ok(Corpus::from_text(&text, tokenizer))
}

/// A target word with its immediate neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextSample {
    pub left: String,
    pub target: String,
    pub right: String,
}

impl ContextSample {
    pub fn new(left: impl Into<String>, target: impl Into<String>, right: impl Into<String>) -> Self {
        ContextSample {
            left: left.into(),
            target: target.into(),
            right: right.into(),
        }
    }
}

impl fmt::Display for ContextSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.left, self.target, self.right)
    }
}

/// Up to `max_contexts` distinct contexts of `target`, in order of first
/// occurrence. Sentence boundaries become [`OOV`].
pub fn extract_contexts(corpus: &Corpus, target: &str, max_contexts: usize) -> Vec<ContextSample> {
    masked_contexts(corpus, target, max_contexts, 0)
}

/// Like [`extract_contexts`], but neighbors are masked with `alpha` before
/// deduplication, so the result holds distinct *masked* contexts.
pub fn masked_contexts(
    corpus: &Corpus,
    target: &str,
    max_contexts: usize,
    alpha: u64,
) -> Vec<ContextSample> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &(s, p) in corpus.occurrences(target) {
        if out.len() >= max_contexts {
            break;
        }
        let sentence = &corpus.sentences[s];
        let left = if p == 0 { OOV } else { sentence[p - 1].as_str() };
        let right = sentence.get(p + 1).map_or(OOV, String::as_str);
        let sample = mask_rare(ContextSample::new(left, target, right), corpus, alpha);
        if seen.insert(sample.clone()) {
            out.push(sample);
        }
    }
    out
}

/// Replaces each neighbor whose corpus count is below `alpha` with [`OOV`].
pub fn mask_rare(mut context: ContextSample, corpus: &Corpus, alpha: u64) -> ContextSample {
    let mask = |word: &mut String| {
        if word != OOV && corpus.count(word) < alpha {
            *word = OOV.to_string();
        }
    };
    mask(&mut context.left);
    mask(&mut context.right);
    context
}
