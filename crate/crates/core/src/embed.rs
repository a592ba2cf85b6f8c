//! Distributional word vectors.
//!
//! The trainer is a subword skip-gram with negative sampling: a word is
//! represented by the average of its own input vector and the vectors of its
//! character n-grams (of `<word>`, lengths 3 to 6), the same construction
//! fastText uses. Every random choice (initialization, sentence order,
//! window sizes, negatives) comes from one seeded ChaCha generator.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abstraction::{AbstractForm, Pattern};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::textio;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "vector of length {} in a table of dimension {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite vector component".into()));
        }
        self.vectors.insert(word.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.vectors.iter().map(|(w, v)| (w.as_str(), v.as_slice()))
    }

    /// Word-vector text format: `<n_words> <dim>` then `<word> <float>...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.vectors.len(), self.dim);
        for (word, vector) in &self.vectors {
            out.push_str(word);
            for x in vector {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str, path: &Path) -> Result<Self> {
        let mut lines = textio::body_lines(text);
        let Some((header_line, header)) = lines.next() else {
            return Err(Error::parse(path, 1, "missing '<n_words> <dim>' header"));
        };
        let header: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, header_line, "bad header"))?;
        let [n_words, dim] = header[..] else {
            return Err(Error::parse(path, header_line, "header must hold two integers"));
        };
        let mut table = EmbeddingTable::new(dim);
        let mut first_seen: HashMap<String, usize> = HashMap::new();
        for (line_no, line) in lines {
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let Some(word) = fields.next() else {
                return Err(Error::parse(path, line_no, "empty row"));
            };
            let vector: Vec<f32> = fields
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, line_no, "bad float"))?;
            if vector.len() != dim {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected {dim} components, found {}", vector.len()),
                ));
            }
            if let Some(first) = first_seen.insert(word.to_string(), line_no) {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("duplicate word '{word}' (first at line {first})"),
                ));
            }
            table
                .insert(word, vector)
                .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        }
        if table.len() != n_words {
            return Err(Error::parse(
                path,
                header_line,
                format!("header declares {n_words} words, found {}", table.len()),
            ));
        }
        Ok(table)
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    EmbeddingTable::parse_text(&textio::read_text(path)?, path)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingOptions {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub min_n: usize,
    pub max_n: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for EmbeddingOptions {
    fn default() -> Self {
        EmbeddingOptions {
            dim: 100,
            window: 5,
            epochs: 5,
            negatives: 5,
            min_n: 3,
            max_n: 6,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

/// Character n-grams of `<word>` with lengths in `min_n..=max_n`, excluding
/// the bracketed word itself.
pub fn char_ngrams(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let chars: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    for n in min_n..=max_n.min(chars.len()) {
        for window in chars.windows(n) {
            if n == chars.len() {
                continue;
            }
            out.push(window.iter().collect());
        }
    }
    out
}

fn sigmoid(x: f32) -> f32 {
    if x > 8.0 {
        1.0
    } else if x < -8.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

struct Sampler {
    cumulative: Vec<f64>,
}

impl Sampler {
    fn new(counts: &[u64]) -> Self {
        let mut total = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                total += (c as f64).powf(0.75);
                total
            })
            .collect();
        Sampler { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let x = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= x).min(self.cumulative.len() - 1)
    }
}

/// Trains subword skip-gram vectors for every type in the corpus.
pub fn train_embeddings(corpus: &Corpus, options: &EmbeddingOptions) -> Result<EmbeddingTable> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("cannot train embeddings on an empty corpus".into()));
    }
    if options.dim < 2 {
        return Err(Error::Config("embedding dimension must be at least 2".into()));
    }
    let dim = options.dim;
    let words: Vec<&str> = corpus.type_counts().keys().map(String::as_str).collect();
    let counts: Vec<u64> = corpus.type_counts().values().copied().collect();
    let word_index: HashMap<&str, usize> = words.iter().enumerate().map(|(i, w)| (*w, i)).collect();

    let mut ngram_index: HashMap<String, usize> = HashMap::new();
    let subwords: Vec<Vec<usize>> = words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut rows = vec![i];
            let grams: BTreeSet<String> = char_ngrams(w, options.min_n, options.max_n).into_iter().collect();
            for gram in grams {
                let next = words.len() + ngram_index.len();
                rows.push(*ngram_index.entry(gram).or_insert(next));
            }
            rows
        })
        .collect();
    let n_rows = words.len() + ngram_index.len();

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let bound = 1.0 / dim as f32;
    let mut input: Vec<f32> = (0..n_rows * dim).map(|_| rng.gen_range(-bound..bound)).collect();
    let mut output = vec![0.0f32; words.len() * dim];
    let sampler = Sampler::new(&counts);

    let sentences: Vec<Vec<usize>> = corpus
        .sentences()
        .iter()
        .map(|s| s.iter().map(|t| word_index[t.as_str()]).collect())
        .collect();
    let total_steps = (corpus.n_tokens() as usize * options.epochs).max(1);
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut hidden = vec![0.0f32; dim];
    let mut grad = vec![0.0f32; dim];

    for _ in 0..options.epochs {
        order.shuffle(&mut rng);
        for &s in &order {
            let sentence = &sentences[s];
            for (pos, &center) in sentence.iter().enumerate() {
                let progress = step as f64 / total_steps as f64;
                let lr = (options.learning_rate * (1.0 - progress)) as f32;
                step += 1;
                let reach = rng.gen_range(1..=options.window.max(1));
                let rows = &subwords[center];
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(sentence.len() - 1);
                for (ctx, &positive) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx == pos {
                        continue;
                    }
                    hidden.iter_mut().for_each(|h| *h = 0.0);
                    for &r in rows {
                        for (h, x) in hidden.iter_mut().zip(&input[r * dim..(r + 1) * dim]) {
                            *h += x;
                        }
                    }
                    let scale = 1.0 / rows.len() as f32;
                    hidden.iter_mut().for_each(|h| *h *= scale);
                    grad.iter_mut().for_each(|g| *g = 0.0);

                    for n in 0..=options.negatives {
                        let (target, label) = if n == 0 {
                            (positive, 1.0)
                        } else {
                            let t = sampler.sample(&mut rng);
                            if t == positive {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let out = &mut output[target * dim..(target + 1) * dim];
                        let score: f32 = hidden.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
                        let g = lr * (label - sigmoid(score));
                        for ((gr, o), h) in grad.iter_mut().zip(out.iter_mut()).zip(&hidden) {
                            *gr += g * *o;
                            *o += g * h;
                        }
                    }
                    for &r in rows {
                        for (x, g) in input[r * dim..(r + 1) * dim].iter_mut().zip(&grad) {
                            *x += g;
                        }
                    }
                }
            }
        }
    }

    let mut table = EmbeddingTable::new(dim);
    for (i, word) in words.iter().enumerate() {
        let rows = &subwords[i];
        let mut v = vec![0.0f32; dim];
        for &r in rows {
            for (acc, x) in v.iter_mut().zip(&input[r * dim..(r + 1) * dim]) {
                *acc += x;
            }
        }
        let scale = 1.0 / rows.len() as f32;
        v.iter_mut().for_each(|x| *x *= scale);
        table.insert(*word, v)?;
    }
    Ok(table)
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbstractFormVector {
    pub pattern: Pattern,
    pub vector: Vec<f64>,
}

/// No member of an abstract form has a vector in the table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingEmbedding {
    pub pattern: Pattern,
}

/// Componentwise mean of the member types' vectors. Members without a
/// vector are skipped.
pub fn abstract_form_vector(
    form: &AbstractForm,
    table: &EmbeddingTable,
) -> std::result::Result<AbstractFormVector, MissingEmbedding> {
    let mut sum = vec![0.0f64; table.dim()];
    let mut found = 0usize;
    // A form can appear in several paradigms; it is one type.
    let types: BTreeSet<&str> = form.members.iter().map(|(_, w)| w.as_str()).collect();
    for word in types {
        match table.get(word) {
            Some(v) => {
                for (acc, x) in sum.iter_mut().zip(v) {
                    *acc += *x as f64;
                }
                found += 1;
            }
            None => log::warn!("no embedding for '{word}' (abstract form {})", form.pattern),
        }
    }
    if found == 0 {
        return Err(MissingEmbedding {
            pattern: form.pattern.clone(),
        });
    }
    sum.iter_mut().for_each(|x| *x /= found as f64);
    Ok(AbstractFormVector {
        pattern: form.pattern.clone(),
        vector: sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tokenizer;

    fn small_options() -> EmbeddingOptions {
        EmbeddingOptions {
            dim: 16,
            epochs: 20,
            seed: 11,
            ..Default::default()
        }
    }

    fn f64_cos(a: &[f64], b: &[f64]) -> f64 {
        let a: Vec<f32> = a.iter().map(|&x| x as f32).collect();
        let b: Vec<f32> = b.iter().map(|&x| x as f32).collect();
        cosine(&a, &b)
    }

    #[test]
    fn ngrams_of_short_word() {
        assert_eq!(char_ngrams("ab", 3, 6), vec!["<ab", "ab>"]);
        assert_eq!(char_ngrams("a", 3, 6), Vec::<String>::new());
    }

    #[test]
    fn shared_contexts_make_similar_vectors() {
        let mut text = String::new();
        let fillers = ["x", "y", "z", "q", "w", "v"];
        for i in 0..200 {
            let a = fillers[i % 6];
            let b = fillers[(i / 6) % 6];
            text.push_str(&format!("the dog {a} walks {b} home\n"));
            text.push_str(&format!("the dog {a} runs {b} home\n"));
            text.push_str(&format!("purple {b} lemonade {a} sky\n"));
        }
        let corpus = Corpus::from_text(&text, Tokenizer::default());
        let table = train_embeddings(&corpus, &small_options()).unwrap();
        let walks = table.get("walks").unwrap();
        let runs = table.get("runs").unwrap();
        let lemonade = table.get("lemonade").unwrap();
        assert!(cosine(walks, runs) > cosine(walks, lemonade));
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = Corpus::from_text("a b c a\nb c d e\ne a", Tokenizer::default());
        let a = train_embeddings(&corpus, &small_options()).unwrap();
        let b = train_embeddings(&corpus, &small_options()).unwrap();
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn single_type_corpus() {
        let corpus = Corpus::from_text("a", Tokenizer::default());
        let table = train_embeddings(&corpus, &small_options()).unwrap();
        let v = table.get("a").unwrap();
        assert_eq!(v.len(), 16);
        assert!(v.iter().all(|x| x.is_finite()));
        assert!(train_embeddings(&Corpus::default(), &small_options()).is_err());
    }

    #[test]
    fn text_format() {
        let p = Path::new("v.vec");
        let t = EmbeddingTable::parse_text("2 3\ncat 1.0 0.0 0.0\ndog 0 1 0\n", p).unwrap();
        assert_eq!(t.get("cat").unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(EmbeddingTable::parse_text(&t.to_text(), p).unwrap(), t);

        match EmbeddingTable::parse_text("2 3\ncat 1.0 0.0 0.0\ndog 1 0\n", p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match EmbeddingTable::parse_text("2 2\ncat 1 0\ncat 0 1\n", p) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("line 2"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(EmbeddingTable::parse_text("3 2\ncat 1 0\n", p).is_err());
    }

    #[test]
    fn self_cosine_is_one() {
        let corpus = Corpus::from_text("a b c a\nb c d e\ne a", Tokenizer::default());
        let table = train_embeddings(&corpus, &small_options()).unwrap();
        for (_, v) in table.iter() {
            assert!((cosine(v, v) - 1.0).abs() < 1e-9);
        }
    }

    fn form(members: &[(usize, &str)]) -> AbstractForm {
        AbstractForm {
            pattern: Pattern::new("", "s"),
            members: members.iter().map(|(i, w)| (*i, w.to_string())).collect(),
        }
    }

    #[test]
    fn abstract_form_means() {
        let mut table = EmbeddingTable::new(2);
        table.insert("a", vec![1.0, 0.0]).unwrap();
        table.insert("b", vec![0.0, 1.0]).unwrap();
        table.insert("c", vec![3.0, 3.0]).unwrap();

        let v = abstract_form_vector(&form(&[(0, "a")]), &table).unwrap();
        assert_eq!(v.vector, [1.0, 0.0]);
        let v = abstract_form_vector(&form(&[(0, "a"), (1, "b")]), &table).unwrap();
        assert_eq!(v.vector, [0.5, 0.5]);
        let v = abstract_form_vector(&form(&[(0, "a"), (1, "zz"), (2, "c")]), &table).unwrap();
        assert_eq!(v.vector, [2.0, 1.5]);
        assert!(abstract_form_vector(&form(&[(0, "zz")]), &table).is_err());

        let reordered = abstract_form_vector(&form(&[(2, "c"), (0, "a"), (1, "b")]), &table).unwrap();
        let original = abstract_form_vector(&form(&[(0, "a"), (1, "b"), (2, "c")]), &table).unwrap();
        assert_eq!(reordered, original);
        assert!((f64_cos(&original.vector, &original.vector) - 1.0).abs() < 1e-9);
    }
}
