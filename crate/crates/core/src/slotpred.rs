//! Slot prediction for words in context.
//!
//! A multinomial logistic regression over binary features predicts the
//! `(pos, slot)` pair of a word jointly, so the slot always belongs to the
//! predicted tag. Features are the character 1- to 4-grams of the padded
//! word, the identities of the masked left and right neighbors, and a bias.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::align::{SlotAssignment, SlotId};
use crate::corpus::{masked_contexts, ContextSample, Corpus};
use crate::error::{Error, Result};
use crate::textio;

const BIAS: &str = "bias";
const MAX_NGRAM: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictorExample {
    pub context: ContextSample,
    pub label: SlotId,
}

impl PredictorExample {
    pub fn label_pos(&self) -> usize {
        self.label.pos
    }
}

/// Feature strings of a word in context; the bias comes first.
pub fn features(context: &ContextSample) -> Vec<String> {
    let padded: Vec<char> = std::iter::once('^')
        .chain(context.target.chars())
        .chain(std::iter::once('$'))
        .collect();
    let mut out = vec![BIAS.to_string()];
    for n in 1..=MAX_NGRAM {
        for window in padded.windows(n) {
            out.push(format!("c:{}", window.iter().collect::<String>()));
        }
    }
    out.push(format!("L={}", context.left));
    out.push(format!("R={}", context.right));
    out.sort_unstable();
    out.dedup();
    out
}

/// One example per distinct masked context of every slot-assigned form, up
/// to `max_contexts` per form.
pub fn build_training_data(
    corpus: &Corpus,
    assignment: &SlotAssignment,
    max_contexts: usize,
    alpha: u64,
) -> Vec<PredictorExample> {
    let mut labels: BTreeMap<&str, Vec<SlotId>> = BTreeMap::new();
    for (_, form, slot) in assignment.members() {
        let entry = labels.entry(form).or_default();
        if !entry.contains(&slot) {
            entry.push(slot);
        }
    }
    let mut out = Vec::new();
    for (form, slots) in labels {
        let contexts = masked_contexts(corpus, form, max_contexts, alpha);
        for &label in &slots {
            out.extend(contexts.iter().map(|c| PredictorExample { context: c.clone(), label }));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 10,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotPredictor {
    classes: Vec<SlotId>,
    support: Vec<usize>,
    feature_index: BTreeMap<String, usize>,
    /// `weights[feature][class]`
    weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotPrediction {
    pub pos: usize,
    pub source_slot: SlotId,
    pub target_slots: Vec<SlotId>,
}

impl SlotPrediction {
    /// `target<TAB>pos<TAB>slot<TAB>slot1,slot2,...`
    pub fn to_line(&self, target: &str) -> String {
        let slots: Vec<String> = self.target_slots.iter().map(ToString::to_string).collect();
        format!("{target}\t{}\t{}\t{}", self.pos, self.source_slot, slots.join(","))
    }
}

fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}

pub fn train_predictor(examples: &[PredictorExample], options: &TrainOptions) -> Result<SlotPredictor> {
    if examples.is_empty() {
        return Err(Error::InvalidInput("no training examples for the slot predictor".into()));
    }
    let mut counts: BTreeMap<SlotId, usize> = BTreeMap::new();
    for e in examples {
        *counts.entry(e.label).or_default() += 1;
    }
    let classes: Vec<SlotId> = counts.keys().copied().collect();
    let support: Vec<usize> = counts.values().copied().collect();
    let class_index: BTreeMap<SlotId, usize> = classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();

    let mut feature_index = BTreeMap::new();
    let encoded: Vec<(Vec<usize>, usize)> = examples
        .iter()
        .map(|e| {
            let feats = features(&e.context)
                .into_iter()
                .map(|f| {
                    let next = feature_index.len();
                    *feature_index.entry(f).or_insert(next)
                })
                .collect();
            (feats, class_index[&e.label])
        })
        .collect();
    // Renumber so that indices follow the sorted feature order.
    let remap: Vec<usize> = {
        let mut remap = vec![0; feature_index.len()];
        for (sorted, (_, &old)) in feature_index.iter().enumerate() {
            remap[old] = sorted;
        }
        for (sorted, v) in feature_index.values_mut().enumerate() {
            *v = sorted;
        }
        remap
    };
    let encoded: Vec<(Vec<usize>, usize)> = encoded
        .into_iter()
        .map(|(f, y)| (f.into_iter().map(|i| remap[i]).collect(), y))
        .collect();

    let n_classes = classes.len();
    let mut weights = vec![vec![0.0; n_classes]; feature_index.len()];
    if n_classes > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let mut order: Vec<usize> = (0..encoded.len()).collect();
        let mut probs = vec![0.0; n_classes];
        for _ in 0..options.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let (feats, y) = &encoded[i];
                probs.iter_mut().for_each(|p| *p = 0.0);
                for &f in feats {
                    for (p, w) in probs.iter_mut().zip(&weights[f]) {
                        *p += w;
                    }
                }
                softmax_in_place(&mut probs);
                probs[*y] -= 1.0;
                for &f in feats {
                    for (w, g) in weights[f].iter_mut().zip(&probs) {
                        *w -= options.learning_rate * g;
                    }
                }
            }
        }
    }
    Ok(SlotPredictor {
        classes,
        support,
        feature_index,
        weights,
    })
}

impl SlotPredictor {
    pub fn classes(&self) -> &[SlotId] {
        &self.classes
    }

    pub fn support(&self, slot: SlotId) -> usize {
        self.classes
            .iter()
            .position(|&c| c == slot)
            .map_or(0, |i| self.support[i])
    }

    /// Highest-scoring class. Ties go to the class with more training
    /// support, then to the smaller slot id. Without any known feature other
    /// than the bias, the most frequent class wins.
    pub fn classify(&self, context: &ContextSample) -> SlotId {
        let known: Vec<usize> = features(context)
            .iter()
            .filter(|f| f.as_str() != BIAS)
            .filter_map(|f| self.feature_index.get(f).copied())
            .collect();
        let scores: Vec<f64> = if known.is_empty() {
            self.support.iter().map(|&s| s as f64).collect()
        } else {
            let mut scores = self.feature_index.get(BIAS).map_or_else(
                || vec![0.0; self.classes.len()],
                |&b| self.weights[b].clone(),
            );
            for f in known {
                for (s, w) in scores.iter_mut().zip(&self.weights[f]) {
                    *s += w;
                }
            }
            scores
        };
        let mut best = 0;
        for c in 1..self.classes.len() {
            let better = scores[c] > scores[best]
                || (scores[c] == scores[best] && self.support[c] > self.support[best]);
            if better {
                best = c;
            }
        }
        self.classes[best]
    }

    pub fn predict(&self, context: &ContextSample, assignment: &SlotAssignment) -> SlotPrediction {
        let source_slot = self.classify(context);
        SlotPrediction {
            pos: source_slot.pos,
            source_slot,
            target_slots: assignment.slots_of(source_slot.pos),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (c, s) in self.classes.iter().zip(&self.support) {
            let _ = writeln!(out, "class\t{c}\t{s}");
        }
        for (name, &i) in &self.feature_index {
            let row: Vec<String> = self.weights[i].iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "feature\t{name}\t{}", row.join(" "));
        }
        out
    }

    pub fn parse_text(text: &str, path: &Path) -> Result<Self> {
        let mut classes = Vec::new();
        let mut support = Vec::new();
        let mut feature_index = BTreeMap::new();
        let mut weights = Vec::new();
        for (line_no, line) in textio::body_lines(text) {
            let bad = |m: String| Error::parse(path, line_no, m);
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[..] {
                ["class", slot, count] => {
                    if !weights.is_empty() {
                        return Err(bad("class line after feature lines".into()));
                    }
                    classes.push(slot.parse::<SlotId>().map_err(bad)?);
                    support.push(count.parse().map_err(|_| bad(format!("bad support '{count}'")))?);
                }
                ["feature", name, row] => {
                    let row: Vec<f64> = row
                        .split(' ')
                        .map(|w| w.parse().map_err(|_| bad(format!("bad weight '{w}'"))))
                        .collect::<Result<_>>()?;
                    if row.len() != classes.len() {
                        return Err(bad(format!("expected {} weights, found {}", classes.len(), row.len())));
                    }
                    if feature_index.insert(name.to_string(), weights.len()).is_some() {
                        return Err(bad(format!("duplicate feature '{name}'")));
                    }
                    weights.push(row);
                }
                _ => return Err(bad("unrecognized predictor line".into())),
            }
        }
        if classes.is_empty() {
            return Err(Error::parse(path, 0, "predictor has no classes"));
        }
        Ok(SlotPredictor {
            classes,
            support,
            feature_index,
            weights,
        })
    }
}

impl fmt::Display for PredictorExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.context, self.label)
    }
}

/// Parses `left<TAB>target<TAB>right` test lines.
pub fn parse_test_items(text: &str, path: &Path) -> Result<Vec<ContextSample>> {
    textio::body_lines(text)
        .map(|(line_no, line)| match line.split('\t').collect::<Vec<_>>()[..] {
            [left, target, right] if !target.is_empty() => Ok(ContextSample::new(left, target, right)),
            _ => Err(Error::parse(path, line_no, "expected <left>\\t<target>\\t<right>")),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::{AbstractForm, Pattern};
    use crate::align::SlotFragment;
    use crate::corpus::{Tokenizer, OOV};

    fn example(word: &str, label: SlotId) -> PredictorExample {
        PredictorExample {
            context: ContextSample::new(OOV, word, OOV),
            label,
        }
    }

    /// Tag 0 has slots `-a`/`-ab`, tag 1 has `-ix`/`-ixo`.
    fn synthetic() -> (Vec<PredictorExample>, SlotAssignment) {
        let stems = ["kor", "mel", "tup", "sar", "bin", "dol", "fen", "gat"];
        let affixes = [("a", SlotId::new(0, 0)), ("ab", SlotId::new(0, 1)), ("ix", SlotId::new(1, 0)), ("ixo", SlotId::new(1, 1))];
        let examples = stems
            .iter()
            .flat_map(|s| affixes.iter().map(move |(a, l)| example(&format!("{s}{a}"), *l)))
            .collect();
        let fragments = [0, 1].map(|pos| SlotFragment {
            pos,
            slots: affixes
                .iter()
                .filter(|(_, l)| l.pos == pos)
                .map(|(a, _)| vec![AbstractForm { pattern: Pattern::new("", a), members: Default::default() }])
                .collect(),
        });
        (examples, SlotAssignment::from_fragments(fragments))
    }

    #[test]
    fn feature_extraction() {
        let f = features(&ContextSample::new("the", "ab", OOV));
        for expected in ["bias", "c:^", "c:a", "c:^a", "c:ab$", "c:^ab$", "L=the", "R=<oov>"] {
            assert!(f.contains(&expected.to_string()), "{expected} missing from {f:?}");
        }
    }

    #[test]
    fn separable_training_data_is_fit_exactly() {
        let (examples, assignment) = synthetic();
        let model = train_predictor(&examples, &TrainOptions::default()).unwrap();
        for e in &examples {
            assert_eq!(model.classify(&e.context), e.label, "{}", e.context.target);
        }
        let p = model.predict(&ContextSample::new(OOV, "zuvixo", OOV), &assignment);
        assert_eq!(p.pos, 1);
        assert_eq!(p.source_slot, SlotId::new(1, 1));
        assert_eq!(p.target_slots, vec![SlotId::new(1, 0), SlotId::new(1, 1)]);
        assert_eq!(p.to_line("zuvixo"), "zuvixo\t1\t1:1\t1:0,1:1");
    }

    #[test]
    fn training_is_deterministic() {
        let (examples, _) = synthetic();
        let opts = TrainOptions { seed: 9, ..Default::default() };
        assert_eq!(train_predictor(&examples, &opts).unwrap(), train_predictor(&examples, &opts).unwrap());
    }

    #[test]
    fn single_class_is_constant() {
        let examples = vec![example("walk", SlotId::new(2, 3))];
        let model = train_predictor(&examples, &TrainOptions::default()).unwrap();
        assert_eq!(model.classify(&ContextSample::new("x", "anything", "y")), SlotId::new(2, 3));
        assert!(train_predictor(&[], &TrainOptions::default()).is_err());
    }

    #[test]
    fn unknown_features_fall_back_to_prior() {
        let examples = vec![
            example("aa", SlotId::new(0, 1)),
            example("ab", SlotId::new(0, 1)),
            example("bb", SlotId::new(0, 0)),
        ];
        let model = train_predictor(&examples, &TrainOptions::default()).unwrap();
        assert_eq!(model.classify(&ContextSample::new("q", "zzzzz", "q")), SlotId::new(0, 1));
    }

    #[test]
    fn text_round_trip() {
        let (examples, _) = synthetic();
        let model = train_predictor(&examples, &TrainOptions::default()).unwrap();
        let back = SlotPredictor::parse_text(&model.to_text(), Path::new("p")).unwrap();
        assert_eq!(back, model);
        assert!(SlotPredictor::parse_text("class\t0:0\t1\nfeature\tbias\t1 2\n", Path::new("p")).is_err());
    }

    #[test]
    fn training_data_respects_limits() {
        let text = "a x b\nc x d\ne x f\ng x h\ni x j\nk x l\nm x n\no x p\nq y r\n";
        let corpus = Corpus::from_text(text, Tokenizer::default());
        let fragment = SlotFragment {
            pos: 0,
            slots: vec![vec![AbstractForm {
                pattern: Pattern::new("", ""),
                members: [(0, "x".to_string())].into(),
            }]],
        };
        let assignment = SlotAssignment::from_fragments([fragment]);
        let data = build_training_data(&corpus, &assignment, 5, 0);
        assert_eq!(data.len(), 5);
        assert!(data.iter().all(|e| e.context.target == "x" && e.label == SlotId::new(0, 0)));

        let data = build_training_data(&corpus, &assignment, 5, 2);
        assert_eq!(data.len(), 1);
        assert_eq!(data[0].context, ContextSample::new(OOV, "x", OOV));
    }

    #[test]
    fn test_items() {
        let items = parse_test_items("the\twalks\t<oov>\n", Path::new("t")).unwrap();
        assert_eq!(items, vec![ContextSample::new("the", "walks", OOV)]);
        assert!(parse_test_items("a\tb\n", Path::new("t")).is_err());
    }
}
