//! Latent tags for abstract paradigms.
//!
//! Each paradigm is a bag of patterns generated by one latent tag `k`:
//! `P(k, c) = P(k) · Π_{f ∈ c} P(f | k)`. The mixture is fitted with EM in
//! log space. Iterations are plain maximum likelihood, so the observed-data
//! log-likelihood never decreases; the returned model is add-λ smoothed over
//! the pattern vocabulary plus one cell for patterns never seen in training.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abstraction::{AbstractParadigm, Pattern};
use crate::error::{Error, Result};
use crate::textio;

#[derive(Debug, Clone, PartialEq)]
pub struct PosModel {
    priors: Vec<f64>,
    vocab: Vec<Pattern>,
    index: HashMap<Pattern, usize>,
    /// `n_tags × (vocab.len() + 1)`; the last column is the unseen cell.
    emissions: Vec<Vec<f64>>,
    smoothing: f64,
}

impl PosModel {
    /// Assembles a model, checking that every distribution is normalized
    /// and strictly positive.
    pub fn new(
        priors: Vec<f64>,
        vocab: Vec<Pattern>,
        emissions: Vec<Vec<f64>>,
        smoothing: f64,
    ) -> Result<Self> {
        let check = |what: &str, dist: &[f64]| -> Result<()> {
            let sum: f64 = dist.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || dist.iter().any(|&p| p.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
                return Err(Error::Invariant(format!("{what} is not a positive distribution")));
            }
            Ok(())
        };
        check("prior", &priors)?;
        if emissions.len() != priors.len() {
            return Err(Error::Invariant("one emission row per tag expected".into()));
        }
        for row in &emissions {
            if row.len() != vocab.len() + 1 {
                return Err(Error::Invariant("emission row width mismatch".into()));
            }
            check("emission row", row)?;
        }
        Ok(Self::from_parts(priors, vocab, emissions, smoothing))
    }

    fn from_parts(priors: Vec<f64>, vocab: Vec<Pattern>, emissions: Vec<Vec<f64>>, smoothing: f64) -> Self {
        let index = vocab.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        PosModel {
            priors,
            vocab,
            index,
            emissions,
            smoothing,
        }
    }

    pub fn n_tags(&self) -> usize {
        self.priors.len()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn vocab(&self) -> &[Pattern] {
        &self.vocab
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// `P(pattern | k)`, falling back to the unseen cell.
    pub fn emission(&self, k: usize, pattern: &Pattern) -> f64 {
        let row = &self.emissions[k];
        match self.index.get(pattern) {
            Some(&i) => row[i],
            None => row[self.vocab.len()],
        }
    }

    /// `log P(k) + Σ log P(f | k)` over the paradigm's patterns.
    pub fn log_joint(&self, paradigm: &AbstractParadigm, k: usize) -> f64 {
        paradigm
            .patterns()
            .into_iter()
            .fold(self.priors[k].ln(), |acc, p| acc + self.emission(k, p).ln())
    }

    /// Plain-text dump: prior, emission and unseen-cell lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "smoothing\t{}", self.smoothing);
        for (k, p) in self.priors.iter().enumerate() {
            let _ = writeln!(out, "prior\t{k}\t{p}");
        }
        for (k, row) in self.emissions.iter().enumerate() {
            for (pattern, p) in self.vocab.iter().zip(row) {
                let _ = writeln!(out, "emit\t{k}\t{pattern}\t{p}");
            }
            let _ = writeln!(out, "unseen\t{k}\t{}", row[self.vocab.len()]);
        }
        out
    }

    pub fn parse_text(text: &str, path: &Path) -> Result<Self> {
        let mut smoothing = None;
        let mut priors: BTreeMap<usize, f64> = BTreeMap::new();
        let mut emits: BTreeMap<usize, BTreeMap<Pattern, f64>> = BTreeMap::new();
        let mut unseen: BTreeMap<usize, f64> = BTreeMap::new();
        for (line_no, line) in textio::body_lines(text) {
            let bad = |what: &str| Error::parse(path, line_no, what.to_string());
            let fields: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
            let tag = |s: &str| s.parse::<usize>().map_err(|_| bad("bad tag"));
            match fields[..] {
                ["smoothing", v] => smoothing = Some(num(v)?),
                ["prior", k, v] => {
                    priors.insert(tag(k)?, num(v)?);
                }
                ["emit", k, pattern, v] => {
                    let pattern = Pattern::parse(pattern).ok_or_else(|| bad("bad pattern"))?;
                    emits.entry(tag(k)?).or_default().insert(pattern, num(v)?);
                }
                ["unseen", k, v] => {
                    unseen.insert(tag(k)?, num(v)?);
                }
                _ => return Err(bad("unrecognized model line")),
            }
        }
        let n_tags = priors.len();
        if priors.keys().copied().ne(0..n_tags) || unseen.keys().copied().ne(0..n_tags) {
            return Err(Error::parse(path, 0, "tags must be numbered 0..n"));
        }
        let vocab: Vec<Pattern> = emits.values().next().map(|m| m.keys().cloned().collect()).unwrap_or_default();
        let mut emissions = Vec::with_capacity(n_tags);
        for k in 0..n_tags {
            let row = emits.remove(&k).unwrap_or_default();
            if row.keys().ne(vocab.iter()) {
                return Err(Error::parse(path, 0, format!("tag {k} has a different vocabulary")));
            }
            let mut row: Vec<f64> = row.into_values().collect();
            row.push(unseen[&k]);
            emissions.push(row);
        }
        let smoothing = smoothing.ok_or_else(|| Error::parse(path, 0, "missing smoothing line"))?;
        PosModel::new(priors.into_values().collect(), vocab, emissions, smoothing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub n_tags: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub smoothing: f64,
    pub restarts: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            n_tags: 3,
            max_iters: 100,
            tol: 1e-6,
            seed: 0,
            smoothing: 0.1,
            restarts: 1,
        }
    }
}

/// A fitted model with the per-iteration training trace.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: PosModel,
    /// Observed-data log-likelihood after initialization and after every
    /// iteration.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
}

struct Data {
    vocab: Vec<Pattern>,
    docs: Vec<Vec<usize>>,
}

impl Data {
    fn new(paradigms: &[AbstractParadigm]) -> Self {
        let vocab: Vec<Pattern> = paradigms
            .iter()
            .flat_map(|p| p.form_map.values().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: HashMap<&Pattern, usize> = vocab.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let docs = paradigms
            .iter()
            .map(|p| p.patterns().into_iter().map(|f| index[f]).collect())
            .collect();
        Data { vocab, docs }
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Posterior responsibilities per paradigm and the data log-likelihood.
fn e_step(priors: &[f64], emissions: &[Vec<f64>], docs: &[Vec<usize>]) -> (Vec<Vec<f64>>, f64) {
    let log_priors: Vec<f64> = priors.iter().map(|p| p.ln()).collect();
    let log_emissions: Vec<Vec<f64>> = emissions
        .iter()
        .map(|row| row.iter().map(|p| p.ln()).collect())
        .collect();
    let mut total = 0.0;
    let resp = docs
        .iter()
        .map(|doc| {
            let joint: Vec<f64> = log_priors
                .iter()
                .zip(&log_emissions)
                .map(|(lp, row)| doc.iter().fold(*lp, |acc, &f| acc + row[f]))
                .collect();
            let norm = log_sum_exp(&joint);
            total += norm;
            joint.iter().map(|j| (j - norm).exp()).collect()
        })
        .collect();
    (resp, total)
}

/// Re-estimates parameters from responsibilities. `smoothing` is added to
/// every prior and emission count; iterations use zero (plain maximum
/// likelihood) and the final model uses the configured λ.
fn m_step(
    resp: &[Vec<f64>],
    docs: &[Vec<usize>],
    n_tags: usize,
    vocab_len: usize,
    smoothing: f64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let width = vocab_len + 1;
    let mut mass = vec![0.0; n_tags];
    let mut counts = vec![vec![0.0; width]; n_tags];
    for (r, doc) in resp.iter().zip(docs) {
        for k in 0..n_tags {
            mass[k] += r[k];
            for &f in doc {
                counts[k][f] += r[k];
            }
        }
    }
    let total_mass = resp.len() as f64 + smoothing * n_tags as f64;
    let priors = mass.iter().map(|m| (m + smoothing) / total_mass).collect();
    let emissions = counts
        .into_iter()
        .map(|row| {
            let total: f64 = row.iter().sum::<f64>() + smoothing * width as f64;
            if total > 0.0 {
                row.into_iter().map(|c| (c + smoothing) / total).collect()
            } else {
                vec![1.0 / width as f64; width]
            }
        })
        .collect();
    (priors, emissions)
}

fn fit_once(data: &Data, options: &EmOptions, seed: u64) -> EmFit {
    let n_tags = options.n_tags;
    let vocab_len = data.vocab.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init: Vec<Vec<f64>> = data
        .docs
        .iter()
        .map(|_| {
            let raw: Vec<f64> = (0..n_tags).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / sum).collect()
        })
        .collect();
    let (priors, emissions) = m_step(&init, &data.docs, n_tags, vocab_len, 0.0);
    let (mut resp, mut ll) = e_step(&priors, &emissions, &data.docs);
    let mut trace = vec![ll];
    let mut iterations = 0;
    while iterations < options.max_iters {
        let (priors, emissions) = m_step(&resp, &data.docs, n_tags, vocab_len, 0.0);
        let (next_resp, next_ll) = e_step(&priors, &emissions, &data.docs);
        iterations += 1;
        trace.push(next_ll);
        let improvement = (next_ll - ll) / ll.abs().max(f64::MIN_POSITIVE);
        resp = next_resp;
        ll = next_ll;
        if improvement < options.tol {
            break;
        }
    }
    let (priors, emissions) = m_step(&resp, &data.docs, n_tags, vocab_len, options.smoothing);
    EmFit {
        model: PosModel::from_parts(priors, data.vocab.clone(), emissions, options.smoothing),
        log_likelihood: trace,
        iterations,
    }
}

/// Fits the tag mixture with EM, keeping the best of `restarts` seeded runs.
pub fn em_fit(paradigms: &[AbstractParadigm], options: &EmOptions) -> Result<EmFit> {
    if paradigms.is_empty() {
        return Err(Error::InvalidInput("EM needs at least one abstract paradigm".into()));
    }
    if options.n_tags == 0 {
        return Err(Error::Config("n_tags must be at least 1".into()));
    }
    if options.smoothing.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Config("smoothing must be positive".into()));
    }
    if options.n_tags > paradigms.len() {
        log::warn!(
            "{} tags for {} paradigms; some tags will collapse",
            options.n_tags,
            paradigms.len()
        );
    }
    let data = Data::new(paradigms);
    let mut best: Option<EmFit> = None;
    for r in 0..options.restarts.max(1) {
        let fit = fit_once(&data, options, options.seed.wrapping_add(r as u64));
        let better = best
            .as_ref()
            .is_none_or(|b| fit.log_likelihood.last() > b.log_likelihood.last());
        if better {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Tag of every paradigm plus the inverse sets `C^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosAssignment {
    tag_of: BTreeMap<usize, usize>,
    members: Vec<BTreeSet<usize>>,
}

impl PosAssignment {
    pub fn from_tags(n_tags: usize, tags: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut members = vec![BTreeSet::new(); n_tags];
        let mut tag_of = BTreeMap::new();
        for (cluster_id, k) in tags {
            tag_of.insert(cluster_id, k);
            members[k].insert(cluster_id);
        }
        PosAssignment { tag_of, members }
    }

    pub fn tag(&self, cluster_id: usize) -> Option<usize> {
        self.tag_of.get(&cluster_id).copied()
    }

    /// `C^k`: clusters assigned tag `k`.
    pub fn members(&self, k: usize) -> &BTreeSet<usize> {
        &self.members[k]
    }

    pub fn n_tags(&self) -> usize {
        self.members.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.tag_of.iter().map(|(&c, &k)| (c, k))
    }

    /// `cluster_id<TAB>tag` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (c, k) in self.iter() {
            let _ = writeln!(out, "{c}\t{k}");
        }
        out
    }
}

/// Assigns each paradigm its most probable tag; ties go to the smallest tag.
pub fn assign_pos(model: &PosModel, paradigms: &[AbstractParadigm]) -> PosAssignment {
    let tags = paradigms.iter().map(|p| {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for k in 0..model.n_tags() {
            let score = model.log_joint(p, k);
            if score > best_score {
                best = k;
                best_score = score;
            }
        }
        (p.cluster_id, best)
    });
    PosAssignment::from_tags(model.n_tags(), tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn paradigm(id: usize, patterns: &[&str]) -> AbstractParadigm {
        AbstractParadigm {
            cluster_id: id,
            stem: "st".into(),
            form_map: patterns
                .iter()
                .map(|p| {
                    let p = Pattern::parse(p).unwrap();
                    (p.instantiate("st"), p)
                })
                .collect(),
        }
    }

    fn separable() -> Vec<AbstractParadigm> {
        let mut out = Vec::new();
        for i in 0..10 {
            out.push(paradigm(i, &["X0", "X0+s", "X0+ed"]));
        }
        for i in 10..20 {
            out.push(paradigm(i, &["X0+a", "X0+um", "X0+is"]));
        }
        out
    }

    fn random_dataset(seed: u64) -> Vec<AbstractParadigm> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..30)
            .map(|i| {
                let n = rng.gen_range(1..=6);
                let patterns: Vec<String> = (0..n).map(|_| format!("X0+p{}", rng.gen_range(0..20))).collect();
                let refs: Vec<&str> = patterns.iter().map(String::as_str).collect();
                paradigm(i, &refs)
            })
            .collect()
    }

    #[test]
    fn single_tag_is_closed_form() {
        let data = vec![paradigm(0, &["X0", "X0+s"]), paradigm(1, &["X0"])];
        let opts = EmOptions {
            n_tags: 1,
            ..Default::default()
        };
        let fit = em_fit(&data, &opts).unwrap();
        assert!((fit.model.priors()[0] - 1.0).abs() < 1e-15);
        // counts X0:2, X0+s:1, unseen:0 over 3 tokens, λ = 0.1, width 3
        let denom = 3.0 + 0.3;
        let x0 = Pattern::parse("X0").unwrap();
        let s = Pattern::parse("X0+s").unwrap();
        assert!((fit.model.emission(0, &x0) - 2.1 / denom).abs() < 1e-12);
        assert!((fit.model.emission(0, &s) - 1.1 / denom).abs() < 1e-12);
        let other = Pattern::parse("X0+zz").unwrap();
        assert!((fit.model.emission(0, &other) - 0.1 / denom).abs() < 1e-12);
    }

    #[test]
    fn separable_groups_get_different_tags() {
        let data = separable();
        let opts = EmOptions {
            n_tags: 2,
            seed: 7,
            ..Default::default()
        };
        let fit = em_fit(&data, &opts).unwrap();
        let a = assign_pos(&fit.model, &data);
        let first = a.tag(0).unwrap();
        let second = a.tag(10).unwrap();
        assert_ne!(first, second);
        assert!((0..10).all(|i| a.tag(i) == Some(first)));
        assert!((10..20).all(|i| a.tag(i) == Some(second)));
    }

    #[test]
    fn infinite_tolerance_runs_one_iteration() {
        let opts = EmOptions {
            tol: f64::INFINITY,
            ..Default::default()
        };
        let fit = em_fit(&separable(), &opts).unwrap();
        assert_eq!(fit.iterations, 1);
        assert_eq!(fit.log_likelihood.len(), 2);
    }

    #[test]
    fn errors_and_warnings() {
        assert!(em_fit(&[], &EmOptions::default()).is_err());
        let opts = EmOptions {
            n_tags: 0,
            ..Default::default()
        };
        assert!(em_fit(&separable(), &opts).is_err());
        let opts = EmOptions {
            n_tags: 5,
            ..Default::default()
        };
        let fit = em_fit(&[paradigm(0, &["X0"])], &opts).unwrap();
        assert_eq!(fit.model.n_tags(), 5);
    }

    fn hand_model() -> PosModel {
        let vocab = vec![Pattern::parse("X0+f").unwrap(), Pattern::parse("X0+g").unwrap()];
        PosModel::new(
            vec![0.5, 0.5],
            vocab,
            vec![vec![0.2, 0.7, 0.1], vec![0.8, 0.1, 0.1]],
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn log_joint_arithmetic() {
        let m = hand_model();
        let empty = AbstractParadigm {
            cluster_id: 0,
            stem: "x".into(),
            form_map: BTreeMap::new(),
        };
        assert_eq!(m.log_joint(&empty, 1), 0.5f64.ln());
        let p = paradigm(0, &["X0+f"]);
        let diff = m.log_joint(&p, 1) - m.log_joint(&p, 0);
        assert!((diff - 4.0f64.ln()).abs() < 1e-12);
        let unseen = paradigm(0, &["X0+q"]);
        assert!((m.log_joint(&unseen, 0) - (0.5f64.ln() + 0.1f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_tag_zero() {
        let vocab = vec![Pattern::parse("X0").unwrap()];
        let row = vec![0.5, 0.5];
        let m = PosModel::new(vec![1.0 / 3.0; 3], vocab, vec![row.clone(), row.clone(), row], 0.1).unwrap();
        let a = assign_pos(&m, &separable());
        assert!(a.iter().all(|(_, k)| k == 0));

        let single = [paradigm(4, &["X0"])];
        let a = assign_pos(&m, &single);
        let sizes: Vec<usize> = (0..3).map(|k| a.members(k).len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 1);
    }

    #[test]
    fn argmax_ignores_per_length_rescaling() {
        let m = hand_model();
        let data = vec![paradigm(0, &["X0+f"]), paradigm(1, &["X0+g", "X0+f"]), paradigm(2, &["X0+g"])];
        let before = assign_pos(&m, &data);
        let mut scaled = m.clone();
        for row in &mut scaled.emissions {
            for p in row.iter_mut() {
                *p *= 3.5;
            }
        }
        assert_eq!(assign_pos(&scaled, &data), before);
    }

    #[test]
    fn tag_permutation_permutes_sets() {
        let fit = em_fit(&separable(), &EmOptions::default()).unwrap();
        let m = fit.model;
        let perm = [2, 0, 1];
        let mut permuted = m.clone();
        for (k, &to) in perm.iter().enumerate() {
            permuted.priors[to] = m.priors[k];
            permuted.emissions[to] = m.emissions[k].clone();
        }
        let a = assign_pos(&m, &separable());
        let b = assign_pos(&permuted, &separable());
        for (k, &to) in perm.iter().enumerate() {
            assert_eq!(a.members(k), b.members(to));
        }
    }

    #[test]
    fn model_dump_reloads_exactly() {
        let fit = em_fit(&separable(), &EmOptions::default()).unwrap();
        let text = fit.model.to_text();
        let back = PosModel::parse_text(&text, Path::new("m")).unwrap();
        assert_eq!(back, fit.model);
    }

    #[test]
    fn fitted_distributions_are_normalized() {
        let fit = em_fit(&random_dataset(3), &EmOptions::default()).unwrap();
        let m = &fit.model;
        assert!((m.priors.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for row in &m.emissions {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&p| p > 0.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn log_likelihood_never_decreases(seed in 0u64..1_000) {
            let data = random_dataset(seed);
            let opts = EmOptions { seed, ..Default::default() };
            let fit = em_fit(&data, &opts).unwrap();
            for w in fit.log_likelihood.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
            }
        }

        #[test]
        fn responsibilities_sum_to_one(seed in 0u64..1_000) {
            let data = Data::new(&random_dataset(seed));
            let fit = fit_once(&data, &EmOptions::default(), seed);
            let (resp, _) = e_step(&fit.model.priors, &fit.model.emissions, &data.docs);
            for r in resp {
                prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
