//! Evaluation against gold paradigms.
//!
//! Best-match accuracy compares generated paradigms with gold paradigms
//! under the best injective mapping from pseudo-slot labels to gold
//! morphosyntactic descriptions, chosen separately per part of speech.
//! Best-match F1 scores a clustering under the best one-to-one matching of
//! gold to predicted clusters.

mod matching;
pub mod toy;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

pub use matching::max_weight_matching;

use crate::cluster::Clustering;
use crate::corpus::ContextSample;
use crate::error::{Error, Result};
use crate::inflect::GeneratedParadigm;
use crate::textio;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldParadigm {
    pub lemma: String,
    pub pos: String,
    /// MSD → surface form.
    pub slots: BTreeMap<String, String>,
}

impl GoldParadigm {
    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.slots.values().map(String::as_str)
    }
}

/// Groups UniMorph triples by lemma and the first MSD feature. Paradigms
/// with a multiword form are dropped; for a repeated MSD the first form
/// is kept.
pub fn parse_unimorph(text: &str, path: &Path, lowercase: bool) -> Result<Vec<GoldParadigm>> {
    let mut grouped: BTreeMap<(String, String), (BTreeMap<String, String>, bool)> = BTreeMap::new();
    for (line_no, line) in textio::body_lines(text) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [lemma, form, msd] = fields[..] else {
            return Err(Error::parse(path, line_no, "expected <lemma>\\t<form>\\t<msd>"));
        };
        let (lemma, form, msd) = (lemma.trim(), form.trim(), msd.trim());
        if lemma.is_empty() || form.is_empty() || msd.is_empty() {
            return Err(Error::parse(path, line_no, "empty field"));
        }
        let norm = |s: &str| if lowercase { s.to_lowercase() } else { s.to_string() };
        let pos = msd.split(';').next().unwrap_or(msd).to_string();
        let entry = grouped.entry((norm(lemma), pos)).or_default();
        entry.1 |= form.contains(char::is_whitespace);
        entry.0.entry(msd.to_string()).or_insert_with(|| norm(form));
    }
    Ok(grouped
        .into_iter()
        .filter(|(_, (_, multiword))| !multiword)
        .map(|((lemma, pos), (slots, _))| GoldParadigm { lemma, pos, slots })
        .collect())
}

pub fn load_unimorph(path: &Path, lowercase: bool) -> Result<Vec<GoldParadigm>> {
    parse_unimorph(&textio::read_text(path)?, path, lowercase)
}

pub fn gold_to_tsv(gold: &[GoldParadigm]) -> String {
    let mut out = String::new();
    for p in gold {
        for (msd, form) in &p.slots {
            let _ = writeln!(out, "{}\t{form}\t{msd}", p.lemma);
        }
    }
    out
}

/// Index of the first gold paradigm containing each test item's target.
pub fn pair_with_gold(items: &[ContextSample], gold: &[GoldParadigm]) -> Result<Vec<usize>> {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, p) in gold.iter().enumerate() {
        for form in p.forms() {
            index.entry(form).or_insert(i);
        }
    }
    items
        .iter()
        .map(|item| {
            index
                .get(item.target.as_str())
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("test word '{}' is not in any gold paradigm", item.target)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PosScore {
    pub matched: usize,
    pub cells: usize,
}

impl PosScore {
    pub fn accuracy(&self) -> f64 {
        if self.cells == 0 {
            0.0
        } else {
            self.matched as f64 / self.cells as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    /// Matched cells over all gold cells.
    pub bmacc: f64,
    /// Mean of the per-POS accuracies.
    pub macro_bmacc: f64,
    pub per_pos: BTreeMap<String, PosScore>,
    /// Per POS, `(pseudo label, gold MSD)` pairs of the chosen mapping.
    pub mapping: BTreeMap<String, Vec<(String, String)>>,
    pub n_gold_forms: usize,
    pub n_matched: usize,
    pub bmf1: Option<f64>,
}

impl EvalReport {
    /// `key=value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "bmacc={}", self.bmacc);
        let _ = writeln!(out, "bmacc_macro={}", self.macro_bmacc);
        if let Some(f1) = self.bmf1 {
            let _ = writeln!(out, "bmf1={f1}");
            let _ = writeln!(out, "bmf1_protocol=mean over gold clusters of matched F1, one-to-one maximum-weight matching");
        }
        let _ = writeln!(out, "n_gold_forms={}", self.n_gold_forms);
        let _ = writeln!(out, "n_matched={}", self.n_matched);
        for (pos, score) in &self.per_pos {
            let _ = writeln!(out, "pos.{pos}.bmacc={}", score.accuracy());
            let _ = writeln!(out, "pos.{pos}.matched={}", score.matched);
            let _ = writeln!(out, "pos.{pos}.cells={}", score.cells);
        }
        for (pos, pairs) in &self.mapping {
            for (pseudo, msd) in pairs {
                let _ = writeln!(out, "mapping.{pos}.{pseudo}={msd}");
            }
        }
        out
    }
}

/// Per-POS match matrix: rows are pseudo labels, columns gold MSDs, and
/// each cell counts the items where some form under the pseudo label
/// equals the gold form at the MSD.
struct PosMatrix {
    pseudo: Vec<String>,
    msds: Vec<String>,
    counts: Vec<Vec<usize>>,
    cells: usize,
}

fn match_matrices(predictions: &[GeneratedParadigm], gold: &[GoldParadigm]) -> Result<BTreeMap<String, PosMatrix>> {
    if gold.is_empty() {
        return Err(Error::InvalidInput("no gold paradigms to evaluate against".into()));
    }
    if predictions.len() != gold.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} gold paradigms",
            predictions.len(),
            gold.len()
        )));
    }
    let mut by_pos: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in gold.iter().enumerate() {
        by_pos.entry(&g.pos).or_default().push(i);
    }
    let mut out = BTreeMap::new();
    for (pos, items) in by_pos {
        let pseudo: Vec<String> = items
            .iter()
            .flat_map(|&i| predictions[i].cells().map(|(l, _)| l.to_string()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let msds: Vec<String> = items
            .iter()
            .flat_map(|&i| gold[i].slots.keys().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut counts = vec![vec![0; msds.len()]; pseudo.len()];
        let mut cells = 0;
        for &i in &items {
            cells += gold[i].slots.len();
            let mut hits = BTreeSet::new();
            for (label, form) in predictions[i].cells() {
                let p = pseudo.binary_search_by(|x| x.as_str().cmp(label)).expect("label collected");
                for (msd, gold_form) in &gold[i].slots {
                    if gold_form == form {
                        hits.insert((p, msds.binary_search(msd).expect("msd collected")));
                    }
                }
            }
            for (p, m) in hits {
                counts[p][m] += 1;
            }
        }
        out.insert(
            pos.to_string(),
            PosMatrix {
                pseudo,
                msds,
                counts,
                cells,
            },
        );
    }
    Ok(out)
}

fn finish_report(scores: BTreeMap<String, PosScore>, mapping: BTreeMap<String, Vec<(String, String)>>) -> EvalReport {
    let n_gold_forms = scores.values().map(|s| s.cells).sum();
    let n_matched = scores.values().map(|s| s.matched).sum();
    EvalReport {
        bmacc: if n_gold_forms == 0 { 0.0 } else { n_matched as f64 / n_gold_forms as f64 },
        macro_bmacc: scores.values().map(PosScore::accuracy).sum::<f64>() / scores.len().max(1) as f64,
        per_pos: scores,
        mapping,
        n_gold_forms,
        n_matched,
        bmf1: None,
    }
}

/// Best-match accuracy; `predictions[i]` is scored against `gold[i]`.
pub fn bmacc(predictions: &[GeneratedParadigm], gold: &[GoldParadigm]) -> Result<EvalReport> {
    let mut scores = BTreeMap::new();
    let mut mapping = BTreeMap::new();
    for (pos, m) in match_matrices(predictions, gold)? {
        let weights: Vec<Vec<f64>> = m
            .counts
            .iter()
            .map(|row| row.iter().map(|&c| c as f64).collect())
            .collect();
        let assignment = max_weight_matching(&weights);
        let mut matched = 0;
        let mut pairs = Vec::new();
        for (p, col) in assignment.into_iter().enumerate() {
            if let Some(c) = col.filter(|&c| m.counts[p][c] > 0) {
                matched += m.counts[p][c];
                pairs.push((m.pseudo[p].clone(), m.msds[c].clone()));
            }
        }
        scores.insert(pos.clone(), PosScore { matched, cells: m.cells });
        mapping.insert(pos, pairs);
    }
    Ok(finish_report(scores, mapping))
}

fn best_injective(counts: &[Vec<usize>], row: usize, used: &mut [bool]) -> usize {
    if row == counts.len() {
        return 0;
    }
    let mut best = best_injective(counts, row + 1, used);
    for c in 0..used.len() {
        if !used[c] {
            used[c] = true;
            best = best.max(counts[row][c] + best_injective(counts, row + 1, used));
            used[c] = false;
        }
    }
    best
}

/// Best-match accuracy by exhaustive search over all injective mappings.
pub fn brute_force_bmacc(predictions: &[GeneratedParadigm], gold: &[GoldParadigm], max_slots: usize) -> Result<f64> {
    if max_slots > 8 {
        return Err(Error::InvalidInput("exhaustive search supports at most 8 slots".into()));
    }
    let mut matched = 0;
    let mut cells = 0;
    for (pos, m) in match_matrices(predictions, gold)? {
        if m.pseudo.len() > max_slots || m.msds.len() > max_slots {
            return Err(Error::InvalidInput(format!(
                "POS {pos} has {} pseudo and {} gold slots, above the limit of {max_slots}",
                m.pseudo.len(),
                m.msds.len()
            )));
        }
        matched += best_injective(&m.counts, 0, &mut vec![false; m.msds.len()]);
        cells += m.cells;
    }
    Ok(matched as f64 / cells as f64)
}

fn f1(overlap: usize, predicted: usize, gold: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / predicted as f64;
    let r = overlap as f64 / gold as f64;
    2.0 * p * r / (p + r)
}

/// Best-match F1: the mean over gold clusters of the F1 of their matched
/// predicted cluster, under the one-to-one matching maximizing total F1.
pub fn bmf1(predicted: &Clustering, gold: &[BTreeSet<String>]) -> f64 {
    if gold.is_empty() {
        return 0.0;
    }
    let mut clusters_of: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (p, c) in predicted.iter().enumerate() {
        for f in &c.forms {
            clusters_of.entry(f).or_default().push(p);
        }
    }
    // Overlap counts of every gold cluster with the predicted clusters it touches.
    let overlaps: Vec<BTreeMap<usize, usize>> = gold
        .iter()
        .map(|g| {
            let mut o = BTreeMap::new();
            for f in g {
                for &p in clusters_of.get(f.as_str()).into_iter().flatten() {
                    *o.entry(p).or_default() += 1;
                }
            }
            o
        })
        .collect();
    // Solve each connected component of the overlap graph separately.
    let mut gold_seen = vec![false; gold.len()];
    let mut pred_to_gold: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (g, o) in overlaps.iter().enumerate() {
        for &p in o.keys() {
            pred_to_gold.entry(p).or_default().push(g);
        }
    }
    let clusters: Vec<_> = predicted.iter().collect();
    let mut total = 0.0;
    for start in 0..gold.len() {
        if gold_seen[start] || overlaps[start].is_empty() {
            continue;
        }
        let mut gold_nodes = vec![start];
        let mut pred_nodes = BTreeSet::new();
        gold_seen[start] = true;
        let mut frontier = vec![start];
        while let Some(g) = frontier.pop() {
            for &p in overlaps[g].keys() {
                if pred_nodes.insert(p) {
                    for &g2 in &pred_to_gold[&p] {
                        if !gold_seen[g2] {
                            gold_seen[g2] = true;
                            gold_nodes.push(g2);
                            frontier.push(g2);
                        }
                    }
                }
            }
        }
        let preds: Vec<usize> = pred_nodes.into_iter().collect();
        let weights: Vec<Vec<f64>> = gold_nodes
            .iter()
            .map(|&g| {
                preds
                    .iter()
                    .map(|&p| f1(overlaps[g].get(&p).copied().unwrap_or(0), clusters[p].len(), gold[g].len()))
                    .collect()
            })
            .collect();
        for (row, col) in max_weight_matching(&weights).into_iter().enumerate() {
            if let Some(c) = col {
                total += weights[row][c];
            }
        }
    }
    total / gold.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gold(pos: &str, cells: &[(&str, &str)]) -> GoldParadigm {
        GoldParadigm {
            lemma: cells[0].1.to_string(),
            pos: pos.into(),
            slots: cells.iter().map(|(m, f)| (m.to_string(), f.to_string())).collect(),
        }
    }

    fn pred(input: (&str, &str), entries: &[(&str, &str)]) -> GeneratedParadigm {
        GeneratedParadigm {
            input_label: input.0.into(),
            input_form: input.1.into(),
            entries: entries.iter().map(|(l, f)| (l.to_string(), f.to_string())).collect(),
        }
    }

    #[test]
    fn unimorph_loading() {
        let text = "mutate\tmutates\tV;3;SG;PRS\nmutate\tmutated\tV;PST\n\nrun up\trun up\tV;NFIN\nrun up\truns up\tV;3;SG;PRS\n";
        let gold = parse_unimorph(text, Path::new("g"), false).unwrap();
        assert_eq!(gold.len(), 1);
        assert_eq!(gold[0].slots["V;3;SG;PRS"], "mutates");
        assert_eq!(gold[0].pos, "V");
        assert!(parse_unimorph("", Path::new("g"), false).unwrap().is_empty());
        let err = parse_unimorph("a\tb\n", Path::new("g"), false).unwrap_err();
        assert!(err.to_string().contains(":1"), "{err}");
        let lower = parse_unimorph("Walk\tWalks\tV;3\n", Path::new("g"), true).unwrap();
        assert_eq!(lower[0].slots["V;3"], "walks");
        assert_eq!(parse_unimorph(&gold_to_tsv(&gold), Path::new("g"), false).unwrap(), gold);
    }

    #[test]
    fn bmacc_examples() {
        let g = vec![
            gold("V", &[("a", "x1"), ("b", "y1")]),
            gold("V", &[("a", "x2"), ("b", "y2")]),
        ];
        let p = vec![pred(("p", "x1"), &[("q", "y1")]), pred(("p", "x2"), &[("q", "y2")])];
        let r = bmacc(&p, &g).unwrap();
        assert_eq!(r.bmacc, 1.0);
        assert_eq!(r.mapping["V"], vec![("p".to_string(), "a".to_string()), ("q".to_string(), "b".to_string())]);

        let wrong = vec![pred(("p", "zz"), &[]), pred(("p", "zz"), &[])];
        assert_eq!(bmacc(&wrong, &g).unwrap().bmacc, 0.0);
        assert!(bmacc(&[], &[]).is_err());
    }

    #[test]
    fn five_sixths() {
        // M = [[3,0],[0,2]] over 6 gold cells.
        let g: Vec<GoldParadigm> = (0..3).map(|i| gold("N", &[("a", &format!("a{i}")), ("b", &format!("b{i}"))])).collect();
        let p = vec![
            pred(("p", "a0"), &[("q", "b0")]),
            pred(("p", "a1"), &[("q", "b1")]),
            pred(("p", "a2"), &[("q", "zz")]),
        ];
        let r = bmacc(&p, &g).unwrap();
        assert!((r.bmacc - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.bmacc, brute_force_bmacc(&p, &g, 6).unwrap());
        assert_eq!((r.n_matched, r.n_gold_forms), (5, 6));
    }

    #[test]
    fn single_slot_oracle() {
        let g = vec![gold("A", &[("a", "x")])];
        assert_eq!(brute_force_bmacc(&[pred(("p", "x"), &[])], &g, 1).unwrap(), 1.0);
        assert_eq!(brute_force_bmacc(&[pred(("p", "y"), &[])], &g, 1).unwrap(), 0.0);
        assert!(brute_force_bmacc(&[pred(("p", "y"), &[])], &g, 9).is_err());
    }

    #[test]
    fn bmf1_examples() {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        let gold = vec![set(&["a", "b", "c"]), set(&["d", "e"])];
        let same = Clustering::from_sets(gold.iter().cloned());
        assert_eq!(bmf1(&same, &gold), 1.0);

        let n = 4;
        let big: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let singletons = Clustering::from_sets(big.iter().map(|w| [w.clone()]));
        let gold_big = vec![big.iter().cloned().collect::<BTreeSet<_>>()];
        assert!((bmf1(&singletons, &gold_big) - 2.0 / (n as f64 + 1.0)).abs() < 1e-12);

        assert_eq!(bmf1(&Clustering::from_sets([["zz"]]), &gold), 0.0);
    }

    #[test]
    fn pairing() {
        let g = vec![gold("V", &[("a", "x1"), ("b", "y1")])];
        let items = vec![ContextSample::new("l", "y1", "r")];
        assert_eq!(pair_with_gold(&items, &g).unwrap(), vec![0]);
        assert!(pair_with_gold(&[ContextSample::new("l", "q", "r")], &g).is_err());
    }
}
