//! Edit-tree inflection.
//!
//! An edit tree splits a source form around the longest common substring it
//! shares with the target. That substring is copied; the material before
//! and after it is transduced recursively. Trees carry the lengths of the
//! source material on each side, so applying a tree to a new form is
//! deterministic.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::align::{SlotId, TrainingTriple};
use crate::cluster::Clustering;
use crate::error::{Error, Result};
use crate::lcs::longest_common_substring;
use crate::textio;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EditTree {
    /// Replace exactly `source` by `target`.
    Leaf { source: String, target: String },
    /// Keep the middle of the form, transducing `prefix_len` characters
    /// before it and `suffix_len` after it.
    Node {
        prefix_len: usize,
        suffix_len: usize,
        prefix: Box<EditTree>,
        suffix: Box<EditTree>,
    },
}

fn build(f: &[char], g: &[char]) -> EditTree {
    let fs: String = f.iter().collect();
    let gs: String = g.iter().collect();
    let common: Vec<char> = longest_common_substring(&[fs.as_str(), gs.as_str()]).chars().collect();
    if common.is_empty() {
        return EditTree::Leaf { source: fs, target: gs };
    }
    let (i, j) = (find(f, &common), find(g, &common));
    let end_f = i + common.len();
    let end_g = j + common.len();
    EditTree::Node {
        prefix_len: i,
        suffix_len: f.len() - end_f,
        prefix: Box::new(build(&f[..i], &g[..j])),
        suffix: Box::new(build(&f[end_f..], &g[end_g..])),
    }
}

fn find(haystack: &[char], needle: &[char]) -> usize {
    haystack
        .windows(needle.len())
        .position(|w| w == needle)
        .expect("common substring occurs in both forms")
}

pub fn build_edit_tree(f: &str, f2: &str) -> EditTree {
    let f: Vec<char> = f.chars().collect();
    let g: Vec<char> = f2.chars().collect();
    build(&f, &g)
}

fn apply_chars(tree: &EditTree, f: &[char], out: &mut String) -> bool {
    match tree {
        EditTree::Leaf { source, target } => {
            if source.chars().eq(f.iter().copied()) {
                out.push_str(target);
                true
            } else {
                false
            }
        }
        EditTree::Node {
            prefix_len,
            suffix_len,
            prefix,
            suffix,
        } => {
            if f.len() <= prefix_len + suffix_len {
                return false;
            }
            let stem_end = f.len() - suffix_len;
            apply_chars(prefix, &f[..*prefix_len], out) && {
                out.extend(&f[*prefix_len..stem_end]);
                apply_chars(suffix, &f[stem_end..], out)
            }
        }
    }
}

/// `None` when the tree's preconditions do not match `f`.
pub fn apply_edit_tree(tree: &EditTree, f: &str) -> Option<String> {
    let chars: Vec<char> = f.chars().collect();
    let mut out = String::new();
    apply_chars(tree, &chars, &mut out).then_some(out)
}

impl EditTree {
    /// Number of characters the tree requires the input to match.
    pub fn mlen(&self) -> usize {
        match self {
            EditTree::Leaf { source, .. } => source.chars().count(),
            EditTree::Node { prefix, suffix, .. } => prefix.mlen() + suffix.mlen(),
        }
    }

    /// All inserted material, left to right.
    pub fn mstr(&self) -> String {
        let mut out = String::new();
        self.push_mstr(&mut out);
        out
    }

    fn push_mstr(&self, out: &mut String) {
        match self {
            EditTree::Leaf { target, .. } => out.push_str(target),
            EditTree::Node { prefix, suffix, .. } => {
                prefix.push_mstr(out);
                suffix.push_mstr(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeStats {
    pub count: usize,
    pub mlen: usize,
    pub mstr: String,
}

pub type TreeCounts = BTreeMap<EditTree, TreeStats>;

fn count_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> TreeCounts {
    let mut out = TreeCounts::new();
    for (f, g) in pairs {
        let tree = build_edit_tree(f, g);
        out.entry(tree)
            .or_insert_with_key(|t| TreeStats {
                count: 0,
                mlen: t.mlen(),
                mstr: t.mstr(),
            })
            .count += 1;
    }
    out
}

/// Trees of all ordered pairs of distinct forms within each cluster.
pub fn collect_trees(clustering: &Clustering) -> TreeCounts {
    count_pairs(clustering.iter().flat_map(|c| {
        c.forms.iter().flat_map(move |f| {
            c.forms
                .iter()
                .filter(move |g| *g != f)
                .map(move |g| (f.as_str(), g.as_str()))
        })
    }))
}

pub type RankedTrees = Vec<(EditTree, TreeStats)>;

/// Longer preconditions first, then more frequent trees, then by inserted
/// material, then by structure.
pub fn rank_trees(stats: &TreeCounts) -> RankedTrees {
    let mut ranked: RankedTrees = stats.iter().map(|(t, s)| (t.clone(), s.clone())).collect();
    ranked.sort_by(|(ta, a), (tb, b)| {
        b.mlen
            .cmp(&a.mlen)
            .then(b.count.cmp(&a.count))
            .then_with(|| a.mstr.cmp(&b.mstr))
            .then_with(|| ta.cmp(tb))
    });
    ranked
}

/// Nearest-rank 95th percentile of the non-singleton cluster sizes.
pub fn choose_n(clustering: &Clustering) -> Result<usize> {
    let mut sizes: Vec<usize> = clustering.iter().map(|c| c.len()).filter(|&n| n >= 2).collect();
    if sizes.is_empty() {
        return Err(Error::InvalidInput("no cluster has more than one form".into()));
    }
    sizes.sort_unstable();
    let rank = (95 * sizes.len()).div_ceil(100).max(1);
    Ok(sizes[rank - 1])
}

/// A generated paradigm: the input form with its label, followed by the
/// generated `(label, form)` entries in rank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedParadigm {
    pub input_form: String,
    pub input_label: String,
    pub entries: Vec<(String, String)>,
}

impl GeneratedParadigm {
    /// Every `(label, form)` pair including the input.
    pub fn cells(&self) -> impl Iterator<Item = (&str, &str)> {
        std::iter::once((self.input_label.as_str(), self.input_form.as_str()))
            .chain(self.entries.iter().map(|(l, f)| (l.as_str(), f.as_str())))
    }
}

/// Applies the first `n` trees applicable to `f`; a label already produced
/// by a higher-ranked tree is not overwritten.
pub fn baseline_generate(f: &str, ranked: &[(EditTree, TreeStats)], n: usize) -> GeneratedParadigm {
    let mut entries: Vec<(String, String)> = Vec::new();
    let applicable = ranked
        .iter()
        .filter_map(|(t, s)| apply_edit_tree(t, f).map(|g| (s.mstr.clone(), g)))
        .take(n);
    for (label, form) in applicable {
        if !entries.iter().any(|(l, _)| *l == label) {
            entries.push((label, form));
        }
    }
    let mut out = GeneratedParadigm {
        input_form: f.to_string(),
        input_label: String::new(),
        entries,
    };
    out.input_label = back_label(f, &out, ranked);
    out
}

/// Label of the input form: the inserted material of the best-ranked known
/// tree that maps some generated form back onto `f`. Without such a tree,
/// one is built from the first generated form.
pub fn back_label(f: &str, generated: &GeneratedParadigm, ranked: &[(EditTree, TreeStats)]) -> String {
    let Some((_, first)) = generated.entries.first() else {
        return String::new();
    };
    for (tree, stats) in ranked {
        let hit = generated
            .entries
            .iter()
            .any(|(_, g)| apply_edit_tree(tree, g).as_deref() == Some(f));
        if hit {
            return stats.mstr.clone();
        }
    }
    build_edit_tree(first, f).mstr()
}

/// Ranked trees per `(source slot, target slot)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlignedInflector {
    models: BTreeMap<(SlotId, SlotId), RankedTrees>,
}

pub fn train_aligned_inflector(triples: &[TrainingTriple]) -> AlignedInflector {
    let mut grouped: BTreeMap<(SlotId, SlotId), Vec<(&str, &str)>> = BTreeMap::new();
    for t in triples {
        grouped
            .entry((t.source_slot, t.target_slot))
            .or_default()
            .push((&t.source_form, &t.target_form));
    }
    AlignedInflector {
        models: grouped
            .into_iter()
            .map(|(key, pairs)| (key, rank_trees(&count_pairs(pairs))))
            .collect(),
    }
}

impl AlignedInflector {
    pub fn trees(&self, source: SlotId, target: SlotId) -> Option<&RankedTrees> {
        self.models.get(&(source, target))
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Output of the best-ranked applicable tree for the slot pair.
    pub fn inflect(&self, f: &str, source: SlotId, target: SlotId) -> Option<String> {
        self.trees(source, target)?
            .iter()
            .find_map(|(t, _)| apply_edit_tree(t, f))
    }

    /// Inflects `f` from `source` into every other slot of `targets`;
    /// slots without an applicable tree are left out.
    pub fn generate(&self, f: &str, source: SlotId, targets: &[SlotId]) -> GeneratedParadigm {
        GeneratedParadigm {
            input_form: f.to_string(),
            input_label: source.to_string(),
            entries: targets
                .iter()
                .filter(|&&t| t != source)
                .filter_map(|&t| self.inflect(f, source, t).map(|g| (t.to_string(), g)))
                .collect(),
        }
    }
}

/// Blocks of `input<TAB>label<TAB>form` lines separated by blank lines; the
/// first line of each block is the input form itself.
pub fn paradigms_to_tsv(paradigms: &[GeneratedParadigm]) -> String {
    let mut out = String::new();
    for (i, p) in paradigms.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (label, form) in p.cells() {
            let _ = writeln!(out, "{}\t{label}\t{form}", p.input_form);
        }
    }
    out
}

pub fn parse_paradigms(text: &str, path: &Path) -> Result<Vec<GeneratedParadigm>> {
    let mut out: Vec<GeneratedParadigm> = Vec::new();
    let mut open = false;
    for (line_no, line) in textio::body_lines(text) {
        if line.is_empty() {
            open = false;
            continue;
        }
        let [input, label, form] = line.split('\t').collect::<Vec<_>>()[..] else {
            return Err(Error::parse(path, line_no, "expected <input>\\t<label>\\t<form>"));
        };
        match out.last_mut() {
            Some(p) if open => {
                if p.input_form != input {
                    return Err(Error::parse(path, line_no, format!("input '{input}' inside block of '{}'", p.input_form)));
                }
                p.entries.push((label.to_string(), form.to_string()));
            }
            _ => {
                if input != form {
                    return Err(Error::parse(path, line_no, "first line of a block must repeat the input form"));
                }
                out.push(GeneratedParadigm {
                    input_form: input.to_string(),
                    input_label: label.to_string(),
                    entries: Vec::new(),
                });
                open = true;
            }
        }
    }
    Ok(out)
}
