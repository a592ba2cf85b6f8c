//! Abstract paradigms: each cluster's longest common substring becomes the
//! stem variable `X0` and every form is rewritten as a pattern around it
//! (`X0`, `X0+s`, `ge+X0+t`, ...).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::Path;

use crate::cluster::ParadigmCluster;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::lcs::longest_common_substring;
use crate::textio;

pub const STEM_VARIABLE: &str = "X0";

/// An affix pattern around a single stem variable, kept in its printed form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern(String);

impl Pattern {
    pub fn new(prefix: &str, suffix: &str) -> Self {
        let mut s = String::new();
        if !prefix.is_empty() {
            s.push_str(prefix);
            s.push('+');
        }
        s.push_str(STEM_VARIABLE);
        if !suffix.is_empty() {
            s.push('+');
            s.push_str(suffix);
        }
        Pattern(s)
    }

    /// Parses the printed form, e.g. `ge+X0+t`.
    pub fn parse(s: &str) -> Option<Self> {
        let pattern = Pattern(s.to_string());
        pattern.parts()?;
        Some(pattern)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Prefix and suffix around the variable.
    pub fn parts(&self) -> Option<(&str, &str)> {
        let s = self.0.as_str();
        let var = STEM_VARIABLE.len();
        s.match_indices(STEM_VARIABLE).find_map(|(at, _)| {
            let prefix = if at == 0 {
                ""
            } else {
                s[..at].strip_suffix('+').filter(|p| !p.is_empty())?
            };
            let rest = &s[at + var..];
            let suffix = if rest.is_empty() {
                ""
            } else {
                rest.strip_prefix('+').filter(|r| !r.is_empty())?
            };
            Some((prefix, suffix))
        })
    }

    /// Substitutes `stem` for the variable.
    pub fn instantiate(&self, stem: &str) -> String {
        let (prefix, suffix) = self.parts().expect("pattern holds a stem variable");
        format!("{prefix}{stem}{suffix}")
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractParadigm {
    pub cluster_id: usize,
    pub stem: String,
    /// Surface form → pattern.
    pub form_map: BTreeMap<String, Pattern>,
}

impl AbstractParadigm {
    pub fn patterns(&self) -> BTreeSet<&Pattern> {
        self.form_map.values().collect()
    }
}

/// A pattern together with every `(cluster_id, surface form)` realizing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractForm {
    pub pattern: Pattern,
    pub members: BTreeSet<(usize, String)>,
}

impl AbstractForm {
    /// Number of distinct abstract paradigms containing the pattern.
    pub fn count(&self) -> usize {
        self.paradigm_ids().len()
    }

    pub fn paradigm_ids(&self) -> BTreeSet<usize> {
        self.members.iter().map(|(id, _)| *id).collect()
    }
}

/// Outcome of [`abstractify`] for clusters without a usable stem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejected {
    pub cluster_id: usize,
    pub stem: String,
}

/// Rewrites a cluster as an abstract paradigm, replacing the leftmost
/// occurrence of the cluster-wide LCS in every form.
pub fn abstractify(
    cluster: &ParadigmCluster,
    min_stem_len: usize,
) -> std::result::Result<AbstractParadigm, Rejected> {
    let forms: Vec<&str> = cluster.forms.iter().map(String::as_str).collect();
    let stem = longest_common_substring(&forms);
    if stem.is_empty() || stem.chars().count() < min_stem_len {
        return Err(Rejected {
            cluster_id: cluster.id,
            stem,
        });
    }
    let form_map = forms
        .iter()
        .map(|form| {
            let at = form.find(&stem).expect("LCS occurs in every form");
            let pattern = Pattern::new(&form[..at], &form[at + stem.len()..]);
            (form.to_string(), pattern)
        })
        .collect();
    Ok(AbstractParadigm {
        cluster_id: cluster.id,
        stem,
        form_map,
    })
}

/// One [`AbstractForm`] per distinct pattern, ordered by pattern.
pub fn build_abstract_forms(paradigms: &[AbstractParadigm]) -> Vec<AbstractForm> {
    let mut by_pattern: BTreeMap<&Pattern, BTreeSet<(usize, String)>> = BTreeMap::new();
    for paradigm in paradigms {
        for (form, pattern) in &paradigm.form_map {
            by_pattern
                .entry(pattern)
                .or_default()
                .insert((paradigm.cluster_id, form.clone()));
        }
    }
    by_pattern
        .into_iter()
        .map(|(pattern, members)| AbstractForm {
            pattern: pattern.clone(),
            members,
        })
        .collect()
}

/// What the rarity threshold counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RarityUnit {
    /// Abstract paradigms containing the pattern.
    #[default]
    Paradigms,
    /// Corpus tokens of the pattern's member forms.
    Tokens,
}

/// Keeps abstract forms whose count is at least `beta` and strips the
/// removed patterns from the paradigms. Paradigms left without any pattern
/// are dropped.
pub fn filter_rare(
    forms: &[AbstractForm],
    paradigms: &[AbstractParadigm],
    beta: u64,
) -> (Vec<AbstractForm>, Vec<AbstractParadigm>) {
    filter_by(forms, paradigms, |f| f.count() as u64 >= beta)
}

/// [`filter_rare`] with a selectable counting unit.
pub fn filter_rare_by(
    forms: &[AbstractForm],
    paradigms: &[AbstractParadigm],
    beta: u64,
    unit: RarityUnit,
    corpus: &Corpus,
) -> (Vec<AbstractForm>, Vec<AbstractParadigm>) {
    match unit {
        RarityUnit::Paradigms => filter_rare(forms, paradigms, beta),
        RarityUnit::Tokens => filter_by(forms, paradigms, |f| {
            f.members.iter().map(|(_, w)| corpus.count(w)).sum::<u64>() >= beta
        }),
    }
}

fn filter_by(
    forms: &[AbstractForm],
    paradigms: &[AbstractParadigm],
    keep: impl Fn(&AbstractForm) -> bool,
) -> (Vec<AbstractForm>, Vec<AbstractParadigm>) {
    let kept: Vec<AbstractForm> = forms.iter().filter(|f| keep(f)).cloned().collect();
    let retained: BTreeSet<&Pattern> = kept.iter().map(|f| &f.pattern).collect();
    let paradigms = paradigms
        .iter()
        .filter_map(|p| {
            let form_map: BTreeMap<String, Pattern> = p
                .form_map
                .iter()
                .filter(|(_, pattern)| retained.contains(pattern))
                .map(|(f, pattern)| (f.clone(), pattern.clone()))
                .collect();
            (!form_map.is_empty()).then(|| AbstractParadigm {
                cluster_id: p.cluster_id,
                stem: p.stem.clone(),
                form_map,
            })
        })
        .collect();
    (kept, paradigms)
}

/// Dump body: `cluster_id<TAB>stem<TAB>pattern1,pattern2,...`.
pub fn to_tsv(paradigms: &[AbstractParadigm]) -> String {
    let mut out = String::new();
    for p in paradigms {
        let patterns: Vec<&str> = p.patterns().into_iter().map(Pattern::as_str).collect();
        let _ = writeln!(out, "{}\t{}\t{}", p.cluster_id, p.stem, patterns.join(","));
    }
    out
}

pub fn parse_tsv(text: &str, path: &Path) -> Result<Vec<AbstractParadigm>> {
    let mut out = Vec::new();
    for (line_no, line) in textio::body_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, stem, patterns] = fields[..] else {
            return Err(Error::parse(path, line_no, "expected 3 tab-separated fields"));
        };
        let cluster_id = id
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad cluster id '{id}'")))?;
        let mut form_map = BTreeMap::new();
        for raw in patterns.split(',') {
            let pattern = Pattern::parse(raw)
                .ok_or_else(|| Error::parse(path, line_no, format!("bad pattern '{raw}'")))?;
            form_map.insert(pattern.instantiate(stem), pattern);
        }
        out.push(AbstractParadigm {
            cluster_id,
            stem: stem.to_string(),
            form_map,
        });
    }
    Ok(out)
}

pub fn load_tsv(path: &Path) -> Result<Vec<AbstractParadigm>> {
    parse_tsv(&textio::read_text(path)?, path)
}
