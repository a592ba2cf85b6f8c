//! Paradigm clusters: the built-in string-overlap baseline, subset removal,
//! and import of clusters produced by external systems.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::lcs::common_substring_len;
use crate::textio;

/// Surface forms hypothesized to belong to one lexeme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParadigmCluster {
    pub id: usize,
    pub forms: BTreeSet<String>,
}

impl ParadigmCluster {
    pub fn new<I, S>(id: usize, forms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ParadigmCluster {
            id,
            forms: forms.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Clustering {
    pub clusters: Vec<ParadigmCluster>,
}

impl Clustering {
    pub fn new(clusters: Vec<ParadigmCluster>) -> Self {
        Clustering { clusters }
    }

    /// Builds a clustering from form sets, numbering clusters from 0.
    pub fn from_sets<I, C, S>(sets: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Clustering {
            clusters: sets
                .into_iter()
                .enumerate()
                .map(|(id, forms)| ParadigmCluster::new(id, forms))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ParadigmCluster> {
        self.clusters.iter()
    }

    pub fn get(&self, id: usize) -> Option<&ParadigmCluster> {
        self.clusters.iter().find(|c| c.id == id)
    }

    /// Cluster-file body: one cluster per line, forms tab-separated.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for cluster in &self.clusters {
            let line: Vec<&str> = cluster.forms.iter().map(String::as_str).collect();
            let _ = writeln!(out, "{}", line.join("\t"));
        }
        out
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

const BLOCK_GRAM: usize = 3;

/// Links every pair of types (with count ≥ `min_count`) whose longest common
/// substring covers at least `min_lcs_ratio` of the longer type, and returns
/// the connected components. Cluster ids follow the lexicographic order of
/// each component's smallest form.
pub fn cluster_baseline(corpus: &Corpus, min_lcs_ratio: f64, min_count: u64) -> Result<Clustering> {
    if !(min_lcs_ratio > 0.0 && min_lcs_ratio <= 1.0) {
        return Err(Error::Config(format!(
            "min_lcs_ratio must lie in (0, 1], got {min_lcs_ratio}"
        )));
    }
    let types: Vec<&str> = corpus
        .type_counts()
        .iter()
        .filter(|(_, &n)| n >= min_count)
        .map(|(t, _)| t.as_str())
        .collect();
    let chars: Vec<Vec<char>> = types.iter().map(|t| t.chars().collect()).collect();
    let required = |len: usize| (min_lcs_ratio * len as f64 - 1e-12).ceil() as usize;

    // A qualifying pair whose required overlap is at least BLOCK_GRAM shares a
    // BLOCK_GRAM-gram; the remaining pairs are both short and compared directly.
    let mut grams: HashMap<&[char], Vec<usize>> = HashMap::new();
    let mut short = Vec::new();
    for (i, c) in chars.iter().enumerate() {
        if required(c.len()) < BLOCK_GRAM {
            short.push(i);
        }
        let mut local = HashSet::new();
        for gram in c.windows(BLOCK_GRAM) {
            if local.insert(gram) {
                grams.entry(gram).or_default().push(i);
            }
        }
    }
    let mut candidates: BTreeSet<(usize, usize)> = BTreeSet::new();
    for postings in grams.values() {
        for (x, &i) in postings.iter().enumerate() {
            for &j in &postings[x + 1..] {
                candidates.insert((i.min(j), i.max(j)));
            }
        }
    }
    for (x, &i) in short.iter().enumerate() {
        for &j in &short[x + 1..] {
            candidates.insert((i, j));
        }
    }

    let mut sets = DisjointSet::new(types.len());
    for (i, j) in candidates {
        let longest = chars[i].len().max(chars[j].len());
        if longest == 0 {
            continue;
        }
        let lcs = common_substring_len(types[i], types[j]);
        if lcs as f64 / longest as f64 >= min_lcs_ratio {
            sets.union(i, j);
        }
    }

    // Types are sorted, so each root is the component's smallest form and
    // components come out ordered by it.
    let mut components: Vec<Vec<&str>> = Vec::new();
    let mut slot_of_root: HashMap<usize, usize> = HashMap::new();
    for (i, t) in types.iter().enumerate() {
        let root = sets.find(i);
        let slot = *slot_of_root.entry(root).or_insert_with(|| {
            components.push(Vec::new());
            components.len() - 1
        });
        components[slot].push(t);
    }
    Ok(Clustering::from_sets(components))
}

/// Drops every cluster whose form set is a proper subset of another's.
/// Clusters with identical form sets collapse onto the one with the lowest id.
/// Surviving clusters keep their ids and relative order.
pub fn remove_subset_clusters(clustering: &Clustering) -> Clustering {
    let clusters = &clustering.clusters;
    let mut containing: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, c) in clusters.iter().enumerate() {
        for form in &c.forms {
            containing.entry(form.as_str()).or_default().push(i);
        }
    }

    let dominated = |i: usize| -> bool {
        let c = &clusters[i];
        let Some(rarest) = c.forms.iter().min_by_key(|f| containing[f.as_str()].len()) else {
            return false;
        };
        containing[rarest.as_str()].iter().any(|&j| {
            if j == i {
                return false;
            }
            let other = &clusters[j];
            if other.forms.len() < c.forms.len() || !c.forms.is_subset(&other.forms) {
                return false;
            }
            other.forms.len() > c.forms.len() || (other.id, j) < (c.id, i)
        })
    };

    Clustering {
        clusters: (0..clusters.len())
            .filter(|&i| !clusters[i].forms.is_empty() && !dominated(i))
            .map(|i| clusters[i].clone())
            .collect(),
    }
}

/// Keeps clusters with at least two forms.
pub fn drop_singletons(clustering: &Clustering) -> Clustering {
    Clustering {
        clusters: clustering
            .clusters
            .iter()
            .filter(|c| c.forms.len() >= 2)
            .cloned()
            .collect(),
    }
}

/// Parses a cluster file body. Ids follow line numbers (1-based) so errors
/// and ids can be traced back to the file.
pub fn parse_clusters(text: &str, path: &Path) -> Result<Clustering> {
    let mut clusters = Vec::new();
    for (line_no, line) in textio::body_lines(text) {
        if line.is_empty() {
            return Err(Error::parse(path, line_no, "empty cluster line"));
        }
        let mut forms = BTreeSet::new();
        for form in line.split('\t') {
            if form.is_empty() {
                return Err(Error::parse(path, line_no, "empty form"));
            }
            if !forms.insert(form.to_string()) {
                return Err(Error::parse(path, line_no, format!("duplicate form '{form}'")));
            }
        }
        clusters.push(ParadigmCluster { id: line_no, forms });
    }
    Ok(Clustering { clusters })
}

pub fn load_clusters(path: &Path) -> Result<Clustering> {
    parse_clusters(&textio::read_text(path)?, path)
}
