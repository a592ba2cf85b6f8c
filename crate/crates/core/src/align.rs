//! Slot alignment: within each latent tag, abstract forms that express the
//! same inflectional slot are merged by agglomerative clustering.
//!
//! Two abstract forms are similar when their member types are distributionally
//! close *and* they rarely occur in the same paradigm:
//! `sim(a, a') = cos(a, a') · (1 − J(a, a'))`, with `J` the Jaccard index of
//! the sets of paradigms containing each form. Clustering uses the distance
//! `1 − sim`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::abstraction::{build_abstract_forms, AbstractForm, AbstractParadigm, Pattern};
use crate::cluster::Clustering;
use crate::embed::{abstract_form_vector, EmbeddingTable, MissingEmbedding};
use crate::error::{Error, Result};
use crate::posem::PosAssignment;
use crate::textio;

/// A pseudo slot: index `index` of latent tag `pos`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotId {
    pub pos: usize,
    pub index: usize,
}

impl SlotId {
    pub fn new(pos: usize, index: usize) -> Self {
        SlotId { pos, index }
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.pos, self.index)
    }
}

impl FromStr for SlotId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (pos, index) = s.split_once(':').ok_or_else(|| format!("bad slot id '{s}'"))?;
        Ok(SlotId {
            pos: pos.parse().map_err(|_| format!("bad slot id '{s}'"))?,
            index: index.parse().map_err(|_| format!("bad slot id '{s}'"))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Linkage {
    Single,
    Complete,
    #[default]
    Average,
}

impl FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            _ => Err(format!("unknown linkage '{s}' (single|complete|average)")),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        })
    }
}

/// Jaccard index of the paradigm sets of two abstract forms; 0 when both
/// are empty.
pub fn jaccard(a: &AbstractForm, b: &AbstractForm) -> f64 {
    let (ca, cb) = (a.paradigm_ids(), b.paradigm_ids());
    let union = ca.union(&cb).count();
    if union == 0 {
        return 0.0;
    }
    ca.intersection(&cb).count() as f64 / union as f64
}

fn cosine64(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// `cos(a, a') · (1 − J(a, a'))`.
pub fn similarity(
    a: &AbstractForm,
    b: &AbstractForm,
    table: &EmbeddingTable,
) -> std::result::Result<f64, MissingEmbedding> {
    let va = abstract_form_vector(a, table)?;
    let vb = abstract_form_vector(b, table)?;
    Ok(cosine64(&va.vector, &vb.vector) * (1.0 - jaccard(a, b)))
}

/// Agglomerative clustering over a symmetric distance matrix. Merging stops
/// once the closest pair of groups is farther apart than `threshold`. Among
/// equally close pairs, the pair whose smallest members have the lowest
/// indices merges first, so callers should order items by their labels.
pub fn agglomerate(distances: &[Vec<f64>], threshold: f64, linkage: Linkage) -> Vec<Vec<usize>> {
    let n = distances.len();
    let mut groups: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    let mut d: Vec<Vec<f64>> = distances.to_vec();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..n {
            if groups[a].is_none() {
                continue;
            }
            for b in a + 1..n {
                if groups[b].is_none() {
                    continue;
                }
                if best.is_none_or(|(_, _, bd)| d[a][b] < bd) {
                    best = Some((a, b, d[a][b]));
                }
            }
        }
        let Some((a, b, dist)) = best else { break };
        if dist > threshold {
            break;
        }
        let size_a = groups[a].as_ref().map_or(0, Vec::len) as f64;
        let size_b = groups[b].as_ref().map_or(0, Vec::len) as f64;
        for c in 0..n {
            if c == a || c == b || groups[c].is_none() {
                continue;
            }
            let merged = match linkage {
                Linkage::Single => d[a][c].min(d[b][c]),
                Linkage::Complete => d[a][c].max(d[b][c]),
                Linkage::Average => (size_a * d[a][c] + size_b * d[b][c]) / (size_a + size_b),
            };
            d[a][c] = merged;
            d[c][a] = merged;
        }
        let absorbed = groups[b].take().unwrap_or_default();
        groups[a].as_mut().expect("active group").extend(absorbed);
    }
    groups
        .into_iter()
        .flatten()
        .map(|mut g| {
            g.sort_unstable();
            g
        })
        .collect()
}

/// Slot groups of one tag: each inner list holds patterns sharing a slot,
/// in slot-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotFragment {
    pub pos: usize,
    pub slots: Vec<Vec<AbstractForm>>,
}

/// Clusters the abstract forms of one tag into slots. Forms are first
/// ordered by pattern, so the result does not depend on input order. A form
/// without any embedded member has similarity 0 to every other form.
pub fn cluster_slots(
    pos: usize,
    forms: &[AbstractForm],
    table: &EmbeddingTable,
    distance_threshold: f64,
    linkage: Linkage,
) -> SlotFragment {
    let mut forms: Vec<AbstractForm> = forms.to_vec();
    forms.sort_by(|a, b| a.pattern.cmp(&b.pattern));
    let vectors: Vec<Option<Vec<f64>>> = forms
        .iter()
        .map(|f| abstract_form_vector(f, table).ok().map(|v| v.vector))
        .collect();
    let n = forms.len();
    let mut distances = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let cos = match (&vectors[i], &vectors[j]) {
                (Some(a), Some(b)) => cosine64(a, b),
                _ => 0.0,
            };
            let sim = cos * (1.0 - jaccard(&forms[i], &forms[j]));
            distances[i][j] = 1.0 - sim;
            distances[j][i] = 1.0 - sim;
        }
    }
    let groups = agglomerate(&distances, distance_threshold, linkage);
    let mut slots: Vec<Vec<AbstractForm>> = groups
        .into_iter()
        .map(|g| g.into_iter().map(|i| forms[i].clone()).collect())
        .collect();
    let support = |s: &Vec<AbstractForm>| s.iter().map(|f| f.members.len()).sum::<usize>();
    slots.sort_by(|a, b| support(b).cmp(&support(a)).then_with(|| a[0].pattern.cmp(&b[0].pattern)));
    SlotFragment { pos, slots }
}

/// Slot of every retained abstract form and of every member word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SlotAssignment {
    form_slots: BTreeMap<(usize, Pattern), SlotId>,
    member_slots: BTreeMap<(usize, String), SlotId>,
    pos_slots: BTreeMap<usize, BTreeSet<SlotId>>,
}

impl SlotAssignment {
    pub fn from_fragments(fragments: impl IntoIterator<Item = SlotFragment>) -> Self {
        let mut out = SlotAssignment::default();
        for fragment in fragments {
            for (index, group) in fragment.slots.iter().enumerate() {
                let slot = SlotId::new(fragment.pos, index);
                out.pos_slots.entry(fragment.pos).or_default().insert(slot);
                for form in group {
                    out.form_slots.insert((fragment.pos, form.pattern.clone()), slot);
                    for member in &form.members {
                        out.member_slots.insert(member.clone(), slot);
                    }
                }
            }
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.member_slots.is_empty()
    }

    pub fn form_slot(&self, pos: usize, pattern: &Pattern) -> Option<SlotId> {
        self.form_slots.get(&(pos, pattern.clone())).copied()
    }

    pub fn member_slot(&self, cluster_id: usize, form: &str) -> Option<SlotId> {
        self.member_slots.get(&(cluster_id, form.to_string())).copied()
    }

    /// `(cluster_id, form) → slot` for every slot-assigned word.
    pub fn members(&self) -> impl Iterator<Item = (usize, &str, SlotId)> {
        self.member_slots.iter().map(|((c, f), s)| (*c, f.as_str(), *s))
    }

    pub fn form_slots(&self) -> impl Iterator<Item = (usize, &Pattern, SlotId)> {
        self.form_slots.iter().map(|((p, pat), s)| (*p, pat, *s))
    }

    /// Full slot inventory of a tag, ordered by index.
    pub fn slots_of(&self, pos: usize) -> Vec<SlotId> {
        self.pos_slots.get(&pos).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    pub fn tags(&self) -> impl Iterator<Item = usize> + '_ {
        self.pos_slots.keys().copied()
    }

    /// Dump body with `form` and `member` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for ((pos, pattern), slot) in &self.form_slots {
            let _ = writeln!(out, "form\t{pos}\t{pattern}\t{slot}");
        }
        for ((cluster, form), slot) in &self.member_slots {
            let _ = writeln!(out, "member\t{cluster}\t{form}\t{slot}");
        }
        out
    }

    pub fn parse_tsv(text: &str, path: &Path) -> Result<Self> {
        let mut out = SlotAssignment::default();
        for (line_no, line) in textio::body_lines(text) {
            let bad = |m: String| Error::parse(path, line_no, m);
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[..] {
                ["form", pos, pattern, slot] => {
                    let pos: usize = pos.parse().map_err(|_| bad(format!("bad tag '{pos}'")))?;
                    let pattern = Pattern::parse(pattern).ok_or_else(|| bad(format!("bad pattern '{pattern}'")))?;
                    let slot: SlotId = slot.parse().map_err(bad)?;
                    if slot.pos != pos {
                        return Err(bad(format!("slot {slot} does not belong to tag {pos}")));
                    }
                    out.pos_slots.entry(pos).or_default().insert(slot);
                    out.form_slots.insert((pos, pattern), slot);
                }
                ["member", cluster, form, slot] => {
                    let cluster: usize = cluster.parse().map_err(|_| bad(format!("bad cluster id '{cluster}'")))?;
                    let slot: SlotId = slot.parse().map_err(bad)?;
                    out.member_slots.insert((cluster, form.to_string()), slot);
                }
                _ => return Err(bad("unrecognized slot line".into())),
            }
        }
        Ok(out)
    }
}

/// Runs slot clustering for every tag over the paradigms assigned to it.
pub fn align_slots(
    paradigms: &[AbstractParadigm],
    tags: &PosAssignment,
    table: &EmbeddingTable,
    distance_threshold: f64,
    linkage: Linkage,
) -> SlotAssignment {
    let fragments = (0..tags.n_tags()).filter_map(|k| {
        let members = tags.members(k);
        let in_tag: Vec<AbstractParadigm> = paradigms
            .iter()
            .filter(|p| members.contains(&p.cluster_id))
            .cloned()
            .collect();
        if in_tag.is_empty() {
            return None;
        }
        let forms = build_abstract_forms(&in_tag);
        Some(cluster_slots(k, &forms, table, distance_threshold, linkage))
    });
    SlotAssignment::from_fragments(fragments)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TrainingTriple {
    pub source_form: String,
    pub source_slot: SlotId,
    pub target_slot: SlotId,
    pub target_form: String,
}

impl fmt::Display for TrainingTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.source_form, self.source_slot, self.target_slot, self.target_form
        )
    }
}

/// Every ordered pair of slot-assigned forms of a cluster that sit in
/// different slots, ordered by cluster id and then lexicographically.
pub fn emit_triples(clustering: &Clustering, assignment: &SlotAssignment) -> Vec<TrainingTriple> {
    let mut clusters: Vec<_> = clustering.iter().collect();
    clusters.sort_by_key(|c| c.id);
    let mut out = Vec::new();
    for cluster in clusters {
        let assigned: Vec<(&str, SlotId)> = cluster
            .forms
            .iter()
            .filter_map(|f| assignment.member_slot(cluster.id, f).map(|s| (f.as_str(), s)))
            .collect();
        for &(source, source_slot) in &assigned {
            for &(target, target_slot) in &assigned {
                if source == target || source_slot == target_slot {
                    continue;
                }
                out.push(TrainingTriple {
                    source_form: source.to_string(),
                    source_slot,
                    target_slot,
                    target_form: target.to_string(),
                });
            }
        }
    }
    out
}

pub fn triples_to_tsv(triples: &[TrainingTriple]) -> String {
    let mut out = String::new();
    for t in triples {
        let _ = writeln!(out, "{t}");
    }
    out
}

pub fn parse_triples(text: &str, path: &Path) -> Result<Vec<TrainingTriple>> {
    let mut out = Vec::new();
    for (line_no, line) in textio::body_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        let [source, s1, s2, target] = fields[..] else {
            return Err(Error::parse(path, line_no, "expected 4 tab-separated fields"));
        };
        let slot = |s: &str| s.parse::<SlotId>().map_err(|m| Error::parse(path, line_no, m));
        out.push(TrainingTriple {
            source_form: source.to_string(),
            source_slot: slot(s1)?,
            target_slot: slot(s2)?,
            target_form: target.to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::ParadigmCluster;

    fn form(pattern: &str, ids: &[usize]) -> AbstractForm {
        let pattern = Pattern::parse(pattern).unwrap();
        AbstractForm {
            members: ids.iter().map(|&i| (i, pattern.instantiate(&format!("s{i}")))).collect(),
            pattern,
        }
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&form("X0", &[1, 2]), &form("X0+s", &[1, 2])), 1.0);
        assert_eq!(jaccard(&form("X0", &[1, 2]), &form("X0+s", &[3])), 0.0);
        assert_eq!(jaccard(&form("X0", &[1, 2, 3]), &form("X0+s", &[2, 3, 4])), 0.5);
        assert_eq!(jaccard(&form("X0", &[]), &form("X0+s", &[])), 0.0);
    }

    fn table(entries: &[(&str, [f32; 2])]) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2);
        for (w, v) in entries {
            t.insert(*w, v.to_vec()).unwrap();
        }
        t
    }

    #[test]
    fn similarity_examples() {
        let a = form("X0", &[1]);
        let b = form("X0+s", &[2]);
        let t = table(&[("s1", [1.0, 0.0]), ("s2+s", [1.0, 0.0]), ("s2s", [1.0, 0.0])]);
        // a with itself: J = 1
        assert_eq!(similarity(&a, &a, &t).unwrap(), 0.0);

        let b_members = table(&[("s1", [1.0, 0.0]), ("s2s", [2.0, 0.0])]);
        assert!((similarity(&a, &b, &b_members).unwrap() - 1.0).abs() < 1e-12);

        // cos = 0.8, J = 0.5
        let a = form("X0", &[1, 2]);
        let b = form("X0+s", &[2, 3]);
        let t = table(&[("s1", [1.0, 0.0]), ("s2", [1.0, 0.0]), ("s2s", [0.8, 0.6]), ("s3s", [0.8, 0.6])]);
        let sim = similarity(&a, &b, &t).unwrap();
        assert!((sim - 0.8 * (1.0 - 1.0 / 3.0)).abs() < 1e-6);
        assert!((similarity(&b, &a, &t).unwrap() - sim).abs() < 1e-15);

        let a = form("X0", &[1, 2]);
        let b = form("X0+s", &[2, 4]);
        let c = form("X0+t", &[4, 5]);
        drop((b, c));
        let missing = table(&[]);
        assert!(similarity(&a, &a, &missing).is_err());
    }

    #[test]
    fn similarity_point_four() {
        // cos = 0.8 and J = 1/2 give 0.4.
        let a = form("X0", &[1, 2, 3]);
        let b = form("X0+s", &[2, 3, 4]);
        let t = table(&[
            ("s1", [1.0, 0.0]),
            ("s2", [1.0, 0.0]),
            ("s3", [1.0, 0.0]),
            ("s2s", [0.8, 0.6]),
            ("s3s", [0.8, 0.6]),
            ("s4s", [0.8, 0.6]),
        ]);
        assert!((similarity(&a, &b, &t).unwrap() - 0.4).abs() < 1e-6);
    }

    #[test]
    fn threshold_rule() {
        let merged = agglomerate(&[vec![0.0, 0.1], vec![0.1, 0.0]], 0.15, Linkage::Average);
        assert_eq!(merged, vec![vec![0, 1]]);
        let split = agglomerate(&[vec![0.0, 0.2], vec![0.2, 0.0]], 0.15, Linkage::Average);
        assert_eq!(split, vec![vec![0], vec![1]]);
        assert_eq!(agglomerate(&[vec![0.0]], 0.15, Linkage::Average), vec![vec![0]]);
    }

    #[test]
    fn three_forms_by_hand() {
        // sims (a,b)=0.95, (a,c)=(b,c)=0.5
        let d = vec![vec![0.0, 0.05, 0.5], vec![0.05, 0.0, 0.5], vec![0.5, 0.5, 0.0]];
        for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average] {
            assert_eq!(agglomerate(&d, 0.15, linkage), vec![vec![0, 1], vec![2]]);
        }
    }

    #[test]
    fn linkages_differ_on_chains() {
        // 0-1 and 1-2 are close, 0-2 is far.
        let d = vec![vec![0.0, 0.1, 0.3], vec![0.1, 0.0, 0.12], vec![0.3, 0.12, 0.0]];
        assert_eq!(agglomerate(&d, 0.15, Linkage::Single), vec![vec![0, 1, 2]]);
        assert_eq!(agglomerate(&d, 0.15, Linkage::Complete), vec![vec![0, 1], vec![2]]);
        assert_eq!(agglomerate(&d, 0.15, Linkage::Average), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn equal_distances_merge_lowest_pair_first() {
        let d = vec![
            vec![0.0, 0.1, 1.0, 1.0],
            vec![0.1, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 0.1],
            vec![1.0, 1.0, 0.1, 0.0],
        ];
        assert_eq!(agglomerate(&d, 0.15, Linkage::Average), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn cooccurring_forms_never_merge() {
        let forms = vec![form("X0", &[1, 2]), form("X0+s", &[1, 2])];
        let t = table(&[("s1", [1.0, 0.0]), ("s2", [1.0, 0.0]), ("s1s", [1.0, 0.0]), ("s2s", [1.0, 0.0])]);
        let frag = cluster_slots(0, &forms, &t, 0.15, Linkage::Average);
        assert_eq!(frag.slots.len(), 2);
    }

    #[test]
    fn complementary_forms_merge_and_order_is_irrelevant() {
        // Two patterns that never share a paradigm and have identical vectors.
        let forms = vec![form("X0+s", &[1, 2]), form("X0+es", &[3]), form("X0", &[1, 2, 3])];
        let t = table(&[
            ("s1", [0.0, 1.0]),
            ("s2", [0.0, 1.0]),
            ("s3", [0.0, 1.0]),
            ("s1s", [1.0, 0.0]),
            ("s2s", [1.0, 0.0]),
            ("s3es", [1.0, 0.0]),
        ]);
        let frag = cluster_slots(2, &forms, &t, 0.15, Linkage::Average);
        let patterns: Vec<Vec<&str>> = frag
            .slots
            .iter()
            .map(|s| s.iter().map(|f| f.pattern.as_str()).collect())
            .collect();
        // Slot 0 has the most members (X0: 3, X0+s/X0+es: 2 + 1 = 3 → tie on
        // support, broken by smallest pattern).
        assert_eq!(patterns, vec![vec!["X0"], vec!["X0+es", "X0+s"]]);

        let mut reversed = forms.clone();
        reversed.reverse();
        assert_eq!(cluster_slots(2, &reversed, &t, 0.15, Linkage::Average), frag);

        let assignment = SlotAssignment::from_fragments([frag]);
        assert_eq!(assignment.slots_of(2), vec![SlotId::new(2, 0), SlotId::new(2, 1)]);
        assert_eq!(assignment.member_slot(3, "s3es"), Some(SlotId::new(2, 1)));
        let back = SlotAssignment::parse_tsv(&assignment.to_tsv(), Path::new("s")).unwrap();
        assert_eq!(back, assignment);
    }

    fn assignment_for(cluster: &ParadigmCluster) -> SlotAssignment {
        let fragment = SlotFragment {
            pos: 0,
            slots: cluster
                .forms
                .iter()
                .map(|f| {
                    vec![AbstractForm {
                        pattern: Pattern::new("", f),
                        members: [(cluster.id, f.clone())].into(),
                    }]
                })
                .collect(),
        };
        SlotAssignment::from_fragments([fragment])
    }

    #[test]
    fn triple_counts() {
        let c = ParadigmCluster::new(0, ["walk", "walks"]);
        let triples = emit_triples(&Clustering::new(vec![c.clone()]), &assignment_for(&c));
        let lines: Vec<String> = triples.iter().map(ToString::to_string).collect();
        assert_eq!(lines, ["walk\t0:0\t0:1\twalks", "walks\t0:1\t0:0\twalk"]);

        let c = ParadigmCluster::new(0, ["walk"]);
        assert!(emit_triples(&Clustering::new(vec![c.clone()]), &assignment_for(&c)).is_empty());

        let c = ParadigmCluster::new(0, ["a", "b", "c", "d"]);
        let triples = emit_triples(&Clustering::new(vec![c.clone()]), &assignment_for(&c));
        assert_eq!(triples.len(), 12);
        let back = parse_triples(&triples_to_tsv(&triples), Path::new("t")).unwrap();
        assert_eq!(back, triples);
    }

    #[test]
    fn slot_id_text() {
        assert_eq!(SlotId::new(1, 4).to_string(), "1:4");
        assert_eq!("2:0".parse::<SlotId>(), Ok(SlotId::new(2, 0)));
        assert!("2".parse::<SlotId>().is_err());
    }
}
