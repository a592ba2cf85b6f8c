//! End-to-end orchestration with file artifacts between stages.
//!
//! Each stage reads its inputs from the output directory and writes its own
//! artifacts there, so running the stages one by one produces the same
//! bytes as a single full run. Every artifact starts with a comment line
//! recording a hash of the configuration and the seed.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use sha2::{Digest, Sha256};

use crate::abstraction::{self, abstractify, build_abstract_forms, filter_rare_by, AbstractParadigm, RarityUnit};
use crate::align::{align_slots, emit_triples, parse_triples, triples_to_tsv, Linkage, SlotAssignment, SlotId};
use crate::cluster::{cluster_baseline, drop_singletons, parse_clusters, remove_subset_clusters, Clustering};
use crate::corpus::{load_corpus, mask_rare, ContextSample, Corpus, Tokenizer};
use crate::embed::{load_embeddings, train_embeddings, EmbeddingOptions, EmbeddingTable};
use crate::error::{Error, Result};
use crate::eval::{bmacc, bmf1, load_unimorph, pair_with_gold, EvalReport};
use crate::inflect::{
    baseline_generate, choose_n, collect_trees, paradigms_to_tsv, parse_paradigms, rank_trees,
    train_aligned_inflector, GeneratedParadigm,
};
use crate::posem::{assign_pos, em_fit, EmOptions};
use crate::slotpred::{build_training_data, parse_test_items, train_predictor, SlotPrediction, TrainOptions};
use crate::textio;

pub const CLUSTERS: &str = "clusters.tsv";
pub const ABSTRACT: &str = "abstract.tsv";
pub const POS_MODEL: &str = "pos_model.txt";
pub const POS_ASSIGN: &str = "pos_assign.tsv";
pub const EMBEDDINGS: &str = "embeddings.vec";
pub const SLOTS: &str = "slots.tsv";
pub const TRIPLES: &str = "triples.tsv";
pub const PREDICTOR: &str = "predictor.txt";
pub const PREDICTIONS: &str = "predictions.tsv";
pub const REPORT: &str = "report.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    /// Computed by the pipeline itself.
    Builtin,
    File(PathBuf),
}

impl Source {
    fn parse(value: &str, builtin: &str) -> Self {
        if value == builtin {
            Source::Builtin
        } else {
            Source::File(PathBuf::from(value))
        }
    }

    fn render(&self, builtin: &str) -> String {
        match self {
            Source::Builtin => builtin.to_string(),
            Source::File(p) => p.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Inflector {
    Baseline,
    #[default]
    Aligned,
}

impl FromStr for Inflector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Inflector::Baseline),
            "aligned" => Ok(Inflector::Aligned),
            _ => Err(format!("unknown inflector '{s}' (baseline|aligned)")),
        }
    }
}

impl fmt::Display for Inflector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Inflector::Baseline => "baseline",
            Inflector::Aligned => "aligned",
        })
    }
}

impl Inflector {
    pub fn artifact(self) -> &'static str {
        match self {
            Inflector::Baseline => "paradigms.baseline.tsv",
            Inflector::Aligned => "paradigms.aligned.tsv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub clusters: Source,
    pub min_lcs_ratio: f64,
    pub min_count: u64,
    pub min_stem_len: usize,
    pub alpha: u64,
    pub beta: u64,
    pub beta_unit: RarityUnit,
    pub n_tags: usize,
    pub em_restarts: usize,
    pub em_max_iters: usize,
    pub embeddings: Source,
    pub emb_dim: usize,
    pub emb_epochs: usize,
    pub emb_window: usize,
    pub emb_negatives: usize,
    pub distance_threshold: f64,
    pub linkage: Linkage,
    pub max_contexts: usize,
    pub predictor_epochs: usize,
    pub inflector: Inflector,
    pub test: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub lowercase: bool,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            clusters: Source::Builtin,
            min_lcs_ratio: 0.75,
            min_count: 2,
            min_stem_len: 2,
            alpha: 50,
            beta: 50,
            beta_unit: RarityUnit::Paradigms,
            n_tags: 3,
            em_restarts: 1,
            em_max_iters: 100,
            embeddings: Source::Builtin,
            emb_dim: 100,
            emb_epochs: 5,
            emb_window: 5,
            emb_negatives: 5,
            distance_threshold: 0.15,
            linkage: Linkage::Average,
            max_contexts: 5,
            predictor_epochs: 10,
            inflector: Inflector::Aligned,
            test: None,
            gold: None,
            lowercase: true,
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl PipelineConfig {
    /// Sets one `key=value` option.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "corpus" => self.corpus = optional_path(value),
            "clusters" => self.clusters = Source::parse(value, "baseline"),
            "min_lcs_ratio" => self.min_lcs_ratio = parse_value(key, value)?,
            "min_count" => self.min_count = parse_value(key, value)?,
            "min_stem_len" => self.min_stem_len = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "beta" => self.beta = parse_value(key, value)?,
            "beta_unit" => {
                self.beta_unit = match value {
                    "paradigms" => RarityUnit::Paradigms,
                    "tokens" => RarityUnit::Tokens,
                    _ => return Err(Error::Config(format!("invalid beta_unit '{value}' (paradigms|tokens)"))),
                }
            }
            "n_tags" => self.n_tags = parse_value(key, value)?,
            "em_restarts" => self.em_restarts = parse_value(key, value)?,
            "em_max_iters" => self.em_max_iters = parse_value(key, value)?,
            "embeddings" => self.embeddings = Source::parse(value, "train"),
            "emb_dim" => self.emb_dim = parse_value(key, value)?,
            "emb_epochs" => self.emb_epochs = parse_value(key, value)?,
            "emb_window" => self.emb_window = parse_value(key, value)?,
            "emb_negatives" => self.emb_negatives = parse_value(key, value)?,
            "distance_threshold" => self.distance_threshold = parse_value(key, value)?,
            "linkage" => self.linkage = value.parse().map_err(Error::Config)?,
            "max_contexts" => self.max_contexts = parse_value(key, value)?,
            "predictor_epochs" => self.predictor_epochs = parse_value(key, value)?,
            "inflector" => self.inflector = value.parse().map_err(Error::Config)?,
            "test" => self.test = optional_path(value),
            "gold" => self.gold = optional_path(value),
            "lowercase" => self.lowercase = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut config = PipelineConfig::default();
        config.apply_text(&textio::read_text(path)?)?;
        Ok(config)
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        vec![
            ("corpus", path(&self.corpus)),
            ("clusters", self.clusters.render("baseline")),
            ("min_lcs_ratio", self.min_lcs_ratio.to_string()),
            ("min_count", self.min_count.to_string()),
            ("min_stem_len", self.min_stem_len.to_string()),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            (
                "beta_unit",
                match self.beta_unit {
                    RarityUnit::Paradigms => "paradigms",
                    RarityUnit::Tokens => "tokens",
                }
                .to_string(),
            ),
            ("n_tags", self.n_tags.to_string()),
            ("em_restarts", self.em_restarts.to_string()),
            ("em_max_iters", self.em_max_iters.to_string()),
            ("embeddings", self.embeddings.render("train")),
            ("emb_dim", self.emb_dim.to_string()),
            ("emb_epochs", self.emb_epochs.to_string()),
            ("emb_window", self.emb_window.to_string()),
            ("emb_negatives", self.emb_negatives.to_string()),
            ("distance_threshold", self.distance_threshold.to_string()),
            ("linkage", self.linkage.to_string()),
            ("max_contexts", self.max_contexts.to_string()),
            ("predictor_epochs", self.predictor_epochs.to_string()),
            ("inflector", self.inflector.to_string()),
            ("test", path(&self.test)),
            ("gold", path(&self.gold)),
            ("lowercase", self.lowercase.to_string()),
            ("seed", self.seed.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
        ]
    }

    /// Every option as a `key=value` line, in a fixed order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Hex digest of all options except the output directory.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.entries() {
            if k != "output_dir" {
                hasher.update(format!("{k}={v}\n"));
            }
        }
        hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..=2.0).contains(&self.distance_threshold) {
            return fail("distance_threshold must lie in [0, 2]");
        }
        if !(self.min_lcs_ratio > 0.0 && self.min_lcs_ratio <= 1.0) {
            return fail("min_lcs_ratio must lie in (0, 1]");
        }
        if self.n_tags == 0 {
            return fail("n_tags must be at least 1");
        }
        if self.em_restarts == 0 {
            return fail("em_restarts must be at least 1");
        }
        if self.emb_dim < 2 {
            return fail("emb_dim must be at least 2");
        }
        if self.max_contexts == 0 {
            return fail("max_contexts must be at least 1");
        }
        Ok(())
    }

    fn tokenizer(&self) -> Tokenizer {
        Tokenizer {
            lowercase: self.lowercase,
        }
    }

    fn normalize(&self, s: &str) -> String {
        if self.lowercase {
            s.to_lowercase()
        } else {
            s.to_string()
        }
    }
}

fn stage<T>(name: &'static str, result: Result<T>) -> Result<T> {
    result.map_err(|e| e.in_stage(name))
}

fn renumber(clustering: &Clustering) -> Clustering {
    Clustering::from_sets(clustering.iter().map(|c| c.forms.clone()))
}

/// Runs pipeline stages over one output directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    header: String,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
        let header = format!("# paracomp config={} seed={}\n", config.hash(), config.seed);
        Ok(Pipeline { config, header })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn artifact_path(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }

    fn write(&self, name: &str, body: &str) -> Result<()> {
        textio::write_text(&self.artifact_path(name), &format!("{}{body}", self.header))
    }

    fn read(&self, name: &str) -> Result<(String, PathBuf)> {
        let path = self.artifact_path(name);
        if !path.exists() {
            return Err(Error::MissingArtifact(path));
        }
        Ok((textio::read_text(&path)?, path))
    }

    fn corpus(&self) -> Result<Corpus> {
        stage("corpus", {
            let path = self
                .config
                .corpus
                .as_ref()
                .ok_or_else(|| Error::Config("no corpus configured".into()));
            path.and_then(|p| load_corpus(p, self.config.tokenizer()))
                .and_then(|c| {
                    if c.is_empty() {
                        Err(Error::InvalidInput("corpus is empty".into()))
                    } else {
                        Ok(c)
                    }
                })
        })
    }

    fn clusters(&self) -> Result<Clustering> {
        let (text, path) = self.read(CLUSTERS)?;
        Ok(renumber(&parse_clusters(&text, &path)?))
    }

    fn test_items(&self, corpus: &Corpus) -> Result<Option<Vec<ContextSample>>> {
        let Some(path) = &self.config.test else {
            return Ok(None);
        };
        let items = parse_test_items(&textio::read_text(path)?, path)?;
        Ok(Some(
            items
                .into_iter()
                .map(|c| {
                    let c = ContextSample::new(
                        self.config.normalize(&c.left),
                        self.config.normalize(&c.target),
                        self.config.normalize(&c.right),
                    );
                    mask_rare(c, corpus, self.config.alpha)
                })
                .collect(),
        ))
    }

    /// Paradigm clustering and abstraction: writes the cluster and abstract
    /// paradigm files.
    pub fn run_cluster(&self) -> Result<()> {
        let corpus = self.corpus()?;
        let clustering = stage("cluster", {
            match &self.config.clusters {
                Source::Builtin => cluster_baseline(&corpus, self.config.min_lcs_ratio, self.config.min_count),
                Source::File(path) => textio::read_text(path).and_then(|t| {
                    let t = if self.config.lowercase { t.to_lowercase() } else { t };
                    parse_clusters(&t, path)
                }),
            }
        })?;
        let clustering = renumber(&remove_subset_clusters(&clustering));
        info!("{} clusters after subset removal", clustering.len());
        self.write(CLUSTERS, &clustering.to_tsv())?;

        let paradigms = stage("abstract", {
            let mut kept = Vec::new();
            let mut rejected = 0;
            for cluster in drop_singletons(&clustering).iter() {
                match abstractify(cluster, self.config.min_stem_len) {
                    Ok(p) => kept.push(p),
                    Err(_) => rejected += 1,
                }
            }
            if rejected > 0 {
                info!("{rejected} clusters rejected for a short stem");
            }
            let forms = build_abstract_forms(&kept);
            let (forms, paradigms) = filter_rare_by(&forms, &kept, self.config.beta, self.config.beta_unit, &corpus);
            info!("{} abstract forms and {} paradigms retained", forms.len(), paradigms.len());
            if paradigms.is_empty() {
                Err(Error::InvalidInput("no abstract paradigm survives the rarity filter".into()))
            } else {
                Ok(paradigms)
            }
        })?;
        self.write(ABSTRACT, &abstraction::to_tsv(&paradigms))
    }

    fn embeddings(&self, corpus: &Corpus) -> Result<EmbeddingTable> {
        stage("embed", {
            match &self.config.embeddings {
                Source::File(path) => load_embeddings(path),
                Source::Builtin => {
                    let options = EmbeddingOptions {
                        dim: self.config.emb_dim,
                        window: self.config.emb_window,
                        epochs: self.config.emb_epochs,
                        negatives: self.config.emb_negatives,
                        seed: self.config.seed,
                        ..EmbeddingOptions::default()
                    };
                    train_embeddings(corpus, &options)
                }
            }
        })
    }

    /// Tagging, embedding and slot alignment.
    pub fn run_align(&self) -> Result<()> {
        let (text, path) = self.read(ABSTRACT)?;
        let paradigms: Vec<AbstractParadigm> = abstraction::parse_tsv(&text, &path)?;
        let clustering = self.clusters()?;
        let corpus = self.corpus()?;

        let fit = stage(
            "posem",
            em_fit(
                &paradigms,
                &EmOptions {
                    n_tags: self.config.n_tags,
                    max_iters: self.config.em_max_iters,
                    restarts: self.config.em_restarts,
                    seed: self.config.seed,
                    ..EmOptions::default()
                },
            ),
        )?;
        info!("EM finished after {} iterations", fit.iterations);
        let tags = assign_pos(&fit.model, &paradigms);
        self.write(POS_MODEL, &fit.model.to_text())?;
        self.write(POS_ASSIGN, &tags.to_tsv())?;

        let table = self.embeddings(&corpus)?;
        if self.config.embeddings == Source::Builtin {
            self.write(EMBEDDINGS, &table.to_text())?;
        }

        let assignment = align_slots(&paradigms, &tags, &table, self.config.distance_threshold, self.config.linkage);
        if assignment.is_empty() {
            return Err(Error::Invariant("slot alignment produced no slots".into()).in_stage("align"));
        }
        self.write(SLOTS, &assignment.to_tsv())?;
        self.write(TRIPLES, &triples_to_tsv(&emit_triples(&clustering, &assignment)))
    }

    fn assignment(&self) -> Result<SlotAssignment> {
        let (text, path) = self.read(SLOTS)?;
        SlotAssignment::parse_tsv(&text, &path)
    }

    /// Trains the slot predictor and, given test items, predicts their slots.
    pub fn run_predict(&self) -> Result<()> {
        let assignment = self.assignment()?;
        let corpus = self.corpus()?;
        let predictor = stage("slotpred", {
            let examples = build_training_data(&corpus, &assignment, self.config.max_contexts, self.config.alpha);
            train_predictor(
                &examples,
                &TrainOptions {
                    epochs: self.config.predictor_epochs,
                    seed: self.config.seed,
                    ..TrainOptions::default()
                },
            )
        })?;
        self.write(PREDICTOR, &predictor.to_text())?;
        let Some(items) = stage("slotpred", self.test_items(&corpus))? else {
            warn!("no test items configured; skipping slot prediction");
            return Ok(());
        };
        let mut out = String::new();
        for item in &items {
            let _ = writeln!(out, "{}", predictor.predict(item, &assignment).to_line(&item.target));
        }
        self.write(PREDICTIONS, &out)
    }

    fn predictions(&self) -> Result<Vec<(String, SlotPrediction)>> {
        let (text, path) = self.read(PREDICTIONS)?;
        textio::body_lines(&text)
            .map(|(line_no, line)| {
                let bad = |m: String| Error::parse(&path, line_no, m);
                let [target, pos, slot, slots] = line.split('\t').collect::<Vec<_>>()[..] else {
                    return Err(bad("expected 4 tab-separated fields".into()));
                };
                let slot_list = |s: &str| -> Result<Vec<SlotId>> {
                    s.split(',').filter(|x| !x.is_empty()).map(|x| x.parse().map_err(bad)).collect()
                };
                Ok((
                    target.to_string(),
                    SlotPrediction {
                        pos: pos.parse().map_err(|_| bad(format!("bad tag '{pos}'")))?,
                        source_slot: slot.parse().map_err(bad)?,
                        target_slots: slot_list(slots)?,
                    },
                ))
            })
            .collect()
    }

    /// Generates a paradigm for every test item with the configured
    /// inflector.
    pub fn run_inflect(&self) -> Result<()> {
        let paradigms: Vec<GeneratedParadigm> = match self.config.inflector {
            Inflector::Aligned => {
                let (text, path) = self.read(TRIPLES)?;
                let model = train_aligned_inflector(&parse_triples(&text, &path)?);
                self.predictions()?
                    .iter()
                    .map(|(target, p)| model.generate(target, p.source_slot, &p.target_slots))
                    .collect()
            }
            Inflector::Baseline => {
                let clustering = self.clusters()?;
                let corpus = self.corpus()?;
                let items = stage("inflect", self.test_items(&corpus))?
                    .ok_or_else(|| Error::Config("the baseline inflector needs test items".into()).in_stage("inflect"))?;
                let n = stage("inflect", choose_n(&clustering))?;
                let ranked = rank_trees(&collect_trees(&clustering));
                items.iter().map(|item| baseline_generate(&item.target, &ranked, n)).collect()
            }
        };
        self.write(self.config.inflector.artifact(), &paradigms_to_tsv(&paradigms))
    }

    /// Scores the generated paradigms against the gold file.
    pub fn run_evaluate(&self) -> Result<EvalReport> {
        let report = stage("eval", {
            let gold_path = self
                .config
                .gold
                .as_ref()
                .ok_or_else(|| Error::Config("no gold file configured".into()))?;
            let gold = load_unimorph(gold_path, self.config.lowercase)?;
            let (text, path) = self.read(self.config.inflector.artifact())?;
            let predicted = parse_paradigms(&text, &path)?;
            let targets: Vec<ContextSample> = predicted
                .iter()
                .map(|p| ContextSample::new("", p.input_form.clone(), ""))
                .collect();
            let paired: Vec<_> = pair_with_gold(&targets, &gold)?.into_iter().map(|i| gold[i].clone()).collect();
            let mut report = bmacc(&predicted, &paired)?;
            if let Ok(clustering) = self.clusters() {
                let gold_sets: Vec<_> = gold.iter().map(|g| g.forms().map(str::to_string).collect()).collect();
                report.bmf1 = Some(bmf1(&clustering, &gold_sets));
            }
            Ok(report)
        })?;
        self.write(REPORT, &report.to_text())?;
        Ok(report)
    }

    /// All stages in order. Prediction, inflection and evaluation run only
    /// when test items (and for evaluation, gold paradigms) are configured.
    pub fn run_all(&self) -> Result<Option<EvalReport>> {
        self.run_cluster()?;
        self.run_align()?;
        self.run_predict()?;
        if self.config.test.is_none() {
            return Ok(None);
        }
        self.run_inflect()?;
        if self.config.gold.is_none() {
            return Ok(None);
        }
        self.run_evaluate().map(Some)
    }
}

pub fn run_pipeline(config: PipelineConfig) -> Result<Option<EvalReport>> {
    Pipeline::new(config)?.run_all()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!((c.alpha, c.beta, c.n_tags, c.max_contexts), (50, 50, 3, 5));
        assert_eq!(c.distance_threshold, 0.15);
        assert_eq!(c.linkage, Linkage::Average);
    }

    #[test]
    fn config_text_round_trip() {
        let mut c = PipelineConfig::default();
        c.apply_text("# comment\ncorpus = a.txt\nclusters=gold.tsv\nbeta=5\nlinkage=single\ninflector=baseline\n")
            .unwrap();
        assert_eq!(c.clusters, Source::File("gold.tsv".into()));
        assert_eq!(c.beta, 5);
        let mut back = PipelineConfig::default();
        back.apply_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn config_errors() {
        let mut c = PipelineConfig::default();
        assert!(matches!(c.set("nope", "1"), Err(Error::Config(_))));
        assert!(matches!(c.set("alpha", "x"), Err(Error::Config(_))));
        assert!(c.apply_text("alpha").is_err());
        c.distance_threshold = 3.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = PipelineConfig::default();
        let b = PipelineConfig {
            output_dir: "elsewhere".into(),
            ..a.clone()
        };
        let c = PipelineConfig { seed: 1, ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn missing_corpus_names_stage() {
        let dir = tempfile::tempdir().unwrap();
        let config = PipelineConfig {
            corpus: Some(dir.path().join("absent.txt")),
            output_dir: dir.path().join("out"),
            ..PipelineConfig::default()
        };
        let err = run_pipeline(config).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "corpus", .. }), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn align_without_abstract_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let p = Pipeline::new(PipelineConfig {
            output_dir: dir.path().to_path_buf(),
            ..PipelineConfig::default()
        })
        .unwrap();
        match p.run_align() {
            Err(Error::MissingArtifact(path)) => assert!(path.ends_with(ABSTRACT)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
