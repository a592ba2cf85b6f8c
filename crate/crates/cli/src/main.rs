//! `paracomp` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal invariant violation.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use paracomp::eval::gold_to_tsv;
use paracomp::eval::toy::{generate_toy_language, parse_toy_spec};
use paracomp::{Error, Pipeline, PipelineConfig, Result};

#[derive(Parser)]
#[command(name = "paracomp", version, about = "Unsupervised paradigm completion from raw text")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage in order.
    Pipeline(ConfigArgs),
    /// Cluster the corpus and abstract the clusters into affix patterns.
    Cluster(ConfigArgs),
    /// Tag paradigms, train embeddings and align slots.
    Align(ConfigArgs),
    /// Train the slot predictor and predict slots for the test items.
    Predict(ConfigArgs),
    /// Generate paradigms for the test items.
    Inflect(ConfigArgs),
    /// Score generated paradigms against gold paradigms.
    Evaluate(ConfigArgs),
    /// Write a synthetic language: corpus, gold paradigms, clusters and test items.
    Toylang(ToyArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// key=value configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one option, e.g. `--set beta=10` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    corpus: Option<String>,
    /// `baseline` or a cluster file.
    #[arg(long)]
    clusters: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    n_tags: Option<String>,
    #[arg(long)]
    distance_threshold: Option<String>,
    /// single, complete or average.
    #[arg(long)]
    linkage: Option<String>,
    #[arg(long)]
    max_contexts: Option<String>,
    /// `train` or a word-vector file.
    #[arg(long)]
    embeddings: Option<String>,
    /// baseline or aligned.
    #[arg(long)]
    inflector: Option<String>,
    /// Test items, `left<TAB>target<TAB>right` per line.
    #[arg(long)]
    test: Option<String>,
    /// Gold paradigms in UniMorph format.
    #[arg(long)]
    gold: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(short, long)]
    output_dir: Option<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        let flags = [
            ("corpus", &self.corpus),
            ("clusters", &self.clusters),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("n_tags", &self.n_tags),
            ("distance_threshold", &self.distance_threshold),
            ("linkage", &self.linkage),
            ("max_contexts", &self.max_contexts),
            ("embeddings", &self.embeddings),
            ("inflector", &self.inflector),
            ("test", &self.test),
            ("gold", &self.gold),
            ("seed", &self.seed),
            ("output_dir", &self.output_dir),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                config.set(key, value)?;
            }
        }
        for item in &self.overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{item}'")))?;
            config.set(key, value)?;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct ToyArgs {
    /// POS and suffixes, e.g. `N:,ta;V:o,as,is` (empty item = no suffix).
    #[arg(long, default_value = "N:,ta;V:o,as,is;A:u,um")]
    spec: String,
    #[arg(long, default_value_t = 30)]
    lemmas: usize,
    #[arg(long, default_value_t = 3000)]
    sentences: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output_dir: PathBuf,
}

fn write(path: PathBuf, body: String) -> Result<()> {
    fs::write(&path, body).map_err(|source| Error::Io { path, source })
}

fn toylang(args: &ToyArgs) -> Result<()> {
    let spec = parse_toy_spec(&args.spec)?;
    let lang = generate_toy_language(&spec, args.lemmas, args.sentences, args.seed)?;
    let dir = &args.output_dir;
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
    write(dir.join("corpus.txt"), lang.corpus_text())?;
    write(dir.join("gold.tsv"), gold_to_tsv(&lang.gold))?;
    write(dir.join("clusters.tsv"), lang.clusters.to_tsv())?;
    write(dir.join("test.tsv"), lang.test_tsv())?;
    println!(
        "wrote {} sentences, {} gold paradigms and {} test items to {}",
        lang.sentences.len(),
        lang.gold.len(),
        lang.test_items.len(),
        dir.display()
    );
    Ok(())
}

fn run(command: &Command) -> Result<()> {
    let (args, step): (&ConfigArgs, fn(&Pipeline) -> Result<()>) = match command {
        Command::Toylang(args) => return toylang(args),
        Command::Pipeline(a) => (a, |p| {
            if let Some(report) = p.run_all()? {
                print!("{}", report.to_text());
            }
            Ok(())
        }),
        Command::Cluster(a) => (a, Pipeline::run_cluster),
        Command::Align(a) => (a, Pipeline::run_align),
        Command::Predict(a) => (a, Pipeline::run_predict),
        Command::Inflect(a) => (a, Pipeline::run_inflect),
        Command::Evaluate(a) => (a, |p| {
            print!("{}", p.run_evaluate()?.to_text());
            Ok(())
        }),
    };
    let pipeline = Pipeline::new(args.load()?)?;
    step(&pipeline)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
