//! Command-line front end. Exit codes: 0 success, 1 usage or configuration
//! error, 2 data error.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::density::write_feature_dump;
use crate::error::{Error, Result};
use crate::pipeline::{ablation, evaluate, training_records, Artifacts, Pipeline, PipelineConfig, Strategy};
use crate::rerank::{train_with_cv, FeatureSet, TrainingRow};
use crate::spotter::{load_questions, ErModel, Question, Vocabulary};
use crate::synthetic::{generate, mini_kg, SyntheticConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Feature dump written next to the re-rank model.
pub const FEATURES_FILE: &str = "features.tsv";

#[derive(Debug, Parser)]
#[command(name = "kglink", version, about = "Joint entity and relation linking over a knowledge graph")]
struct Cli {
    /// JSON configuration; flags override its keys.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse triples and labels, write graph, index and manifest.
    BuildIndex {
        #[arg(long)]
        triples: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        expansions: Option<PathBuf>,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train the entity/relation classifier on the index labels and,
    /// optionally, the gold spans of a dataset.
    TrainEr {
        #[arg(long)]
        artifacts: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train the re-ranker on a gold-annotated dataset.
    TrainReranker {
        #[arg(long)]
        artifacts: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Link one question, a dataset, or questions read from stdin (one per
    /// line, plain text or a JSON object). Prints one JSON result per line.
    Link {
        #[arg(long)]
        artifacts: PathBuf,
        #[arg(long, conflicts_with = "dataset")]
        question: Option<String>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print metrics JSON for a gold-annotated dataset.
    Eval {
        #[arg(long)]
        artifacts: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Write per-question results here, one JSON line each.
        #[arg(long)]
        results: Option<PathBuf>,
        /// Print the cross-validated feature-set MRR matrix instead.
        #[arg(long)]
        ablation: bool,
        /// List sizes for the ablation.
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 30, 50, 100])]
        ks: Vec<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write a seeded synthetic graph and datasets, or the bundled mini graph.
    GenSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        entities: Option<usize>,
        #[arg(long)]
        questions: Option<usize>,
        #[arg(long)]
        train_questions: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mini_kg: bool,
    },
}

#[derive(Debug, Default, Args)]
struct Overrides {
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    hop_cap: Option<u32>,
    #[arg(long)]
    min_score: Option<f64>,
    #[arg(long)]
    rank_weight: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    flip_rate: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    gold_spans: bool,
    #[arg(long)]
    gold_injection: bool,
    #[arg(long)]
    no_adaptive: bool,
    #[arg(long)]
    timings: bool,
}

impl Overrides {
    fn apply(&self, mut cfg: PipelineConfig) -> Result<PipelineConfig> {
        if let Some(v) = self.strategy {
            cfg.strategy = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.hop_cap {
            cfg.hop_cap = v;
        }
        if let Some(v) = self.min_score {
            cfg.min_score = v;
        }
        if let Some(v) = self.rank_weight {
            cfg.rank_weight = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.flip_rate {
            cfg.flip_rate = v;
        }
        if let Some(v) = self.folds {
            cfg.cv_folds = v;
        }
        cfg.gold_spans |= self.gold_spans;
        cfg.gold_injection |= self.gold_injection;
        cfg.timings |= self.timings;
        if self.no_adaptive {
            cfg.adaptive.enabled = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Entry point for the binary: logs to stderr, honours `RUST_LOG`.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let stdin = std::io::stdin();
    run(std::env::args_os(), &mut stdin.lock(), &mut std::io::stdout().lock(), &mut std::io::stderr())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli, input, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Config(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}

fn config(path: Option<&Path>, overrides: &Overrides) -> Result<PipelineConfig> {
    let base = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    overrides.apply(base)
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}").map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn print_line<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string(value)?;
    writeln!(out, "{text}").map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn execute(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<()> {
    let cfg_path = cli.config.as_deref();
    match cli.command {
        Command::BuildIndex { triples, labels, expansions, stopwords, out: dir, overrides } => {
            let cfg = config(cfg_path, &overrides)?;
            let art = Artifacts::build(&triples, &labels, expansions.as_deref(), stopwords.as_deref(), &cfg, &dir)?;
            print_json(
                out,
                &serde_json::json!({
                    "artifacts": dir.display().to_string(),
                    "triples": art.kg.triple_count(),
                    "vertices": art.kg.vertex_count(),
                    "relations": art.kg.label_count(),
                    "graph_nodes": art.oracle.graph().node_count(),
                    "entity_labels": art.index.len(crate::Kind::Entity),
                    "relation_labels": art.index.len(crate::Kind::Relation),
                }),
            )
        }
        Command::TrainEr { artifacts, dataset, overrides } => {
            let cfg = config(cfg_path, &overrides)?;
            let art = Artifacts::load(&artifacts, &cfg)?;
            let mut examples: Vec<(String, crate::Kind)> =
                art.index.labels().map(|(_, label, kind)| (label.to_string(), kind)).collect();
            let from_index = examples.len();
            if let Some(d) = dataset {
                for q in load_questions(&d)? {
                    examples.extend(q.spans.into_iter().flatten().map(|s| (s.phrase, s.kind)));
                }
            }
            let model = ErModel::train(&examples, Vocabulary::from_index(&art.index))?;
            let path = Artifacts::save_er(&artifacts, &cfg, &model)?;
            print_json(
                out,
                &serde_json::json!({
                    "model": path.display().to_string(),
                    "examples": examples.len(),
                    "from_index": from_index,
                    "epochs": model.epochs_run,
                }),
            )
        }
        Command::TrainReranker { artifacts, dataset, overrides } => {
            let cfg = config(cfg_path, &overrides)?;
            let art = Artifacts::load(&artifacts, &cfg)?;
            let questions = load_questions(&dataset)?;
            let records = training_records(&art, &cfg, &questions, cfg.k, true)?;
            let rows: Vec<TrainingRow> = records
                .iter()
                .map(|r| TrainingRow {
                    group: format!("{}#{}", r.question_id, r.keyword),
                    features: r.features,
                    label: r.gold,
                })
                .collect();
            let (model, cv_mrr) = train_with_cv(&rows, FeatureSet::ALL, cfg.cv_folds)?;
            let path = Artifacts::save_reranker(&artifacts, &cfg, &model)?;
            let dump = artifacts.join(FEATURES_FILE);
            write_feature_dump(&dump, &records)?;
            print_json(
                out,
                &serde_json::json!({
                    "model": path.display().to_string(),
                    "features": dump.display().to_string(),
                    "rows": rows.len(),
                    "cv_folds": cfg.cv_folds,
                    "cv_mrr": cv_mrr,
                    "weights": model.feature_names.iter().zip(&model.weights)
                        .map(|(n, w)| (n.clone(), *w)).collect::<std::collections::BTreeMap<_, _>>(),
                }),
            )
        }
        Command::Link { artifacts, question, dataset, overrides } => {
            let cfg = config(cfg_path, &overrides)?;
            let pipeline = Pipeline::new(cfg.clone(), Arc::new(Artifacts::load(&artifacts, &cfg)?))?;
            if let Some(text) = question {
                return print_line(out, &pipeline.link(&Question::new("q-0001", text))?);
            }
            if let Some(d) = dataset {
                for r in pipeline.link_all(&load_questions(&d)?) {
                    print_line(out, &r?)?;
                }
                return Ok(());
            }
            for (i, line) in input.lines().enumerate() {
                let line = line.map_err(|e| Error::io(Path::new("<stdin>"), e))?;
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let q = if line.starts_with('{') {
                    let q: Question = serde_json::from_str(line)?;
                    q.validate()?;
                    q
                } else {
                    Question::new(format!("q-{:04}", i + 1), line)
                };
                print_line(out, &pipeline.link(&q)?)?;
            }
            Ok(())
        }
        Command::Eval { artifacts, dataset, results, ablation: run_ablation, ks, overrides } => {
            let cfg = config(cfg_path, &overrides)?;
            let art = Arc::new(Artifacts::load(&artifacts, &cfg)?);
            let questions = load_questions(&dataset)?;
            if run_ablation {
                let rows = ablation(&art, &cfg, &questions, &ks, cfg.cv_folds)?;
                return print_json(out, &serde_json::json!({ "ablation": rows }));
            }
            let pipeline = Pipeline::new(cfg, art)?;
            let ev = evaluate(&pipeline, &questions)?;
            if let Some(p) = results {
                let mut text = String::new();
                for r in &ev.results {
                    text += &serde_json::to_string(r)?;
                    text.push('\n');
                }
                std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
            }
            print_json(out, &ev.metrics)
        }
        Command::GenSynthetic { out: dir, entities, questions, train_questions, seed, mini_kg: mini } => {
            if let Some(p) = cfg_path {
                PipelineConfig::load(p)?;
            }
            let data = if mini {
                if entities.is_some() || questions.is_some() || train_questions.is_some() || seed.is_some() {
                    return Err(Error::Config("--mini-kg takes no generator options".into()));
                }
                mini_kg()?
            } else {
                let d = SyntheticConfig::default();
                generate(&SyntheticConfig {
                    entities: entities.unwrap_or(d.entities),
                    questions: questions.unwrap_or(d.questions),
                    train_questions: train_questions.unwrap_or(d.train_questions),
                    seed: seed.unwrap_or(d.seed),
                    ..d
                })?
            };
            let files = data.write(&dir)?;
            print_json(out, &files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>())
        }
    }
}
