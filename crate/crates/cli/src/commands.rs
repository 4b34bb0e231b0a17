use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use pathex::corpus::category::{DbpediaClient, DBPEDIA_ENDPOINT};
use pathex::corpus::live::{PoliteTransport, RateLimiter, SystemClock, UreqTransport, WikipediaSource, DEFAULT_POLITENESS_DELAY};
use pathex::corpus::synthetic::{topic_corpus, two_route_corpus};
use pathex::corpus::{categorize_all, generate_dataset, CorpusSource, CrawlConfig, LinkPolicy, LocalSnapshot};
use pathex::eval::{evaluate, run_experiment_matrix, EvalOptions, ExperimentSettings, RunManifest};
use pathex::features::{extract_features, title_documents, FeatureConfig, FeatureMatrix, FeatureSet};
use pathex::graph::wikispeedia::load_wikispeedia;
use pathex::graph::{load_dataset, save_dataset, split_dataset, write_graphml, Dataset, Split};
use pathex::model::{train, DiffusionConfig, Model, ModelConfig, Query, TrainConfig};
use pathex::NavGraph;

use crate::args::*;
use crate::Failure;

const NODE_FEATURES: &str = "node_features.tsv";
const EDGE_FEATURES: &str = "edge_features.tsv";
const CHECKPOINT: &str = "model.json";
const CATEGORY_LOOKUPS_IN_FLIGHT: usize = 4;
const SPARQL_TIMEOUT: Duration = Duration::from_secs(10);
const PAGE_TIMEOUT: Duration = Duration::from_secs(30);

pub fn run(command: Command, invocation: &[String]) -> Result<(), Failure> {
    let line = format!("pathex {}", invocation.join(" "));
    match command {
        Command::BuildDataset(a) => build_dataset(&a, &line),
        Command::ImportWikispeedia(a) => import_wikispeedia(&a, &line),
        Command::SynthCorpus(a) => synth_corpus(&a, &line),
        Command::ExtractFeatures(a) => extract(&a, &line),
        Command::Train(a) => train_cmd(&a, &line),
        Command::Evaluate(a) => evaluate_cmd(&a, &line),
        Command::Predict(a) => predict(&a),
        Command::Experiment(a) => experiment(&a, &line),
    }
}

fn manifest<T: Serialize>(line: &str, args: &T) -> Result<RunManifest, Failure> {
    let config = serde_json::to_value(args).map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(RunManifest::new(line, config))
}

fn json_err(e: serde_json::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn require_dir(path: &Path, what: &str) -> Result<(), Failure> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{what} {} does not exist or is not a directory", path.display())))
    }
}

fn write_dataset_outputs(dataset: &Dataset, out: &Path) -> Result<String, Failure> {
    save_dataset(dataset, out)?;
    let mut w = BufWriter::new(File::create(out.join("graph.graphml"))?);
    write_graphml(&dataset.graph, Some(&dataset.categories), &mut w)?;
    let g = &dataset.graph;
    let density = match g.density() {
        Ok(d) => format!("{d:.3e}"),
        Err(_) => "undefined".to_string(),
    };
    let summary = format!(
        "nodes={} edges={} density={density} paths={}",
        g.node_count(),
        g.edge_count(),
        dataset.trajectories.len()
    );
    fs::write(out.join("summary.txt"), format!("{summary}\n"))?;
    Ok(summary)
}

fn build_dataset(a: &BuildDatasetArgs, line: &str) -> Result<(), Failure> {
    let mut config = CrawlConfig::new(a.seed_title.clone().unwrap_or_default());
    config.num_paths = a.paths;
    config.min_len = a.min_len;
    config.max_len = a.max_len;
    config.policy = match a.policy {
        Policy::Dense => LinkPolicy::Dense,
        Policy::Sparse => LinkPolicy::Sparse,
    };
    config.dense_window = a.dense_window;
    config.rng_seed = a.seed;
    config.window_before_filter = a.window_before_filter;
    config.restart_from_random_prior = a.restart_from_prior;
    config.max_attempts = a.max_attempts;

    let mut generated = match (&a.corpus, a.allow_network) {
        (Some(_), true) => return Err(Failure::Usage("give either --corpus or --allow-network, not both".into())),
        (None, false) => {
            return Err(Failure::Usage("no corpus: pass --corpus DIR, or --allow-network to fetch live".into()))
        }
        (Some(dir), false) => {
            require_dir(dir, "corpus")?;
            let mut snapshot = LocalSnapshot::from_dir(dir)?;
            if a.seed_title.is_none() {
                let first = snapshot.documents().first().ok_or_else(|| Failure::Usage(format!("corpus {} is empty", dir.display())))?;
                config.seed_title = first.title.clone();
            }
            if !snapshot.contains(&config.seed_title) {
                return Err(Failure::Usage(format!("seed article `{}` is not in the corpus", config.seed_title)));
            }
            generate_dataset(&mut snapshot, &config)?
        }
        (None, true) => {
            if a.seed_title.is_none() {
                return Err(Failure::Usage("live fetching needs --seed-title".into()));
            }
            let transport = PoliteTransport::new(
                UreqTransport::new(&a.user_agent, PAGE_TIMEOUT),
                RateLimiter::new(SystemClock::default(), DEFAULT_POLITENESS_DELAY),
            );
            let cache = std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from);
            let mut source = WikipediaSource::new(transport, a.api.clone(), cache);
            generate_dataset(&mut source, &config)?
        }
    };
    match a.categories {
        CategorySource::Offline => {}
        CategorySource::Dbpedia => {
            if !a.allow_network {
                return Err(Failure::Usage("--categories dbpedia needs --allow-network".into()));
            }
            let transport = PoliteTransport::new(
                UreqTransport::new(&a.user_agent, SPARQL_TIMEOUT),
                RateLimiter::new(SystemClock::default(), DEFAULT_POLITENESS_DELAY),
            );
            let client = DbpediaClient::new(transport, DBPEDIA_ENDPOINT);
            let titles: Vec<String> = generated.dataset.graph.nodes().iter().map(|n| n.title.clone()).collect();
            generated.dataset.categories =
                categorize_all(&titles, &client, CATEGORY_LOOKUPS_IN_FLIGHT).into_iter().map(|r| r.category).collect();
        }
    }
    let stats = &generated.stats;
    log::info!(
        "{} walks stopped early, {} discarded, {} short paths kept",
        stats.early_terminated,
        stats.discarded,
        stats.short_accepted
    );
    let summary = write_dataset_outputs(&generated.dataset, &a.out)?;
    let mut m = manifest(line, a)?;
    m.dataset_digest = Some(generated.dataset.digest());
    m.seeds = vec![a.seed];
    m.write(&a.out)?;
    println!("{summary}");
    Ok(())
}

fn import_wikispeedia(a: &ImportWikispeediaArgs, line: &str) -> Result<(), Failure> {
    let import = load_wikispeedia(&a.paths_file, a.links_file.as_deref())?;
    let summary = write_dataset_outputs(&import.dataset, &a.out)?;
    let mut m = manifest(line, a)?;
    m.dataset_digest = Some(import.dataset.digest());
    m.write(&a.out)?;
    println!("{summary} skipped_revisits={} skipped_short={}", import.skipped_revisits, import.skipped_short);
    Ok(())
}

fn synth_corpus(a: &SynthCorpusArgs, line: &str) -> Result<(), Failure> {
    let docs = match a.kind {
        CorpusKind::Topics => topic_corpus(a.articles, a.links, a.seed),
        CorpusKind::TwoRoute => two_route_corpus(),
    };
    let count = docs.len();
    LocalSnapshot::from_documents(docs)?.write_dir(&a.out)?;
    manifest(line, a)?.write(&a.out)?;
    println!("wrote {count} articles to {}", a.out.display());
    Ok(())
}

fn parse_ratios(text: &str) -> Result<[f64; 3], Failure> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("--split expects three comma-separated numbers, got `{text}`")))?;
    <[f64; 3]>::try_from(parts).map_err(|_| Failure::Usage(format!("--split expects three comma-separated numbers, got `{text}`")))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, Failure> {
    text.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| Failure::Usage(format!("bad {what} `{p}` in `{text}`"))))
        .collect()
}

fn documents(graph: &NavGraph, corpus: Option<&Path>) -> Result<Vec<String>, Failure> {
    match corpus {
        Some(dir) => {
            require_dir(dir, "corpus")?;
            Ok(LocalSnapshot::from_dir(dir)?.node_documents(graph))
        }
        None => {
            log::warn!("no --corpus given; article titles stand in for article texts");
            Ok(title_documents(graph))
        }
    }
}

fn split_of(dataset: &Dataset, split: &SplitArgs) -> Result<Split, Failure> {
    Ok(split_dataset(&dataset.trajectories, parse_ratios(&split.split)?, split.split_seed)?)
}

fn extract(a: &ExtractFeaturesArgs, line: &str) -> Result<(), Failure> {
    let dataset = load_dataset(&a.dataset)?;
    let docs = documents(&dataset.graph, a.corpus.as_deref())?;
    let split = split_of(&dataset, &a.split)?;
    let set = extract_features(&dataset.graph, &docs, &split.train, a.features)?;
    fs::create_dir_all(&a.out)?;
    set.nodes.save(&a.out.join(NODE_FEATURES))?;
    set.edges.save(&a.out.join(EDGE_FEATURES))?;
    let mut m = manifest(line, a)?;
    m.dataset_digest = Some(dataset.digest());
    m.write(&a.out)?;
    println!(
        "{}: {} node columns, {} edge columns ({})",
        a.features,
        set.nodes.width(),
        set.edges.width(),
        set.edges.columns.join(", ")
    );
    Ok(())
}

/// Features written by extract-features together with the options that
/// produced them.
struct LoadedFeatures {
    set: FeatureSet,
    run: ExtractFeaturesArgs,
}

fn load_features(dir: &Path, dataset: &Dataset) -> Result<LoadedFeatures, Failure> {
    require_dir(dir, "features directory")?;
    let path = dir.join(pathex::eval::MANIFEST_FILE);
    if !path.is_file() {
        return Err(Failure::Usage(format!("{} has no manifest; run extract-features first", dir.display())));
    }
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(&path)?).map_err(json_err)?;
    let run: ExtractFeaturesArgs = serde_json::from_value(m.config).map_err(json_err)?;
    if m.dataset_digest.as_deref() != Some(dataset.digest().as_str()) {
        return Err(Failure::Runtime(format!("features in {} were extracted from a different dataset", dir.display())));
    }
    let nodes = FeatureMatrix::load(&dir.join(NODE_FEATURES))?;
    let edges = FeatureMatrix::load(&dir.join(EDGE_FEATURES))?;
    if edges.columns != run.features.edge_columns() {
        return Err(Failure::Runtime(format!("edge feature columns do not match configuration {}", run.features)));
    }
    Ok(LoadedFeatures { set: FeatureSet { config: run.features, nodes, edges }, run })
}

fn model_config(a: &ModelArgs, seed: u64) -> Result<ModelConfig, Failure> {
    let hidden = if a.hidden.trim() == "none" { Vec::new() } else { parse_list(&a.hidden, "hidden width")? };
    Ok(ModelConfig { hidden, diffusion: DiffusionConfig { depth: a.depth, decay: a.decay }, seed })
}

fn train_config(a: &ModelArgs) -> TrainConfig {
    TrainConfig { learning_rate: a.learning_rate, epochs: a.epochs, patience: a.patience, ..TrainConfig::default() }
}

fn train_cmd(a: &TrainArgs, line: &str) -> Result<(), Failure> {
    let dataset = load_dataset(&a.dataset)?;
    let features = load_features(&a.features_dir, &dataset)?;
    let split = split_of(&dataset, &features.run.split)?;
    let initial = Model::new(model_config(&a.model, a.seed)?, &dataset.graph, &features.set)?;
    let outcome = train(&initial, &dataset.graph, &features.set, &split.train, &split.validation, &train_config(&a.model))?;
    fs::create_dir_all(&a.out)?;
    outcome.model.save(&a.out.join(CHECKPOINT))?;
    let mut history = String::from("epoch\ttrain_loss\tvalidation_loss\n");
    for r in &outcome.history {
        history.push_str(&format!("{}\t{}\t{}\n", r.epoch, r.train_loss, r.validation_loss));
    }
    fs::write(a.out.join("history.tsv"), history)?;
    let mut m = manifest(line, a)?;
    m.dataset_digest = Some(dataset.digest());
    m.seeds = vec![a.seed];
    m.write(&a.out)?;
    println!(
        "trained {} epochs{}; best epoch {}; checkpoint {}",
        outcome.history.len(),
        if outcome.stopped_early { " (stopped early)" } else { "" },
        outcome.best_epoch,
        a.out.join(CHECKPOINT).display()
    );
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs, line: &str) -> Result<(), Failure> {
    if !a.checkpoint.is_file() {
        return Err(Failure::Usage(format!("checkpoint {} does not exist", a.checkpoint.display())));
    }
    let dataset = load_dataset(&a.dataset)?;
    let features = load_features(&a.features_dir, &dataset)?;
    let model = Model::load(&a.checkpoint)?;
    let predictor = model.predictor(&dataset.graph, &features.set)?;
    let split = split_of(&dataset, &features.run.split)?;
    let part = match a.on {
        SplitPart::Train => &split.train,
        SplitPart::Validation => &split.validation,
        SplitPart::Test => &split.test,
    };
    let queries: Vec<Query> = part.iter().map(Query::from_trajectory).collect();
    let options = EvalOptions { crossroads: a.eval.crossroads, projection: a.eval.projection };
    let metrics = evaluate(&predictor, &queries, options)?;
    fs::create_dir_all(&a.out)?;
    let mut json = serde_json::to_string_pretty(&metrics).map_err(json_err)?;
    json.push('\n');
    fs::write(a.out.join("metrics.json"), json)?;
    let choice = metrics.choice_accuracy.map_or("NA".to_string(), |c| c.to_string());
    let tsv = format!(
        "target_probability\ttarget_support\tchoice_accuracy\tprecision_top1\tprecision_top5\tqueries\n{}\t{}\t{choice}\t{}\t{}\t{}\n",
        metrics.target_probability, metrics.target_support, metrics.precision_top1, metrics.precision_top5, metrics.queries
    );
    fs::write(a.out.join("metrics.tsv"), &tsv)?;
    let mut m = manifest(line, a)?;
    m.dataset_digest = Some(dataset.digest());
    m.seeds = vec![model.config.seed];
    m.write(&a.out)?;
    print!("{tsv}");
    Ok(())
}

fn predict(a: &PredictArgs) -> Result<(), Failure> {
    if !a.checkpoint.is_file() {
        return Err(Failure::Usage(format!("checkpoint {} does not exist", a.checkpoint.display())));
    }
    let dataset = load_dataset(&a.dataset)?;
    let features = load_features(&a.features_dir, &dataset)?;
    let model = Model::load(&a.checkpoint)?;
    let g = &dataset.graph;
    let predictor = model.predictor(g, &features.set)?;
    let prefix: Vec<usize> = a
        .prefix
        .split(',')
        .map(|t| {
            let title = t.trim().replace("%2C", ",");
            g.node_id(&title).ok_or(pathex::Error::UnknownTitle(title))
        })
        .collect::<Result<_, _>>()?;
    let candidates = predictor.top_suffixes(&prefix, a.horizon, a.top)?;
    let names = |ids: &[usize]| ids.iter().map(|&v| g.title(v)).collect::<Vec<_>>().join(" -> ");
    println!("prefix\t{}", names(&prefix));
    println!("rank\tsuffix\tprobability");
    for (i, c) in candidates.iter().enumerate() {
        println!("{}\t{}\t{:.4}", i + 1, names(&c.nodes), c.probability);
    }
    Ok(())
}

fn experiment(a: &ExperimentArgs, line: &str) -> Result<(), Failure> {
    let dataset = load_dataset(&a.dataset)?;
    let docs = documents(&dataset.graph, a.corpus.as_deref())?;
    let configs: Vec<FeatureConfig> =
        if a.features.trim() == "all" { FeatureConfig::ALL.to_vec() } else { parse_list(&a.features, "feature configuration")? };
    let seeds: Vec<u64> = parse_list(&a.seeds, "seed")?;
    let settings = ExperimentSettings {
        model: model_config(&a.model, 0)?,
        train: train_config(&a.model),
        split_ratios: parse_ratios(&a.split.split)?,
        split_seed: a.split.split_seed,
        eval: EvalOptions { crossroads: a.eval.crossroads, projection: a.eval.projection },
    };
    let label = match &a.label {
        Some(l) => l.clone(),
        None => a.dataset.file_name().map_or("dataset".to_string(), |n| n.to_string_lossy().into_owned()),
    };
    let report = run_experiment_matrix(&label, &dataset, &docs, &configs, &seeds, &settings)?;
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("report.tsv"), report.to_tsv())?;
    fs::write(a.out.join("runs.tsv"), report.runs_tsv())?;
    fs::write(a.out.join("table.txt"), report.to_table())?;
    let mut json = serde_json::to_string_pretty(&report).map_err(json_err)?;
    json.push('\n');
    fs::write(a.out.join("report.json"), json)?;
    let mut m = manifest(line, a)?;
    m.dataset_digest = Some(dataset.digest());
    m.seeds = seeds;
    m.write(&a.out)?;
    print!("{}", report.to_table());
    match report.dual_improves_precision_top5() {
        Some(true) => println!("a dual configuration beats original edges on precision top5"),
        Some(false) => println!("no dual configuration beats original edges on precision top5"),
        None => {}
    }
    Ok(())
}
