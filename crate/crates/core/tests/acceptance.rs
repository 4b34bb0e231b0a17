//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! test fails if any binding check fails.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pathex::corpus::synthetic::{article_title, topic_corpus, two_route_corpus};
use pathex::corpus::{
    generate_dataset, generate_path_from, is_valid_title, CorpusSource, CrawlConfig, LinkPolicy, LocalSnapshot,
};
use pathex::eval::{brute_force_walk_oracle, evaluate, run_experiment_matrix, EvalOptions, ExperimentSettings};
use pathex::features::{
    dhnode_in_out_degree, dht, extract_features, similarity_hyperedge, FeatureConfig, HypergraphTriple,
};
use pathex::graph::{incidence, load_dataset, save_dataset, Dataset, IncidenceMode};
use pathex::model::{
    build_operators, loss, loss_and_gradient, normalize_weights, propagate, train, Model, ModelConfig, PreparedBatch,
    ProjectionMode, Query, TrainConfig,
};
use pathex::{density, NavGraph, Trajectory};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_graph(rng: &mut ChaCha8Rng, max_n: usize, p: f64) -> NavGraph {
    let n = rng.gen_range(2..=max_n);
    let titles: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(p) {
                pairs.push((u, v));
            }
        }
    }
    NavGraph::from_id_pairs(titles, &pairs, false).unwrap()
}

fn random_logits(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

/// A random simple walk of up to `max_len` nodes, or `None` if it stalls
/// before two nodes.
fn random_walk(rng: &mut ChaCha8Rng, g: &NavGraph, max_len: usize) -> Option<Vec<usize>> {
    let mut path = vec![rng.gen_range(0..g.node_count())];
    while path.len() < max_len {
        let here = *path.last().unwrap();
        let next: Vec<usize> = g.successors(here).filter(|v| !path.contains(v)).collect();
        if next.is_empty() {
            break;
        }
        path.push(next[rng.gen_range(0..next.len())]);
    }
    (path.len() >= 2).then_some(path)
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn density_reproduction() -> Outcome {
    let start = Instant::now();
    // Printed value, half a unit in its last printed place.
    let cases = [(7307, 10612, 2e-4, 0.5e-4), (912, 1311, 1.58e-3, 0.005e-3), (4604, 119882, 5.66e-3, 0.005e-3)];
    let mut ok = true;
    let mut got = Vec::new();
    for (n, m, printed, half_ulp) in cases {
        let d = density(n, m).unwrap();
        ok &= (d - printed).abs() <= half_ulp;
        got.push(format!("{d:.3e}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_millis(1);
    outcome(ok, format!("{} in {elapsed:?}", got.join(", ")))
}

fn dht_involution() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ok = true;
    for _ in 0..200 {
        let g = random_graph(&mut rng, 50, 0.08);
        let (n, m) = (g.node_count(), g.edge_count());
        let mode = if rng.gen_bool(0.5) { IncidenceMode::Directed } else { IncidenceMode::Undirected };
        let t = HypergraphTriple {
            node_features: DMatrix::from_fn(n, 3, |_, _| rng.gen_range(-1.0..1.0)),
            incidence: incidence(&g, mode),
            edge_features: DMatrix::from_fn(m, 2, |_, _| rng.gen_range(-1.0..1.0)),
        };
        let back = dht(&dht(&t).unwrap()).unwrap();
        ok &= back == t;
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    outcome(ok, format!("200 graphs in {elapsed:?}"))
}

fn non_backtracking_operator() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut pattern_errors, mut sum_errors, mut rows) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let g = random_graph(&mut rng, 15, 0.25);
        let w = normalize_weights(&g, &random_logits(&mut rng, g.edge_count()));
        let ops = build_operators(&g, &w);
        for a in 0..g.edge_count() {
            let ea = g.edge(a);
            let allowed: Vec<usize> = g.out_edges(ea.dst).iter().copied().filter(|&b| g.edge(b).dst != ea.src).collect();
            for b in 0..g.edge_count() {
                let eb = g.edge(b);
                let should = eb.src == ea.dst && eb.dst != ea.src;
                if (ops.p(a, b) != 0.0) != should {
                    pattern_errors += 1;
                }
            }
            if !allowed.is_empty() {
                rows += 1;
                let s: f64 = (0..g.edge_count()).map(|b| ops.p(a, b)).sum();
                worst = worst.max((s - 1.0).abs());
                if (s - 1.0).abs() > 1e-12 {
                    sum_errors += 1;
                }
            }
        }
    }
    outcome(
        pattern_errors == 0 && sum_errors == 0,
        format!("{pattern_errors} pattern errors, {sum_errors} of {rows} rows off, worst row-sum error {worst:.1e}"),
    )
}

fn walk_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let g = random_graph(&mut rng, 10, 0.3);
        let w = normalize_weights(&g, &random_logits(&mut rng, g.edge_count()));
        let ops = build_operators(&g, &w);
        let h = 1 + i % 3;
        let mut x: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= total);
        let got = propagate(&g, &ops, &x, h, ProjectionMode::HeadProjection).unwrap().raw();
        let want = brute_force_walk_oracle(&g, &w, &x, h).unwrap();
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(worst <= 1e-9 && elapsed < Duration::from_secs(10), format!("max deviation {worst:.1e} in {elapsed:?}"))
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    while instances < 5 {
        let g = random_graph(&mut rng, 9, 0.35);
        let mut trajectories = Vec::new();
        for k in 0..6 {
            if let Some(p) = random_walk(&mut rng, &g, 5) {
                let prefix_len = rng.gen_range(1..p.len());
                trajectories.push(Trajectory::new(k, p, prefix_len).unwrap());
            }
        }
        if trajectories.is_empty() {
            continue;
        }
        let docs: Vec<String> = (0..g.node_count()).map(|i| format!("word{} shared w{}", i % 3, i)).collect();
        let f = extract_features(&g, &docs, &trajectories, FeatureConfig::Both).unwrap();
        let mut model = Model::new(ModelConfig { hidden: vec![6, 5], seed: instances as u64, ..Default::default() }, &g, &f).unwrap();
        // Larger parameters than the default init, so the network is far from linear.
        let params: Vec<f64> = model.mlp.params().iter().map(|_| rng.gen_range(-0.8..0.8)).collect();
        model.mlp.set_params(&params);
        let predictor = model.predictor(&g, &f).unwrap();
        let queries: Vec<Query> = trajectories.iter().flat_map(Query::all_splits).collect();
        let batch = PreparedBatch::new(&predictor, &queries).unwrap();
        let (_, grad) = loss_and_gradient(&model, &batch).unwrap();
        let step = 1e-5;
        for (i, &analytic) in grad.iter().enumerate() {
            let mut probe = model.clone();
            let mut p = params.clone();
            p[i] += step;
            probe.mlp.set_params(&p);
            let up = loss(&probe, &batch).unwrap();
            p[i] -= 2.0 * step;
            probe.mlp.set_params(&p);
            let down = loss(&probe, &batch).unwrap();
            let numeric = (up - down) / (2.0 * step);
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        instances += 1;
    }
    outcome(worst <= 1e-4, format!("worst relative error {worst:.1e} over 5 instances"))
}

fn dht_feature_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut mismatches, mut out_of_range, mut max_violations) = (0, 0, 0);
    for _ in 0..100 {
        let g = random_graph(&mut rng, 25, 0.12);
        let m = g.edge_count();
        let dense = incidence(&g, IncidenceMode::Undirected).to_dense();
        let sim = similarity_hyperedge(&g);
        for e in 0..m {
            let (u, v) = (g.edge(e).src, g.edge(e).dst);
            let (ru, rv) = (dense.row(u), dense.row(v));
            let want = ru.dot(&rv) / (ru.norm() * rv.norm());
            mismatches += usize::from((sim[e] - want).abs() > 1e-15);
            out_of_range += usize::from(!(0.0..=1.0).contains(&sim[e]));
        }
        // Every pair of consecutive edges a→b is a through-path: it adds one
        // to a's outgoing and one to b's incoming dual degree.
        let (mut din, mut dout) = (vec![0usize; m], vec![0usize; m]);
        for a in 0..m {
            for b in 0..m {
                if g.edge(a).dst == g.edge(b).src {
                    dout[a] += 1;
                    din[b] += 1;
                }
            }
        }
        let dmax = din.iter().chain(&dout).copied().max().unwrap_or(0);
        let got = dhnode_in_out_degree(&g);
        for e in 0..m {
            let want = if dmax == 0 { (0.0, 0.0) } else { (din[e] as f64 / dmax as f64, dout[e] as f64 / dmax as f64) };
            mismatches += usize::from(got[e] != want);
        }
        if dmax > 0 {
            let top = got.iter().flat_map(|&(i, o)| [i, o]).fold(0.0, f64::max);
            max_violations += usize::from(top != 1.0);
        }
    }
    outcome(
        mismatches == 0 && out_of_range == 0 && max_violations == 0,
        format!("{mismatches} mismatches, {out_of_range} similarities outside [0, 1], {max_violations} graphs with max dual degree ≠ 1"),
    )
}

fn overfit_two_routes() -> Outcome {
    let start = Instant::now();
    let snapshot = LocalSnapshot::from_documents(two_route_corpus()).unwrap();
    let mut source = snapshot.clone();
    let mut crawl = CrawlConfig::new("Start");
    crawl.num_paths = 100;
    crawl.min_len = 4;
    crawl.max_len = 4;
    crawl.rng_seed = 7;
    let dataset = generate_dataset(&mut source, &crawl).unwrap().dataset;
    let g = &dataset.graph;
    let docs = snapshot.node_documents(g);
    let f = extract_features(g, &docs, &dataset.trajectories, FeatureConfig::Original).unwrap();
    let initial = Model::new(ModelConfig::default(), g, &f).unwrap();
    let outcome_ = train(&initial, g, &f, &dataset.trajectories, &[], &TrainConfig::default()).unwrap();
    let predictor = outcome_.model.predictor(g, &f).unwrap();
    let queries: Vec<Query> = dataset.trajectories.iter().map(Query::from_trajectory).collect();
    let metrics = evaluate(&predictor, &queries, EvalOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let routes: HashSet<&[usize]> = dataset.trajectories.iter().map(|t| t.node_ids()).collect();
    outcome(
        metrics.precision_top1 >= 95.0 && metrics.target_probability >= 90.0 && elapsed < Duration::from_secs(60),
        format!(
            "{} distinct routes, precision top1 {:.2}%, target probability {:.2}%, {} epochs in {elapsed:?}",
            routes.len(),
            metrics.precision_top1,
            metrics.target_probability,
            outcome_.history.len()
        ),
    )
}

fn path_generation_contract() -> Outcome {
    let docs = topic_corpus(120, 9, 8);
    let mut snap = LocalSnapshot::from_documents(docs).unwrap();
    let mut config = CrawlConfig::new(article_title(0));
    config.policy = LinkPolicy::Dense;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut revisits, mut invalid, mut bad_len, mut outside_window, mut early) = (0, 0, 0, 0, 0);
    for i in 0..10_000 {
        let start = article_title(i % 120);
        let path = generate_path_from(&mut snap, &config, &start, &mut rng).unwrap();
        let distinct: HashSet<&String> = path.titles.iter().collect();
        revisits += usize::from(distinct.len() != path.titles.len());
        invalid += path.titles.iter().filter(|t| !is_valid_title(t)).count();
        if path.early_terminated {
            early += 1;
        } else {
            bad_len += usize::from(!(4..=7).contains(&path.titles.len()));
        }
        // The window is the first five links that pass the filter, are not on
        // the path yet and exist in the corpus.
        for k in 1..path.titles.len() {
            let on_path: HashSet<&str> = path.titles[..k].iter().map(String::as_str).collect();
            let links = snap.links(&path.titles[k - 1]).unwrap().unwrap();
            let mut seen = HashSet::new();
            let window: Vec<&String> = links
                .iter()
                .filter(|l| seen.insert(l.as_str()) && is_valid_title(l) && !on_path.contains(l.as_str()) && snap.contains(l))
                .take(5)
                .collect();
            outside_window += usize::from(!window.contains(&&path.titles[k]));
        }
    }
    outcome(
        revisits + invalid + bad_len + outside_window == 0,
        format!("{revisits} revisits, {invalid} invalid titles, {bad_len} bad lengths, {outside_window} off-window steps, {early} early stops"),
    )
}

fn experiment_matrix() -> (Outcome, Option<bool>) {
    let dir = fixtures().join("synthetic-300");
    let dataset = match load_dataset(&dir.join("dataset")) {
        Ok(d) => d,
        Err(e) => return (outcome(false, format!("cannot load bundled dataset: {e}")), None),
    };
    let corpus = LocalSnapshot::from_dir(&dir.join("corpus")).unwrap();
    let docs = corpus.node_documents(&dataset.graph);
    let settings = ExperimentSettings::default();
    let seeds = [0, 1, 2];
    let start = Instant::now();
    let a = run_experiment_matrix("synthetic-300", &dataset, &docs, &FeatureConfig::ALL, &seeds, &settings).unwrap();
    let elapsed = start.elapsed();
    let b = run_experiment_matrix("synthetic-300", &dataset, &docs, &FeatureConfig::ALL, &seeds, &settings).unwrap();
    let same = a.to_tsv() == b.to_tsv() && a.runs_tsv() == b.runs_tsv() && a.to_table() == b.to_table();
    let complete = a.summaries.len() == 4 && a.to_table().lines().count() == 7;
    println!("{}", a.to_table());
    (
        outcome(
            dataset.trajectories.len() == 300 && same && complete && elapsed < Duration::from_secs(300),
            format!("{} paths, 4 configurations x {} seeds in {elapsed:?}, rerun byte-identical: {same}", dataset.trajectories.len(), seeds.len()),
        ),
        a.dual_improves_precision_top5(),
    )
}

fn dataset_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut differing = 0;
    let root = tempfile::tempdir().unwrap();
    for i in 0..50 {
        let g = loop {
            let g = random_graph(&mut rng, 20, 0.2);
            if g.edge_count() > 0 {
                break g;
            }
        };
        let mut trajectories = Vec::new();
        for k in 0..rng.gen_range(1..15) {
            if let Some(p) = random_walk(&mut rng, &g, 7) {
                let prefix_len = rng.gen_range(1..p.len());
                trajectories.push(Trajectory::new(k, p, prefix_len).unwrap());
            }
        }
        let categories = (0..g.node_count()).map(|v| ["Geography", "History", "Sport"][(v + i) % 3].to_string()).collect();
        let d = Dataset { graph: g, trajectories, categories };
        let (a, b) = (root.path().join(format!("a{i}")), root.path().join(format!("b{i}")));
        save_dataset(&d, &a).unwrap();
        save_dataset(&load_dataset(&a).unwrap(), &b).unwrap();
        differing += usize::from(read_dir_bytes(&a) != read_dir_bytes(&b));
    }
    outcome(differing == 0, format!("{differing} of 50 datasets changed"))
}

fn read_dir_bytes(dir: &Path) -> HashMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn report(name: &str, o: &Outcome, failed: &mut Vec<String>) {
    println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    if !o.pass {
        failed.push(name.to_string());
    }
}

// Runs without the test harness so the per-criterion lines are never captured.
fn main() {
    let checks: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 density reproduction", density_reproduction),
        ("2 DHT involution", dht_involution),
        ("3 non-backtracking operator", non_backtracking_operator),
        ("4 walk-oracle equivalence", walk_oracle_equivalence),
        ("5 gradient correctness", gradient_correctness),
        ("6 DHT-feature oracle", dht_feature_oracle),
        ("7 overfit smoke test", overfit_two_routes),
        ("8 path-generation contract", path_generation_contract),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        report(name, &check(), &mut failed);
    }
    let (o, directional) = experiment_matrix();
    report("9 experiment matrix", &o, &mut failed);
    let verdict = match directional {
        Some(true) => "a dual configuration beats original edges on precision top5",
        Some(false) => "no dual configuration beats original edges on precision top5",
        None => "not evaluated",
    };
    println!("criterion 9 directional check (non-binding): {verdict}");
    report("10 dataset round trip", &dataset_round_trip(), &mut failed);
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failed {failed:?}");
        std::process::exit(1);
    }
}
