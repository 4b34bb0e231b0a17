use std::collections::HashSet;
use std::time::Duration;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pathex::corpus::live::{Clock, FakeClock, RateLimiter};
use pathex::corpus::synthetic::{article_title, topic_corpus};
use pathex::corpus::{generate_path_from, is_valid_title, CorpusSource, CrawlConfig, LinkPolicy, LocalSnapshot};
use pathex::eval::{brute_force_walk_oracle, evaluate, EvalOptions};
use pathex::features::{
    dhnode_in_out_degree, dht, extract_features, nof_counts, similarity_hyperedge, tfidf_similarity, FeatureConfig,
    HypergraphTriple, TfidfModel,
};
use pathex::graph::{incidence, load_dataset, save_dataset, Dataset, IncidenceMode};
use pathex::model::{
    build_operators, normalize_weights, propagate, Model, ModelConfig, ProjectionMode, Query,
};
use pathex::{density, NavGraph, Trajectory};

fn graph_from(n: usize, mask: &[bool]) -> NavGraph {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..n).map(move |v| (u, v)))
        .filter(|&(u, v)| u != v && mask[u * n + v])
        .collect();
    NavGraph::from_id_pairs((0..n).map(|i| format!("v{i}")).collect(), &pairs, false).unwrap()
}

fn arb_graph(max_n: usize, p: f64) -> impl Strategy<Value = NavGraph> {
    (2..=max_n).prop_flat_map(move |n| prop::collection::vec(prop::bool::weighted(p), n * n).prop_map(move |m| graph_from(n, &m)))
}

fn arb_graph_with_logits(max_n: usize, p: f64) -> impl Strategy<Value = (NavGraph, Vec<f64>)> {
    arb_graph(max_n, p).prop_flat_map(|g| {
        let m = g.edge_count();
        (Just(g), prop::collection::vec(-5.0f64..5.0, m))
    })
}

/// Simple walks picked by `choices`, one per entry, each of up to `max_len` nodes.
fn walks(g: &NavGraph, choices: &[(usize, Vec<usize>)], max_len: usize) -> Vec<Vec<usize>> {
    choices
        .iter()
        .filter_map(|(start, picks)| {
            let mut path = vec![start % g.node_count()];
            for &pick in picks.iter().take(max_len - 1) {
                let here = *path.last().unwrap();
                let next: Vec<usize> = g.successors(here).filter(|v| !path.contains(v)).collect();
                if next.is_empty() {
                    break;
                }
                path.push(next[pick % next.len()]);
            }
            (path.len() >= 2).then_some(path)
        })
        .collect()
}

fn arb_choices() -> impl Strategy<Value = Vec<(usize, Vec<usize>)>> {
    prop::collection::vec((any::<usize>(), prop::collection::vec(any::<usize>(), 6)), 1..12)
}

fn trajectories(paths: Vec<Vec<usize>>, split_seed: usize) -> Vec<Trajectory> {
    paths
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let k = 1 + (split_seed + i) % (p.len() - 1);
            Trajectory::new(i, p, k).unwrap()
        })
        .collect()
}

const WORDS: [&str; 8] = ["river", "church", "king", "port", "valley", "saint", "road", "city"];

fn documents(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{} {} {}", WORDS[i % 8], WORDS[(i * 3 + 1) % 8], WORDS[(i * 5 + 2) % 8])).collect()
}

proptest! {
    #[test]
    fn incidence_column_sums(g in arb_graph(15, 0.3)) {
        prop_assert!(incidence(&g, IncidenceMode::Directed).column_sums().iter().all(|&s| s == 0));
        prop_assert!(incidence(&g, IncidenceMode::Undirected).column_sums().iter().all(|&s| s == 2));
    }

    #[test]
    fn density_is_strictly_increasing_in_edges(n in 2usize..20_000, frac in 0.0f64..1.0) {
        let max = n * (n - 1);
        let m = ((max - 1) as f64 * frac) as usize;
        prop_assert!(density(n, m).unwrap() < density(n, m + 1).unwrap());
    }

    #[test]
    fn dataset_save_load_is_identity(g in arb_graph(12, 0.3), choices in arb_choices(), split in 0usize..10) {
        let trajectories = trajectories(walks(&g, &choices, 7), split);
        let categories = (0..g.node_count()).map(|v| format!("cat{}", v % 3)).collect();
        let d = Dataset { graph: g, trajectories, categories };
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&d, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        for t in &back.trajectories {
            prop_assert!(t.validate(&back.graph).is_ok());
        }
        prop_assert_eq!(back, d);
    }

    #[test]
    fn generated_paths_keep_the_contract(
        seed in any::<u64>(),
        dense in any::<bool>(),
        min_len in 2usize..6,
        extra in 0usize..4,
        window in 1usize..7,
    ) {
        let mut snap = LocalSnapshot::from_documents(topic_corpus(40, 6, seed % 7)).unwrap();
        let mut config = CrawlConfig::new(article_title(0));
        config.policy = if dense { LinkPolicy::Dense } else { LinkPolicy::Sparse };
        config.min_len = min_len;
        config.max_len = min_len + extra;
        config.dense_window = window;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for start in 0..10 {
            let path = generate_path_from(&mut snap, &config, &article_title(start), &mut rng).unwrap();
            let distinct: HashSet<&String> = path.titles.iter().collect();
            prop_assert_eq!(distinct.len(), path.titles.len());
            prop_assert!(path.titles.iter().all(|t| is_valid_title(t)));
            if !path.early_terminated {
                prop_assert!((config.min_len..=config.max_len).contains(&path.titles.len()));
            }
            if dense {
                for k in 1..path.titles.len() {
                    let on_path: HashSet<&str> = path.titles[..k].iter().map(String::as_str).collect();
                    let links = snap.links(&path.titles[k - 1]).unwrap().unwrap();
                    let mut seen = HashSet::new();
                    let window: Vec<&String> = links
                        .iter()
                        .filter(|l| seen.insert(l.as_str()) && is_valid_title(l) && !on_path.contains(l.as_str()) && snap.contains(l))
                        .take(config.dense_window)
                        .collect();
                    prop_assert!(window.contains(&&path.titles[k]));
                }
            }
        }
    }

    #[test]
    fn rate_limiter_spaces_requests(gaps in prop::collection::vec(0u64..2500, 1..30)) {
        let delay = Duration::from_secs(1);
        let limiter = RateLimiter::new(FakeClock::default(), delay);
        let mut stamps = Vec::new();
        for gap in gaps {
            limiter.clock().advance(Duration::from_millis(gap));
            limiter.acquire();
            stamps.push(limiter.clock().now());
        }
        prop_assert!(stamps.windows(2).all(|w| w[1] - w[0] >= delay));
    }

    #[test]
    fn dht_is_an_involution(g in arb_graph(20, 0.2), directed in any::<bool>(), k in 0usize..4, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mode = if directed { IncidenceMode::Directed } else { IncidenceMode::Undirected };
        let t = HypergraphTriple {
            node_features: DMatrix::from_fn(g.node_count(), k, |_, _| rng.gen::<f64>()),
            incidence: incidence(&g, mode),
            edge_features: DMatrix::from_fn(g.edge_count(), k + 1, |_, _| rng.gen::<f64>()),
        };
        prop_assert_eq!(dht(&dht(&t).unwrap()).unwrap(), t);
    }

    #[test]
    fn similarity_is_a_cosine(g in arb_graph(20, 0.2)) {
        let sim = similarity_hyperedge(&g);
        let inc = incidence(&g, IncidenceMode::Undirected);
        for e in g.edges() {
            prop_assert!((0.0..=1.0).contains(&sim[e.id]));
            let ru: Vec<usize> = inc.row(e.src).map(|(c, _)| c).collect();
            let rv: Vec<usize> = inc.row(e.dst).map(|(c, _)| c).collect();
            if ru == rv {
                prop_assert_eq!(sim[e.id], 1.0);
            }
        }
    }

    #[test]
    fn dual_degree_peaks_at_one(g in arb_graph(20, 0.15)) {
        let through = g.edges().iter().any(|e| g.out_degree(e.dst) > 0);
        let top = dhnode_in_out_degree(&g).iter().flat_map(|&(i, o)| [i, o]).fold(0.0, f64::max);
        prop_assert_eq!(top, if through { 1.0 } else { 0.0 });
    }

    #[test]
    fn nof_is_conserved(g in arb_graph(12, 0.3), choices in arb_choices()) {
        let ts = trajectories(walks(&g, &choices, 7), 0);
        let total: u64 = nof_counts(&g, &ts).unwrap().iter().sum();
        prop_assert_eq!(total, ts.iter().map(|t| (t.len() - 1) as u64).sum::<u64>());
    }

    #[test]
    fn tfidf_similarity_is_symmetric(picks in prop::collection::vec(prop::collection::vec(0usize..8, 1..10), 2..8), a in 0usize..8, b in 0usize..8) {
        let docs: Vec<String> = picks.iter().map(|p| p.iter().map(|&i| WORDS[i]).collect::<Vec<_>>().join(" ")).collect();
        let model = TfidfModel::fit(&docs);
        let (x, y) = (&docs[a % docs.len()], &docs[b % docs.len()]);
        prop_assert_eq!(tfidf_similarity(&model, x, y), tfidf_similarity(&model, y, x));
    }

    #[test]
    fn softmax_weights_sum_to_one((g, logits) in arb_graph_with_logits(15, 0.3), scale in 1.0f64..200.0) {
        let scaled: Vec<f64> = logits.iter().map(|z| z * scale).collect();
        let w = normalize_weights(&g, &scaled);
        for v in 0..g.node_count() {
            if g.out_degree(v) > 0 {
                let s: f64 = g.out_edges(v).iter().map(|&e| w[e]).sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn operator_zero_pattern_and_rows((g, logits) in arb_graph_with_logits(12, 0.3)) {
        let ops = build_operators(&g, &normalize_weights(&g, &logits));
        for a in g.edges() {
            let mut sum = 0.0;
            let mut any = false;
            for b in g.edges() {
                let p = ops.p(a.id, b.id);
                if a.dst != b.src || a.src == b.dst {
                    prop_assert_eq!(p, 0.0);
                } else {
                    any = true;
                }
                sum += p;
            }
            if any {
                prop_assert!((sum - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn propagation_keeps_untrapped_mass((g, logits) in arb_graph_with_logits(10, 0.35), h in 1usize..5, start in any::<usize>()) {
        let ops = build_operators(&g, &normalize_weights(&g, &logits));
        let v = start % g.node_count();
        prop_assume!(ops.trapped_count() == 0 && g.out_degree(v) > 0);
        let mut x = vec![0.0; g.node_count()];
        x[v] = 1.0;
        let raw = propagate(&g, &ops, &x, h, ProjectionMode::HeadProjection).unwrap().raw();
        prop_assert!((raw.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn propagation_matches_walk_enumeration((g, logits) in arb_graph_with_logits(10, 0.3), h in 1usize..=3, mass in prop::collection::vec(0.0f64..1.0, 10)) {
        let w = normalize_weights(&g, &logits);
        let ops = build_operators(&g, &w);
        let x = &mass[..g.node_count()];
        let got = propagate(&g, &ops, x, h, ProjectionMode::HeadProjection).unwrap().raw();
        let want = brute_force_walk_oracle(&g, &w, x, h).unwrap();
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn suffix_likelihood_factorizes(g in arb_graph(8, 0.4), choices in arb_choices(), seed in 0u64..100) {
        let paths = walks(&g, &choices, 6);
        let path = paths.iter().find(|p| p.len() >= 4);
        prop_assume!(path.is_some());
        let path = path.unwrap();
        let f = extract_features(&g, &documents(g.node_count()), &[], FeatureConfig::Both).unwrap();
        let model = Model::new(ModelConfig { seed, ..Default::default() }, &g, &f).unwrap();
        let p = model.predictor(&g, &f).unwrap();
        let (prefix, suffix) = path.split_at(1);
        for cut in 1..suffix.len() {
            let whole = p.suffix_likelihood(prefix, suffix).unwrap();
            let head = p.suffix_likelihood(prefix, &suffix[..cut]).unwrap();
            // The rest continues from the last edge of the head, with the
            // prefix's weights.
            let ops = build_operators(&g, &p.edge_weights(prefix).unwrap());
            let mut nodes = vec![prefix[0]];
            nodes.extend_from_slice(suffix);
            let edges: Vec<usize> = nodes.windows(2).map(|w| g.edge_between(w[0], w[1]).unwrap()).collect();
            let tail: f64 = edges[cut - 1..].windows(2).map(|w| ops.p(w[0], w[1])).product();
            prop_assert!((whole - head * tail).abs() <= 1e-12 * whole.max(1e-300).max(1.0));
        }
    }

    #[test]
    fn metric_properties(g in arb_graph(9, 0.4), choices in arb_choices(), seed in 0u64..100, perm_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let paths = walks(&g, &choices, 5);
        let ts = trajectories(paths, seed as usize);
        prop_assume!(!ts.is_empty());
        let n = g.node_count();
        let docs = documents(n);
        let f = extract_features(&g, &docs, &ts, FeatureConfig::Both).unwrap();
        let model = Model::new(ModelConfig { seed, ..Default::default() }, &g, &f).unwrap();
        let p = model.predictor(&g, &f).unwrap();
        let queries: Vec<Query> = ts.iter().map(Query::from_trajectory).collect();
        let m = evaluate(&p, &queries, EvalOptions::default()).unwrap();
        prop_assert!(m.precision_top1 <= m.precision_top5);

        // Oracle-backed target probability.
        let mut oracle_mass = 0.0;
        for q in &queries {
            let w = p.edge_weights(&q.prefix).unwrap();
            let mut x = vec![0.0; n];
            x[q.current()] = 1.0;
            let raw = brute_force_walk_oracle(&g, &w, &x, q.horizon()).unwrap();
            let total: f64 = raw.iter().sum();
            if total > 0.0 {
                oracle_mass += raw[q.target()] / total;
            }
        }
        prop_assert!((100.0 * oracle_mass / queries.len() as f64 - m.target_probability).abs() <= 1e-9);

        // Relabelling nodes and reordering edges, when no step has tied weights.
        let distinct = queries.iter().all(|q| {
            let mut prefix = q.prefix.clone();
            q.suffix.iter().all(|&next| {
                let mut ws: Vec<f64> = p.next_step_weights(&prefix).unwrap().iter().map(|x| x.1).collect();
                prefix.push(next);
                ws.sort_by(f64::total_cmp);
                ws.windows(2).all(|w| w[1] - w[0] > 1e-9)
            })
        });
        prop_assume!(distinct);
        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut titles = vec![String::new(); n];
        let mut docs2 = vec![String::new(); n];
        for v in 0..n {
            titles[perm[v]] = g.title(v).to_string();
            docs2[perm[v]] = docs[v].clone();
        }
        let mut pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (perm[e.src], perm[e.dst])).collect();
        pairs.shuffle(&mut rng);
        let g2 = NavGraph::from_id_pairs(titles, &pairs, false).unwrap();
        let ts2: Vec<Trajectory> = ts
            .iter()
            .map(|t| Trajectory::new(t.path_id, t.node_ids().iter().map(|&v| perm[v]).collect(), t.prefix_len()).unwrap())
            .collect();
        let f2 = extract_features(&g2, &docs2, &ts2, FeatureConfig::Both).unwrap();
        let model2 = Model::new(ModelConfig { seed, ..Default::default() }, &g2, &f2).unwrap();
        let p2 = model2.predictor(&g2, &f2).unwrap();
        let q2: Vec<Query> = ts2.iter().map(Query::from_trajectory).collect();
        let m2 = evaluate(&p2, &q2, EvalOptions::default()).unwrap();
        prop_assert!((m.target_probability - m2.target_probability).abs() <= 1e-9);
        prop_assert_eq!(m.precision_top1, m2.precision_top1);
        prop_assert_eq!(m.precision_top5, m2.precision_top5);
        prop_assert_eq!(m.choice_accuracy, m2.choice_accuracy);
    }
}
