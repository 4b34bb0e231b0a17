//! Deterministic synthetic corpora for tests, fixtures and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ArticleDocument;

const TOPICS: [[&str; 8]; 5] = [
    ["river", "valley", "delta", "lake", "mountain", "plain", "gulf", "coast"],
    ["empire", "king", "battle", "dynasty", "conquest", "general", "siege", "treaty"],
    ["church", "monastery", "bishop", "saint", "icon", "liturgy", "abbey", "chapel"],
    ["railway", "road", "port", "airport", "bridge", "highway", "station", "ferry"],
    ["football", "club", "stadium", "league", "cup", "season", "coach", "derby"],
];

const COMMON: [&str; 10] = ["greece", "macedonia", "region", "history", "city", "village", "century", "population", "municipality", "area"];

const NOISE_LINKS: [&str; 6] = ["Talk:Main Page", "File:Map.svg", "1987", "ISO 3166-1", "User:Example", "Help:Contents"];

/// Title of article `i` in [`topic_corpus`].
pub fn article_title(i: usize) -> String {
    format!("Article {i:03}")
}

/// `n` articles in five topics. Each links to `links_per_article` other
/// articles (mostly within its topic) with one non-article link mixed in.
/// Walks should start at `article_title(0)`.
pub fn topic_corpus(n: usize, links_per_article: usize, seed: u64) -> Vec<ArticleDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let topic = i % TOPICS.len();
            let words: Vec<&str> = (0..40)
                .map(|_| {
                    if rng.gen_bool(0.7) {
                        TOPICS[topic][rng.gen_range(0..8)]
                    } else {
                        COMMON[rng.gen_range(0..COMMON.len())]
                    }
                })
                .collect();
            let same: Vec<usize> = (0..n).filter(|&j| j != i && j % TOPICS.len() == topic).collect();
            let other: Vec<usize> = (0..n).filter(|&j| j != i && j % TOPICS.len() != topic).collect();
            let mut targets: Vec<usize> = Vec::with_capacity(links_per_article);
            while targets.len() < links_per_article.min(n.saturating_sub(1)) {
                let pool = if rng.gen_bool(0.7) && !same.is_empty() { &same } else { &other };
                let Some(&j) = pool.choose(&mut rng) else { break };
                if !targets.contains(&j) {
                    targets.push(j);
                }
            }
            let mut links: Vec<String> = targets.into_iter().map(article_title).collect();
            let at = rng.gen_range(0..=links.len());
            links.insert(at, NOISE_LINKS[rng.gen_range(0..NOISE_LINKS.len())].to_owned());
            ArticleDocument { title: article_title(i), links, body: words.join(" ") }
        })
        .collect()
}

/// A 20-article corpus on which every walk from `Start` follows one of two
/// routes, `Start, Left, Junction, Right` or `Start, Right, Junction, Left`.
///
/// The choice at `Junction` is forced by the revisit ban, so a predictor has
/// to use the walk history to rank the correct successor first. Sixteen of
/// the articles carry invalid titles and are never entered.
pub fn two_route_corpus() -> Vec<ArticleDocument> {
    let invalid: Vec<String> = [
        "Talk:Start", "Talk:Left", "Talk:Right", "Talk:Junction", "File:Left.png", "File:Right.png",
        "File:Junction.svg", "User:Cartographer", "User:Surveyor", "ISO 3166", "ISO 639", "1912", "1913",
        "Help:Routes", "Portal:Roads", "Sign #4",
    ]
    .map(str::to_owned)
    .to_vec();
    let doc = |title: &str, links: &[&str], body: &str| ArticleDocument {
        title: title.to_owned(),
        links: links.iter().map(|s| s.to_string()).collect(),
        body: body.to_owned(),
    };
    let mut docs = vec![
        doc("Start", &["Talk:Start", "Left", "1912", "Right"], "start of both routes"),
        doc("Left", &["Junction", "File:Left.png", "Talk:Left"], "left branch towards the junction"),
        doc("Right", &["ISO 639", "Junction", "Talk:Right"], "right branch towards the junction"),
        doc("Junction", &["Left", "User:Surveyor", "Right", "Sign #4"], "junction where the routes cross"),
    ];
    for (i, title) in invalid.iter().enumerate() {
        let back = ["Start", "Left", "Right", "Junction"][i % 4];
        docs.push(doc(title, &[back], "meta page"));
    }
    docs
}
