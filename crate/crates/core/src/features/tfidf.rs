//! TF-IDF over article bodies.
//!
//! Tokens are lowercased runs of alphanumeric characters. Term frequency is the
//! raw count, `idf = ln((1 + N) / (1 + df)) + 1`, and document vectors are
//! L2-normalized (an empty document maps to the zero vector).

use std::collections::{BTreeMap, HashMap};

use crate::graph::NavGraph;

/// Sparse vector as `(token index, weight)` pairs in ascending index order.
pub type SparseVector = Vec<(usize, f64)>;

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocabulary: HashMap<String, usize>,
    idf: Vec<f64>,
    documents: Vec<SparseVector>,
}

impl TfidfModel {
    pub fn fit<S: AsRef<str>>(docs: &[S]) -> Self {
        let tokenized: Vec<Vec<String>> = docs.iter().map(|d| tokenize(d.as_ref())).collect();
        // Sorted vocabulary keeps token indices independent of hash order.
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for tokens in &tokenized {
            let mut unique: Vec<&str> = tokens.iter().map(String::as_str).collect();
            unique.sort_unstable();
            unique.dedup();
            for t in unique {
                *df.entry(t).or_default() += 1;
            }
        }
        let n = docs.len() as f64;
        let vocabulary: HashMap<String, usize> = df.keys().enumerate().map(|(i, t)| (t.to_string(), i)).collect();
        let idf = df.values().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
        let mut model = Self { vocabulary, idf, documents: Vec::new() };
        model.documents = tokenized.iter().map(|tokens| model.vectorize(tokens)).collect();
        model
    }

    fn vectorize(&self, tokens: &[String]) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokens {
            if let Some(&i) = self.vocabulary.get(t) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut v: SparseVector = counts.into_iter().map(|(i, tf)| (i, tf * self.idf[i])).collect();
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|(_, x)| *x /= norm);
        }
        v
    }

    pub fn transform(&self, text: &str) -> SparseVector {
        self.vectorize(&tokenize(text))
    }

    /// Vector of the `i`-th fitted document.
    pub fn document(&self, i: usize) -> &SparseVector {
        &self.documents[i]
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        self.vocabulary.get(token).map(|&i| self.idf[i])
    }

    pub fn vocabulary_len(&self) -> usize {
        self.idf.len()
    }
}

/// Dot product of two normalized sparse vectors, clamped to `[0, 1]`.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot.clamp(0.0, 1.0)
}

pub fn tfidf_similarity(model: &TfidfModel, src_doc: &str, dst_doc: &str) -> f64 {
    cosine(&model.transform(src_doc), &model.transform(dst_doc))
}

/// Per-edge similarity of source and destination, for a model fitted on one
/// document per node in node-id order.
pub fn edge_tfidf(graph: &NavGraph, model: &TfidfModel) -> Vec<f64> {
    graph.edges().iter().map(|e| cosine(model.document(e.src), model.document(e.dst))).collect()
}
