use std::collections::HashMap;
use std::io::BufRead;

use ndarray::Array2;

use crate::error::{invalid_data, invalid_param, Error, Result};
use crate::graph::{knn_graph, Metric, Sigma, SparseGraph};

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextConfig {
    pub vocab_size: usize,
    /// Documents with fewer tokens are dropped.
    pub min_doc_len: usize,
    /// Words appearing in fewer documents are dropped.
    pub min_df: usize,
    pub knn_k: usize,
    pub metric: Metric,
}

impl Default for TextConfig {
    fn default() -> Self {
        Self {
            vocab_size: 10000,
            min_doc_len: 5,
            min_df: 5,
            knn_k: 16,
            metric: Metric::Euclidean,
        }
    }
}

/// A bag-of-words matrix with its vocabulary and the surviving documents.
#[derive(Debug, Clone)]
pub struct BagOfWords {
    /// Rows sum to one.
    pub x: Array2<f64>,
    pub vocab: Vec<String>,
    /// Index into the input corpus of each row.
    pub kept_docs: Vec<usize>,
    pub graph: SparseGraph,
}

fn document_frequencies<'a>(docs: impl Iterator<Item = &'a Vec<String>>) -> (HashMap<&'a str, usize>, HashMap<&'a str, usize>) {
    let mut df: HashMap<&str, usize> = HashMap::new();
    let mut tf: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
        for w in &seen {
            *tf.entry(w).or_default() += 1;
        }
        seen.sort_unstable();
        seen.dedup();
        for w in seen {
            *df.entry(w).or_default() += 1;
        }
    }
    (df, tf)
}

/// Most frequent words first, ties in lexicographic order.
fn top_words(candidates: Vec<(&str, usize)>, vocab_size: usize) -> Vec<String> {
    let mut candidates = candidates;
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    candidates.truncate(vocab_size);
    candidates.into_iter().map(|(w, _)| w.to_string()).collect()
}

fn count_matrix(docs: &[&Vec<String>], vocab: &[String]) -> Array2<f64> {
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let mut x = Array2::zeros((docs.len(), vocab.len()));
    for (r, doc) in docs.iter().enumerate() {
        for w in doc.iter() {
            if let Some(&c) = index.get(w.as_str()) {
                x[[r, c]] += 1.0;
            }
        }
    }
    x
}

/// Bag-of-words over the `vocab_size` most frequent words, rows normalized to
/// unit sum, plus a kNN graph over the words' embedding vectors.
///
/// Short documents, rare words, words without an embedding and documents left
/// without any vocabulary word are dropped.
pub fn build_text_dataset(
    docs: &[Vec<String>],
    embeddings: &HashMap<String, Vec<f64>>,
    config: &TextConfig,
) -> Result<BagOfWords> {
    if config.vocab_size == 0 {
        return invalid_param("vocab_size must be positive");
    }
    let long: Vec<usize> = (0..docs.len()).filter(|&i| docs[i].len() >= config.min_doc_len).collect();
    let (df, tf) = document_frequencies(long.iter().map(|&i| &docs[i]));
    let mut missing = 0;
    let candidates: Vec<(&str, usize)> = tf
        .into_iter()
        .filter(|(w, _)| df[w] >= config.min_df)
        .filter(|(w, _)| {
            let has = embeddings.contains_key(*w);
            missing += usize::from(!has);
            has
        })
        .collect();
    if missing > 0 {
        log::warn!("dropped {missing} frequent words without an embedding");
    }
    let vocab = top_words(candidates, config.vocab_size);
    if vocab.is_empty() {
        return invalid_data("no words survive the frequency filters");
    }
    let counts = count_matrix(&long.iter().map(|&i| &docs[i]).collect::<Vec<_>>(), &vocab);
    let kept: Vec<usize> = (0..long.len()).filter(|&r| counts.row(r).sum() > 0.0).collect();
    if kept.is_empty() {
        return invalid_data("corpus is empty after filtering");
    }
    let mut x = counts.select(ndarray::Axis(0), &kept);
    for mut row in x.rows_mut() {
        let s = row.sum();
        row /= s;
    }
    let dim = embeddings[&vocab[0]].len();
    let mut points = Array2::zeros((vocab.len(), dim));
    for (i, w) in vocab.iter().enumerate() {
        let e = &embeddings[w];
        if e.len() != dim {
            return invalid_data(format!("embedding of {w:?} has {} entries, expected {dim}", e.len()));
        }
        points.row_mut(i).assign(&ndarray::ArrayView1::from(e.as_slice()));
    }
    let graph = knn_graph(points.view(), config.knn_k, config.metric, Sigma::Auto)?;
    Ok(BagOfWords {
        x,
        vocab,
        kept_docs: kept.into_iter().map(|r| long[r]).collect(),
        graph,
    })
}

/// TF-IDF over the `vocab_size` most frequent words with smooth IDF
/// `ln((1 + N) / (1 + df)) + 1` and unit-norm rows. Every document is kept;
/// a document without any vocabulary word stays a zero row.
pub fn build_tfidf_view(docs: &[Vec<String>], vocab_size: usize) -> Result<(Array2<f64>, Vec<String>)> {
    if vocab_size == 0 {
        return invalid_param("vocab_size must be positive");
    }
    let (df, tf) = document_frequencies(docs.iter());
    let vocab = top_words(tf.into_iter().collect(), vocab_size);
    if vocab.is_empty() {
        return invalid_data("corpus has no words");
    }
    let n = docs.len() as f64;
    let idf: Vec<f64> = vocab
        .iter()
        .map(|w| ((1.0 + n) / (1.0 + df[w.as_str()] as f64)).ln() + 1.0)
        .collect();
    let mut x = count_matrix(&docs.iter().collect::<Vec<_>>(), &vocab);
    for mut row in x.rows_mut() {
        for (v, w) in row.iter_mut().zip(&idf) {
            *v *= w;
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok((x, vocab))
}

/// Word vectors in the text format `word v1 v2 ...`, one per line. A leading
/// `count dim` header line is skipped.
pub fn read_embeddings<R: BufRead>(r: R) -> Result<HashMap<String, Vec<f64>>> {
    let mut out = HashMap::new();
    let mut offset = 0;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace();
        if let Some(word) = parts.next() {
            let values: std::result::Result<Vec<f64>, _> = parts.map(str::parse).collect();
            match values {
                Ok(v) if lineno == 0 && v.len() == 1 && word.parse::<usize>().is_ok() => {}
                Ok(v) if !v.is_empty() => {
                    out.insert(word.to_string(), v);
                }
                _ => {
                    return Err(Error::Parse {
                        offset,
                        msg: format!("malformed embedding line for {word:?}"),
                    })
                }
            }
        }
        offset += line.len() + 1;
    }
    Ok(out)
}
