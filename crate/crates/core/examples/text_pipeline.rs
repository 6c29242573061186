//! Bag-of-words and TF-IDF views of a toy corpus, with the word graph built
//! from word vectors.
//!
//! `cargo run --release --example text_pipeline -- [embeddings.txt]`
//!
//! Without an embeddings file every word gets a vector from its letters.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;

use rgcn::data::{build_text_dataset, build_tfidf_view, read_embeddings, tokenize, TextConfig};
use rgcn::graph::Metric;

const CORPUS: &[&str] = &[
    "The goalkeeper saved the penalty and the team won the match",
    "A late goal won the match for the home team",
    "The striker scored twice in the second half of the match",
    "The new graphics card renders games faster than the old card",
    "This card needs a driver update before games run smoothly",
    "Install the driver and restart to use the new graphics card",
    "ok",
];

fn letter_vectors(docs: &[Vec<String>]) -> HashMap<String, Vec<f64>> {
    let mut out = HashMap::new();
    for w in docs.iter().flatten() {
        let mut v = vec![0.0; 26];
        for c in w.bytes().filter(u8::is_ascii_lowercase) {
            v[(c - b'a') as usize] += 1.0;
        }
        out.insert(w.clone(), v);
    }
    out
}

fn main() -> rgcn::Result<()> {
    env_logger::init();
    let docs: Vec<Vec<String>> = CORPUS.iter().map(|d| tokenize(d)).collect();
    let embeddings = match std::env::args().nth(1) {
        Some(path) => read_embeddings(BufReader::new(File::open(path)?))?,
        None => letter_vectors(&docs),
    };
    let config = TextConfig {
        vocab_size: 8,
        min_doc_len: 3,
        min_df: 2,
        knn_k: 3,
        metric: Metric::Cosine,
    };
    let bow = build_text_dataset(&docs, &embeddings, &config)?;
    println!("vocabulary: {:?}", bow.vocab);
    println!("kept documents: {:?}", bow.kept_docs);
    for (d, row) in bow.kept_docs.iter().zip(bow.x.rows()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.2}")).collect();
        println!("  doc {d}: {}", cells.join(" "));
    }
    println!("word graph: {} vertices, {} edges", bow.graph.n(), bow.graph.num_edges());
    for (i, j, w) in bow.graph.edges().filter(|(i, j, _)| i < j).take(6) {
        println!("  {} - {} ({w:.3})", bow.vocab[i], bow.vocab[j]);
    }

    let (tfidf, vocab) = build_tfidf_view(&docs, 5)?;
    println!("tf-idf over {vocab:?}");
    for row in tfidf.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.2}")).collect();
        println!("  {}", cells.join(" "));
    }
    Ok(())
}
