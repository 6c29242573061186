use std::collections::HashMap;

use nalgebra::DMatrix;
use ndarray::{array, Array2};
use proptest::prelude::*;

use rgcn::data::{
    build_text_dataset, build_tfidf_view, decode_dmat, load_labels, load_matrix_auto, minmax_normalize,
    nearest_template_accuracy, read_csv_matrix, read_embeddings, read_labels, save_labels, save_matrix_auto,
    synth_classification, synth_lowrank_sparse, synth_multiview, tokenize, train_test_split, write_csv_matrix,
    write_dmat, DenseDataset, SynthConfig, TextConfig,
};
use rgcn::graph::Metric;
use rgcn::nncore::LabelSet;
use rgcn::noise::NoiseSpec;
use rgcn::Error;

fn docs(texts: &[&str]) -> Vec<Vec<String>> {
    texts.iter().map(|t| tokenize(t)).collect()
}

fn embeddings(words: &[&str]) -> HashMap<String, Vec<f64>> {
    words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.to_string(), vec![i as f64, (i * i) as f64 * 0.5]))
        .collect()
}

fn small_text_config() -> TextConfig {
    TextConfig {
        vocab_size: 3,
        min_doc_len: 3,
        min_df: 1,
        knn_k: 1,
        metric: Metric::Euclidean,
    }
}

fn labels_of(ds: &DenseDataset, rows: &[usize]) -> Vec<usize> {
    rows.iter().map(|&i| ds.labels.labels()[i].unwrap()).collect()
}

#[test]
fn tokenizer() {
    assert_eq!(tokenize("Hello, World! x2"), vec!["hello", "world", "x2"]);
    assert!(tokenize(" ,; ").is_empty());
}

#[test]
fn embeddings_reader() {
    let e = read_embeddings("2 2\ncat 0.5 1\ndog -1 2e-1\n".as_bytes()).unwrap();
    assert_eq!(e["dog"], vec![-1.0, 0.2]);
    assert_eq!(e.len(), 2);
    assert!(read_embeddings("cat 0.5 x\n".as_bytes()).is_err());
}

#[test]
fn bag_of_words_matches_hand_tally() {
    let corpus = docs(&["a a b c", "b c c d", "a e", "a b d e e", "x y z"]);
    let bow = build_text_dataset(&corpus, &embeddings(&["a", "b", "c", "d", "e", "x", "y", "z"]), &small_text_config())
        .unwrap();
    // corpus frequencies over the long documents: a 3, b 3, c 3, d 2, e 2, x/y/z 1
    assert_eq!(bow.vocab, vec!["a", "b", "c"]);
    // "a e" is too short and "x y z" has no vocabulary word
    assert_eq!(bow.kept_docs, vec![0, 1, 3]);
    let want = array![[0.5, 0.25, 0.25], [0.0, 1.0 / 3.0, 2.0 / 3.0], [0.5, 0.5, 0.0]];
    for (a, b) in bow.x.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12);
    }
    for row in bow.x.rows() {
        assert!((row.sum() - 1.0).abs() < 1e-12);
    }
    assert_eq!(bow.graph.n(), 3);
}

#[test]
fn words_without_embeddings_are_dropped() {
    let corpus = docs(&["a a b c", "b c c d", "a b d e e"]);
    let bow = build_text_dataset(&corpus, &embeddings(&["a", "c", "d", "e"]), &small_text_config()).unwrap();
    assert_eq!(bow.vocab, vec!["a", "c", "d"]);
}

#[test]
fn identical_documents_give_identical_rows() {
    let corpus = docs(&["the cat sat on the mat", "the cat sat on the mat"]);
    let cfg = TextConfig {
        vocab_size: 4,
        ..small_text_config()
    };
    let bow = build_text_dataset(&corpus, &embeddings(&["the", "cat", "sat", "on", "mat"]), &cfg).unwrap();
    assert_eq!(bow.x.row(0), bow.x.row(1));
}

#[test]
fn empty_corpus_after_filtering() {
    let corpus = docs(&["a b", "c"]);
    let err = build_text_dataset(&corpus, &embeddings(&["a", "b", "c"]), &small_text_config()).unwrap_err();
    assert!(matches!(err, Error::InvalidData(_)));
    let cfg = TextConfig {
        vocab_size: 0,
        ..small_text_config()
    };
    assert!(build_text_dataset(&corpus, &embeddings(&["a"]), &cfg).is_err());
}

#[test]
fn tfidf_matches_hand_computation() {
    let corpus = docs(&["a a b", "a c", "a b b c"]);
    let (x, vocab) = build_tfidf_view(&corpus, 3).unwrap();
    assert_eq!(vocab, vec!["a", "b", "c"]);
    // a is in every document; b and c are in two of three
    let ia = 1.0;
    let ib = (4.0f64 / 3.0).ln() + 1.0;
    let raw = [[2.0 * ia, ib, 0.0], [ia, 0.0, ib], [ia, 2.0 * ib, ib]];
    for (r, want) in raw.iter().enumerate() {
        let norm = want.iter().map(|v| v * v).sum::<f64>().sqrt();
        for c in 0..3 {
            assert!((x[[r, c]] - want[c] / norm).abs() < 1e-12, "({r}, {c})");
        }
        assert!((x.row(r).dot(&x.row(r)) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ubiquitous_term_has_unit_idf() {
    let corpus = docs(&["w w w", "w", "w w"]);
    let (x, _) = build_tfidf_view(&corpus, 1).unwrap();
    assert!(x.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    let corpus = docs(&["w v", "w"]);
    let (x, vocab) = build_tfidf_view(&corpus, 1).unwrap();
    assert_eq!(vocab, vec!["w"]);
    assert_eq!(x, array![[1.0], [1.0]]);
    assert!(build_tfidf_view(&docs(&["", ""]), 3).is_err());
}

#[test]
fn default_synthetic_task_passes_its_self_check() {
    let task = synth_classification(&SynthConfig::default(), None).unwrap();
    let ds = &task.dataset;
    assert!(task.oracle_accuracy >= 0.9);
    assert_eq!(ds.x.dim(), (500, 64));
    assert_eq!((ds.train.len(), ds.test.len()), (400, 100));
    let all: Vec<usize> = (0..500).collect();
    let labels = labels_of(ds, &all);
    assert_eq!(labels.iter().filter(|&&l| l == 0).count(), 250);
    let again = synth_classification(&SynthConfig::default(), None).unwrap();
    assert_eq!(again.dataset.x, ds.x);
    assert_eq!(again.graph, task.graph);
}

#[test]
fn templates_alone_are_perfectly_separable() {
    let cfg = SynthConfig {
        spread: 0.0,
        white_noise: 0.0,
        ..SynthConfig::default()
    };
    let task = synth_classification(&cfg, None).unwrap();
    assert_eq!(task.oracle_accuracy, 1.0);
    let rms = (task.templates.iter().map(|v| v * v).sum::<f64>() / task.templates.len() as f64).sqrt();
    assert!((rms - 1.0).abs() < 1e-12);
}

#[test]
fn masking_genuinely_degrades_the_task() {
    for seed in 0..3 {
        let cfg = SynthConfig {
            seed,
            graph_seed: seed,
            ..SynthConfig::default()
        };
        let clean = synth_classification(&cfg, None).unwrap();
        let noisy = synth_classification(&cfg, Some(&NoiseSpec::masking(0.4, seed))).unwrap();
        let ds = &clean.dataset;
        let labels = labels_of(ds, &ds.train);
        let before = nearest_template_accuracy(ds.train_x().view(), &labels, clean.templates.view());
        let after = nearest_template_accuracy(noisy.dataset.train_x().view(), &labels, clean.templates.view());
        assert!(before - after >= 0.1, "seed {seed}: {before} -> {after}");
        assert_eq!(noisy.dataset.test_x(), ds.test_x());
    }
}

#[test]
fn impossible_self_check_errors_after_retries() {
    let cfg = SynthConfig {
        spread: 50.0,
        min_oracle_accuracy: 1.0,
        ..SynthConfig::default()
    };
    assert!(matches!(synth_classification(&cfg, None), Err(Error::InvalidData(_))));
    let cfg = SynthConfig {
        n_samples: 15,
        ..SynthConfig::default()
    };
    assert!(synth_classification(&cfg, None).is_err());
}

#[test]
fn multiview_views_share_labels_and_splits() {
    let cfg = SynthConfig {
        n_samples: 100,
        n_train: 80,
        ..SynthConfig::default()
    };
    let (mv, graphs) = synth_multiview(&cfg, 3).unwrap();
    assert_eq!(mv.n_views(), 3);
    assert_eq!(graphs.len(), 3);
    for v in &mv.views[1..] {
        assert_eq!(v.labels, mv.views[0].labels);
        assert_eq!(v.train, mv.views[0].train);
        assert_ne!(v.x, mv.views[0].x);
    }
    let noisy = mv.with_noisy_train(&NoiseSpec::masking(0.4, 1)).unwrap();
    assert_eq!(noisy.views[0].test_x(), mv.views[0].test_x());
}

#[test]
fn lowrank_sparse_construction() {
    let f = synth_lowrank_sparse(20, 15, 3, 0.05, 10.0, 4).unwrap();
    let l0 = DMatrix::from_fn(20, 15, |i, j| f.l0[[i, j]]);
    let mut sv: Vec<f64> = l0.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    assert!(sv[2] > 1e-3 * sv[0]);
    assert!(sv[3..].iter().all(|&s| s <= 1e-10 * sv[0]));
    let spikes: Vec<f64> = f.e0.iter().copied().filter(|&v| v != 0.0).collect();
    assert_eq!(spikes.len(), 15);
    assert!(spikes.iter().all(|&v| v.abs() == 10.0));
    assert_eq!(f.x, &f.l0 + &f.e0);

    let clean = synth_lowrank_sparse(20, 20, 1, 0.0, 10.0, 4).unwrap();
    assert_eq!(clean.x, clean.l0);
    assert!(synth_lowrank_sparse(3, 5, 4, 0.1, 1.0, 0).is_err());
    assert!(synth_lowrank_sparse(3, 5, 1, 1.5, 1.0, 0).is_err());
}

#[test]
fn dmat_round_trip_is_bitwise() {
    let m = Array2::from_shape_fn((7, 3), |(i, j)| (i as f64 + 0.1).powf(j as f64 - 0.7) * -1e-3);
    let mut buf = Vec::new();
    write_dmat(&mut buf, &m).unwrap();
    let back = decode_dmat(&buf).unwrap();
    assert!(m.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(back.dim(), (7, 3));
}

#[test]
fn dmat_rejects_bad_files() {
    let m = Array2::<f64>::ones((2, 2));
    let mut buf = Vec::new();
    write_dmat(&mut buf, &m).unwrap();
    assert!(matches!(decode_dmat(&buf[..buf.len() - 3]), Err(Error::Parse { .. })));
    assert!(matches!(decode_dmat(&buf[..10]), Err(Error::Parse { offset: 10, .. })));
    assert!(matches!(decode_dmat(b"XMAT1"), Err(Error::Parse { offset: 0, .. })));
    let mut wrong = buf.clone();
    wrong[5] = 3;
    assert!(matches!(decode_dmat(&wrong), Err(Error::Parse { .. })));
}

#[test]
fn csv_matrix() {
    let m = read_csv_matrix("1,2.5\n-3,4e-2\n".as_bytes()).unwrap();
    assert_eq!(m, array![[1.0, 2.5], [-3.0, 0.04]]);
    assert!(read_csv_matrix("1,2\n3\n".as_bytes()).is_err());
    assert!(read_csv_matrix("1,x\n".as_bytes()).is_err());
    let mut out = Vec::new();
    write_csv_matrix(&mut out, &m).unwrap();
    assert_eq!(read_csv_matrix(out.as_slice()).unwrap(), m);
}

#[test]
fn files_pick_format_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let m = array![[0.1, -2.0, 1e-300], [3.5, 0.0, -0.0]];
    for name in ["m.dmat", "m.CSV", "m"] {
        let path = dir.path().join(name);
        save_matrix_auto(&path, &m).unwrap();
        let back = load_matrix_auto(&path).unwrap();
        assert!(m.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()), "{name}");
    }
    let text = std::fs::read_to_string(dir.path().join("m.CSV")).unwrap();
    assert!(text.starts_with("0.1,"));
    assert!(matches!(load_matrix_auto(dir.path().join("absent.dmat")), Err(Error::Io(_))));
}

#[test]
fn labels_file() {
    let labels = read_labels("0\n-1\n2\n".as_bytes()).unwrap();
    assert_eq!(labels, vec![Some(0), None, Some(2)]);
    assert!(matches!(read_labels("0\n-4\n".as_bytes()), Err(Error::Parse { offset: 2, .. })));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labels.txt");
    save_labels(&path, &labels).unwrap();
    assert_eq!(load_labels(&path).unwrap(), labels);
}

#[test]
fn minmax_columns() {
    let x = array![[1.0, 5.0], [3.0, 5.0], [2.0, 5.0]];
    assert_eq!(minmax_normalize(&x), array![[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]]);
}

#[test]
fn overlapping_splits_rejected() {
    let labels = LabelSet::fully_labeled(&[0, 1, 0], 2).unwrap();
    assert!(DenseDataset::new(Array2::zeros((3, 2)), labels.clone(), vec![0, 1], vec![1]).is_err());
    assert!(DenseDataset::new(Array2::zeros((3, 2)), labels.clone(), vec![0, 1], vec![5]).is_err());
    assert!(DenseDataset::new(Array2::zeros((4, 2)), labels, vec![0, 1], vec![2]).is_err());
}

#[test]
fn semi_supervised_masks_train_only() {
    let labels = LabelSet::fully_labeled(&[0, 1, 0, 1, 0, 1], 2).unwrap();
    let ds = DenseDataset::new(Array2::zeros((6, 1)), labels, vec![0, 1, 2, 3], vec![4, 5]).unwrap();
    let semi = ds.semi_supervised(0.5, 9).unwrap();
    let train_labeled = semi.train.iter().filter(|&&i| semi.labels.labels()[i].is_some()).count();
    assert_eq!(train_labeled, 2);
    assert!(semi.test.iter().all(|&i| semi.labels.labels()[i].is_some()));
    assert!(ds.semi_supervised(0.0, 9).is_err());
}

proptest! {
    #[test]
    fn split_is_a_disjoint_cover(n in 0usize..200, frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let n_train = (frac * n as f64) as usize;
        let (tr, te) = train_test_split(n, n_train, seed).unwrap();
        prop_assert_eq!(tr.len(), n_train);
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(train_test_split(n, n_train, seed).unwrap(), (tr, te));
        prop_assert!(train_test_split(n, n + 1, seed).is_err());
    }
}
