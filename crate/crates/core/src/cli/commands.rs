use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::RunConfig;
use super::{
    parse_overrides, BuildGraphArgs, Command, CorruptArgs, DecomposeArgs, EvalArgs, GradcheckArgs, RunArgs,
    SynthArgs, EXIT_NUMERIC, EXIT_OK,
};
use crate::autoencoder::{recovery_scores, rlae_fit, AeSpec, AeTrainConfig, Autoencoder, RlaeConfig};
use crate::data::{
    build_text_dataset, load_labels, load_matrix_auto, read_embeddings, save_labels, save_matrix,
    save_matrix_auto, synth_classification, synth_lowrank_sparse, synth_multiview, tokenize, SynthConfig,
    TextConfig,
};
use crate::error::{invalid_param, Error, Result};
use crate::graph::{grid_graph, knn_graph, write_edge_list, Metric, Sigma, SparseGraph};
use crate::models::{
    build_model, evaluate, gradcheck_model, load_checkpoint, save_checkpoint, train_model, Arch, ConvSpec,
    EvalSplit, Fusion, ModelSpec,
};
use crate::nncore::{AdamConfig, GradcheckConfig, LabelSet};
use crate::noise::{NoiseKind, NoiseSpec};

pub(super) fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::BuildGraph(a) => build_graph(a),
        Command::Corrupt(a) => corrupt(a),
        Command::Decompose(a) => decompose(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Synth(a) => synth(a),
    }
}

fn save_graph(g: &SparseGraph, path: &Path) -> Result<()> {
    write_edge_list(g, std::io::BufWriter::new(fs::File::create(path)?))
}

fn parse_metric(s: &str) -> Result<Metric> {
    match s {
        "euclidean" => Ok(Metric::Euclidean),
        "cosine" => Ok(Metric::Cosine),
        _ => invalid_param(format!("metric must be euclidean or cosine, got {s:?}")),
    }
}

fn build_graph(a: BuildGraphArgs) -> Result<i32> {
    let metric = parse_metric(&a.metric)?;
    let graph = if let Some(p) = &a.points {
        let points = load_matrix_auto(p)?;
        knn_graph(points.view(), a.k, metric, Sigma::Auto)?
    } else if let Some(grid) = &a.grid {
        let (h, w) = grid
            .split_once('x')
            .and_then(|(h, w)| Some((h.parse().ok()?, w.parse().ok()?)))
            .ok_or_else(|| Error::InvalidParameter(format!("grid must be HxW, got {grid:?}")))?;
        grid_graph(h, w, a.k)?
    } else if let Some(corpus) = &a.corpus {
        return build_text(&a, corpus);
    } else {
        return invalid_param("one of --points, --grid or --corpus is required");
    };
    save_graph(&graph, &a.output)?;
    println!("vertices={} edges={}", graph.n(), graph.num_edges());
    Ok(EXIT_OK)
}

fn build_text(a: &BuildGraphArgs, corpus: &Path) -> Result<i32> {
    let docs: Vec<Vec<String>> = fs::read_to_string(corpus)?.lines().map(tokenize).collect();
    let emb_path = a.embeddings.as_ref().expect("required by clap");
    let embeddings = read_embeddings(BufReader::new(fs::File::open(emb_path)?))?;
    let cfg = TextConfig {
        vocab_size: a.vocab_size,
        min_doc_len: a.min_doc_len,
        min_df: a.min_df,
        knn_k: a.k,
        metric: parse_metric(&a.metric)?,
    };
    let bow = build_text_dataset(&docs, &embeddings, &cfg)?;
    fs::create_dir_all(&a.output)?;
    save_matrix(a.output.join("x.dmat"), &bow.x)?;
    save_graph(&bow.graph, &a.output.join("graph.txt"))?;
    fs::write(a.output.join("vocab.txt"), bow.vocab.join("\n") + "\n")?;
    let kept: String = bow.kept_docs.iter().map(|d| format!("{d}\n")).collect();
    fs::write(a.output.join("kept.txt"), kept)?;
    if let Some(lp) = &a.labels {
        let labels = load_labels(lp)?;
        if labels.len() != docs.len() {
            return Err(Error::InvalidData(format!("{} labels for {} documents", labels.len(), docs.len())));
        }
        let kept: Vec<Option<usize>> = bow.kept_docs.iter().map(|&d| labels[d]).collect();
        save_labels(a.output.join("labels.txt"), &kept)?;
    }
    println!(
        "documents={} vocabulary={} vertices={} edges={}",
        bow.x.nrows(),
        bow.vocab.len(),
        bow.graph.n(),
        bow.graph.num_edges()
    );
    Ok(EXIT_OK)
}

fn corrupt(a: CorruptArgs) -> Result<i32> {
    let kind = NoiseKind::parse(&a.kind)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown noise kind {:?}", a.kind)))?;
    let spec = NoiseSpec {
        kind,
        level: a.level,
        val: a.val,
        seed: a.seed,
        shared_columns: a.shared_columns,
    };
    spec.validate()?;
    let x = load_matrix_auto(&a.input)?;
    let y = spec.apply(x.view())?;
    save_matrix_auto(&a.output, &y)?;
    let changed = x.iter().zip(&y).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
    let manifest = format!(
        "input = {}\nkind = {}\nlevel = {:?}\nval = {:?}\nseed = {}\nshared_columns = {}\nrows = {}\ncols = {}\nchanged_entries = {changed}\n",
        a.input.display(),
        kind.name(),
        spec.level,
        spec.val,
        spec.seed,
        spec.shared_columns,
        x.nrows(),
        x.ncols()
    );
    fs::write(manifest_path(&a.output), manifest)?;
    println!("rows={} cols={} changed_entries={changed}", x.nrows(), x.ncols());
    Ok(EXIT_OK)
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

fn parse_widths(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::InvalidParameter(format!("bad width {t:?}"))))
        .collect()
}

fn decompose(a: DecomposeArgs) -> Result<i32> {
    let x = load_matrix_auto(&a.input)?;
    let (n, m) = x.dim();
    let activation = crate::nncore::Activation::parse(&a.activation)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown activation {:?}", a.activation)))?;
    let lambda = a.lambda.unwrap_or(1.0 / (n.max(m).max(1) as f64).sqrt());
    let cfg = RlaeConfig {
        lambda,
        lambda_decay: a.lambda_decay,
        tol: a.tol,
        max_outer: a.max_outer,
        inner_epochs: a.inner_epochs,
        train: AeTrainConfig {
            epochs: a.inner_epochs,
            batch_size: a.batch_size.min(n.max(1)),
            adam: AdamConfig {
                lr: a.lr,
                lr_decay: 1.0,
                l2: 0.0,
                ..AdamConfig::default()
            },
            shuffle_seed: a.seed,
        },
    };
    cfg.validate()?;
    let mut ae = Autoencoder::new(AeSpec::mirrored(m, &parse_widths(&a.hidden)?, activation, a.seed))?;
    fs::create_dir_all(&a.output_dir)?;
    let outputs = [
        a.output_dir.join("L.dmat"),
        a.output_dir.join("E.dmat"),
        a.output_dir.join("manifest.txt"),
    ];
    let result = rlae_fit(&mut ae, x.view(), &cfg).and_then(|d| {
        save_matrix(&outputs[0], &d.low_rank)?;
        save_matrix(&outputs[1], &d.err_sparse)?;
        let mut manifest = format!(
            "input = {}\nlambda = {lambda:?}\nlambda_decay = {:?}\ntol = {:?}\nresidual = {:?}\niterations = {}\nconverged = {}\nsparsity = {:?}\n",
            a.input.display(),
            a.lambda_decay,
            a.tol,
            d.residual,
            d.outer_iters,
            d.converged,
            d.sparsity()
        );
        let mut line = format!(
            "residual={:.6e} iterations={} converged={} sparsity={:.4}",
            d.residual,
            d.outer_iters,
            d.converged,
            d.sparsity()
        );
        if let (Some(lp), Some(ep)) = (&a.truth_l, &a.truth_e) {
            let (f1, rel) = recovery_scores(&d, load_matrix_auto(lp)?.view(), load_matrix_auto(ep)?.view())?;
            let _ = write!(manifest, "support_f1 = {f1:?}\nlow_rank_rel_err = {rel:?}\n");
            let _ = write!(line, " support_f1={f1:.4} low_rank_rel_err={rel:.4e}");
        }
        fs::write(&outputs[2], manifest)?;
        Ok(line)
    });
    match result {
        Ok(line) => {
            println!("{line}");
            Ok(EXIT_OK)
        }
        Err(e) => {
            for p in &outputs {
                let _ = fs::remove_file(p);
            }
            Err(e)
        }
    }
}

fn resolve(base: RunConfig, config: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    RunConfig::resolve_from(base, config, &parse_overrides(overrides)?)
}

struct Split {
    train: Vec<Array2<f64>>,
    test: Vec<Array2<f64>>,
    train_labels: LabelSet,
    test_labels: LabelSet,
}

fn split(loaded: &super::Loaded) -> Result<Split> {
    let first = &loaded.views[0];
    Ok(Split {
        train: loaded.views.iter().map(|v| v.train_x()).collect(),
        test: loaded.views.iter().map(|v| v.test_x()).collect(),
        train_labels: first.train_labels()?,
        test_labels: first.test_labels()?,
    })
}

fn train(a: RunArgs) -> Result<i32> {
    let cfg = resolve(RunConfig::default(), a.config.as_deref(), &a.overrides)?;
    cfg.validate()?;
    fs::create_dir_all(&a.output_dir)?;
    fs::write(a.output_dir.join("config.txt"), cfg.to_text())?;
    let loaded = cfg.load()?;
    let data = split(&loaded)?;
    let train_views: Vec<ArrayView2<f64>> = data.train.iter().map(|x| x.view()).collect();
    let test_views: Vec<ArrayView2<f64>> = data.test.iter().map(|x| x.view()).collect();

    let mut metrics = String::new();
    let mut timing = String::new();
    let mut summary = csv::Writer::from_path(a.output_dir.join("summary.csv")).map_err(csv_err)?;
    summary
        .write_record(["repeat", "seed", "train_accuracy", "test_accuracy"])
        .map_err(csv_err)?;
    let mut test_accs = Vec::with_capacity(cfg.repeats);
    let mut train_accs = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let spec = ModelSpec {
            seed: cfg.model.seed.wrapping_add(r as u64),
            ..cfg.model.clone()
        };
        let mut model = build_model(&spec, &loaded.graphs, loaded.num_classes)?;
        let split = EvalSplit {
            xs: &test_views,
            labels: &data.test_labels,
        };
        let report = train_model(&mut model, &train_views, &data.train_labels, Some(split))?;
        for e in &report.epochs {
            let _ = write!(
                metrics,
                "repeat={r} epoch={} ce={:?} ae={:?} total={:?} train_accuracy={:?} test_accuracy={:?}",
                e.epoch,
                e.ce,
                e.ae,
                e.total,
                e.train_accuracy,
                e.test_accuracy.unwrap_or(f64::NAN)
            );
            for (v, res) in e.residuals.iter().enumerate() {
                let _ = write!(metrics, " residual{v}={res:?}");
            }
            metrics.push('\n');
            let _ = writeln!(timing, "repeat={r} epoch={} seconds={:.3}", e.epoch, e.seconds);
        }
        let converged = report.converged.iter().all(|&c| c);
        let _ = writeln!(
            metrics,
            "repeat={r} final=1 seed={} decomposition_converged={converged}",
            spec.seed
        );
        let _ = writeln!(timing, "repeat={r} total_seconds={:.3}", report.seconds);
        let train_acc = report.final_train_accuracy().unwrap_or(f64::NAN);
        let test_acc = report.final_test_accuracy().unwrap_or(f64::NAN);
        summary
            .write_record([r.to_string(), spec.seed.to_string(), format!("{train_acc:?}"), format!("{test_acc:?}")])
            .map_err(csv_err)?;
        println!("repeat={r} seed={} train_accuracy={train_acc:.4} test_accuracy={test_acc:.4}", spec.seed);
        save_checkpoint(&model, &a.output_dir.join(format!("model_{r}.ckpt")))?;
        test_accs.push(test_acc);
        train_accs.push(train_acc);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    summary
        .write_record([
            "mean".to_string(),
            String::new(),
            format!("{:?}", mean(&train_accs)),
            format!("{:?}", mean(&test_accs)),
        ])
        .map_err(csv_err)?;
    summary.flush()?;
    fs::write(a.output_dir.join("metrics.txt"), metrics)?;
    fs::write(a.output_dir.join("timing.txt"), timing)?;
    println!(
        "repeats={} mean_train_accuracy={:.4} mean_test_accuracy={:.4}",
        cfg.repeats,
        mean(&train_accs),
        mean(&test_accs)
    );
    Ok(EXIT_OK)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn eval(a: EvalArgs) -> Result<i32> {
    let ck = load_checkpoint(&a.checkpoint)?;
    let base = RunConfig {
        model: ck.spec.clone(),
        ..RunConfig::default()
    };
    let cfg = resolve(base, a.config.as_deref(), &a.overrides)?;
    let loaded = cfg.load()?;
    let data = split(&loaded)?;
    let model = ck.into_model(&loaded.graphs)?;
    let test_views: Vec<ArrayView2<f64>> = data.test.iter().map(|x| x.view()).collect();
    let train_views: Vec<ArrayView2<f64>> = data.train.iter().map(|x| x.view()).collect();
    let test_acc = evaluate(&model, &test_views, &data.test_labels)?;
    let train_acc = evaluate(&model, &train_views, &data.train_labels)?;
    let line = format!("train_accuracy={train_acc:.4} test_accuracy={test_acc:.4}");
    if let Some(dir) = &a.output_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.txt"), cfg.to_text())?;
        fs::write(dir.join("eval.txt"), format!("{line}\n"))?;
    }
    println!("{line}");
    Ok(EXIT_OK)
}

/// Toy model exercising every layer type: pooling, a hidden dense layer, a
/// sigmoid autoencoder and mixed fusion.
pub fn gradcheck_spec() -> ModelSpec {
    ModelSpec {
        arch: Arch::RgcnRldae,
        conv: vec![ConvSpec {
            feature_maps: 8,
            order: 4,
            pool: 2,
        }],
        fc: vec![5],
        ae_hidden: vec![4],
        fusion: Fusion::Mixed(0.5),
        eta: 0.7,
        seed: 11,
        batch_size: 4,
        ..ModelSpec::default()
    }
}

/// Ring with one chord.
pub fn toy_graph(n: usize) -> Result<SparseGraph> {
    if n < 3 {
        return invalid_param("toy graph needs at least 3 vertices");
    }
    let mut edges: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    edges.push((0, n / 2, 0.5));
    SparseGraph::from_edges(n, edges)
}

fn gradcheck(a: GradcheckArgs) -> Result<i32> {
    let base = RunConfig {
        model: gradcheck_spec(),
        ..RunConfig::default()
    };
    let cfg = resolve(base, a.config.as_deref(), &a.overrides)?;
    let spec = cfg.model;
    let views = if spec.arch.is_multiview() { 2 } else { 1 };
    let graphs: Vec<SparseGraph> = (0..views).map(|_| toy_graph(a.vertices)).collect::<Result<_>>()?;
    let model = build_model(&spec, &graphs, a.classes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut random = |rows, cols| Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0));
    let inputs: Vec<Array2<f64>> = (0..views).map(|_| random(a.batch, a.vertices)).collect();
    let targets: Vec<Array2<f64>> = (0..views).map(|_| random(a.batch, a.vertices)).collect();
    let labels: Vec<Option<usize>> = (0..a.batch)
        .map(|i| (i != 2).then_some(i % a.classes))
        .collect();
    let labels = LabelSet::new(labels, a.classes)?;
    let gc = GradcheckConfig {
        samples: a.samples,
        tolerance: a.tolerance,
        seed: spec.seed,
        ..GradcheckConfig::default()
    };
    let report = gradcheck_model(&model, &inputs, &targets, Some(&labels), &gc)?;
    println!(
        "arch={} params={} checked={} max_rel_err={:.3e} failures={}",
        spec.arch.name(),
        model.num_params(),
        report.checked,
        report.max_rel_err,
        report.failures.len()
    );
    Ok(if report.passed() { EXIT_OK } else { EXIT_NUMERIC })
}

fn synth(a: SynthArgs) -> Result<i32> {
    fs::create_dir_all(&a.output_dir)?;
    let dir = &a.output_dir;
    let abs = |name: &str| -> String {
        let p = dir.join(name);
        fs::canonicalize(&p).unwrap_or(p).display().to_string()
    };
    let mut cfg = SynthConfig {
        n_vertices: a.vertices,
        n_samples: a.samples,
        n_train: a.train,
        n_classes: a.classes,
        seed: a.seed,
        graph_seed: a.seed,
        ..SynthConfig::default()
    };
    match a.kind.as_str() {
        "classification" => {
            cfg.spread = a.spread.unwrap_or(cfg.spread);
            let task = synth_classification(&cfg, None)?;
            save_matrix(dir.join("x.dmat"), &task.dataset.x)?;
            save_labels(dir.join("labels.txt"), task.dataset.labels.labels())?;
            save_graph(&task.graph, &dir.join("graph.txt"))?;
            let conf = format!(
                "data = {}\nlabels = {}\ngraph = {}\nn_train = {}\nsplit = ordered\n",
                abs("x.dmat"),
                abs("labels.txt"),
                abs("graph.txt"),
                cfg.n_train
            );
            fs::write(dir.join("data.conf"), conf)?;
            println!(
                "samples={} vertices={} oracle_accuracy={:.4}",
                cfg.n_samples, cfg.n_vertices, task.oracle_accuracy
            );
        }
        "multiview" => {
            cfg.spread = a.spread.unwrap_or(3.0);
            cfg.min_oracle_accuracy = 0.0;
            let (mv, graphs) = synth_multiview(&cfg, a.views)?;
            let mut data = Vec::new();
            let mut gpaths = Vec::new();
            for (v, (view, g)) in mv.views.iter().zip(&graphs).enumerate() {
                save_matrix(dir.join(format!("view{v}.dmat")), &view.x)?;
                save_graph(g, &dir.join(format!("graph{v}.txt")))?;
                data.push(abs(&format!("view{v}.dmat")));
                gpaths.push(abs(&format!("graph{v}.txt")));
            }
            save_labels(dir.join("labels.txt"), mv.views[0].labels.labels())?;
            let conf = format!(
                "data = {}\nlabels = {}\ngraph = {}\nn_train = {}\nsplit = ordered\n",
                data.join(","),
                abs("labels.txt"),
                gpaths.join(","),
                cfg.n_train
            );
            fs::write(dir.join("data.conf"), conf)?;
            println!("views={} samples={} vertices={}", a.views, cfg.n_samples, cfg.n_vertices);
        }
        "lowrank-sparse" => {
            let f = synth_lowrank_sparse(a.rows, a.cols, a.rank, a.spike_fraction, a.spike_magnitude, a.seed)?;
            save_matrix(dir.join("x.dmat"), &f.x)?;
            save_matrix(dir.join("l0.dmat"), &f.l0)?;
            save_matrix(dir.join("e0.dmat"), &f.e0)?;
            let spikes = f.e0.iter().filter(|v| **v != 0.0).count();
            println!("rows={} cols={} rank={} spikes={spikes}", a.rows, a.cols, a.rank);
        }
        other => {
            return invalid_param(format!(
                "synth kind must be classification, multiview or lowrank-sparse, got {other:?}"
            ))
        }
    }
    Ok(EXIT_OK)
}
