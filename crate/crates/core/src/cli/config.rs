use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::data::{
    load_labels, load_matrix_auto, synth_classification, synth_multiview, train_test_split, DenseDataset,
    SynthConfig,
};
use crate::error::{invalid_data, invalid_param, Result};
use crate::graph::{read_edge_list, SparseGraph};
use crate::models::{parse_key_values, ModelSpec, MODEL_KEYS};
use crate::nncore::LabelSet;
use crate::noise::{NoiseKind, NoiseSpec};

/// Where samples come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Files,
    SynthSingle,
    SynthMultiview,
}

impl Source {
    fn name(self) -> &'static str {
        match self {
            Source::Files => "none",
            Source::SynthSingle => "single",
            Source::SynthMultiview => "multiview",
        }
    }
}

/// Every key a run understands: the model keys plus data, noise and
/// repetition settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    /// Matrix per view (DMAT, or CSV by extension).
    pub data: Vec<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Edge list per view.
    pub graph: Vec<PathBuf>,
    pub synth: Source,
    pub synth_config: SynthConfig,
    pub synth_views: usize,
    /// Training rows; 0 means 80% of the samples.
    pub n_train: usize,
    /// Shuffle rows before splitting.
    pub split_random: bool,
    pub split_seed: u64,
    pub noise: Option<NoiseSpec>,
    /// Corrupt the test rows as well.
    pub noise_test: bool,
    /// Fraction of training rows that keep their label.
    pub label_fraction: f64,
    pub repeats: usize,
}

pub const RUN_KEYS: &[&str] = &[
    "data",
    "labels",
    "graph",
    "synth",
    "synth_vertices",
    "synth_samples",
    "synth_train",
    "synth_classes",
    "synth_spread",
    "synth_amplitude",
    "synth_seed",
    "synth_views",
    "n_train",
    "split",
    "split_seed",
    "noise",
    "noise_val",
    "noise_seed",
    "noise_test",
    "label_fraction",
    "repeats",
];

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::default(),
            data: Vec::new(),
            labels: None,
            graph: Vec::new(),
            synth: Source::Files,
            synth_config: SynthConfig::default(),
            synth_views: 2,
            n_train: 0,
            split_random: false,
            split_seed: 0,
            noise: None,
            noise_test: false,
            label_fraction: 1.0,
            repeats: 3,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().or_else(|_| invalid_param(format!("{key}: cannot parse {v:?}")))
}

fn paths(v: &str) -> Vec<PathBuf> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PathBuf::from).collect()
}

fn join_paths(p: &[PathBuf]) -> String {
    p.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")
}

/// `kind:level`, or `none`.
pub fn parse_noise(v: &str) -> Result<Option<NoiseSpec>> {
    if v == "none" || v.is_empty() {
        return Ok(None);
    }
    let Some((kind, level)) = v.split_once(':') else {
        return invalid_param(format!("noise {v:?} is not kind:level"));
    };
    let level: f64 = num("noise", level)?;
    let spec = match NoiseKind::parse(kind) {
        Some(NoiseKind::Masking) => NoiseSpec::masking(level, 0),
        Some(NoiseKind::Gaussian) => NoiseSpec::gaussian(level, 0),
        None => return invalid_param(format!("unknown noise kind {kind:?}")),
    };
    spec.validate()?;
    Ok(Some(spec))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let v = value.trim();
        if MODEL_KEYS.contains(&key.as_str()) {
            return self.model.set(&key, v);
        }
        let s = &mut self.synth_config;
        match key.as_str() {
            "data" => self.data = paths(v),
            "labels" => self.labels = (!v.is_empty()).then(|| PathBuf::from(v)),
            "graph" => self.graph = paths(v),
            "synth" => {
                self.synth = match v {
                    "none" => Source::Files,
                    "single" => Source::SynthSingle,
                    "multiview" => Source::SynthMultiview,
                    _ => return invalid_param(format!("synth must be none, single or multiview, got {v:?}")),
                }
            }
            "synth_vertices" => s.n_vertices = num(&key, v)?,
            "synth_samples" => s.n_samples = num(&key, v)?,
            "synth_train" => s.n_train = num(&key, v)?,
            "synth_classes" => s.n_classes = num(&key, v)?,
            "synth_spread" => s.spread = num(&key, v)?,
            "synth_amplitude" => s.amplitude = num(&key, v)?,
            "synth_seed" => {
                s.seed = num(&key, v)?;
                s.graph_seed = s.seed;
            }
            "synth_views" => self.synth_views = num(&key, v)?,
            "n_train" => self.n_train = num(&key, v)?,
            "split" => {
                self.split_random = match v {
                    "ordered" => false,
                    "random" => true,
                    _ => return invalid_param(format!("split must be ordered or random, got {v:?}")),
                }
            }
            "split_seed" => self.split_seed = num(&key, v)?,
            "noise" => {
                let old = self.noise;
                self.noise = parse_noise(v)?.map(|n| NoiseSpec {
                    val: old.map_or(n.val, |o| o.val),
                    seed: old.map_or(n.seed, |o| o.seed),
                    ..n
                });
            }
            "noise_val" | "noise_seed" => {
                let Some(n) = self.noise.as_mut() else {
                    return invalid_param(format!("{key} needs noise to be set first"));
                };
                if key == "noise_val" {
                    n.val = num(&key, v)?;
                } else {
                    n.seed = num(&key, v)?;
                }
            }
            "noise_test" => self.noise_test = num(&key, v)?,
            "label_fraction" => self.label_fraction = num(&key, v)?,
            "repeats" => self.repeats = num(&key, v)?,
            _ => return invalid_param(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.repeats == 0 {
            return invalid_param("repeats must be positive");
        }
        if !(self.label_fraction > 0.0 && self.label_fraction <= 1.0) {
            return invalid_param("label_fraction must lie in (0, 1]");
        }
        match self.synth {
            Source::Files => {
                if self.data.is_empty() || self.labels.is_none() || self.graph.is_empty() {
                    return invalid_param("data, labels and graph are required unless synth is set");
                }
                if self.data.len() != self.graph.len() {
                    return invalid_param("need one graph per data view");
                }
            }
            _ => self.synth_config.validate()?,
        }
        Ok(())
    }

    /// Parses `key = value` text over the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_key_values(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    /// Config file, then `--key value` overrides, then `RGCN_SEED`.
    pub fn resolve(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        Self::resolve_from(Self::default(), path, overrides)
    }

    /// As [`RunConfig::resolve`], layered over `base` instead of the defaults.
    pub fn resolve_from(base: Self, path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = base;
        if let Some(p) = path {
            cfg.apply_text(&std::fs::read_to_string(p)?)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        if let Ok(seed) = std::env::var("RGCN_SEED") {
            cfg.set("seed", &seed)?;
        }
        Ok(cfg)
    }

    /// Fully resolved `key = value` text.
    pub fn to_text(&self) -> String {
        let mut out = self.model.to_text();
        let s = &self.synth_config;
        let noise = self
            .noise
            .map_or("none".to_string(), |n| format!("{}:{:?}", n.kind.name(), n.level));
        let mut entries = vec![
            ("data", join_paths(&self.data)),
            ("labels", self.labels.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
            ("graph", join_paths(&self.graph)),
            ("synth", self.synth.name().to_string()),
            ("synth_vertices", s.n_vertices.to_string()),
            ("synth_samples", s.n_samples.to_string()),
            ("synth_train", s.n_train.to_string()),
            ("synth_classes", s.n_classes.to_string()),
            ("synth_spread", format!("{:?}", s.spread)),
            ("synth_amplitude", format!("{:?}", s.amplitude)),
            ("synth_seed", s.seed.to_string()),
            ("synth_views", self.synth_views.to_string()),
            ("n_train", self.n_train.to_string()),
            ("split", if self.split_random { "random" } else { "ordered" }.to_string()),
            ("split_seed", self.split_seed.to_string()),
            ("noise", noise),
        ];
        if let Some(n) = self.noise {
            entries.push(("noise_val", format!("{:?}", n.val)));
            entries.push(("noise_seed", n.seed.to_string()));
        }
        entries.extend([
            ("noise_test", self.noise_test.to_string()),
            ("label_fraction", format!("{:?}", self.label_fraction)),
            ("repeats", self.repeats.to_string()),
        ]);
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Loads (or generates) the aligned views, their graphs and the class count,
    /// with noise and label masking applied.
    pub fn load(&self) -> Result<Loaded> {
        self.validate()?;
        let (mut views, graphs) = match self.synth {
            Source::SynthSingle => {
                let task = synth_classification(&self.synth_config, None)?;
                (vec![task.dataset], vec![task.graph])
            }
            Source::SynthMultiview => {
                let (mv, graphs) = synth_multiview(&self.synth_config, self.synth_views)?;
                (mv.views, graphs)
            }
            Source::Files => self.load_files()?,
        };
        let num_classes = views[0].labels.num_classes();
        if let Some(noise) = self.noise {
            for (v, view) in views.iter_mut().enumerate() {
                let spec = noise.with_seed(noise.seed.wrapping_add(v as u64));
                *view = if self.noise_test {
                    view.with_noisy_rows(&spec)?
                } else {
                    view.with_noisy_train(&spec)?
                };
            }
        }
        if self.label_fraction < 1.0 {
            for view in &mut views {
                *view = view.semi_supervised(self.label_fraction, self.split_seed)?;
            }
        }
        Ok(Loaded {
            views,
            graphs,
            num_classes,
        })
    }

    fn load_files(&self) -> Result<(Vec<DenseDataset>, Vec<SparseGraph>)> {
        let raw = load_labels(self.labels.as_ref().expect("validated"))?;
        let num_classes = raw.iter().flatten().max().map_or(0, |&m| m + 1).max(2);
        let labels = LabelSet::new(raw, num_classes)?;
        let n = labels.len();
        let n_train = if self.n_train == 0 { n * 4 / 5 } else { self.n_train };
        if n_train == 0 || n_train >= n {
            return invalid_param(format!("n_train {n_train} leaves no training or test rows out of {n}"));
        }
        let (train, test) = if self.split_random {
            train_test_split(n, n_train, self.split_seed)?
        } else {
            ((0..n_train).collect(), (n_train..n).collect())
        };
        let mut views = Vec::with_capacity(self.data.len());
        let mut graphs = Vec::with_capacity(self.graph.len());
        for (d, g) in self.data.iter().zip(&self.graph) {
            let x = load_matrix_auto(d)?;
            if x.nrows() != n {
                return invalid_data(format!("{} has {} rows, labels have {n}", d.display(), x.nrows()));
            }
            let graph = read_edge_list(std::io::BufReader::new(std::fs::File::open(g)?))?;
            if graph.n() != x.ncols() {
                return invalid_data(format!(
                    "{} has {} vertices but {} has {} features",
                    g.display(),
                    graph.n(),
                    d.display(),
                    x.ncols()
                ));
            }
            let mut ds = DenseDataset::new(x, labels.clone(), train.clone(), test.clone())?;
            ds.name = d.display().to_string();
            views.push(ds);
            graphs.push(graph);
        }
        Ok((views, graphs))
    }
}

pub struct Loaded {
    pub views: Vec<DenseDataset>,
    pub graphs: Vec<SparseGraph>,
    pub num_classes: usize,
}
