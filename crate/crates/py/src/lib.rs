//! Python bindings: game configs, segments and metrics, the playability
//! agent, corpora, VAE training and decoding, and MAP-Elites runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use latent_elites::agents::{self, member_agents};
use latent_elites::config::GameConfig;
use latent_elites::corpus::{CorpusCache, Segment};
use latent_elites::metrics::{self, BcScheme, SchemeKind};
use latent_elites::qd::{self, BlendEvaluator, EvolutionConfig, GameEvaluator};
use latent_elites::report;
use latent_elites::vae::{self, Architecture, LatentVector, TrainConfig, VaeModel};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl ToString) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn io_err(e: impl ToString) -> PyErr {
    PyIOError::new_err(e.to_string())
}

#[pyclass(name = "GameConfig", module = "latent_elites_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyGameConfig(GameConfig);

#[pymethods]
impl PyGameConfig {
    /// One of SMB, KI, MM, CV, NG.
    #[staticmethod]
    fn stock(name: &str) -> PyResult<Self> {
        GameConfig::stock(name).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        GameConfig::from_json(text).map(Self).map_err(value_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }

    #[getter]
    fn tile_chars(&self) -> Vec<String> {
        self.0.tile_chars.iter().map(|c| c.to_string()).collect()
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.0.vocab_size()
    }

    #[getter]
    fn element_classes(&self) -> Vec<String> {
        self.0.element_classes.clone()
    }

    fn __repr__(&self) -> String {
        format!("GameConfig({:?}, vocab_size={})", self.0.name, self.0.vocab_size())
    }
}

#[pyclass(name = "Segment", module = "latent_elites_py", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PySegment(Segment);

#[pymethods]
impl PySegment {
    /// Parses 16 lines of 16 tile characters.
    #[staticmethod]
    fn from_text(text: &str, config: &PyGameConfig) -> PyResult<Self> {
        Segment::from_text(text, &config.0).map(Self).map_err(value_err)
    }

    fn to_text(&self, config: &PyGameConfig) -> String {
        self.0.to_text(&config.0)
    }

    /// Tile ids in row-major order.
    #[getter]
    fn tiles(&self) -> Vec<u8> {
        self.0.tiles().iter().map(|t| t.0).collect()
    }

    #[getter]
    fn game_tag(&self) -> String {
        self.0.game_tag().to_string()
    }

    fn __repr__(&self) -> String {
        format!("Segment({:?})", self.0.game_tag())
    }
}

#[pyfunction]
fn density(segment: &PySegment, config: &PyGameConfig) -> usize {
    metrics::density(&segment.0, &config.0)
}

#[pyfunction]
fn nonlinearity(segment: &PySegment, config: &PyGameConfig) -> usize {
    metrics::nonlinearity(&segment.0, &config.0)
}

#[pyfunction]
fn symmetry(segment: &PySegment, config: &PyGameConfig) -> usize {
    metrics::symmetry(&segment.0, &config.0)
}

/// Rows and columns of `segment` that also occur in the corpus.
#[pyfunction]
fn similarity(segment: &PySegment, corpus: &PyCorpus) -> usize {
    metrics::similarity(&segment.0, &corpus.0.config, &corpus.0.corpus.references)
}

#[pyfunction]
fn element_bits(segment: &PySegment, config: &PyGameConfig) -> usize {
    metrics::element_bits(&segment.0, &config.0)
}

#[pyclass(name = "PlayResult", module = "latent_elites_py", frozen, get_all)]
struct PyPlayResult {
    fitness: f64,
    completed: bool,
    best_frontier: (usize, usize),
    visited_count: usize,
}

#[pymethods]
impl PyPlayResult {
    fn __repr__(&self) -> String {
        format!(
            "PlayResult(fitness={}, completed={}, best_frontier={:?})",
            self.fitness,
            if self.completed { "True" } else { "False" },
            self.best_frontier
        )
    }
}

/// Runs the game's A* agent; raises ValueError when no start cell exists.
#[pyfunction]
fn play(segment: &PySegment, config: &PyGameConfig) -> PyResult<PyPlayResult> {
    let r = agents::play(&segment.0, &config.0).map_err(value_err)?;
    Ok(PyPlayResult {
        fitness: r.fitness,
        completed: r.completed,
        best_frontier: r.best_frontier,
        visited_count: r.visited_count,
    })
}

#[pyclass(name = "Corpus", module = "latent_elites_py", frozen)]
struct PyCorpus(CorpusCache);

#[pymethods]
impl PyCorpus {
    /// A corpus of synthetic levels for a stock game.
    #[staticmethod]
    #[pyo3(signature = (game, count = 6, length = 80, seed = 0))]
    fn synth(game: &str, count: usize, length: usize, seed: u64) -> PyResult<Self> {
        let (corpus, cfg) = latent_elites::cli::synth_corpus(game, count, length, seed).map_err(value_err)?;
        let counts = BTreeMap::from([(cfg.name.clone(), corpus.len())]);
        Ok(Self(CorpusCache::new(corpus, cfg, Vec::new(), counts)))
    }

    /// Reads a corpus directory written by `ingest`.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        CorpusCache::read(&path).map(Self).map_err(io_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.write(&path).map_err(io_err)
    }

    fn __len__(&self) -> usize {
        self.0.corpus.len()
    }

    fn segment(&self, index: usize) -> PyResult<PySegment> {
        self.0
            .corpus
            .segments
            .get(index)
            .cloned()
            .map(PySegment)
            .ok_or_else(|| value_err(format!("segment {index} out of range")))
    }

    #[getter]
    fn config(&self) -> PyGameConfig {
        PyGameConfig(self.0.config.clone())
    }

    /// Member game names of a blend corpus, else None.
    #[getter]
    fn members(&self) -> Option<Vec<String>> {
        self.0.blend().map(|b| b.member_names())
    }
}

#[pyclass(name = "Model", module = "latent_elites_py", frozen)]
struct PyModel {
    model: VaeModel,
    vocab_hash: String,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (corpus, seed, epochs = 10_000, batch_size = 64, learning_rate = 1e-3, kl_weight = 1.0, hidden = None))]
    fn train(
        py: Python<'_>,
        corpus: &PyCorpus,
        seed: u64,
        epochs: usize,
        batch_size: usize,
        learning_rate: f64,
        kl_weight: f64,
        hidden: Option<Vec<usize>>,
    ) -> PyResult<Self> {
        let tc = TrainConfig {
            epochs,
            batch_size,
            learning_rate,
            kl_weight,
            seed,
            architecture: hidden.map(|hidden| Architecture { hidden }).unwrap_or_default(),
            ..TrainConfig::default()
        };
        tc.validate().map_err(value_err)?;
        let cache = &corpus.0;
        let cfg = &cache.config;
        let outcome = py
            .detach(|| vae::train(&cache.corpus, cfg.vocab_size(), &cfg.name, &tc))
            .map_err(runtime_err)?;
        Ok(Self {
            model: outcome.model,
            vocab_hash: cfg.vocab_hash(),
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let (model, manifest) = VaeModel::load(&path).map_err(io_err)?;
        Ok(Self {
            model,
            vocab_hash: manifest.vocab_hash,
        })
    }

    fn save(&self, path: PathBuf, corpus: &PyCorpus) -> PyResult<()> {
        let cfg = &corpus.0.config;
        if cfg.vocab_hash() != self.vocab_hash {
            return Err(value_err("corpus vocabulary does not match the model"));
        }
        let vocab = cfg.tile_chars.iter().map(|c| c.to_string()).collect();
        let manifest = self.model.manifest(vocab, self.vocab_hash.clone(), None);
        self.model.save(&path, &manifest).map_err(io_err)
    }

    /// Decodes a 32-value latent vector to its most likely segment.
    fn decode(&self, z: Vec<f64>) -> PyResult<PySegment> {
        let z = LatentVector::new(z).map_err(value_err)?;
        if !z.is_finite() {
            return Err(value_err("latent vector has non-finite values"));
        }
        Ok(PySegment(self.model.decode(&z)))
    }

    /// Posterior mean and log-variance of a segment.
    fn encode(&self, segment: &PySegment) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let x = vae::one_hot(&segment.0, self.model.vocab_size).map_err(value_err)?;
        let (mu, log_var) = self.model.encode(&x).map_err(value_err)?;
        Ok((mu.0, log_var.0))
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.model.vocab_size
    }

    /// SHA-256 of the stored weights.
    #[getter]
    fn hash(&self) -> String {
        vae::model_hash(&self.model)
    }
}

#[pyclass(name = "Archive", module = "latent_elites_py", frozen)]
struct PyArchive(qd::Archive);

#[pymethods]
impl PyArchive {
    /// Reads `archive.csv` from a run directory.
    #[staticmethod]
    fn load(path: PathBuf, corpus: &PyCorpus) -> PyResult<Self> {
        let manifest = qd::RunManifest::read(&path.join("run.json")).map_err(io_err)?;
        let kind: SchemeKind = manifest.scheme.parse().map_err(value_err)?;
        let cache = &corpus.0;
        let scheme = BcScheme::new(kind, &cache.config, &cache.corpus.references);
        qd::read_archive_csv(&path.join("archive.csv"), scheme, manifest.members)
            .map(Self)
            .map_err(io_err)
    }

    fn save_csv(&self, path: PathBuf) -> PyResult<()> {
        qd::write_archive_csv(&self.0, &path).map_err(io_err)
    }

    #[getter]
    fn qd_score(&self) -> f64 {
        self.0.qd_score()
    }

    #[getter]
    fn coverage_pct(&self) -> f64 {
        self.0.coverage_pct()
    }

    #[getter]
    fn occupied(&self) -> usize {
        self.0.occupied()
    }

    #[getter]
    fn archive_size(&self) -> usize {
        self.0.archive_size()
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = report::summarize(&self.0);
        let d = PyDict::new(py);
        d.set_item("qd_score", s.qd_score)?;
        d.set_item("coverage_pct", s.coverage_pct)?;
        d.set_item("optimal_pct", s.optimal_pct)?;
        d.set_item("archive_size", s.archive_size)?;
        d.set_item("occupied", s.occupied)?;
        Ok(d)
    }

    /// One dict per elite in flat-index order.
    fn elites<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.0
            .elites()
            .map(|e| {
                let d = PyDict::new(py);
                d.set_item("cell", e.cell.0.clone())?;
                d.set_item("fitness", e.fitness)?;
                d.set_item("generation_found", e.generation_found)?;
                d.set_item("agents", e.agents.map(|a| a.0))?;
                d.set_item("history", self.0.is_blend().then(|| self.0.history(&e.cell).0))?;
                d.set_item("latent", e.latent.0.clone())?;
                Ok(d)
            })
            .collect()
    }

    fn heatmap_svg(&self) -> PyResult<String> {
        report::heatmap_svg(&self.0, report::HeatmapMode::Fitness).map_err(runtime_err)
    }
}

/// Runs MAP-Elites over the model's latent space.
#[pyfunction]
#[pyo3(signature = (model, corpus, scheme, seed, generations = 100_000, init_population = 1_000, mutation_prob = 0.3, mutation_sigma = 0.5, threads = 1))]
#[allow(clippy::too_many_arguments)]
fn evolve(
    py: Python<'_>,
    model: &PyModel,
    corpus: &PyCorpus,
    scheme: &str,
    seed: u64,
    generations: usize,
    init_population: usize,
    mutation_prob: f64,
    mutation_sigma: f64,
    threads: usize,
) -> PyResult<PyArchive> {
    let cache = &corpus.0;
    if model.vocab_hash != cache.config.vocab_hash() {
        return Err(value_err("model and corpus use different vocabularies"));
    }
    let kind: SchemeKind = scheme.parse().map_err(value_err)?;
    let ec = EvolutionConfig {
        generations,
        init_population,
        mutation_prob,
        mutation_sigma,
        seed,
        scheme: kind,
        threads,
        ..EvolutionConfig::default()
    };
    ec.validate().map_err(value_err)?;
    let bc = BcScheme::new(kind, &cache.config, &cache.corpus.references);
    let out = py.detach(|| match cache.blend() {
        Some(blend) => {
            let ev = BlendEvaluator {
                agents: member_agents(&blend),
                names: blend.member_names(),
            };
            qd::run(&model.model, bc, &ev, &ec)
        }
        None => {
            let ev = GameEvaluator {
                config: cache.config.clone(),
            };
            qd::run(&model.model, bc, &ev, &ec)
        }
    });
    out.map(|o| PyArchive(o.archive)).map_err(runtime_err)
}

#[pymodule]
fn latent_elites_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGameConfig>()?;
    m.add_class::<PySegment>()?;
    m.add_class::<PyPlayResult>()?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyArchive>()?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    m.add_function(wrap_pyfunction!(nonlinearity, m)?)?;
    m.add_function(wrap_pyfunction!(symmetry, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(element_bits, m)?)?;
    m.add_function(wrap_pyfunction!(play, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    Ok(())
}
