//! Steady-state MAP-Elites over the VAE latent space.

mod io;

pub use io::{read_archive_csv, write_archive_csv, write_series_csv, ArchiveIoError, RunManifest};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{blend_play, play, AgentSet};
use crate::config::GameConfig;
use crate::corpus::Segment;
use crate::metrics::{BcScheme, CellCoord, SchemeKind};
use crate::vae::{sample_latent, LatentVector, VaeModel, LATENT_DIM};

#[derive(Debug, Error, PartialEq)]
pub enum QdError {
    #[error("archive has no occupied cells")]
    EmptyArchive,
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error("model vocabulary ({model}) does not match scheme vocabulary ({scheme})")]
    VocabMismatch { model: usize, scheme: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Elite {
    pub latent: LatentVector,
    pub fitness: f64,
    pub cell: CellCoord,
    /// Members that completed this elite; blend runs only.
    pub agents: Option<AgentSet>,
    pub generation_found: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Inserted,
    Replaced,
    Rejected,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Placement {
    pub cell: CellCoord,
    pub outcome: Outcome,
}

/// One elite per cell plus the union of agent sets seen per cell.
#[derive(Clone, Debug)]
pub struct Archive {
    pub scheme: BcScheme,
    /// Member names for blend runs.
    pub members: Option<Vec<String>>,
    cells: Vec<Option<Elite>>,
    /// Flat indices of occupied cells, in insertion order.
    occupied: Vec<usize>,
    history: Vec<AgentSet>,
}

impl Archive {
    pub fn new(scheme: BcScheme, members: Option<Vec<String>>) -> Self {
        let n = scheme.archive_size();
        Self {
            scheme,
            members,
            cells: vec![None; n],
            occupied: Vec::new(),
            history: vec![AgentSet::EMPTY; n],
        }
    }

    pub fn is_blend(&self) -> bool {
        self.members.is_some()
    }

    pub fn archive_size(&self) -> usize {
        self.cells.len()
    }

    pub fn occupied(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn get(&self, cell: &CellCoord) -> Option<&Elite> {
        if !self.scheme.is_valid(cell) {
            return None;
        }
        self.cells[self.scheme.flat_index(cell)].as_ref()
    }

    pub fn history(&self, cell: &CellCoord) -> AgentSet {
        if !self.scheme.is_valid(cell) {
            return AgentSet::EMPTY;
        }
        self.history[self.scheme.flat_index(cell)]
    }

    /// Occupied elites in flat-index order.
    pub fn elites(&self) -> impl Iterator<Item = &Elite> {
        self.cells.iter().flatten()
    }

    /// Every cell's agent history in flat-index order.
    pub fn histories(&self) -> &[AgentSet] {
        &self.history
    }

    /// Sum of elite fitness, accumulated in flat-index order.
    pub fn qd_score(&self) -> f64 {
        self.elites().map(|e| e.fitness).sum()
    }

    pub fn coverage_pct(&self) -> f64 {
        100.0 * self.occupied() as f64 / self.archive_size() as f64
    }

    /// Places a candidate. A candidate only displaces the incumbent with
    /// strictly greater fitness; the cell history absorbs `agents` either way.
    pub fn place(
        &mut self,
        latent: LatentVector,
        segment: &Segment,
        fitness: f64,
        agents: Option<AgentSet>,
        generation: usize,
    ) -> Placement {
        debug_assert!((0.0..=1.0).contains(&fitness), "fitness {fitness} out of range");
        let cell = self.scheme.assign_cell(segment);
        self.place_at(cell, latent, fitness, agents, generation)
    }

    fn place_at(
        &mut self,
        cell: CellCoord,
        latent: LatentVector,
        fitness: f64,
        agents: Option<AgentSet>,
        generation: usize,
    ) -> Placement {
        let idx = self.scheme.flat_index(&cell);
        if let Some(a) = agents {
            self.history[idx] = self.history[idx].union(a);
        }
        let outcome = match &self.cells[idx] {
            None => {
                self.occupied.push(idx);
                Outcome::Inserted
            }
            Some(inc) if fitness > inc.fitness => Outcome::Replaced,
            Some(_) => Outcome::Rejected,
        };
        if outcome != Outcome::Rejected {
            self.cells[idx] = Some(Elite {
                latent,
                fitness,
                cell: cell.clone(),
                agents,
                generation_found: generation,
            });
        }
        Placement { cell, outcome }
    }

    /// Restores a stored elite and history, as when reading an archive file.
    pub(crate) fn restore(&mut self, elite: Elite, history: AgentSet) {
        let idx = self.scheme.flat_index(&elite.cell);
        if self.cells[idx].is_none() {
            self.occupied.push(idx);
        }
        self.history[idx] = history;
        self.cells[idx] = Some(elite);
    }

    /// Two elites drawn uniformly, with replacement, from the occupied cells.
    pub fn select_parents<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<(&LatentVector, &LatentVector), QdError> {
        let a = self.occupied.choose(rng).ok_or(QdError::EmptyArchive)?;
        let b = self.occupied.choose(rng).ok_or(QdError::EmptyArchive)?;
        let get = |i: &usize| &self.cells[*i].as_ref().expect("occupied cell").latent;
        Ok((get(a), get(b)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub generations: usize,
    pub init_population: usize,
    /// Probability that a child is mutated at all.
    pub mutation_prob: f64,
    /// Per-gene Gaussian standard deviation of a mutation.
    pub mutation_sigma: f64,
    pub seed: u64,
    pub scheme: SchemeKind,
    pub snapshot_every: usize,
    /// Children evaluated concurrently; above 1 the run is not byte-reproducible.
    #[serde(default = "one")]
    pub threads: usize,
}

fn one() -> usize {
    1
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            generations: 100_000,
            init_population: 1_000,
            mutation_prob: 0.3,
            mutation_sigma: 0.5,
            seed: 0,
            scheme: SchemeKind::DensityNonlinearity,
            snapshot_every: 1_000,
            threads: 1,
        }
    }
}

impl EvolutionConfig {
    /// Full validation, as applied to user-supplied configs.
    pub fn validate(&self) -> Result<(), QdError> {
        if self.generations == 0 {
            return Err(QdError::InvalidConfig("generations must be positive".into()));
        }
        self.validate_engine()
    }

    /// The engine itself also accepts zero generations.
    fn validate_engine(&self) -> Result<(), QdError> {
        let bad = |m: &str| Err(QdError::InvalidConfig(m.into()));
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return bad("mutation_prob must be in [0, 1]");
        }
        if !(self.mutation_sigma >= 0.0 && self.mutation_sigma.is_finite()) {
            return bad("mutation_sigma must be finite and non-negative");
        }
        if self.init_population == 0 {
            return bad("init_population must be positive");
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be positive");
        }
        if self.threads == 0 {
            return bad("threads must be positive");
        }
        Ok(())
    }
}

/// Uniform crossover, then with probability `mutation_prob` Gaussian noise
/// on every gene.
pub fn vary<R: Rng + ?Sized>(
    p1: &LatentVector,
    p2: &LatentVector,
    ec: &EvolutionConfig,
    rng: &mut R,
) -> LatentVector {
    let mut child: Vec<f64> = p1
        .0
        .iter()
        .zip(&p2.0)
        .map(|(&a, &b)| if rng.random_bool(0.5) { a } else { b })
        .collect();
    if rng.random_bool(ec.mutation_prob) {
        let noise = Normal::new(0.0, ec.mutation_sigma).expect("validated sigma");
        for g in &mut child {
            *g += noise.sample(rng);
        }
    }
    LatentVector(child)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub fitness: f64,
    /// Members that completed the segment; blend evaluators only.
    pub agents: Option<AgentSet>,
    /// True when no agent could start; fitness is then 0.
    pub failed: bool,
}

pub trait Evaluator: Sync {
    fn evaluate(&self, segment: &Segment) -> Evaluation;

    /// Member names when evaluating blends.
    fn members(&self) -> Option<Vec<String>> {
        None
    }
}

/// Plays a segment with a single game's agent.
pub struct GameEvaluator {
    pub config: GameConfig,
}

impl Evaluator for GameEvaluator {
    fn evaluate(&self, segment: &Segment) -> Evaluation {
        match play(segment, &self.config) {
            Ok(r) => Evaluation {
                fitness: r.fitness,
                agents: None,
                failed: false,
            },
            Err(_) => Evaluation {
                fitness: 0.0,
                agents: None,
                failed: true,
            },
        }
    }
}

/// Plays a blend segment with every member agent; see [`blend_play`].
pub struct BlendEvaluator {
    pub agents: Vec<GameConfig>,
    pub names: Vec<String>,
}

impl Evaluator for BlendEvaluator {
    fn evaluate(&self, segment: &Segment) -> Evaluation {
        let bp = blend_play(segment, &self.agents);
        Evaluation {
            fitness: bp.fitness,
            agents: Some(bp.agents),
            failed: bp.members.iter().all(|m| m.is_err()),
        }
    }

    fn members(&self) -> Option<Vec<String>> {
        Some(self.names.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub generation: usize,
    pub qd_score: f64,
    pub coverage_pct: f64,
}

/// One `place` call. Initial-population candidates carry generation 0.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacementEvent {
    pub generation: usize,
    pub cell: CellCoord,
    pub fitness: f64,
    pub agents: Option<AgentSet>,
    pub outcome: Outcome,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub archive: Archive,
    pub series: Vec<Snapshot>,
    pub events: Vec<PlacementEvent>,
    /// Candidates no agent could start on.
    pub failed_evaluations: usize,
}

struct Engine<'a, E: Evaluator + ?Sized> {
    model: &'a VaeModel,
    evaluator: &'a E,
    archive: &'a mut Archive,
    events: Vec<PlacementEvent>,
    failed: usize,
}

impl<E: Evaluator + ?Sized> Engine<'_, E> {
    fn evaluate(&self, latent: &LatentVector) -> (Segment, Evaluation) {
        let seg = self.model.decode(latent);
        let ev = self.evaluator.evaluate(&seg);
        (seg, ev)
    }

    fn commit(&mut self, latent: LatentVector, seg: &Segment, ev: Evaluation, generation: usize) {
        if ev.failed {
            self.failed += 1;
        }
        let p = self
            .archive
            .place(latent, seg, ev.fitness, ev.agents, generation);
        self.events.push(PlacementEvent {
            generation,
            cell: p.cell,
            fitness: ev.fitness,
            agents: ev.agents,
            outcome: p.outcome,
        });
    }

    fn snapshot(&self, generation: usize) -> Snapshot {
        Snapshot {
            generation,
            qd_score: self.archive.qd_score(),
            coverage_pct: self.archive.coverage_pct(),
        }
    }
}

/// Seeds an empty archive with `init_population` prior samples.
pub fn initialize<R: Rng + ?Sized>(
    archive: &mut Archive,
    model: &VaeModel,
    evaluator: &(impl Evaluator + ?Sized),
    ec: &EvolutionConfig,
    rng: &mut R,
) -> Result<(), QdError> {
    check_inputs(archive, model, ec)?;
    if !archive.is_empty() {
        return Err(QdError::InvalidConfig("initialize needs an empty archive".into()));
    }
    let mut engine = Engine {
        model,
        evaluator,
        archive,
        events: Vec::new(),
        failed: 0,
    };
    seed_population(&mut engine, ec, rng);
    Ok(())
}

fn check_inputs(archive: &Archive, model: &VaeModel, ec: &EvolutionConfig) -> Result<(), QdError> {
    ec.validate_engine()?;
    let vocab = archive.scheme.config.vocab_size();
    if model.vocab_size != vocab {
        return Err(QdError::VocabMismatch {
            model: model.vocab_size,
            scheme: vocab,
        });
    }
    Ok(())
}

fn seed_population<E: Evaluator + ?Sized, R: Rng + ?Sized>(
    engine: &mut Engine<'_, E>,
    ec: &EvolutionConfig,
    rng: &mut R,
) {
    let init = sample_latent(ec.init_population, rng).expect("validated init_population");
    let evaluated = evaluate_all(engine, &init, ec.threads);
    for (z, (seg, ev)) in init.into_iter().zip(evaluated) {
        engine.commit(z, &seg, ev, 0);
    }
}

fn evaluate_all<E: Evaluator + ?Sized>(
    engine: &Engine<'_, E>,
    latents: &[LatentVector],
    threads: usize,
) -> Vec<(Segment, Evaluation)> {
    if threads <= 1 || latents.len() < 2 {
        return latents.iter().map(|z| engine.evaluate(z)).collect();
    }
    let chunk = latents.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = latents
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|z| engine.evaluate(z)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("evaluation thread panicked"))
            .collect()
    })
}

/// Runs MAP-Elites: initialization followed by `ec.generations` single-child
/// iterations. With `ec.threads > 1`, children are produced in batches of
/// `threads` from the archive as it stood at the start of the batch and
/// evaluated concurrently; placement stays serial.
pub fn run(
    model: &VaeModel,
    scheme: BcScheme,
    evaluator: &(impl Evaluator + ?Sized),
    ec: &EvolutionConfig,
) -> Result<RunOutput, QdError> {
    run_with(model, scheme, evaluator, ec, |_| {})
}

/// As [`run`], reporting every snapshot as it is taken.
pub fn run_with(
    model: &VaeModel,
    scheme: BcScheme,
    evaluator: &(impl Evaluator + ?Sized),
    ec: &EvolutionConfig,
    mut on_snapshot: impl FnMut(&Snapshot),
) -> Result<RunOutput, QdError> {
    let mut archive = Archive::new(scheme, evaluator.members());
    check_inputs(&archive, model, ec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ec.seed);
    let mut engine = Engine {
        model,
        evaluator,
        archive: &mut archive,
        events: Vec::new(),
        failed: 0,
    };
    seed_population(&mut engine, ec, &mut rng);
    let mut series = vec![engine.snapshot(0)];
    on_snapshot(&series[0]);
    let batch = ec.threads.max(1);
    let mut generation = 0;
    while generation < ec.generations {
        let k = batch.min(ec.generations - generation);
        let mut children = Vec::with_capacity(k);
        for _ in 0..k {
            let (p1, p2) = engine.archive.select_parents(&mut rng)?;
            children.push(vary(p1, p2, ec, &mut rng));
        }
        let evaluated = evaluate_all(&engine, &children, ec.threads);
        for (z, (seg, ev)) in children.into_iter().zip(evaluated) {
            generation += 1;
            engine.commit(z, &seg, ev, generation);
            if generation % ec.snapshot_every == 0 || generation == ec.generations {
                let snap = engine.snapshot(generation);
                on_snapshot(&snap);
                series.push(snap);
            }
        }
    }
    if engine.failed > 0 {
        log::info!("{} candidates had no start state and scored 0", engine.failed);
    }
    let (events, failed_evaluations) = (engine.events, engine.failed);
    Ok(RunOutput {
        archive,
        series,
        events,
        failed_evaluations,
    })
}

/// Latent dimension check for externally supplied vectors.
pub fn check_latent(z: &LatentVector) -> bool {
    z.0.len() == LATENT_DIM && z.is_finite()
}
