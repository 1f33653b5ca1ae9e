//! Command-line pipeline: synth, ingest, train, evolve, report.
//!
//! Every subcommand reads its section of an optional JSON run config
//! (`{"train": {"epochs": 500}, ...}`) and lets flags override it. Inputs are
//! validated before anything is written.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::agents::{member_agents, AgentSet};
use crate::config::{BlendTable, GameConfig};
use crate::corpus::{build_blend_corpus, build_corpus, load_level_dir, Corpus, CorpusCache};
use crate::metrics::{BcScheme, SchemeKind};
use crate::qd::{self, BlendEvaluator, EvolutionConfig, GameEvaluator, RunManifest};
use crate::report::{self, EliteQuery, HeatmapMode, SummaryFile};
use crate::synth::synth_levels;
use crate::vae::{self, Architecture, TrainConfig, TrainError, VaeModel};

pub const LOG_ENV: &str = "LATENT_ELITES_LOG";

#[derive(Parser, Debug)]
#[command(name = "latent-elites", version, about = "Latent-space MAP-Elites for tile-based platformer segments")]
pub struct Cli {
    /// JSON run config with one section per command; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write toy VGLC-style level files for stock games.
    Synth(SynthArgs),
    /// Parse level directories into a segment cache.
    Ingest(IngestArgs),
    /// Train a VAE on a segment cache.
    Train(TrainArgs),
    /// Run MAP-Elites in a trained model's latent space.
    Evolve(EvolveArgs),
    /// Summarize, render and query a finished run.
    Report(ReportArgs),
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthArgs {
    /// Stock game name; repeat for several.
    #[arg(long)]
    pub game: Vec<String>,
    #[arg(long)]
    pub count: Option<usize>,
    /// Tiles along the scroll axis.
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestArgs {
    /// Stock game name or path to a game config JSON; repeat with --levels.
    #[arg(long)]
    pub game: Vec<String>,
    /// Directory of `.txt` levels, one per --game.
    #[arg(long)]
    pub levels: Vec<PathBuf>,
    /// Blend all given games into one corpus.
    #[arg(long)]
    pub blend: bool,
    /// Category table used for blending; defaults to the built-in one.
    #[arg(long)]
    pub blend_table: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainArgs {
    /// Corpus cache written by `ingest`.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub decay_every: Option<usize>,
    #[arg(long)]
    pub decay_factor: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub kl_weight: Option<f64>,
    /// Hidden widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Model directory written by `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// denl, symsim or elements.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub init_population: Option<usize>,
    #[arg(long)]
    pub mutation_prob: Option<f64>,
    #[arg(long)]
    pub mutation_sigma: Option<f64>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Concurrent evaluations; values above 1 give up byte reproducibility.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportArgs {
    /// Run directory written by `evolve`.
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Needed only when querying elites.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// svg or ppm.
    #[arg(long)]
    pub format: Option<String>,
    /// Cell range on the density axis, `N` or `LO..HI`.
    #[arg(long)]
    pub density: Option<String>,
    #[arg(long)]
    pub nonlinearity: Option<String>,
    #[arg(long)]
    pub symmetry: Option<String>,
    #[arg(long)]
    pub similarity: Option<String>,
    #[arg(long)]
    pub elements: Option<String>,
    #[arg(long)]
    pub min_fitness: Option<f64>,
    /// Member names the cell history must include, comma separated.
    #[arg(long)]
    pub agents: Option<String>,
}

/// Validation problems exit with 2, runtime failures with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn usage(m: impl std::fmt::Display) -> CliError {
    CliError::Usage(m.to_string())
}

fn runtime(m: impl std::fmt::Display) -> CliError {
    CliError::Runtime(m.to_string())
}

type CliResult<T> = Result<T, CliError>;

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("config {}: {e}", p.display())))?;
            serde_json::from_str::<Value>(&text).map_err(|e| usage(format!("config {}: {e}", p.display())))?
        }
        None => Value::Null,
    };
    match cli.command {
        Command::Synth(a) => cmd_synth(merge(a, &file, "synth")?),
        Command::Ingest(a) => cmd_ingest(merge(a, &file, "ingest")?),
        Command::Train(a) => cmd_train(merge(a, &file, "train")?),
        Command::Evolve(a) => cmd_evolve(merge(a, &file, "evolve")?),
        Command::Report(a) => cmd_report(merge(a, &file, "report")?),
    }
}

/// Overlays flags that were given onto the config file section.
fn merge<T: Serialize + DeserializeOwned>(flags: T, file: &Value, section: &str) -> CliResult<T> {
    let mut base = match file.get(section) {
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(usage(format!("config section {section:?} must be an object"))),
        None => Default::default(),
    };
    let Value::Object(given) = serde_json::to_value(&flags).map_err(usage)? else {
        unreachable!("argument structs serialize to objects")
    };
    for (k, v) in given {
        let unset = match &v {
            Value::Null | Value::Bool(false) => true,
            Value::Array(a) => a.is_empty(),
            _ => false,
        };
        if !unset {
            base.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| usage(format!("config section {section:?}: {e}")))
}

fn required<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("--{flag} is required")))
}

fn existing(path: Option<PathBuf>, flag: &str) -> CliResult<PathBuf> {
    let p = required(path, flag)?;
    if !p.exists() {
        return Err(usage(format!("--{flag} {} does not exist", p.display())));
    }
    Ok(p)
}

/// A stock game name, or a path to a game config JSON.
fn resolve_game(spec: &str) -> CliResult<GameConfig> {
    let looks_like_path = spec.ends_with(".json") || spec.contains(std::path::MAIN_SEPARATOR) || spec.contains('/');
    if looks_like_path {
        let p = Path::new(spec);
        if !p.is_file() {
            return Err(usage(format!("game config {spec} does not exist")));
        }
        GameConfig::load(p).map_err(usage)
    } else {
        GameConfig::stock(spec).map_err(usage)
    }
}

fn cmd_synth(a: SynthArgs) -> CliResult<()> {
    let out = required(a.out, "out")?;
    if a.game.is_empty() {
        return Err(usage("--game is required"));
    }
    let (count, length, seed) = (a.count.unwrap_or(6), a.length.unwrap_or(80), a.seed.unwrap_or(0));
    let mut all = Vec::new();
    for g in &a.game {
        all.push((g.to_lowercase(), synth_levels(g, count, length, seed).map_err(usage)?));
    }
    for (dir, levels) in all {
        let d = out.join(&dir);
        fs::create_dir_all(&d).map_err(runtime)?;
        for l in &levels {
            fs::write(d.join(format!("{}.txt", l.name)), &l.text).map_err(runtime)?;
        }
        println!("{}: {} levels in {}", dir, levels.len(), d.display());
    }
    Ok(())
}

fn cmd_ingest(a: IngestArgs) -> CliResult<()> {
    let out = required(a.out, "out")?;
    if a.game.is_empty() || a.game.len() != a.levels.len() {
        return Err(usage("give one --levels directory per --game"));
    }
    if a.game.len() > 1 && !a.blend {
        return Err(usage("several games need --blend"));
    }
    if a.blend && a.game.len() < 2 {
        return Err(usage("--blend needs at least two games"));
    }
    let configs = a.game.iter().map(|g| resolve_game(g)).collect::<CliResult<Vec<_>>>()?;
    for dir in &a.levels {
        if !dir.is_dir() {
            return Err(usage(format!("--levels {} is not a directory", dir.display())));
        }
    }
    let table = match &a.blend_table {
        Some(p) if !p.is_file() => return Err(usage(format!("--blend-table {} does not exist", p.display()))),
        Some(p) => BlendTable::load(p).map_err(usage)?,
        None => BlendTable::stock(),
    };
    let mut corpora = Vec::new();
    for (cfg, dir) in configs.iter().zip(&a.levels) {
        let grids = load_level_dir(dir, cfg).map_err(runtime)?;
        let corpus = build_corpus(&grids, cfg).map_err(runtime)?;
        log::info!("{}: {} levels, {} segments", cfg.name, grids.len(), corpus.len());
        corpora.push((corpus, cfg.clone()));
    }
    let counts: BTreeMap<String, usize> = corpora.iter().map(|(c, g)| (g.name.clone(), c.len())).collect();
    let cache = if a.blend {
        let (corpus, blend) = build_blend_corpus(&corpora, &table).map_err(runtime)?;
        CorpusCache::new(corpus, blend.config, blend.members, counts)
    } else {
        let (corpus, cfg) = corpora.pop().expect("one corpus");
        CorpusCache::new(corpus, cfg, Vec::new(), counts)
    };
    cache.write(&out).map_err(runtime)?;
    println!(
        "{}: {} segments ({}) -> {}",
        cache.manifest.game,
        cache.manifest.segment_count,
        cache
            .manifest
            .counts
            .iter()
            .map(|(g, n)| format!("{g} {n}"))
            .collect::<Vec<_>>()
            .join(", "),
        out.display()
    );
    Ok(())
}

fn read_cache(path: Option<PathBuf>) -> CliResult<CorpusCache> {
    let dir = existing(path, "corpus")?;
    CorpusCache::read(&dir).map_err(usage)
}

pub const TRAIN_LOG: &str = "train_log.csv";

fn cmd_train(a: TrainArgs) -> CliResult<()> {
    let out = required(a.out, "out")?;
    let cache = read_cache(a.corpus)?;
    let d = TrainConfig::default();
    let tc = TrainConfig {
        epochs: a.epochs.unwrap_or(d.epochs),
        learning_rate: a.learning_rate.unwrap_or(d.learning_rate),
        decay_every: a.decay_every.unwrap_or(d.decay_every),
        decay_factor: a.decay_factor.unwrap_or(d.decay_factor),
        batch_size: a.batch_size.unwrap_or(d.batch_size),
        kl_weight: a.kl_weight.unwrap_or(d.kl_weight),
        seed: required(a.seed, "seed")?,
        architecture: a.hidden.map(|hidden| Architecture { hidden }).unwrap_or_default(),
    };
    tc.validate().map_err(usage)?;
    let cfg = &cache.config;
    let every = (tc.epochs / 10).max(1);
    let result = vae::train_with(&cache.corpus, cfg.vocab_size(), &cfg.name, &tc, |e| {
        if e.epoch % every == 0 || e.epoch == 1 {
            log::info!("epoch {}: loss {:.4} (recon {:.4}, kl {:.4})", e.epoch, e.mean_total, e.mean_recon, e.mean_kl);
        }
    });
    let vocab: Vec<String> = cfg.tile_chars.iter().map(|c| c.to_string()).collect();
    match result {
        Ok(outcome) => {
            let manifest = outcome.model.manifest(vocab, cfg.vocab_hash(), Some(tc));
            outcome.model.save(&out, &manifest).map_err(runtime)?;
            vae::write_log_csv(&outcome.log, &out.join(TRAIN_LOG)).map_err(runtime)?;
            let (first, last) = (outcome.log[0], *outcome.log.last().expect("epochs > 0"));
            println!(
                "trained {} epochs on {} segments: recon {:.4} -> {:.4}, kl {:.4}; model {}",
                last.epoch,
                cache.corpus.len(),
                first.mean_recon,
                last.mean_recon,
                last.mean_kl,
                &manifest.blob_sha256[..16]
            );
            Ok(())
        }
        Err(TrainError::NonFiniteLoss { epoch, checkpoint, log }) => {
            let dir = out.join("checkpoint");
            let manifest = checkpoint.manifest(vocab, cfg.vocab_hash(), Some(tc));
            checkpoint.save(&dir, &manifest).map_err(runtime)?;
            vae::write_log_csv(&log, &dir.join(TRAIN_LOG)).map_err(runtime)?;
            Err(runtime(format!(
                "loss became non-finite in epoch {}; last stable model kept in {}",
                epoch + 1,
                dir.display()
            )))
        }
        Err(e) => Err(runtime(e)),
    }
}

fn load_model(path: Option<PathBuf>, cache: &CorpusCache) -> CliResult<(VaeModel, vae::ModelManifest)> {
    let dir = existing(path, "model")?;
    let (model, manifest) = VaeModel::load(&dir).map_err(usage)?;
    if manifest.vocab_hash != cache.config.vocab_hash() {
        return Err(usage(format!(
            "model vocabulary ({}) does not match corpus {} vocabulary",
            manifest.game_tag, cache.config.name
        )));
    }
    Ok((model, manifest))
}

pub const ARCHIVE_FILE: &str = "archive.csv";
pub const SERIES_FILE: &str = "series.csv";
pub const RUN_FILE: &str = "run.json";

fn cmd_evolve(a: EvolveArgs) -> CliResult<()> {
    let out = required(a.out, "out")?;
    let cache = read_cache(a.corpus)?;
    let (model, model_manifest) = load_model(a.model, &cache)?;
    let d = EvolutionConfig::default();
    let ec = EvolutionConfig {
        generations: a.generations.unwrap_or(d.generations),
        init_population: a.init_population.unwrap_or(d.init_population),
        mutation_prob: a.mutation_prob.unwrap_or(d.mutation_prob),
        mutation_sigma: a.mutation_sigma.unwrap_or(d.mutation_sigma),
        seed: required(a.seed, "seed")?,
        scheme: required(a.scheme, "scheme")?.parse::<SchemeKind>().map_err(usage)?,
        snapshot_every: a.snapshot_every.unwrap_or(d.snapshot_every),
        threads: a.threads.unwrap_or(1),
    };
    ec.validate().map_err(usage)?;
    let scheme = BcScheme::new(ec.scheme, &cache.config, &cache.corpus.references);
    let every = (ec.generations / 10).max(ec.snapshot_every);
    let progress = |s: &qd::Snapshot| {
        if s.generation % every == 0 {
            log::info!("generation {}: qd {:.3}, coverage {:.2}%", s.generation, s.qd_score, s.coverage_pct);
        }
    };
    let output = match cache.blend() {
        Some(blend) => {
            let ev = BlendEvaluator {
                agents: member_agents(&blend),
                names: blend.member_names(),
            };
            qd::run_with(&model, scheme, &ev, &ec, progress)
        }
        None => {
            let ev = GameEvaluator {
                config: cache.config.clone(),
            };
            qd::run_with(&model, scheme, &ev, &ec, progress)
        }
    }
    .map_err(runtime)?;
    let archive = &output.archive;
    let manifest = RunManifest {
        game: cache.config.name.clone(),
        members: archive.members.clone(),
        scheme: ec.scheme.short_name().to_string(),
        archive_size: archive.archive_size(),
        config: ec.clone(),
        model_hash: model_manifest.blob_sha256.clone(),
        vocab_hash: cache.config.vocab_hash(),
        generations_run: ec.generations,
        occupied: archive.occupied(),
        qd_score: archive.qd_score(),
        coverage_pct: archive.coverage_pct(),
        failed_evaluations: output.failed_evaluations,
        reproducible: ec.threads == 1,
    };
    fs::create_dir_all(&out).map_err(runtime)?;
    qd::write_archive_csv(archive, &out.join(ARCHIVE_FILE)).map_err(runtime)?;
    qd::write_series_csv(&output.series, &out.join(SERIES_FILE)).map_err(runtime)?;
    manifest.write(&out.join(RUN_FILE)).map_err(runtime)?;
    println!(
        "{} {} after {} generations: qd-score {:.3}, coverage {:.2}% ({} of {} cells)",
        manifest.game,
        manifest.scheme,
        ec.generations,
        manifest.qd_score,
        manifest.coverage_pct,
        manifest.occupied,
        manifest.archive_size
    );
    Ok(())
}

fn parse_range(flag: &str, s: &str) -> CliResult<(usize, usize)> {
    let bad = || usage(format!("--{flag} expects N or LO..HI, got {s:?}"));
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?),
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn cmd_report(a: ReportArgs) -> CliResult<()> {
    let out = required(a.out.clone(), "out")?;
    let run_dir = existing(a.run.clone(), "run")?;
    let cache = read_cache(a.corpus.clone())?;
    let run_path = run_dir.join(RUN_FILE);
    let run_bytes = fs::read(&run_path).map_err(|e| usage(format!("{}: {e}", run_path.display())))?;
    let manifest: RunManifest = serde_json::from_slice(&run_bytes).map_err(|e| usage(format!("{}: {e}", run_path.display())))?;
    if manifest.vocab_hash != cache.config.vocab_hash() {
        return Err(usage("run and corpus use different vocabularies"));
    }
    let kind: SchemeKind = manifest.scheme.parse().map_err(usage)?;
    let scheme = BcScheme::new(kind, &cache.config, &cache.corpus.references);
    let format = a.format.clone().unwrap_or_else(|| "svg".into());
    if format != "svg" && format != "ppm" {
        return Err(usage("--format must be svg or ppm"));
    }

    let flags = [
        ("density", &a.density),
        ("nonlinearity", &a.nonlinearity),
        ("symmetry", &a.symmetry),
        ("similarity", &a.similarity),
        ("elements", &a.elements),
    ];
    let mut ranges = vec![None; scheme.dims.len()];
    for (name, value) in flags {
        let Some(v) = value else { continue };
        let Some(pos) = scheme.dims.iter().position(|d| d.name == name) else {
            return Err(usage(format!("--{name} does not apply to the {kind} scheme")));
        };
        ranges[pos] = Some(parse_range(name, v)?);
    }
    let members = manifest.members.clone();
    let agents = match &a.agents {
        Some(s) => {
            let m = members.as_ref().ok_or_else(|| usage("--agents needs a blend run"))?;
            let names: Vec<&str> = s.split(',').map(str::trim).collect();
            Some(AgentSet::from_names(&names, m).map_err(usage)?)
        }
        None => None,
    };
    let query = EliteQuery {
        ranges,
        min_fitness: a.min_fitness,
        agents,
    };
    let querying = query.ranges.iter().any(Option::is_some) || query.min_fitness.is_some() || query.agents.is_some();
    let model = if querying {
        Some(load_model(a.model.clone(), &cache)?.0)
    } else {
        None
    };
    let archive = qd::read_archive_csv(&run_dir.join(ARCHIVE_FILE), scheme, members).map_err(runtime)?;

    fs::create_dir_all(&out).map_err(runtime)?;
    let summary = report::summarize(&archive);
    SummaryFile {
        summary,
        scheme: kind.short_name().to_string(),
        manifest_sha256: Some(hex::encode(Sha256::digest(&run_bytes))),
    }
    .write(&out.join("summary.json"))
    .map_err(runtime)?;
    report::render_heatmap(&archive, HeatmapMode::Fitness, &out.join(format!("heatmap_fitness.{format}")))
        .map_err(runtime)?;
    if archive.is_blend() {
        report::render_heatmap(&archive, HeatmapMode::AgentSet, &out.join(format!("heatmap_agents.{format}")))
            .map_err(runtime)?;
        let regions = report::blend_region_map(&archive).map_err(runtime)?;
        let mut w = csv::Writer::from_path(out.join("regions.csv")).map_err(runtime)?;
        w.write_record(["agent_mask", "label", "cells"]).map_err(runtime)?;
        for (v, n) in regions.counts().iter().enumerate() {
            let label = regions.label(AgentSet(v as u8));
            w.write_record([v.to_string(), label, n.to_string()]).map_err(runtime)?;
        }
        w.flush().map_err(runtime)?;
    }
    println!(
        "qd-score {:.3}, coverage {:.2}% ({} of {}), optimal {:.2}%",
        summary.qd_score, summary.coverage_pct, summary.occupied, summary.archive_size, summary.optimal_pct
    );
    if let Some(model) = model {
        let found = report::query_elites(&archive, &model, |c, e, h| query.matches(c, e, h));
        let dir = out.join("elites");
        fs::create_dir_all(&dir).map_err(runtime)?;
        for (cell, elite, segment) in &found {
            let stem: Vec<String> = cell.0.iter().map(|i| i.to_string()).collect();
            let stem = format!("cell_{}", stem.join("_"));
            fs::write(dir.join(format!("{stem}.txt")), report::render_segment(segment, &cache.config)).map_err(runtime)?;
            fs::write(dir.join(format!("{stem}.svg")), report::segment_svg(segment, &cache.config)).map_err(runtime)?;
            println!("{cell} fitness {:.4} -> {}", elite.fitness, dir.join(format!("{stem}.txt")).display());
        }
        println!("{} matching elites", found.len());
    }
    Ok(())
}

/// Convenience for tests and scripting: corpus from a synthetic game.
pub fn synth_corpus(game: &str, count: usize, length: usize, seed: u64) -> Result<(Corpus, GameConfig), String> {
    let cfg = GameConfig::stock(game).map_err(|e| e.to_string())?;
    let grids = synth_levels(game, count, length, seed)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|l| crate::corpus::parse_level(&l.text, &cfg))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let corpus = build_corpus(&grids, &cfg).map_err(|e| e.to_string())?;
    Ok((corpus, cfg))
}
