mod common;

use std::collections::HashMap;

use common::*;
use latent_elites::agents::{member_agents, AgentSet};
use latent_elites::corpus::Segment;
use latent_elites::metrics::{BcScheme, CellCoord, SchemeKind};
use latent_elites::qd::{
    read_archive_csv, run, vary, write_archive_csv, Archive, BlendEvaluator, EvolutionConfig,
    Evaluator, GameEvaluator, Outcome, QdError, RunOutput,
};
use latent_elites::vae::{Architecture, LatentVector, VaeModel, LATENT_DIM};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn z(v: f64) -> LatentVector {
    LatentVector(vec![v; LATENT_DIM])
}

fn four_cell_archive() -> Archive {
    let ki = stock("KI");
    let mut a = Archive::new(BcScheme::game_elements(&ki), None);
    let bg = ki.background();
    for (i, ch) in [None, Some('H'), Some('D'), Some('M')].into_iter().enumerate() {
        let mut s = Segment::filled(bg, "KI");
        if let Some(ch) = ch {
            s.set(5, 5, ki.tile_id(ch).unwrap());
        }
        assert_eq!(a.place(z(i as f64), &s, 0.5, None, 0).outcome, Outcome::Inserted);
    }
    assert_eq!(a.occupied(), 4);
    a
}

#[test]
fn parent_selection_is_uniform_over_occupied_cells() {
    let a = four_cell_archive();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let draws = 100_000;
    let mut counts = [[0usize; 4]; 2];
    for _ in 0..draws {
        let (p1, p2) = a.select_parents(&mut rng).unwrap();
        counts[0][p1.0[0] as usize] += 1;
        counts[1][p2.0[0] as usize] += 1;
    }
    for side in counts {
        for c in side {
            let share = c as f64 / draws as f64;
            assert!((share - 0.25).abs() < 0.01, "share {share}");
        }
    }
}

#[test]
fn empty_archive_has_no_parents() {
    let a = Archive::new(BcScheme::game_elements(&stock("KI")), None);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(matches!(a.select_parents(&mut rng), Err(QdError::EmptyArchive)));
}

#[test]
fn crossover_and_mutation_rates() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let plain = EvolutionConfig {
        mutation_prob: 0.0,
        ..EvolutionConfig::default()
    };
    let (zero, one) = (z(0.0), z(1.0));
    let children = 20_000;
    let mut from_first = 0usize;
    for _ in 0..children {
        from_first += vary(&zero, &one, &plain, &mut rng).0.iter().filter(|&&g| g == 0.0).count();
    }
    let share = from_first as f64 / (children * LATENT_DIM) as f64;
    assert!((share - 0.5).abs() < 0.01, "gene share {share}");

    let ec = EvolutionConfig::default();
    let mut mutated = 0usize;
    let (mut sum, mut sum_sq, mut n) = (0.0, 0.0, 0usize);
    for _ in 0..children {
        let c = vary(&zero, &zero, &ec, &mut rng);
        if c.0.iter().any(|&g| g != 0.0) {
            mutated += 1;
            for g in c.0 {
                sum += g;
                sum_sq += g * g;
                n += 1;
            }
        } else {
            assert!(c.0.iter().all(|&g| g == 0.0));
        }
    }
    let rate = mutated as f64 / children as f64;
    assert!((rate - ec.mutation_prob).abs() < 0.01, "mutation rate {rate}");
    let mean = sum / n as f64;
    let sd = (sum_sq / n as f64 - mean * mean).sqrt();
    assert!(mean.abs() < 0.01 && (sd - ec.mutation_sigma).abs() < 0.01, "mean {mean}, sd {sd}");
}

fn small_model(vocab: usize, game: &str, seed: u64) -> VaeModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    VaeModel::new(vocab, game, &Architecture { hidden: vec![32, 16] }, &mut rng)
}

fn small_run(game: &str, kind: SchemeKind, seed: u64, threads: usize) -> (RunOutput, VaeModel, BcScheme, GameEvaluator) {
    let (corpus, cfg) = toy_corpus(game, 2, 1);
    let model = small_model(cfg.vocab_size(), game, 7);
    let scheme = BcScheme::new(kind, &cfg, &corpus.references);
    let ec = EvolutionConfig {
        generations: 1_500,
        init_population: 100,
        seed,
        scheme: kind,
        snapshot_every: 250,
        threads,
        ..EvolutionConfig::default()
    };
    let ev = GameEvaluator { config: cfg };
    let out = run(&model, scheme.clone(), &ev, &ec).unwrap();
    (out, model, scheme, ev)
}

/// Every stored elite decodes to a segment in its own cell with its own fitness.
fn audit(archive: &Archive, model: &VaeModel, ev: &dyn Evaluator) {
    for e in archive.elites() {
        let seg = model.decode(&e.latent);
        assert_eq!(archive.scheme.assign_cell(&seg), e.cell);
        let got = ev.evaluate(&seg);
        assert_eq!(got.fitness, e.fitness, "cell {}", e.cell);
        assert_eq!(got.agents, e.agents);
        assert!(archive.history(&e.cell).is_superset(e.agents.unwrap_or_default()));
    }
}

#[test]
fn elites_survive_an_audit() {
    for (game, kind) in [("SMB", SchemeKind::DensityNonlinearity), ("MM", SchemeKind::SymmetrySimilarity), ("KI", SchemeKind::GameElements)] {
        let (out, model, _, ev) = small_run(game, kind, 3, 1);
        // An untrained decoder rarely varies game elements.
        let floor = if kind == SchemeKind::GameElements { 1 } else { 2 };
        assert!(out.archive.occupied() >= floor, "{game}");
        audit(&out.archive, &model, &ev);
    }
}

#[test]
fn event_log_replays_to_the_archive() {
    let (out, _, scheme, _) = small_run("SMB", SchemeKind::DensityNonlinearity, 4, 1);
    assert_eq!(out.events.len(), 100 + 1_500);
    let mut best: HashMap<CellCoord, (f64, usize)> = HashMap::new();
    let mut replaced = 0;
    for ev in &out.events {
        let expected = match best.get(&ev.cell) {
            None => Outcome::Inserted,
            Some(&(f, _)) if ev.fitness > f => Outcome::Replaced,
            Some(_) => Outcome::Rejected,
        };
        assert_eq!(ev.outcome, expected);
        replaced += usize::from(expected == Outcome::Replaced);
        if expected != Outcome::Rejected {
            best.insert(ev.cell.clone(), (ev.fitness, ev.generation));
        }
    }
    assert!(replaced > 0, "no replacements to check");
    assert_eq!(best.len(), out.archive.occupied());
    for e in out.archive.elites() {
        assert_eq!(best[&e.cell], (e.fitness, e.generation_found));
    }
    // Snapshots never lose ground and end on the final archive.
    for w in out.series.windows(2) {
        assert!(w[1].generation > w[0].generation);
        assert!(w[1].qd_score >= w[0].qd_score);
        assert!(w[1].coverage_pct >= w[0].coverage_pct);
    }
    let generations: Vec<usize> = out.series.iter().map(|s| s.generation).collect();
    assert_eq!(generations, vec![0, 250, 500, 750, 1000, 1250, 1500]);
    let last = out.series.last().unwrap();
    assert_eq!(last.qd_score, out.archive.qd_score());
    let expected = 100.0 * out.archive.occupied() as f64 / scheme.archive_size() as f64;
    assert_eq!(last.coverage_pct, expected);
}

#[test]
fn fixed_seed_runs_are_identical() {
    let (a, ..) = small_run("CV", SchemeKind::DensityNonlinearity, 5, 1);
    let (b, ..) = small_run("CV", SchemeKind::DensityNonlinearity, 5, 1);
    let (c, ..) = small_run("CV", SchemeKind::DensityNonlinearity, 6, 1);
    assert_eq!(a.events, b.events);
    assert_eq!(a.series, b.series);
    assert_ne!(a.events, c.events);
}

#[test]
fn threaded_runs_keep_the_invariants() {
    let (out, model, _, ev) = small_run("NG", SchemeKind::DensityNonlinearity, 8, 4);
    assert_eq!(out.events.len(), 1_600);
    audit(&out.archive, &model, &ev);
}

#[test]
fn blend_runs_track_agent_histories() {
    let (corpus, blend) = blend_of(&["SMB", "KI", "MM"], 2, 1);
    let model = small_model(blend.config.vocab_size(), &blend.config.name, 9);
    let scheme = BcScheme::new(SchemeKind::DensityNonlinearity, &blend.config, &corpus.references);
    let ev = BlendEvaluator {
        agents: member_agents(&blend),
        names: blend.member_names(),
    };
    let ec = EvolutionConfig {
        generations: 600,
        init_population: 100,
        seed: 2,
        ..EvolutionConfig::default()
    };
    let out = run(&model, scheme, &ev, &ec).unwrap();
    assert!(out.archive.is_blend());
    audit(&out.archive, &model, &ev);
    // A history is exactly the union of every candidate's agent set.
    let mut union: HashMap<CellCoord, AgentSet> = HashMap::new();
    for e in &out.events {
        let h = union.entry(e.cell.clone()).or_default();
        *h = h.union(e.agents.unwrap());
    }
    for (cell, h) in union {
        assert_eq!(out.archive.history(&cell), h);
    }
}

#[test]
fn archive_csv_round_trip_preserves_everything() {
    let (out, ..) = small_run("SMB", SchemeKind::DensityNonlinearity, 10, 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("archive.csv");
    write_archive_csv(&out.archive, &path).unwrap();
    let back = read_archive_csv(&path, out.archive.scheme.clone(), None).unwrap();
    let a: Vec<_> = out.archive.elites().cloned().collect();
    let b: Vec<_> = back.elites().cloned().collect();
    assert_eq!(a, b);
    assert_eq!(back.qd_score(), out.archive.qd_score());
    // The fitness column alone reproduces the score.
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let col = rdr.headers().unwrap().iter().position(|h| h == "fitness").unwrap();
    let sum: f64 = rdr.records().map(|r| r.unwrap()[col].parse::<f64>().unwrap()).sum();
    assert_eq!(sum, out.archive.qd_score());
}

#[test]
fn mismatched_vocabulary_is_rejected() {
    let cfg = stock("SMB");
    let model = small_model(5, "other", 1);
    let ev = GameEvaluator { config: cfg.clone() };
    let err = run(&model, BcScheme::density_nonlinearity(&cfg), &ev, &EvolutionConfig::default()).unwrap_err();
    assert!(matches!(err, QdError::VocabMismatch { model: 5, .. }));
}
