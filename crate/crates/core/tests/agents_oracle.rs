mod common;

use common::*;
use latent_elites::agents::{blend_play, member_agents, play, PlayError};
use latent_elites::config::GameConfig;
use latent_elites::corpus::{parse_level, segment_level, Segment, TileId};
use latent_elites::synth::synth_levels;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLES: usize = 500;

#[test]
fn agent_matches_reachability_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for cfg in all_stock() {
        let (mut done, mut stuck, mut none) = (0, 0, 0);
        for i in 0..SAMPLES {
            let s = oracle_sample(&cfg, &mut rng, i);
            match compare_with_oracle(&s, &cfg).unwrap() {
                Some(true) => done += 1,
                Some(false) => stuck += 1,
                None => none += 1,
            }
        }
        // The sample should exercise both outcomes.
        assert!(done > 20 && stuck > 20, "{}: {done} completed, {stuck} stuck, {none} unplayable", cfg.name);
    }
}

#[test]
fn agent_matches_oracle_on_synthetic_levels() {
    for cfg in all_stock() {
        for lvl in synth_levels(&cfg.name, 3, 64, 5).unwrap() {
            let grid = parse_level(&lvl.text, &cfg).unwrap();
            for seg in segment_level(&grid, &cfg).unwrap() {
                compare_with_oracle(&seg, &cfg).unwrap();
            }
        }
    }
}

#[test]
fn open_segments_complete() {
    for cfg in all_stock() {
        let bg = cfg.background();
        let open = match cfg.tile_id('T') {
            // Vertical climbs need a ladder of one-way platforms.
            Some(t) => Segment::from_fn(cfg.name.clone(), |r, _| if r % 4 == 0 && r > 0 { t } else { bg }),
            None => Segment::filled(bg, cfg.name.clone()),
        };
        let r = play(&open, &cfg).unwrap();
        assert!(r.completed, "{}", cfg.name);
        assert_eq!(r.fitness, 1.0);
    }
}

#[test]
fn solid_wall_blocks_smb() {
    let cfg = stock("SMB");
    let x = cfg.tile_id('X').unwrap();
    let bg = cfg.background();
    let wall = Segment::from_fn("SMB", |r, c| if r == 15 || c == 8 { x } else { bg });
    let r = play(&wall, &cfg).unwrap();
    assert!(!r.completed);
    assert_eq!(r.best_frontier.0, 7);
    assert_eq!(r.fitness, 7.0 / 15.0);
}

#[test]
fn no_start_is_an_error() {
    let cfg = stock("SMB");
    let x = cfg.tile_id('X').unwrap();
    let bg = cfg.background();
    let s = Segment::from_fn("SMB", |_, c| if c == 0 { x } else { bg });
    assert_eq!(play(&s, &cfg), Err(PlayError::NoStartState));
}

// Removing a tile the agent stands on can cost it the route: a tall wall
// is only climbable by hopping onto a ledge first.
#[test]
fn removing_a_stepping_stone_can_lower_fitness() {
    let cfg = stock("SMB");
    let rows = [
        "----------------",
        "----------------",
        "----------------",
        "----------------",
        "----------------",
        "----------------",
        "----------------",
        "----------------",
        "-------X--------",
        "-------X--------",
        "-------X--------",
        "----XX-X--------",
        "-------X--------",
        "-------X--------",
        "-------X--------",
        "XXXXXXXXXXXXXXXX",
    ];
    let with = Segment::from_text(&rows.join("\n"), &cfg).unwrap();
    let mut without = with.clone();
    without.set(11, 4, cfg.background());
    without.set(11, 5, cfg.background());
    let a = play(&with, &cfg).unwrap();
    let b = play(&without, &cfg).unwrap();
    assert!(a.completed);
    assert!(b.fitness < a.fitness);
}

fn unsupporting_solids(seg: &Segment, cfg: &GameConfig) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..16 {
        for c in 0..16 {
            let k = cfg.category(seg.get(r, c));
            let above_blocked = r == 0 || !cfg.category(seg.get(r - 1, c)).passable();
            if (k.solid && !k.standable && above_blocked) || k.hazard {
                out.push((r, c));
            }
        }
    }
    out
}

fn arb_game() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("SMB"), Just("KI"), Just("MM"), Just("CV"), Just("NG")]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fitness_one_iff_completed(seed in any::<u64>(), game in arb_game()) {
        let cfg = stock(game);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_padded_segment(&cfg, &mut rng);
        if let Ok(r) = play(&s, &cfg) {
            prop_assert!((0.0..=1.0).contains(&r.fitness));
            prop_assert_eq!(r.fitness == 1.0, r.completed);
            prop_assert_eq!(play(&s, &cfg).unwrap(), r);
        }
    }

    // Clearing a hazard, or a solid tile that supports nothing passable,
    // only ever opens new moves.
    #[test]
    fn clearing_non_supporting_obstacles_never_hurts(seed in any::<u64>(), game in arb_game()) {
        let cfg = stock(game);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_segment(&cfg, &mut rng);
        let spots = unsupporting_solids(&s, &cfg);
        prop_assume!(!spots.is_empty());
        let (r, c) = spots[rng.random_range(0..spots.len())];
        let mut t = s.clone();
        t.set(r, c, cfg.background());
        match (play(&s, &cfg), play(&t, &cfg)) {
            (Ok(a), Ok(b)) => prop_assert!(b.fitness >= a.fitness, "{}\n->\n{}", s.to_text(&cfg), t.to_text(&cfg)),
            (Ok(_), Err(_)) => prop_assert!(false, "clearing removed every start"),
            _ => {}
        }
    }

    #[test]
    fn blend_fitness_is_member_maximum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, blend) = blend_of(&["SMB", "KI", "MM"], 8, 1);
        let agents = member_agents(&blend);
        let vocab = blend.config.vocab_size() as u8;
        let bg = blend.config.background();
        let fill = rng.random_range(0.05..0.5);
        let seg = Segment::from_fn(blend.config.name.clone(), |_, _| {
            if rng.random_bool(fill) { TileId(rng.random_range(0..vocab)) } else { bg }
        });
        let bp = blend_play(&seg, &agents);
        let mut best = 0.0f64;
        for (i, cfg) in agents.iter().enumerate() {
            match play(&seg, cfg) {
                Ok(r) => {
                    best = best.max(r.fitness);
                    prop_assert_eq!(bp.agents.contains(i), r.completed);
                }
                Err(_) => prop_assert!(!bp.agents.contains(i)),
            }
        }
        prop_assert_eq!(bp.fitness, best);
        prop_assert_eq!(bp.fitness == 1.0, !bp.agents.is_empty());
    }
}
