//! Independent reference implementations and random inputs shared by the
//! integration tests. The oracles work on rendered characters and plain
//! collections rather than the library's internal representations.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use latent_elites::agents::{play, PlayError};
use latent_elites::cli::synth_corpus;
use latent_elites::config::{BlendTable, GameConfig, ProgressAxis};
use latent_elites::corpus::{build_blend_corpus, Blend, Corpus, Segment, TileId};
use num_rational::Ratio;
use rand::Rng;

pub fn stock(name: &str) -> GameConfig {
    GameConfig::stock(name).unwrap()
}

pub fn all_stock() -> Vec<GameConfig> {
    ["SMB", "KI", "MM", "CV", "NG"].iter().map(|g| stock(g)).collect()
}

/// A random segment of mixed texture: sparse noise, a ground line, or
/// dense clutter, chosen per segment.
pub fn random_segment<R: Rng>(cfg: &GameConfig, rng: &mut R) -> Segment {
    let vocab = cfg.vocab_size() as u8;
    let bg = cfg.background();
    let fill: f64 = match rng.random_range(0..4) {
        0 => 0.05,
        1 => 0.2,
        2 => 0.45,
        _ => 0.8,
    };
    let ground = rng.random_bool(0.5);
    let ground_tile = first_solid(cfg);
    Segment::from_fn(cfg.name.clone(), |r, _| {
        if ground && r == 15 {
            ground_tile
        } else if rng.random_bool(fill) {
            TileId(rng.random_range(0..vocab))
        } else {
            bg
        }
    })
}

/// Random content confined to an 8×8 block at a random offset, the rest
/// background, optionally over a solid floor.
pub fn random_padded_segment<R: Rng>(cfg: &GameConfig, rng: &mut R) -> Segment {
    let vocab = cfg.vocab_size() as u8;
    let bg = cfg.background();
    let (r0, c0) = (rng.random_range(0..=8), rng.random_range(0..=8));
    let fill = rng.random_range(0.1..0.7);
    let floor = rng.random_bool(0.6);
    let solid = first_solid(cfg);
    Segment::from_fn(cfg.name.clone(), |r, c| {
        if (r0..r0 + 8).contains(&r) && (c0..c0 + 8).contains(&c) && rng.random_bool(fill) {
            TileId(rng.random_range(0..vocab))
        } else if floor && r == 15 {
            solid
        } else {
            bg
        }
    })
}

pub fn first_solid(cfg: &GameConfig) -> TileId {
    (0..cfg.vocab_size() as u8)
        .map(TileId)
        .find(|&t| cfg.category(t).solid)
        .unwrap_or(cfg.background())
}

pub fn chars(seg: &Segment, cfg: &GameConfig) -> Vec<Vec<char>> {
    seg.to_text(cfg).lines().map(|l| l.chars().collect()).collect()
}

fn char_category<'a>(cfg: &'a GameConfig, ch: char) -> &'a latent_elites::config::TileCategory {
    let i = cfg.tile_chars.iter().position(|&c| c == ch).unwrap();
    &cfg.categories[i]
}

fn empty_space_chars(cfg: &GameConfig) -> Vec<char> {
    cfg.tile_chars
        .iter()
        .zip(&cfg.categories)
        .filter(|(_, k)| k.background || k.path)
        .map(|(&c, _)| c)
        .collect()
}

fn background_char(cfg: &GameConfig) -> char {
    cfg.tile_chars
        .iter()
        .zip(&cfg.categories)
        .find(|(_, k)| k.background)
        .map(|(&c, _)| c)
        .unwrap()
}

/// Rendering with path characters replaced by the background character.
pub fn structural_chars(seg: &Segment, cfg: &GameConfig) -> Vec<Vec<char>> {
    let bg = background_char(cfg);
    chars(seg, cfg)
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|c| if char_category(cfg, c).path { bg } else { c })
                .collect()
        })
        .collect()
}

pub fn density_oracle(seg: &Segment, cfg: &GameConfig) -> usize {
    let empty = empty_space_chars(cfg);
    seg.to_text(cfg).chars().filter(|c| *c != '\n' && !empty.contains(c)).count()
}

pub fn nonlinearity_oracle(seg: &Segment, cfg: &GameConfig) -> usize {
    let empty = empty_space_chars(cfg);
    let g = chars(seg, cfg);
    let mut pts: Vec<(Ratio<i64>, Ratio<i64>)> = Vec::new();
    for c in 0..16 {
        for r in 0..16 {
            if !empty.contains(&g[r][c]) {
                pts.push((Ratio::from_integer(c as i64), Ratio::from_integer(16 - r as i64)));
                break;
            }
        }
    }
    if pts.len() < 2 {
        return 0;
    }
    let n = Ratio::from_integer(pts.len() as i64);
    let mx = pts.iter().map(|p| p.0).sum::<Ratio<i64>>() / n;
    let my = pts.iter().map(|p| p.1).sum::<Ratio<i64>>() / n;
    let sxy: Ratio<i64> = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: Ratio<i64> = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let total: Ratio<i64> = pts
        .iter()
        .map(|p| {
            let e = p.1 - (slope * p.0 + icpt);
            if e < Ratio::from_integer(0) {
                -e
            } else {
                e
            }
        })
        .sum();
    let rounded = (total + Ratio::new(1, 2)).floor().to_integer() as usize;
    rounded.min(64)
}

pub fn symmetry_oracle(seg: &Segment, cfg: &GameConfig) -> usize {
    let g = structural_chars(seg, cfg);
    let mut h = 0;
    let mut v = 0;
    for r in 0..8 {
        for c in 0..16 {
            if g[r][c] == g[15 - r][c] {
                h += 1;
            }
        }
    }
    for c in 0..8 {
        for r in 0..16 {
            if g[r][c] == g[r][15 - c] {
                v += 1;
            }
        }
    }
    h + v
}

/// Training rows and columns as strings, after the path fold.
pub struct LineSets {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
}

pub fn line_sets(segs: &[Segment], cfg: &GameConfig) -> LineSets {
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for s in segs {
        let g = structural_chars(s, cfg);
        for i in 0..16 {
            rows.push(g[i].iter().collect::<String>());
            cols.push((0..16).map(|r| g[r][i]).collect::<String>());
        }
    }
    LineSets { rows, cols }
}

pub fn similarity_oracle(seg: &Segment, cfg: &GameConfig, sets: &LineSets) -> usize {
    let g = structural_chars(seg, cfg);
    let mut n = 0;
    for i in 0..16 {
        let row: String = g[i].iter().collect();
        let col: String = (0..16).map(|r| g[r][i]).collect();
        n += usize::from(sets.rows.iter().any(|x| *x == row));
        n += usize::from(sets.cols.iter().any(|x| *x == col));
    }
    n
}

pub fn element_bits_oracle(seg: &Segment, cfg: &GameConfig) -> usize {
    let text = seg.to_text(cfg);
    let digits: String = cfg
        .element_classes
        .iter()
        .map(|class| {
            let present = text.chars().filter(|&c| c != '\n').any(|c| {
                char_category(cfg, c).element.as_deref() == Some(class.as_str())
            });
            if present {
                '1'
            } else {
                '0'
            }
        })
        .collect();
    usize::from_str_radix(&digits, 2).unwrap()
}

/// Synthetic single-game corpus of `count` levels.
pub fn toy_corpus(game: &str, count: usize, seed: u64) -> (Corpus, GameConfig) {
    synth_corpus(game, count, 48, seed).unwrap()
}

/// Blend of synthetic corpora for `games`.
pub fn blend_of(games: &[&str], count: usize, seed: u64) -> (Corpus, Blend) {
    let parts: Vec<(Corpus, GameConfig)> = games.iter().map(|g| toy_corpus(g, count, seed)).collect();
    build_blend_corpus(&parts, &BlendTable::stock()).unwrap()
}

pub fn corpus_of(segs: Vec<Segment>, cfg: &GameConfig) -> Corpus {
    Corpus::from_segments(segs, cfg).unwrap()
}

/// Outcome of exhaustive breadth-first reachability.
#[derive(Debug, PartialEq)]
pub struct Reach {
    pub completed: bool,
    /// Best reachable cell: most axis progress, then lowest column, then row.
    pub frontier: (usize, usize),
    pub progress: usize,
    pub states: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Pose {
    Standing,
    Airborne(usize, bool, usize),
    Dropping,
}

/// Breadth-first search over the same movement rules as the A* agent,
/// returning `None` when no start cell exists.
pub fn reach_oracle(seg: &Segment, cfg: &GameConfig) -> Option<Reach> {
    let g = chars(seg, cfg);
    let cat = |r: usize, c: usize| char_category(cfg, g[r][c]);
    let free = |c: i32, r: i32| {
        (0..16).contains(&c) && (0..16).contains(&r) && {
            let k = cat(r as usize, c as usize);
            !k.solid && !k.hazard
        }
    };
    let held = |c: usize, r: usize| {
        r == 15 || cat(r, c).climbable || {
            let below = cat(r + 1, c);
            below.solid || below.standable
        }
    };
    let settle = |c: usize, r: usize| (c, r, if held(c, r) { Pose::Standing } else { Pose::Dropping });
    let arc_move = |c: usize, r: usize, a: usize, m: bool, k: usize| -> Option<(usize, usize, Pose)> {
        let arc = &cfg.jump_arcs[a];
        let (dx0, dy) = arc[k];
        let dx = if m { -dx0 } else { dx0 };
        let n = dx.abs().max(dy.abs()).max(1);
        for i in 1..=n {
            if !free(c as i32 + dx * i / n, r as i32 + dy * i / n) {
                return None;
            }
        }
        let (tc, tr) = ((c as i32 + dx) as usize, (r as i32 + dy) as usize);
        if k + 1 == arc.len() || (dy > 0 && held(tc, tr)) {
            Some(settle(tc, tr))
        } else {
            Some((tc, tr, Pose::Airborne(a, m, k + 1)))
        }
    };
    let horizontal = matches!(cfg.progress_axis, ProgressAxis::Horizontal | ProgressAxis::Both);
    let vertical = matches!(cfg.progress_axis, ProgressAxis::VerticalUp | ProgressAxis::Both);
    let mut queue = VecDeque::new();
    let mut seen = HashSet::new();
    for r in 0..16 {
        for c in 0..16 {
            let edge = (horizontal && c == 0) || (vertical && r == 15);
            if edge && free(c as i32, r as i32) && held(c, r) {
                let s = (c, r, Pose::Standing);
                if seen.insert(s) {
                    queue.push_back(s);
                }
            }
        }
    }
    if queue.is_empty() {
        return None;
    }
    let mut completed = false;
    let mut best: Option<(usize, usize, usize)> = None;
    while let Some((c, r, pose)) = queue.pop_front() {
        let h = c;
        let v = 15 - r;
        let p = match cfg.progress_axis {
            ProgressAxis::Horizontal => h,
            ProgressAxis::VerticalUp => v,
            ProgressAxis::Both => h.max(v),
        };
        let better = match best {
            None => true,
            Some((bp, bc, br)) => p > bp || (p == bp && (c, r) < (bc, br)),
        };
        if better {
            best = Some((p, c, r));
        }
        if (horizontal && c == 15) || (vertical && r == 0) {
            completed = true;
        }
        let mut next = Vec::new();
        match pose {
            Pose::Standing => {
                if cfg.walk {
                    for d in [-1i32, 1] {
                        if free(c as i32 + d, r as i32) {
                            next.push(settle((c as i32 + d) as usize, r));
                        }
                    }
                }
                for (a, arc) in cfg.jump_arcs.iter().enumerate() {
                    // A purely vertical arc and its mirror image are one move.
                    let sides: &[bool] = if arc.iter().all(|s| s.0 == 0) { &[false] } else { &[false, true] };
                    for &m in sides {
                        next.extend(arc_move(c, r, a, m, 0));
                    }
                }
            }
            Pose::Airborne(a, m, k) => {
                next.extend(arc_move(c, r, a, m, k));
                next.push(settle(c, r));
            }
            Pose::Dropping => {
                if free(c as i32, r as i32 + 1) {
                    next.push(settle(c, r + 1));
                }
            }
        }
        for s in next {
            if seen.insert(s) {
                queue.push_back(s);
            }
        }
    }
    let (progress, c, r) = best.unwrap();
    Some(Reach {
        completed,
        frontier: (c, r),
        progress,
        states: seen.len(),
    })
}

/// Sample `i` of the agent comparison: alternating textures, with walls
/// added to half the horizontal and two-axis samples. Noise alone rarely
/// blocks a horizontal route, and two-axis agents, which start along the
/// whole bottom row, also lose the right edge.
pub fn oracle_sample<R: Rng>(cfg: &GameConfig, rng: &mut R, i: usize) -> Segment {
    let mut s = if i % 2 == 0 {
        random_padded_segment(cfg, rng)
    } else {
        random_segment(cfg, rng)
    };
    if cfg.progress_axis != ProgressAxis::VerticalUp && i % 4 < 2 {
        let solid = first_solid(cfg);
        let col = rng.random_range(3..13);
        let top = rng.random_range(0..12);
        for r in top..16 {
            s.set(r, col, solid);
        }
        if cfg.progress_axis == ProgressAxis::Both {
            for r in 0..16 {
                s.set(r, 15, solid);
            }
        }
    }
    s
}

/// Compares the A* agent with exhaustive reachability on one segment:
/// completion always, and frontier, fitness and state count when the goal
/// is out of reach. `Ok(None)` when neither finds a start.
pub fn compare_with_oracle(seg: &Segment, cfg: &GameConfig) -> Result<Option<bool>, String> {
    let fail = |what: String| Err(format!("{}: {what}\n{}", cfg.name, seg.to_text(cfg)));
    match (play(seg, cfg), reach_oracle(seg, cfg)) {
        (Err(PlayError::NoStartState), None) => Ok(None),
        (Ok(r), Some(o)) => {
            if r.completed != o.completed {
                return fail(format!("completed {} vs {}", r.completed, o.completed));
            }
            if o.completed {
                if r.fitness != 1.0 {
                    return fail(format!("completed with fitness {}", r.fitness));
                }
            } else if r.best_frontier != o.frontier
                || r.fitness != o.progress as f64 / 15.0
                || r.visited_count != o.states
            {
                return fail(format!(
                    "frontier {:?} vs {:?}, fitness {} vs {}/15, states {} vs {}",
                    r.best_frontier, o.frontier, r.fitness, o.progress, r.visited_count, o.states
                ));
            }
            Ok(Some(o.completed))
        }
        (got, want) => fail(format!("agent {got:?} vs oracle {want:?}")),
    }
}
