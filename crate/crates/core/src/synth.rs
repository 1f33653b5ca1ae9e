//! Toy VGLC-style level generator for the stock games.
//!
//! The output uses each game's tile characters and strip layout, so it
//! passes through the normal ingestion path. The levels are plausible rather
//! than faithful: ground, gaps, platforms, ladders and sprinkled elements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::STOCK_GAMES;
use crate::corpus::SEGMENT_SIZE;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("no generator for game {0:?}")]
    UnknownGame(String),
    #[error("level length {0} is shorter than a segment")]
    TooShort(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthLevel {
    pub name: String,
    pub text: String,
}

struct Canvas {
    rows: usize,
    cols: usize,
    cells: Vec<char>,
}

impl Canvas {
    fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: vec!['-'; rows * cols],
        }
    }

    fn set(&mut self, r: usize, c: usize, ch: char) {
        if r < self.rows && c < self.cols {
            self.cells[r * self.cols + c] = ch;
        }
    }

    fn get(&self, r: usize, c: usize) -> char {
        self.cells[r * self.cols + c]
    }

    fn hline(&mut self, r: usize, c0: usize, c1: usize, ch: char) {
        for c in c0..c1.min(self.cols) {
            self.set(r, c, ch);
        }
    }

    fn vline(&mut self, c: usize, r0: usize, r1: usize, ch: char) {
        for r in r0..r1.min(self.rows) {
            self.set(r, c, ch);
        }
    }

    /// Puts `ch` on the background cell directly above the first solid-ish
    /// cell in column `c`, searching downward from `from`.
    fn drop_on(&mut self, c: usize, from: usize, ch: char) {
        for r in from..self.rows {
            if self.get(r, c) != '-' {
                if r > 0 && self.get(r - 1, c) == '-' {
                    self.set(r - 1, c, ch);
                }
                return;
            }
        }
    }

    fn text(&self) -> String {
        let mut out = String::with_capacity(self.rows * (self.cols + 1));
        for r in 0..self.rows {
            out.extend(&self.cells[r * self.cols..(r + 1) * self.cols]);
            out.push('\n');
        }
        out
    }
}

/// `count` levels of `length` tiles along the scroll axis. Mixed-orientation
/// games alternate horizontal and vertical strips.
pub fn synth_levels(game: &str, count: usize, length: usize, seed: u64) -> Result<Vec<SynthLevel>, SynthError> {
    let idx = STOCK_GAMES
        .iter()
        .position(|g| g.eq_ignore_ascii_case(game))
        .ok_or_else(|| SynthError::UnknownGame(game.to_string()))?;
    if length < SEGMENT_SIZE {
        return Err(SynthError::TooShort(length));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(idx as u64);
    let name = STOCK_GAMES[idx];
    Ok((0..count)
        .map(|i| {
            let vertical = i % 2 == 1;
            let canvas = match name {
                "SMB" => smb(length, &mut rng),
                "KI" => ki(length, &mut rng),
                "MM" if vertical => shaft(length, '|', &['H', 'C'], &['M', 'U'], &mut rng),
                "MM" => mm(length, &mut rng),
                "CV" if vertical => shaft(length, '|', &['E'], &['M', 'o', 'W'], &mut rng),
                "CV" => cv(length, &mut rng),
                "NG" if vertical => shaft(length, '|', &['E', 'A'], &['o', 'W'], &mut rng),
                _ => ng(length, &mut rng),
            };
            SynthLevel {
                name: format!("{}_{:03}", name.to_lowercase(), i + 1),
                text: canvas.text(),
            }
        })
        .collect())
}

fn smb(len: usize, rng: &mut ChaCha8Rng) -> Canvas {
    let mut cv = Canvas::new(14, len);
    let path = rng.random_bool(0.5);
    let mut c = 0;
    while c < len {
        let span = rng.random_range(4..9);
        let grounded = c < 4 || rng.random_bool(0.85);
        if grounded {
            cv.hline(12, c, c + span, 'X');
            cv.hline(13, c, c + span, 'X');
        }
        match rng.random_range(0..7) {
            0 if grounded => {
                let h = rng.random_range(2..5);
                let top = 12 - h;
                cv.set(top, c + 1, '<');
                cv.set(top, c + 2, '>');
                cv.vline(c + 1, top + 1, 12, '[');
                cv.vline(c + 2, top + 1, 12, ']');
            }
            1 => {
                let w = rng.random_range(2..6);
                cv.hline(8, c, c + w, 'S');
                cv.set(8, c + rng.random_range(0..w), if rng.random_bool(0.7) { '?' } else { 'Q' });
                if rng.random_bool(0.5) {
                    cv.hline(7, c, c + w, 'o');
                }
            }
            2 if grounded => {
                for k in 0..span.min(4) {
                    cv.vline(c + k, 11 - k, 12, 'X');
                }
            }
            3 if grounded => cv.set(11, c + rng.random_range(0..span), 'E'),
            4 => {
                let h = rng.random_range(4..7);
                cv.hline(h, c, c + rng.random_range(2..5), 'S');
            }
            5 if grounded && rng.random_bool(0.3) => {
                cv.set(10, c + 1, 'B');
                cv.set(11, c + 1, 'b');
            }
            _ => {}
        }
        if path && grounded {
            for k in c..(c + span).min(len) {
                if cv.get(11, k) == '-' {
                    cv.set(11, k, 'x');
                }
            }
        }
        c += span;
    }
    cv
}

fn ki(len: usize, rng: &mut ChaCha8Rng) -> Canvas {
    let mut cv = Canvas::new(len, SEGMENT_SIZE);
    let wall = rng.random_range(1..3);
    for r in 0..len {
        cv.hline(r, 0, wall, '#');
        cv.hline(r, SEGMENT_SIZE - wall, SEGMENT_SIZE, '#');
    }
    let mut r = len - 1;
    loop {
        let kind = rng.random_range(0..10);
        let start = rng.random_range(wall..SEGMENT_SIZE / 2);
        let end = rng.random_range(SEGMENT_SIZE / 2..=SEGMENT_SIZE - wall);
        match kind {
            0..=4 => {
                cv.hline(r, start, end, '#');
                if rng.random_bool(0.3) {
                    cv.hline(r, wall, start.saturating_sub(2).max(wall), '#');
                }
            }
            5 | 6 => cv.hline(r, start, start + rng.random_range(2..5), 'T'),
            7 => cv.hline(r, start, start + 3, 'M'),
            _ => {
                cv.hline(r, start, end, '#');
                cv.set(r.saturating_sub(1), rng.random_range(start..end), 'H');
            }
        }
        if rng.random_bool(0.08) {
            cv.drop_on(rng.random_range(wall..SEGMENT_SIZE - wall), r.saturating_sub(2), 'D');
        }
        let gap = rng.random_range(2..5);
        if r < gap {
            break;
        }
        r -= gap;
    }
    cv
}

fn mm(len: usize, rng: &mut ChaCha8Rng) -> Canvas {
    let mut cv = Canvas::new(15, len);
    cv.hline(0, 0, len, '#');
    let mut c = 0;
    while c < len {
        let span = rng.random_range(3..8);
        let floor = if c < 4 { 13 } else { rng.random_range(10..14) };
        if c < 4 || rng.random_bool(0.85) {
            for r in floor..15 {
                cv.hline(r, c, c + span, '#');
            }
        }
        match rng.random_range(0..8) {
            0 => {
                let pr = rng.random_range(4..9);
                cv.hline(pr, c, c + span, '#');
                cv.vline(c + span / 2, pr, floor, '|');
            }
            1 => cv.set(floor - 1, c + rng.random_range(0..span), 'H'),
            2 => cv.set(floor - 1 - rng.random_range(0..3), c + rng.random_range(0..span), 'C'),
            3 => cv.hline(rng.random_range(6..10), c, c + 2, 'M'),
            4 => cv.set(floor - 1, c + rng.random_range(0..span), 'U'),
            5 => {
                let h = rng.random_range(2..5);
                cv.vline(c, 1, 1 + h, '#');
            }
            6 if rng.random_bool(0.2) => cv.vline(c + span - 1, floor - 2, floor, 'D'),
            _ => {}
        }
        c += span;
    }
    cv
}

fn cv(len: usize, rng: &mut ChaCha8Rng) -> Canvas {
    let mut cv = Canvas::new(11, len);
    let mut c = 0;
    while c < len {
        let span = rng.random_range(4..9);
        let pit = c >= 4 && rng.random_bool(0.12);
        if !pit {
            cv.hline(10, c, c + span, '#');
        } else {
            cv.hline(7, c + 1, c + 3, 'M');
        }
        match rng.random_range(0..8) {
            0 => {
                let pr = rng.random_range(5..8);
                cv.hline(pr, c, c + span, '#');
                cv.vline(c, pr, 10, '|');
            }
            1 if !pit => cv.set(9, c + rng.random_range(0..span), 'E'),
            2 => cv.set(rng.random_range(3..7), c + rng.random_range(0..span), 'o'),
            3 if !pit => {
                cv.vline(c + span - 1, 8, 10, 'B');
            }
            4 => cv.set(rng.random_range(4..8), c + 1, 'W'),
            5 if rng.random_bool(0.2) => cv.vline(c + 2, 7, 10, 'D'),
            6 => cv.hline(rng.random_range(0..3), c, c + span, '#'),
            _ => {}
        }
        c += span;
    }
    cv
}

fn ng(len: usize, rng: &mut ChaCha8Rng) -> Canvas {
    let mut cv = Canvas::new(11, len);
    let mut c = 0;
    while c < len {
        let span = rng.random_range(3..8);
        let floor = if c < 4 { 9 } else { rng.random_range(7..10) };
        if c < 4 || rng.random_bool(0.85) {
            for r in floor..11 {
                cv.hline(r, c, c + span, '#');
            }
        }
        match rng.random_range(0..7) {
            0 => cv.set(floor - 1, c + rng.random_range(0..span), 'E'),
            1 => cv.set(rng.random_range(2..floor - 1), c + rng.random_range(0..span), 'A'),
            2 => {
                let top = rng.random_range(2..floor - 1);
                cv.vline(c + span - 1, top, floor, '|');
                cv.hline(top, c + span - 1, c + span + 2, '#');
            }
            3 => cv.set(rng.random_range(3..7), c + 1, 'W'),
            4 => cv.set(floor - 1, c + 1, 'o'),
            _ => {}
        }
        c += span;
    }
    cv
}

/// A vertical shaft: side walls, staggered ledges, ladders between them.
fn shaft(len: usize, ladder: char, hazards: &[char], extras: &[char], rng: &mut ChaCha8Rng) -> Canvas {
    let mut cv = Canvas::new(len, SEGMENT_SIZE);
    for r in 0..len {
        cv.set(r, 0, '#');
        cv.set(r, SEGMENT_SIZE - 1, '#');
    }
    cv.hline(len - 1, 0, SEGMENT_SIZE, '#');
    let mut r = len - 1;
    let mut ladder_col = rng.random_range(2..SEGMENT_SIZE - 2);
    loop {
        let gap = rng.random_range(3..6);
        if r < gap + 1 {
            break;
        }
        let next = r - gap;
        cv.vline(ladder_col, next, r, ladder);
        let (a, b) = if rng.random_bool(0.5) {
            (1, rng.random_range(6..SEGMENT_SIZE - 2))
        } else {
            (rng.random_range(3..10), SEGMENT_SIZE - 1)
        };
        cv.hline(next, a, b, '#');
        ladder_col = rng.random_range(a.max(2)..b.min(SEGMENT_SIZE - 2).max(a.max(2) + 1));
        cv.set(next, ladder_col, ladder);
        if rng.random_bool(0.35) {
            let ch = hazards[rng.random_range(0..hazards.len())];
            cv.drop_on(rng.random_range(1..SEGMENT_SIZE - 1), next.saturating_sub(2), ch);
        }
        if rng.random_bool(0.35) {
            let ch = extras[rng.random_range(0..extras.len())];
            cv.set(next.saturating_sub(1 + rng.random_range(0..2)), rng.random_range(1..SEGMENT_SIZE - 1), ch);
        }
        r = next;
    }
    cv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GameConfig;
    use crate::corpus::{build_corpus, parse_level};

    #[test]
    fn every_stock_game_ingests() {
        for game in STOCK_GAMES {
            let cfg = GameConfig::stock(game).unwrap();
            let levels = synth_levels(game, 4, 48, 1).unwrap();
            let grids: Vec<_> = levels
                .iter()
                .map(|l| parse_level(&l.text, &cfg).unwrap())
                .collect();
            let corpus = build_corpus(&grids, &cfg).unwrap();
            assert_eq!(corpus.len(), 4 * 33, "{game}");
        }
    }

    #[test]
    fn seeded_output_is_stable() {
        assert_eq!(synth_levels("KI", 2, 40, 9), synth_levels("KI", 2, 40, 9));
        assert_ne!(synth_levels("KI", 2, 40, 9), synth_levels("KI", 2, 40, 10));
        assert_eq!(synth_levels("XX", 1, 40, 0), Err(SynthError::UnknownGame("XX".into())));
        assert_eq!(synth_levels("SMB", 1, 8, 0), Err(SynthError::TooShort(8)));
    }
}
