//! Tile-level playability agents.
//!
//! The agent moves on the 16×16 grid with three kinds of move: walking one
//! column, following a jump arc step by step (arcs may be mirrored, and a
//! jump can be released at any step), and falling straight down until it is
//! supported. Fitness is the furthest progress along the game's axis,
//! normalized to `[0, 1]`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{GameConfig, ProgressAxis};
use crate::corpus::{Blend, Segment, SEGMENT_SIZE, SEGMENT_TILES};

const LAST: usize = SEGMENT_SIZE - 1;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum PlayError {
    #[error("segment has no start state for this agent")]
    NoStartState,
}

/// Which cells the agent may occupy and where it counts as standing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PassMap {
    pub passable: [bool; SEGMENT_TILES],
    pub supported: [bool; SEGMENT_TILES],
}

impl PassMap {
    pub fn passable(&self, col: usize, row: usize) -> bool {
        self.passable[row * SEGMENT_SIZE + col]
    }

    pub fn supported(&self, col: usize, row: usize) -> bool {
        self.supported[row * SEGMENT_SIZE + col]
    }
}

/// A cell is supported when it is on the bottom row, sits on a solid or
/// platform tile, or is itself climbable. Support is only meaningful for
/// passable cells.
pub fn passable_map(segment: &Segment, config: &GameConfig) -> PassMap {
    let mut passable = [false; SEGMENT_TILES];
    let mut supported = [false; SEGMENT_TILES];
    for r in 0..SEGMENT_SIZE {
        for c in 0..SEGMENT_SIZE {
            let cat = config.category(segment.get(r, c));
            let i = r * SEGMENT_SIZE + c;
            passable[i] = cat.passable();
            supported[i] = r == LAST
                || cat.climbable
                || config.category(segment.get(r + 1, c)).supports_above();
        }
    }
    PassMap {
        passable,
        supported,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Grounded,
    /// `step` arc steps have been taken so far.
    Jump {
        arc: u16,
        mirrored: bool,
        step: u16,
    },
    Falling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentState {
    pub col: u8,
    pub row: u8,
    pub mode: Mode,
}

impl AgentState {
    fn at(col: usize, row: usize, mode: Mode) -> Self {
        Self {
            col: col as u8,
            row: row as u8,
            mode,
        }
    }
}

/// The rules of movement for one game over one segment.
pub struct Movement<'a> {
    pub map: PassMap,
    pub config: &'a GameConfig,
}

impl<'a> Movement<'a> {
    pub fn new(segment: &Segment, config: &'a GameConfig) -> Self {
        Self {
            map: passable_map(segment, config),
            config,
        }
    }

    fn rest(&self, col: usize, row: usize) -> AgentState {
        let mode = if self.map.supported(col, row) {
            Mode::Grounded
        } else {
            Mode::Falling
        };
        AgentState::at(col, row, mode)
    }

    fn open(&self, col: i32, row: i32) -> bool {
        (0..SEGMENT_SIZE as i32).contains(&col)
            && (0..SEGMENT_SIZE as i32).contains(&row)
            && self.map.passable(col as usize, row as usize)
    }

    pub fn start_states(&self) -> Vec<AgentState> {
        let mut cells = Vec::new();
        let axis = self.config.progress_axis;
        if matches!(axis, ProgressAxis::Horizontal | ProgressAxis::Both) {
            cells.extend((0..SEGMENT_SIZE).map(|r| (0, r)));
        }
        if matches!(axis, ProgressAxis::VerticalUp | ProgressAxis::Both) {
            cells.extend((0..SEGMENT_SIZE).map(|c| (c, LAST)));
        }
        cells.sort();
        cells.dedup();
        cells
            .into_iter()
            .filter(|&(c, r)| self.map.passable(c, r) && self.map.supported(c, r))
            .map(|(c, r)| AgentState::at(c, r, Mode::Grounded))
            .collect()
    }

    pub fn is_goal(&self, s: &AgentState) -> bool {
        match self.config.progress_axis {
            ProgressAxis::Horizontal => s.col as usize == LAST,
            ProgressAxis::VerticalUp => s.row == 0,
            ProgressAxis::Both => s.col as usize == LAST || s.row == 0,
        }
    }

    /// Attempts arc step `step` from `(col, row)`; `None` when blocked.
    fn arc_step(
        &self,
        col: usize,
        row: usize,
        arc: usize,
        mirrored: bool,
        step: usize,
    ) -> Option<AgentState> {
        let steps = &self.config.jump_arcs[arc];
        let (mut dx, dy) = steps[step];
        if mirrored {
            dx = -dx;
        }
        let n = dx.abs().max(dy.abs()).max(1);
        for i in 1..=n {
            if !self.open(col as i32 + dx * i / n, row as i32 + dy * i / n) {
                return None;
            }
        }
        let tc = (col as i32 + dx) as usize;
        let tr = (row as i32 + dy) as usize;
        if (dy > 0 && self.map.supported(tc, tr)) || step + 1 == steps.len() {
            return Some(self.rest(tc, tr));
        }
        Some(AgentState::at(
            tc,
            tr,
            Mode::Jump {
                arc: arc as u16,
                mirrored,
                step: (step + 1) as u16,
            },
        ))
    }

    /// Successors in fixed move order: walk left, walk right, arcs (each
    /// forward then mirrored), continue jump, release jump, fall.
    pub fn successors(&self, s: &AgentState, out: &mut Vec<AgentState>) {
        out.clear();
        let (c, r) = (s.col as usize, s.row as usize);
        match s.mode {
            Mode::Grounded => {
                if self.config.walk {
                    for d in [-1i32, 1] {
                        let tc = c as i32 + d;
                        if self.open(tc, r as i32) {
                            out.push(self.rest(tc as usize, r));
                        }
                    }
                }
                for (a, arc) in self.config.jump_arcs.iter().enumerate() {
                    let symmetric = arc.iter().all(|&(dx, _)| dx == 0);
                    for mirrored in [false, true] {
                        if mirrored && symmetric {
                            continue;
                        }
                        if let Some(n) = self.arc_step(c, r, a, mirrored, 0) {
                            out.push(n);
                        }
                    }
                }
            }
            Mode::Jump {
                arc,
                mirrored,
                step,
            } => {
                if let Some(n) = self.arc_step(c, r, arc as usize, mirrored, step as usize) {
                    out.push(n);
                }
                out.push(self.rest(c, r));
            }
            Mode::Falling => {
                if self.open(c as i32, r as i32 + 1) {
                    out.push(self.rest(c, r + 1));
                }
            }
        }
    }

    /// Lower bound on the moves remaining to the goal edge.
    fn heuristic(&self, s: &AgentState) -> u32 {
        let (mx, my) = self.config.max_step();
        let h = ((LAST - s.col as usize) as u32).div_ceil(mx as u32);
        let v = (s.row as u32).div_ceil(my as u32);
        match self.config.progress_axis {
            ProgressAxis::Horizontal => h,
            ProgressAxis::VerticalUp => v,
            ProgressAxis::Both => h.min(v),
        }
    }
}

/// Progress of a cell along each axis, as numerators over 15.
pub fn cell_progress(col: usize, row: usize) -> (usize, usize) {
    (col, LAST - row)
}

/// Combined progress numerator for an axis choice.
pub fn axis_progress(axis: ProgressAxis, col: usize, row: usize) -> usize {
    let (h, v) = cell_progress(col, row);
    match axis {
        ProgressAxis::Horizontal => h,
        ProgressAxis::VerticalUp => v,
        ProgressAxis::Both => h.max(v),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlayResult {
    pub fitness: f64,
    pub completed: bool,
    pub best_frontier: (usize, usize),
    pub visited_count: usize,
    pub horizontal_progress: f64,
    pub vertical_progress: f64,
}

/// Frontier ordering: more progress first, then lower column, then lower row.
fn better_frontier(axis: ProgressAxis, a: (usize, usize), b: (usize, usize)) -> bool {
    let pa = axis_progress(axis, a.0, a.1);
    let pb = axis_progress(axis, b.0, b.1);
    pa > pb || (pa == pb && a < b)
}

#[derive(Clone, Debug)]
pub struct PlayTrace {
    pub result: PlayResult,
    /// Cells of every expanded state.
    pub visited: [bool; SEGMENT_TILES],
}

pub fn play(segment: &Segment, config: &GameConfig) -> Result<PlayResult, PlayError> {
    play_traced(segment, config).map(|t| t.result)
}

/// A* from all start states, expanding until a goal state is popped or the
/// reachable set is exhausted. Ties on `f` prefer lower column, then lower
/// row, then earlier generation.
pub fn play_traced(segment: &Segment, config: &GameConfig) -> Result<PlayTrace, PlayError> {
    let mv = Movement::new(segment, config);
    let starts = mv.start_states();
    if starts.is_empty() {
        return Err(PlayError::NoStartState);
    }
    let axis = config.progress_axis;
    let mut best_g: HashMap<AgentState, u32> = HashMap::new();
    let mut closed: HashMap<AgentState, ()> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    for s in starts {
        best_g.insert(s, 0);
        heap.push(Reverse((mv.heuristic(&s), s.col, s.row, seq, 0u32, s)));
        seq += 1;
    }
    let mut visited = [false; SEGMENT_TILES];
    let mut frontier: Option<(usize, usize)> = None;
    let (mut max_h, mut max_v) = (0usize, 0usize);
    let mut completed = false;
    let mut succ = Vec::new();
    while let Some(Reverse((_, _, _, _, g, s))) = heap.pop() {
        if closed.insert(s, ()).is_some() {
            continue;
        }
        let cell = (s.col as usize, s.row as usize);
        visited[cell.1 * SEGMENT_SIZE + cell.0] = true;
        let (h, v) = cell_progress(cell.0, cell.1);
        max_h = max_h.max(h);
        max_v = max_v.max(v);
        if frontier.is_none_or(|f| better_frontier(axis, cell, f)) {
            frontier = Some(cell);
        }
        if mv.is_goal(&s) {
            completed = true;
            frontier = Some(cell);
            break;
        }
        mv.successors(&s, &mut succ);
        for &n in &succ {
            if closed.contains_key(&n) {
                continue;
            }
            let ng = g + 1;
            if best_g.get(&n).is_some_and(|&old| old <= ng) {
                continue;
            }
            best_g.insert(n, ng);
            heap.push(Reverse((ng + mv.heuristic(&n), n.col, n.row, seq, ng, n)));
            seq += 1;
        }
    }
    let horizontal_progress = max_h as f64 / LAST as f64;
    let vertical_progress = max_v as f64 / LAST as f64;
    let fitness = if completed {
        1.0
    } else {
        match axis {
            ProgressAxis::Horizontal => horizontal_progress,
            ProgressAxis::VerticalUp => vertical_progress,
            ProgressAxis::Both => horizontal_progress.max(vertical_progress),
        }
    };
    Ok(PlayTrace {
        result: PlayResult {
            fitness,
            completed,
            best_frontier: frontier.expect("at least one start state was expanded"),
            visited_count: closed.len(),
            horizontal_progress,
            vertical_progress,
        },
        visited,
    })
}

/// Text rendering of a segment with every visited cell replaced by `*`.
pub fn visited_overlay(segment: &Segment, config: &GameConfig) -> String {
    let text = segment.to_text(config);
    let visited = match play_traced(segment, config) {
        Ok(t) => t.visited,
        Err(_) => return text,
    };
    let mut out = String::with_capacity(text.len());
    for (r, line) in text.lines().enumerate() {
        for (c, ch) in line.chars().enumerate() {
            out.push(if visited[r * SEGMENT_SIZE + c] { '*' } else { ch });
        }
        out.push('\n');
    }
    out
}

/// Set of blend member games, bit `i` for member `i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentSet(pub u8);

impl AgentSet {
    pub const EMPTY: AgentSet = AgentSet(0);

    pub fn contains(self, member: usize) -> bool {
        self.0 & (1 << member) != 0
    }

    pub fn insert(&mut self, member: usize) {
        self.0 |= 1 << member;
    }

    pub fn union(self, other: AgentSet) -> AgentSet {
        AgentSet(self.0 | other.0)
    }

    pub fn is_superset(self, other: AgentSet) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Builds a set from member names; unknown names are an error.
    pub fn from_names<S: AsRef<str>>(names: &[S], members: &[String]) -> Result<AgentSet, String> {
        let mut set = AgentSet::EMPTY;
        for n in names {
            let n = n.as_ref();
            let i = members
                .iter()
                .position(|m| m.eq_ignore_ascii_case(n))
                .ok_or_else(|| format!("unknown blend member {n:?}"))?;
            set.insert(i);
        }
        Ok(set)
    }

    /// Category label: `none`, `all`, or member names joined by `-`.
    pub fn label(self, members: &[String]) -> String {
        if self.is_empty() {
            return "none".into();
        }
        if self.len() == members.len() {
            return "all".into();
        }
        members
            .iter()
            .enumerate()
            .filter(|(i, _)| self.contains(*i))
            .map(|(_, m)| m.as_str())
            .collect::<Vec<_>>()
            .join("-")
    }
}

impl fmt::Display for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-member agent configs for a blend: the blend's tile semantics with
/// each member's movement model.
pub fn member_agents(blend: &Blend) -> Vec<GameConfig> {
    blend
        .members
        .iter()
        .map(|m| GameConfig {
            progress_axis: m.progress_axis,
            jump_arcs: m.jump_arcs.clone(),
            walk: m.walk,
            ..blend.config.clone()
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct BlendPlay {
    pub fitness: f64,
    pub agents: AgentSet,
    pub members: Vec<Result<PlayResult, PlayError>>,
}

/// Runs every member agent; fitness is the best member fitness and the
/// agent set holds the members that completed the segment.
pub fn blend_play(segment: &Segment, agents: &[GameConfig]) -> BlendPlay {
    let members: Vec<Result<PlayResult, PlayError>> =
        agents.iter().map(|cfg| play(segment, cfg)).collect();
    let mut fitness = 0.0f64;
    let mut set = AgentSet::EMPTY;
    for (i, m) in members.iter().enumerate() {
        if let Ok(r) = m {
            fitness = fitness.max(r.fitness);
            if r.completed {
                set.insert(i);
            }
        }
    }
    BlendPlay {
        fitness,
        agents: set,
        members,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TileId;

    fn cfg(name: &str) -> GameConfig {
        GameConfig::stock(name).unwrap()
    }

    fn tid(c: &GameConfig, ch: char) -> TileId {
        c.tile_id(ch).unwrap()
    }

    fn floor(c: &GameConfig, solid: char) -> Segment {
        let s = tid(c, solid);
        let bg = c.background();
        Segment::from_fn(c.name.clone(), |r, _| if r == 15 { s } else { bg })
    }

    #[test]
    fn passable_map_basics() {
        let smb = cfg("SMB");
        let open = passable_map(&Segment::filled(smb.background(), "SMB"), &smb);
        assert!(open.passable.iter().all(|&p| p));
        for r in 0..16 {
            for c in 0..16 {
                assert_eq!(open.supported(c, r), r == 15);
            }
        }
        let solid = passable_map(&Segment::filled(tid(&smb, 'X'), "SMB"), &smb);
        assert!(solid.passable.iter().all(|&p| !p));
        let fl = passable_map(&floor(&smb, 'X'), &smb);
        for c in 0..16 {
            assert!(!fl.passable(c, 15));
            assert!(fl.passable(c, 14) && fl.supported(c, 14));
            assert!(!fl.supported(c, 13));
        }
    }

    #[test]
    fn flat_floor_completes() {
        let smb = cfg("SMB");
        let res = play(&floor(&smb, 'X'), &smb).unwrap();
        assert!(res.completed);
        assert_eq!(res.fitness, 1.0);
    }

    #[test]
    fn tall_wall_blocks_at_column_seven() {
        let smb = cfg("SMB");
        let x = tid(&smb, 'X');
        let mut seg = floor(&smb, 'X');
        for r in 0..16 {
            seg.set(r, 8, x);
        }
        let res = play(&seg, &smb).unwrap();
        assert!(!res.completed);
        assert_eq!(res.fitness, 7.0 / 15.0);
        assert_eq!(res.best_frontier.0, 7);
    }

    #[test]
    fn ki_climbs_platform_column() {
        let ki = cfg("KI");
        let t = tid(&ki, 'T');
        let mut seg = Segment::filled(ki.background(), "KI");
        for r in [12, 9, 6, 3, 0] {
            seg.set(r, 5, t);
        }
        let res = play(&seg, &ki).unwrap();
        assert!(res.completed);
        assert_eq!(res.fitness, 1.0);
    }

    #[test]
    fn ki_rises_at_most_one_arc_in_open_space() {
        let ki = cfg("KI");
        let res = play(&Segment::filled(ki.background(), "KI"), &ki).unwrap();
        assert!(!res.completed);
        assert_eq!(res.vertical_progress, 4.0 / 15.0);
        // solid bottom row leaves no passable cell to enter from
        assert_eq!(play(&floor(&ki, '#'), &ki), Err(PlayError::NoStartState));
    }

    #[test]
    fn no_start_state() {
        let smb = cfg("SMB");
        let x = tid(&smb, 'X');
        let bg = smb.background();
        let seg = Segment::from_fn("SMB", |_, c| if c == 0 { x } else { bg });
        assert_eq!(play(&seg, &smb), Err(PlayError::NoStartState));
    }

    #[test]
    fn hazards_are_impassable() {
        let smb = cfg("SMB");
        let e = tid(&smb, 'E');
        let mut seg = floor(&smb, 'X');
        for r in 0..15 {
            seg.set(r, 4, e);
        }
        let res = play(&seg, &smb).unwrap();
        assert_eq!(res.fitness, 3.0 / 15.0);
    }

    #[test]
    fn determinism() {
        let mm = cfg("MM");
        let seg = floor(&mm, '#');
        assert_eq!(play(&seg, &mm), play(&seg, &mm));
    }

    #[test]
    fn agent_set_labels() {
        let members: Vec<String> = ["SMB", "KI", "MM"].iter().map(|s| s.to_string()).collect();
        assert_eq!(AgentSet(0).label(&members), "none");
        assert_eq!(AgentSet(0b101).label(&members), "SMB-MM");
        assert_eq!(AgentSet(0b111).label(&members), "all");
        assert_eq!(
            AgentSet::from_names(&["ki", "MM"], &members).unwrap(),
            AgentSet(0b110)
        );
        assert!(AgentSet::from_names(&["CV"], &members).is_err());
    }

    #[test]
    fn overlay_marks_walk() {
        let smb = cfg("SMB");
        let ov = visited_overlay(&floor(&smb, 'X'), &smb);
        let lines: Vec<&str> = ov.lines().collect();
        assert!(lines[14].starts_with('*'));
        assert!(lines.iter().any(|l| l.ends_with('*')));
        assert_eq!(lines[15], "X".repeat(16));
    }
}
