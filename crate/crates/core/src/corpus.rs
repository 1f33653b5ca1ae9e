//! Level ingestion: text levels to tile grids, grids to 16×16 segments,
//! segments to training corpora (single-game and blended).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{blend_config, BlendCategory, BlendTable, ConfigError, GameConfig, Orientation};

pub const SEGMENT_SIZE: usize = 16;
pub const SEGMENT_TILES: usize = SEGMENT_SIZE * SEGMENT_SIZE;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown tile {ch:?} at line {line}, column {col}")]
    UnknownTile { ch: char, line: usize, col: usize },
    #[error("line {line} has a different length than line 1")]
    RaggedLines { line: usize },
    #[error("wrong dimension: expected 16, got {got}")]
    WrongDimension { got: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("blending needs at least two corpora")]
    TooFewCorpora,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("corpus cache {path}: {msg}")]
    Cache { path: String, msg: String },
    #[error("{path}: {source}")]
    InFile {
        path: String,
        #[source]
        source: Box<CorpusError>,
    },
    #[error("no level files in {0}")]
    NoLevels(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Index into a game's tile vocabulary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TileId(pub u8);

impl TileId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A rectangular grid of tiles, row 0 at the top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TileGrid {
    pub rows: usize,
    pub cols: usize,
    pub tiles: Vec<TileId>,
}

impl TileGrid {
    pub fn get(&self, row: usize, col: usize) -> TileId {
        self.tiles[row * self.cols + col]
    }

    pub fn to_text(&self, config: &GameConfig) -> String {
        let mut out = String::with_capacity(self.rows * (self.cols + 1));
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(config.tile_char(self.get(r, c)));
            }
            out.push('\n');
        }
        out
    }
}

/// A 16×16 level segment tagged with the game whose vocabulary it uses.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Segment {
    tiles: [TileId; SEGMENT_TILES],
    game_tag: String,
}

impl fmt::Debug for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Segment({})", self.game_tag)?;
        for r in 0..SEGMENT_SIZE {
            let row: Vec<String> = self.row(r).iter().map(|t| format!("{:x}", t.0)).collect();
            writeln!(f, "  {}", row.join(""))?;
        }
        Ok(())
    }
}

impl Segment {
    pub fn new(tiles: [TileId; SEGMENT_TILES], game_tag: impl Into<String>) -> Self {
        Self {
            tiles,
            game_tag: game_tag.into(),
        }
    }

    pub fn filled(tile: TileId, game_tag: impl Into<String>) -> Self {
        Self::new([tile; SEGMENT_TILES], game_tag)
    }

    pub fn from_fn(game_tag: impl Into<String>, mut f: impl FnMut(usize, usize) -> TileId) -> Self {
        let mut tiles = [TileId(0); SEGMENT_TILES];
        for r in 0..SEGMENT_SIZE {
            for c in 0..SEGMENT_SIZE {
                tiles[r * SEGMENT_SIZE + c] = f(r, c);
            }
        }
        Self::new(tiles, game_tag)
    }

    pub fn game_tag(&self) -> &str {
        &self.game_tag
    }

    pub fn tiles(&self) -> &[TileId; SEGMENT_TILES] {
        &self.tiles
    }

    pub fn get(&self, row: usize, col: usize) -> TileId {
        self.tiles[row * SEGMENT_SIZE + col]
    }

    pub fn set(&mut self, row: usize, col: usize, tile: TileId) {
        self.tiles[row * SEGMENT_SIZE + col] = tile;
    }

    pub fn row(&self, r: usize) -> [TileId; SEGMENT_SIZE] {
        let mut out = [TileId(0); SEGMENT_SIZE];
        out.copy_from_slice(&self.tiles[r * SEGMENT_SIZE..(r + 1) * SEGMENT_SIZE]);
        out
    }

    pub fn col(&self, c: usize) -> [TileId; SEGMENT_SIZE] {
        std::array::from_fn(|r| self.get(r, c))
    }

    /// Checks that every tile is in `config`'s vocabulary and the tags agree.
    pub fn is_valid_for(&self, config: &GameConfig) -> bool {
        self.game_tag == config.name && self.tiles.iter().all(|t| t.index() < config.vocab_size())
    }

    pub fn map_tiles(&self, game_tag: impl Into<String>, f: impl Fn(TileId) -> TileId) -> Segment {
        let mut tiles = self.tiles;
        for t in tiles.iter_mut() {
            *t = f(*t);
        }
        Segment::new(tiles, game_tag)
    }

    pub fn mirrored_horizontally(&self) -> Segment {
        Segment::from_fn(self.game_tag.clone(), |r, c| self.get(r, SEGMENT_SIZE - 1 - c))
    }

    pub fn mirrored_vertically(&self) -> Segment {
        Segment::from_fn(self.game_tag.clone(), |r, c| self.get(SEGMENT_SIZE - 1 - r, c))
    }

    pub fn to_grid(&self) -> TileGrid {
        TileGrid {
            rows: SEGMENT_SIZE,
            cols: SEGMENT_SIZE,
            tiles: self.tiles.to_vec(),
        }
    }

    pub fn to_text(&self, config: &GameConfig) -> String {
        self.to_grid().to_text(config)
    }

    /// Parses a 16-line text block; used for corpus caches and segment dumps.
    pub fn from_text(text: &str, config: &GameConfig) -> Result<Segment, CorpusError> {
        let grid = parse_level(text, config)?;
        if grid.rows != SEGMENT_SIZE {
            return Err(CorpusError::WrongDimension { got: grid.rows });
        }
        if grid.cols != SEGMENT_SIZE {
            return Err(CorpusError::WrongDimension { got: grid.cols });
        }
        let mut tiles = [TileId(0); SEGMENT_TILES];
        tiles.copy_from_slice(&grid.tiles);
        Ok(Segment::new(tiles, config.name.clone()))
    }
}

pub fn parse_level(text: &str, config: &GameConfig) -> Result<TileGrid, CorpusError> {
    let lines: Vec<&str> = text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    let cols = lines.first().map(|l| l.chars().count()).unwrap_or(0);
    let mut tiles = Vec::with_capacity(lines.len() * cols);
    for (i, line) in lines.iter().enumerate() {
        let mut n = 0;
        for (j, ch) in line.chars().enumerate() {
            let id = config.tile_id(ch).ok_or(CorpusError::UnknownTile {
                ch,
                line: i + 1,
                col: j + 1,
            })?;
            tiles.push(id);
            n += 1;
        }
        if n != cols {
            return Err(CorpusError::RaggedLines { line: i + 1 });
        }
    }
    Ok(TileGrid {
        rows: lines.len(),
        cols,
        tiles,
    })
}

/// Cuts a level into 16×16 windows with stride 1 along its scroll axis.
///
/// Horizontal strips are first padded at the top with `pad_rows` rows of
/// background. Mixed-orientation games decide per grid: a grid whose padded
/// height is 16 is horizontal, otherwise it must be 16 wide.
pub fn segment_level(grid: &TileGrid, config: &GameConfig) -> Result<Vec<Segment>, CorpusError> {
    let horizontal = match config.orientation {
        Orientation::HorizontalStrip => true,
        Orientation::VerticalStrip => false,
        Orientation::Mixed => grid.rows + config.pad_rows == SEGMENT_SIZE,
    };
    let bg = config.background();
    let mut out = Vec::new();
    if horizontal {
        let pad = config.pad_rows;
        if grid.rows + pad != SEGMENT_SIZE {
            return Err(CorpusError::WrongDimension {
                got: grid.rows + pad,
            });
        }
        if grid.cols < SEGMENT_SIZE {
            return Err(CorpusError::WrongDimension { got: grid.cols });
        }
        for start in 0..=grid.cols - SEGMENT_SIZE {
            out.push(Segment::from_fn(config.name.clone(), |r, c| {
                if r < pad {
                    bg
                } else {
                    grid.get(r - pad, start + c)
                }
            }));
        }
    } else {
        if grid.cols != SEGMENT_SIZE {
            return Err(CorpusError::WrongDimension { got: grid.cols });
        }
        if grid.rows < SEGMENT_SIZE {
            return Err(CorpusError::WrongDimension { got: grid.rows });
        }
        for start in 0..=grid.rows - SEGMENT_SIZE {
            out.push(Segment::from_fn(config.name.clone(), |r, c| {
                grid.get(start + r, c)
            }));
        }
    }
    Ok(out)
}

/// Row and column strings seen in a training corpus, after path tiles are
/// folded into background.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReferenceSets {
    pub rows: HashSet<[TileId; SEGMENT_SIZE]>,
    pub cols: HashSet<[TileId; SEGMENT_SIZE]>,
}

impl ReferenceSets {
    pub fn from_segments<'a>(
        segments: impl IntoIterator<Item = &'a Segment>,
        config: &GameConfig,
    ) -> Self {
        let mut refs = ReferenceSets::default();
        for seg in segments {
            for i in 0..SEGMENT_SIZE {
                refs.rows.insert(structural_line(seg.row(i), config));
                refs.cols.insert(structural_line(seg.col(i), config));
            }
        }
        refs
    }
}

pub fn structural_line(line: [TileId; SEGMENT_SIZE], config: &GameConfig) -> [TileId; SEGMENT_SIZE] {
    line.map(|t| config.structural(t))
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub segments: Vec<Segment>,
    pub references: ReferenceSets,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn from_segments(segments: Vec<Segment>, config: &GameConfig) -> Result<Self, CorpusError> {
        if segments.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let references = ReferenceSets::from_segments(&segments, config);
        Ok(Corpus {
            segments,
            references,
        })
    }
}

/// Parses every `.txt` file in `dir`, sorted by file name.
pub fn load_level_dir(dir: &Path, config: &GameConfig) -> Result<Vec<TileGrid>, CorpusError> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CorpusError::NoLevels(dir.display().to_string()));
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            let in_file = |e| CorpusError::InFile {
                path: p.display().to_string(),
                source: Box::new(e),
            };
            let grid = parse_level(&text, config).map_err(in_file)?;
            // dimension errors surface here rather than mid-corpus
            segment_level(&grid, config).map_err(in_file)?;
            Ok(grid)
        })
        .collect()
}

pub fn build_corpus(levels: &[TileGrid], config: &GameConfig) -> Result<Corpus, CorpusError> {
    let mut segments = Vec::new();
    for grid in levels {
        segments.extend(segment_level(grid, config)?);
    }
    Corpus::from_segments(segments, config)
}

/// A blended domain: the shared vocabulary plus the member games whose
/// agents judge playability.
#[derive(Clone, Debug, PartialEq)]
pub struct Blend {
    pub config: GameConfig,
    pub members: Vec<GameConfig>,
}

impl Blend {
    pub fn member_names(&self) -> Vec<String> {
        self.members.iter().map(|m| m.name.clone()).collect()
    }
}

/// Per-game remapping from source TileIds into a blend vocabulary.
pub fn blend_remap(
    source: &GameConfig,
    blend: &GameConfig,
    table: &BlendTable,
) -> Result<Vec<TileId>, CorpusError> {
    let cats = table.mapping_for(source)?;
    Ok(cats
        .iter()
        .map(|c| {
            blend
                .tile_id(c.tile_char())
                .expect("blend vocabulary covers every mapped category")
        })
        .collect())
}

/// Merges per-game corpora into one blended corpus.
///
/// Each game's segments are translated into the shared vocabulary and
/// upsampled by cyclic repetition to the largest per-game count.
pub fn build_blend_corpus(
    corpora: &[(Corpus, GameConfig)],
    table: &BlendTable,
) -> Result<(Corpus, Blend), CorpusError> {
    if corpora.len() < 2 {
        return Err(CorpusError::TooFewCorpora);
    }
    let mut used: Vec<BlendCategory> = Vec::new();
    for (_, cfg) in corpora {
        used.extend(table.mapping_for(cfg)?);
    }
    let mut names: Vec<String> = Vec::new();
    for (_, cfg) in corpora {
        if !names.contains(&cfg.name) {
            names.push(cfg.name.clone());
        }
    }
    let config = blend_config(&names.join("-"), &used);
    let target = corpora.iter().map(|(c, _)| c.len()).max().unwrap_or(0);
    let mut segments = Vec::with_capacity(target * corpora.len());
    for (corpus, cfg) in corpora {
        if corpus.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let remap = blend_remap(cfg, &config, table)?;
        for i in 0..target {
            let src = &corpus.segments[i % corpus.len()];
            segments.push(src.map_tiles(config.name.clone(), |t| remap[t.index()]));
        }
    }
    let corpus = Corpus::from_segments(segments, &config)?;
    let members = corpora.iter().map(|(_, c)| c.clone()).collect();
    Ok((corpus, Blend { config, members }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheManifest {
    pub game: String,
    pub segment_count: usize,
    /// Segment count per source game before any upsampling.
    pub counts: BTreeMap<String, usize>,
    pub config_hash: String,
    pub members: Vec<String>,
}

pub const CACHE_SEGMENTS: &str = "segments.txt";
pub const CACHE_MANIFEST: &str = "manifest.json";
pub const CACHE_CONFIG: &str = "game_config.json";
pub const CACHE_MEMBERS: &str = "members";

/// A corpus on disk together with the config(s) needed to interpret it.
#[derive(Clone, Debug)]
pub struct CorpusCache {
    pub corpus: Corpus,
    pub config: GameConfig,
    pub members: Vec<GameConfig>,
    pub manifest: CacheManifest,
}

impl CorpusCache {
    pub fn new(
        corpus: Corpus,
        config: GameConfig,
        members: Vec<GameConfig>,
        counts: BTreeMap<String, usize>,
    ) -> Self {
        let manifest = CacheManifest {
            game: config.name.clone(),
            segment_count: corpus.len(),
            counts,
            config_hash: config.config_hash(),
            members: members.iter().map(|m| m.name.clone()).collect(),
        };
        Self {
            corpus,
            config,
            members,
            manifest,
        }
    }

    pub fn blend(&self) -> Option<Blend> {
        (!self.members.is_empty()).then(|| Blend {
            config: self.config.clone(),
            members: self.members.clone(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<(), CorpusError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let blocks: Vec<String> = self
            .corpus
            .segments
            .iter()
            .map(|s| s.to_text(&self.config))
            .collect();
        let seg_path = dir.join(CACHE_SEGMENTS);
        fs::write(&seg_path, blocks.join("\n")).map_err(io_err(&seg_path))?;
        let cfg_path = dir.join(CACHE_CONFIG);
        fs::write(&cfg_path, self.config.to_json()).map_err(io_err(&cfg_path))?;
        if !self.members.is_empty() {
            let mdir = dir.join(CACHE_MEMBERS);
            fs::create_dir_all(&mdir).map_err(io_err(&mdir))?;
            for (i, m) in self.members.iter().enumerate() {
                let p = mdir.join(format!("{i:02}_{}.json", m.name));
                fs::write(&p, m.to_json()).map_err(io_err(&p))?;
            }
        }
        let man_path = dir.join(CACHE_MANIFEST);
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(&man_path, json).map_err(io_err(&man_path))?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self, CorpusError> {
        let cache_err = |msg: String| CorpusError::Cache {
            path: dir.display().to_string(),
            msg,
        };
        let man_path = dir.join(CACHE_MANIFEST);
        let text = fs::read_to_string(&man_path).map_err(io_err(&man_path))?;
        let manifest: CacheManifest =
            serde_json::from_str(&text).map_err(|e| cache_err(format!("manifest: {e}")))?;
        let config = GameConfig::load(&dir.join(CACHE_CONFIG))?;
        if config.config_hash() != manifest.config_hash {
            return Err(cache_err("config hash does not match manifest".into()));
        }
        let mut members = Vec::new();
        if !manifest.members.is_empty() {
            let mdir = dir.join(CACHE_MEMBERS);
            for (i, name) in manifest.members.iter().enumerate() {
                members.push(GameConfig::load(&mdir.join(format!("{i:02}_{name}.json")))?);
            }
        }
        let seg_path = dir.join(CACHE_SEGMENTS);
        let text = fs::read_to_string(&seg_path).map_err(io_err(&seg_path))?;
        let lines: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
        if lines.len() % SEGMENT_SIZE != 0 {
            return Err(cache_err(format!(
                "{} segment lines is not a multiple of 16",
                lines.len()
            )));
        }
        let segments = lines
            .chunks(SEGMENT_SIZE)
            .map(|block| Segment::from_text(&block.join("\n"), &config))
            .collect::<Result<Vec<_>, _>>()?;
        if segments.len() != manifest.segment_count {
            return Err(cache_err(format!(
                "manifest lists {} segments, found {}",
                manifest.segment_count,
                segments.len()
            )));
        }
        let corpus = Corpus::from_segments(segments, &config)?;
        Ok(Self {
            corpus,
            config,
            members,
            manifest,
        })
    }
}
