//! Per-game tile semantics and movement models.
//!
//! A [`GameConfig`] is plain data: the ordered tile vocabulary of a game, what
//! each tile means to the metrics and the agent, and the agent's movement
//! model. The five stock configs and the blend category table ship as JSON
//! under `data/` and are embedded at compile time.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::TileId;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("duplicate tile character {0:?}")]
    DuplicateTile(char),
    #[error("tile_chars has {chars} entries but categories has {categories}")]
    CategoryCount { chars: usize, categories: usize },
    #[error("tile {tile:?} references unknown element class {class:?}")]
    UnknownElementClass { tile: char, class: String },
    #[error("config {0} has no background tile")]
    NoBackground(String),
    #[error("tile vocabulary of {0} exceeds 256 entries")]
    VocabularyTooLarge(String),
    #[error("jump arc {0} is empty")]
    EmptyArc(usize),
    #[error("unknown stock game {0:?}")]
    UnknownStock(String),
    #[error("no blend mapping for tile {tile:?} of {game}")]
    IncompatibleCategory { game: String, tile: char },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Axis along which the agent's progress is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProgressAxis {
    Horizontal,
    VerticalUp,
    Both,
}

/// How a game's level files are laid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    HorizontalStrip,
    VerticalStrip,
    Mixed,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileCategory {
    #[serde(default)]
    pub solid: bool,
    #[serde(default)]
    pub background: bool,
    #[serde(default)]
    pub path: bool,
    #[serde(default)]
    pub hazard: bool,
    /// One-way platform: passable, but an agent can stand on top of it.
    #[serde(default)]
    pub standable: bool,
    /// Ladder-like: an agent inside the tile counts as supported.
    #[serde(default)]
    pub climbable: bool,
    #[serde(default)]
    pub element: Option<String>,
}

impl TileCategory {
    /// Background and path tiles carry no structure.
    pub fn is_empty_space(&self) -> bool {
        self.background || self.path
    }

    pub fn passable(&self) -> bool {
        !self.solid && !self.hazard
    }

    pub fn supports_above(&self) -> bool {
        self.solid || self.standable
    }
}

/// A jump trajectory: per-step `(dx, dy)` offsets, `dy < 0` is upward.
/// Agents may also take every arc mirrored horizontally.
pub type JumpArc = Vec<(i32, i32)>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub name: String,
    pub tile_chars: Vec<char>,
    pub categories: Vec<TileCategory>,
    pub element_classes: Vec<String>,
    pub progress_axis: ProgressAxis,
    pub jump_arcs: Vec<JumpArc>,
    pub pad_rows: usize,
    pub orientation: Orientation,
    /// Whether the agent can walk along the ground (disabled for KI).
    #[serde(default = "default_true")]
    pub walk: bool,
}

fn default_true() -> bool {
    true
}

impl GameConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: GameConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.tile_chars.len() > 256 {
            return Err(ConfigError::VocabularyTooLarge(self.name.clone()));
        }
        if self.tile_chars.len() != self.categories.len() {
            return Err(ConfigError::CategoryCount {
                chars: self.tile_chars.len(),
                categories: self.categories.len(),
            });
        }
        let mut seen = HashSet::new();
        for &c in &self.tile_chars {
            if !seen.insert(c) {
                return Err(ConfigError::DuplicateTile(c));
            }
        }
        for (c, cat) in self.tile_chars.iter().zip(&self.categories) {
            if let Some(class) = &cat.element {
                if !self.element_classes.contains(class) {
                    return Err(ConfigError::UnknownElementClass {
                        tile: *c,
                        class: class.clone(),
                    });
                }
            }
        }
        if !self.categories.iter().any(|c| c.background) {
            return Err(ConfigError::NoBackground(self.name.clone()));
        }
        if let Some(i) = self.jump_arcs.iter().position(|a| a.is_empty()) {
            return Err(ConfigError::EmptyArc(i));
        }
        Ok(())
    }

    pub fn vocab_size(&self) -> usize {
        self.tile_chars.len()
    }

    pub fn tile_id(&self, c: char) -> Option<TileId> {
        self.tile_chars
            .iter()
            .position(|&t| t == c)
            .map(|i| TileId(i as u8))
    }

    pub fn tile_char(&self, id: TileId) -> char {
        self.tile_chars[id.index()]
    }

    pub fn category(&self, id: TileId) -> &TileCategory {
        &self.categories[id.index()]
    }

    /// The canonical background tile: the first tile flagged as background.
    pub fn background(&self) -> TileId {
        let i = self
            .categories
            .iter()
            .position(|c| c.background)
            .expect("validated config has a background tile");
        TileId(i as u8)
    }

    /// Maps path tiles onto the canonical background; every other tile is unchanged.
    pub fn structural(&self, id: TileId) -> TileId {
        if self.category(id).path {
            self.background()
        } else {
            id
        }
    }

    /// Index of a tile's element class, if it has one.
    pub fn element_index(&self, id: TileId) -> Option<usize> {
        let class = self.category(id).element.as_ref()?;
        self.element_classes.iter().position(|c| c == class)
    }

    /// SHA-256 over the tile vocabulary; models and corpora are matched on it.
    pub fn vocab_hash(&self) -> String {
        let s: String = self.tile_chars.iter().collect();
        hex::encode(Sha256::digest(s.as_bytes()))
    }

    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(
            serde_json::to_string(self).expect("config serializes").as_bytes(),
        ))
    }

    /// Largest horizontal and vertical displacement of any single move.
    pub fn max_step(&self) -> (i32, i32) {
        let mut dx = 1;
        let mut dy = 1;
        for arc in &self.jump_arcs {
            for &(x, y) in arc {
                dx = dx.max(x.abs());
                dy = dy.max(y.abs());
            }
        }
        (dx, dy)
    }

    pub fn stock(name: &str) -> Result<Self, ConfigError> {
        let text = match name.to_ascii_uppercase().as_str() {
            "SMB" => include_str!("../data/games/smb.json"),
            "KI" => include_str!("../data/games/ki.json"),
            "MM" => include_str!("../data/games/mm.json"),
            "CV" => include_str!("../data/games/cv.json"),
            "NG" => include_str!("../data/games/ng.json"),
            _ => return Err(ConfigError::UnknownStock(name.to_string())),
        };
        Self::from_json(text)
    }
}

pub const STOCK_GAMES: [&str; 5] = ["SMB", "KI", "MM", "CV", "NG"];

/// Shared tile categories of the blended vocabulary, in vocabulary order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendCategory {
    Background,
    Path,
    Solid,
    EnemyHazard,
    Door,
    Ladder,
    Pipe,
    QMark,
    Collectable,
    MovingPlatform,
    FixedPlatform,
    Breakable,
}

impl BlendCategory {
    pub const ALL: [BlendCategory; 12] = [
        BlendCategory::Background,
        BlendCategory::Path,
        BlendCategory::Solid,
        BlendCategory::EnemyHazard,
        BlendCategory::Door,
        BlendCategory::Ladder,
        BlendCategory::Pipe,
        BlendCategory::QMark,
        BlendCategory::Collectable,
        BlendCategory::MovingPlatform,
        BlendCategory::FixedPlatform,
        BlendCategory::Breakable,
    ];

    /// Element classes of the blended domain; the order fixes the bit order.
    pub const ELEMENT_CLASSES: [BlendCategory; 9] = [
        BlendCategory::EnemyHazard,
        BlendCategory::Door,
        BlendCategory::Ladder,
        BlendCategory::Pipe,
        BlendCategory::QMark,
        BlendCategory::Collectable,
        BlendCategory::MovingPlatform,
        BlendCategory::FixedPlatform,
        BlendCategory::Breakable,
    ];

    pub fn tile_char(self) -> char {
        match self {
            BlendCategory::Background => '-',
            BlendCategory::Path => 'x',
            BlendCategory::Solid => '#',
            BlendCategory::EnemyHazard => 'E',
            BlendCategory::Door => 'D',
            BlendCategory::Ladder => '|',
            BlendCategory::Pipe => 'P',
            BlendCategory::QMark => '?',
            BlendCategory::Collectable => 'o',
            BlendCategory::MovingPlatform => 'M',
            BlendCategory::FixedPlatform => 'T',
            BlendCategory::Breakable => 'B',
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BlendCategory::Background => "background",
            BlendCategory::Path => "path",
            BlendCategory::Solid => "solid",
            BlendCategory::EnemyHazard => "enemy_hazard",
            BlendCategory::Door => "door",
            BlendCategory::Ladder => "ladder",
            BlendCategory::Pipe => "pipe",
            BlendCategory::QMark => "qmark",
            BlendCategory::Collectable => "collectable",
            BlendCategory::MovingPlatform => "moving_platform",
            BlendCategory::FixedPlatform => "fixed_platform",
            BlendCategory::Breakable => "breakable",
        }
    }

    pub fn tile_category(self) -> TileCategory {
        let element = Self::ELEMENT_CLASSES
            .contains(&self)
            .then(|| self.label().to_string());
        let mut cat = TileCategory {
            element,
            ..TileCategory::default()
        };
        match self {
            BlendCategory::Background => cat.background = true,
            BlendCategory::Path => cat.path = true,
            BlendCategory::Solid
            | BlendCategory::Pipe
            | BlendCategory::QMark
            | BlendCategory::Breakable => cat.solid = true,
            BlendCategory::EnemyHazard => cat.hazard = true,
            BlendCategory::Ladder => cat.climbable = true,
            BlendCategory::MovingPlatform | BlendCategory::FixedPlatform => cat.standable = true,
            BlendCategory::Door | BlendCategory::Collectable => {}
        }
        cat
    }
}

impl fmt::Display for BlendCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Maps each source game's tile characters to a shared [`BlendCategory`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlendTable {
    pub games: BTreeMap<String, BTreeMap<char, BlendCategory>>,
}

impl BlendTable {
    pub fn stock() -> Self {
        Self::from_json(include_str!("../data/blend_table.json")).expect("stock blend table parses")
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Category of every tile of `config`, in TileId order.
    pub fn mapping_for(&self, config: &GameConfig) -> Result<Vec<BlendCategory>, ConfigError> {
        let table = self.games.get(&config.name);
        config
            .tile_chars
            .iter()
            .map(|&c| {
                table
                    .and_then(|t| t.get(&c))
                    .copied()
                    .ok_or_else(|| ConfigError::IncompatibleCategory {
                        game: config.name.clone(),
                        tile: c,
                    })
            })
            .collect()
    }
}

/// Builds the blended vocabulary from the categories actually used by the members.
///
/// Tiles are ordered by [`BlendCategory`] order; the element classes are always
/// the full blended element list so the bit layout does not depend on membership.
pub fn blend_config(name: &str, used: &[BlendCategory]) -> GameConfig {
    let mut cats: Vec<BlendCategory> = used.to_vec();
    if !cats.contains(&BlendCategory::Background) {
        cats.push(BlendCategory::Background);
    }
    cats.sort();
    cats.dedup();
    GameConfig {
        name: name.to_string(),
        tile_chars: cats.iter().map(|c| c.tile_char()).collect(),
        categories: cats.iter().map(|c| c.tile_category()).collect(),
        element_classes: BlendCategory::ELEMENT_CLASSES
            .iter()
            .map(|c| c.label().to_string())
            .collect(),
        progress_axis: ProgressAxis::Both,
        jump_arcs: Vec::new(),
        pad_rows: 0,
        orientation: Orientation::HorizontalStrip,
        walk: true,
    }
}
