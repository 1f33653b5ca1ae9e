//! Behavior characteristics and their archive binning.
//!
//! All metrics are integer-valued, so cell indices are the metric values
//! themselves. Path tiles are folded into background before any metric looks
//! at a segment.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::GameConfig;
use crate::corpus::{structural_line, ReferenceSets, Segment, SEGMENT_SIZE};

pub const MAX_DENSITY: usize = 256;
pub const MAX_NONLINEARITY: usize = 64;
pub const MAX_SYMMETRY: usize = 256;
pub const MAX_SIMILARITY: usize = 32;

/// Tiles that are neither background nor path.
pub fn density(segment: &Segment, config: &GameConfig) -> usize {
    segment
        .tiles()
        .iter()
        .filter(|&&t| !config.category(t).is_empty_space())
        .count()
}

/// Per-column structure height: 16 minus the row of the topmost structural tile.
pub fn column_heights(segment: &Segment, config: &GameConfig) -> Vec<(i64, i64)> {
    (0..SEGMENT_SIZE)
        .filter_map(|c| {
            (0..SEGMENT_SIZE)
                .find(|&r| !config.category(segment.get(r, c)).is_empty_space())
                .map(|r| (c as i64, (SEGMENT_SIZE - r) as i64))
        })
        .collect()
}

/// Sum of absolute least-squares residuals of the column height profile,
/// rounded half-up and clamped to 64.
///
/// Computed exactly in integers: with `d = nΣx² − (Σx)²` every residual is
/// `num_i / d` for an integer `num_i`.
pub fn nonlinearity(segment: &Segment, config: &GameConfig) -> usize {
    let pts = column_heights(segment, config);
    let n = pts.len() as i64;
    if n < 2 {
        return 0;
    }
    let sx: i64 = pts.iter().map(|p| p.0).sum();
    let sy: i64 = pts.iter().map(|p| p.1).sum();
    let sxx: i64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: i64 = pts.iter().map(|p| p.0 * p.1).sum();
    let d = n * sxx - sx * sx;
    let slope_num = n * sxy - sx * sy;
    let icpt_num = sy * sxx - sx * sxy;
    let abs_sum: i64 = pts
        .iter()
        .map(|&(x, y)| (d * y - slope_num * x - icpt_num).abs())
        .sum();
    let rounded = (2 * abs_sum + d) / (2 * d);
    (rounded as usize).min(MAX_NONLINEARITY)
}

/// Matching positions over mirrored row pairs plus mirrored column pairs.
pub fn symmetry(segment: &Segment, config: &GameConfig) -> usize {
    let s = |r, c| config.structural(segment.get(r, c));
    let mut total = 0;
    for a in 0..SEGMENT_SIZE / 2 {
        let b = SEGMENT_SIZE - 1 - a;
        for i in 0..SEGMENT_SIZE {
            total += usize::from(s(a, i) == s(b, i));
            total += usize::from(s(i, a) == s(i, b));
        }
    }
    total
}

/// Rows plus columns of the segment that occur in the training data.
pub fn similarity(segment: &Segment, config: &GameConfig, refs: &ReferenceSets) -> usize {
    (0..SEGMENT_SIZE)
        .map(|i| {
            usize::from(refs.rows.contains(&structural_line(segment.row(i), config)))
                + usize::from(refs.cols.contains(&structural_line(segment.col(i), config)))
        })
        .sum()
}

/// Presence bits of the config's element classes, first class most significant.
pub fn element_bits(segment: &Segment, config: &GameConfig) -> usize {
    let n = config.element_classes.len();
    let mut bits = 0usize;
    for &t in segment.tiles() {
        if let Some(i) = config.element_index(t) {
            bits |= 1 << (n - 1 - i);
        }
    }
    bits
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    DensityNonlinearity,
    SymmetrySimilarity,
    GameElements,
}

impl SchemeKind {
    pub fn short_name(self) -> &'static str {
        match self {
            SchemeKind::DensityNonlinearity => "denl",
            SchemeKind::SymmetrySimilarity => "symsim",
            SchemeKind::GameElements => "elements",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "denl" | "density_nonlinearity" => Ok(SchemeKind::DensityNonlinearity),
            "symsim" | "symmetry_similarity" => Ok(SchemeKind::SymmetrySimilarity),
            "elements" | "game_elements" => Ok(SchemeKind::GameElements),
            other => Err(format!(
                "unknown scheme {other:?} (expected denl, symsim or elements)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dim {
    pub name: String,
    pub cells: usize,
}

/// Archive cell coordinate, one index per scheme dimension.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellCoord(pub Vec<usize>);

impl fmt::Display for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// A binning scheme together with the context its metrics need.
#[derive(Clone, Debug)]
pub struct BcScheme {
    pub kind: SchemeKind,
    pub dims: Vec<Dim>,
    pub config: GameConfig,
    pub references: Option<ReferenceSets>,
}

impl BcScheme {
    pub fn density_nonlinearity(config: &GameConfig) -> Self {
        Self {
            kind: SchemeKind::DensityNonlinearity,
            dims: vec![
                Dim {
                    name: "density".into(),
                    cells: MAX_DENSITY + 1,
                },
                Dim {
                    name: "nonlinearity".into(),
                    cells: MAX_NONLINEARITY + 1,
                },
            ],
            config: config.clone(),
            references: None,
        }
    }

    pub fn symmetry_similarity(config: &GameConfig, references: ReferenceSets) -> Self {
        Self {
            kind: SchemeKind::SymmetrySimilarity,
            dims: vec![
                Dim {
                    name: "symmetry".into(),
                    cells: MAX_SYMMETRY + 1,
                },
                Dim {
                    name: "similarity".into(),
                    cells: MAX_SIMILARITY + 1,
                },
            ],
            config: config.clone(),
            references: Some(references),
        }
    }

    pub fn game_elements(config: &GameConfig) -> Self {
        Self {
            kind: SchemeKind::GameElements,
            dims: vec![Dim {
                name: "elements".into(),
                cells: 1 << config.element_classes.len(),
            }],
            config: config.clone(),
            references: None,
        }
    }

    /// Builds any scheme; only Symmetry-Similarity uses `references`.
    pub fn new(kind: SchemeKind, config: &GameConfig, references: &ReferenceSets) -> Self {
        match kind {
            SchemeKind::DensityNonlinearity => Self::density_nonlinearity(config),
            SchemeKind::SymmetrySimilarity => Self::symmetry_similarity(config, references.clone()),
            SchemeKind::GameElements => Self::game_elements(config),
        }
    }

    pub fn archive_size(&self) -> usize {
        self.dims.iter().map(|d| d.cells).product()
    }

    pub fn assign_cell(&self, segment: &Segment) -> CellCoord {
        let cfg = &self.config;
        match self.kind {
            SchemeKind::DensityNonlinearity => {
                CellCoord(vec![density(segment, cfg), nonlinearity(segment, cfg)])
            }
            SchemeKind::SymmetrySimilarity => {
                let refs = self
                    .references
                    .as_ref()
                    .expect("symmetry-similarity scheme carries reference sets");
                CellCoord(vec![symmetry(segment, cfg), similarity(segment, cfg, refs)])
            }
            SchemeKind::GameElements => CellCoord(vec![element_bits(segment, cfg)]),
        }
    }

    pub fn is_valid(&self, cell: &CellCoord) -> bool {
        cell.0.len() == self.dims.len() && cell.0.iter().zip(&self.dims).all(|(&i, d)| i < d.cells)
    }

    /// Row-major flat index, first dimension slowest.
    pub fn flat_index(&self, cell: &CellCoord) -> usize {
        cell.0
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, d)| acc * d.cells + i)
    }

    pub fn cell_at(&self, mut flat: usize) -> CellCoord {
        let mut idx = vec![0; self.dims.len()];
        for (slot, d) in idx.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d.cells;
            flat /= d.cells;
        }
        CellCoord(idx)
    }
}
