//! Run summaries, agent-set region maps, elite queries and renderings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentSet;
use crate::config::GameConfig;
use crate::corpus::{Segment, SEGMENT_SIZE};
use crate::metrics::{BcScheme, CellCoord};
use crate::qd::{Archive, Elite};
use crate::vae::VaeModel;

/// Fitness at or above this counts as optimal.
pub const OPTIMAL_THRESHOLD: f64 = 1.0 - 1e-9;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("archive is not from a blend run")]
    NotABlendRun,
    #[error("scheme with {0} dimensions cannot be laid out")]
    UnsupportedScheme(usize),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub qd_score: f64,
    pub coverage_pct: f64,
    /// Share of occupied cells whose elite is optimal.
    pub optimal_pct: f64,
    pub archive_size: usize,
    pub occupied: usize,
}

pub fn summarize(archive: &Archive) -> RunSummary {
    let occupied = archive.occupied();
    let optimal = archive
        .elites()
        .filter(|e| e.fitness >= OPTIMAL_THRESHOLD)
        .count();
    RunSummary {
        qd_score: archive.qd_score(),
        coverage_pct: archive.coverage_pct(),
        optimal_pct: if occupied == 0 {
            0.0
        } else {
            100.0 * optimal as f64 / occupied as f64
        },
        archive_size: archive.archive_size(),
        occupied,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub summary: RunSummary,
    pub scheme: String,
    pub manifest_sha256: Option<String>,
}

impl SummaryFile {
    pub fn write(&self, path: &Path) -> Result<(), ReportError> {
        fs::write(path, serde_json::to_string_pretty(self)?).map_err(io_err(path))
    }
}

/// Agent-set category of every cell in flat-index order; `None` for empty cells.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMap {
    pub members: Vec<String>,
    pub categories: Vec<Option<AgentSet>>,
}

impl RegionMap {
    pub fn label(&self, set: AgentSet) -> String {
        set.label(&self.members)
    }

    /// Occupied-cell count per category value `0..2^m`.
    pub fn counts(&self) -> Vec<usize> {
        let mut out = vec![0; 1 << self.members.len()];
        for c in self.categories.iter().flatten() {
            out[c.0 as usize] += 1;
        }
        out
    }
}

pub fn blend_region_map(archive: &Archive) -> Result<RegionMap, ReportError> {
    let members = archive.members.clone().ok_or(ReportError::NotABlendRun)?;
    Ok(RegionMap {
        members,
        categories: (0..archive.archive_size())
            .map(|i| {
                let cell = archive.scheme.cell_at(i);
                archive.get(&cell).map(|_| archive.history(&cell))
            })
            .collect(),
    })
}

/// Decoded elites of all cells accepted by `keep`, sorted by cell.
pub fn query_elites(
    archive: &Archive,
    model: &VaeModel,
    keep: impl Fn(&CellCoord, &Elite, AgentSet) -> bool,
) -> Vec<(CellCoord, Elite, Segment)> {
    let mut out: Vec<_> = archive
        .elites()
        .filter(|e| keep(&e.cell, e, archive.history(&e.cell)))
        .map(|e| (e.cell.clone(), e.clone(), model.decode(&e.latent)))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Inclusive per-dimension ranges plus fitness and agent filters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EliteQuery {
    pub ranges: Vec<Option<(usize, usize)>>,
    pub min_fitness: Option<f64>,
    pub agents: Option<AgentSet>,
}

impl EliteQuery {
    pub fn matches(&self, cell: &CellCoord, elite: &Elite, history: AgentSet) -> bool {
        let in_range = self
            .ranges
            .iter()
            .zip(&cell.0)
            .all(|(r, &i)| r.is_none_or(|(lo, hi)| lo <= i && i <= hi));
        in_range
            && self.min_fitness.is_none_or(|f| elite.fitness >= f)
            && self.agents.is_none_or(|a| history.is_superset(a))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatmapMode {
    Fitness,
    AgentSet,
}

pub const EMPTY_COLOR: [u8; 3] = [0xdd, 0xdd, 0xdd];

/// Categorical colors by agent-set value; index 0 is the empty set.
pub const AGENT_PALETTE: [[u8; 3]; 8] = [
    [0xf2, 0xf2, 0xf2],
    [0xe4, 0x1a, 0x1c],
    [0x37, 0x7e, 0xb8],
    [0x98, 0x4e, 0xa3],
    [0x4d, 0xaf, 0x4a],
    [0xff, 0x7f, 0x00],
    [0xa6, 0x56, 0x28],
    [0x22, 0x22, 0x22],
];

const RAMP: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Viridis-like ramp over `[0, 1]`.
pub fn ramp_color(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (t.floor() as usize).min(RAMP.len() - 2);
    let f = t - i as f64;
    let mut out = [0u8; 3];
    for k in 0..3 {
        out[k] = (RAMP[i][k] + f * (RAMP[i + 1][k] - RAMP[i][k])).round() as u8;
    }
    out
}

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Grid placement of scheme cells; `y` is counted from the top.
struct Layout {
    cols: usize,
    rows: usize,
    x_label: String,
    y_label: String,
}

impl Layout {
    fn for_scheme(scheme: &BcScheme) -> Result<Self, ReportError> {
        match scheme.dims.len() {
            2 => Ok(Layout {
                cols: scheme.dims[0].cells,
                rows: scheme.dims[1].cells,
                x_label: format!("{} (0 to {})", scheme.dims[0].name, scheme.dims[0].cells - 1),
                y_label: format!("{} (0 to {})", scheme.dims[1].name, scheme.dims[1].cells - 1),
            }),
            1 => {
                let bits = scheme.dims[0].cells.trailing_zeros() as usize;
                let cols = 1 << bits.div_ceil(2);
                let rows = 1 << (bits / 2);
                Ok(Layout {
                    cols,
                    rows,
                    x_label: format!("{} low bits", scheme.dims[0].name),
                    y_label: format!("{} high bits", scheme.dims[0].name),
                })
            }
            n => Err(ReportError::UnsupportedScheme(n)),
        }
    }

    fn position(&self, scheme: &BcScheme, flat: usize) -> (usize, usize) {
        if scheme.dims.len() == 2 {
            let cell = scheme.cell_at(flat);
            (cell.0[0], self.rows - 1 - cell.0[1])
        } else {
            (flat % self.cols, self.rows - 1 - flat / self.cols)
        }
    }
}

fn cell_color(archive: &Archive, mode: HeatmapMode, flat: usize) -> [u8; 3] {
    let cell = archive.scheme.cell_at(flat);
    match mode {
        HeatmapMode::Fitness => archive
            .get(&cell)
            .map_or(EMPTY_COLOR, |e| ramp_color(e.fitness)),
        HeatmapMode::AgentSet => AGENT_PALETTE[archive.history(&cell).0 as usize % AGENT_PALETTE.len()],
    }
}

fn check_mode(archive: &Archive, mode: HeatmapMode) -> Result<(), ReportError> {
    if mode == HeatmapMode::AgentSet && !archive.is_blend() {
        return Err(ReportError::NotABlendRun);
    }
    Ok(())
}

/// SVG heatmap with one `rect` of class `cell` per archive cell.
pub fn heatmap_svg(archive: &Archive, mode: HeatmapMode) -> Result<String, ReportError> {
    check_mode(archive, mode)?;
    let scheme = &archive.scheme;
    let layout = Layout::for_scheme(scheme)?;
    let px = if layout.cols * layout.rows > 4096 { 4 } else { 24 };
    let (left, top, bottom) = (40, 10, 40);
    let right = if mode == HeatmapMode::AgentSet { 160 } else { 20 };
    let w = left + layout.cols * px + right;
    let h = top + layout.rows * px + bottom;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for flat in 0..scheme.archive_size() {
        let (x, y) = layout.position(scheme, flat);
        let _ = writeln!(
            s,
            r#"<rect class="cell" x="{}" y="{}" width="{px}" height="{px}" fill="{}"/>"#,
            left + x * px,
            top + y * px,
            hex(cell_color(archive, mode, flat))
        );
    }
    if scheme.dims.len() == 1 && px >= 24 {
        let bits = scheme.dims[0].cells.trailing_zeros() as usize;
        for flat in 0..scheme.archive_size() {
            let (x, y) = layout.position(scheme, flat);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="6" text-anchor="middle">{:0bits$b}</text>"#,
                left + x * px + px / 2,
                top + y * px + px / 2 + 2,
                flat
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + layout.cols * px / 2,
        h - 12,
        layout.x_label
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(14,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
        top + layout.rows * px / 2,
        layout.y_label
    );
    if mode == HeatmapMode::AgentSet {
        let members = archive.members.as_deref().unwrap_or_default();
        let lx = left + layout.cols * px + 12;
        for v in 0..(1usize << members.len()).min(AGENT_PALETTE.len()) {
            let y = top + v * 16;
            let _ = writeln!(
                s,
                r#"<rect x="{lx}" y="{y}" width="10" height="10" fill="{}" stroke="black" stroke-width="0.5"/><text x="{}" y="{}">{}</text>"#,
                hex(AGENT_PALETTE[v]),
                lx + 14,
                y + 9,
                AgentSet(v as u8).label(members)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Binary PPM (P6) with `scale × scale` pixels per cell.
pub fn heatmap_ppm(archive: &Archive, mode: HeatmapMode, scale: usize) -> Result<Vec<u8>, ReportError> {
    check_mode(archive, mode)?;
    let scheme = &archive.scheme;
    let layout = Layout::for_scheme(scheme)?;
    let scale = scale.max(1);
    let (w, h) = (layout.cols * scale, layout.rows * scale);
    let mut px = vec![0u8; w * h * 3];
    for flat in 0..scheme.archive_size() {
        let (x, y) = layout.position(scheme, flat);
        let color = cell_color(archive, mode, flat);
        for dy in 0..scale {
            for dx in 0..scale {
                let i = ((y * scale + dy) * w + x * scale + dx) * 3;
                px[i..i + 3].copy_from_slice(&color);
            }
        }
    }
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.extend(px);
    Ok(out)
}

/// Writes an SVG, or a PPM when `path` ends in `.ppm`.
pub fn render_heatmap(archive: &Archive, mode: HeatmapMode, path: &Path) -> Result<(), ReportError> {
    let bytes = if path.extension().is_some_and(|e| e == "ppm") {
        heatmap_ppm(archive, mode, 4)?
    } else {
        heatmap_svg(archive, mode)?.into_bytes()
    };
    fs::write(path, bytes).map_err(io_err(path))
}

/// 16 lines of tile characters.
pub fn render_segment(segment: &Segment, config: &GameConfig) -> String {
    segment.to_text(config)
}

fn tile_color(config: &GameConfig, segment: &Segment, r: usize, c: usize) -> [u8; 3] {
    let cat = config.category(segment.get(r, c));
    if cat.hazard {
        [0xd6, 0x27, 0x28]
    } else if cat.solid && cat.element.is_some() {
        [0xb0, 0x7a, 0x3c]
    } else if cat.solid {
        [0x6b, 0x4c, 0x2a]
    } else if cat.climbable {
        [0x8c, 0x8c, 0x2a]
    } else if cat.standable {
        [0x2c, 0xa0, 0x2c]
    } else if cat.element.is_some() {
        [0xff, 0xc8, 0x20]
    } else if cat.path {
        [0xc6, 0xdb, 0xef]
    } else {
        [0x9e, 0xce, 0xf5]
    }
}

/// One colored square per tile, keyed by tile category.
pub fn segment_svg(segment: &Segment, config: &GameConfig) -> String {
    let px = 16;
    let side = SEGMENT_SIZE * px;
    let mut s = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{side}" height="{side}" viewBox="0 0 {side} {side}">"#
    );
    s.push('\n');
    for r in 0..SEGMENT_SIZE {
        for c in 0..SEGMENT_SIZE {
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{px}" height="{px}" fill="{}"><title>{}</title></rect>"#,
                c * px,
                r * px,
                hex(tile_color(config, segment, r, c)),
                config.tile_char(segment.get(r, c))
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
