use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Archive, Elite, EvolutionConfig, Snapshot};
use crate::agents::AgentSet;
use crate::metrics::{BcScheme, CellCoord};
use crate::vae::{LatentVector, LATENT_DIM};

#[derive(Debug, Error)]
pub enum ArchiveIoError {
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad archive header: {0}")]
    Header(String),
    #[error("archive line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("malformed manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArchiveIoError + '_ {
    move |source| ArchiveIoError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn header(scheme: &BcScheme) -> Vec<String> {
    let mut h = vec!["scheme".to_string()];
    h.extend(scheme.dims.iter().map(|d| d.name.clone()));
    for name in ["fitness", "generation_found", "agent_mask", "elite_agent_mask"] {
        h.push(name.to_string());
    }
    h.extend((0..LATENT_DIM).map(|i| format!("z{i}")));
    h
}

fn mask(a: Option<AgentSet>) -> String {
    a.map(|s| s.0.to_string()).unwrap_or_default()
}

/// Writes one row per occupied cell in flat-index order. Floats use the
/// shortest representation that parses back to the same value.
pub fn write_archive_csv(archive: &Archive, path: &Path) -> Result<(), ArchiveIoError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(&archive.scheme))?;
    let blend = archive.is_blend();
    for e in archive.elites() {
        let mut rec = vec![archive.scheme.kind.short_name().to_string()];
        rec.extend(e.cell.0.iter().map(|i| i.to_string()));
        rec.push(e.fitness.to_string());
        rec.push(e.generation_found.to_string());
        let history = blend.then(|| archive.history(&e.cell));
        rec.push(mask(history));
        rec.push(mask(e.agents));
        rec.extend(e.latent.0.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads an archive written by [`write_archive_csv`] against `scheme`.
pub fn read_archive_csv(
    path: &Path,
    scheme: BcScheme,
    members: Option<Vec<String>>,
) -> Result<Archive, ArchiveIoError> {
    let mut r = csv::Reader::from_path(path)?;
    let expected = header(&scheme);
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(ArchiveIoError::Header(format!(
            "expected {} columns starting {:?}, got {:?}",
            expected.len(),
            &expected[..expected.len().min(4 + scheme.dims.len())],
            &got[..got.len().min(4 + scheme.dims.len())]
        )));
    }
    let blend = members.is_some();
    let member_count = members.as_ref().map_or(0, Vec::len);
    let dims = scheme.dims.len();
    let kind = scheme.kind.short_name();
    let mut archive = Archive::new(scheme, members);
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| ArchiveIoError::Row { line, message };
        if &rec[0] != kind {
            return Err(bad(format!("scheme {:?} does not match {kind:?}", &rec[0])));
        }
        let int = |i: usize| {
            rec[i]
                .parse::<usize>()
                .map_err(|e| bad(format!("column {}: {e}", expected[i])))
        };
        let float = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: {e}", expected[i])))
        };
        let opt_mask = |i: usize| -> Result<Option<AgentSet>, ArchiveIoError> {
            let field = &rec[i];
            match (blend, field.is_empty()) {
                (false, true) => Ok(None),
                (false, false) => Err(bad(format!("column {} set in a single-game archive", expected[i]))),
                (true, true) => Err(bad(format!("column {} missing in a blend archive", expected[i]))),
                (true, false) => {
                    let m: u8 = field
                        .parse()
                        .map_err(|e| bad(format!("column {}: {e}", expected[i])))?;
                    if member_count < 8 && m >> member_count != 0 {
                        return Err(bad(format!("agent mask {m} names unknown members")));
                    }
                    Ok(Some(AgentSet(m)))
                }
            }
        };
        let cell = CellCoord((1..=dims).map(int).collect::<Result<_, _>>()?);
        if !archive.scheme.is_valid(&cell) {
            return Err(bad(format!("cell {cell} outside the scheme")));
        }
        if archive.get(&cell).is_some() {
            return Err(bad(format!("duplicate cell {cell}")));
        }
        let fitness = float(dims + 1)?;
        if !(0.0..=1.0).contains(&fitness) {
            return Err(bad(format!("fitness {fitness} outside [0, 1]")));
        }
        let generation_found = int(dims + 2)?;
        let history = opt_mask(dims + 3)?.unwrap_or(AgentSet::EMPTY);
        let agents = opt_mask(dims + 4)?;
        let latent = LatentVector(
            (dims + 5..dims + 5 + LATENT_DIM)
                .map(float)
                .collect::<Result<_, _>>()?,
        );
        archive.restore(
            Elite {
                latent,
                fitness,
                cell,
                agents,
                generation_found,
            },
            history,
        );
    }
    Ok(archive)
}

pub fn write_series_csv(series: &[Snapshot], path: &Path) -> Result<(), ArchiveIoError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["generation", "qd_score", "coverage_pct"])?;
    for s in series {
        w.write_record([
            s.generation.to_string(),
            s.qd_score.to_string(),
            s.coverage_pct.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub game: String,
    pub members: Option<Vec<String>>,
    pub scheme: String,
    pub archive_size: usize,
    pub config: EvolutionConfig,
    pub model_hash: String,
    pub vocab_hash: String,
    pub generations_run: usize,
    pub occupied: usize,
    pub qd_score: f64,
    pub coverage_pct: f64,
    pub failed_evaluations: usize,
    pub reproducible: bool,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), ArchiveIoError> {
        fs::write(path, serde_json::to_string_pretty(self)?).map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<Self, ArchiveIoError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}
