//! Manifest file formats: input scan lists, curated pools, and batch
//! outputs. All manifests are JSONL; the batch manifest starts with a run
//! header line. Writes go through a temp file and an atomic rename so an
//! interrupted run never leaves a truncated manifest behind.

use lesionforge::curation::ScanRecord;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

/// One line of the raw input manifest consumed by `curate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputRow {
    pub scan_id: String,
    pub volume: PathBuf,
    pub labels: PathBuf,
    #[serde(default)]
    pub impression: String,
}

/// One line of the curated manifest: a classified record or a failure.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CuratedRow {
    Ok {
        #[serde(flatten)]
        record: ScanRecord,
    },
    Failed {
        scan_id: String,
        error: String,
    },
}

/// Header line of a batch manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunHeader {
    pub run_id: String,
    pub config_hash: String,
}

/// One sample line of a batch manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRow {
    pub sample_id: String,
    pub lesion_type: String,
    pub template_id: String,
    pub seed: u64,
    pub status: SampleStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refined: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Ok,
    Failed,
    Skipped,
}

/// A parsed batch manifest.
#[derive(Debug, Clone)]
pub struct BatchManifest {
    pub header: RunHeader,
    pub rows: Vec<SampleRow>,
}

/// Write bytes via temp file + rename, so readers never observe a partial
/// file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn read_input_manifest(path: &Path) -> anyhow::Result<Vec<InputRow>> {
    let file = fs::File::open(path)
        .map_err(|e| anyhow::anyhow!("cannot open manifest {}: {e}", path.display()))?;
    let mut rows = Vec::new();
    for (no, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: InputRow = serde_json::from_str(&line)
            .map_err(|e| anyhow::anyhow!("manifest line {}: {e}", no + 1))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_curated_manifest(path: &Path, rows: &[CuratedRow]) -> anyhow::Result<()> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row)?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())?;
    Ok(())
}

pub fn read_curated_manifest(path: &Path) -> anyhow::Result<Vec<CuratedRow>> {
    let file = fs::File::open(path)
        .map_err(|e| anyhow::anyhow!("cannot open curated manifest {}: {e}", path.display()))?;
    let mut rows = Vec::new();
    for (no, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: CuratedRow = serde_json::from_str(&line)
            .map_err(|e| anyhow::anyhow!("curated manifest line {}: {e}", no + 1))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Successful records only.
pub fn curated_records(rows: &[CuratedRow]) -> Vec<ScanRecord> {
    rows.iter()
        .filter_map(|r| match r {
            CuratedRow::Ok { record } => Some(record.clone()),
            CuratedRow::Failed { .. } => None,
        })
        .collect()
}

pub fn write_batch_manifest(path: &Path, manifest: &BatchManifest) -> anyhow::Result<()> {
    let mut out = String::new();
    out.push_str(&serde_json::to_string(&manifest.header)?);
    out.push('\n');
    for row in &manifest.rows {
        out.push_str(&serde_json::to_string(row)?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())?;
    Ok(())
}

pub fn read_batch_manifest(path: &Path) -> anyhow::Result<BatchManifest> {
    let file = fs::File::open(path)
        .map_err(|e| anyhow::anyhow!("cannot open batch manifest {}: {e}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| anyhow::anyhow!("batch manifest {} is empty", path.display()))??;
    let header: RunHeader = serde_json::from_str(&header_line)
        .map_err(|e| anyhow::anyhow!("batch manifest header: {e}"))?;
    let mut rows = Vec::new();
    for (no, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: SampleRow = serde_json::from_str(&line)
            .map_err(|e| anyhow::anyhow!("batch manifest line {}: {e}", no + 2))?;
        rows.push(row);
    }
    Ok(BatchManifest { header, rows })
}
