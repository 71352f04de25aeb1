//! Artifact files. CSV floats carry 17 significant digits so a file read
//! back reproduces every value bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{Grid, Snapshot};
use crate::monitors::MonitorReport;
use crate::translator::TranslatorProfile;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl ToString) -> IoError {
    IoError::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Round-trip decimal form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn ensure_dir(dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(fs_err(dir))
}

/// Writes a header and numeric rows.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), IoError>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| format_err(path, e))?;
    w.write_record(header).map_err(|e| format_err(path, e))?;
    for row in rows {
        w.write_record(row.as_ref().iter().map(|v| fmt_f64(*v)))
            .map_err(|e| format_err(path, e))?;
    }
    w.flush().map_err(fs_err(path))
}

/// Reads a numeric CSV, returning the header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), IoError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| format_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| format_err(path, e))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| format_err(path, format!("{f:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| format_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(fs_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(fs_err(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e))
}

/// Heights in grid order from a CSV whose first column is `u`.
pub fn read_heights(path: &Path) -> Result<Vec<f64>, IoError> {
    let (header, rows) = read_csv(path)?;
    if header.first().map(String::as_str) != Some("u") {
        return Err(format_err(path, "first column must be `u`"));
    }
    Ok(rows.into_iter().filter_map(|r| r.first().copied()).collect())
}

/// One entry of `snapshots.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub t: f64,
    pub grid: Grid,
}

pub const SNAPSHOT_INDEX: &str = "snapshots.json";

/// Writes `snapshot_NNNN.csv` (columns `x, y, u`) plus the index.
pub fn write_snapshots(dir: &Path, snapshots: &[Snapshot]) -> Result<(), IoError> {
    ensure_dir(dir)?;
    let mut index = Vec::with_capacity(snapshots.len());
    for (i, s) in snapshots.iter().enumerate() {
        let file = format!("snapshot_{i:04}.csv");
        let rows = (0..s.grid.len()).map(|idx| {
            let [x, y] = s.grid.coord(idx);
            [x, y, s.u[idx]]
        });
        write_csv(&dir.join(&file), &["x", "y", "u"], rows)?;
        index.push(SnapshotEntry {
            file,
            t: s.t,
            grid: s.grid.clone(),
        });
    }
    write_json(&dir.join(SNAPSHOT_INDEX), &index)
}

/// Reads back what [`write_snapshots`] wrote.
pub fn read_snapshots(dir: &Path) -> Result<Vec<Snapshot>, IoError> {
    let index_path = dir.join(SNAPSHOT_INDEX);
    let index: Vec<SnapshotEntry> = read_json(&index_path)?;
    let mut out = Vec::with_capacity(index.len());
    for e in index {
        let path = dir.join(&e.file);
        let grid = Grid::new(e.grid.dims().to_vec(), e.grid.h(), e.grid.origin().to_vec(), e.grid.is_periodic())
            .map_err(|err| format_err(&index_path, err))?;
        let (header, rows) = read_csv(&path)?;
        let col = header
            .iter()
            .position(|h| h == "u")
            .ok_or_else(|| format_err(&path, "missing column `u`"))?;
        let u: Vec<f64> = rows.iter().filter_map(|r| r.get(col).copied()).collect();
        if u.len() != grid.len() {
            return Err(format_err(&path, format!("{} values for {} nodes", u.len(), grid.len())));
        }
        out.push(Snapshot { t: e.t, grid, u });
    }
    Ok(out)
}

/// Monitor series in long form: `series, t, value`.
pub fn write_monitor_csv(path: &Path, report: &MonitorReport) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format_err(path, e))?;
    w.write_record(["series", "t", "value"]).map_err(|e| format_err(path, e))?;
    for (name, series) in &report.series {
        for (t, v) in series {
            w.write_record([name.as_str(), &fmt_f64(*t), &fmt_f64(*v)])
                .map_err(|e| format_err(path, e))?;
        }
    }
    w.flush().map_err(fs_err(path))
}

/// Columns `r, u, up, upp`.
pub fn write_profile_csv(path: &Path, profile: &TranslatorProfile) -> Result<(), IoError> {
    let rows = (0..profile.len()).map(|i| [profile.r[i], profile.u[i], profile.up[i], profile.upp[i]]);
    write_csv(path, &["r", "u", "up", "upp"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let rows = vec![vec![0.1, 1.0 / 3.0, f64::MIN_POSITIVE], vec![-1e300, 2.0f64.sqrt(), 0.0]];
        write_csv(&p, &["a", "b", "c"], &rows).unwrap();
        let (h, back) = read_csv(&p).unwrap();
        assert_eq!(h, vec!["a", "b", "c"]);
        assert_eq!(back, rows);
    }

    #[test]
    fn snapshots_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::centered_box(2, 0.5, 0.25).unwrap();
        let snaps: Vec<Snapshot> = (0..3)
            .map(|i| Snapshot {
                t: i as f64 * 0.1,
                grid: grid.clone(),
                u: (0..grid.len()).map(|j| (j as f64 * 0.37 + i as f64).sin()).collect(),
            })
            .collect();
        write_snapshots(dir.path(), &snaps).unwrap();
        assert_eq!(read_snapshots(dir.path()).unwrap(), snaps);
    }

    #[test]
    fn heights_need_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        write_csv(&p, &["v"], [[1.0]]).unwrap();
        assert!(read_heights(&p).is_err());
        write_csv(&p, &["u"], [[1.0], [2.0]]).unwrap();
        assert_eq!(read_heights(&p).unwrap(), vec![1.0, 2.0]);
    }
}
