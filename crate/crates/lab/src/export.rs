//! CSV artifacts. Floats use 17 significant digits so values round-trip.

use std::path::Path;

use avagrad_core::runner::TrialRecord;
use avagrad_core::sweep::HeatmapCell;
use avagrad_core::Method;

use crate::error::{LabError, LabResult};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> LabResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| LabError::csv(path, e))?;
    w.write_record(header).map_err(|e| LabError::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| LabError::csv(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

pub const TRAJECTORY_HEADER: [&str; 7] = [
    "t",
    "w_mean",
    "grad_norm_sq_mean",
    "alpha_t",
    "eta_min",
    "eta_l2",
    "alpha_eff",
];

pub fn export_trajectory(record: &TrialRecord, path: &Path) -> LabResult<()> {
    write_rows(
        path,
        &TRAJECTORY_HEADER,
        record.rows.iter().map(|r| {
            vec![
                r.t.to_string(),
                fmt_f64(r.w_mean),
                fmt_f64(r.grad_norm_sq_mean),
                fmt_f64(r.alpha),
                fmt_f64(r.eta_min),
                fmt_f64(r.eta_l2),
                fmt_f64(r.alpha_eff),
            ]
        }),
    )
}

pub const HEATMAP_HEADER: [&str; 6] = ["method", "alpha", "epsilon", "seed", "final_metric", "status"];

/// Non-ok cells get an empty metric field.
pub fn export_heatmap(cells: &[HeatmapCell], path: &Path) -> LabResult<()> {
    write_rows(
        path,
        &HEATMAP_HEADER,
        cells.iter().map(|c| {
            vec![
                c.method.name().to_string(),
                fmt_f64(c.alpha),
                fmt_f64(c.epsilon),
                c.seed.to_string(),
                if c.status.is_ok() { fmt_f64(c.final_metric) } else { String::new() },
                c.status.as_str().to_string(),
            ]
        }),
    )
}

/// `None` marks a method whose index is undefined for the grid; written as an empty field.
pub fn export_separability(rows: &[(Method, Option<f64>)], path: &Path) -> LabResult<()> {
    write_rows(
        path,
        &["method", "separability_index"],
        rows.iter()
            .map(|(m, s)| vec![m.name().to_string(), s.map(fmt_f64).unwrap_or_default()]),
    )
}

/// One `t` column followed by one column per series.
pub fn export_columns(path: &Path, names: &[&str], ts: &[u64], columns: &[Vec<f64>]) -> LabResult<()> {
    let mut header = vec!["t"];
    header.extend_from_slice(names);
    write_rows(
        path,
        &header,
        ts.iter().enumerate().map(|(i, t)| {
            std::iter::once(t.to_string())
                .chain(columns.iter().map(|c| fmt_f64(c[i])))
                .collect()
        }),
    )
}
