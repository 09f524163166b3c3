//! Labelled datasets stored as headerless CSV: `f_1,...,f_n,label` per line.

use std::io::Read;
use std::path::Path;

use avagrad_core::problem::LabeledSet;

use crate::error::{LabError, LabResult};

pub fn load_csv_dataset(path: &Path, n_in: usize, n_classes: usize) -> LabResult<LabeledSet> {
    let file = std::fs::File::open(path).map_err(|e| LabError::io(path, e))?;
    parse_csv_dataset(file, n_in, n_classes, &path.display().to_string())
}

/// Parses rows from `reader`; `source_name` prefixes error messages.
pub fn parse_csv_dataset<R: Read>(
    reader: R,
    n_in: usize,
    n_classes: usize,
    source_name: &str,
) -> LabResult<LabeledSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let err = |line: u64, msg: String| LabError::Dataset {
        source_name: source_name.to_string(),
        line,
        msg,
    };
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(err(line, e.to_string())),
        }
        let line = record.position().map_or(line, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != n_in + 1 {
            return Err(err(
                line,
                format!("expected {} fields, found {}", n_in + 1, record.len()),
            ));
        }
        for (j, field) in record.iter().take(n_in).enumerate() {
            let x: f64 = field
                .parse()
                .map_err(|_| err(line, format!("feature {} is not a number: {field:?}", j + 1)))?;
            if !x.is_finite() {
                return Err(err(line, format!("feature {} is not finite", j + 1)));
            }
            features.push(x);
        }
        let raw = &record[n_in];
        let label: usize = raw
            .parse()
            .map_err(|_| err(line, format!("label is not a non-negative integer: {raw:?}")))?;
        if label >= n_classes {
            return Err(err(line, format!("label {label} outside [0, {n_classes})")));
        }
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(err(0, "dataset has no rows".into()));
    }
    Ok(LabeledSet::new(n_in, n_classes, features, labels)?)
}
