//! Group CSV input and run output files.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::{CompareOutput, GroupDataset};
use crate::error::{Error, Result};
use crate::types::SampleMatrix;

fn is_missing(cell: &str) -> bool {
    matches!(cell.to_ascii_lowercase().as_str(), "" | "na" | "nan" | "null" | "n/a")
}

/// Reads a group CSV and drops every column with a missing cell.
pub fn load_group(path: impl AsRef<Path>, name: &str) -> Result<GroupDataset> {
    let file = File::open(path.as_ref())?;
    load_group_from_reader(file, name)
}

pub fn load_group_from_reader<R: Read>(reader: R, name: &str) -> Result<GroupDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let labels: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let ncol = labels.len();
    let mut cells: Vec<Vec<Option<f64>>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != ncol {
            return Err(Error::Parse {
                row: r + 1,
                column: String::new(),
                message: format!("expected {ncol} fields, found {}", rec.len()),
            });
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let cell = cell.trim();
                if is_missing(cell) {
                    return Ok(None);
                }
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(Some(v)),
                    _ => Err(Error::Parse {
                        row: r + 1,
                        column: labels[c].clone(),
                        message: format!("not a number: {cell:?}"),
                    }),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        cells.push(row);
    }
    let keep: Vec<usize> = (0..ncol).filter(|&c| cells.iter().all(|row| row[c].is_some())).collect();
    let dropped: Vec<String> = (0..ncol).filter(|c| !keep.contains(c)).map(|c| labels[c].clone()).collect();
    if !dropped.is_empty() {
        log::warn!("group {name}: dropped columns with missing values: {}", dropped.join(", "));
    }
    if keep.is_empty() || cells.is_empty() {
        return Err(Error::EmptyAfterCleaning(name.to_string()));
    }
    let values = DMatrix::from_fn(cells.len(), keep.len(), |i, j| cells[i][keep[j]].unwrap_or_default());
    let kept_labels = keep.iter().map(|&c| labels[c].clone()).collect();
    let mut group = GroupDataset::new(name, SampleMatrix::new(values, kept_labels)?)?;
    group.dropped = dropped;
    Ok(group)
}

/// `ln(x_t / x_{t−1})` for each column; one row shorter than the input.
pub fn log_returns(data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if data.nrows() < 2 {
        return Err(Error::DegenerateData("log returns need at least two rows".into()));
    }
    if let Some(v) = data.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::DomainError(format!("log returns need positive levels, found {v}")));
    }
    Ok(DMatrix::from_fn(data.nrows() - 1, data.ncols(), |i, j| (data[(i + 1, j)] / data[(i, j)]).ln()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Every per-iteration record and the summary as one JSON document.
pub fn report_json(out: &CompareOutput) -> Result<String> {
    #[derive(serde::Serialize)]
    struct Report<'a> {
        matrices: Vec<super::compare::FileRecord<'a>>,
        summary: super::compare::SummaryRecord<'a>,
    }
    let report = Report {
        matrices: out.iterations.iter().map(|it| it.file_record(&out.config)).collect(),
        summary: out.summary_record(),
    };
    Ok(serde_json::to_string_pretty(&report)?)
}

/// Writes `distance_<i>.json`, `distance_<i>.csv` per iteration and
/// `summary.json`. Returns the written paths in order.
pub fn write_outputs(out: &CompareOutput, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for it in &out.iterations {
        let json = dir.join(format!("distance_{}.json", it.iteration));
        write_json(&json, &it.file_record(&out.config))?;
        let csv = dir.join(format!("distance_{}.csv", it.iteration));
        let mut w = BufWriter::new(File::create(&csv)?);
        it.matrix.write_csv(&mut w)?;
        w.flush()?;
        written.push(json);
        written.push(csv);
    }
    let summary = dir.join("summary.json");
    write_json(&summary, &out.summary_record())?;
    written.push(summary);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_text(rows: usize, cols: usize, blank: Option<usize>) -> String {
        let mut s = (0..cols).map(|c| format!("T{c}")).collect::<Vec<_>>().join(",");
        s.push('\n');
        for r in 0..rows {
            let row: Vec<String> = (0..cols)
                .map(|c| if Some(c) == blank { String::new() } else { format!("{}", 10.0 + r as f64 * 0.1 + c as f64) })
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    #[test]
    fn clean_file() {
        let g = load_group_from_reader(csv_text(100, 5, None).as_bytes(), "AUS").unwrap();
        assert_eq!((g.n_obs(), g.n_vars()), (100, 5));
        assert!(g.dropped.is_empty());
        assert_eq!(g.name, "AUS");
    }

    #[test]
    fn blank_column_dropped() {
        let g = load_group_from_reader(csv_text(100, 5, Some(2)).as_bytes(), "SGP").unwrap();
        assert_eq!((g.n_obs(), g.n_vars()), (100, 4));
        assert_eq!(g.dropped, vec!["T2".to_string()]);
        assert_eq!(g.data.labels(), &["T0", "T1", "T3", "T4"]);
    }

    #[test]
    fn single_missing_cell_drops_column() {
        let text = "a,b,c\n1,2,3\n4,NA,6\n7,8,9\n";
        let g = load_group_from_reader(text.as_bytes(), "x").unwrap();
        assert_eq!(g.data.labels(), &["a", "c"]);
        assert_eq!(g.n_obs(), 3);
    }

    #[test]
    fn parse_error_names_cell() {
        let text = "a,b\n1,2\n3,oops\n";
        match load_group_from_reader(text.as_bytes(), "x") {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "b")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_missing_is_empty() {
        let text = "a,b\n1,\n,2\n";
        assert!(matches!(load_group_from_reader(text.as_bytes(), "x"), Err(Error::EmptyAfterCleaning(_))));
    }

    #[test]
    fn log_returns_shape() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 2.0, 4.0, 1.0]);
        let r = log_returns(&x).unwrap();
        assert_eq!(r.shape(), (2, 2));
        assert!((r[(0, 0)] - 2f64.ln()).abs() < 1e-15 && r[(0, 1)] == 0.0);
        assert!(log_returns(&(-x)).is_err());
    }
}
