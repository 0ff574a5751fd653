use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Numeric CSV with a header row. Cell positions in errors are 1-based data
/// rows and 1-based columns.
pub fn read_csv_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, e.to_string()))?;
    let width = rdr
        .headers()
        .map_err(|e| parse_err(path, e.to_string()))?
        .len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, e.to_string()))?;
        if rec.len() != width {
            return Err(parse_err(
                path,
                format!("row {}: {} fields, header has {width}", i + 1, rec.len()),
            ));
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(path, format!("row {}, column {}: `{cell}` is not a number", i + 1, j + 1))
            })?;
            if !v.is_finite() {
                return Err(parse_err(path, format!("row {}, column {}: non-finite", i + 1, j + 1)));
            }
            values.push(v);
        }
        rows += 1;
    }
    Matrix::from_shape_vec((rows, width), values).map_err(|e| parse_err(path, e.to_string()))
}

pub fn write_csv_matrix(path: impl AsRef<Path>, m: &Matrix, header: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| parse_err(path, e.to_string()))?;
    let names: Vec<String> = if header.is_empty() {
        (0..m.ncols()).map(|j| format!("f{j}")).collect()
    } else {
        header.to_vec()
    };
    let wrap = |e: csv::Error| parse_err(path, e.to_string());
    w.write_record(&names).map_err(wrap)?;
    for row in m.outer_iter() {
        w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Class ids plus the name of each class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    pub ids: Vec<usize>,
    pub classes: Vec<String>,
}

/// Single-column label CSV with a header row.
///
/// With `declared` class names every value must be one of them. Otherwise
/// all-integer columns are taken as ids `0..=max`, and anything else as
/// names whose sorted order defines the ids.
pub fn read_labels(path: impl AsRef<Path>, declared: Option<&[String]>) -> Result<Labels> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, e.to_string()))?;
    let mut raw = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, e.to_string()))?;
        if rec.len() != 1 {
            return Err(parse_err(path, format!("row {}: expected one field", i + 1)));
        }
        raw.push(rec[0].to_string());
    }

    if let Some(classes) = declared {
        let ids = raw
            .iter()
            .enumerate()
            .map(|(i, v)| {
                classes
                    .iter()
                    .position(|c| c == v)
                    .ok_or_else(|| parse_err(path, format!("row {}: unknown class label `{v}`", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(Labels {
            ids,
            classes: classes.to_vec(),
        });
    }

    let numeric: Option<Vec<usize>> = raw.iter().map(|v| v.parse().ok()).collect();
    if let Some(ids) = numeric {
        let k = ids.iter().copied().max().map_or(0, |m| m + 1);
        return Ok(Labels {
            ids,
            classes: (0..k).map(|c| c.to_string()).collect(),
        });
    }
    let classes: Vec<String> = raw.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let ids = raw
        .iter()
        .map(|v| classes.binary_search(v).expect("collected above"))
        .collect();
    Ok(Labels { ids, classes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = ndarray::array![[0.1, 2.0], [1e-300, -3.5]];
        write_csv_matrix(&p, &m, &[]).unwrap();
        assert_eq!(read_csv_matrix(&p).unwrap(), m);

        std::fs::write(&p, "a,b\n1,2\n3,oops\n").unwrap();
        let err = read_csv_matrix(&p).unwrap_err().to_string();
        assert!(err.contains("row 2, column 2"), "{err}");
    }

    #[test]
    fn labels_numeric_named_declared() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("y.csv");
        std::fs::write(&p, "label\n1\n0\n2\n").unwrap();
        let l = read_labels(&p, None).unwrap();
        assert_eq!(l.ids, vec![1, 0, 2]);
        assert_eq!(l.classes.len(), 3);

        std::fs::write(&p, "label\nwalk\nrun\nwalk\n").unwrap();
        let l = read_labels(&p, None).unwrap();
        assert_eq!(l.ids, vec![1, 0, 1]);

        let declared = vec!["walk".to_string(), "run".to_string()];
        assert_eq!(read_labels(&p, Some(&declared)).unwrap().ids, vec![0, 1, 0]);
        let only_walk = vec!["walk".to_string()];
        let err = read_labels(&p, Some(&only_walk)).unwrap_err().to_string();
        assert!(err.contains("unknown class label `run`"), "{err}");
    }
}
