//! CSV ingestion: a header row, named label columns, everything else covariates.

use std::io::Read;
use std::path::Path;

use ndarray::Array2;

use super::{Domain, LabeledSample};
use crate::error::{Error, Result};

pub fn read_labeled_csv(path: impl AsRef<Path>, label_cols: &[String], domain: Domain) -> Result<LabeledSample> {
    let file = std::fs::File::open(path.as_ref())?;
    read_labeled_csv_from(file, label_cols, domain)
}

pub fn read_labeled_csv_from<R: Read>(reader: R, label_cols: &[String], domain: Domain) -> Result<LabeledSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();

    let mut label_idx = Vec::with_capacity(label_cols.len());
    for name in label_cols {
        let idx = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("label column `{name}` not found in header")))?;
        label_idx.push(idx);
    }
    let covariate_idx: Vec<usize> = (0..header.len()).filter(|i| !label_idx.contains(i)).collect();
    if covariate_idx.is_empty() {
        return Err(Error::InvalidInput(
            "no covariate columns left after removing labels".into(),
        ));
    }

    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut rows = 0usize;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            if raw.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "missing value in column `{}` at data row {}",
                    &header[i],
                    line + 1
                )));
            }
            raw.parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!(
                    "unparseable value `{raw}` in column `{}` at data row {}",
                    &header[i],
                    line + 1
                ))
            })
        };
        for &i in &covariate_idx {
            x.push(parse(i)?);
        }
        for &i in &label_idx {
            y.push(parse(i)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Empty("csv has no data rows"));
    }

    let covariates = Array2::from_shape_vec((rows, covariate_idx.len()), x).expect("row-major covariates");
    let labels = if label_idx.is_empty() {
        None
    } else {
        Some(Array2::from_shape_vec((rows, label_idx.len()), y).expect("row-major labels"))
    };
    LabeledSample::new(covariates, labels, domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn splits_labels_from_covariates() {
        let data = "a,y,b\n1,10,2\n3,30,4\n";
        let s = read_labeled_csv_from(data.as_bytes(), &["y".to_string()], Domain::Source).unwrap();
        assert_eq!(s.covariates(), array![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(s.labels().unwrap(), array![[10.0], [30.0]]);
    }

    #[test]
    fn unlabeled_when_no_label_columns() {
        let s = read_labeled_csv_from("a\n1\n".as_bytes(), &[], Domain::Target).unwrap();
        assert!(s.labels().is_none());
    }

    #[test]
    fn missing_value_is_an_error() {
        let err = read_labeled_csv_from("a,b\n1,\n".as_bytes(), &[], Domain::Source).unwrap_err();
        assert!(err.to_string().contains("missing value"), "{err}");
    }

    #[test]
    fn unknown_label_column() {
        assert!(read_labeled_csv_from("a,b\n1,2\n".as_bytes(), &["z".into()], Domain::Source).is_err());
    }
}
