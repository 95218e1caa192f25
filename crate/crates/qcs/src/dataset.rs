//! Dataset CSV: a header `split,label,f0,...,f{F-1}` followed by one row per
//! sample. `split` is `train` or `test`; `label` holds the class label or the
//! regression target; features must lie in [-1, 1]. Lines starting with `#`
//! are comments.

use std::path::Path;

use qcs_core::data::{Dataset, Sample, Split, TaskKind};

use crate::error::FormatError;

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(bytes)
}

/// Parses dataset CSV text. Rows are 1-based data rows (the header is row 0).
pub fn parse_dataset(bytes: &[u8], task: TaskKind) -> Result<Dataset, FormatError> {
    let mut rdr = reader(bytes);
    let header = rdr.headers()?.clone();
    if header.len() < 3 || &header[0] != "split" || &header[1] != "label" {
        return Err(FormatError::Header("expected 'split,label,f0,...'".into()));
    }
    for (j, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{j}") {
            return Err(FormatError::Header(format!("column {} is '{name}', expected 'f{j}'", j + 2)));
        }
    }
    let n_features = header.len() - 2;
    let mut samples = Vec::new();
    for (index, record) in rdr.records().enumerate() {
        let row = index + 1;
        let record = record?;
        if record.len() != header.len() {
            return Err(FormatError::cell(row, "*", format!("{} fields, expected {}", record.len(), header.len())));
        }
        let split: Split = record[0].parse().map_err(|e: qcs_core::Error| FormatError::cell(row, "split", e.to_string()))?;
        let target: f64 = record[1]
            .parse()
            .ok()
            .filter(|x: &f64| x.is_finite())
            .ok_or_else(|| FormatError::cell(row, "label", format!("'{}' is not a number", &record[1])))?;
        let features = record
            .iter()
            .skip(2)
            .enumerate()
            .map(|(j, cell)| {
                let column = format!("f{j}");
                let x: f64 = cell.parse().map_err(|_| FormatError::cell(row, &column, format!("'{cell}' is not a number")))?;
                if !(-1.0..=1.0).contains(&x) {
                    return Err(FormatError::cell(row, &column, format!("feature {x} outside [-1, 1]")));
                }
                Ok(x)
            })
            .collect::<Result<Vec<f64>, FormatError>>()?;
        samples.push(Sample { split, target, features });
    }
    if samples.is_empty() {
        return Err(FormatError::Empty);
    }
    Ok(Dataset { task, n_features, samples })
}

pub fn load_dataset(path: &Path, task: TaskKind) -> Result<Dataset, FormatError> {
    let bytes = std::fs::read(path).map_err(FormatError::io(path))?;
    parse_dataset(&bytes, task)
}

/// Renders `dataset` as CSV, after optional `#` comment lines.
pub fn format_dataset(dataset: &Dataset, comment: Option<&str>) -> Result<Vec<u8>, FormatError> {
    let mut out = Vec::new();
    if let Some(comment) = comment {
        out.extend_from_slice(format!("# {comment}\n").as_bytes());
    }
    let mut wtr = csv::Writer::from_writer(&mut out);
    let mut header = vec!["split".to_string(), "label".to_string()];
    header.extend((0..dataset.n_features).map(|j| format!("f{j}")));
    wtr.write_record(&header)?;
    for sample in &dataset.samples {
        let mut record = vec![sample.split.name().to_string(), format!("{:?}", sample.target)];
        record.extend(sample.features.iter().map(|x| format!("{x:?}")));
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(FormatError::io("<buffer>"))?;
    drop(wtr);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_load_then_need_preprocessing() {
        let text = "split,label,f0,f1\ntrain,0,1,0\ntest,1,0,1\n";
        let raw = parse_dataset(text.as_bytes(), TaskKind::Classification).unwrap();
        assert_eq!((raw.n_features, raw.count(Split::Train), raw.count(Split::Test)), (2, 1, 1));
        assert!(raw.validate().is_err());
        assert!(qcs_core::data::preprocess_classification(&raw).unwrap().validate().is_ok());
    }

    #[test]
    fn errors_name_row_and_column() {
        let err = parse_dataset(b"split,label,f0\ntrain,1,0.5\ntrain,1,1.5\n", TaskKind::Regression).unwrap_err();
        assert!(matches!(&err, FormatError::Cell { row: 2, column, .. } if column == "f0"), "{err}");
        let err = parse_dataset(b"split,label,f0\nvalid,1,0.5\n", TaskKind::Regression).unwrap_err();
        assert!(err.to_string().contains("unknown split tag 'valid'"), "{err}");
        let err = parse_dataset(b"split,label,f0\n", TaskKind::Regression).unwrap_err();
        assert_eq!(err.to_string(), "no data rows");
        assert!(matches!(parse_dataset(b"split,y,f0\ntrain,1,0\n", TaskKind::Regression), Err(FormatError::Header(_))));
    }

    #[test]
    fn save_then_load_is_identity() {
        let text = "split,label,f0,f1\ntrain,0.125,-1,0.3333333333333333\ntest,-0.7,1,0\n";
        let d = parse_dataset(text.as_bytes(), TaskKind::Regression).unwrap();
        let bytes = format_dataset(&d, Some("seed=1")).unwrap();
        assert_eq!(parse_dataset(&bytes, TaskKind::Regression).unwrap(), d);
    }
}
