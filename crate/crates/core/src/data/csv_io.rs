//! CSV layout: a mandatory header with `score_<name>`, `label_<name>` and
//! `feat_<name>` columns; comma separated, `.` decimals, `\n` line ends.

use std::path::Path;

use super::{Dataset, FeatureSchema, Provenance, Sample, Schema};
use crate::error::{Error, Result};

const SCORE: &str = "score_";
const LABEL: &str = "label_";
const FEAT: &str = "feat_";

fn csv_err(row: usize, msg: impl Into<String>) -> Error {
    Error::Csv {
        row,
        msg: msg.into(),
    }
}

/// Reads a dataset. With `schema = None` the objectives and features are
/// taken from the header and feature cardinalities from the largest id seen.
pub fn load_csv(path: &Path, schema: Option<&Schema>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_err(0, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| csv_err(0, e.to_string()))?
        .clone();

    let with_prefix = |prefix: &str| -> Vec<String> {
        header
            .iter()
            .filter_map(|h| h.strip_prefix(prefix).map(str::to_string))
            .collect()
    };
    let (objectives, feature_names) = match schema {
        Some(s) => (
            s.objectives.clone(),
            s.features.iter().map(|f| f.name.clone()).collect(),
        ),
        None => {
            let objectives = with_prefix(SCORE);
            if objectives.is_empty() {
                return Err(csv_err(0, "header has no score_ columns"));
            }
            (objectives, with_prefix(FEAT))
        }
    };
    let column = |name: String| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| csv_err(0, format!("missing column {name}")))
    };
    let score_cols: Vec<usize> = objectives
        .iter()
        .map(|o| column(format!("{SCORE}{o}")))
        .collect::<Result<_>>()?;
    let label_cols: Vec<usize> = objectives
        .iter()
        .map(|o| column(format!("{LABEL}{o}")))
        .collect::<Result<_>>()?;
    let feat_cols: Vec<usize> = feature_names
        .iter()
        .map(|f| column(format!("{FEAT}{f}")))
        .collect::<Result<_>>()?;

    let mut samples = Vec::new();
    let mut max_id = vec![0u32; feature_names.len()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_err(row, e.to_string()))?;
        let cell = |c: usize| record.get(c).ok_or_else(|| csv_err(row, "short row"));
        let mut scores = Vec::with_capacity(score_cols.len());
        for &c in &score_cols {
            let raw = cell(c)?;
            let v: f64 = raw
                .parse()
                .map_err(|_| csv_err(row, format!("unparsable score {raw:?}")))?;
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(csv_err(row, format!("score {raw} outside [0, 1]")));
            }
            scores.push(v);
        }
        let mut labels = Vec::with_capacity(label_cols.len());
        for &c in &label_cols {
            labels.push(match cell(c)? {
                "0" => 0,
                "1" => 1,
                other => return Err(csv_err(row, format!("label {other:?} is not 0 or 1"))),
            });
        }
        let mut features = Vec::with_capacity(feat_cols.len());
        for (f, &c) in feat_cols.iter().enumerate() {
            let raw = cell(c)?;
            let id: u32 = raw
                .parse()
                .map_err(|_| csv_err(row, format!("unparsable feature id {raw:?}")))?;
            max_id[f] = max_id[f].max(id);
            features.push(id);
        }
        samples.push(Sample {
            scores,
            labels,
            features,
        });
    }

    let schema = match schema {
        Some(s) => s.clone(),
        None => Schema {
            objectives,
            features: feature_names
                .into_iter()
                .zip(&max_id)
                .map(|(name, &m)| FeatureSchema {
                    name,
                    cardinality: m + 1,
                })
                .collect(),
        },
    };
    Dataset::new(samples, schema, Provenance::File(path.to_path_buf()))
}

pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(0, e.to_string()))?;
    let schema = &dataset.schema;
    let header: Vec<String> = schema
        .objectives
        .iter()
        .map(|o| format!("{SCORE}{o}"))
        .chain(schema.objectives.iter().map(|o| format!("{LABEL}{o}")))
        .chain(schema.features.iter().map(|f| format!("{FEAT}{}", f.name)))
        .collect();
    writer
        .write_record(&header)
        .map_err(|e| csv_err(0, e.to_string()))?;
    for (i, s) in dataset.samples.iter().enumerate() {
        let record: Vec<String> = s
            .scores
            .iter()
            .map(f64::to_string)
            .chain(s.labels.iter().map(u8::to_string))
            .chain(s.features.iter().map(u32::to_string))
            .collect();
        writer
            .write_record(&record)
            .map_err(|e| csv_err(i + 1, e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn hand_written_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(
            &path,
            "score_buy,score_like,label_buy,label_like,feat_age\n\
             0.5,0.25,1,0,3\n\
             0,1,0,1,0\n\
             0.125,0.75,0,0,7\n",
        )
        .unwrap();
        let d = load_csv(&path, None).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.schema.objectives, vec!["buy", "like"]);
        assert_eq!(d.schema.features[0].cardinality, 8);
        assert_eq!(d.samples[0].scores, vec![0.5, 0.25]);
        assert_eq!(d.samples[1].labels, vec![0, 1]);
        assert_eq!(d.samples[2].features, vec![7]);
    }

    #[test]
    fn bad_label_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, "score_a,label_a\n0.1,0\n0.2,2\n").unwrap();
        match load_csv(&path, None) {
            Err(Error::Csv { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected csv error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_bad_score() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, "score_a\n0.1\n").unwrap();
        assert!(load_csv(&path, None).is_err());
        fs::write(&path, "score_a,label_a\n1.5,0\n").unwrap();
        assert!(matches!(
            load_csv(&path, None),
            Err(Error::Csv { row: 1, .. })
        ));
        fs::write(&path, "score_a,label_a\nabc,0\n").unwrap();
        assert!(matches!(
            load_csv(&path, None),
            Err(Error::Csv { row: 1, .. })
        ));
    }
}
