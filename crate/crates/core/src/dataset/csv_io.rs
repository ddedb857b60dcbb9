use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::dataset::{ExtraAttribute, LabeledDataset};
use crate::error::{Error, Result};
use crate::numgrad::DenseMatrix;

/// Column roles for [`load_csv_with`].
#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub pv_column: String,
    pub label_column: Option<String>,
    pub extra_pv_columns: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            pv_column: "pv".into(),
            label_column: Some("label".into()),
            extra_pv_columns: Vec::new(),
        }
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    pv_column: &str,
    label_column: Option<&str>,
) -> Result<LabeledDataset> {
    load_csv_with(
        path,
        &CsvOptions {
            pv_column: pv_column.into(),
            label_column: label_column.map(Into::into),
            extra_pv_columns: Vec::new(),
        },
    )
}

/// Reads a comma-separated file with a header row. Every column that is not
/// a protected attribute or the label is a numeric feature, in header order.
pub fn load_csv_with(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column {name:?} not found in {}", path.display())))
    };
    let pv_idx = find(&opts.pv_column)?;
    let label_idx = opts.label_column.as_deref().map(find).transpose()?;
    let extra_idx = opts
        .extra_pv_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&j| j != pv_idx && Some(j) != label_idx && !extra_idx.contains(&j))
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::Schema("no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut pv_raw = Vec::new();
    let mut extra_raw: Vec<Vec<String>> = vec![Vec::new(); extra_idx.len()];
    let mut labels = label_idx.map(|_| Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |j: usize| record.get(j).unwrap_or("");
        for &j in &feature_idx {
            let v: f64 = cell(j).parse().map_err(|_| Error::Parse {
                row: row + 1,
                column: header[j].clone(),
                message: format!("{:?} is not a number", cell(j)),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: row + 1,
                    column: header[j].clone(),
                    message: "non-finite value".into(),
                });
            }
            values.push(v);
        }
        pv_raw.push(cell(pv_idx).to_string());
        for (slot, &j) in extra_raw.iter_mut().zip(&extra_idx) {
            slot.push(cell(j).to_string());
        }
        if let (Some(labels), Some(j)) = (labels.as_mut(), label_idx) {
            labels.push(parse_label(cell(j), row + 1, &header[j])?);
        }
    }
    let n = pv_raw.len();
    let (pv, pv_tokens) = encode_groups(&pv_raw);
    let extra_pvs = extra_raw
        .iter()
        .zip(&opts.extra_pv_columns)
        .map(|(raw, name)| {
            let (ids, tokens) = encode_groups(raw);
            ExtraAttribute {
                name: name.clone(),
                ids,
                tokens,
            }
        })
        .collect();
    let ds = LabeledDataset {
        name: path
            .file_stem()
            .map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned()),
        feature_names: feature_idx.iter().map(|&j| header[j].clone()).collect(),
        features: DenseMatrix::from_vec(n, feature_idx.len(), values)?,
        pv,
        pv_tokens,
        labels,
        extra_pvs,
    };
    ds.validate()?;
    Ok(ds)
}

fn parse_label(cell: &str, row: usize, column: &str) -> Result<u8> {
    match cell.parse::<f64>() {
        Ok(v) if v == 0.0 => Ok(0),
        Ok(v) if v == 1.0 => Ok(1),
        _ => Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("label {cell:?} is not 0 or 1"),
        }),
    }
}

/// Most frequent token gets id 0 (ties: earliest appearance); the rest are
/// numbered by first appearance.
fn encode_groups(raw: &[String]) -> (Vec<u32>, Vec<String>) {
    let mut order: Vec<&str> = Vec::new();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in raw {
        let c = counts.entry(t.as_str()).or_insert(0);
        if *c == 0 {
            order.push(t);
        }
        *c += 1;
    }
    let majority = order
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| counts[*a].cmp(&counts[*b]).then(ib.cmp(ia)))
        .map(|(i, _)| i);
    let mut tokens: Vec<String> = Vec::with_capacity(order.len());
    if let Some(m) = majority {
        tokens.push(order[m].to_string());
        tokens.extend(
            order
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != m)
                .map(|(_, t)| t.to_string()),
        );
    }
    let ids: HashMap<&str, u32> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i as u32))
        .collect();
    (raw.iter().map(|t| ids[t.as_str()]).collect(), tokens)
}

/// Writes features with 17 significant digits so a reload is bit-exact.
pub fn save_csv(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(File::create(path)?);
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.push("pv");
    header.extend(ds.extra_pvs.iter().map(|e| e.name.as_str()));
    if ds.labels.is_some() {
        header.push("label");
    }
    writeln!(out, "{}", header.join(","))?;
    for i in 0..ds.len() {
        let mut cells: Vec<String> = ds
            .features
            .row(i)
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect();
        cells.push(ds.pv_tokens[ds.pv[i] as usize].clone());
        for e in &ds.extra_pvs {
            cells.push(e.tokens[e.ids[i] as usize].clone());
        }
        if let Some(labels) = &ds.labels {
            cells.push(labels[i].to_string());
        }
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn majority_token_maps_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,sex\n1,f\n2,m\n3,m\n4,f\n5,m\n");
        let ds = load_csv(&p, "sex", None).unwrap();
        assert_eq!(ds.pv, vec![1, 0, 0, 1, 0]);
        assert_eq!(ds.pv_tokens, vec!["m", "f"]);
        assert_eq!(encode_groups(&["m".into(), "m".into(), "f".into()]).0, vec![0, 0, 1]);
    }

    #[test]
    fn missing_pv_column_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,y\n1,2\n");
        assert!(matches!(load_csv(&p, "pv", None), Err(Error::Schema(_))));
    }

    #[test]
    fn bad_cell_reports_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "f_0,pv\n1,a\nabc,a\n2,b\n3,b\n");
        match load_csv(&p, "pv", None) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "f_0");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn singleton_group_fails_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "f_0,pv\n1,a\n2,a\n3,b\n");
        assert!(matches!(load_csv(&p, "pv", None), Err(Error::Validation(_))));
    }

    #[test]
    fn save_then_load_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            vec![0.1, -1.0 / 3.0, 1e-300],
            vec![std::f64::consts::PI, 123456789.123456789, -0.0],
            vec![2.0f64.sqrt(), 5e300, 7.0],
            vec![1.0, 2.0, 3.0],
        ];
        let ds = LabeledDataset::new(
            "t",
            DenseMatrix::from_rows(&rows).unwrap(),
            vec![0, 1, 0, 1],
            Some(vec![1, 0, 0, 0]),
        )
        .unwrap();
        let p = dir.path().join("rt.csv");
        save_csv(&ds, &p).unwrap();
        let back = load_csv(&p, "pv", Some("label")).unwrap();
        for (a, b) in ds.features.as_slice().iter().zip(back.features.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.pv, ds.pv);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.feature_names, vec!["f_0", "f_1", "f_2"]);
    }
}
