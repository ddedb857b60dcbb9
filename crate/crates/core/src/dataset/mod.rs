//! Labeled tabular data with a protected attribute.
//!
//! Group ids are small integers, `0` being the majority group. Every group
//! must have at least two members: per-group correlation and ranking terms
//! are undefined otherwise.

mod csv_io;
mod sampling;
mod synth;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, load_csv_with, save_csv, CsvOptions};
pub use sampling::{stratified_downsample, DownsampleSpec};
pub use synth::{make_synth1, make_synth2, make_synth2_with, Synth2Options};

use crate::error::{Error, Result};
use crate::numgrad::DenseMatrix;

/// A protected attribute beyond the primary `pv` column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtraAttribute {
    pub name: String,
    pub ids: Vec<u32>,
    pub tokens: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub features: DenseMatrix,
    pub pv: Vec<u32>,
    /// `pv_tokens[id]` is the source token for group `id`.
    pub pv_tokens: Vec<String>,
    pub labels: Option<Vec<u8>>,
    pub extra_pvs: Vec<ExtraAttribute>,
}

impl LabeledDataset {
    /// Builds and validates a dataset with default feature names and
    /// group tokens `"0"`, `"1"`, ...
    pub fn new(
        name: impl Into<String>,
        features: DenseMatrix,
        pv: Vec<u32>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        let groups = pv.iter().copied().max().map_or(0, |m| m as usize + 1);
        let ds = Self {
            name: name.into(),
            feature_names: (0..features.cols()).map(|j| format!("f_{j}")).collect(),
            features,
            pv,
            pv_tokens: (0..groups).map(|g| g.to_string()).collect(),
            labels,
            extra_pvs: Vec::new(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.pv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pv.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.features.rows();
        if self.pv.len() != n {
            return Err(Error::Validation(format!(
                "pv has {} entries for {n} rows",
                self.pv.len()
            )));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != n {
                return Err(Error::Validation(format!(
                    "labels have {} entries for {n} rows",
                    labels.len()
                )));
            }
            if labels.iter().any(|&l| l > 1) {
                return Err(Error::Validation("labels must be 0 or 1".into()));
            }
        }
        if !self.features.is_finite() {
            return Err(Error::Validation("features contain NaN or infinity".into()));
        }
        check_group_sizes("pv", &self.pv)?;
        for extra in &self.extra_pvs {
            if extra.ids.len() != n {
                return Err(Error::Validation(format!(
                    "{} has {} entries for {n} rows",
                    extra.name,
                    extra.ids.len()
                )));
            }
            check_group_sizes(&extra.name, &extra.ids)?;
        }
        Ok(())
    }

    /// Row subset, preserving order of `idx`.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let ds = Self {
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
            features: self.features.select_rows(idx),
            pv: idx.iter().map(|&i| self.pv[i]).collect(),
            pv_tokens: self.pv_tokens.clone(),
            labels: self
                .labels
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i]).collect()),
            extra_pvs: self
                .extra_pvs
                .iter()
                .map(|e| ExtraAttribute {
                    name: e.name.clone(),
                    ids: idx.iter().map(|&i| e.ids[i]).collect(),
                    tokens: e.tokens.clone(),
                })
                .collect(),
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Copy with the protected attribute replaced. Features and labels are
    /// untouched, which is what treatment-parity checks perturb.
    pub fn with_pv(&self, pv: Vec<u32>) -> Result<Self> {
        let ds = Self {
            pv,
            ..self.clone()
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn group_view(&self) -> GroupView {
        group_view(&self.pv)
    }

    /// Fraction of outliers overall, if labeled.
    pub fn outlier_rate(&self) -> Option<f64> {
        self.labels
            .as_ref()
            .map(|l| l.iter().map(|&v| v as f64).sum::<f64>() / l.len() as f64)
    }
}

fn check_group_sizes(name: &str, ids: &[u32]) -> Result<()> {
    for (g, rows) in group_view(ids).iter() {
        if rows.len() < 2 {
            return Err(Error::Validation(format!(
                "group {g} of {name} has {} member(s); at least 2 are required",
                rows.len()
            )));
        }
    }
    Ok(())
}

/// Group id → ascending row indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupView {
    groups: BTreeMap<u32, Vec<usize>>,
}

impl GroupView {
    pub fn get(&self, group: u32) -> Option<&[usize]> {
        self.groups.get(&group).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[usize])> {
        self.groups.iter().map(|(&g, r)| (g, r.as_slice()))
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.groups.keys().copied()
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn total_rows(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }
}

pub fn group_view(pv: &[u32]) -> GroupView {
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &g) in pv.iter().enumerate() {
        groups.entry(g).or_default().push(i);
    }
    GroupView { groups }
}

/// Per-column affine transform fitted by [`standardize`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DenseMatrix) -> Self {
        let n = x.rows() as f64;
        let mut means = vec![0.0; x.cols()];
        let mut stds = vec![0.0; x.cols()];
        for j in 0..x.cols() {
            let col = x.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            means[j] = mean;
            stds[j] = var.sqrt();
        }
        Self { means, stds }
    }

    /// Applies the transform; zero-variance columns map to 0.
    pub fn transform(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.means.len() {
            return Err(Error::dim(format!(
                "standardizer fitted on {} columns, got {}",
                self.means.len(),
                x.cols()
            )));
        }
        let mut out = x.clone();
        let cols = x.cols();
        for row in out.as_mut_slice().chunks_exact_mut(cols.max(1)) {
            for ((v, &m), &s) in row.iter_mut().zip(&self.means).zip(&self.stds) {
                *v = if s > 0.0 { (*v - m) / s } else { 0.0 };
            }
        }
        Ok(out)
    }
}

/// Zero-mean, unit-variance columns (population standard deviation).
pub fn standardize(ds: &LabeledDataset) -> Result<(LabeledDataset, Standardizer)> {
    if ds.len() < 2 {
        return Err(Error::Validation("standardize needs at least 2 rows".into()));
    }
    let st = Standardizer::fit(&ds.features);
    let features = st.transform(&ds.features)?;
    Ok((
        LabeledDataset {
            features,
            ..ds.clone()
        },
        st,
    ))
}
