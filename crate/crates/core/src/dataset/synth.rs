//! Two-dimensional synthetic benchmarks with a binary protected attribute.
//!
//! Counts are exact rather than Bernoulli-drawn: the caller fixes group
//! sizes and the number of outliers, and outliers are split across groups
//! so that both groups share the same outlier rate.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::numgrad::DenseMatrix;

struct Layout {
    n_major: usize,
    n_minor: usize,
    out_major: usize,
    out_minor: usize,
}

fn layout(n_major: usize, n_minor: usize, n_outlier: usize) -> Result<Layout> {
    if n_major < 2 || n_minor < 2 {
        return Err(Error::InvalidArgument(
            "each group needs at least 2 rows".into(),
        ));
    }
    let total = n_major + n_minor;
    if n_outlier > total {
        return Err(Error::InvalidArgument(format!(
            "{n_outlier} outliers requested for {total} rows"
        )));
    }
    let mut out_major = ((n_outlier * n_major) as f64 / total as f64).round() as usize;
    out_major = out_major.min(n_major);
    if n_outlier - out_major > n_minor {
        out_major = n_outlier - n_minor;
    }
    Ok(Layout {
        n_major,
        n_minor,
        out_major,
        out_minor: n_outlier - out_major,
    })
}

/// Emits rows group by group, then shuffles row order.
fn assemble(
    name: &str,
    layout: &Layout,
    rng: &mut ChaCha8Rng,
    mut draw: impl FnMut(&mut ChaCha8Rng, u32, bool) -> [f64; 2],
) -> Result<LabeledDataset> {
    let mut rows: Vec<([f64; 2], u32, u8)> = Vec::with_capacity(layout.n_major + layout.n_minor);
    for (group, size, outliers) in [
        (0u32, layout.n_major, layout.out_major),
        (1u32, layout.n_minor, layout.out_minor),
    ] {
        for i in 0..size {
            let is_outlier = i < outliers;
            rows.push((draw(rng, group, is_outlier), group, is_outlier as u8));
        }
    }
    rows.shuffle(rng);
    let features = DenseMatrix::from_vec(
        rows.len(),
        2,
        rows.iter().flat_map(|(x, _, _)| *x).collect(),
    )?;
    let pv = rows.iter().map(|r| r.1).collect();
    let labels = rows.iter().map(|r| r.2).collect();
    LabeledDataset::new(name, features, pv, Some(labels))
}

fn normal(mean: f64, std: f64) -> Normal<f64> {
    Normal::new(mean, std).expect("finite, positive standard deviation")
}

/// `x1` shifts with the group but carries no label information; `x2`
/// separates outliers (Normal(10, 3)) from inliers (Exponential(1)).
pub fn make_synth1(
    n_major: usize,
    n_minor: usize,
    n_outlier: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    let layout = layout(n_major, n_minor, n_outlier)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x1_major = normal(180.0, 10.0);
    let x1_minor = normal(150.0, 10.0);
    let x2_outlier = normal(10.0, 3.0);
    assemble("synth1", &layout, &mut rng, |rng, group, outlier| {
        let x1 = if group == 0 {
            x1_major.sample(rng)
        } else {
            x1_minor.sample(rng)
        };
        let x2 = if outlier {
            x2_outlier.sample(rng)
        } else {
            Exp1.sample(rng)
        };
        [x1, x2]
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Synth2Options {
    /// Standard deviation of inlier `x1`. The published parameter is 1.44;
    /// pass 1.2 to read it as a variance instead.
    pub x1_inlier_std: f64,
}

impl Default for Synth2Options {
    fn default() -> Self {
        Self { x1_inlier_std: 1.44 }
    }
}

/// Both coordinates depend on group and label: inliers are Gaussian around
/// (−1, −1) for the majority and (1, 1) for the minority, outliers are
/// symmetric heavy-tailed `2·Exp(1)·(±1)` in each coordinate.
pub fn make_synth2(
    n_major: usize,
    n_minor: usize,
    n_outlier: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    make_synth2_with(n_major, n_minor, n_outlier, seed, Synth2Options::default())
}

pub fn make_synth2_with(
    n_major: usize,
    n_minor: usize,
    n_outlier: usize,
    seed: u64,
    opts: Synth2Options,
) -> Result<LabeledDataset> {
    if !(opts.x1_inlier_std > 0.0 && opts.x1_inlier_std.is_finite()) {
        return Err(Error::InvalidArgument("x1_inlier_std must be positive".into()));
    }
    let layout = layout(n_major, n_minor, n_outlier)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = opts.x1_inlier_std;
    let inlier = [
        (normal(-1.0, spread), normal(-1.0, 1.0)),
        (normal(1.0, spread), normal(1.0, 1.0)),
    ];
    let tail = |rng: &mut ChaCha8Rng| {
        let e: f64 = Exp1.sample(rng);
        let sign = if rng.random_bool(0.5) { -1.0 } else { 1.0 };
        2.0 * e * sign
    };
    assemble("synth2", &layout, &mut rng, |rng, group, outlier| {
        if outlier {
            [tail(rng), tail(rng)]
        } else {
            let (d1, d2) = &inlier[group as usize];
            [d1.sample(rng), d2.sample(rng)]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(v: impl Iterator<Item = f64>) -> f64 {
        let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        s / n as f64
    }

    #[test]
    fn synth1_counts_are_exact() {
        let ds = make_synth1(2000, 400, 120, 7).unwrap();
        assert_eq!(ds.len(), 2400);
        assert_eq!(ds.pv.iter().filter(|&&g| g == 0).count(), 2000);
        assert_eq!(ds.pv.iter().filter(|&&g| g == 1).count(), 400);
        let labels = ds.labels.as_ref().unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 120);
        // proportional split: 100 + 20
        let minor_out = (0..ds.len()).filter(|&i| ds.pv[i] == 1 && labels[i] == 1).count();
        assert_eq!(minor_out, 20);
    }

    #[test]
    fn synth1_marginals() {
        let ds = make_synth1(2000, 400, 120, 3).unwrap();
        let labels = ds.labels.as_ref().unwrap();
        let x1_major = mean((0..ds.len()).filter(|&i| ds.pv[i] == 0).map(|i| ds.features.get(i, 0)));
        assert!((x1_major - 180.0).abs() < 1.0, "{x1_major}");
        let x2_inlier = mean((0..ds.len()).filter(|&i| labels[i] == 0).map(|i| ds.features.get(i, 1)));
        assert!((x2_inlier - 1.0).abs() < 0.1, "{x2_inlier}");
    }

    #[test]
    fn synth2_counts_and_marginals() {
        let ds = make_synth2(2000, 400, 120, 5).unwrap();
        assert_eq!(ds.len(), 2400);
        let labels = ds.labels.as_ref().unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 120);
        let out_x1 = mean((0..ds.len()).filter(|&i| labels[i] == 1).map(|i| ds.features.get(i, 0)));
        assert!(out_x1.abs() < 0.6, "{out_x1}");
        let in_a = mean(
            (0..ds.len())
                .filter(|&i| labels[i] == 0 && ds.pv[i] == 0)
                .map(|i| ds.features.get(i, 0)),
        );
        assert!((in_a + 1.0).abs() < 0.1, "{in_a}");
    }

    #[test]
    fn generators_are_seed_deterministic() {
        assert_eq!(make_synth1(50, 20, 5, 1).unwrap(), make_synth1(50, 20, 5, 1).unwrap());
        assert_eq!(make_synth2(50, 20, 5, 1).unwrap(), make_synth2(50, 20, 5, 1).unwrap());
        assert_ne!(make_synth1(50, 20, 5, 1).unwrap(), make_synth1(50, 20, 5, 2).unwrap());
    }

    #[test]
    fn invalid_counts() {
        assert!(make_synth1(5, 5, 11, 0).is_err());
        assert!(make_synth2(5, 1, 0, 0).is_err());
    }
}
