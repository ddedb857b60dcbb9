use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DownsampleSpec {
    /// Majority size divided by minority size.
    pub group_ratio: f64,
    /// Outlier fraction imposed within each group.
    pub outlier_rate: f64,
    /// Fixed minority size; the largest feasible size when `None`.
    pub minority_size: Option<usize>,
}

impl Default for DownsampleSpec {
    fn default() -> Self {
        Self {
            group_ratio: 4.0,
            outlier_rate: 0.05,
            minority_size: None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Pool {
    inliers: usize,
    outliers: usize,
}

/// `(rows, outliers)` for one group of size `n`. Counts round down.
fn demand(n: usize, rate: f64) -> (usize, usize) {
    (n, (rate * n as f64 + 1e-9).floor() as usize)
}

fn shortfall(pool: Pool, n: usize, rate: f64) -> Option<String> {
    let (n, out) = demand(n, rate);
    let mut msg = Vec::new();
    if out > pool.outliers {
        msg.push(format!("{} outliers short", out - pool.outliers));
    }
    if n - out > pool.inliers {
        msg.push(format!("{} inliers short", n - out - pool.inliers));
    }
    (!msg.is_empty()).then(|| msg.join(", "))
}

/// Subsamples a labeled binary-group dataset to a majority:minority size
/// ratio with the same outlier rate in both groups. Row order of the
/// survivors follows the input.
pub fn stratified_downsample(
    ds: &LabeledDataset,
    spec: DownsampleSpec,
    seed: u64,
) -> Result<LabeledDataset> {
    let labels = ds
        .labels
        .as_ref()
        .ok_or_else(|| Error::Validation("stratified_downsample needs labels".into()))?;
    if !(spec.group_ratio >= 1.0 && spec.group_ratio.is_finite()) {
        return Err(Error::InvalidArgument("group_ratio must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&spec.outlier_rate) {
        return Err(Error::InvalidArgument("outlier_rate must be in [0, 1)".into()));
    }
    let view = ds.group_view();
    if view.ids().collect::<Vec<_>>() != vec![0, 1] {
        return Err(Error::Validation(
            "stratified_downsample needs exactly groups 0 and 1".into(),
        ));
    }
    let split = |g: u32| -> (Vec<usize>, Vec<usize>) {
        view.get(g)
            .unwrap_or(&[])
            .iter()
            .partition(|&&i| labels[i] == 0)
    };
    let (in_a, out_a) = split(0);
    let (in_b, out_b) = split(1);
    let pools = [
        Pool {
            inliers: in_a.len(),
            outliers: out_a.len(),
        },
        Pool {
            inliers: in_b.len(),
            outliers: out_b.len(),
        },
    ];
    let sizes = |n_b: usize| ((spec.group_ratio * n_b as f64 + 1e-9).floor() as usize, n_b);
    let problems = |n_b: usize| -> Option<String> {
        let (n_a, n_b) = sizes(n_b);
        let a = shortfall(pools[0], n_a, spec.outlier_rate).map(|s| format!("majority: {s}"));
        let b = shortfall(pools[1], n_b, spec.outlier_rate).map(|s| format!("minority: {s}"));
        match (a, b) {
            (None, None) => None,
            (a, b) => Some(a.into_iter().chain(b).collect::<Vec<_>>().join("; ")),
        }
    };

    let n_b = match spec.minority_size {
        Some(n_b) => {
            if let Some(p) = problems(n_b) {
                return Err(Error::Capacity(format!("minority size {n_b}: {p}")));
            }
            n_b
        }
        None => {
            let upper = ((in_b.len() + out_b.len()) as f64)
                .min((in_a.len() + out_a.len()) as f64 / spec.group_ratio)
                .floor() as usize;
            (2..=upper)
                .rev()
                .find(|&n| problems(n).is_none())
                .ok_or_else(|| {
                    Error::Capacity(format!(
                        "no minority size >= 2 is feasible ({})",
                        problems(2).unwrap_or_default()
                    ))
                })?
        }
    };
    if n_b < 2 {
        return Err(Error::Capacity("minority size must be at least 2".into()));
    }
    let (n_a, _) = sizes(n_b);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::with_capacity(n_a + n_b);
    for (n, inl, outl) in [(n_a, in_a, out_a), (n_b, in_b, out_b)] {
        let (_, n_out) = demand(n, spec.outlier_rate);
        for (mut pool, k) in [(outl, n_out), (inl, n - n_out)] {
            pool.shuffle(&mut rng);
            keep.extend_from_slice(&pool[..k]);
        }
    }
    keep.sort_unstable();
    ds.subset(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numgrad::DenseMatrix;

    /// `na` majority rows with `oa` outliers, `nb` minority rows with `ob`.
    fn pool(na: usize, oa: usize, nb: usize, ob: usize) -> LabeledDataset {
        let n = na + nb;
        let features = DenseMatrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let mut pv = vec![0; na];
        pv.extend(vec![1; nb]);
        let mut labels: Vec<u8> = (0..na).map(|i| (i < oa) as u8).collect();
        labels.extend((0..nb).map(|i| (i < ob) as u8));
        LabeledDataset::new("pool", features, pv, Some(labels)).unwrap()
    }

    fn composition(ds: &LabeledDataset) -> [(usize, usize); 2] {
        let labels = ds.labels.as_ref().unwrap();
        let mut c = [(0, 0); 2];
        for (i, &g) in ds.pv.iter().enumerate() {
            c[g as usize].0 += 1;
            c[g as usize].1 += labels[i] as usize;
        }
        c
    }

    #[test]
    fn four_to_one_with_five_percent() {
        let ds = pool(10_000, 500, 10_000, 500);
        let out = stratified_downsample(&ds, DownsampleSpec::default(), 1).unwrap();
        assert_eq!(composition(&out), [(10_000, 500), (2_500, 125)]);
    }

    #[test]
    fn ratio_one_at_input_rate_keeps_composition() {
        let ds = pool(200, 10, 200, 10);
        let spec = DownsampleSpec {
            group_ratio: 1.0,
            outlier_rate: 0.05,
            minority_size: None,
        };
        let out = stratified_downsample(&ds, spec, 3).unwrap();
        assert_eq!(composition(&out), [(200, 10), (200, 10)]);
        assert_eq!(out, ds);
    }

    #[test]
    fn same_seed_same_rows() {
        let ds = pool(500, 60, 300, 40);
        let a = stratified_downsample(&ds, DownsampleSpec::default(), 9).unwrap();
        let b = stratified_downsample(&ds, DownsampleSpec::default(), 9).unwrap();
        let c = stratified_downsample(&ds, DownsampleSpec::default(), 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.features, c.features);
    }

    #[test]
    fn infeasible_request_names_shortfall() {
        let ds = pool(100, 1, 100, 1);
        let spec = DownsampleSpec {
            minority_size: Some(25),
            ..DownsampleSpec::default()
        };
        match stratified_downsample(&ds, spec, 0) {
            Err(Error::Capacity(msg)) => assert!(msg.contains("outliers short"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
