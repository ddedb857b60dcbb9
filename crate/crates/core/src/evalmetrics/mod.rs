//! Flagging and evaluation measures.
//!
//! Label-free: Fairness (flag-rate parity), GroupFidelity (harmonic mean of
//! per-group NDCG against the base detector), top-k rank agreement.
//! Supervised: per-group average precision and precision@k, and their
//! majority/minority ratios.
//!
//! Ties in any ranking are broken by ascending row index.

mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use report::{build_report, EvalReport, ReportInputs};

use crate::dataset::GroupView;
use crate::error::{Error, Result};
use crate::losses::{gain, idcg_group, BaseScoreSet};

/// A metric value, or the reason it is undefined on this input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Metric {
    Value(f64),
    Degenerate { degenerate: String },
}

impl Metric {
    pub fn degenerate(reason: impl Into<String>) -> Self {
        Metric::Degenerate {
            degenerate: reason.into(),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(*v),
            Metric::Degenerate { .. } => None,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Metric::Degenerate { .. })
    }
}

/// How several per-group NDCG values are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HmConvention {
    /// `n / Σ 1/x`, which is 1 when every value is 1.
    #[default]
    Standard,
    /// `1 / Σ 1/x`, the formula as printed; tops out at `1/n`.
    Literal,
}

/// Row indices by descending score; ties by ascending index.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// `⌈f·n⌉`, tolerant of `f·n` landing a hair above an integer.
pub fn top_count(f: f64, n: usize) -> usize {
    ((f * n as f64) - 1e-9).ceil().max(0.0) as usize
}

fn check_fraction(f: f64) -> Result<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("flag fraction {f} not in (0, 1)")))
    }
}

/// Flags the global top `⌈f·N⌉` rows.
pub fn flag_top_fraction(scores: &[f64], f: f64) -> Result<Vec<u8>> {
    check_fraction(f)?;
    let mut flags = vec![0u8; scores.len()];
    for &i in ranking(scores).iter().take(top_count(f, scores.len())) {
        flags[i] = 1;
    }
    Ok(flags)
}

/// Scores with their derived flags and rankings.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreSet {
    pub scores: Vec<f64>,
    pub flag_fraction: f64,
    pub flags: Vec<u8>,
    pub ranking: Vec<usize>,
    /// Per-group rankings, as row indices into the full score vector.
    pub group_rankings: BTreeMap<u32, Vec<usize>>,
}

impl ScoreSet {
    pub fn new(scores: Vec<f64>, flag_fraction: f64, groups: &GroupView) -> Result<Self> {
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::overflow("scores"));
        }
        if groups.total_rows() != scores.len() {
            return Err(Error::dim(format!(
                "{} scores for {} grouped rows",
                scores.len(),
                groups.total_rows()
            )));
        }
        let flags = flag_top_fraction(&scores, flag_fraction)?;
        let ranking = ranking(&scores);
        let group_rankings = groups
            .iter()
            .map(|(g, rows)| {
                let local: Vec<f64> = rows.iter().map(|&i| scores[i]).collect();
                (g, self::ranking(&local).into_iter().map(|j| rows[j]).collect())
            })
            .collect();
        Ok(Self {
            scores,
            flag_fraction,
            flags,
            ranking,
            group_rankings,
        })
    }

    pub fn top_k(&self, k: usize) -> &[usize] {
        &self.ranking[..k.min(self.ranking.len())]
    }
}

/// Fraction of flagged rows in each group.
pub fn flag_rates(flags: &[u8], groups: &GroupView) -> BTreeMap<u32, f64> {
    groups
        .iter()
        .map(|(g, rows)| {
            let flagged = rows.iter().filter(|&&i| flags[i] == 1).count();
            (g, flagged as f64 / rows.len() as f64)
        })
        .collect()
}

/// `min(r, 1/r)` with `r` the ratio of group flag rates; for more than two
/// groups, smallest over largest rate.
pub fn fairness_metric(flags: &[u8], groups: &GroupView) -> Metric {
    if groups.num_groups() < 2 {
        return Metric::degenerate("fewer than two groups");
    }
    let rates = flag_rates(flags, groups);
    let lo = rates.values().copied().fold(f64::INFINITY, f64::min);
    let hi = rates.values().copied().fold(0.0, f64::max);
    if hi == 0.0 {
        Metric::degenerate("no group has flagged rows")
    } else {
        Metric::Value(lo / hi)
    }
}

/// Discrete NDCG of the model's ranking within `rows`, with normalized base
/// scores as relevances. Rank of `i` is `#{k : s_i ≤ s_k}`.
pub fn ndcg_group(scores: &[f64], base_normalized: &[f64], rows: &[usize]) -> Metric {
    if rows.is_empty() {
        return Metric::degenerate("empty group");
    }
    let rel: Vec<f64> = rows.iter().map(|&i| base_normalized[i]).collect();
    let idcg = idcg_group(&rel);
    if idcg <= 0.0 {
        return Metric::degenerate("all relevances are zero");
    }
    let mut desc: Vec<f64> = rows.iter().map(|&i| scores[i]).collect();
    desc.sort_by(|a, b| b.total_cmp(a));
    // Terms are summed best rank first, the order the ideal DCG uses, so a
    // ranking that matches the base exactly scores exactly 1.
    let mut terms: Vec<(usize, f64)> = rows
        .iter()
        .zip(&rel)
        .map(|(&i, &r)| (desc.partition_point(|&s| s >= scores[i]), r))
        .collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let dcg: f64 = terms
        .iter()
        .map(|&(rank, r)| gain(r) / ((1 + rank) as f64).log2())
        .sum();
    Metric::Value(dcg / idcg)
}

pub fn harmonic_mean(values: &[f64], convention: HmConvention) -> Option<f64> {
    if values.is_empty() || values.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let inv: f64 = values.iter().map(|v| 1.0 / v).sum();
    Some(match convention {
        HmConvention::Standard => values.len() as f64 / inv,
        HmConvention::Literal => 1.0 / inv,
    })
}

/// Harmonic mean of per-group NDCG, and the per-group values.
pub fn group_fidelity(
    scores: &[f64],
    base: &BaseScoreSet,
    groups: &GroupView,
    convention: HmConvention,
) -> (Metric, BTreeMap<u32, Metric>) {
    let per_group: BTreeMap<u32, Metric> = groups
        .iter()
        .map(|(g, rows)| (g, ndcg_group(scores, &base.normalized, rows)))
        .collect();
    if let Some((g, _)) = per_group.iter().find(|(_, m)| m.is_degenerate()) {
        return (Metric::degenerate(format!("NDCG of group {g} is undefined")), per_group);
    }
    let values: Vec<f64> = per_group.values().filter_map(Metric::value).collect();
    let hm = match harmonic_mean(&values, convention) {
        Some(v) => Metric::Value(v),
        None => Metric::degenerate("a group has zero NDCG"),
    };
    (hm, per_group)
}

/// Jaccard similarity of two top-k index sets.
pub fn topk_rank_agreement(a: &ScoreSet, b: &ScoreSet, k: usize) -> Result<f64> {
    let n = a.scores.len();
    if b.scores.len() != n {
        return Err(Error::dim("score sets differ in length"));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {n} rows")));
    }
    if k == 0 {
        return Ok(1.0);
    }
    let mut in_a = vec![false; n];
    for &i in a.top_k(k) {
        in_a[i] = true;
    }
    let inter = b.top_k(k).iter().filter(|&&i| in_a[i]).count();
    Ok(inter as f64 / (2 * k - inter) as f64)
}

/// Mean over positives of the precision at each positive's rank.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Metric {
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 {
        return Metric::degenerate("no positives");
    }
    let mut hits = 0;
    let mut sum = 0.0;
    for (r, &i) in ranking(scores).iter().enumerate() {
        if labels[i] == 1 {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    Metric::Value(sum / positives as f64)
}

fn restrict<T: Copy>(v: &[T], rows: &[usize]) -> Vec<T> {
    rows.iter().map(|&i| v[i]).collect()
}

pub fn ap_per_group(scores: &[f64], labels: &[u8], groups: &GroupView) -> BTreeMap<u32, Metric> {
    groups
        .iter()
        .map(|(g, rows)| (g, average_precision(&restrict(scores, rows), &restrict(labels, rows))))
        .collect()
}

/// Precision over each group's own top `⌈f·N_v⌉`.
pub fn precision_at_k_per_group(
    scores: &[f64],
    labels: &[u8],
    groups: &GroupView,
    f: f64,
) -> Result<BTreeMap<u32, Metric>> {
    check_fraction(f)?;
    Ok(groups
        .iter()
        .map(|(g, rows)| {
            let local = restrict(scores, rows);
            let k = top_count(f, rows.len());
            if k == 0 {
                return (g, Metric::degenerate("k is zero"));
            }
            let hits = ranking(&local)
                .iter()
                .take(k)
                .filter(|&&j| labels[rows[j]] == 1)
                .count();
            (g, Metric::Value(hits as f64 / k as f64))
        })
        .collect())
}

/// `m[0] / m[1]`, majority over minority.
pub fn group_ratio(per_group: &BTreeMap<u32, Metric>, what: &str) -> Metric {
    match (per_group.get(&0), per_group.get(&1)) {
        (Some(Metric::Value(a)), Some(Metric::Value(b))) => {
            if *b == 0.0 {
                Metric::degenerate(format!("minority {what} is zero"))
            } else {
                Metric::Value(a / b)
            }
        }
        (Some(_), Some(_)) => Metric::degenerate(format!("{what} undefined for a group")),
        _ => Metric::degenerate("groups 0 and 1 are required"),
    }
}

pub fn ap_ratio(scores: &[f64], labels: &[u8], groups: &GroupView) -> Metric {
    group_ratio(&ap_per_group(scores, labels, groups), "AP")
}

pub fn p_at_k_ratio(scores: &[f64], labels: &[u8], groups: &GroupView, f: f64) -> Result<Metric> {
    Ok(group_ratio(
        &precision_at_k_per_group(scores, labels, groups, f)?,
        "precision",
    ))
}

/// Fraction of positives in each group.
pub fn base_rates(labels: &[u8], groups: &GroupView) -> BTreeMap<u32, f64> {
    groups
        .iter()
        .map(|(g, rows)| {
            let pos = rows.iter().filter(|&&i| labels[i] == 1).count();
            (g, pos as f64 / rows.len() as f64)
        })
        .collect()
}
