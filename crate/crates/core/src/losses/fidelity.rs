//! Group-fidelity losses: a listwise NDCG surrogate that asks the model to
//! reproduce each group's ranking under the base detector, and the
//! correlation-based FairOD-C replacement.
//!
//! Relevances are base scores min-max normalized to `[0, 1]`, so the gain
//! `2^rel − 1` stays bounded. Ranks are smoothed by replacing the indicator
//! `1[s_i ≤ s_k]` with a logistic `σ(c·(s_k − s_i))`; the self term counts
//! exactly 1 so the smallest smooth rank is 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::GroupView;
use crate::error::{Error, Result};
use crate::losses::parity::pearson_abs_corr_grad;
use crate::losses::{TermValue, EPS};

/// Beyond this logit the logistic is 0 or 1 to double precision.
const SATURATION: f64 = 40.0;

/// Largest `c·(z − anchor)` before the pair factorization re-anchors.
const ANCHOR_SPAN: f64 = 300.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmoidOrientation {
    /// `σ(c·x)`: the smooth count approximates `Σ_k 1[s_i ≤ s_k]`.
    #[default]
    Increasing,
    /// `exp(−c·x)/(1 + exp(−c·x))`, the literal published form.
    Decreasing,
}

impl SigmoidOrientation {
    fn sign(self) -> f64 {
        match self {
            SigmoidOrientation::Increasing => 1.0,
            SigmoidOrientation::Decreasing => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSmoothing {
    /// Sigmoid scale `c > 0`.
    pub c: f64,
    pub orientation: SigmoidOrientation,
    /// Divide each group's scores by their standard deviation before
    /// smoothing, making `c` independent of the score scale.
    pub unit_scale: bool,
}

impl Default for RankSmoothing {
    fn default() -> Self {
        Self {
            c: 50.0,
            orientation: SigmoidOrientation::Increasing,
            unit_scale: true,
        }
    }
}

#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Smooth rank of member `i` within `scores` (no rescaling).
pub fn smooth_rank(scores: &[f64], i: usize, c: f64, orientation: SigmoidOrientation) -> f64 {
    let o = orientation.sign();
    1.0 + scores
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, &s)| logistic(o * c * (s - scores[i])))
        .sum::<f64>()
}

#[inline]
pub(crate) fn gain(relevance: f64) -> f64 {
    relevance.exp2() - 1.0
}

/// Ideal DCG: gains sorted descending against discounts `log₂(1 + j)`.
pub fn idcg_group(normalized_base: &[f64]) -> f64 {
    let mut rel = normalized_base.to_vec();
    rel.sort_by(|a, b| b.total_cmp(a));
    rel.iter()
        .enumerate()
        .map(|(j, &r)| gain(r) / ((j + 2) as f64).log2())
        .sum()
}

/// Frozen base-detector scores and the per-group normalizers derived from
/// them before any fair training starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseScoreSet {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub idcg: BTreeMap<u32, f64>,
}

impl BaseScoreSet {
    /// Normalizes with the min and max of `raw` itself.
    pub fn new(raw: Vec<f64>, groups: &GroupView) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Empty("base scores".into()));
        }
        let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::with_bounds(raw, min, max, groups)
    }

    /// Normalizes with externally fixed bounds, clamping into `[0, 1]`.
    pub fn with_bounds(raw: Vec<f64>, min: f64, max: f64, groups: &GroupView) -> Result<Self> {
        if raw.iter().any(|v| !v.is_finite()) || !min.is_finite() || !max.is_finite() {
            return Err(Error::overflow("base scores"));
        }
        if groups.total_rows() != raw.len() {
            return Err(Error::dim(format!(
                "{} base scores for {} grouped rows",
                raw.len(),
                groups.total_rows()
            )));
        }
        let span = max - min;
        let normalized: Vec<f64> = raw
            .iter()
            .map(|&s| {
                if span > 0.0 {
                    ((s - min) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect();
        let idcg = groups
            .iter()
            .map(|(g, rows)| {
                let rel: Vec<f64> = rows.iter().map(|&i| normalized[i]).collect();
                (g, idcg_group(&rel))
            })
            .collect();
        Ok(Self {
            raw,
            normalized,
            min,
            max,
            idcg,
        })
    }

    /// Restriction to `rows`, keeping the normalization bounds.
    pub fn subset(&self, rows: &[usize], groups: &GroupView) -> Result<Self> {
        Self::with_bounds(
            rows.iter().map(|&i| self.raw[i]).collect(),
            self.min,
            self.max,
            groups,
        )
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

/// Smoothed-NDCG group fidelity loss `Σ_v (1 − NDCG̃_v)` with its gradient
/// with respect to `scores`. Groups whose ideal DCG is zero contribute 0 and
/// mark the result degenerate.
pub fn loss_gf(
    scores: &[f64],
    base: &BaseScoreSet,
    groups: &GroupView,
    smoothing: &RankSmoothing,
) -> Result<TermValue> {
    if scores.len() != base.len() {
        return Err(Error::dim(format!(
            "{} scores for {} base scores",
            scores.len(),
            base.len()
        )));
    }
    if !(smoothing.c > 0.0 && smoothing.c.is_finite()) {
        return Err(Error::InvalidArgument("sigmoid scale c must be positive".into()));
    }
    let mut total = TermValue::zero(scores.len());
    for (g, rows) in groups.iter() {
        let idcg = match base.idcg.get(&g) {
            Some(&v) => v,
            None => idcg_group(&rows.iter().map(|&i| base.normalized[i]).collect::<Vec<_>>()),
        };
        if idcg <= 0.0 {
            total.degenerate = true;
            continue;
        }
        let s: Vec<f64> = rows.iter().map(|&i| scores[i]).collect();
        let gains: Vec<f64> = rows.iter().map(|&i| gain(base.normalized[i])).collect();
        let (value, grad) = group_term(&s, &gains, idcg, smoothing);
        if !value.is_finite() || grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::overflow(format!("group fidelity loss (group {g})")));
        }
        total.value += value;
        for (&i, gi) in rows.iter().zip(grad) {
            total.grad[i] += gi;
        }
    }
    Ok(total)
}

/// `1 − Σ_i gain_i / (log₂(1 + R_i)·idcg)` for one group and its gradient.
fn group_term(s: &[f64], gains: &[f64], idcg: f64, sm: &RankSmoothing) -> (f64, Vec<f64>) {
    let n = s.len();
    let (scale, mean) = if sm.unit_scale && n >= 2 {
        let mean = s.iter().sum::<f64>() / n as f64;
        let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        ((var + EPS).sqrt(), mean)
    } else {
        (1.0, 0.0)
    };
    let z: Vec<f64> = s.iter().map(|v| v / scale).collect();
    let o = sm.orientation.sign();
    let c = sm.c;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));
    let zs: Vec<f64> = order.iter().map(|&i| z[i]).collect();

    // Pass 1: smooth ranks. Pairs farther apart than the saturation window
    // contribute exactly 0 or 1 and carry no gradient.
    let mut ends = vec![0usize; n];
    let mut end = 0;
    for a in 0..n {
        end = end.max(a + 1);
        while end < n && c * (zs[end] - zs[a]) <= SATURATION {
            end += 1;
        }
        ends[a] = end;
    }
    // For b > a, exp(−c·(z_b − z_a)) factors as E_b·F_a with both taken
    // relative to an anchor, so each pair costs a multiply instead of an
    // exp. Anchors are reset before the exponents can leave double range.
    let mut rank = vec![1.0; n];
    let mut e = vec![0.0; n];
    let mut ws: Vec<f64> = Vec::new();
    let mut pair_start = vec![0usize; n];
    let mut a0 = 0;
    while a0 < n {
        let anchor = zs[a0];
        let mut a1 = a0 + 1;
        while a1 < n && c * (zs[a1] - anchor) <= ANCHOR_SPAN {
            a1 += 1;
        }
        let hi = ends[a1 - 1];
        for b in a0..hi {
            e[b] = (-c * (zs[b] - anchor)).exp();
        }
        for a in a0..a1 {
            let f = (c * (zs[a] - anchor)).exp();
            let (lo, hi) = (a + 1, ends[a]);
            pair_start[a] = ws.len();
            ws.resize(ws.len() + (hi - lo), 0.0);
            let slot = &mut ws[pair_start[a]..];
            let mut ra = 0.0;
            for (k, b) in (lo..hi).enumerate() {
                let t = e[b] * f;
                let inv = 1.0 / (1.0 + t);
                let q = if o > 0.0 { inv } else { t * inv };
                ra += q;
                rank[b] += 1.0 - q;
                // σ′ = q(1 − q) = t/(1 + t)² in either orientation.
                slot[k] = t * inv * inv;
            }
            rank[a] += ra;
        }
        a0 = a1;
    }
    if o > 0.0 {
        for a in 0..n {
            rank[a] += (n - ends[a]) as f64;
        }
    } else {
        let mut diff = vec![0usize; n + 1];
        for &e in &ends {
            diff[e] += 1;
        }
        let mut acc = 0;
        for b in 0..n {
            acc += diff[b];
            rank[b] += acc as f64;
        }
    }

    // Loss and ∂L/∂R in sorted order.
    let ln2 = std::f64::consts::LN_2;
    let mut dcg_ratio = 0.0;
    let mut d_rank = vec![0.0; n];
    for a in 0..n {
        let g = gains[order[a]];
        let l = (1.0 + rank[a]).log2();
        dcg_ratio += g / (l * idcg);
        d_rank[a] = g / (idcg * l * l * (1.0 + rank[a]) * ln2);
    }
    let value = 1.0 - dcg_ratio;

    // Pass 2: ∂L/∂z.
    let mut d_zs = vec![0.0; n];
    for a in 0..n {
        let (lo, hi) = (a + 1, ends[a]);
        let pairs = &ws[pair_start[a]..pair_start[a] + (hi - lo)];
        let da = d_rank[a];
        let mut acc = 0.0;
        for (k, b) in (lo..hi).enumerate() {
            let t = o * c * pairs[k] * (da - d_rank[b]);
            d_zs[b] += t;
            acc += t;
        }
        d_zs[a] -= acc;
    }
    let mut d_z = vec![0.0; n];
    for (a, &i) in order.iter().enumerate() {
        d_z[i] = d_zs[a];
    }

    let grad = if sm.unit_scale && n >= 2 {
        let nf = n as f64;
        let coupling: f64 = d_z.iter().zip(s).map(|(g, v)| g * v).sum::<f64>() / (scale * scale);
        d_z.iter()
            .zip(s)
            .map(|(g, v)| g / scale - coupling * (v - mean) / (nf * scale))
            .collect()
    } else {
        d_z
    };
    (value, grad)
}

/// FairOD-C replacement: `−Σ_v |corr(s_v, s_base_v)|`. Groups with fewer
/// than two members or constant scores contribute 0 and mark the result
/// degenerate.
pub fn loss_gf_corr(scores: &[f64], base: &BaseScoreSet, groups: &GroupView) -> Result<TermValue> {
    if scores.len() != base.len() {
        return Err(Error::dim(format!(
            "{} scores for {} base scores",
            scores.len(),
            base.len()
        )));
    }
    let mut total = TermValue::zero(scores.len());
    for (_, rows) in groups.iter() {
        if rows.len() < 2 {
            total.degenerate = true;
            continue;
        }
        let s: Vec<f64> = rows.iter().map(|&i| scores[i]).collect();
        let b: Vec<f64> = rows.iter().map(|&i| base.raw[i]).collect();
        let term = pearson_abs_corr_grad(&s, &b)?;
        total.value -= term.value;
        total.degenerate |= term.degenerate;
        for (&i, g) in rows.iter().zip(&term.grad) {
            total.grad[i] -= g;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::group_view;

    fn single_group(n: usize) -> GroupView {
        group_view(&vec![0; n])
    }

    #[test]
    fn smooth_rank_cases() {
        assert_eq!(smooth_rank(&[0.3; 5], 2, 50.0, SigmoidOrientation::Increasing), 3.0);
        assert_eq!(smooth_rank(&[4.0], 0, 50.0, SigmoidOrientation::Increasing), 1.0);
        let s = [0.0, 0.5, 1.0, 2.0];
        let r = smooth_rank(&s, 3, 100.0, SigmoidOrientation::Increasing);
        assert!((r - 1.0).abs() < 1e-3);
        // the published orientation counts the complement
        let r = smooth_rank(&s, 3, 100.0, SigmoidOrientation::Decreasing);
        assert!((r - 4.0).abs() < 1e-3);
    }

    #[test]
    fn idcg_hand_values() {
        assert_eq!(idcg_group(&[1.0]), 1.0);
        assert_eq!(idcg_group(&[0.0, 0.0]), 0.0);
        assert_eq!(idcg_group(&[0.0, 1.0]), 1.0);
    }

    #[test]
    fn monotone_transform_of_base_has_small_loss() {
        let raw = vec![0.1, 2.0, 0.7, 3.5, 1.2, 5.0, 0.4];
        let g = single_group(raw.len());
        let base = BaseScoreSet::new(raw.clone(), &g).unwrap();
        let scores: Vec<f64> = raw.iter().map(|v| v.powi(3) + 2.0 * v).collect();
        let sm = RankSmoothing {
            c: 100.0,
            ..RankSmoothing::default()
        };
        let l = loss_gf(&scores, &base, &g, &sm).unwrap();
        assert!(l.value.abs() < 0.02, "{}", l.value);
    }

    #[test]
    fn reversed_order_is_penalized() {
        let raw = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let g = single_group(5);
        let base = BaseScoreSet::new(raw.clone(), &g).unwrap();
        let reversed: Vec<f64> = raw.iter().map(|v| -v).collect();
        let l = loss_gf(&reversed, &base, &g, &RankSmoothing::default()).unwrap();
        assert!(l.value > 0.2, "{}", l.value);
    }

    #[test]
    fn singleton_groups_cost_nothing() {
        let g = group_view(&[0, 1, 2]);
        let base = BaseScoreSet::new(vec![0.0, 0.5, 1.0], &g).unwrap();
        let l = loss_gf(&[3.0, 1.0, 2.0], &base, &g, &RankSmoothing::default()).unwrap();
        // groups 1 and 2 are exact; group 0 has zero relevance and is skipped
        assert!(l.value.abs() < 1e-12);
        assert!(l.degenerate);
    }

    #[test]
    fn corr_variant_cases() {
        let g = group_view(&[0, 0, 0, 1, 1, 1]);
        let raw = vec![1.0, 2.0, 4.0, 0.5, 0.1, 0.9];
        let base = BaseScoreSet::new(raw.clone(), &g).unwrap();
        let same = loss_gf_corr(&raw, &base, &g).unwrap();
        assert!((same.value + 2.0).abs() < 1e-6);
        let mixed = loss_gf_corr(&[1.0, 2.0, 4.0, 7.0, 7.0, 7.0], &base, &g).unwrap();
        assert!((mixed.value + 1.0).abs() < 1e-7);
        assert!(mixed.degenerate);
    }

    #[test]
    fn windowed_ranks_match_direct_sum() {
        let s: Vec<f64> = (0..60).map(|i| ((i * 37 % 60) as f64 * 0.071).sin() * 3.0).collect();
        for orientation in [SigmoidOrientation::Increasing, SigmoidOrientation::Decreasing] {
            let sm = RankSmoothing {
                c: 50.0,
                orientation,
                unit_scale: false,
            };
            let gains = vec![0.0; s.len()];
            // with zero gains the value is 1; recover ranks through a unit gain on one member
            for probe in [0, 17, 59] {
                let mut g = gains.clone();
                g[probe] = 1.0;
                let (v, _) = group_term(&s, &g, 1.0, &sm);
                let want = 1.0 - 1.0 / (1.0 + smooth_rank(&s, probe, 50.0, orientation)).log2();
                assert!((v - want).abs() < 1e-12, "{v} vs {want}");
            }
        }
    }

    #[test]
    fn ranks_and_gradient_survive_wide_score_spread() {
        // c·range is far past the re-anchoring span
        let s: Vec<f64> = (0..80).map(|i| i as f64 * 0.4 + (i as f64).sin() * 0.05).collect();
        let sm = RankSmoothing {
            c: 50.0,
            orientation: SigmoidOrientation::Increasing,
            unit_scale: false,
        };
        for probe in [0, 40, 79] {
            let mut g = vec![0.0; s.len()];
            g[probe] = 1.0;
            let (v, _) = group_term(&s, &g, 1.0, &sm);
            let want = 1.0 - 1.0 / (1.0 + smooth_rank(&s, probe, 50.0, sm.orientation)).log2();
            assert!((v - want).abs() < 1e-12, "{v} vs {want}");
        }
        let gains: Vec<f64> = (0..80).map(|i| ((i * 7 % 80) as f64 / 80.0).exp2() - 1.0).collect();
        let (_, grad) = group_term(&s, &gains, 10.0, &sm);
        let h = 1e-6;
        for j in [3, 41, 77] {
            let mut up = s.clone();
            up[j] += h;
            let mut down = s.clone();
            down[j] -= h;
            let fd = (group_term(&up, &gains, 10.0, &sm).0 - group_term(&down, &gains, 10.0, &sm).0)
                / (2.0 * h);
            assert!((fd - grad[j]).abs() <= 1e-6 * fd.abs().max(1e-3), "{fd} vs {}", grad[j]);
        }
    }
}
