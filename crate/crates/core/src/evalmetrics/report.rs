use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::group_view;
use crate::error::{Error, Result};
use crate::evalmetrics::{
    ap_per_group, average_precision, base_rates, fairness_metric, flag_rates, group_fidelity, group_ratio,
    precision_at_k_per_group, top_count, topk_rank_agreement, HmConvention, Metric, ScoreSet,
};
use crate::losses::BaseScoreSet;

/// Everything needed to evaluate one model on one dataset.
#[derive(Clone, Debug)]
pub struct ReportInputs<'a> {
    pub model: String,
    pub scores: &'a [f64],
    pub pv: &'a [u32],
    pub labels: Option<&'a [u8]>,
    /// Reference scores for GroupFidelity and top-k agreement; the model is
    /// compared with itself when absent.
    pub base_scores: Option<&'a [f64]>,
    pub flag_fraction: f64,
    /// Top-k size for rank agreement; `⌈f·N⌉` when absent.
    pub k: Option<usize>,
    pub hm_convention: HmConvention,
    pub config: Option<serde_json::Value>,
}

/// Supervised measures, present only when labels are.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupervisedMetrics {
    /// AP over all rows, ignoring groups.
    pub ap_overall: Metric,
    pub ap: BTreeMap<u32, Metric>,
    pub ap_ratio: Metric,
    pub p_at_k: BTreeMap<u32, Metric>,
    pub p_at_k_ratio: Metric,
    pub base_rates: BTreeMap<u32, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub n_rows: usize,
    pub flag_fraction: f64,
    pub k: usize,
    pub hm_convention: HmConvention,
    pub fairness: Metric,
    pub group_fidelity: Metric,
    pub ndcg: BTreeMap<u32, Metric>,
    pub topk_agreement: f64,
    pub flag_rates: BTreeMap<u32, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supervised: Option<SupervisedMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

pub fn build_report(inputs: ReportInputs<'_>) -> Result<EvalReport> {
    let n = inputs.scores.len();
    if inputs.pv.len() != n {
        return Err(Error::dim(format!("{} pv entries for {n} scores", inputs.pv.len())));
    }
    let groups = group_view(inputs.pv);
    let base_raw = inputs.base_scores.unwrap_or(inputs.scores);
    if base_raw.len() != n {
        return Err(Error::dim(format!("{} base scores for {n} scores", base_raw.len())));
    }
    let set = ScoreSet::new(inputs.scores.to_vec(), inputs.flag_fraction, &groups)?;
    let base_set = ScoreSet::new(base_raw.to_vec(), inputs.flag_fraction, &groups)?;
    let base = BaseScoreSet::new(base_raw.to_vec(), &groups)?;
    let k = inputs.k.unwrap_or_else(|| top_count(inputs.flag_fraction, n));
    let (gf, ndcg) = group_fidelity(inputs.scores, &base, &groups, inputs.hm_convention);

    let supervised = match inputs.labels {
        None => None,
        Some(labels) => {
            if labels.len() != n {
                return Err(Error::dim(format!("{} labels for {n} scores", labels.len())));
            }
            let ap = ap_per_group(inputs.scores, labels, &groups);
            let p_at_k =
                precision_at_k_per_group(inputs.scores, labels, &groups, inputs.flag_fraction)?;
            Some(SupervisedMetrics {
                ap_overall: average_precision(inputs.scores, labels),
                ap_ratio: group_ratio(&ap, "AP"),
                p_at_k_ratio: group_ratio(&p_at_k, "precision"),
                ap,
                p_at_k,
                base_rates: base_rates(labels, &groups),
            })
        }
    };

    Ok(EvalReport {
        model: inputs.model,
        n_rows: n,
        flag_fraction: inputs.flag_fraction,
        k,
        hm_convention: inputs.hm_convention,
        fairness: fairness_metric(&set.flags, &groups),
        group_fidelity: gf,
        ndcg,
        topk_agreement: topk_rank_agreement(&set, &base_set, k)?,
        flag_rates: flag_rates(&set.flags, &groups),
        supervised,
        config: inputs.config,
    })
}

fn cell(m: &Metric) -> String {
    match m {
        Metric::Value(v) => format!("{v}"),
        Metric::Degenerate { .. } => "NA".into(),
    }
}

impl EvalReport {
    /// Column names of [`EvalReport::csv_row`].
    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["model", "n_rows", "flag_fraction", "fairness", "group_fidelity"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(self.ndcg.keys().map(|g| format!("ndcg_{g}")));
        h.push("topk_agreement".into());
        h.extend(self.flag_rates.keys().map(|g| format!("fr_{g}")));
        if let Some(s) = &self.supervised {
            h.push("ap".into());
            h.extend(s.ap.keys().map(|g| format!("ap_{g}")));
            h.push("ap_ratio".into());
            h.extend(s.p_at_k.keys().map(|g| format!("p_at_k_{g}")));
            h.push("p_at_k_ratio".into());
            h.extend(s.base_rates.keys().map(|g| format!("br_{g}")));
        }
        h
    }

    /// One spreadsheet row; undefined values are written as `NA`.
    pub fn csv_row(&self) -> Vec<String> {
        let mut r = vec![
            self.model.clone(),
            self.n_rows.to_string(),
            self.flag_fraction.to_string(),
            cell(&self.fairness),
            cell(&self.group_fidelity),
        ];
        r.extend(self.ndcg.values().map(cell));
        r.push(self.topk_agreement.to_string());
        r.extend(self.flag_rates.values().map(|v| v.to_string()));
        if let Some(s) = &self.supervised {
            r.push(cell(&s.ap_overall));
            r.extend(s.ap.values().map(cell));
            r.push(cell(&s.ap_ratio));
            r.extend(s.p_at_k.values().map(cell));
            r.push(cell(&s.p_at_k_ratio));
            r.extend(s.base_rates.values().map(|v| v.to_string()));
        }
        r
    }

    pub fn ap_ratio(&self) -> Option<f64> {
        self.supervised.as_ref().and_then(|s| s.ap_ratio.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs<'a>(scores: &'a [f64], pv: &'a [u32], labels: Option<&'a [u8]>) -> ReportInputs<'a> {
        ReportInputs {
            model: "m".into(),
            scores,
            pv,
            labels,
            base_scores: None,
            flag_fraction: 0.25,
            k: None,
            hm_convention: HmConvention::Standard,
            config: None,
        }
    }

    #[test]
    fn perfect_detector_on_balanced_data_is_fair() {
        let scores = [9.0, 1.0, 2.0, 3.0, 8.0, 1.5, 2.5, 3.5];
        let pv = [0, 0, 0, 0, 1, 1, 1, 1];
        let labels = [1, 0, 0, 0, 1, 0, 0, 0];
        let r = build_report(inputs(&scores, &pv, Some(&labels))).unwrap();
        assert_eq!(r.fairness, Metric::Value(1.0));
        assert_eq!(r.group_fidelity, Metric::Value(1.0));
        let s = r.supervised.as_ref().unwrap();
        assert_eq!(s.ap_ratio, Metric::Value(1.0));
        assert_eq!(s.p_at_k_ratio, Metric::Value(1.0));
        assert_eq!(r.flag_rates[&0], 0.25);
        assert_eq!(r.flag_rates[&1], 0.25);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let scores = [0.1, 0.7, 0.3, 0.9, 0.2, 0.6];
        let pv = [0, 0, 0, 1, 1, 1];
        let labels = [0, 1, 0, 1, 0, 0];
        let base = [0.3, 0.2, 0.1, 0.5, 0.4, 0.45];
        let mut i = inputs(&scores, &pv, Some(&labels));
        i.base_scores = Some(&base);
        i.config = Some(serde_json::json!({"alpha": 0.5}));
        let r = build_report(i).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: EvalReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn unlabeled_data_has_no_supervised_fields() {
        let scores = [0.1, 0.7, 0.3, 0.9];
        let pv = [0, 0, 1, 1];
        let r = build_report(inputs(&scores, &pv, None)).unwrap();
        assert!(r.supervised.is_none());
        assert!(r.fairness.value().is_some());
        let json = serde_json::to_value(&r).unwrap();
        assert!(json.get("supervised").is_none());
        assert!(json.get("fairness").is_some());
        assert_eq!(r.csv_header().len(), r.csv_row().len());
    }
}
