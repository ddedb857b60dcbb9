use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::dataset::LabeledDataset;
use crate::detector;
use crate::error::{Error, Result};
use crate::evalmetrics::{fairness_metric, flag_top_fraction, group_fidelity, HmConvention, Metric};
use crate::losses::BaseScoreSet;
use crate::training::{fit_fairod, FitResult, TrainConfig};

/// The α × γ values to try.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub alphas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            alphas: vec![0.01, 0.5, 0.9],
            gammas: vec![0.01, 0.1, 1.0],
        }
    }
}

impl Grid {
    /// Cells in row-major order: α outer, γ inner.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.alphas
            .iter()
            .flat_map(|&a| self.gammas.iter().map(move |&g| (a, g)))
            .collect()
    }
}

/// Label-free measures used for model selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnsupervisedMetrics {
    pub fairness: Metric,
    pub group_fidelity: Metric,
}

impl UnsupervisedMetrics {
    pub fn compute(
        scores: &[f64],
        base_scores: &[f64],
        pv: &[u32],
        flag_fraction: f64,
    ) -> Result<Self> {
        let groups = crate::dataset::group_view(pv);
        let flags = flag_top_fraction(scores, flag_fraction)?;
        let base = BaseScoreSet::new(base_scores.to_vec(), &groups)?;
        Ok(Self {
            fairness: fairness_metric(&flags, &groups),
            group_fidelity: group_fidelity(scores, &base, &groups, HmConvention::Standard).0,
        })
    }
}

/// One grid cell. A failed fit is kept as its error message.
#[derive(Debug)]
pub struct GridCell {
    pub alpha: f64,
    pub gamma: f64,
    pub fit: Result<FitResult>,
    pub metrics: Option<UnsupervisedMetrics>,
}

impl GridCell {
    pub fn point(&self) -> Option<ParetoPoint> {
        let m = self.metrics.as_ref()?;
        Some(ParetoPoint {
            alpha: self.alpha,
            gamma: self.gamma,
            fairness: m.fairness.value()?,
            group_fidelity: m.group_fidelity.value()?,
        })
    }
}

/// Fits every cell of `grid` with the remaining settings from `common`.
/// Cells run on a pool of `jobs` threads; the output follows
/// [`Grid::cells`] order whatever the scheduling.
pub fn grid_search(
    ds: &LabeledDataset,
    base: &FitResult,
    grid: &Grid,
    common: &TrainConfig,
    jobs: usize,
) -> Result<Vec<GridCell>> {
    if grid.alphas.is_empty() || grid.gammas.is_empty() {
        return Err(Error::Empty("hyperparameter grid".into()));
    }
    let base_scores = detector::score(&base.params, &ds.features)?;
    let run = |(alpha, gamma): (f64, f64)| {
        let cfg = TrainConfig {
            alpha,
            gamma,
            ..common.clone()
        };
        let fit = fit_fairod(ds, base, &cfg);
        let metrics = fit.as_ref().ok().and_then(|f| {
            UnsupervisedMetrics::compute(&f.scores, &base_scores, &ds.pv, cfg.flag_fraction).ok()
        });
        GridCell {
            alpha,
            gamma,
            fit,
            metrics,
        }
    };
    let cells = grid.cells();
    if jobs <= 1 {
        return Ok(cells.into_iter().map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    Ok(pool.install(|| cells.into_par_iter().map(run).collect()))
}

/// A candidate in (Fairness, GroupFidelity) space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub alpha: f64,
    pub gamma: f64,
    pub fairness: f64,
    pub group_fidelity: f64,
}

impl ParetoPoint {
    fn dominated_by(&self, o: &ParetoPoint) -> bool {
        o.fairness >= self.fairness
            && o.group_fidelity >= self.group_fidelity
            && (o.fairness > self.fairness || o.group_fidelity > self.group_fidelity)
    }

    pub fn distance_to_ideal(&self) -> f64 {
        (1.0 - self.fairness).hypot(1.0 - self.group_fidelity)
    }
}

/// `true` for each point no other point dominates.
pub fn pareto_frontier(points: &[ParetoPoint]) -> Vec<bool> {
    points
        .iter()
        .map(|p| !points.iter().any(|q| p.dominated_by(q)))
        .collect()
}

/// Index of the non-dominated point nearest to (1, 1). Ties go to higher
/// fairness, then lower α, then lower γ.
pub fn pareto_select(points: &[ParetoPoint]) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::Empty("no candidates to select from".into()));
    }
    let on_frontier = pareto_frontier(points);
    let best = (0..points.len())
        .filter(|&i| on_frontier[i])
        .min_by(|&i, &j| {
            let (p, q) = (&points[i], &points[j]);
            p.distance_to_ideal()
                .total_cmp(&q.distance_to_ideal())
                .then(q.fairness.total_cmp(&p.fairness))
                .then(p.alpha.total_cmp(&q.alpha))
                .then(p.gamma.total_cmp(&q.gamma))
        })
        .expect("a finite nonempty set has a non-dominated point");
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(alpha: f64, fairness: f64, group_fidelity: f64) -> ParetoPoint {
        ParetoPoint {
            alpha,
            gamma: 0.1,
            fairness,
            group_fidelity,
        }
    }

    #[test]
    fn default_grid_has_nine_cells() {
        assert_eq!(Grid::default().cells().len(), 9);
    }

    #[test]
    fn single_candidate_is_selected() {
        assert_eq!(pareto_select(&[pt(0.5, 0.3, 0.2)]).unwrap(), 0);
    }

    #[test]
    fn nearest_to_ideal_wins() {
        let pts = [pt(0.1, 0.9, 0.9), pt(0.5, 0.99, 0.5), pt(0.9, 0.5, 0.99)];
        assert_eq!(pareto_select(&pts).unwrap(), 0);
        assert!((pts[0].distance_to_ideal() - 0.1414).abs() < 1e-4);
        assert!((pts[1].distance_to_ideal() - 0.5001).abs() < 1e-4);
    }

    #[test]
    fn dominated_point_never_selected() {
        let pts = [pt(0.1, 0.8, 0.8), pt(0.5, 0.9, 0.9)];
        assert_eq!(pareto_select(&pts).unwrap(), 1);
    }

    #[test]
    fn ties_prefer_fairness_then_small_alpha_then_small_gamma() {
        let pts = [pt(0.5, 0.8, 0.9), pt(0.5, 0.9, 0.8)];
        assert_eq!(pareto_select(&pts).unwrap(), 1);
        let pts = [pt(0.9, 0.9, 0.9), pt(0.01, 0.9, 0.9)];
        assert_eq!(pareto_select(&pts).unwrap(), 1);
        let mut a = pt(0.5, 0.9, 0.9);
        a.gamma = 1.0;
        let b = pt(0.5, 0.9, 0.9);
        assert_eq!(pareto_select(&[a, b]).unwrap(), 1);
    }

    #[test]
    fn frontier_marks_non_dominated_points() {
        let pts = [pt(0.1, 0.8, 0.8), pt(0.5, 0.9, 0.9), pt(0.9, 1.0, 0.5)];
        assert_eq!(pareto_frontier(&pts), vec![false, true, true]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(pareto_select(&[]), Err(Error::Empty(_))));
    }
}
