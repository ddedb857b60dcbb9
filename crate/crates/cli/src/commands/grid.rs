use std::path::Path;

use fairod_core::dataset::LabeledDataset;
use fairod_core::evalmetrics::{build_report, HmConvention, ReportInputs};
use fairod_core::losses::Variant;
use fairod_core::training::{grid_search, pareto_frontier, pareto_select, Grid, GridCell, TrainedModel};

use crate::args::{AblateArgs, ColumnArgs, Command, GridArgs};
use crate::commands::{check_features, fmt_f64, load_dataset, load_model, write_csv, write_text, Run};
use crate::error::{CliError, CliResult};

/// The data transformed with the base model's standardizer.
fn prepare(data: &Path, base_path: &Path, cols: &ColumnArgs) -> CliResult<(LabeledDataset, LabeledDataset, TrainedModel)> {
    let ds = load_dataset(data, cols)?;
    let base = load_model(base_path)?;
    check_features(&base, &ds, base_path)?;
    let x = LabeledDataset {
        features: base.standardizer.transform(&ds.features)?,
        ..ds.clone()
    };
    Ok((ds, x, base))
}

/// Frontier membership per cell and the selected cell.
fn select(cells: &[GridCell]) -> CliResult<(Vec<bool>, usize)> {
    let (idx, points): (Vec<usize>, Vec<_>) = cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.point().map(|p| (i, p)))
        .unzip();
    if points.is_empty() {
        return Err(CliError::Numerical("no grid cell produced finite metrics".into()));
    }
    let mut frontier = vec![false; cells.len()];
    for (&i, on) in idx.iter().zip(pareto_frontier(&points)) {
        frontier[i] = on;
    }
    Ok((frontier, idx[pareto_select(&points)?]))
}

fn metric_cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "NA".into())
}

pub fn run_grid(mut a: GridArgs) -> CliResult<Run> {
    let variant: Variant = a.variant.into();
    if variant == Variant::BaseOnly {
        return Err(CliError::usage("grid search needs a fairness variant"));
    }
    let cfg = a.model.to_config(variant, a.seed);
    cfg.validate()?;
    let (ds, x, base) = prepare(&a.data, &a.base, &a.columns)?;
    let grid = Grid {
        alphas: a.alphas.clone(),
        gammas: a.gammas.clone(),
    };
    let cells = grid_search(&x, &base.fit, &grid, &cfg, a.jobs)?;
    let (frontier, chosen) = select(&cells)?;

    let header: Vec<String> = [
        "alpha", "gamma", "status", "fairness", "group_fidelity", "final_loss", "pareto", "selected", "error",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let m = c.metrics.as_ref();
            vec![
                fmt_f64(c.alpha),
                fmt_f64(c.gamma),
                if c.fit.is_ok() { "ok" } else { "failed" }.into(),
                metric_cell(m.and_then(|m| m.fairness.value())),
                metric_cell(m.and_then(|m| m.group_fidelity.value())),
                metric_cell(c.fit.as_ref().ok().and_then(|f| f.final_loss()).map(|l| l.total)),
                frontier[i].to_string(),
                (i == chosen).to_string(),
                c.fit.as_ref().err().map(|e| e.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(&a.out, &header, &rows)?;

    let selected_path = a.selected.get_or_insert_with(|| a.out.with_extension("selected.json")).clone();
    let fit = cells[chosen].fit.as_ref().expect("selected cells have a fit").clone();
    let model = TrainedModel {
        feature_names: ds.feature_names.clone(),
        standardizer: base.standardizer.clone(),
        fit,
    };
    write_text(&selected_path, &(model.to_json()? + "\n"))?;
    eprintln!(
        "selected alpha = {}, gamma = {} of {} cells",
        cells[chosen].alpha,
        cells[chosen].gamma,
        cells.len()
    );
    Ok(Run {
        inputs: vec![a.data.clone(), a.base.clone()],
        outputs: vec![a.out.clone(), selected_path],
        seed: Some(a.seed),
        primary: Some(a.out.clone()),
        failure: None,
        invocation: Command::Grid(a),
    })
}

pub fn run_ablate(a: AblateArgs) -> CliResult<Run> {
    let (ds, x, base) = prepare(&a.data, &a.base, &a.columns)?;
    let base_scores = base.score_raw(&ds.features)?;
    let flag_fraction = a.model.flag_fraction;
    let report = |name: &str, scores: &[f64], config| {
        build_report(ReportInputs {
            model: name.into(),
            scores,
            pv: &ds.pv,
            labels: ds.labels.as_deref(),
            base_scores: Some(&base_scores),
            flag_fraction,
            k: None,
            hm_convention: HmConvention::Standard,
            config,
        })
    };

    let mut rows = Vec::new();
    let mut header = None;
    for variant in [Variant::FairOd, Variant::FairOdL, Variant::FairOdC] {
        let cfg = a.model.to_config(variant, a.seed);
        cfg.validate()?;
        // γ does not enter the fairod_l objective, so one value suffices.
        let grid = match (a.fixed, variant) {
            (true, _) => Grid {
                alphas: vec![a.model.alpha],
                gammas: vec![a.model.gamma],
            },
            (false, Variant::FairOdL) => Grid {
                alphas: a.alphas.clone(),
                gammas: a.gammas.iter().take(1).copied().collect(),
            },
            (false, _) => Grid {
                alphas: a.alphas.clone(),
                gammas: a.gammas.clone(),
            },
        };
        let cells = grid_search(&x, &base.fit, &grid, &cfg, a.jobs)?;
        let (_, chosen) = select(&cells)?;
        let cell = &cells[chosen];
        let fit = cell.fit.as_ref().expect("selected cells have a fit");
        let r = report(variant.as_str(), &fit.scores, Some(serde_json::to_value(&fit.config)?))?;
        let gamma = if variant == Variant::FairOdL { "NA".into() } else { fmt_f64(cell.gamma) };
        rows.push(with_weights(r.csv_row(), fmt_f64(cell.alpha), gamma));
        header.get_or_insert_with(|| with_weights(r.csv_header(), "alpha".into(), "gamma".into()));
        eprintln!(
            "{variant}: alpha = {}, fairness {:?}, group fidelity {:?}",
            cell.alpha,
            r.fairness.value(),
            r.group_fidelity.value()
        );
    }
    let r = report("base", &base_scores, Some(serde_json::to_value(&base.fit.config)?))?;
    rows.push(with_weights(r.csv_row(), "NA".into(), "NA".into()));
    write_csv(&a.out, header.as_ref().expect("three variants ran"), &rows)?;

    Ok(Run {
        inputs: vec![a.data.clone(), a.base.clone()],
        outputs: vec![a.out.clone()],
        seed: Some(a.seed),
        primary: Some(a.out.clone()),
        failure: None,
        invocation: Command::Ablate(a),
    })
}

/// Inserts the α and γ columns after the model name.
fn with_weights(mut row: Vec<String>, alpha: String, gamma: String) -> Vec<String> {
    row.insert(1, alpha);
    row.insert(2, gamma);
    row
}
