use fairod_core::evalmetrics::{build_report, ReportInputs};

use crate::args::{Command, EvalArgs};
use crate::commands::{
    check_features, fmt_f64, load_dataset, load_model, verify_treatment_parity, write_csv, write_text, Run,
};
use crate::error::CliResult;

pub fn run(mut a: EvalArgs) -> CliResult<Run> {
    let model = load_model(&a.model)?;
    let ds = load_dataset(&a.data, &a.columns)?;
    check_features(&model, &ds, &a.model)?;
    let mut inputs = vec![a.model.clone(), a.data.clone()];

    if a.verify_treatment_parity {
        verify_treatment_parity(&model, &ds)?;
    }
    let scores = model.score_raw(&ds.features)?;
    let base_scores = match &a.base {
        Some(path) => {
            let base = load_model(path)?;
            check_features(&base, &ds, path)?;
            inputs.push(path.clone());
            Some(base.score_raw(&ds.features)?)
        }
        None => None,
    };

    let flag_fraction = *a.flag_fraction.get_or_insert(model.fit.config.flag_fraction);
    let summary = a.summary.get_or_insert_with(|| a.out.with_extension("csv")).clone();
    let report = build_report(ReportInputs {
        model: model.fit.variant.as_str().into(),
        scores: &scores,
        pv: &ds.pv,
        labels: ds.labels.as_deref(),
        base_scores: base_scores.as_deref(),
        flag_fraction,
        k: a.k,
        hm_convention: a.hm.into(),
        config: Some(serde_json::to_value(&model.fit.config)?),
    })?;

    write_text(&a.out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    write_csv(&summary, &report.csv_header(), &[report.csv_row()])?;
    let mut outputs = vec![a.out.clone(), summary];
    if let Some(path) = &a.scores_out {
        let rows: Vec<Vec<String>> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| vec![i.to_string(), fmt_f64(*s)])
            .collect();
        write_csv(path, &["row".into(), "score".into()], &rows)?;
        outputs.push(path.clone());
    }
    eprintln!(
        "{}: fairness {:?}, group fidelity {:?}",
        report.model,
        report.fairness.value(),
        report.group_fidelity.value()
    );
    Ok(Run {
        inputs,
        outputs,
        seed: None,
        primary: Some(a.out.clone()),
        failure: None,
        invocation: Command::Eval(a),
    })
}
