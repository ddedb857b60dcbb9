mod claims;
mod eval;
mod grid;
mod synth;
mod train;

use std::path::{Path, PathBuf};

use fairod_core::dataset::{load_csv_with, CsvOptions, LabeledDataset};
use fairod_core::training::TrainedModel;

use crate::args::{ColumnArgs, Command};
use crate::error::{CliError, CliResult};
use crate::manifest::{now, RunManifest};

/// What a finished command reports back for its manifest.
pub struct Run {
    /// The invocation with every default filled in.
    pub invocation: Command,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    /// Output the manifest is written next to; no manifest when absent.
    pub primary: Option<PathBuf>,
    /// Raised after the manifest is written, so failing checks still leave
    /// a replayable record.
    pub failure: Option<CliError>,
}

pub fn run(cmd: Command) -> CliResult<()> {
    let started_at = now();
    let run = match cmd {
        Command::Synth(a) => synth::run(a)?,
        Command::Train(a) => train::run(a)?,
        Command::Eval(a) => eval::run(a)?,
        Command::Grid(a) => grid::run_grid(a)?,
        Command::Ablate(a) => grid::run_ablate(a)?,
        Command::Claims(a) => claims::run(a)?,
        Command::Replay(a) => {
            let m = RunManifest::read(&a.manifest)?;
            if matches!(m.invocation, Command::Replay(_)) {
                return Err(CliError::usage("a manifest cannot record a replay"));
            }
            eprintln!("replaying {} from {}", m.invocation.name(), a.manifest.display());
            return run(m.invocation);
        }
    };
    if let Some(primary) = &run.primary {
        let manifest = RunManifest {
            invocation: run.invocation,
            inputs: run.inputs,
            outputs: run.outputs,
            seed: run.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at,
            finished_at: now(),
        };
        let path = manifest.write(primary)?;
        eprintln!("manifest: {}", path.display());
    }
    match run.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Loads a CSV; the label column is optional unless named explicitly.
pub fn load_dataset(path: &Path, cols: &ColumnArgs) -> CliResult<LabeledDataset> {
    let label_column = match &cols.label_column {
        Some(l) => Some(l.clone()),
        None => {
            let mut reader = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_path(path)
                .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
            let has_label = reader.headers()?.iter().any(|h| h == "label");
            has_label.then(|| "label".to_string())
        }
    };
    let opts = CsvOptions {
        pv_column: cols.pv_column.clone(),
        label_column,
        extra_pv_columns: cols.extra_pv_columns.clone(),
    };
    Ok(load_csv_with(path, &opts)?)
}

pub fn load_model(path: &Path) -> CliResult<TrainedModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read model {}: {e}", path.display())))?;
    TrainedModel::from_json(&text)
        .map_err(|e| CliError::data(format!("invalid model {}: {e}", path.display())))
}

pub fn check_features(model: &TrainedModel, ds: &LabeledDataset, what: &Path) -> CliResult<()> {
    if model.feature_names != ds.feature_names {
        return Err(CliError::data(format!(
            "{} was trained on features {:?} but the data has {:?}",
            what.display(),
            model.feature_names,
            ds.feature_names
        )));
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Scores the data, permutes the protected column, scores again and
/// demands bit-identical results.
pub fn verify_treatment_parity(model: &TrainedModel, ds: &LabeledDataset) -> CliResult<()> {
    let before = model.score_raw(&ds.features)?;
    let mut pv = ds.pv.clone();
    pv.reverse();
    let shift = (pv.len() / 3 + 1).min(pv.len());
    pv.rotate_left(shift);
    let permuted = ds.with_pv(pv)?;
    let after = model.score_raw(&permuted.features)?;
    if let Some(i) = (0..before.len()).find(|&i| before[i].to_bits() != after[i].to_bits()) {
        return Err(CliError::Counterexample(format!(
            "treatment parity violated: score of row {i} changed from {} to {} after permuting the protected column",
            before[i], after[i]
        )));
    }
    eprintln!(
        "treatment parity: {} scores bit-identical after permuting the protected column",
        before.len()
    );
    Ok(())
}

/// Shortest round-trip text for a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
