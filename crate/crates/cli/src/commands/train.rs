use fairod_core::dataset::{standardize, LabeledDataset};
use fairod_core::losses::Variant;
use fairod_core::training::{fit_fairod, select_base, TrainedModel};

use crate::args::{Command, TrainArgs};
use crate::commands::{check_features, load_dataset, load_model, verify_treatment_parity, write_text, Run};
use crate::error::{CliError, CliResult};

pub fn run(a: TrainArgs) -> CliResult<Run> {
    let variant: Variant = a.variant.into();
    let cfg = a.model.to_config(variant, a.seed);
    cfg.validate()?;
    let ds = load_dataset(&a.data, &a.columns)?;
    let mut inputs = vec![a.data.clone()];

    let model = if variant == Variant::BaseOnly {
        if a.base.is_some() {
            return Err(CliError::usage("--base is not used with --variant base"));
        }
        let (x, standardizer) = standardize(&ds)?;
        let fit = select_base(&x, &cfg)?;
        TrainedModel {
            feature_names: ds.feature_names.clone(),
            standardizer,
            fit,
        }
    } else {
        let path = a.base.as_ref().ok_or_else(|| {
            CliError::usage(format!("--variant {variant} needs --base <model.json>"))
        })?;
        let base = load_model(path)?;
        check_features(&base, &ds, path)?;
        inputs.push(path.clone());
        let x = LabeledDataset {
            features: base.standardizer.transform(&ds.features)?,
            ..ds.clone()
        };
        let fit = fit_fairod(&x, &base.fit, &cfg)?;
        TrainedModel {
            feature_names: ds.feature_names.clone(),
            standardizer: base.standardizer.clone(),
            fit,
        }
    };

    if a.verify_treatment_parity {
        let rescored = model.score_raw(&ds.features)?;
        let same = rescored.len() == model.fit.scores.len()
            && rescored.iter().zip(&model.fit.scores).all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            return Err(CliError::Counterexample(
                "scores from the saved model differ from the training scores".into(),
            ));
        }
        verify_treatment_parity(&model, &ds)?;
    }

    write_text(&a.out, &(model.to_json()? + "\n"))?;
    if let Some(l) = model.fit.final_loss() {
        eprintln!(
            "{variant}: init seed {}, final loss {:.6} (base {:.6}, sp {:.6}, gf {:.6}) in {:.1}s",
            model.fit.init_seed, l.total, l.base, l.sp, l.gf, model.fit.elapsed_secs
        );
    }
    Ok(Run {
        inputs,
        outputs: vec![a.out.clone()],
        seed: Some(a.seed),
        primary: Some(a.out.clone()),
        failure: None,
        invocation: Command::Train(a),
    })
}
