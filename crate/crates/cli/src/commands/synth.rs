use fairod_core::dataset::{make_synth1, make_synth2_with, save_csv, Synth2Options};

use crate::args::{Command, SynthArgs, SynthName};
use crate::commands::Run;
use crate::error::CliResult;

pub fn run(a: SynthArgs) -> CliResult<Run> {
    let ds = match a.name {
        SynthName::Synth1 => make_synth1(a.major, a.minor, a.outliers, a.seed)?,
        SynthName::Synth2 => make_synth2_with(
            a.major,
            a.minor,
            a.outliers,
            a.seed,
            Synth2Options {
                x1_inlier_std: a.x1_std,
            },
        )?,
    };
    save_csv(&ds, &a.out)?;
    eprintln!("wrote {} rows to {}", ds.len(), a.out.display());
    Ok(Run {
        inputs: vec![],
        outputs: vec![a.out.clone()],
        seed: Some(a.seed),
        primary: Some(a.out.clone()),
        failure: None,
        invocation: Command::Synth(a),
    })
}
