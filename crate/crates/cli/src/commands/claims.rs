use serde::Serialize;

use fairod_core::claimcheck::{verify_claim1, verify_claim2, ClaimVerdict};

use crate::args::{ClaimsArgs, Command};
use crate::commands::{write_text, Run};
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct ClaimsReport {
    max_n: usize,
    holds: bool,
    claims: Vec<ClaimVerdict>,
}

pub fn run(a: ClaimsArgs) -> CliResult<Run> {
    let claims = vec![verify_claim1(a.max_n)?, verify_claim2(a.max_n)?];
    let holds = claims.iter().all(ClaimVerdict::holds);
    for v in &claims {
        eprintln!(
            "{:?}: {} populations, {} meet all premises, {} counterexamples, {} witnesses",
            v.claim,
            v.populations_checked,
            v.premises.all_premises,
            v.counterexamples.len(),
            v.witness_count
        );
    }
    let text = serde_json::to_string_pretty(&ClaimsReport {
        max_n: a.max_n,
        holds,
        claims,
    })? + "\n";
    match &a.out {
        Some(path) => write_text(path, &text)?,
        None => print!("{text}"),
    }
    let failure = (!holds).then(|| CliError::Counterexample("counterexample found".into()));
    Ok(Run {
        inputs: vec![],
        outputs: a.out.iter().cloned().collect(),
        seed: None,
        primary: a.out.clone(),
        failure,
        invocation: Command::Claims(a),
    })
}
