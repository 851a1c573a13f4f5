//! `run`: decodes one prompt with the selected method and writes its trace.

use serde::Serialize;
use sprinter_core::engine::{run_sd, run_sprinter, run_target_only, Totals};
use sprinter_core::RngStream;

use crate::commands::{build_verifier, load_pair};
use crate::config::{Config, DecodeMethod};
use crate::output::{out_path, write_report, write_text};
use crate::CliError;

#[derive(Serialize)]
struct RunReport<'a> {
    method: DecodeMethod,
    prompt: &'a str,
    completion: String,
    totals: &'a Totals,
    unverified_tail: bool,
    trace_file: String,
}

fn method_name(m: DecodeMethod) -> &'static str {
    match m {
        DecodeMethod::Sprinter => "sprinter",
        DecodeMethod::Sd => "sd",
        DecodeMethod::Target => "target",
    }
}

pub fn run(cfg: &Config) -> Result<(), CliError> {
    let d = &cfg.decode;
    let (draft, target) = load_pair(cfg)?;
    let vocab = draft.vocab();
    let prefix = vocab.encode(&d.prompt)?;
    let mut rng = RngStream::new(cfg.seed, 0);
    let trace = match d.method {
        DecodeMethod::Sprinter => {
            let verifier = build_verifier(cfg)?;
            run_sprinter(&draft, &target, &verifier, &prefix, d.max_new_tokens, &cfg.cost, &mut rng)?
        }
        DecodeMethod::Sd => run_sd(&draft, &target, &prefix, d.gamma, d.max_new_tokens, &cfg.cost, &mut rng)?,
        DecodeMethod::Target => run_target_only(&target, &prefix, d.max_new_tokens, &cfg.cost, &mut rng)?,
    };
    let completion = vocab.decode(&trace.tokens());
    let name = method_name(d.method);
    let trace_path = out_path(cfg, &format!("trace-{name}.jsonl"));
    write_text(&trace_path, &trace.to_jsonl())?;

    let t = &trace.totals;
    println!("{}{}", d.prompt, completion);
    println!(
        "{name}: {} tokens, {} draft / {} target / {} verifier calls, {} target positions, {} rounds, {} accepted draft tokens",
        t.tokens, t.draft_calls, t.target_calls, t.verifier_calls, t.target_positions, t.rounds, t.accepted_draft_tokens
    );
    println!("simulated time {:.4}, flops {:.4}", t.simulated_time, t.flops);
    if trace.unverified_tail {
        println!("note: the token budget ran out before the last draft token was verified");
    }
    let report = RunReport {
        method: d.method,
        prompt: &d.prompt,
        completion,
        totals: t,
        unverified_tail: trace.unverified_tail,
        trace_file: trace_path.display().to_string(),
    };
    let path = write_report(cfg, "run", &format!("run-{name}.json"), report)?;
    println!("trace: {}\nreport: {}", trace_path.display(), path.display());
    Ok(())
}
