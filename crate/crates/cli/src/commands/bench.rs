//! `bench`: compares speculative decoding, sequential verification and
//! target-only decoding over a prompt file.

use serde::Serialize;
use sprinter_core::harness::{benchmark, BenchConfig, BenchReport};
use sprinter_core::{Error, TokenId};

use crate::commands::{build_verifier, load_pair};
use crate::config::Config;
use crate::output::{out_path, read_text, write_report, write_text};
use crate::CliError;

#[derive(Serialize)]
struct BenchBody<'a> {
    bench: &'a BenchReport,
}

/// Leading `fraction` of a prompt, at least one token.
pub fn prompt_prefix(tokens: &[TokenId], fraction: f64) -> &[TokenId] {
    let n = ((tokens.len() as f64) * fraction).ceil() as usize;
    &tokens[..n.clamp(1, tokens.len())]
}

pub fn run(cfg: &Config) -> Result<(), CliError> {
    let (draft, target) = load_pair(cfg)?;
    let text = read_text(&cfg.bench.prompts, "prompt file")?;
    let prompts = text
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.is_empty())
        .map(|line| Ok(prompt_prefix(&draft.vocab().encode(line)?, cfg.bench.prefix_fraction).to_vec()))
        .collect::<Result<Vec<_>, Error>>()?;
    let d = &cfg.decode;
    let bcfg = BenchConfig {
        gamma: d.gamma,
        max_new_tokens: d.max_new_tokens,
        cost: cfg.cost,
        verifier: build_verifier(cfg)?,
    };
    let (report, _) = benchmark(&draft, &target, &prompts, &bcfg, cfg.seed)?;

    println!(
        "{} prompts, gamma {}, {} new tokens each",
        report.prompts, d.gamma, d.max_new_tokens
    );
    println!(
        "{:<12} {:>8} {:>10} {:>12} {:>9} {:>9} {:>9} {:>11}",
        "method", "tokens", "acc/round", "sim time", "speedup", "rouge1", "rougeL", "perplexity"
    );
    for r in &report.rows {
        println!(
            "{:<12} {:>8} {:>10.4} {:>12.2} {:>9.4} {:>9.4} {:>9.4} {:>11.4}",
            r.method.name(),
            r.tokens,
            r.avg_accepted_per_round,
            r.simulated_time,
            r.speedup,
            r.rouge1_f1,
            r.rougel_f1,
            r.perplexity
        );
    }
    println!("mean leading acceptable run of draft samples: {:.4}", report.r_profile.mean_r);

    let csv = out_path(cfg, "bench.csv");
    write_text(&csv, &report.to_csv())?;
    let path = write_report(cfg, "bench", "bench.json", BenchBody { bench: &report })?;
    println!("csv: {}\nreport: {}", csv.display(), path.display());
    Ok(())
}
