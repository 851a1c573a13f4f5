//! Experiment harness.
//!
//! Monte Carlo checks of the closed forms in [`crate::theory`], the ROUGE
//! quality metric, and the benchmark that compares the decoders on a model
//! pair. Every randomized routine takes a seed and derives one stream per
//! trial or chunk, so results are reproducible regardless of thread count.

mod bench;
mod checks;
mod consistency;
mod curves;
mod rouge;
mod rscenario;

pub use bench::{
    benchmark, r_profile, BenchConfig, BenchReport, BenchTraces, MethodRow, RProfile, BENCH_CSV_HEADER,
    BENCH_SCHEMA_VERSION,
};
pub use checks::{
    check_acceptance_rate, check_consistency, check_flops, check_grid, check_token_distribution, reference_flops_comparison,
    CheckOutcome, FlopsComparison, SuiteConfig, REFERENCE_DRAFT_FLOPS_PER_TOKEN, REFERENCE_TARGET_FLOPS_PER_TOKEN,
};
pub use consistency::{
    random_battery, sd_single_token, sprinter_single_token, validate_acceptance_rate, validate_token_distribution,
    AcceptanceCheck, TokenDistributionCheck, MIN_SAMPLES,
};
pub use curves::{
    curves_to_csv, sweep_theory_curves, token_count_variance, validate_r_grid, CurveRow, GridConfig, GridReport,
    CURVE_CSV_HEADER,
};
pub use rouge::{rouge, RougeScore, RougeVariant};
pub use rscenario::{simulate_r_scenario, RScenario, RScenarioStats};
