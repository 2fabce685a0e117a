//! Runs one stress scenario and validates the map it leaves behind.
//!
//! Exit codes: 0 clean, 2 usage, 4 violations (report printed).

use std::process::ExitCode;

use clap::Parser;
use lfht::verify::{stress, Scenario, StressParams};

#[derive(Debug, Parser)]
#[command(about = "Stress the trie map and check its structure")]
struct Args {
    /// same-key-storm, reader-during-expansion, collider-cascade or
    /// mixed-random.
    #[arg(long)]
    scenario: Scenario,
    #[arg(long, default_value_t = 8)]
    threads: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Keys, reader probes or operations, depending on the scenario.
    #[arg(long)]
    size: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let params = StressParams {
        threads: args.threads,
        seed: args.seed,
        size: args.size.unwrap_or(args.scenario.default_size()),
    };
    let outcome = stress(args.scenario, params);
    println!("{outcome}");
    if outcome.is_clean() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    }
}
