//! Random vs Active PETs vs Active PETs-o on a skewed synthetic pool with a
//! six-member mock committee.
//!
//! cargo run --release --example mock_experiment -- [budget] [seeds]

use std::time::Instant;

use active_pets::runner::analysis::summarize;
use active_pets::runner::{Experiment, ExperimentConfig, Strategy};
use active_pets::synthetic::SyntheticSpec;
use active_pets::Pool;

fn main() -> active_pets::Result<()> {
    let mut args = std::env::args().skip(1);
    let budget: usize = args.next().map_or(300, |a| a.parse().expect("budget"));
    let seeds: u64 = args.next().map_or(10, |a| a.parse().expect("seeds"));

    let pool = Pool::new(SyntheticSpec::skewed(3000, [0.15, 0.80, 0.05], 7).generate())?;
    let test = SyntheticSpec::balanced(150, 8)
        .with_prefix("test")
        .generate();
    println!("pool: {}", pool.stats(active_pets::Partition::Unlabelled));

    let mut curves = Vec::new();
    for strategy in [
        Strategy::Random,
        Strategy::ActivePets,
        Strategy::ActivePetsO,
    ] {
        let config = ExperimentConfig {
            strategy,
            budget_max: budget,
            seeds: (123..123 + seeds).collect(),
            record_wall_time: false,
            ..Default::default()
        };
        let t = Instant::now();
        let report = Experiment::new(config)?.run_on(&pool, &test)?;
        let summary = summarize(&report.rows);
        let last = summary.last().expect("budget > 0");
        println!(
            "{strategy:>13}: {:.1}s  final unique {:.3?}  weighted {:.3?}  f1 {:.3}",
            t.elapsed().as_secs_f64(),
            last.unique,
            last.weighted,
            last.macro_f1
        );
        curves.push(summary);
    }

    println!("\nbudget  random  active_pets  active_pets_o");
    for ((r, a), o) in curves[0].iter().zip(&curves[1]).zip(&curves[2]) {
        println!(
            "{:>6}  {:.3}   {:.3}        {:.3}",
            r.budget, r.macro_f1, a.macro_f1, o.macro_f1
        );
    }
    Ok(())
}
