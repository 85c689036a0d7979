//! Match-Override-k against an honest majority: adversarial stake gain over
//! total reward, plus a single traced run.

use stake_equity::adversary::{run_strategy_constant, StrategyParams};
use stake_equity::montecarlo::{derive_stream, run_experiment, ExperimentPlan, Scenario};
use stake_equity::rewards::constant_schedule;

fn main() -> stake_equity::Result<()> {
    let (slots, va0) = (10_000, 1.0 / 3.0);
    let mut rng = derive_stream(42, 0);
    let one = run_strategy_constant(
        slots,
        StrategyParams::new(4, 1.0)?,
        2.0 / slots as f64,
        va0,
        1.0,
        &mut rng,
    )?;
    println!(
        "one run, MO-4, gamma = 1, R = 2: stake {:.4}, block share {:.4}, {:?}",
        one.final_fraction_stake, one.final_fraction_blocks, one.action_counts
    );

    println!("\nE[v_A(T)]/v_A(0), 2000 trials:");
    println!("{:>6} {:>8} {:>8} {:>8}", "R/S0", "k=1", "k=4", "k=4 g=.5");
    for ratio in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let schedule = constant_schedule(slots, ratio, 1.0)?;
        let mut row = Vec::new();
        for (k, gamma) in [(1, 1.0), (4, 1.0), (4, 0.5)] {
            let scenario = Scenario::MoK {
                schedule: schedule.clone(),
                params: StrategyParams::new(k, gamma)?,
                adversary_fraction: va0,
            };
            row.push(run_experiment(&ExperimentPlan::new(2000, 7, scenario))?.mean / va0);
        }
        println!("{ratio:>6} {:>8.4} {:>8.4} {:>8.4}", row[0], row[1], row[2]);
    }
    Ok(())
}
