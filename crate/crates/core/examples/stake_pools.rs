//! A small holder's variance alone versus inside a pool.

use stake_equity::analytics::pool_gain;
use stake_equity::montecarlo::{run_experiment, ExperimentPlan, Scenario};
use stake_equity::rewards::constant_schedule;
use stake_equity::urn::PoolAssignment;

fn main() -> stake_equity::Result<()> {
    let schedule = constant_schedule(1000, 100.0, 1.0)?;
    let fractions = vec![0.1, 0.2, 0.7];
    let trials = 50_000;

    let solo = Scenario::HonestUrn {
        schedule: schedule.clone(),
        fractions: fractions.clone(),
        party: 0,
    };
    let pooled = Scenario::PooledUrn {
        schedule,
        pools: PoolAssignment::new(vec![0, 0, 1])?,
        fractions,
        party: 0,
    };
    let solo = run_experiment(&ExperimentPlan::new(trials, 5, solo))?;
    let pooled = run_experiment(&ExperimentPlan::new(trials, 5, pooled))?;
    println!("solo   Var = {:.6}", solo.sample_variance);
    println!("pooled Var = {:.6}", pooled.sample_variance);
    println!(
        "ratio {:.4}, predicted {:.4}",
        pooled.sample_variance / solo.sample_variance,
        pool_gain(0.1, 0.3)?
    );
    Ok(())
}
