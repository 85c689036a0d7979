//! The AM-1/AM-2 bounding urns against MO-4: means, the AM-2 closed form
//! and the empirical dominance check.

use stake_equity::adversary::StrategyParams;
use stake_equity::bounds::{am2_mean_closed_form, no_compounding_bound, BoundVariant};
use stake_equity::montecarlo::{dominance_check, run_experiment, ExperimentPlan, Scenario};
use stake_equity::rewards::constant_schedule;

fn main() -> stake_equity::Result<()> {
    let (slots, va0, s0, total) = (10_000, 1.0 / 3.0, 1.0, 0.5);
    let c = total / slots as f64;
    let trials = 5000;

    let bound = |variant| Scenario::AmBound {
        variant,
        slots,
        c,
        adversary_fraction: va0,
        initial_stake: s0,
    };
    let mo4 = Scenario::MoK {
        schedule: constant_schedule(slots, total, s0)?,
        params: StrategyParams::new(4, 1.0)?,
        adversary_fraction: va0,
    };
    let mo4 = run_experiment(&ExperimentPlan::new(trials, 3, mo4))?;
    let am1 = run_experiment(&ExperimentPlan::new(trials, 3, bound(BoundVariant::Am1)))?;
    let am2 = run_experiment(&ExperimentPlan::new(trials, 3, bound(BoundVariant::Am2)))?;

    let closed = am2_mean_closed_form(slots, c, va0, s0)?;
    println!("MO-4 mean {:.5}", mo4.mean);
    println!("AM-1 mean {:.5}", am1.mean);
    println!(
        "AM-2 mean {:.5} (closed form {:.5}, eta {:.4})",
        am2.mean, closed.expected_final_fraction, closed.eta
    );
    println!(
        "without compounding: {:.5}",
        no_compounding_bound(va0, closed.eta)?
    );

    for (name, a, b) in [("MO-4 <= AM-1", &mo4, &am1), ("AM-1 <= AM-2", &am1, &am2)] {
        let d = dominance_check(&a.ecdf, &b.ecdf);
        println!(
            "{name}: max violation {:.4} (noise {:.4}) -> {}",
            d.max_violation, d.noise_threshold, d.within_noise
        );
    }
    Ok(())
}
