//! Simulates a 1/3 holder under constant rewards, geometric rewards and the
//! proof-of-work baseline, and compares each histogram to its reference law.

use stake_equity::montecarlo::{
    beta_cdf, ks_distance, ks_distance_with_left_limits, run_experiment, ExperimentPlan,
    PowFractionLaw, Scenario,
};
use stake_equity::rewards::{constant_schedule, geometric_schedule};

fn main() -> stake_equity::Result<()> {
    let (slots, total, v) = (1000, 1000.0, 1.0 / 3.0);
    let fractions = vec![v, 1.0 - v];
    let trials = 20_000;

    let constant = Scenario::HonestUrn {
        schedule: constant_schedule(slots, total, 1.0)?,
        fractions: fractions.clone(),
        party: 0,
    };
    let constant = run_experiment(&ExperimentPlan::new(trials, 1, constant))?;
    let ks = ks_distance(&constant.ecdf, beta_cdf(v, 1.0 - v)?)?;
    println!(
        "constant : mean {:.4}, var {:.4}, KS to Beta(1/3,2/3) {ks:.4}",
        constant.mean, constant.sample_variance
    );

    let geometric = Scenario::HonestUrn {
        schedule: geometric_schedule(slots, total, 1.0)?,
        fractions: fractions.clone(),
        party: 0,
    };
    let agg = run_experiment(&ExperimentPlan::new(trials, 1, geometric))?;
    println!(
        "geometric: mean {:.4}, var {:.4}",
        agg.mean, agg.sample_variance
    );

    let pow = Scenario::PowBaseline {
        slots,
        per_block: total / slots as f64,
        initial_stake: 1.0,
        fractions,
        party: 0,
    };
    let agg = run_experiment(&ExperimentPlan::new(trials, 1, pow))?;
    let law = PowFractionLaw::new(slots, 1.0, 1.0, v)?;
    let ks = ks_distance_with_left_limits(&agg.ecdf, |x| law.cdf(x), |x| law.cdf_left(x))?;
    println!(
        "pow      : mean {:.4}, var {:.6}, KS to binomial law {ks:.4}",
        agg.mean, agg.sample_variance
    );

    println!("\nconstant-reward histogram (10 bins):");
    for (i, bin) in constant.histogram.counts.chunks(10).enumerate() {
        let count: u64 = bin.iter().sum();
        println!(
            "  [{:.1}, {:.1}) {}",
            i as f64 / 10.0,
            (i + 1) as f64 / 10.0,
            "#".repeat((count / 200) as usize)
        );
    }
    Ok(())
}
