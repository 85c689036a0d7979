//! Exact equitability of the three families, the design calculator, and
//! the curves behind the variance and budget plots.

use stake_equity::analytics::{
    design_constant, design_geometric, equitability_report, normalized_variance_constant,
    normalized_variance_decreasing, normalized_variance_geometric, write_max_reward_curves,
};
use stake_equity::rewards::{geometric_schedule, DecreasingRewardParams};

fn main() -> stake_equity::Result<()> {
    let (total, s0) = (1000.0, 1.0);
    println!("normalized variance for R = {total}:");
    println!(
        "{:>7} {:>10} {:>10} {:>10}",
        "T", "constant", "geometric", "decreasing"
    );
    for slots in [10, 100, 1000, 10_000, 100_000] {
        let dec = DecreasingRewardParams::with_default_alpha(slots, total)?;
        println!(
            "{slots:>7} {:>10.5} {:>10.5} {:>10.5}",
            normalized_variance_constant(slots, total, s0),
            normalized_variance_geometric(slots, total, s0),
            normalized_variance_decreasing(slots, dec, s0),
        );
    }

    let report = equitability_report(
        &geometric_schedule(1000, total, s0)?,
        &[1.0 / 3.0, 2.0 / 3.0],
    );
    println!(
        "\ngeometric, T = 1000: epsilon = {:.5}",
        report.epsilon_tilde
    );
    for (v, var) in [1.0 / 3.0, 2.0 / 3.0]
        .iter()
        .zip(&report.per_party_variance)
    {
        println!("  v0 = {v:.3}: Var(v(T)) = {var:.6}");
    }

    println!("\nlargest budget for epsilon = 0.1:");
    for slots in [100, 1000, 10_000] {
        let g = design_geometric(slots, 0.1)?;
        let c = design_constant(slots, 0.1)?;
        println!(
            "  T = {slots:>6}: geometric R = {:.4e} (achieves {:.4}), constant R = {:.2} (achieves {:.4})",
            g.max_reward, g.achieved_normalized_variance, c.max_reward, c.achieved_normalized_variance
        );
    }

    println!();
    write_max_reward_curves(std::io::stdout(), &[100, 400, 1600, 6400], 0.1)?;
    Ok(())
}
