//! Builds each reward family over the same budget and prints how the
//! rewards are spread across the horizon.

use stake_equity::rewards::{
    bitcoin_halving_checkpoints, composed_schedule, constant_schedule, decreasing_schedule,
    geometric_schedule, piecewise_constant_schedule, DecreasingRewardParams,
};

fn main() -> stake_equity::Result<()> {
    let (slots, total, s0) = (1000, 1000.0, 1.0);
    let families = [
        ("constant", constant_schedule(slots, total, s0)?),
        ("geometric", geometric_schedule(slots, total, s0)?),
        (
            "decreasing",
            decreasing_schedule(
                slots,
                DecreasingRewardParams::with_default_alpha(slots, total)?,
                s0,
            )?,
        ),
    ];
    println!(
        "{:<11} {:>12} {:>12} {:>12} {:>12}",
        "family", "r(1)", "r(T/2)", "r(T)", "S(T)"
    );
    for (name, s) in &families {
        println!(
            "{name:<11} {:>12.5} {:>12.5} {:>12.5} {:>12.3}",
            s.reward(1),
            s.reward(slots / 2),
            s.reward(slots),
            s.final_stake()
        );
    }

    // Bitcoin's first four halving intervals, geometric inside each interval.
    let checkpoints = bitcoin_halving_checkpoints(4);
    let s0 = 50.0;
    let geo = composed_schedule(&checkpoints, s0)?;
    let flat = piecewise_constant_schedule(&checkpoints, s0)?;
    println!("\nhalving interval ends (geometric within intervals vs Bitcoin):");
    for cp in &checkpoints {
        let n = cp.end_slot;
        println!(
            "  slot {n:>7}: S = {:.6e} vs {:.6e}",
            geo.cumulative()[n],
            flat.cumulative()[n]
        );
    }
    Ok(())
}
