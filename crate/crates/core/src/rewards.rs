//! Block reward schedules.
//!
//! A schedule dispenses a total reward `R` over `T` block slots on top of an
//! initial stake `S(0)`. Every constructor computes the cumulative stake
//! `S(n)` from its closed form and derives the per-slot reward `r(n)` as
//! `S(n) - S(n-1)`, so nothing accumulates rounding error over long
//! horizons. The final cumulative value is pinned to `S(0) + R`.

use std::io::Write;

use crate::format::sig;
use crate::{Error, Result};

/// Relative tolerance for the `S(n) = S(n-1) + r(n)` bookkeeping invariant.
pub const CUMULATIVE_TOLERANCE: f64 = 1e-9;

/// Per-slot rewards `r(1..=T)` together with the cumulative stake curve
/// `S(0..=T)`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSchedule {
    initial_stake: f64,
    per_slot: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RewardSchedule {
    /// Builds a schedule from arbitrary nonnegative per-slot rewards.
    pub fn from_rewards(initial_stake: f64, per_slot: Vec<f64>) -> Result<Self> {
        check_initial_stake(initial_stake)?;
        if per_slot.is_empty() {
            return Err(Error::invalid("schedule needs at least one slot"));
        }
        if let Some(bad) = per_slot.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::invalid(format!(
                "per-slot reward {bad} is not a nonnegative number"
            )));
        }
        let mut cumulative = Vec::with_capacity(per_slot.len() + 1);
        cumulative.push(initial_stake);
        let mut total = initial_stake;
        for r in &per_slot {
            total += r;
            cumulative.push(total);
        }
        Ok(Self {
            initial_stake,
            per_slot,
            cumulative,
        })
    }

    /// Builds a schedule from its cumulative curve `S(0..=T)`.
    fn from_cumulative(cumulative: Vec<f64>) -> Self {
        let per_slot = cumulative
            .windows(2)
            .map(|w| (w[1] - w[0]).max(0.0))
            .collect();
        Self {
            initial_stake: cumulative[0],
            per_slot,
            cumulative,
        }
    }

    /// Number of block slots `T`.
    pub fn slots(&self) -> usize {
        self.per_slot.len()
    }

    pub fn initial_stake(&self) -> f64 {
        self.initial_stake
    }

    /// Reward of slot `n`, 1-based.
    pub fn reward(&self, n: usize) -> f64 {
        self.per_slot[n - 1]
    }

    pub fn per_slot(&self) -> &[f64] {
        &self.per_slot
    }

    /// `S(0..=T)`.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn final_stake(&self) -> f64 {
        *self.cumulative.last().expect("nonempty cumulative curve")
    }

    /// `R = S(T) - S(0)`.
    pub fn total_reward(&self) -> f64 {
        self.final_stake() - self.initial_stake
    }

    /// Per-slot log growth `log(S(n)/S(n-1))`, computed as `log1p(r(n)/S(n-1))`
    /// so that tiny rewards keep full precision.
    pub fn log_growth(&self) -> impl Iterator<Item = f64> + '_ {
        self.per_slot
            .iter()
            .zip(&self.cumulative)
            .map(|(r, prev)| (r / prev).ln_1p())
    }

    /// Checks the bookkeeping invariants. Constructors uphold them; this is
    /// exposed for schedules assembled elsewhere and for tests.
    pub fn validate(&self) -> Result<()> {
        if self.cumulative.len() != self.per_slot.len() + 1 {
            return Err(Error::invalid("cumulative curve must have T+1 entries"));
        }
        for (n, r) in self.per_slot.iter().enumerate() {
            if *r < 0.0 {
                return Err(Error::invalid(format!("negative reward at slot {}", n + 1)));
            }
            let expected = self.cumulative[n] + r;
            let got = self.cumulative[n + 1];
            if ((got - expected) / expected).abs() > CUMULATIVE_TOLERANCE {
                return Err(Error::invalid(format!(
                    "cumulative curve drifts at slot {}",
                    n + 1
                )));
            }
        }
        Ok(())
    }

    /// Writes the schedule as CSV: `slot,reward,cumulative_stake`, one row per
    /// slot `1..=T`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "slot,reward,cumulative_stake")?;
        for (n, (r, s)) in self.per_slot.iter().zip(&self.cumulative[1..]).enumerate() {
            writeln!(out, "{},{},{}", n + 1, sig(*r), sig(*s))?;
        }
        Ok(())
    }
}

/// End of a reward interval: `R_i` tokens are dispensed over slots
/// `T_{i-1}+1 ..= T_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub end_slot: usize,
    pub interval_reward: f64,
}

impl Checkpoint {
    pub fn new(end_slot: usize, interval_reward: f64) -> Self {
        Self {
            end_slot,
            interval_reward,
        }
    }
}

/// Parameters of the decreasing family `r(n) = α(M - S(n-1) + S(0))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecreasingRewardParams {
    alpha: f64,
    target_total: f64,
}

impl DecreasingRewardParams {
    pub fn new(alpha: f64, target_total: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!(
                "decay alpha must lie in (0,1), got {alpha}"
            )));
        }
        check_total(target_total)?;
        Ok(Self {
            alpha,
            target_total,
        })
    }

    /// The customary decay `α = 1/T`.
    pub fn with_default_alpha(slots: usize, target_total: f64) -> Result<Self> {
        if slots < 2 {
            // α = 1 degenerates; a single slot pays everything at once anyway.
            return Self::new(0.5, target_total);
        }
        Self::new(1.0 / slots as f64, target_total)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn target_total(&self) -> f64 {
        self.target_total
    }

    /// Asymptotic supply cap `M = R / (1 - (1-α)^T)`.
    pub fn supply_cap(&self, slots: usize) -> f64 {
        let remaining = (slots as f64 * (-self.alpha).ln_1p()).exp_m1();
        self.target_total / -remaining
    }
}

fn check_initial_stake(s0: f64) -> Result<()> {
    if !(s0.is_finite() && s0 > 0.0) {
        return Err(Error::invalid(format!(
            "initial stake must be positive, got {s0}"
        )));
    }
    Ok(())
}

fn check_total(r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::invalid(format!(
            "total reward must be nonnegative, got {r}"
        )));
    }
    Ok(())
}

fn check_slots(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::invalid("number of slots must be positive"));
    }
    Ok(())
}

/// `r(n) = R/T` for every slot.
pub fn constant_schedule(slots: usize, total: f64, initial_stake: f64) -> Result<RewardSchedule> {
    check_slots(slots)?;
    check_total(total)?;
    check_initial_stake(initial_stake)?;
    let t = slots as f64;
    let mut cumulative: Vec<f64> = (0..=slots)
        .map(|n| initial_stake + n as f64 * total / t)
        .collect();
    cumulative[slots] = initial_stake + total;
    let per_slot = vec![total / t; slots];
    Ok(RewardSchedule {
        initial_stake,
        per_slot,
        cumulative,
    })
}

/// Constant growth ratio `S(n)/S(n-1) = (1 + R/S(0))^{1/T}`.
pub fn geometric_schedule(slots: usize, total: f64, initial_stake: f64) -> Result<RewardSchedule> {
    composed_schedule(&[Checkpoint::new(slots, total)], initial_stake)
}

/// Geometric growth applied independently inside each checkpoint interval.
///
/// With a single checkpoint this is exactly [`geometric_schedule`].
pub fn composed_schedule(checkpoints: &[Checkpoint], initial_stake: f64) -> Result<RewardSchedule> {
    check_initial_stake(initial_stake)?;
    if checkpoints.is_empty() {
        return Err(Error::invalid("at least one checkpoint is required"));
    }
    let mut prev_end = 0;
    for cp in checkpoints {
        if cp.end_slot <= prev_end {
            return Err(Error::invalid(format!(
                "checkpoint end slots must strictly increase ({} after {prev_end})",
                cp.end_slot
            )));
        }
        check_total(cp.interval_reward)?;
        prev_end = cp.end_slot;
    }

    let mut cumulative = Vec::with_capacity(prev_end + 1);
    cumulative.push(initial_stake);
    let mut start = 0;
    let mut start_stake = initial_stake;
    let mut dispensed = 0.0;
    for cp in checkpoints {
        dispensed += cp.interval_reward;
        let end_stake = initial_stake + dispensed;
        fill_geometric_segment(&mut cumulative, start, cp.end_slot, start_stake, end_stake);
        start = cp.end_slot;
        start_stake = end_stake;
    }
    Ok(RewardSchedule::from_cumulative(cumulative))
}

/// Appends `S(start+1..=end)` growing geometrically from `s_start` to `s_end`.
fn fill_geometric_segment(
    cumulative: &mut Vec<f64>,
    start: usize,
    end: usize,
    s_start: f64,
    s_end: f64,
) {
    let len = (end - start) as f64;
    let log_ratio = (s_end / s_start).ln();
    for n in start + 1..end {
        let frac = (n - start) as f64 / len;
        cumulative.push(s_start * (frac * log_ratio).exp());
    }
    cumulative.push(s_end);
}

/// Monero-style decreasing rewards `r(n) = α(1-α)^{n-1} M`.
pub fn decreasing_schedule(
    slots: usize,
    params: DecreasingRewardParams,
    initial_stake: f64,
) -> Result<RewardSchedule> {
    check_slots(slots)?;
    check_initial_stake(initial_stake)?;
    let alpha = params.alpha;
    let cap = params.supply_cap(slots);
    let log_keep = (-alpha).ln_1p();
    let per_slot: Vec<f64> = if cap == 0.0 {
        vec![0.0; slots]
    } else {
        (1..=slots)
            .map(|n| alpha * cap * ((n - 1) as f64 * log_keep).exp())
            .collect()
    };
    let cumulative: Vec<f64> = (0..=slots)
        .map(|n| initial_stake - cap * (n as f64 * log_keep).exp_m1())
        .collect();
    Ok(RewardSchedule {
        initial_stake,
        per_slot,
        cumulative,
    })
}

/// Bitcoin's halving checkpoints: 210,000-block intervals starting at 50
/// tokens per block, halving each interval.
pub fn bitcoin_halving_checkpoints(intervals: usize) -> Vec<Checkpoint> {
    const INTERVAL: usize = 210_000;
    (1..=intervals)
        .map(|i| {
            let per_block = 50.0 / f64::powi(2.0, i as i32 - 1);
            Checkpoint::new(INTERVAL * i, per_block * INTERVAL as f64)
        })
        .collect()
}

/// Bitcoin's piecewise-constant schedule over the given halving checkpoints.
pub fn piecewise_constant_schedule(
    checkpoints: &[Checkpoint],
    initial_stake: f64,
) -> Result<RewardSchedule> {
    let mut per_slot = Vec::new();
    let mut prev_end = 0;
    for cp in checkpoints {
        if cp.end_slot <= prev_end {
            return Err(Error::invalid(
                "checkpoint end slots must strictly increase",
            ));
        }
        let len = cp.end_slot - prev_end;
        per_slot.extend(std::iter::repeat_n(cp.interval_reward / len as f64, len));
        prev_end = cp.end_slot;
    }
    RewardSchedule::from_rewards(initial_stake, per_slot)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn constant_examples() {
        let s = constant_schedule(1000, 1000.0, 1.0).unwrap();
        assert!(s.per_slot().iter().all(|&r| r == 1.0));
        assert_eq!(s.final_stake(), 1001.0);

        let z = constant_schedule(5, 0.0, 1.0).unwrap();
        assert!(z.per_slot().iter().all(|&r| r == 0.0));
        assert!(z.cumulative().iter().all(|&s| s == 1.0));

        let h = constant_schedule(4, 2.0, 2.0).unwrap();
        assert_eq!(h.per_slot(), &[0.5; 4]);
        assert_eq!(h.cumulative(), &[2.0, 2.5, 3.0, 3.5, 4.0]);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(constant_schedule(0, 1.0, 1.0).is_err());
        assert!(constant_schedule(3, 1.0, 0.0).is_err());
        assert!(geometric_schedule(3, -1.0, 1.0).is_err());
        assert!(DecreasingRewardParams::new(0.0, 1.0).is_err());
        assert!(DecreasingRewardParams::new(1.0, 1.0).is_err());
        assert!(
            composed_schedule(&[Checkpoint::new(4, 1.0), Checkpoint::new(4, 1.0)], 1.0).is_err()
        );
        assert!(composed_schedule(&[], 1.0).is_err());
    }

    #[test]
    fn geometric_examples() {
        let one = geometric_schedule(1, 5.0, 1.0).unwrap();
        assert_eq!(one, constant_schedule(1, 5.0, 1.0).unwrap());

        let two = geometric_schedule(2, 3.0, 1.0).unwrap();
        assert!(close(two.reward(1), 1.0, 1e-12));
        assert!(close(two.reward(2), 2.0, 1e-12));

        let big = geometric_schedule(1000, 1000.0, 1.0).unwrap();
        let ratio = 1001f64.powf(1e-3);
        assert!((ratio - 1.006933).abs() < 1e-6);
        for w in big.cumulative().windows(2) {
            assert!(close(w[1] / w[0], ratio, 1e-12));
        }
    }

    #[test]
    fn composed_examples() {
        let single = composed_schedule(&[Checkpoint::new(10, 5.0)], 1.0).unwrap();
        assert_eq!(single, geometric_schedule(10, 5.0, 1.0).unwrap());

        let two =
            composed_schedule(&[Checkpoint::new(2, 1.0), Checkpoint::new(4, 2.0)], 1.0).unwrap();
        let expected = [1.0, 2f64.sqrt(), 2.0, 8f64.sqrt(), 4.0];
        for (got, want) in two.cumulative().iter().zip(expected) {
            assert!(close(*got, want, 1e-12), "{got} vs {want}");
        }
        assert_eq!(two.final_stake(), 4.0);
    }

    #[test]
    fn decreasing_examples() {
        let p = DecreasingRewardParams::new(0.5, 3.0).unwrap();
        assert!(close(p.supply_cap(1), 6.0, 1e-12));
        let s = decreasing_schedule(1, p, 1.0).unwrap();
        assert!(close(s.reward(1), 3.0, 1e-12));

        let p = DecreasingRewardParams::new(0.5, 7.0).unwrap();
        assert!(close(p.supply_cap(3), 8.0, 1e-12));
        let s = decreasing_schedule(3, p, 1.0).unwrap();
        for (got, want) in s.per_slot().iter().zip([4.0, 2.0, 1.0]) {
            assert!(close(*got, want, 1e-12));
        }
        for (got, want) in s.cumulative().iter().zip([1.0, 5.0, 7.0, 8.0]) {
            assert!(close(*got, want, 1e-12));
        }
        s.validate().unwrap();

        let d = DecreasingRewardParams::with_default_alpha(200, 10.0).unwrap();
        assert_eq!(d.alpha(), 1.0 / 200.0);
    }

    #[test]
    fn csv_layout() {
        let s = constant_schedule(2, 1.0, 1.0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "slot,reward,cumulative_stake\n1,0.5,1.5\n2,0.5,2\n"
        );
    }

    #[test]
    fn bitcoin_example_checkpoints() {
        let cps = bitcoin_halving_checkpoints(3);
        assert_eq!(cps[0], Checkpoint::new(210_000, 50.0 * 210_000.0));
        assert_eq!(cps[2], Checkpoint::new(630_000, 12.5 * 210_000.0));
        let pw = piecewise_constant_schedule(&cps, 1.0).unwrap();
        assert_eq!(pw.reward(1), 50.0);
        assert_eq!(pw.reward(210_001), 25.0);
        let geo = composed_schedule(&cps, 1.0).unwrap();
        assert!(close(geo.final_stake(), pw.final_stake(), 1e-12));
    }
}
