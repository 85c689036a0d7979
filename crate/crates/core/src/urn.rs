//! The honest stake process.
//!
//! Every slot elects one proposer with probability equal to its current
//! fractional stake, and the slot's reward is added to the winner's stake.
//! This is a Pólya urn whose replacement count varies over time.
//!
//! Exactly one uniform variate is consumed per slot, including when only one
//! party holds stake, so the random stream stays aligned across
//! configurations.

use rand::Rng;

use crate::rewards::RewardSchedule;
use crate::{Error, Result};

const FRACTION_TOLERANCE: f64 = 1e-9;

/// Per-party stakes at a given slot.
#[derive(Debug, Clone, PartialEq)]
pub struct UrnState {
    stakes: Vec<f64>,
    total: f64,
    slot: usize,
}

impl UrnState {
    pub fn new(stakes: Vec<f64>) -> Result<Self> {
        if stakes.is_empty() {
            return Err(Error::invalid("at least one party is required"));
        }
        if stakes.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::invalid("stakes must be nonnegative"));
        }
        let total: f64 = stakes.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("total stake must be positive"));
        }
        Ok(Self {
            stakes,
            total,
            slot: 0,
        })
    }

    /// Parties holding `initial_stake * fractions[i]`.
    pub fn from_fractions(initial_stake: f64, fractions: &[f64]) -> Result<Self> {
        check_fractions(fractions)?;
        Self::new(fractions.iter().map(|v| initial_stake * v).collect())
    }

    pub fn stakes(&self) -> &[f64] {
        &self.stakes
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn parties(&self) -> usize {
        self.stakes.len()
    }

    pub fn fraction(&self, party: usize) -> f64 {
        self.stakes[party] / self.total
    }

    pub fn fractions(&self) -> Vec<f64> {
        self.stakes.iter().map(|s| s / self.total).collect()
    }

    /// Credits `reward` to the elected leader and returns its index.
    pub fn step_mut(&mut self, reward: f64, draw: f64) -> usize {
        let winner = select_by_weight(&self.stakes, self.total, draw);
        self.stakes[winner] += reward;
        self.total += reward;
        self.slot += 1;
        winner
    }

    /// Functional form of [`UrnState::step_mut`].
    pub fn step(&self, reward: f64, draw: f64) -> Self {
        let mut next = self.clone();
        next.step_mut(reward, draw);
        next
    }
}

/// Inverse-CDF selection: the smallest index whose running weight exceeds
/// `draw * total`.
pub(crate) fn select_by_weight(weights: &[f64], total: f64, draw: f64) -> usize {
    let target = draw * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if acc > target {
            return i;
        }
    }
    // Only reachable through rounding when draw is just below 1.
    weights
        .iter()
        .rposition(|w| *w > 0.0)
        .unwrap_or(weights.len() - 1)
}

pub(crate) fn check_fractions(fractions: &[f64]) -> Result<()> {
    if fractions.is_empty() {
        return Err(Error::invalid("at least one party is required"));
    }
    if fractions
        .iter()
        .any(|v| !(v.is_finite() && *v >= 0.0 && *v <= 1.0))
    {
        return Err(Error::invalid("fractions must lie in [0,1]"));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > FRACTION_TOLERANCE {
        return Err(Error::invalid(format!(
            "fractions must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

/// Outcome of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub final_fractions: Vec<f64>,
    /// Blocks won per proposer. For pooled runs the proposers are the pools.
    pub winner_counts: Vec<u64>,
}

/// Runs the honest process over every slot of `schedule`.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    schedule: &RewardSchedule,
    initial_fractions: &[f64],
    rng: &mut R,
) -> Result<TrajectorySample> {
    let mut state = UrnState::from_fractions(schedule.initial_stake(), initial_fractions)?;
    let mut wins = vec![0u64; state.parties()];
    for &reward in schedule.per_slot() {
        let winner = state.step_mut(reward, rng.random::<f64>());
        wins[winner] += 1;
    }
    Ok(TrajectorySample {
        final_fractions: state.fractions(),
        winner_counts: wins,
    })
}

/// Assignment of parties to stake pools.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolAssignment {
    pool_of: Vec<usize>,
    pools: usize,
}

impl PoolAssignment {
    /// `pool_of[i]` is the pool of party `i`. Pool indices must be `0..pools`
    /// with every pool nonempty.
    pub fn new(pool_of: Vec<usize>) -> Result<Self> {
        if pool_of.is_empty() {
            return Err(Error::invalid("pool assignment is empty"));
        }
        let pools = pool_of.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; pools];
        for &p in &pool_of {
            seen[p] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("pool {empty} has no members")));
        }
        Ok(Self { pool_of, pools })
    }

    /// Every party in its own pool.
    pub fn singletons(parties: usize) -> Self {
        Self {
            pool_of: (0..parties).collect(),
            pools: parties,
        }
    }

    pub fn pool_of(&self, party: usize) -> usize {
        self.pool_of[party]
    }

    pub fn pools(&self) -> usize {
        self.pools
    }

    pub fn parties(&self) -> usize {
        self.pool_of.len()
    }

    /// Initial fractional stake of each pool.
    pub fn pool_fractions(&self, initial_fractions: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.pools];
        for (party, v) in initial_fractions.iter().enumerate() {
            out[self.pool_of[party]] += v;
        }
        out
    }
}

/// Runs the honest process with stake pools.
///
/// Leader election picks a pool by its fractional stake and the reward is
/// split among the pool's members in proportion to their stake. Proportional
/// splitting leaves each member's share of its pool unchanged, so the
/// simulator tracks pool stakes and fixed member shares.
pub fn simulate_with_pools<R: Rng + ?Sized>(
    schedule: &RewardSchedule,
    pools: &PoolAssignment,
    initial_fractions: &[f64],
    rng: &mut R,
) -> Result<TrajectorySample> {
    check_fractions(initial_fractions)?;
    if pools.parties() != initial_fractions.len() {
        return Err(Error::invalid(
            "pool assignment and fractions disagree on party count",
        ));
    }
    let pool_fractions = pools.pool_fractions(initial_fractions);
    if let Some(p) = pool_fractions.iter().position(|v| *v <= 0.0) {
        return Err(Error::invalid(format!("pool {p} holds no stake")));
    }
    let shares: Vec<f64> = initial_fractions
        .iter()
        .enumerate()
        .map(|(i, v)| v / pool_fractions[pools.pool_of(i)])
        .collect();

    let mut state = UrnState::from_fractions(schedule.initial_stake(), &pool_fractions)?;
    let mut wins = vec![0u64; pools.pools()];
    for &reward in schedule.per_slot() {
        let winner = state.step_mut(reward, rng.random::<f64>());
        wins[winner] += 1;
    }
    let final_fractions = shares
        .iter()
        .enumerate()
        .map(|(i, share)| share * state.fraction(pools.pool_of(i)))
        .collect();
    Ok(TrajectorySample {
        final_fractions,
        winner_counts: wins,
    })
}

/// Proof-of-work baseline: winners are drawn with the fixed initial
/// fractions and rewards never compound.
pub fn pow_baseline<R: Rng + ?Sized>(
    slots: usize,
    per_block: f64,
    initial_stake: f64,
    initial_fractions: &[f64],
    rng: &mut R,
) -> Result<TrajectorySample> {
    check_fractions(initial_fractions)?;
    if !(per_block.is_finite() && per_block >= 0.0) {
        return Err(Error::invalid("per-block reward must be nonnegative"));
    }
    if initial_stake.is_nan() || initial_stake <= 0.0 {
        return Err(Error::invalid("initial stake must be positive"));
    }
    let mut wins = vec![0u64; initial_fractions.len()];
    for _ in 0..slots {
        wins[select_by_weight(initial_fractions, 1.0, rng.random::<f64>())] += 1;
    }
    let total = initial_stake + per_block * slots as f64;
    let final_fractions = initial_fractions
        .iter()
        .zip(&wins)
        .map(|(v, w)| (initial_stake * v + per_block * *w as f64) / total)
        .collect();
    Ok(TrajectorySample {
        final_fractions,
        winner_counts: wins,
    })
}
