//! Chain-level simulation of one honest and one strategic party.
//!
//! Wall-clock slot `t` elects a single leader from the stake recorded on
//! the published main chain. The honest party always extends the main chain
//! tip and publishes at once. The adversary keeps private side chains and
//! releases them according to the Match-Override-k strategy:
//!
//! - after an honest block, if some side chain branching below the tip is at
//!   least as long as the main chain, the adversary *matches* with the one
//!   branching earliest. The honest party adopts it with probability `γ`.
//!   Only the matched chain is kept.
//!   Otherwise it *waits* and drops every side chain shorter than the main
//!   chain.
//! - after an adversarial block, the block is appended to every side chain
//!   and a fresh side chain is opened at the tip if none branches there. If
//!   that leaves exactly one side chain, branching at the tip and leading by
//!   at least `k`, the adversary *overrides*: its first withheld block joins
//!   the main chain.
//!
//! Withheld blocks carry no stake until they land on the main chain. Side
//! chains branching more than `Δ` slots below the tip are discarded. A
//! released side chain never carries a block for a slot whose published
//! adversarial block differs from it, so the adversary never equivocates.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;

use crate::rewards::{constant_schedule, RewardSchedule};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Honest,
    Adversary,
}

/// A block on the main chain, identified by its slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub slot: usize,
    pub owner: Party,
}

/// A private fork: adversarial blocks extending main-chain slot
/// `branch_point` (0 is genesis).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideChain {
    branch_point: usize,
    shared_len: usize,
    blocks: VecDeque<usize>,
}

impl SideChain {
    pub fn branch_point(&self) -> usize {
        self.branch_point
    }

    /// Slots of the withheld blocks, in chain order.
    pub fn blocks(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.blocks.iter().copied()
    }

    /// Chain length: shared main-chain prefix plus withheld blocks.
    pub fn len(&self) -> usize {
        self.shared_len + self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Highest occupied slot.
    pub fn height(&self) -> usize {
        self.blocks.back().copied().unwrap_or(self.branch_point)
    }

    /// `(slot, parent slot)` of every withheld block.
    fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let parents = std::iter::once(self.branch_point).chain(self.blocks.iter().copied());
        self.blocks.iter().copied().zip(parents)
    }
}

/// Configuration of the Match-Override-k strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyParams {
    /// Lead required before overriding.
    pub k: usize,
    /// Probability that honest nodes adopt a matched chain.
    pub gamma: f64,
    /// Long-range window: maximum depth of a side chain's branch point.
    pub delta: usize,
}

impl StrategyParams {
    /// `Δ` defaults to `10k`.
    pub fn new(k: usize, gamma: f64) -> Result<Self> {
        Self::with_delta(k, gamma, k.saturating_mul(10))
    }

    pub fn with_delta(k: usize, gamma: f64, delta: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("override lead k must be positive"));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid(format!(
                "connectivity gamma must lie in [0,1], got {gamma}"
            )));
        }
        if delta == 0 {
            return Err(Error::invalid("long-range window must be positive"));
        }
        Ok(Self { k, gamma, delta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Match { adopted: bool },
    Override,
    Wait,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ActionCounts {
    pub matches: u64,
    pub matches_adopted: u64,
    pub overrides: u64,
    pub waits: u64,
}

impl ActionCounts {
    fn record(&mut self, action: Action) {
        match action {
            Action::Match { adopted } => {
                self.matches += 1;
                self.matches_adopted += u64::from(adopted);
            }
            Action::Override => self.overrides += 1,
            Action::Wait => self.waits += 1,
        }
    }
}

const UNPUBLISHED: usize = usize::MAX;

/// Full simulator state: clock, main chain, side chains and the stake
/// implied by the published main chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    clock: usize,
    main: Vec<Block>,
    side_chains: Vec<SideChain>,
    honest_stake: f64,
    adversary_stake: f64,
    rewards: Arc<[f64]>,
    params: StrategyParams,
    /// Parent slot of the adversarial block published for each slot.
    published: Vec<usize>,
    actions: ActionCounts,
}

impl ChainState {
    pub fn new(
        schedule: &RewardSchedule,
        adversary_fraction: f64,
        params: StrategyParams,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&adversary_fraction) {
            return Err(Error::invalid("adversary fraction must lie in [0,1]"));
        }
        let s0 = schedule.initial_stake();
        let rewards: Arc<[f64]> = schedule.per_slot().into();
        Ok(Self {
            clock: 0,
            main: Vec::with_capacity(rewards.len()),
            side_chains: Vec::new(),
            honest_stake: s0 * (1.0 - adversary_fraction),
            adversary_stake: s0 * adversary_fraction,
            published: vec![UNPUBLISHED; rewards.len() + 1],
            rewards,
            params,
            actions: ActionCounts::default(),
        })
    }

    pub fn clock(&self) -> usize {
        self.clock
    }

    pub fn main_chain(&self) -> &[Block] {
        &self.main
    }

    pub fn side_chains(&self) -> &[SideChain] {
        &self.side_chains
    }

    pub fn params(&self) -> StrategyParams {
        self.params
    }

    pub fn honest_stake(&self) -> f64 {
        self.honest_stake
    }

    pub fn adversary_stake(&self) -> f64 {
        self.adversary_stake
    }

    pub fn actions(&self) -> ActionCounts {
        self.actions
    }

    /// Main chain length `ℓ_t`.
    pub fn len(&self) -> usize {
        self.main.len()
    }

    pub fn is_empty(&self) -> bool {
        self.main.is_empty()
    }

    /// Main chain height `h_t`, the highest occupied slot (0 before any block).
    pub fn height(&self) -> usize {
        self.main.last().map_or(0, |b| b.slot)
    }

    fn reward(&self, slot: usize) -> f64 {
        self.rewards[slot - 1]
    }

    /// Parent slot of the published adversarial block of `slot`, if any.
    pub fn published_parent(&self, slot: usize) -> Option<usize> {
        match self.published[slot] {
            UNPUBLISHED => None,
            parent => Some(parent),
        }
    }

    pub fn adversary_blocks(&self) -> usize {
        self.main
            .iter()
            .filter(|b| b.owner == Party::Adversary)
            .count()
    }

    /// Adversarial share of the stake on the published main chain.
    pub fn stake_fraction(&self) -> f64 {
        self.adversary_stake / (self.adversary_stake + self.honest_stake)
    }

    /// Adversarial share of main-chain blocks; 0 for an empty chain.
    pub fn block_fraction(&self) -> f64 {
        if self.main.is_empty() {
            0.0
        } else {
            self.adversary_blocks() as f64 / self.main.len() as f64
        }
    }

    fn credit(&mut self, block: Block, sign: f64) {
        let r = sign * self.reward(block.slot);
        match block.owner {
            Party::Honest => self.honest_stake += r,
            Party::Adversary => self.adversary_stake += r,
        }
    }

    fn push_main(&mut self, block: Block) {
        self.credit(block, 1.0);
        self.main.push(block);
    }

    fn truncate_main(&mut self, keep_through_slot: usize) {
        while let Some(&last) = self.main.last() {
            if last.slot <= keep_through_slot {
                break;
            }
            self.credit(last, -1.0);
            self.main.pop();
        }
    }

    fn is_releasable(&self, chain: &SideChain) -> bool {
        chain.links().all(|(slot, parent)| {
            matches!(self.published[slot], UNPUBLISHED) || self.published[slot] == parent
        })
    }

    /// Publishes the first `count` withheld blocks of a side chain.
    fn publish(&mut self, chain_idx: usize, count: usize) {
        let links: Vec<(usize, usize)> = self.side_chains[chain_idx].links().take(count).collect();
        for (slot, parent) in links {
            self.published[slot] = parent;
        }
    }

    fn prune_long_range(&mut self) {
        let height = self.height();
        let delta = self.params.delta;
        self.side_chains
            .retain(|c| height.saturating_sub(c.branch_point) <= delta);
    }

    fn on_honest_block(&mut self, match_draw: f64) -> Action {
        let slot = self.clock;
        self.push_main(Block {
            slot,
            owner: Party::Honest,
        });
        let (len, height) = (self.len(), self.height());

        let candidate = self
            .side_chains
            .iter()
            .enumerate()
            .filter(|(_, c)| c.branch_point != height && c.len() >= len && self.is_releasable(c))
            .min_by_key(|(i, c)| (c.branch_point, *i))
            .map(|(i, _)| i);

        let action = match candidate {
            Some(idx) => {
                // Release just enough blocks to tie the main chain; any
                // surplus stays withheld on the same fork.
                let released = len - self.side_chains[idx].shared_len;
                self.publish(idx, released);
                let mut chain = self.side_chains.swap_remove(idx);
                self.side_chains.clear();
                let adopted = match_draw < self.params.gamma;
                if adopted {
                    self.truncate_main(chain.branch_point);
                    for s in chain.blocks.drain(..released).collect::<Vec<_>>() {
                        self.push_main(Block {
                            slot: s,
                            owner: Party::Adversary,
                        });
                    }
                    chain.branch_point = self.height();
                    chain.shared_len = self.len();
                }
                self.side_chains.push(chain);
                Action::Match { adopted }
            }
            None => {
                self.side_chains.retain(|c| c.len() >= len);
                Action::Wait
            }
        };
        self.prune_long_range();
        action
    }

    fn on_adversary_block(&mut self) -> Action {
        let slot = self.clock;
        let (len, height) = (self.len(), self.height());
        for chain in &mut self.side_chains {
            chain.blocks.push_back(slot);
        }
        if !self.side_chains.iter().any(|c| c.branch_point == height) {
            self.side_chains.push(SideChain {
                branch_point: height,
                shared_len: len,
                blocks: VecDeque::from([slot]),
            });
        }

        let action = match self.side_chains.as_slice() {
            [only]
                if only.branch_point == height
                    && only.len() >= len + self.params.k
                    && self.is_releasable(only) =>
            {
                let first = self.side_chains[0]
                    .blocks
                    .pop_front()
                    .expect("lead of at least k >= 1");
                self.published[first] = height;
                self.push_main(Block {
                    slot: first,
                    owner: Party::Adversary,
                });
                let chain = &mut self.side_chains[0];
                chain.branch_point = first;
                chain.shared_len += 1;
                Action::Override
            }
            _ => Action::Wait,
        };
        self.prune_long_range();
        action
    }
}

/// Leader of the next slot, drawn from the stake on the published main
/// chain.
pub fn elect_leader(state: &ChainState, draw: f64) -> Party {
    if draw < state.stake_fraction() {
        Party::Adversary
    } else {
        Party::Honest
    }
}

/// Advances the clock by one slot won by `winner` and applies the
/// Match-Override-k response.
///
/// # Panics
///
/// If the clock is already past the schedule's last slot.
pub fn mo_k_step(state: &mut ChainState, winner: Party, match_draw: f64) -> Action {
    assert!(
        state.clock < state.rewards.len(),
        "clock past the reward schedule"
    );
    state.clock += 1;
    let action = match winner {
        Party::Honest => state.on_honest_block(match_draw),
        Party::Adversary => state.on_adversary_block(),
    };
    state.actions.record(action);
    action
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutcome {
    pub final_fraction_stake: f64,
    pub final_fraction_blocks: f64,
    pub main_chain_len: usize,
    pub action_counts: ActionCounts,
}

/// Runs every slot of `schedule`. Each slot consumes two uniforms: the
/// election draw, then the match draw.
pub fn run_strategy<R: Rng + ?Sized>(
    schedule: &RewardSchedule,
    params: StrategyParams,
    adversary_fraction: f64,
    rng: &mut R,
) -> Result<StrategyOutcome> {
    let mut state = ChainState::new(schedule, adversary_fraction, params)?;
    for _ in 0..schedule.slots() {
        let election = rng.random::<f64>();
        let match_draw = rng.random::<f64>();
        let winner = elect_leader(&state, election);
        mo_k_step(&mut state, winner, match_draw);
    }
    Ok(StrategyOutcome {
        final_fraction_stake: state.stake_fraction(),
        final_fraction_blocks: state.block_fraction(),
        main_chain_len: state.len(),
        action_counts: state.actions,
    })
}

/// [`run_strategy`] under a constant reward `c` per block.
pub fn run_strategy_constant<R: Rng + ?Sized>(
    slots: usize,
    params: StrategyParams,
    c: f64,
    adversary_fraction: f64,
    initial_stake: f64,
    rng: &mut R,
) -> Result<StrategyOutcome> {
    let schedule = constant_schedule(slots, c * slots as f64, initial_stake)?;
    run_strategy(&schedule, params, adversary_fraction, rng)
}
