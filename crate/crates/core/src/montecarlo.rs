//! Seeded trial harness and the statistics used to compare simulations
//! against closed forms.
//!
//! Trial `i` of an experiment draws from [`derive_stream`]`(seed, i)`, a
//! ChaCha8 generator keyed by the master seed and positioned on stream `i`.
//! Streams are a pure function of `(seed, i)`, so trials can run in any
//! order on any number of workers; results are gathered and reduced in
//! trial-index order, which makes every aggregate bit-identical regardless
//! of parallelism.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{Beta, Binomial, ContinuousCDF, DiscreteCDF};

use crate::adversary::{run_strategy, StrategyParams};
use crate::bounds::{run_bound, BoundVariant};
use crate::format::sig;
use crate::rewards::RewardSchedule;
use crate::urn::{pow_baseline, simulate_trajectory, simulate_with_pools, PoolAssignment};
use crate::{Error, Result};

/// Default trial count for figure reproductions.
pub const DEFAULT_TRIALS: usize = 100_000;

/// Default histogram resolution over `[0, 1]`.
pub const DEFAULT_BINS: usize = 100;

/// Two-sample KS coefficient at the 5% level.
pub const KS_COEFFICIENT: f64 = 1.36;

pub type Stream = ChaCha8Rng;

/// Random stream for trial `trial_index` of an experiment seeded with
/// `master_seed`: ChaCha8 keyed by `seed_from_u64(master_seed)` on stream
/// number `trial_index`.
pub fn derive_stream(master_seed: u64, trial_index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    HonestUrn,
    PooledUrn,
    PowBaseline,
    MoK,
    AmBound,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::HonestUrn => "honest-urn",
            ScenarioKind::PooledUrn => "pooled-urn",
            ScenarioKind::PowBaseline => "pow-baseline",
            ScenarioKind::MoK => "mo-k",
            ScenarioKind::AmBound => "am-bound",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ScenarioKind::HonestUrn,
            ScenarioKind::PooledUrn,
            ScenarioKind::PowBaseline,
            ScenarioKind::MoK,
            ScenarioKind::AmBound,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

/// What a single trial simulates. Every scenario reports the final stake
/// fraction of one tracked party (the adversary for `MoK`/`AmBound`).
#[derive(Debug, Clone)]
pub enum Scenario {
    HonestUrn {
        schedule: RewardSchedule,
        fractions: Vec<f64>,
        party: usize,
    },
    PooledUrn {
        schedule: RewardSchedule,
        pools: PoolAssignment,
        fractions: Vec<f64>,
        party: usize,
    },
    PowBaseline {
        slots: usize,
        per_block: f64,
        initial_stake: f64,
        fractions: Vec<f64>,
        party: usize,
    },
    MoK {
        schedule: RewardSchedule,
        params: StrategyParams,
        adversary_fraction: f64,
    },
    AmBound {
        variant: BoundVariant,
        slots: usize,
        c: f64,
        adversary_fraction: f64,
        initial_stake: f64,
    },
}

impl Scenario {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            Scenario::HonestUrn { .. } => ScenarioKind::HonestUrn,
            Scenario::PooledUrn { .. } => ScenarioKind::PooledUrn,
            Scenario::PowBaseline { .. } => ScenarioKind::PowBaseline,
            Scenario::MoK { .. } => ScenarioKind::MoK,
            Scenario::AmBound { .. } => ScenarioKind::AmBound,
        }
    }

    /// Initial value of the tracked fraction.
    pub fn initial_fraction(&self) -> f64 {
        match self {
            Scenario::HonestUrn {
                fractions, party, ..
            }
            | Scenario::PooledUrn {
                fractions, party, ..
            }
            | Scenario::PowBaseline {
                fractions, party, ..
            } => fractions[*party],
            Scenario::MoK {
                adversary_fraction, ..
            }
            | Scenario::AmBound {
                adversary_fraction, ..
            } => *adversary_fraction,
        }
    }

    fn check(&self) -> Result<()> {
        let (fractions, party) = match self {
            Scenario::HonestUrn {
                fractions, party, ..
            }
            | Scenario::PooledUrn {
                fractions, party, ..
            }
            | Scenario::PowBaseline {
                fractions, party, ..
            } => (fractions, *party),
            _ => return Ok(()),
        };
        if party >= fractions.len() {
            return Err(Error::invalid(format!(
                "tracked party {party} does not exist"
            )));
        }
        Ok(())
    }

    /// Runs one trial on `rng` and returns the tracked final fraction.
    pub fn run_trial(&self, rng: &mut Stream) -> Result<f64> {
        match self {
            Scenario::HonestUrn {
                schedule,
                fractions,
                party,
            } => Ok(simulate_trajectory(schedule, fractions, rng)?.final_fractions[*party]),
            Scenario::PooledUrn {
                schedule,
                pools,
                fractions,
                party,
            } => Ok(simulate_with_pools(schedule, pools, fractions, rng)?.final_fractions[*party]),
            Scenario::PowBaseline {
                slots,
                per_block,
                initial_stake,
                fractions,
                party,
            } => Ok(
                pow_baseline(*slots, *per_block, *initial_stake, fractions, rng)?.final_fractions
                    [*party],
            ),
            Scenario::MoK {
                schedule,
                params,
                adversary_fraction,
            } => {
                Ok(run_strategy(schedule, *params, *adversary_fraction, rng)?.final_fraction_stake)
            }
            Scenario::AmBound {
                variant,
                slots,
                c,
                adversary_fraction,
                initial_stake,
            } => run_bound(
                *variant,
                *slots,
                *c,
                *adversary_fraction,
                *initial_stake,
                rng,
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub trials: usize,
    pub master_seed: u64,
    pub scenario: Scenario,
    pub bins: usize,
}

impl ExperimentPlan {
    pub fn new(trials: usize, master_seed: u64, scenario: Scenario) -> Self {
        Self {
            trials,
            master_seed,
            scenario,
            bins: DEFAULT_BINS,
        }
    }
}

/// Fixed-width bin counts over `[0, 1]`; the value 1 falls in the last bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn from_samples(samples: &[f64], bins: usize) -> Self {
        let mut counts = vec![0u64; bins];
        for &x in samples {
            let idx = ((x * bins as f64) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Self { counts }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// CSV rows `bin_left,bin_right,count`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_left,bin_right,count")?;
        let width = 1.0 / self.bins() as f64;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(
                out,
                "{},{},{c}",
                sig(i as f64 * width),
                sig((i + 1) as f64 * width)
            )?;
        }
        Ok(())
    }
}

/// Statistics of the tracked final fraction across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub trials: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub sample_variance: f64,
    pub stderr_of_mean: f64,
    /// Standard error of `sample_variance`, from the fourth central moment.
    pub variance_stderr: f64,
    pub histogram: Histogram,
    /// Sorted samples.
    pub ecdf: Vec<f64>,
}

impl AggregateResult {
    pub fn from_samples(samples: Vec<f64>, bins: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let (m2, m4) = samples.iter().fold((0.0, 0.0), |(m2, m4), x| {
            let d = x - mean;
            let d2 = d * d;
            (m2 + d2, m4 + d2 * d2)
        });
        let sample_variance = if samples.len() > 1 {
            m2 / (n - 1.0)
        } else {
            0.0
        };
        let m4 = m4 / n;
        let variance_stderr = if samples.len() > 3 {
            let s4 = sample_variance * sample_variance;
            ((m4 - (n - 3.0) / (n - 1.0) * s4).max(0.0) / n).sqrt()
        } else {
            f64::NAN
        };
        let histogram = Histogram::from_samples(&samples, bins);
        let mut ecdf = samples;
        ecdf.sort_by(f64::total_cmp);
        Ok(Self {
            trials: ecdf.len(),
            mean,
            sample_variance,
            stderr_of_mean: (sample_variance / n).sqrt(),
            variance_stderr,
            histogram,
            ecdf,
        })
    }
}

fn check_plan(plan: &ExperimentPlan) -> Result<()> {
    if plan.trials == 0 {
        return Err(Error::Config(
            "an experiment needs at least one trial".into(),
        ));
    }
    if plan.bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    plan.scenario.check()
}

/// Final tracked fractions for every trial, in trial-index order.
pub fn run_samples(plan: &ExperimentPlan) -> Result<Vec<f64>> {
    check_plan(plan)?;
    (0..plan.trials as u64)
        .into_par_iter()
        .map(|i| {
            plan.scenario
                .run_trial(&mut derive_stream(plan.master_seed, i))
        })
        .collect()
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<AggregateResult> {
    AggregateResult::from_samples(run_samples(plan)?, plan.bins)
}

/// [`run_experiment`] on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(
    plan: &ExperimentPlan,
    workers: usize,
) -> Result<AggregateResult> {
    with_workers(workers, || run_experiment(plan))
}

/// Runs `f` inside a rayon pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool construction");
    pool.install(f)
}

/// One-sample Kolmogorov–Smirnov distance between sorted samples and a
/// continuous reference CDF.
pub fn ks_distance(ecdf: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    ks_distance_with_left_limits(ecdf, &cdf, &cdf)
}

/// KS distance against a reference with atoms: `cdf_left(x)` is `P(X < x)`.
pub fn ks_distance_with_left_limits(
    ecdf: &[f64],
    cdf: impl Fn(f64) -> f64,
    cdf_left: impl Fn(f64) -> f64,
) -> Result<f64> {
    if ecdf.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = ecdf.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < ecdf.len() {
        let x = ecdf[i];
        let mut j = i;
        while j < ecdf.len() && ecdf[j] == x {
            j += 1;
        }
        worst = worst.max((i as f64 / n - cdf_left(x)).abs());
        worst = worst.max((j as f64 / n - cdf(x)).abs());
        i = j;
    }
    Ok(worst)
}

/// Beta(a, b) CDF, the limit law of a constant-reward urn.
pub fn beta_cdf(a: f64, b: f64) -> Result<impl Fn(f64) -> f64> {
    let dist = Beta::new(a, b).map_err(|e| Error::invalid(format!("beta({a}, {b}): {e}")))?;
    Ok(move |x: f64| dist.cdf(x.clamp(0.0, 1.0)))
}

/// Exact law of a party's final fraction in the proof-of-work baseline:
/// `(S(0) v + c W) / (S(0) + c T)` with `W ~ Binomial(T, v)`.
pub struct PowFractionLaw {
    binomial: Binomial,
    slots: u64,
    offset: f64,
    per_block: f64,
    total: f64,
}

impl PowFractionLaw {
    pub fn new(slots: usize, per_block: f64, initial_stake: f64, fraction: f64) -> Result<Self> {
        let binomial = Binomial::new(fraction, slots as u64)
            .map_err(|e| Error::invalid(format!("binomial: {e}")))?;
        if per_block.is_nan() || per_block <= 0.0 {
            return Err(Error::invalid("per-block reward must be positive"));
        }
        Ok(Self {
            binomial,
            slots: slots as u64,
            offset: initial_stake * fraction,
            per_block,
            total: initial_stake + per_block * slots as f64,
        })
    }

    /// Win count whose fraction is `x`, and whether `x` sits on that atom.
    fn locate(&self, x: f64) -> (f64, bool) {
        let w = (x * self.total - self.offset) / self.per_block;
        let r = w.round();
        (
            (if (w - r).abs() < 1e-6 { r } else { w.floor() }),
            (w - r).abs() < 1e-6,
        )
    }

    fn cdf_at_count(&self, k: f64) -> f64 {
        if k < 0.0 {
            0.0
        } else if k >= self.slots as f64 {
            1.0
        } else {
            self.binomial.cdf(k as u64)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_at_count(self.locate(x).0)
    }

    pub fn cdf_left(&self, x: f64) -> f64 {
        let (k, atom) = self.locate(x);
        if atom {
            self.cdf_at_count(k - 1.0)
        } else {
            self.cdf_at_count(k)
        }
    }
}

/// Empirical first-order stochastic dominance check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceReport {
    /// `max_x (F_b(x) - F_a(x))`, floored at zero.
    pub max_violation: f64,
    /// Two-sample KS noise level `1.36 √((n+m)/(nm))`.
    pub noise_threshold: f64,
    pub within_noise: bool,
}

/// Checks that sample `b` stochastically dominates sample `a`, i.e. that
/// `F_b(x) <= F_a(x)` at every point of the merged sample grid. Both slices
/// must be sorted.
pub fn dominance_check(ecdf_a: &[f64], ecdf_b: &[f64]) -> DominanceReport {
    let (n, m) = (ecdf_a.len() as f64, ecdf_b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut worst: f64 = 0.0;
    while i < ecdf_a.len() || j < ecdf_b.len() {
        let x = match (ecdf_a.get(i), ecdf_b.get(j)) {
            (Some(a), Some(b)) => a.min(*b),
            (Some(a), None) => *a,
            (None, Some(b)) => *b,
            (None, None) => unreachable!(),
        };
        while i < ecdf_a.len() && ecdf_a[i] <= x {
            i += 1;
        }
        while j < ecdf_b.len() && ecdf_b[j] <= x {
            j += 1;
        }
        worst = worst.max(j as f64 / m - i as f64 / n);
    }
    let noise_threshold = KS_COEFFICIENT * ((n + m) / (n * m)).sqrt();
    DominanceReport {
        max_violation: worst,
        noise_threshold,
        within_noise: worst < noise_threshold,
    }
}
