//! Command-line front end and the TOML experiment configuration.
//!
//! A configuration file holds one or more `[[experiment]]` tables. Each
//! experiment names a reward schedule, the initial stake split, at most one
//! scenario section (`pools`, `pow`, `adversary` or `bound`; none means the
//! plain honest urn) and a `run` section with the trial count and seed. An
//! optional `sweep` section turns the experiment into a grid over total
//! reward and strategy parameters, written as one CSV row per grid point.
//!
//! ```toml
//! [[experiment]]
//! name = "constant"
//! reward = { family = "constant", T = 1000, R = 1000.0, S0 = 1.0 }
//! parties = { fractions = [0.333333333333333, 0.666666666666667] }
//! run = { trials = 100000, seed = 1 }
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::adversary::StrategyParams;
use crate::analytics::{
    design_constant, design_geometric, equitability_report, verify_geometric_optimality,
    write_max_reward_curves, write_variance_curves, DesignReport,
};
use crate::bounds::{am2_mean_closed_form, am2_regime_holds, BoundVariant};
use crate::format::sig;
use crate::montecarlo::{
    beta_cdf, ks_distance, ks_distance_with_left_limits, run_experiment, with_workers,
    AggregateResult, ExperimentPlan, PowFractionLaw, Scenario,
};
use crate::rewards::{
    composed_schedule, constant_schedule, decreasing_schedule, geometric_schedule, Checkpoint,
    DecreasingRewardParams, RewardSchedule,
};
use crate::urn::PoolAssignment;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Constant,
    Geometric,
    Composed,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointConfig {
    pub end: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    pub family: Family,
    #[serde(rename = "T")]
    pub slots: usize,
    #[serde(rename = "R", default)]
    pub total: f64,
    #[serde(rename = "S0", default = "default_initial_stake")]
    pub initial_stake: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<CheckpointConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

fn default_initial_stake() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartiesConfig {
    pub fractions: Vec<f64>,
    /// Party whose final fraction is recorded; the adversary in adversarial
    /// scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolsConfig {
    pub assignment: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowConfig {
    /// Defaults to `R / T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_block: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    pub k: usize,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub variant: BoundVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub trials: usize,
    pub seed: u64,
}

/// Grid over total reward (as a multiple of `S0`) and strategy parameters.
///
/// With `variant` set, each grid point compares the named processes
/// (`mo-k` with the `adversary` section, `am1`, `am2`); otherwise the grid
/// runs the `adversary` strategy over every `k × gamma` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "R_over_S0")]
    pub reward_over_stake: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub reward: RewardConfig,
    pub parties: PartiesConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pools: Option<PoolsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pow: Option<PowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversaryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundConfig>,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recipe {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub experiment: Vec<ExperimentConfig>,
}

impl Recipe {
    pub fn parse(text: &str) -> Result<Self> {
        let recipe: Recipe = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        recipe.validate()?;
        Ok(recipe)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.is_empty() {
            return Err(Error::Config("no [[experiment]] tables".into()));
        }
        let mut names: Vec<&str> = self.experiment.iter().map(|e| e.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!(
                "duplicate experiment name `{}`",
                w[0]
            )));
        }
        self.experiment
            .iter()
            .try_for_each(ExperimentConfig::validate)
    }
}

impl RewardConfig {
    pub fn build(&self) -> Result<RewardSchedule> {
        self.build_with_total(self.total)
    }

    fn build_with_total(&self, total: f64) -> Result<RewardSchedule> {
        let (t, s0) = (self.slots, self.initial_stake);
        match self.family {
            Family::Constant => constant_schedule(t, total, s0),
            Family::Geometric => geometric_schedule(t, total, s0),
            Family::Decreasing => decreasing_schedule(t, self.decreasing_params(total)?, s0),
            Family::Composed => {
                let cps = self
                    .checkpoints
                    .as_ref()
                    .ok_or_else(|| Error::Config("composed family needs `checkpoints`".into()))?;
                let cps: Vec<Checkpoint> = cps
                    .iter()
                    .map(|c| Checkpoint::new(c.end, c.reward))
                    .collect();
                if cps.last().map(|c| c.end_slot) != Some(t) {
                    return Err(Error::Config("last checkpoint must end at slot T".into()));
                }
                composed_schedule(&cps, s0)
            }
        }
    }

    fn decreasing_params(&self, total: f64) -> Result<DecreasingRewardParams> {
        match self.alpha {
            Some(a) => DecreasingRewardParams::new(a, total),
            None => DecreasingRewardParams::with_default_alpha(self.slots, total),
        }
    }
}

impl ExperimentConfig {
    fn scenario_sections(&self) -> Vec<&'static str> {
        [
            ("pools", self.pools.is_some()),
            ("pow", self.pow.is_some()),
            ("adversary", self.adversary.is_some()),
            ("bound", self.bound.is_some()),
        ]
        .into_iter()
        .filter_map(|(n, present)| present.then_some(n))
        .collect()
    }

    fn tracked(&self) -> usize {
        self.parties.track.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |msg: String| Error::Config(format!("experiment `{}`: {msg}", self.name));
        let sections = self.scenario_sections();
        if sections.len() > 1 {
            return Err(ctx(format!(
                "more than one scenario section: {}",
                sections.join(", ")
            )));
        }
        let f = &self.parties.fractions;
        if f.is_empty() || f.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(ctx("fractions must be nonempty and lie in [0,1]".into()));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ctx(format!("fractions sum to {sum}, expected 1")));
        }
        if self.tracked() >= f.len() {
            return Err(ctx(format!(
                "tracked party {} does not exist",
                self.tracked()
            )));
        }
        if self.run.trials == 0 {
            return Err(ctx("run.trials must be at least 1".into()));
        }
        if let Some(p) = &self.pools {
            if p.assignment.len() != f.len() {
                return Err(ctx(
                    "pools.assignment must name a pool for every party".into()
                ));
            }
        }
        let needs_constant = self.bound.is_some()
            || self.pow.is_some()
            || self.sweep.as_ref().is_some_and(|s| s.variant.is_some());
        if needs_constant && self.reward.family != Family::Constant {
            return Err(ctx(
                "bounding processes and the PoW baseline need a constant reward".into(),
            ));
        }
        if let Some(s) = &self.sweep {
            if s.reward_over_stake.is_empty() {
                return Err(ctx("sweep.R_over_S0 is empty".into()));
            }
            match &s.variant {
                Some(vs) => {
                    for v in vs {
                        let v = SweepVariant::parse(v)?;
                        if v == SweepVariant::MoK && self.adversary.is_none() {
                            return Err(ctx(
                                "sweep variant mo-k needs an [adversary] section".into()
                            ));
                        }
                    }
                }
                None => {
                    if s.k.as_ref().is_none_or(Vec::is_empty)
                        || s.gamma.as_ref().is_none_or(Vec::is_empty)
                    {
                        return Err(ctx(
                            "a strategy sweep needs nonempty `k` and `gamma` lists".into()
                        ));
                    }
                }
            }
        } else {
            // Build the scenario once so parameter errors surface at load time.
            self.scenario(self.reward.total)?;
        }
        Ok(())
    }

    /// Scenario for the configured sections at total reward `total`.
    pub fn scenario(&self, total: f64) -> Result<Scenario> {
        let fractions = self.parties.fractions.clone();
        let party = self.tracked();
        let va0 = fractions[party];
        let r = &self.reward;
        if let Some(p) = &self.pools {
            return Ok(Scenario::PooledUrn {
                schedule: r.build_with_total(total)?,
                pools: PoolAssignment::new(p.assignment.clone())?,
                fractions,
                party,
            });
        }
        if let Some(p) = &self.pow {
            return Ok(Scenario::PowBaseline {
                slots: r.slots,
                per_block: p.per_block.unwrap_or(total / r.slots as f64),
                initial_stake: r.initial_stake,
                fractions,
                party,
            });
        }
        if let Some(a) = &self.adversary {
            return Ok(Scenario::MoK {
                schedule: r.build_with_total(total)?,
                params: a.params()?,
                adversary_fraction: va0,
            });
        }
        if let Some(b) = &self.bound {
            return Ok(bound_scenario(b.variant, r, total, va0));
        }
        Ok(Scenario::HonestUrn {
            schedule: r.build_with_total(total)?,
            fractions,
            party,
        })
    }
}

impl AdversaryConfig {
    pub fn params(&self) -> Result<StrategyParams> {
        match self.delta {
            Some(d) => StrategyParams::with_delta(self.k, self.gamma, d),
            None => StrategyParams::new(self.k, self.gamma),
        }
    }
}

fn bound_scenario(variant: BoundVariant, r: &RewardConfig, total: f64, va0: f64) -> Scenario {
    Scenario::AmBound {
        variant,
        slots: r.slots,
        c: total / r.slots as f64,
        adversary_fraction: va0,
        initial_stake: r.initial_stake,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SweepVariant {
    MoK,
    Bound(BoundVariant),
}

impl SweepVariant {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "mo-k" | "mok" => Ok(SweepVariant::MoK),
            other => other.parse().map(SweepVariant::Bound),
        }
    }

    fn label(self, k: usize) -> String {
        match self {
            SweepVariant::MoK => format!("mo{k}"),
            SweepVariant::Bound(b) => b.to_string(),
        }
    }
}

/// Reference law for the KS column of a summary, where one is known.
fn reference_ks(scenario: &Scenario, agg: &AggregateResult) -> Result<Option<f64>> {
    match scenario {
        Scenario::HonestUrn {
            schedule,
            fractions,
            party,
        } => {
            // Constant rewards of `c` per slot converge to Beta(S0 v/c, S0(1-v)/c).
            let rewards = schedule.per_slot();
            let c = rewards.first().copied().unwrap_or(0.0);
            let v = fractions[*party];
            let constant = rewards.iter().all(|r| (r - c).abs() <= 1e-12 * c.abs());
            if !constant || c <= 0.0 || v <= 0.0 || v >= 1.0 {
                return Ok(None);
            }
            let s0 = schedule.initial_stake();
            let cdf = beta_cdf(s0 * v / c, s0 * (1.0 - v) / c)?;
            ks_distance(&agg.ecdf, cdf).map(Some)
        }
        Scenario::PowBaseline {
            slots,
            per_block,
            initial_stake,
            fractions,
            party,
        } => {
            let law = PowFractionLaw::new(*slots, *per_block, *initial_stake, fractions[*party])?;
            ks_distance_with_left_limits(&agg.ecdf, |x| law.cdf(x), |x| law.cdf_left(x)).map(Some)
        }
        _ => Ok(None),
    }
}

/// TOML float literal with 12 significant digits.
fn toml_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let s = sig(x);
    if s.contains(['.', 'e', 'i']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn summary_text(
    exp: &ExperimentConfig,
    scenario: &Scenario,
    agg: &AggregateResult,
    seed: u64,
) -> Result<String> {
    let ks = reference_ks(scenario, agg)?;
    let v0 = scenario.initial_fraction();
    let mut s = String::new();
    writeln!(s, "name = {:?}", exp.name).unwrap();
    writeln!(s, "scenario = \"{}\"", scenario.kind()).unwrap();
    writeln!(s, "trials = {}", agg.trials).unwrap();
    writeln!(s, "seed = {seed}").unwrap();
    writeln!(s, "initial_fraction = {}", toml_float(v0)).unwrap();
    writeln!(s, "mean = {}", toml_float(agg.mean)).unwrap();
    writeln!(s, "variance = {}", toml_float(agg.sample_variance)).unwrap();
    writeln!(s, "stderr = {}", toml_float(agg.stderr_of_mean)).unwrap();
    writeln!(s, "variance_stderr = {}", toml_float(agg.variance_stderr)).unwrap();
    let cap = v0 * (1.0 - v0);
    if cap > 0.0 {
        writeln!(
            s,
            "normalized_variance = {}",
            toml_float(agg.sample_variance / cap)
        )
        .unwrap();
    }
    if let Scenario::HonestUrn { schedule, .. } = scenario {
        let exact = equitability_report(schedule, &[v0]).normalized_variance;
        writeln!(s, "closed_form_normalized_variance = {}", toml_float(exact)).unwrap();
    }
    writeln!(s, "ks = {}", toml_float(ks.unwrap_or(f64::NAN))).unwrap();
    Ok(s)
}

/// Options for [`simulate`].
#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
    pub trials: Option<usize>,
}

/// Runs every experiment of `recipe`, writing `<name>_histogram.csv` and
/// `<name>_summary.toml` for single experiments and `<name>.csv` for
/// sweeps. Returns the paths written.
pub fn simulate(recipe: &Recipe, opts: &SimulateOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&opts.out_dir)?;
    let go = || -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for exp in &recipe.experiment {
            let trials = opts.trials.unwrap_or(exp.run.trials);
            match &exp.sweep {
                None => written.extend(simulate_single(exp, trials, &opts.out_dir)?),
                Some(sweep) => written.push(simulate_sweep(exp, sweep, trials, &opts.out_dir)?),
            }
        }
        Ok(written)
    };
    match opts.workers {
        Some(w) => with_workers(w, go),
        None => go(),
    }
}

fn simulate_single(exp: &ExperimentConfig, trials: usize, dir: &Path) -> Result<Vec<PathBuf>> {
    let scenario = exp.scenario(exp.reward.total)?;
    let plan = ExperimentPlan::new(trials, exp.run.seed, scenario);
    let agg = run_experiment(&plan)?;
    let hist_path = dir.join(format!("{}_histogram.csv", exp.name));
    let mut buf = Vec::new();
    agg.histogram.write_csv(&mut buf)?;
    fs::write(&hist_path, buf)?;
    let summary_path = dir.join(format!("{}_summary.toml", exp.name));
    fs::write(
        &summary_path,
        summary_text(exp, &plan.scenario, &agg, exp.run.seed)?,
    )?;
    Ok(vec![hist_path, summary_path])
}

fn simulate_sweep(
    exp: &ExperimentConfig,
    sweep: &SweepConfig,
    trials: usize,
    dir: &Path,
) -> Result<PathBuf> {
    let s0 = exp.reward.initial_stake;
    let va0 = exp.parties.fractions[exp.tracked()];
    let seed = exp.run.seed;
    let mut csv = String::new();
    // Every grid point reuses the same trial streams.
    let measure = |scenario: Scenario| -> Result<(f64, f64)> {
        let agg = run_experiment(&ExperimentPlan::new(trials, seed, scenario))?;
        Ok((agg.mean / va0, agg.stderr_of_mean / va0))
    };
    match &sweep.variant {
        Some(variants) => {
            csv.push_str("R_over_S0,variant,mean_relative_fraction,stderr,closed_form_if_valid\n");
            let variants: Vec<SweepVariant> = variants
                .iter()
                .map(|v| SweepVariant::parse(v))
                .collect::<Result<_>>()?;
            for &ratio in &sweep.reward_over_stake {
                let total = ratio * s0;
                for &variant in &variants {
                    let (scenario, k) = match variant {
                        SweepVariant::MoK => {
                            let a = exp.adversary.as_ref().expect("validated");
                            let scenario = Scenario::MoK {
                                schedule: exp.reward.build_with_total(total)?,
                                params: a.params()?,
                                adversary_fraction: va0,
                            };
                            (scenario, a.k)
                        }
                        SweepVariant::Bound(b) => (bound_scenario(b, &exp.reward, total, va0), 0),
                    };
                    let (mean, se) = measure(scenario)?;
                    let t = exp.reward.slots;
                    let c = total / t as f64;
                    let closed = match variant {
                        SweepVariant::Bound(BoundVariant::Am2)
                            if am2_regime_holds(t, c, va0, s0) =>
                        {
                            sig(am2_mean_closed_form(t, c, va0, s0)?.relative(va0))
                        }
                        _ => String::new(),
                    };
                    writeln!(
                        csv,
                        "{},{},{},{},{closed}",
                        sig(ratio),
                        variant.label(k),
                        sig(mean),
                        sig(se)
                    )
                    .unwrap();
                }
            }
        }
        None => {
            csv.push_str("R_over_S0,k,gamma,mean_relative_fraction,stderr\n");
            let delta = exp.adversary.as_ref().and_then(|a| a.delta);
            for &ratio in &sweep.reward_over_stake {
                let schedule = exp.reward.build_with_total(ratio * s0)?;
                for &k in sweep.k.as_deref().unwrap_or_default() {
                    for &gamma in sweep.gamma.as_deref().unwrap_or_default() {
                        let params = AdversaryConfig { k, gamma, delta }.params()?;
                        let scenario = Scenario::MoK {
                            schedule: schedule.clone(),
                            params,
                            adversary_fraction: va0,
                        };
                        let (mean, se) = measure(scenario)?;
                        writeln!(
                            csv,
                            "{},{k},{},{},{}",
                            sig(ratio),
                            sig(gamma),
                            sig(mean),
                            sig(se)
                        )
                        .unwrap();
                    }
                }
            }
        }
    }
    let path = dir.join(format!("{}.csv", exp.name));
    fs::write(&path, csv)?;
    Ok(path)
}

#[derive(Debug, Parser)]
#[command(
    name = "stake-equity",
    version,
    about = "Equitability of compounding proof-of-stake rewards"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DesignFamily {
    Constant,
    Geometric,
}

#[derive(Debug, clap::Args)]
struct ScheduleArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long = "T")]
    slots: usize,
    #[arg(long = "R", default_value_t = 0.0)]
    total: f64,
    #[arg(long = "S0", default_value_t = 1.0)]
    initial_stake: f64,
    /// Decay rate of the decreasing family (default 1/T).
    #[arg(long)]
    alpha: Option<f64>,
    /// Checkpoints of the composed family as `end:reward` pairs.
    #[arg(long, value_delimiter = ',', value_parser = parse_checkpoint)]
    checkpoints: Vec<CheckpointConfig>,
}

impl ScheduleArgs {
    fn config(&self) -> RewardConfig {
        RewardConfig {
            family: self.family,
            slots: self.slots,
            total: self.total,
            initial_stake: self.initial_stake,
            checkpoints: (!self.checkpoints.is_empty()).then(|| self.checkpoints.clone()),
            alpha: self.alpha,
        }
    }
}

fn parse_checkpoint(s: &str) -> std::result::Result<CheckpointConfig, String> {
    let (end, reward) = s
        .split_once(':')
        .ok_or_else(|| format!("expected end:reward, got `{s}`"))?;
    Ok(CheckpointConfig {
        end: end
            .trim()
            .parse()
            .map_err(|e| format!("checkpoint end `{end}`: {e}"))?,
        reward: reward
            .trim()
            .parse()
            .map_err(|e| format!("checkpoint reward `{reward}`: {e}"))?,
    })
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact normalized and absolute variance of a schedule.
    Variance {
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long, default_value_t = 0.5)]
        v0: f64,
    },
    /// Largest total reward meeting an equitability target.
    Design {
        #[arg(long, value_enum)]
        family: DesignFamily,
        #[arg(long = "T")]
        slots: usize,
        #[arg(long)]
        eps: f64,
    },
    /// Run the experiments of a TOML configuration.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Override the trial count of every experiment.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Brute-force check that uniform log-growth minimizes variance.
    VerifyOptimal {
        #[arg(long = "T")]
        slots: usize,
        #[arg(long = "R", default_value_t = 1.0)]
        total: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Variance and budget curves over a range of horizons.
    Curves {
        #[arg(long = "R", default_value_t = 1000.0)]
        total: f64,
        #[arg(long = "S0", default_value_t = 1.0)]
        initial_stake: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(
            long = "T",
            value_delimiter = ',',
            default_value = "10,30,100,300,1000,3000,10000,30000,100000"
        )]
        slots: Vec<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print a reward schedule as CSV.
    Schedule {
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
}

fn print_design(out: &mut dyn Write, d: &DesignReport) -> Result<()> {
    writeln!(out, "T = {}", d.slots)?;
    writeln!(out, "epsilon = {}", sig(d.epsilon))?;
    writeln!(out, "max_reward = {}", sig(d.max_reward))?;
    writeln!(out, "log1p_max_reward = {}", sig(d.log1p_max_reward))?;
    writeln!(
        out,
        "achieved_normalized_variance = {}",
        sig(d.achieved_normalized_variance)
    )?;
    Ok(())
}

/// Outcome of a command other than success: a user error (exit 1) or an
/// internal one (exit 2).
enum Failure {
    User(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => Failure::Internal(e.to_string()),
            other => Failure::User(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match command {
        Command::Variance { schedule, v0 } => {
            if !(0.0..=1.0).contains(&v0) {
                return Err(Failure::User(format!("v0 must lie in [0,1], got {v0}")));
            }
            let s = schedule.config().build()?;
            let report = equitability_report(&s, &[v0]);
            writeln!(
                out,
                "normalized_variance = {}",
                sig(report.normalized_variance)
            )?;
            writeln!(out, "variance = {}", sig(report.per_party_variance[0]))?;
            writeln!(out, "epsilon_tilde = {}", sig(report.epsilon_tilde))?;
            writeln!(out, "variance_cap = {}", sig(report.per_party_cap[0]))?;
        }
        Command::Design { family, slots, eps } => {
            let d = match family {
                DesignFamily::Geometric => design_geometric(slots, eps)?,
                DesignFamily::Constant => design_constant(slots, eps)?,
            };
            print_design(out, &d)?;
        }
        Command::Simulate {
            config,
            out: out_dir,
            workers,
            trials,
        } => {
            let recipe = Recipe::load(&config)?;
            if trials == Some(0) {
                return Err(Failure::User("--trials must be at least 1".into()));
            }
            for path in simulate(
                &recipe,
                &SimulateOptions {
                    out_dir,
                    workers,
                    trials,
                },
            )? {
                writeln!(out, "wrote {}", path.display())?;
            }
        }
        Command::VerifyOptimal { slots, total, step } => {
            let cert = verify_geometric_optimality(slots, total, step)?;
            writeln!(out, "T = {}", cert.slots)?;
            writeln!(out, "R = {}", sig(cert.total_reward))?;
            writeln!(out, "divisions = {}", cert.divisions)?;
            writeln!(out, "points_evaluated = {}", cert.points_evaluated)?;
            let minimizer: Vec<String> = cert.grid_minimizer.iter().map(|x| sig(*x)).collect();
            writeln!(out, "grid_minimizer = [{}]", minimizer.join(", "))?;
            writeln!(out, "grid_min_variance = {}", sig(cert.grid_min_variance))?;
            writeln!(out, "uniform_variance = {}", sig(cert.uniform_variance))?;
            writeln!(out, "max_violation = {}", sig(cert.max_violation))?;
            if !cert.holds() {
                return Err(Failure::User(format!(
                    "uniform profile beaten by {} on the grid",
                    sig(cert.max_violation)
                )));
            }
        }
        Command::Curves {
            total,
            initial_stake,
            eps,
            slots,
            out: dir,
        } => {
            fs::create_dir_all(&dir)?;
            let mut variance = Vec::new();
            write_variance_curves(&mut variance, &slots, total, initial_stake)?;
            let mut budget = Vec::new();
            write_max_reward_curves(&mut budget, &slots, eps)?;
            for (file, body) in [
                ("variance_curves.csv", variance),
                ("max_reward_curves.csv", budget),
            ] {
                let path = dir.join(file);
                fs::write(&path, body)?;
                writeln!(out, "wrote {}", path.display())?;
            }
        }
        Command::Schedule { schedule } => {
            schedule.config().build()?.write_csv(&mut *out)?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code: 0 success, 1 user error, 2 internal error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let outcome =
        std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| dispatch(cli.command, out)));
    match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(Failure::User(msg))) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Ok(Err(Failure::Internal(msg))) => {
            let _ = writeln!(err, "internal error: {msg}");
            2
        }
        Err(_) => {
            let _ = writeln!(err, "internal error: command panicked");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HONEST: &str = r#"
[[experiment]]
name = "geo"
reward = { family = "geometric", T = 100, R = 10.0 }
parties = { fractions = [0.25, 0.75] }
run = { trials = 10, seed = 3 }
"#;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("stake-equity").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn parses_and_round_trips() {
        let recipe = Recipe::parse(HONEST).unwrap();
        assert_eq!(recipe.experiment[0].reward.initial_stake, 1.0);
        let again = Recipe::parse(&recipe.to_toml().unwrap()).unwrap();
        assert_eq!(recipe, again);
    }

    #[test]
    fn rejects_two_scenarios() {
        let text = HONEST.replace("run =", "pow = {}\nbound = { variant = \"am1\" }\nrun =");
        let e = Recipe::parse(&text).unwrap_err().to_string();
        assert!(e.contains("more than one scenario"), "{e}");
    }

    #[test]
    fn rejects_bad_fractions() {
        let text = HONEST.replace("[0.25, 0.75]", "[0.25, 0.7]");
        assert!(Recipe::parse(&text).is_err());
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let e = Recipe::parse("[[experiment]]\nname = \n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("line 2"), "{e}");
    }

    #[test]
    fn variance_command() {
        let (code, out, _) = run_args(&[
            "variance",
            "--family",
            "constant",
            "--T",
            "1000",
            "--R",
            "1000",
            "--v0",
            "0.3333333",
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("normalized_variance = 0.4995"), "{out}");
        let (code, _, err) = run_args(&["variance", "--family", "bogus", "--T", "3"]);
        assert_eq!(code, 1);
        assert!(!err.is_empty());
    }

    #[test]
    fn infeasible_design_fails() {
        let (code, _, err) = run_args(&[
            "design",
            "--family",
            "geometric",
            "--T",
            "10",
            "--eps",
            "1.5",
        ]);
        assert_eq!(code, 1);
        assert!(err.contains("error"));
    }

    #[test]
    fn toml_floats() {
        assert_eq!(toml_float(2.0), "2.0");
        assert_eq!(toml_float(0.5), "0.5");
        assert_eq!(toml_float(f64::NAN), "nan");
        assert_eq!(toml_float(1.5e20), "1.5e20");
    }
}
