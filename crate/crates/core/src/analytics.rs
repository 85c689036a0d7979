//! Closed-form equitability of reward schedules.
//!
//! For the honest process the variance of a party's final stake fraction
//! factorises as `v(0)(1 - v(0)) * N`, where the normalized variance `N`
//! depends only on the schedule:
//!
//! ```text
//! N = 1 - prod_n (2 e^{-θ_n} - e^{-2 θ_n}),    e^{θ_n} = S(n) / S(n-1)
//! ```
//!
//! Each factor is `1 - (1 - e^{-θ_n})^2`; the product is accumulated as a sum
//! of `log1p` terms so that neither `S(T)^2` nor the raw product is ever
//! formed. That keeps very fast-growing schedules (`R ≈ e^{√T}`) finite.

use std::io::Write;

use crate::format::sig;
use crate::rewards::{DecreasingRewardParams, RewardSchedule};
use crate::{Error, Result};

/// Floating-point cancellation below this magnitude is clamped to zero.
const NEGATIVE_CLAMP: f64 = 1e-12;

/// Largest grid the optimality oracle will enumerate.
pub const MAX_GRID_POINTS: u64 = 10_000_000;

/// Tolerance for the uniform profile beating every grid point.
pub const OPTIMALITY_TOLERANCE: f64 = 1e-12;

/// Per-slot log growth `θ_n = log(S(n)/S(n-1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGrowthProfile {
    thetas: Vec<f64>,
}

impl LogGrowthProfile {
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        if let Some(bad) = thetas.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::invalid(format!(
                "log growth {bad} must be nonnegative"
            )));
        }
        Ok(Self { thetas })
    }

    pub fn from_schedule(schedule: &RewardSchedule) -> Self {
        Self {
            thetas: schedule.log_growth().collect(),
        }
    }

    /// The uniform profile `θ_n = log(1+R)/T`, i.e. the geometric schedule.
    pub fn uniform(slots: usize, log_total_growth: f64) -> Self {
        Self {
            thetas: vec![log_total_growth / slots as f64; slots],
        }
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// `log(S(T)/S(0))`.
    pub fn total_log_growth(&self) -> f64 {
        self.thetas.iter().sum()
    }

    pub fn normalized_variance(&self) -> f64 {
        normalized_variance_from_log_growth(self.thetas.iter().copied())
    }
}

/// `log(2 e^{-θ} - e^{-2θ})`, the log of one factor of the variance product.
#[inline]
fn log_retention(theta: f64) -> f64 {
    let gap = (-theta).exp_m1();
    (-(gap * gap)).ln_1p()
}

/// Normalized variance from an iterator of per-slot log growths.
pub fn normalized_variance_from_log_growth(thetas: impl IntoIterator<Item = f64>) -> f64 {
    let log_product: f64 = thetas.into_iter().map(log_retention).sum();
    clamp_unit(-log_product.exp_m1())
}

fn clamp_unit(x: f64) -> f64 {
    if x < 0.0 {
        debug_assert!(x >= -NEGATIVE_CLAMP, "variance cancellation too large: {x}");
        0.0
    } else {
        x.min(1.0)
    }
}

/// Maximum achievable variance `v(0)(1 - v(0))` for a party starting at `v0`.
pub fn variance_cap(v0: f64) -> f64 {
    v0 * (1.0 - v0)
}

/// Exact variance of a party's final stake fraction under `schedule`.
pub fn variance_closed_form(schedule: &RewardSchedule, v0: f64) -> f64 {
    let cap = variance_cap(v0);
    (cap * normalized_variance_from_log_growth(schedule.log_growth())).clamp(0.0, cap)
}

/// Normalized variance of the constant schedule: `ρ² / ((T+ρ)(1+ρ))` with
/// `ρ = R/S(0)`.
pub fn normalized_variance_constant(slots: usize, total: f64, initial_stake: f64) -> f64 {
    let rho = total / initial_stake;
    let t = slots as f64;
    rho * rho / ((t + rho) * (1.0 + rho))
}

pub fn variance_constant(slots: usize, total: f64, initial_stake: f64, v0: f64) -> f64 {
    variance_cap(v0) * normalized_variance_constant(slots, total, initial_stake)
}

/// Normalized variance of the geometric schedule given `log(1 + R/S(0))`.
///
/// Works for growth far beyond the range of `f64` stakes.
pub fn normalized_variance_geometric_log(slots: usize, log_total_growth: f64) -> f64 {
    let t = slots as f64;
    let per_slot = (log_total_growth / t).exp_m1();
    let log_ratio = t * (2.0 * per_slot).ln_1p() - 2.0 * log_total_growth;
    clamp_unit(-log_ratio.exp_m1())
}

/// `1 - (2(1+ρ)^{1/T} - 1)^T / (1+ρ)²` with `ρ = R/S(0)`.
pub fn normalized_variance_geometric(slots: usize, total: f64, initial_stake: f64) -> f64 {
    normalized_variance_geometric_log(slots, (total / initial_stake).ln_1p())
}

pub fn variance_geometric(slots: usize, total: f64, initial_stake: f64, v0: f64) -> f64 {
    variance_cap(v0) * normalized_variance_geometric(slots, total, initial_stake)
}

/// Normalized variance of the decreasing schedule, evaluated from its own
/// product form rather than from a built schedule.
pub fn normalized_variance_decreasing(
    slots: usize,
    params: DecreasingRewardParams,
    initial_stake: f64,
) -> f64 {
    let alpha = params.alpha();
    let cap = params.supply_cap(slots) / initial_stake;
    if cap == 0.0 {
        return 0.0;
    }
    let log_keep = (-alpha).ln_1p();
    // factor_n = (1 + M(1 - k^{n-1}(1-2α))) / (1 + M(1 - k^{n-1})), k = 1-α
    //          = 1 + 2αM k^{n-1} / (1 + M(1 - k^{n-1}))
    let log_product: f64 = (1..=slots)
        .map(|n| {
            let keep = ((n - 1) as f64 * log_keep).exp();
            let denom = 1.0 - cap * ((n - 1) as f64 * log_keep).exp_m1();
            (2.0 * alpha * cap * keep / denom).ln_1p()
        })
        .sum();
    let log_growth = (-cap * (slots as f64 * log_keep).exp_m1()).ln_1p();
    clamp_unit(-(log_product - 2.0 * log_growth).exp_m1())
}

pub fn variance_decreasing(
    slots: usize,
    params: DecreasingRewardParams,
    initial_stake: f64,
    v0: f64,
) -> f64 {
    variance_cap(v0) * normalized_variance_decreasing(slots, params, initial_stake)
}

/// Per-party equitability of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct EquitabilityReport {
    /// `Var(v_i(T)) / (v_i(0)(1 - v_i(0)))`, identical for every party.
    pub normalized_variance: f64,
    pub per_party_variance: Vec<f64>,
    /// The uniform equitability level satisfied by every party.
    pub epsilon_tilde: f64,
    /// `v_i(0)(1 - v_i(0))` for each party.
    pub per_party_cap: Vec<f64>,
}

impl EquitabilityReport {
    /// Whether party `i` meets `epsilons[i]` for every `i`.
    pub fn satisfies(&self, epsilons: &[f64]) -> bool {
        epsilons.iter().all(|eps| self.normalized_variance <= *eps)
    }
}

pub fn equitability_report(
    schedule: &RewardSchedule,
    initial_fractions: &[f64],
) -> EquitabilityReport {
    let normalized = normalized_variance_from_log_growth(schedule.log_growth());
    let per_party_cap: Vec<f64> = initial_fractions.iter().map(|v| variance_cap(*v)).collect();
    EquitabilityReport {
        normalized_variance: normalized,
        per_party_variance: per_party_cap.iter().map(|c| c * normalized).collect(),
        epsilon_tilde: normalized,
        per_party_cap,
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!(
            "equitability target must lie in (0,1), got {eps}"
        )));
    }
    Ok(())
}

/// `log(1 + R(T))` for the largest geometric budget meeting `eps`, to leading
/// order: `-T log(1 - √(log(1/(1-ε))/T))`.
pub fn max_log_growth_geometric(slots: usize, eps: f64) -> Result<f64> {
    check_epsilon(eps)?;
    if slots == 0 {
        return Err(Error::invalid("number of slots must be positive"));
    }
    let t = slots as f64;
    let root = (-(-eps).ln_1p() / t).sqrt();
    if root >= 1.0 {
        return Err(Error::invalid(format!(
            "T = {slots} is too small for equitability {eps}"
        )));
    }
    Ok(-t * (-root).ln_1p())
}

/// Largest geometric budget `R(T)` for equitability `eps` (leading order).
pub fn max_reward_geometric(slots: usize, eps: f64) -> Result<f64> {
    Ok(max_log_growth_geometric(slots, eps)?.exp_m1())
}

/// Largest constant budget `εT/(1-ε)` for equitability `eps` (leading order).
pub fn max_reward_constant(slots: usize, eps: f64) -> Result<f64> {
    check_epsilon(eps)?;
    Ok(eps * slots as f64 / (1.0 - eps))
}

/// Reward budget for an equitability target, with the variance the exact
/// formula gives at that budget.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub slots: usize,
    pub epsilon: f64,
    pub max_reward: f64,
    pub log1p_max_reward: f64,
    pub achieved_normalized_variance: f64,
}

pub fn design_geometric(slots: usize, eps: f64) -> Result<DesignReport> {
    let log_growth = max_log_growth_geometric(slots, eps)?;
    Ok(DesignReport {
        slots,
        epsilon: eps,
        max_reward: log_growth.exp_m1(),
        log1p_max_reward: log_growth,
        achieved_normalized_variance: normalized_variance_geometric_log(slots, log_growth),
    })
}

pub fn design_constant(slots: usize, eps: f64) -> Result<DesignReport> {
    let r = max_reward_constant(slots, eps)?;
    Ok(DesignReport {
        slots,
        epsilon: eps,
        max_reward: r,
        log1p_max_reward: r.ln_1p(),
        achieved_normalized_variance: normalized_variance_constant(slots, r, 1.0),
    })
}

/// Variance multiplier from joining a pool: `((1-v_P)/v_P) (v_A/(1-v_A))`.
pub fn pool_gain(party_fraction: f64, pool_fraction: f64) -> Result<f64> {
    if !(party_fraction > 0.0 && pool_fraction < 1.0) {
        return Err(Error::invalid("pool gain needs 0 < v_A and v_P < 1"));
    }
    if party_fraction > pool_fraction {
        return Err(Error::invalid(format!(
            "party fraction {party_fraction} exceeds its pool's {pool_fraction}"
        )));
    }
    Ok((1.0 - pool_fraction) / pool_fraction * party_fraction / (1.0 - party_fraction))
}

/// Result of the brute-force search over log-growth profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityCertificate {
    pub slots: usize,
    pub total_reward: f64,
    /// Grid resolution: every `θ_n` is a multiple of `log(1+R)/divisions`.
    pub divisions: usize,
    pub points_evaluated: u64,
    pub grid_minimizer: Vec<f64>,
    pub grid_min_variance: f64,
    pub uniform_variance: f64,
    /// `max(0, uniform - grid minimum)`; zero when the uniform profile wins.
    pub max_violation: f64,
}

impl OptimalityCertificate {
    pub fn holds(&self) -> bool {
        self.max_violation <= OPTIMALITY_TOLERANCE
    }
}

fn grid_size(divisions: usize, slots: usize) -> u64 {
    // compositions of `divisions` into `slots` nonnegative parts
    let (n, k) = ((divisions + slots - 1) as u128, (slots - 1) as u128);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Enumerates every profile on the simplex `Σθ_n = log(1+R)`, `θ_n ≥ 0`, at
/// resolution `grid_step` (a fraction of the total log growth) and checks
/// that the uniform profile attains a normalized variance no larger than
/// any grid point.
pub fn verify_geometric_optimality(
    slots: usize,
    total_reward: f64,
    grid_step: f64,
) -> Result<OptimalityCertificate> {
    if !(1..=6).contains(&slots) {
        return Err(Error::invalid(format!(
            "oracle supports 1 <= T <= 6, got {slots}"
        )));
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::invalid("grid step must lie in (0,1]"));
    }
    if !(total_reward.is_finite() && total_reward >= 0.0) {
        return Err(Error::invalid("total reward must be nonnegative"));
    }
    let divisions = (1.0 / grid_step - 1e-9).ceil() as usize;
    let points = grid_size(divisions, slots);
    if points > MAX_GRID_POINTS {
        return Err(Error::ResourceLimit(format!(
            "{points} grid points exceed the limit of {MAX_GRID_POINTS}"
        )));
    }

    let total_log = total_reward.ln_1p();
    let unit = total_log / divisions as f64;
    let table: Vec<f64> = (0..=divisions)
        .map(|k| log_retention(k as f64 * unit))
        .collect();

    let mut parts = vec![0usize; slots];
    let mut best_parts = parts.clone();
    let mut best_log = f64::NEG_INFINITY;
    let mut evaluated = 0u64;
    // Lexicographic enumeration of compositions; strict improvement keeps
    // the first minimizer in that order.
    enumerate_compositions(divisions, &mut parts, 0, &mut |p| {
        evaluated += 1;
        let log_product: f64 = p.iter().map(|&k| table[k]).sum();
        if log_product > best_log {
            best_log = log_product;
            best_parts.copy_from_slice(p);
        }
    });

    let grid_min_variance = clamp_unit(-best_log.exp_m1());
    let uniform_variance = LogGrowthProfile::uniform(slots, total_log).normalized_variance();
    Ok(OptimalityCertificate {
        slots,
        total_reward,
        divisions,
        points_evaluated: evaluated,
        grid_minimizer: best_parts.iter().map(|&k| k as f64 * unit).collect(),
        grid_min_variance,
        uniform_variance,
        max_violation: (uniform_variance - grid_min_variance).max(0.0),
    })
}

fn enumerate_compositions(
    remaining: usize,
    parts: &mut [usize],
    idx: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if idx == parts.len() - 1 {
        parts[idx] = remaining;
        visit(parts);
        return;
    }
    for k in 0..=remaining {
        parts[idx] = k;
        enumerate_compositions(remaining - k, parts, idx + 1, visit);
    }
}

/// Normalized-variance curves over `slots` for a fixed budget: rows
/// `T,family,normalized_variance` for the constant, geometric and
/// decreasing (`α = 1/T`) families.
pub fn write_variance_curves<W: Write>(
    mut out: W,
    slots: &[usize],
    total: f64,
    initial_stake: f64,
) -> Result<()> {
    writeln!(out, "T,family,normalized_variance")?;
    for &t in slots {
        let decreasing = DecreasingRewardParams::with_default_alpha(t, total)?;
        let rows = [
            (
                "constant",
                normalized_variance_constant(t, total, initial_stake),
            ),
            (
                "geometric",
                normalized_variance_geometric(t, total, initial_stake),
            ),
            (
                "decreasing",
                normalized_variance_decreasing(t, decreasing, initial_stake),
            ),
        ];
        for (family, value) in rows {
            writeln!(out, "{t},{family},{}", sig(value))?;
        }
    }
    Ok(())
}

/// Maximum-budget curves for equitability `eps`: rows `T,family,max_reward`.
pub fn write_max_reward_curves<W: Write>(mut out: W, slots: &[usize], eps: f64) -> Result<()> {
    writeln!(out, "T,family,max_reward")?;
    for &t in slots {
        writeln!(out, "{t},geometric,{}", sig(max_reward_geometric(t, eps)?))?;
        writeln!(out, "{t},constant,{}", sig(max_reward_constant(t, eps)?))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewards::{constant_schedule, decreasing_schedule, geometric_schedule};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn degenerate_ownership_has_no_variance() {
        let s = constant_schedule(10, 10.0, 1.0).unwrap();
        assert_eq!(variance_closed_form(&s, 0.0), 0.0);
        assert_eq!(variance_closed_form(&s, 1.0), 0.0);
    }

    #[test]
    fn reference_values_at_t1000() {
        let c = constant_schedule(1000, 1000.0, 1.0).unwrap();
        let v0 = 1.0 / 3.0;
        let n = variance_closed_form(&c, v0) / variance_cap(v0);
        let eq7 = 1e6 / (2000.0 * 1001.0);
        assert!(rel(n, eq7) < 1e-9);
        assert!((n - 0.49950).abs() < 1e-4);

        let g = geometric_schedule(1000, 1000.0, 1.0).unwrap();
        let n = variance_closed_form(&g, v0) / variance_cap(v0);
        // evaluated directly: 1 - (2·1001^{1/1000} - 1)^{1000} / 1001²
        let direct = 1.0 - (2.0 * 1001f64.powf(1e-3) - 1.0).powi(1000) / (1001.0 * 1001.0);
        assert!(rel(n, direct) < 1e-9);
        assert!((n - 0.0454).abs() < 1e-3);
    }

    #[test]
    fn constant_family_examples() {
        let r: f64 = 3.0;
        let v0: f64 = 0.3;
        let expected = v0 * (1.0 - v0) * (r / (1.0 + r)).powi(2);
        assert!(rel(variance_constant(1, r, 1.0, v0), expected) < 1e-12);
        assert!((normalized_variance_constant(100, 10.0, 1.0) - 0.0826446281).abs() < 1e-9);
        assert_eq!(variance_constant(10, 0.0, 1.0, 0.5), 0.0);
    }

    #[test]
    fn geometric_reduces_to_constant_at_one_slot() {
        for r in [0.5, 1.0, 5.0, 40.0] {
            assert!(
                rel(
                    variance_geometric(1, r, 1.0, 0.4),
                    variance_constant(1, r, 1.0, 0.4)
                ) < 1e-12
            );
        }
    }

    #[test]
    fn geometric_variance_decays_in_t() {
        let vals: Vec<f64> = [10, 100, 1000, 10_000]
            .iter()
            .map(|&t| normalized_variance_geometric(t, 10.0, 1.0))
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
        assert!(vals[3] < 1e-3);
    }

    #[test]
    fn decreasing_matches_schedule_and_edges() {
        for &(t, r) in &[(1usize, 4.0), (10, 10.0), (300, 10.0), (50, 0.7)] {
            let p = DecreasingRewardParams::with_default_alpha(t, r).unwrap();
            let s = decreasing_schedule(t, p, 1.0).unwrap();
            let a = normalized_variance_decreasing(t, p, 1.0);
            let b = variance_closed_form(&s, 0.5) / 0.25;
            assert!(rel(a, b) < 1e-9, "T={t}: {a} vs {b}");
        }
        let p = DecreasingRewardParams::new(0.3, 5.0).unwrap();
        assert!(
            rel(
                normalized_variance_decreasing(1, p, 1.0),
                normalized_variance_constant(1, 5.0, 1.0)
            ) < 1e-12
        );
        let p = DecreasingRewardParams::new(0.3, 0.0).unwrap();
        assert_eq!(normalized_variance_decreasing(20, p, 1.0), 0.0);
    }

    #[test]
    fn report_scales_by_party_cap() {
        let s = constant_schedule(1000, 1000.0, 1.0).unwrap();
        let v = [1.0 / 3.0, 2.0 / 3.0];
        let rep = equitability_report(&s, &v);
        assert!((rep.normalized_variance - 0.4995).abs() < 1e-4);
        assert_eq!(rep.epsilon_tilde, rep.normalized_variance);
        for (var, cap) in rep.per_party_variance.iter().zip(&rep.per_party_cap) {
            assert!(rel(*var, rep.normalized_variance * cap) < 1e-15);
        }
        assert!(rep.satisfies(&[0.5, 0.5]));
        assert!(!rep.satisfies(&[0.5, 0.4]));
    }

    #[test]
    fn design_budgets() {
        let c = max_reward_constant(1000, 0.1).unwrap();
        assert!(rel(c, 1000.0 / 9.0) < 1e-12);
        assert!((normalized_variance_constant(1000, c, 1.0) - 0.0991).abs() < 1e-4);
        assert!(rel(max_reward_constant(123, 0.5).unwrap(), 123.0) < 1e-12);
        assert!(max_reward_constant(10, 1.0).is_err());

        let g = design_geometric(10_000, 0.1).unwrap();
        assert!((g.achieved_normalized_variance - 0.1).abs() < 0.02);
        assert!(
            max_reward_geometric(10_000, 1e-12).unwrap()
                < max_reward_geometric(10_000, 1e-9).unwrap()
        );
        assert!(max_reward_geometric(10_000, 1e-12).unwrap() < 2e-4);
        // sqrt(log(1/(1-ε))/T) >= 1
        assert!(max_reward_geometric(1, 0.7).is_err());
    }

    #[test]
    fn geometric_budget_grows_like_exp_sqrt_t() {
        let ts = [100usize, 1_000, 10_000, 100_000];
        let logs: Vec<f64> = ts
            .iter()
            .map(|&t| max_log_growth_geometric(t, 0.1).unwrap())
            .collect();
        for (t, l) in ts.iter().zip(&logs) {
            let ratio = l / (*t as f64).sqrt();
            // leading order: sqrt(log(1/0.9)) ≈ 0.3246
            assert!((ratio - 0.3246).abs() < 0.05, "T={t}: {ratio}");
        }
    }

    #[test]
    fn pool_gain_examples() {
        assert!(rel(pool_gain(0.2, 0.2).unwrap(), 1.0) < 1e-15);
        assert!((pool_gain(0.1, 0.3).unwrap() - 0.259259259).abs() < 1e-8);
        assert!(pool_gain(0.1, 0.999999).unwrap() < 1e-5);
        assert!(pool_gain(0.4, 0.3).is_err());
    }

    #[test]
    fn optimality_oracle_examples() {
        let cert = verify_geometric_optimality(2, 1.0, 0.001).unwrap();
        assert!(cert.holds());
        let half = 2f64.ln() / 2.0;
        for theta in &cert.grid_minimizer {
            assert!((theta - half).abs() < 1e-12);
        }
        let cert = verify_geometric_optimality(3, 1.0, 0.01).unwrap();
        assert!(cert.holds());
        assert_eq!(cert.points_evaluated, 5151);
        let cert = verify_geometric_optimality(1, 1.0, 0.1).unwrap();
        assert_eq!(cert.points_evaluated, 1);
        assert_eq!(cert.max_violation, 0.0);

        assert!(matches!(
            verify_geometric_optimality(6, 1.0, 0.01),
            Err(Error::ResourceLimit(_))
        ));
        assert!(verify_geometric_optimality(7, 1.0, 0.5).is_err());
    }

    #[test]
    fn curve_writers() {
        let mut buf = Vec::new();
        write_variance_curves(&mut buf, &[100], 10.0, 1.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("T,family,normalized_variance\n100,constant,0.0826446280992\n"));
        let mut buf = Vec::new();
        write_max_reward_curves(&mut buf, &[1000], 0.1).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .contains("1000,constant,111.111111111\n"));
    }
}
