//! Statistical properties of the honest urn, checked at fixed seeds.

use stake_equity::analytics::{normalized_variance_from_log_growth, variance_cap};
use stake_equity::montecarlo::{derive_stream, run_experiment, ExperimentPlan, Scenario};
use stake_equity::rewards::{
    composed_schedule, constant_schedule, decreasing_schedule, geometric_schedule, Checkpoint,
    DecreasingRewardParams, RewardSchedule,
};
use stake_equity::urn::{pow_baseline, simulate_with_pools, PoolAssignment};

fn schedules() -> Vec<(&'static str, RewardSchedule)> {
    let (t, r) = (200, 50.0);
    vec![
        ("constant", constant_schedule(t, r, 1.0).unwrap()),
        ("geometric", geometric_schedule(t, r, 1.0).unwrap()),
        (
            "composed",
            composed_schedule(&[Checkpoint::new(80, 10.0), Checkpoint::new(t, 40.0)], 1.0).unwrap(),
        ),
        (
            "decreasing",
            decreasing_schedule(
                t,
                DecreasingRewardParams::with_default_alpha(t, r).unwrap(),
                1.0,
            )
            .unwrap(),
        ),
    ]
}

/// Straight product form, independent of the library's log-domain code.
fn product_form(s: &RewardSchedule) -> f64 {
    let c = s.cumulative();
    let mut keep = 1.0;
    for w in c.windows(2) {
        let q = w[0] / w[1];
        keep *= 2.0 * q - q * q;
    }
    1.0 - keep
}

#[test]
fn mean_and_variance_match_closed_form() {
    let fractions = vec![0.2, 0.3, 0.5];
    for (name, s) in schedules() {
        let exact = product_form(&s);
        assert!((exact - normalized_variance_from_log_growth(s.log_growth())).abs() < 1e-12);
        for party in 0..fractions.len() {
            let scenario = Scenario::HonestUrn {
                schedule: s.clone(),
                fractions: fractions.clone(),
                party,
            };
            let agg = run_experiment(&ExperimentPlan::new(20_000, 11, scenario)).unwrap();
            let v = fractions[party];
            assert!(
                (agg.mean - v).abs() < 3.0 * agg.stderr_of_mean,
                "{name} party {party}: mean {} vs {v}",
                agg.mean
            );
            let expected = variance_cap(v) * exact;
            assert!(
                (agg.sample_variance - expected).abs() < 3.0 * agg.variance_stderr,
                "{name} party {party}: var {} vs {expected} (se {})",
                agg.sample_variance,
                agg.variance_stderr
            );
        }
    }
}

#[test]
fn pooled_members_keep_their_ratio() {
    let s = constant_schedule(500, 200.0, 1.0).unwrap();
    let fractions = [0.05, 0.15, 0.1, 0.7];
    let pools = PoolAssignment::new(vec![0, 0, 0, 1]).unwrap();
    for trial in 0..50 {
        let out =
            simulate_with_pools(&s, &pools, &fractions, &mut derive_stream(3, trial)).unwrap();
        let pool_total: f64 = out.final_fractions[..3].iter().sum();
        for (v, got) in fractions.iter().zip(&out.final_fractions).take(3) {
            assert!((got / pool_total - v / 0.3).abs() < 4.0 * f64::EPSILON);
        }
        assert_eq!(out.winner_counts.iter().sum::<u64>(), 500);
        assert!((out.final_fractions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn pow_variance_scales_inversely_with_horizon() {
    let fractions = [1.0 / 3.0, 2.0 / 3.0];
    let var_at = |t: usize| {
        let samples: Vec<f64> = (0..20_000)
            .map(|i| {
                pow_baseline(t, 1.0, 1.0, &fractions, &mut derive_stream(17, i))
                    .unwrap()
                    .final_fractions[0]
            })
            .collect();
        let m = samples.iter().sum::<f64>() / samples.len() as f64;
        samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64
    };
    let (short, long) = (var_at(1000), var_at(10_000));
    let ratio = short / long;
    assert!((8.5..11.5).contains(&ratio), "variance ratio {ratio}");
    // Binomial: Var = T v(1-v) / (1+T)^2.
    let exact = 1000.0 * (2.0 / 9.0) / 1001.0f64.powi(2);
    assert!((short / exact - 1.0).abs() < 0.05);
}
