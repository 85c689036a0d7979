use rand::Rng;
use stake_equity::adversary::StrategyParams;
use stake_equity::bounds::BoundVariant;
use stake_equity::montecarlo::{
    derive_stream, ks_distance, run_experiment, run_experiment_with_workers, ExperimentPlan,
    Scenario,
};
use stake_equity::rewards::{constant_schedule, geometric_schedule};
use stake_equity::urn::PoolAssignment;
use statrs::distribution::{Beta, ContinuousCDF};

fn scenarios() -> Vec<Scenario> {
    let s = constant_schedule(300, 30.0, 1.0).unwrap();
    let f = vec![0.3, 0.2, 0.5];
    vec![
        Scenario::HonestUrn {
            schedule: geometric_schedule(300, 30.0, 1.0).unwrap(),
            fractions: f.clone(),
            party: 1,
        },
        Scenario::PooledUrn {
            schedule: s.clone(),
            pools: PoolAssignment::new(vec![0, 0, 1]).unwrap(),
            fractions: f.clone(),
            party: 0,
        },
        Scenario::PowBaseline {
            slots: 300,
            per_block: 0.1,
            initial_stake: 1.0,
            fractions: f,
            party: 2,
        },
        Scenario::MoK {
            schedule: s,
            params: StrategyParams::new(3, 0.5).unwrap(),
            adversary_fraction: 0.3,
        },
        Scenario::AmBound {
            variant: BoundVariant::Am2,
            slots: 300,
            c: 0.1,
            adversary_fraction: 0.3,
            initial_stake: 1.0,
        },
    ]
}

#[test]
fn results_do_not_depend_on_worker_count() {
    for scenario in scenarios() {
        let plan = ExperimentPlan::new(3000, 77, scenario);
        let one = run_experiment_with_workers(&plan, 1).unwrap();
        let four = run_experiment_with_workers(&plan, 4).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, run_experiment(&plan).unwrap());
    }
}

#[test]
fn aggregate_invariants() {
    for scenario in scenarios() {
        let agg = run_experiment(&ExperimentPlan::new(2000, 3, scenario)).unwrap();
        assert_eq!(agg.histogram.total(), 2000);
        assert_eq!(agg.histogram.bins(), 100);
        assert!((0.0..=1.0).contains(&agg.mean));
        assert_eq!(agg.stderr_of_mean, (agg.sample_variance / 2000.0).sqrt());
        assert!(agg.ecdf.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn honest_scenarios_preserve_the_mean() {
    for scenario in scenarios().into_iter().take(3) {
        let v0 = scenario.initial_fraction();
        let agg = run_experiment(&ExperimentPlan::new(20_000, 12, scenario)).unwrap();
        assert!(
            (agg.mean - v0).abs() < 3.0 * agg.stderr_of_mean,
            "{} vs {v0}",
            agg.mean
        );
    }
}

#[test]
fn zero_trials_is_a_config_error() {
    let plan = ExperimentPlan::new(0, 1, scenarios().remove(0));
    assert!(matches!(
        run_experiment(&plan),
        Err(stake_equity::Error::Config(_))
    ));
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn neighbouring_streams_are_uncorrelated() {
    let take = |i| -> Vec<f64> { derive_stream(0, i).random_iter().take(10_000).collect() };
    let (a, b) = (take(0), take(1));
    let cross = correlation(&a, &b);
    let serial = correlation(&a[..9_999], &a[1..]);
    assert!(cross.abs() < 0.01, "cross-stream correlation {cross}");
    // One standard error at n = 10^4 is 0.01; the lag check allows four.
    assert!(serial.abs() < 4.0 / 100.0, "lag-1 correlation {serial}");
}

#[test]
fn self_sample_ks_is_small() {
    let beta = Beta::new(2.0, 3.0).unwrap();
    let mut rng = derive_stream(31, 0);
    let mut sample: Vec<f64> = (0..100_000)
        .map(|_| beta.inverse_cdf(rng.random()))
        .collect();
    sample.sort_by(f64::total_cmp);
    let d = ks_distance(&sample, |x| beta.cdf(x)).unwrap();
    assert!(d < 0.006, "KS {d}");
}
