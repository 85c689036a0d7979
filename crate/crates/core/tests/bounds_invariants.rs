use rand::Rng;
use stake_equity::bounds::{
    am2_mean_closed_form, am2_mean_recursion, am2_regime_holds, BoundProcessState, BoundVariant,
};
use stake_equity::montecarlo::{derive_stream, dominance_check};

#[test]
fn am2_total_grows_by_c_until_clipped() {
    let (c, s0) = (0.01, 1.0);
    for trial in 0..200 {
        let mut rng = derive_stream(1, trial);
        let mut state = BoundProcessState::new(BoundVariant::Am2, c, 0.4, s0).unwrap();
        for t in 1..=300 {
            let before = state.x_honest;
            state.step_mut(rng.random());
            if before < c && state.x_honest == 0.0 {
                break;
            }
            assert!((state.total() - (s0 + c * t as f64)).abs() < 1e-12);
        }
    }
}

#[test]
fn recursion_matches_closed_form_in_regime() {
    for &(t, c, v) in &[
        (10_000usize, 5e-5, 1.0 / 3.0),
        (100, 0.005, 0.5),
        (1, 0.1, 0.1),
        (5000, 1e-4, 0.2),
    ] {
        assert!(am2_regime_holds(t, c, v, 1.0));
        let closed = am2_mean_closed_form(t, c, v, 1.0)
            .unwrap()
            .expected_final_fraction;
        assert!((closed - am2_mean_recursion(t, c, v, 1.0)).abs() < 1e-12);
    }
}

#[test]
fn am1_coupling_is_monotone() {
    let (slots, c) = (500, 0.01);
    for trial in 0..1000u64 {
        let mut pick = derive_stream(70, trial);
        let lo: f64 = pick.random_range(0.01..0.9);
        let hi: f64 = pick.random_range(lo..0.99);
        let mut a = BoundProcessState::new(BoundVariant::Am1, c, lo, 1.0).unwrap();
        let mut b = BoundProcessState::new(BoundVariant::Am1, c, hi, 1.0).unwrap();
        let mut draws = derive_stream(71, trial);
        for _ in 0..slots {
            let u: f64 = draws.random();
            a.step_mut(u);
            b.step_mut(u);
        }
        assert!(
            a.fraction() <= b.fraction(),
            "trial {trial}: {lo} -> {}, {hi} -> {}",
            a.fraction(),
            b.fraction()
        );
    }
}

#[test]
fn am2_dominates_am1() {
    let (slots, c, trials) = (2000, 5e-4, 5000u64);
    let run = |variant, seed| {
        let mut v: Vec<f64> = (0..trials)
            .map(|i| {
                stake_equity::bounds::run_bound(
                    variant,
                    slots,
                    c,
                    1.0 / 3.0,
                    1.0,
                    &mut derive_stream(seed, i),
                )
                .unwrap()
            })
            .collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let report = dominance_check(&run(BoundVariant::Am1, 5), &run(BoundVariant::Am2, 6));
    assert!(report.within_noise, "{report:?}");
}
