use gossip_bandit::rumor::{
    call_marks, d_inner_min, eta_lhs_ln, solve_constants, spread_time, spread_time_distribution, v_constant,
    RumorState, Variant,
};
use gossip_bandit::Error;
use proptest::prelude::*;

fn mean_of(n: usize, p: f64, variant: Variant, trials: u64, seed: u64) -> f64 {
    let s = spread_time_distribution(n, p, variant, trials as usize, seed).unwrap();
    s.mean
}

#[test]
fn two_agents_geometric() {
    // each slot the lone caller reaches the other agent w.p. p (n-1)/n,
    // so E[S_2] = n / ((n - 1) p)
    let trials = 100_000;
    for (p, expected) in [(0.5, 4.0), (1.0, 2.0)] {
        let q = p / 2.0;
        let se = (1.0f64 - q).sqrt() / q / (trials as f64).sqrt();
        for variant in [Variant::Delayed, Variant::Undelayed] {
            let m = mean_of(2, p, variant, trials, 11);
            assert!((m - expected).abs() < 5.0 * se, "{variant} p={p}: {m}");
        }
    }
}

#[test]
fn delayed_scale_at_1024() {
    let s = spread_time_distribution(1024, 0.99, Variant::Delayed, 200, 3).unwrap();
    assert!(s.median <= 300.0, "median {}", s.median);
}

#[test]
fn median_grows_with_n() {
    let small = spread_time_distribution(64, 0.99, Variant::Delayed, 200, 5).unwrap();
    let large = spread_time_distribution(4096, 0.99, Variant::Delayed, 200, 5).unwrap();
    assert!(large.median > small.median);
}

#[test]
fn higher_p_spreads_faster() {
    let fast = spread_time_distribution(512, 1.0, Variant::Delayed, 200, 8).unwrap();
    let slow = spread_time_distribution(512, 0.5, Variant::Delayed, 200, 8).unwrap();
    assert!(fast.median <= slow.median);
}

#[test]
fn delayed_dominated_by_twice_undelayed() {
    // calling only on even slots turns the delayed process into the
    // undelayed one at half speed; extra odd-slot calls only help
    let (n, p, trials) = (256, 0.8, 2000);
    let s = spread_time_distribution(n, p, Variant::Delayed, trials, 21).unwrap();
    let u = spread_time_distribution(n, p, Variant::Undelayed, trials, 22).unwrap();
    assert!(s.mean <= 2.0 * u.mean);
    for ((_, a), (_, b)) in s.quantiles.iter().zip(&u.quantiles) {
        assert!(*a <= 2.0 * b);
    }
}

#[test]
fn even_slot_coupling_is_exact() {
    // delayed process with calls on even slots only, driven by the
    // undelayed marks of slot t/2, completes at exactly 2 S~
    for seed in 0..50u64 {
        let (n, p) = (128, 0.9);
        let undelayed = spread_time(n, p, Variant::Undelayed, seed).unwrap();
        let mut y = vec![i64::MAX; n];
        y[0] = -1;
        let mut t = 0i64;
        while y.contains(&i64::MAX) {
            t += 1;
            if t % 2 == 1 {
                continue;
            }
            let callers: Vec<usize> = (0..n).filter(|&i| y[i] <= t - 2).collect();
            for caller in callers {
                let (ut, us) = call_marks(seed, caller, t / 2);
                let target = ((ut * n as f64) as usize).min(n - 1);
                if us < p && y[target] == i64::MAX {
                    y[target] = t;
                }
            }
        }
        assert_eq!(*y.iter().max().unwrap(), 2 * undelayed);
    }
}

#[test]
fn remark_constants() {
    let c = solve_constants(2.0, 0.99, 29).unwrap();
    assert!((8.50..=8.55).contains(&c.v), "V = {}", c.v);
    assert!((0.990..=0.996).contains(&c.eta), "eta = {}", c.eta);
    assert!(c.c <= 180.5, "C = {}", c.c);
    assert!(c.d > 0.0);
}

#[test]
fn v_closed_form() {
    // (gamma + 1) / ln(1 / (0.7 p + 1 - p)) evaluated independently
    let direct = 3.0 / (1.0f64 / 0.703).ln();
    assert!((v_constant(2.0, 0.99) - direct).abs() < 1e-12);
}

#[test]
fn residuals_hold_across_inputs() {
    for (gamma, p, n) in [(1.0, 1.0, 50), (2.0, 0.9, 200), (0.5, 0.6, 1000), (3.0, 0.99, 100)] {
        let c = solve_constants(gamma, p, n).unwrap();
        let lo = 2.0 * p / 3.0 + (1.0 - p);
        assert!(c.eta > lo && c.eta < 1.0);
        let target = (0.7 * p + 1.0 - p).ln();
        assert!(eta_lhs_ln(c.eta, p) < target + 1e-6);
        assert!(d_inner_min(c.d, p, c.v, n) <= -(gamma + 1.0) + 1e-6);
    }
}

#[test]
fn n_too_small() {
    let err = solve_constants(2.0, 0.99, 28).unwrap_err();
    assert!(matches!(err, Error::NTooSmall { n: 28, .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn informed_growth_bounded(n in 1usize..300, p in 0.05f64..=1.0, seed: u64, delayed: bool) {
        let variant = if delayed { Variant::Delayed } else { Variant::Undelayed };
        let mut s = RumorState::new(n, p, variant).unwrap();
        let cut = if delayed { 2 } else { 1 };
        let mut guard = 0;
        while !s.complete() && guard < 100_000 {
            let t = s.slot() + 1;
            let eligible = s.informed_times().iter().filter(|&&y| y <= t - cut).count();
            let before = s.informed_times().to_vec();
            let count = s.informed_count();
            s.step(seed);
            prop_assert!(s.informed_count() >= count);
            prop_assert!(s.informed_count() <= count + eligible);
            for (a, b) in before.iter().zip(s.informed_times()) {
                if *a != i64::MAX {
                    prop_assert_eq!(a, b);
                }
            }
            guard += 1;
        }
        prop_assert!(s.complete());
    }
}
