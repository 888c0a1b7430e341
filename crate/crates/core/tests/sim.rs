use crimebounds::interval::Interval;
use crimebounds::sim::{run_coverage, simulate_observation, SimScenario};

fn iv(lb: f64, ub: f64) -> Interval {
    Interval::new(lb, ub).unwrap()
}

fn scenario(true_count: u64, trials: u64, seed: u64) -> SimScenario {
    SimScenario {
        true_count,
        p_r_true: 0.573,
        upgrade_frac_true: SimScenario::upgrade_frac_for_theta(0.0075),
        trials,
        seed,
        assumed_theta: iv(0.005, 0.01),
        assumed_pr: iv(0.540, 0.606),
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// Exact coverage: the police count is Binomial(N, p_r * (1 - u)), and the
/// interval covers N exactly when b_p(1+theta_lb)/pr_ub <= N <= b_p(1+theta_ub)/pr_lb.
fn exact_coverage(sc: &SimScenario) -> f64 {
    let n = sc.true_count;
    let q = sc.p_r_true * (1.0 - sc.upgrade_frac_true);
    let truth = n as f64;
    (0..=n)
        .filter(|&k| {
            let k = k as f64;
            k * (1.0 + sc.assumed_theta.lb()) / sc.assumed_pr.ub() <= truth
                && truth <= k * (1.0 + sc.assumed_theta.ub()) / sc.assumed_pr.lb()
        })
        .map(|k| (ln_choose(n, k) + k as f64 * q.ln() + (n - k) as f64 * (1.0 - q).ln()).exp())
        .sum()
}

#[test]
fn small_count_coverage_matches_exact_binomial() {
    for n in [50u64, 200, 1000] {
        let sc = scenario(n, 4000, 11);
        let exact = exact_coverage(&sc);
        let got = run_coverage(&sc).coverage_rate;
        let se = (exact * (1.0 - exact) / sc.trials as f64).sqrt();
        assert!(
            (got - exact).abs() <= 4.0 * se + 1e-9,
            "n={n}: simulated {got}, exact {exact}"
        );
        // With so few incidents sampling noise dominates the assumption intervals.
        assert!(exact < 0.99, "n={n}: exact {exact}");
    }
}

#[test]
fn observation_mean_matches_expectation() {
    let sc = scenario(100_000, 2000, 3);
    let q = sc.p_r_true * (1.0 - sc.upgrade_frac_true);
    let mean = (0..sc.trials)
        .map(|t| simulate_observation(&sc, t) as f64)
        .sum::<f64>()
        / sc.trials as f64;
    let sd = (sc.true_count as f64 * q * (1.0 - q)).sqrt();
    let expected = sc.true_count as f64 * q;
    assert!(
        (mean - expected).abs() <= 4.0 * sd / (sc.trials as f64).sqrt(),
        "{mean} vs {expected}"
    );
}

#[test]
fn seeds_are_reproducible_and_distinct() {
    let a = run_coverage(&scenario(300, 200, 99));
    assert_eq!(a, run_coverage(&scenario(300, 200, 99)));
    let xs: Vec<u64> = (0..50)
        .map(|t| simulate_observation(&scenario(300, 1, 99), t))
        .collect();
    let ys: Vec<u64> = (0..50)
        .map(|t| simulate_observation(&scenario(300, 1, 100), t))
        .collect();
    assert_ne!(xs, ys);
}

#[test]
fn coverage_grows_with_true_count() {
    let rates: Vec<f64> = [100u64, 1_000, 10_000, 100_000]
        .iter()
        .map(|&n| run_coverage(&scenario(n, 1000, 5)).coverage_rate)
        .collect();
    assert!(rates.windows(2).all(|w| w[0] <= w[1] + 0.03), "{rates:?}");
    assert!(rates[3] >= 0.99);
}

#[test]
fn out_of_assumption_is_flagged() {
    let mut sc = scenario(100_000, 200, 1);
    sc.p_r_true = 0.45;
    let r = run_coverage(&sc);
    assert!(!r.in_assumption);
    assert!(!r.covered_expectation);
    assert!(r.coverage_rate < 0.05);
}
