use qlcm::arith::{gcd, ArithTables};
use qlcm::model::{indicator, monte_carlo, sample_set, ModelParams};
use qlcm::moments::expectation_exact;

const SEED: u64 = 0xC0FFEE;

#[test]
fn sample_mean_near_exact_expectation() {
    let t = ArithTables::new(1000).unwrap();
    let params = ModelParams::new(1000, 0.5, SEED, 10_000).unwrap();
    let run = monte_carlo(&params, &t).unwrap();
    let e = expectation_exact(1000, 0.5, &t).unwrap();
    let s = run.summary;
    assert!((s.mean - e).abs() <= 4.0 * s.std_error, "mean {} vs {e} (se {})", s.mean, s.std_error);
}

#[test]
fn summary_independent_of_thread_count() {
    let t = ArithTables::new(2000).unwrap();
    let params = ModelParams::new(2000, 0.3, SEED, 500).unwrap();
    let on = |k| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .unwrap()
            .install(|| monte_carlo(&params, &t).unwrap())
    };
    let (a, b) = (on(1), on(8));
    assert_eq!(a.degrees, b.degrees);
    assert_eq!(a.summary.mean.to_bits(), b.summary.mean.to_bits());
    assert_eq!(a.summary.variance.to_bits(), b.summary.variance.to_bits());
}

/// Empirical frequencies of `I(d)` and `I(d1) I(d2)` against their closed forms.
#[test]
fn indicator_frequencies() {
    let (n, alpha, trials) = (60u64, 0.15, 20_000u64);
    let beta: f64 = 1.0 - alpha;
    let params = ModelParams::new(n, alpha, SEED, trials).unwrap();
    let sets: Vec<_> = (0..trials).map(|t| sample_set(&params, t).unwrap()).collect();
    let within = |hits: usize, p: f64, what: &str| {
        let mean = hits as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt().max(1e-12);
        assert!((mean - p).abs() <= 4.0 * se, "{what}: {mean} vs {p}");
    };
    for d in [1u64, 2, 3, 7, 13, 30, 41, 60] {
        let hits = sets.iter().filter(|s| indicator(s, d, n).unwrap()).count();
        within(hits, 1.0 - beta.powi((n / d) as i32), &format!("d={d}"));
    }
    for (d1, d2) in [(2u64, 3u64), (4, 6), (5, 10), (7, 11), (12, 18), (9, 20), (30, 45)] {
        let l = d1 / gcd(d1, d2) * d2;
        let (j1, j2, j3) = ((n / d1) as i32, (n / d2) as i32, (n / l) as i32);
        let p = 1.0 - beta.powi(j1) - beta.powi(j2) + beta.powi(j1 + j2 - j3);
        let hits = sets
            .iter()
            .filter(|s| indicator(s, d1, n).unwrap() && indicator(s, d2, n).unwrap())
            .count();
        within(hits, p, &format!("({d1},{d2})"));
    }
}
