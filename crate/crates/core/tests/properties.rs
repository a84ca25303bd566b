use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;

use qlcm::arith::{gcd_lcm, ArithTables};
use qlcm::harness::acceptance::Calibration;
use qlcm::model::{degree_statistic, enumerate_exact, max_degree, Subset};
use qlcm::moments::{
    c1_constant, expectation_exact, for_each_member, v_alpha, variance_exact,
    variance_upper_envelope, TruncationConfig,
};
use qlcm::qpoly::lcm_degree_oracle;

fn tables() -> &'static ArithTables {
    use std::sync::OnceLock;
    static T: OnceLock<ArithTables> = OnceLock::new();
    T.get_or_init(|| ArithTables::new(1_000_000).unwrap())
}

fn subset(n: usize, bits: &[bool]) -> Subset {
    let elems: Vec<u64> = (1..=n as u64).filter(|&k| bits[k as usize - 1]).collect();
    Subset::from_elements(n, &elems).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_is_monotone_under_inclusion(a in prop::collection::vec(any::<bool>(), 80), extra in prop::collection::vec(any::<bool>(), 80)) {
        let n = 80;
        let b: Vec<bool> = a.iter().zip(&extra).map(|(x, y)| *x || *y).collect();
        let (sa, sb) = (subset(n, &a), subset(n, &b));
        prop_assert!(sa.is_subset_of(&sb));
        let (xa, xb) = (degree_statistic(&sa, n as u64, tables()).unwrap(), degree_statistic(&sb, n as u64, tables()).unwrap());
        prop_assert!(xa <= xb);
        prop_assert!(xb <= max_degree(n as u64, tables()));
    }

    #[test]
    fn degree_matches_oracle(bits in prop::collection::vec(any::<bool>(), 30)) {
        let s = subset(30, &bits);
        prop_assert_eq!(degree_statistic(&s, 30, tables()).unwrap(), lcm_degree_oracle(&s.elements()).unwrap());
    }

    #[test]
    fn expectation_monotone_in_n(n in 1u64..5_000, alpha in 0.0f64..=1.0) {
        let a = expectation_exact(n, alpha, tables()).unwrap();
        let b = expectation_exact(n + 1, alpha, tables()).unwrap();
        prop_assert!(b >= a * (1.0 - 1e-14));
        prop_assert!(a >= 0.0 && a <= max_degree(n, tables()) as f64 * (1.0 + 1e-14));
    }

    #[test]
    fn variance_within_envelope(n in 1u64..600, alpha in 0.0f64..=1.0) {
        let v = variance_exact(n, alpha, tables()).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!(v <= variance_upper_envelope(n, alpha) + 1e-9);
    }

    #[test]
    fn gcd_lcm_identity(a in 1u64..(1 << 31), b in 1u64..(1 << 31)) {
        let (g, l) = gcd_lcm(a, b).unwrap();
        prop_assert_eq!(g as u128 * l as u128, a as u128 * b as u128);
        prop_assert_eq!(a % g, 0);
        prop_assert_eq!(l % b, 0);
    }
}

#[test]
fn variance_equals_enumeration_up_to_14() {
    let t = tables();
    for (p, q) in [(1, 4), (1, 3), (1, 2), (3, 4)] {
        let qa = BigRational::new(BigInt::from(p), BigInt::from(q));
        for n in 13..=14u64 {
            let exact = enumerate_exact(n, &qa, t).unwrap().variance().to_f64().unwrap();
            let v = variance_exact(n, p as f64 / q as f64, t).unwrap();
            assert!((v - exact).abs() <= 1e-12 * exact, "n={n} alpha={p}/{q}: {v} vs {exact}");
        }
    }
}

#[test]
fn phi_summatory_envelope() {
    let k = Calibration::frozen().k_phi;
    let t = tables();
    let mut worst = 0.0f64;
    for x in 2..=1_000_000usize {
        let xf = x as f64;
        let gap = (t.phi_summatory_at(x) as f64 - 3.0 / (PI * PI) * xf * xf).abs();
        worst = worst.max(gap / (xf * xf.ln()));
    }
    assert!(worst <= k, "measured {worst} exceeds frozen {k}");
}

#[test]
fn tau_summatory_ratio_bounded() {
    let k = Calibration::frozen().k_tau;
    let t = tables();
    for x in (2..=1_000_000u32).step_by(97).chain([1_000_000]) {
        let xf = x as f64;
        let r = t.tau_summatory(xf).unwrap() as f64 / (xf * xf.ln());
        assert!(r <= k, "x={x}: ratio {r}");
    }
}

#[test]
fn pair_summatory_envelope() {
    let k = Calibration::frozen().k_c1;
    let c1 = c1_constant(1, 1, &TruncationConfig::default()).unwrap().value;
    let t = tables();
    let mut s: u128 = 0;
    for x in 1..=100_000usize {
        s += (t.phi(x) as u128).pow(2);
        if x >= 100 {
            let xf = x as f64;
            let gap = (c1 * xf.powi(3) - s as f64).abs();
            assert!(gap <= k * xf * xf * xf.ln().powi(2), "x={x}");
        }
    }
    assert_eq!(t.phi_pair_summatory(1, 1, 1e3).unwrap(), (1..=1000).map(|m| t.phi(m).pow(2)).sum::<u64>());
}

#[test]
fn v_alpha_positive_and_stable() {
    let base = TruncationConfig::default();
    let deep = TruncationConfig {
        j3_max: 2 * base.j3_max,
        beta_tail_tol: base.beta_tail_tol / 2.0,
        ..base
    };
    for alpha in [0.2, 0.5, 0.8] {
        let a = v_alpha(alpha, &base).unwrap();
        let b = v_alpha(alpha, &deep).unwrap();
        assert!(a.value > 0.0);
        assert!((a.value - b.value).abs() < a.error_estimate, "alpha={alpha}");
    }
}

#[test]
fn enumerated_members_satisfy_structure() {
    let mut count = 0;
    for_each_member(12, 30, |b| {
        let (a1, a2) = b.a;
        let (j1, j2, j3) = b.j;
        assert!(j1.min(j2) >= j3);
        assert!(b.is_nonempty());
        // rho2 <= 1 / (a1 a2 j3)
        assert!(b.upper_den >= a1 * a2 * j3);
        count += 1;
    });
    assert!(count > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn json_floats_round_trip(x in any::<f64>().prop_filter("finite", |v| v.is_finite()), n in 1u64..1_000_000) {
        use qlcm::harness::{emit, parse_json_lines, Command, OutputFormat, ReportRecord};
        let mut r = ReportRecord::new(Command::Expect, Some(n), 0.5, 1, TruncationConfig::default());
        r.e_exact = Some(x);
        r.v_exact = Some(x * 1e-300);
        let mut buf = Vec::new();
        emit(std::slice::from_ref(&r), OutputFormat::JsonLines, &mut buf).unwrap();
        let back = parse_json_lines(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back[0].e_exact.map(f64::to_bits), r.e_exact.map(f64::to_bits));
        prop_assert_eq!(back[0].v_exact.map(f64::to_bits), r.v_exact.map(f64::to_bits));
    }
}
