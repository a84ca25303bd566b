use std::io::Write;
use std::process::{Command, Output};

use qlcm::harness::{parse_json_lines, CSV_COLUMNS};

fn qlcm(args: &[&str]) -> Output {
    qlcm_env(args, &[])
}

fn qlcm_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qlcm"));
    cmd.args(args);
    for var in ["QLCM_SEED", "QLCM_TRIALS", "QLCM_N", "QLCM_ALPHA", "QLCM_FORMAT", "QLCM_THREADS", "QLCM_CONFIG"] {
        cmd.env_remove(var);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn expect_reports_gap() {
    let out = stdout(&qlcm(&["expect", "--n", "100", "--alpha", "0.5"]));
    let recs = parse_json_lines(&out).unwrap();
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    let (e, a, g) = (r.e_exact.unwrap(), r.e_asym.unwrap(), r.e_gap.unwrap());
    assert_eq!(e - a, g);
    assert!(g.abs() < 0.02 * a);
}

#[test]
fn main_term_at_alpha_one() {
    let out = stdout(&qlcm(&["expect", "--n", "100", "--alpha", "1"]));
    let r = &parse_json_lines(&out).unwrap()[0];
    assert!((r.e_asym.unwrap() - 3039.6355092701331).abs() < 1e-9);
}

#[test]
fn oracle_check_all_agree() {
    let out = stdout(&qlcm(&["oracle-check", "--n", "40", "--trials", "500", "--seed", "11"]));
    let o = parse_json_lines(&out).unwrap()[0].oracle.clone().unwrap();
    assert_eq!((o.subsets, o.agreements, o.gcd_agreements), (500, 500, 500));
}

#[test]
fn simulate_alpha_one_has_zero_variance() {
    let out = stdout(&qlcm(&["simulate", "--n", "60", "--alpha", "1", "--trials", "25"]));
    let mc = parse_json_lines(&out).unwrap()[0].mc.clone().unwrap();
    assert_eq!(mc.variance, 0.0);
    assert_eq!(mc.trials, 25);
}

#[test]
fn exact_mode_rationals() {
    let out = stdout(&qlcm(&["variance", "--n", "2", "--alpha", "1/2", "--exact"]));
    let r = &parse_json_lines(&out).unwrap()[0];
    assert_eq!(r.e_rational.as_deref(), Some("1/2"));
    assert_eq!(r.v_rational.as_deref(), Some("1/4"));
    assert_eq!(r.alpha_exact.as_deref(), Some("1/2"));
}

#[test]
fn invalid_spec_exits_2_naming_field() {
    for (args, field) in [
        (vec!["expect", "--n", "10", "--alpha", "1.5"], "alpha"),
        (vec!["expect", "--n", "9:3", "--alpha", "0.5"], "n"),
        (vec!["simulate", "--n", "10", "--alpha", "0.5", "--trials", "0"], "trials"),
        (vec!["expect", "--n", "40", "--alpha", "1/2", "--exact"], "exact"),
        (vec!["vfun", "--alpha", "1"], "alpha"),
        (vec!["expect", "--n", "10", "--alpha", "0.5", "--format", "xml"], "format"),
    ] {
        let o = qlcm(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(&format!("`{field}`")), "{args:?}: {err}");
    }
}

#[test]
fn resource_refusal_exits_3() {
    let o = qlcm(&["variance", "--n", "30000", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
    let o = qlcm(&["variance", "--n", "500", "--alpha", "0.5", "--quadratic-limit", "100"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn precedence_flag_env_config() {
    let dir = std::env::temp_dir().join(format!("qlcm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sweep.conf");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "# sweep\nseed = 1\ntrials = 7\nn = 30\nalpha = 0.25").unwrap();
    drop(f);
    let p = path.to_str().unwrap();
    let seed_of = |o: Output| parse_json_lines(&stdout(&o)).unwrap()[0].seed;
    let trials_of = |o: Output| parse_json_lines(&stdout(&o)).unwrap()[0].mc.clone().unwrap().trials;

    assert_eq!(seed_of(qlcm(&["simulate", "--config", p])), 1);
    assert_eq!(trials_of(qlcm(&["simulate", "--config", p])), 7);
    assert_eq!(seed_of(qlcm_env(&["simulate", "--config", p], &[("QLCM_SEED", "2")])), 2);
    assert_eq!(seed_of(qlcm_env(&["simulate", "--config", p, "--seed", "3"], &[("QLCM_SEED", "2")])), 3);
    assert_eq!(seed_of(qlcm_env(&["simulate"], &[("QLCM_CONFIG", p)])), 1);

    std::fs::write(&path, "colour = blue\n").unwrap();
    let o = qlcm(&["simulate", "--config", p]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn csv_schema() {
    let out = stdout(&qlcm(&["simulate", "--n", "10,20", "--alpha", "0.5", "--trials", "10", "--format", "csv"]));
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), CSV_COLUMNS.len());
        assert!(!cells[7].is_empty() && !cells[8].is_empty());
        assert!(cells[4].is_empty());
    }
}

#[test]
fn json_is_reproducible_and_round_trips() {
    let args = ["simulate", "--n", "200:400:100", "--alpha", "0.3,2/3", "--trials", "50"];
    let a = stdout(&qlcm(&args));
    let b = stdout(&qlcm_env(&args, &[("QLCM_THREADS", "1")]));
    let c = stdout(&qlcm(&[&args[..], &["--threads", "8"]].concat()));
    assert_eq!(a, b);
    assert_eq!(a, c);
    let recs = parse_json_lines(&a).unwrap();
    assert_eq!(recs.len(), 6);
    let mut again = Vec::new();
    qlcm::harness::emit(&recs, qlcm::harness::OutputFormat::JsonLines, &mut again).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), a);
}

#[test]
fn timings_block_is_opt_in() {
    let plain = stdout(&qlcm(&["expect", "--n", "50", "--alpha", "0.5"]));
    assert!(!plain.contains("timings"));
    let timed = stdout(&qlcm(&["expect", "--n", "50", "--alpha", "0.5", "--timings"]));
    let r = &parse_json_lines(&timed).unwrap()[0];
    assert!(r.timings.as_ref().unwrap().seconds.contains_key("expectation"));
}

#[test]
fn vfun_is_positive() {
    let out = stdout(&qlcm(&["vfun", "--alpha", "0.2,0.5,0.8"]));
    let recs = parse_json_lines(&out).unwrap();
    assert_eq!(recs.len(), 3);
    for r in recs {
        assert!(r.n.is_none());
        assert!(r.v_alpha.unwrap().value > 0.0);
    }
}

#[test]
fn bench_smoke() {
    for suite in ["sieve", "oracle"] {
        let out = stdout(&qlcm(&["bench", "--suite", suite, "--repeats", "1"]));
        let rec: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
        assert_eq!(rec["suite"], suite);
        assert!(rec["median_secs"].as_f64().unwrap() >= 0.0);
    }
    assert_eq!(qlcm(&["bench"]).status.code(), Some(2));
}

#[test]
fn variance_sum_scales_quadratically() {
    let out = stdout(&qlcm(&["bench", "--suite", "variance-sum", "--repeats", "3"]));
    let fit: serde_json::Value = serde_json::from_str(out.lines().last().unwrap()).unwrap();
    let exponent = fit["exponent"].as_f64().unwrap();
    assert!((1.7..=2.3).contains(&exponent), "fitted exponent {exponent}");
}

#[test]
fn check_subcommand() {
    let out = stdout(&qlcm(&["check", "--criterion", "10"]));
    assert!(out.starts_with("criterion 10 PASS"), "{out}");
    assert_eq!(qlcm(&["check", "--criterion", "11"]).status.code(), Some(2));
}
