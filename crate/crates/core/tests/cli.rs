use std::fs;
use std::path::Path;
use std::process::Command;

use crimebounds::cli::run;
use serde_json::Value;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["crimebounds"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write_sources(dir: &Path, counts: &str, pops: &str) -> String {
    fs::write(dir.join("counts.csv"), counts).unwrap();
    fs::write(dir.join("populations.csv"), pops).unwrap();
    fs::write(dir.join("pph.csv"), "city,pph\nAsheville,2.13\n").unwrap();
    fs::write(
        dir.join("reporting.csv"),
        "year,rate_pct,se_pct\n2009,57.3,1.7\n",
    )
    .unwrap();
    let manifest = dir.join("manifest.json");
    fs::write(
        &manifest,
        r#"{"dataset_label": "test", "counts_path": "counts.csv", "populations_path": "populations.csv", "pph_path": "pph.csv", "reporting_path": "reporting.csv"}"#,
    )
    .unwrap();
    manifest.to_string_lossy().into_owned()
}

#[test]
fn binary_computes_embedded_dataset() {
    let out = Command::new(env!("CARGO_BIN_EXE_crimebounds"))
        .args(["--embedded", "compute"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["metadata"]["dataset_label"], "North Carolina 2009-2011");
    assert_eq!(v["tables"]["known_counts"].as_array().unwrap().len(), 30);
    // The Greensboro 2011 warning goes to stderr, not into the bundle stream.
    assert!(String::from_utf8_lossy(&out.stderr).contains("Greensboro"));
}

#[test]
fn compare_cities_identified() {
    let (code, out, _) = call(&[
        "compare",
        "--cities",
        "Charlotte",
        "Raleigh",
        "--year",
        "2011",
        "--metric",
        "rate_pop",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "SIGN_IDENTIFIED_A_HIGHER");
    assert_eq!(v["lb_a"], 1456);
    assert_eq!(v["ub_b"], 1245);
}

#[test]
fn compare_years_text_output() {
    let (code, out, _) = call(&[
        "--format",
        "text",
        "compare",
        "--city",
        "charlotte",
        "--years",
        "2010",
        "2011",
        "--metric",
        "b_a",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("NOT_IDENTIFIED"), "{out}");
    assert!(out.contains("-13.0%"), "{out}");
}

#[test]
fn compare_household_rates_not_identified() {
    let (code, out, _) = call(&[
        "compare",
        "--cities",
        "Charlotte",
        "Wilmington",
        "--year",
        "2009",
        "--metric",
        "rate_hh",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "NOT_IDENTIFIED");
    assert_eq!(v["lb_a"], 40.72);
}

#[test]
fn unknown_metric_is_usage_error() {
    let (code, _, err) = call(&[
        "compare",
        "--cities",
        "Charlotte",
        "Raleigh",
        "--year",
        "2011",
        "--metric",
        "rate_xyz",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("rate_xyz"), "{err}");
}

#[test]
fn unknown_city_is_usage_error() {
    let (code, _, err) = call(&[
        "compare",
        "--cities",
        "Charlotte",
        "Gotham",
        "--year",
        "2011",
        "--metric",
        "b_a",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("Gotham"), "{err}");
}

#[test]
fn chart_has_one_mark_per_city_year() {
    let (code, svg, _) = call(&["chart", "--metric", "rate_pop"]);
    assert_eq!(code, 0);
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches(r#"class="interval""#).count(), 30);
    assert_eq!(svg.matches(r#"class="point""#).count(), 30);
    assert_eq!(svg.matches(r#"class="incomplete""#).count(), 1);
    assert!(svg.contains("Greensboro 2011"));
    assert!(svg.contains("incomplete"));
}

#[test]
fn chart_single_record() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_sources(
        dir.path(),
        "city,year,b_p\nAsheville,2009,545\n",
        "city,year,n_s,n_f\nAsheville,2009,78267,74923\n",
    );
    let (code, svg, err) = call(&["--manifest", &manifest, "chart", "--metric", "b_a"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(svg.matches(r#"class="interval""#).count(), 1);
    assert!(!svg.contains(r#"class="incomplete""#));
}

#[test]
fn empty_counts_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_sources(dir.path(), "city,year,b_p\n", "city,year,n_s,n_f\n");
    let (code, _, err) = call(&["--manifest", &manifest, "compute"]);
    assert_eq!(code, 2);
    assert!(err.contains("no records"), "{err}");
}

#[test]
fn missing_population_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_sources(
        dir.path(),
        "city,year,b_p\nAsheville,2009,545\n",
        "city,year,n_s,n_f\nAsheville,2009,,\n",
    );
    let (code, _, err) = call(&["--manifest", &manifest, "compute"]);
    assert_eq!(code, 2);
    assert!(err.contains("Asheville"), "{err}");
}

#[test]
fn simulate_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    fs::write(
        &path,
        r#"{"true_count": 1000, "p_r_true": 0.573, "upgrade_frac_true": 0.0075, "trials": 10,
            "assumed_theta": {"lb": 0.005, "ub": 0.01}, "assumed_pr": {"lb": 0.54, "ub": 0.606}}"#,
    )
    .unwrap();
    let (code, _, err) = call(&["simulate", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("seed required"), "{err}");
}

#[test]
fn simulate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    fs::write(
        &path,
        r#"{"true_count": 100000, "p_r_true": 0.573, "upgrade_frac_true": 0.0075, "trials": 200, "seed": 4,
            "assumed_theta": {"lb": 0.005, "ub": 0.01}, "assumed_pr": {"lb": 0.54, "ub": 0.606}}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let (code, _, err) = call(&[
        "--out",
        out_dir.to_str().unwrap(),
        "simulate",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let v: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("coverage.json")).unwrap()).unwrap();
    assert_eq!(v["trials"], 200);
    assert_eq!(v["seed"], 4);
    assert!(v["coverage_rate"].as_f64().unwrap() >= 0.99);
}

#[test]
fn compute_writes_csv_and_charts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    let (code, _, err) = call(&[
        "--out",
        out.to_str().unwrap(),
        "--format",
        "csv",
        "compute",
        "--charts",
    ]);
    assert_eq!(code, 0, "{err}");
    for f in [
        "bundle.json",
        "known_counts.csv",
        "actual_counts.csv",
        "rates_population.csv",
        "rates_household.csv",
        "standard_rates.csv",
        "comparisons.csv",
        "chart_rate_pop.svg",
        "chart_rate_hh.svg",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let v: Value =
        serde_json::from_str(&fs::read_to_string(out.join("bundle.json")).unwrap()).unwrap();
    assert_eq!(v["charts"].as_array().unwrap().len(), 2);
}

#[test]
fn csv_without_out_is_usage_error() {
    let (code, _, err) = call(&["--format", "csv", "compute"]);
    assert_eq!(code, 2);
    assert!(err.contains("--out"));
}

#[test]
fn assumptions_flow_into_metadata() {
    let (code, out, _) = call(&[
        "--theta-lb",
        "0",
        "--theta-ub",
        "0.02",
        "--z",
        "1.645",
        "compute",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["metadata"]["assumptions"]["theta_ub"], 0.02);
    assert_eq!(v["metadata"]["assumptions"]["z"], 1.645);
    // theta = 0 makes the known-count lower bound equal the police count.
    assert_eq!(v["tables"]["known_counts"][0]["lb"], 545);
}

#[test]
fn invalid_theta_rejected() {
    let (code, _, _) = call(&["--theta-lb", "0.02", "--theta-ub", "0.01", "compute"]);
    assert_eq!(code, 2);
    let (code, _, _) = call(&["--theta-lb", "0", "--theta-ub", "1.5", "compute"]);
    assert_eq!(code, 2);
}

#[test]
fn validate_reports_single_population() {
    let (code, out, _) = call(&["--format", "text", "validate"]);
    assert_eq!(code, 0);
    assert!(out.contains("Greensboro"));
    assert!(out.contains("incomplete"));
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("compare"));
}
