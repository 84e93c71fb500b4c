use std::process::{Command, Output};

use serde_json::Value;

fn shp_risk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shp-risk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = shp_risk(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

const ES_RUN: [&str; 7] = ["es", "--shp", "exp:q99=75", "--confidence", "0.99", "--paths", "50000"];

#[test]
fn same_seed_gives_byte_identical_output() {
    for format in ["csv", "json", "text"] {
        let mut args = ES_RUN.to_vec();
        args.extend(["--format", format]);
        assert_eq!(stdout(&args), stdout(&args), "{format}");
    }
    let mut a = ES_RUN.to_vec();
    a.extend(["--format", "csv", "--seed", "7"]);
    assert_ne!(stdout(&a), stdout(&[&ES_RUN[..], &["--format", "csv"]].concat()));
}

#[test]
fn formats_carry_identical_numbers() {
    let json: Value = serde_json::from_str(&stdout(&[&ES_RUN[..], &["--format", "json"]].concat())).unwrap();
    let csv_text = stdout(&[&ES_RUN[..], &["--format", "csv"]].concat());
    let text = stdout(&ES_RUN);

    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let results = json["results"].as_array().unwrap();
    assert_eq!(rows.len(), results.len());
    for (row, res) in rows.iter().zip(results) {
        for key in ["var", "es"] {
            let idx = headers.iter().position(|h| h == key).unwrap();
            let from_csv: f64 = row[idx].parse().unwrap();
            let from_json = res[key].as_f64().unwrap();
            assert_eq!(from_csv, from_json);
            assert!(text.contains(&format!("{from_json:.2}")), "{from_json:.2} missing from\n{text}");
        }
        let se = headers.iter().position(|h| h == "var_stderr").unwrap();
        if res["label"] == "monte carlo" {
            let stderr = json["stderrs"][1]["var"].as_f64().unwrap();
            assert_eq!(row[se].parse::<f64>().unwrap(), stderr);
        } else {
            assert!(row[se].is_empty());
        }
    }
    assert_eq!(json["seed"], 42);
    assert_eq!(json["inputs"]["confidence"], 0.99);
}

#[test]
fn seed_is_printed_in_every_header() {
    assert!(stdout(&ES_RUN).starts_with("shp-risk es  seed=42\n"));
    let csv_text = stdout(&[&ES_RUN[..], &["--format", "csv", "--seed", "9"]].concat());
    assert!(csv_text.starts_with("label,seed,"));
    assert!(csv_text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("9")));
    let cal = stdout(&["calibrate", "--family", "exp", "--target-q", "0.99", "--target-x", "75"]);
    assert!(cal.contains("seed=42"));
}

#[test]
fn median_confidence_is_pure_drift() {
    let json: Value = serde_json::from_str(&stdout(&[
        "var",
        "--confidence",
        "0.5",
        "--shp",
        "point:10",
        "--paths",
        "20000",
        "--format",
        "json",
    ]))
    .unwrap();
    let var = json["results"][0]["var"].as_f64().unwrap();
    assert!((var - 0.06).abs() < 1e-12, "{var}");
    let text = stdout(&["var", "--confidence", "0.5", "--shp", "point:10", "--paths", "20000"]);
    assert!(text.contains("closed form  0.06"), "{text}");
}

#[test]
fn table2_analytic_cells() {
    let json: Value =
        serde_json::from_str(&stdout(&["table2", "--paths", "500000", "--format", "json"])).unwrap();
    let rows = json["results"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let cell = |i: usize, k: &str| rows[i][k].as_f64().unwrap();
    assert!((cell(0, "var_analytic") - 20.18).abs() < 0.005);
    assert!((cell(0, "es_analytic") - 21.74).abs() < 0.005);
    assert!((cell(1, "var_analytic") - 55.54).abs() < 0.005);
    assert!((cell(2, "var_analytic") - 29.23).abs() < 0.005);
    for i in 0..3 {
        let se = json["stderrs"][i]["var_sim"].as_f64().unwrap();
        assert!((cell(i, "var_sim") - cell(i, "var_analytic")).abs() <= 3.0 * se);
    }
}

#[test]
fn config_file_is_merged_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "confidence = 0.5\nshp = \"point:75\"\nformat = \"json\"\n[sim]\npaths = 20000\nseed = 5\n",
    )
    .unwrap();
    let path = cfg.to_str().unwrap();
    let json: Value = serde_json::from_str(&stdout(&["var", "--config", path, "--shp", "point:10"])).unwrap();
    assert_eq!(json["seed"], 5);
    assert_eq!(json["inputs"]["shp"], "point:10");
    assert!((json["results"][0]["var"].as_f64().unwrap() - 0.06).abs() < 1e-12);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[model]\nvolatility = 0.2\n").unwrap();
    let out = shp_risk(&["var", "--config", cfg.to_str().unwrap(), "--shp", "point:10"]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("volatility"));
}

#[test]
fn engine_errors_exit_nonzero_without_output() {
    for args in [
        &["var", "--shp", "weibull:k=2"][..],
        &["var", "--shp", "point:10", "--paths", "100000"][..],
        &["table2", "--paths", "100000"][..],
        &["var", "--shp", "point:10", "--confidence", "1.5"][..],
        &["es"][..],
    ] {
        let out = shp_risk(args);
        assert!(!out.status.success(), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn simulate_exports_csv() {
    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("pnl.csv");
    let joint = dir.path().join("joint.csv");
    stdout(&["simulate", "--shp", "gpd:k=9,alpha=2.0651", "--paths", "10000", "--export", single.to_str().unwrap()]);
    stdout(&[
        "simulate",
        "--shp",
        "gpd:k=9,alpha=2.0651",
        "--paths",
        "10000",
        "--rho",
        "0.5",
        "--export",
        joint.to_str().unwrap(),
    ]);
    let a = std::fs::read_to_string(single).unwrap();
    let b = std::fs::read_to_string(joint).unwrap();
    assert!(a.starts_with("pnl,holding_period\n"));
    assert!(b.starts_with("x1,x2,h\n"));
    assert_eq!(a.lines().count(), 10_001);
    // both files share the horizon stream
    let ha: Vec<&str> = a.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    let hb: Vec<&str> = b.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(ha, hb);
}

#[test]
fn calibrate_reports_fitted_law() {
    let csv_text = stdout(&["calibrate", "--family", "exp", "--target-q", "0.99", "--target-x", "75", "--format", "csv"]);
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let row = rdr.records().next().unwrap().unwrap();
    assert!(row[0].starts_with("exp:rate=0.0614"));
    let mean: f64 = row[2].parse().unwrap();
    assert!((mean - 16.29).abs() < 0.005);
}

#[test]
fn dependence_verdict() {
    let csv_text = stdout(&[
        "dependence",
        "--rho",
        "0.5",
        "--shp",
        "invgamma:alpha=1.5,mean=8.66",
        "--paths",
        "1000000",
        "--format",
        "csv",
    ]);
    let first = csv_text.lines().nth(1).unwrap();
    assert!(first.starts_with("kendall tau,42,"));
    assert!(first.ends_with(",PASS"), "{first}");
    assert_eq!(csv_text.lines().count(), 1 + 1 + 4);
}

#[test]
fn writes_to_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let printed = stdout(&[&ES_RUN[..], &["--format", "json", "--out", out.to_str().unwrap()]].concat());
    assert!(printed.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["command"], "es");
}
