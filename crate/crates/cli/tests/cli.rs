use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_owen-gauss"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(text.lines().count(), 1, "expected one JSON line, got {text:?}");
    serde_json::from_str(&text).unwrap()
}

#[test]
fn lemma2_equicorrelated_with_oracle() {
    let out = run(&[
        "lemma2", "--mu", "0", "--sigma2", "1", "--m", "0,0", "--v", "1,1", "--oracle", "--json",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let closed = v["closed_form"]["value"].as_f64().unwrap();
    let oracle = v["oracle"]["value"].as_f64().unwrap();
    assert!((closed - 1.0 / 3.0).abs() < 1e-12);
    assert!((oracle - 1.0 / 3.0).abs() < 1e-9);
    assert_eq!(v["passed"], Value::Bool(true));
}

#[test]
fn lemma2_median_and_domain_error() {
    let out = run(&[
        "lemma2", "--mu", "0.5", "--sigma2", "1", "--m", "0.5", "--v", "2", "--json",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["closed_form"]["value"].as_f64(), Some(0.5));

    let out = run(&["lemma2", "--mu", "0", "--sigma2", "1", "--m", "0,0", "--v", "0,1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("positive"));
    assert_eq!(
        code(&run(&[
            "lemma2", "--mu", "0", "--sigma2", "1", "--m", "0,x", "--v", "1,1"
        ])),
        2
    );
    assert_eq!(code(&run(&["lemma2", "--sigma2", "1"])), 2);
}

#[test]
fn lemma2_accepts_negative_lists() {
    let out = run(&[
        "lemma2", "--mu", "-0.3", "--sigma2", "0.5", "--m", "-1,-0.2", "--v", "1,0.4", "--oracle",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn lemma3_diagonal_and_one_dimensional() {
    let out = run(&[
        "lemma3",
        "--mu",
        "0.4,-1",
        "--m",
        "0.4,-1",
        "--v",
        "1,0.3",
        "--cov",
        &fixture("diag2.json"),
        "--json",
    ]);
    assert_eq!(code(&out), 0);
    assert!((json(&out)["closed_form"]["value"].as_f64().unwrap() - 0.25).abs() < 1e-15);

    let dir = std::env::temp_dir().join(format!("owen-gauss-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let one = dir.join("one.json");
    std::fs::write(&one, r#"{"dim": 1, "entries": [[0.8]]}"#).unwrap();
    let a = run(&[
        "lemma3",
        "--mu",
        "0.3",
        "--m",
        "-0.4",
        "--v",
        "1.3",
        "--cov",
        one.to_str().unwrap(),
        "--json",
    ]);
    let b = run(&[
        "lemma2", "--mu", "0.3", "--sigma2", "0.8", "--m", "-0.4", "--v", "1.3", "--json",
    ]);
    assert_eq!(json(&a)["closed_form"], json(&b)["closed_form"]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn lemma3_random_fixture_passes_monte_carlo() {
    let out = run(&[
        "lemma3",
        "--mu",
        "0.2,-0.5,0.3",
        "--m",
        "-0.1,0.2,0.4",
        "--v",
        "0.8,1.1,0.6",
        "--cov",
        &fixture("random3.json"),
        "--oracle",
        "--draws",
        "1e6",
        "--json",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["oracle"]["passed"], Value::Bool(true));
    assert_eq!(v["oracle"]["draws"].as_u64(), Some(1_000_000));
}

#[test]
fn lemma3_bad_matrix_files() {
    let args = |cov: &str| run(&["lemma3", "--mu", "0,0", "--m", "0,0", "--v", "1,1", "--cov", cov]);
    assert_eq!(code(&args(&fixture("not_pd.json"))), 2);
    assert_eq!(code(&args(&fixture("missing.json"))), 2);
    assert_eq!(code(&args(&fixture("table_two.json"))), 2);
}

#[test]
fn pmf_half_correlation() {
    let cov = fixture("half_correlation.json");
    for (y, want) in [("1,1", 1.0 / 3.0), ("-1,1", 1.0 / 6.0)] {
        let out = run(&["pmf", "--mu", "0,0", "--cov", &cov, "--y", y, "--json"]);
        assert_eq!(code(&out), 0);
        let p = json(&out)["probability"].as_f64().unwrap();
        assert!((p - want).abs() <= 1e-6, "{y}: {p}");
    }
    assert_eq!(code(&run(&["pmf", "--mu", "0,0", "--cov", &cov, "--y", "1,0"])), 2);
    assert_eq!(code(&run(&["pmf", "--mu", "0,0", "--cov", &cov, "--y", "1"])), 2);
}

#[test]
fn sample_is_byte_identical_per_seed() {
    let cov = fixture("half_correlation.json");
    let a = run(&["sample", "--mu", "0,0", "--cov", &cov, "--n", "1e4", "--seed", "7"]);
    let b = run(&["sample", "--mu", "0,0", "--cov", &cov, "--n", "1e4", "--seed", "7"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().count(), 10_000);
    assert!(text.lines().all(|l| ["1,1", "1,-1", "-1,1", "-1,-1"].contains(&l)));
    let c = run(&["sample", "--mu", "0,0", "--cov", &cov, "--n", "1e4", "--seed", "8"]);
    assert_ne!(text.as_bytes(), c.stdout.as_slice());
    assert_eq!(code(&run(&["sample", "--mu", "0,0", "--cov", &cov, "--n", "2.5"])), 2);
}

#[test]
fn normalize_random_four() {
    let out = run(&[
        "normalize",
        "--mu",
        "0.3,-0.2,0.5,0.1",
        "--cov",
        &fixture("random4.json"),
        "--json",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!(v["deviation"].as_f64().unwrap().abs() <= 16.0 * 1e-6);
    assert_eq!(v["terms"].as_u64(), Some(16));
}

#[test]
fn verify_matrix_and_perturbation() {
    let out = run(&["verify", "--suite", "matrix", "--json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let names: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"determinant_identity"));
    assert!(names.contains(&"partitioned_inverse"));

    let out = run(&["verify", "--suite", "matrix", "--perturb", "1e-3"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("fail"));
    assert_eq!(code(&run(&["verify", "--suite", "nope"])), 2);
}

#[test]
fn verify_all_smoke() {
    let out = run(&["verify", "--suite", "all", "--trials", "10"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn table_two_records() {
    let out = run(&["table", "--spec", &fixture("table_two.json")]);
    assert_eq!(code(&out), 0);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(
        rdr.headers().unwrap(),
        vec!["id", "params", "closed", "oracle", "absdiff"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "equicorrelated");
    for r in &rows {
        assert!(r[4].parse::<f64>().unwrap() <= 1e-5);
    }
    assert!(!out.stdout.contains(&b'\r'));

    let out = run(&["table", "--spec", &fixture("table_two.json"), "--format", "json"]);
    let v = json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert!(v["rows"][1]["params"]["m"].is_array());
}

#[test]
fn table_empty_and_bad() {
    let out = run(&["table", "--spec", &fixture("table_empty.json")]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "id,params,closed,oracle,absdiff\n"
    );

    let out = run(&["table", "--spec", &fixture("table_bad.json")]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("record 1"));
}

#[test]
fn table_median_record() {
    let dir = std::env::temp_dir().join(format!("owen-gauss-table-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let spec = dir.join("spec.json");
    std::fs::write(
        &spec,
        r#"[{"identity": "lemma2", "mu": 1.5, "sigma2": 0.4, "m": [1.5], "v": [0.7]}]"#,
    )
    .unwrap();
    let out = run(&["table", "--spec", spec.to_str().unwrap(), "--json"]);
    assert_eq!(json(&out)["rows"][0]["closed"].as_f64(), Some(0.5));
    std::fs::write(&spec, r#"[{"identity": "lemma9"}]"#).unwrap();
    let out = run(&["table", "--spec", spec.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("record 0"));
    std::fs::remove_dir_all(&dir).unwrap();
}

fn region_mass(rho: &str) -> f64 {
    let out = run(&["figure", "--rho", rho]);
    assert_eq!(code(&out), 0);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let mut z = Vec::new();
    let mut mass = 0.0;
    for r in rdr.records() {
        let r = r.unwrap();
        let z1: f64 = r[0].parse().unwrap();
        z.push(z1);
        if &r[3] == "1" {
            mass += r[2].parse::<f64>().unwrap();
        }
    }
    assert_eq!(z.len(), 201 * 201);
    let step = 7.0 / 200.0;
    mass * step * step
}

#[test]
fn figure_region_masses() {
    assert!((region_mass("0.5") - 1.0 / 3.0).abs() <= 1e-2);
    assert!((region_mass("-0.5") - 1.0 / 6.0).abs() <= 1e-2);
    assert!((region_mass("0") - 0.25).abs() <= 1e-2);
    assert_eq!(code(&run(&["figure", "--rho", "1"])), 2);
    assert_eq!(code(&run(&["figure", "--rho", "-1.2"])), 2);
}

#[test]
fn figure_json_reports_mass() {
    let out = run(&["figure", "--rho", "0.5", "--grid", "51", "--json"]);
    let v = json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 51 * 51);
    assert!((v["region_mass"].as_f64().unwrap() - 1.0 / 3.0).abs() < 0.05);
}

#[test]
fn every_json_output_is_one_object() {
    let cov = fixture("half_correlation.json");
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "lemma2", "--mu", "0", "--sigma2", "1", "--m", "0,0", "--v", "1,1", "--json",
        ],
        vec!["pmf", "--mu", "0,0", "--cov", &cov, "--y", "1,1", "--json"],
        vec!["sample", "--mu", "0,0", "--cov", &cov, "--n", "3", "--json"],
        vec!["normalize", "--mu", "0,0", "--cov", &cov, "--json"],
        vec!["verify", "--suite", "scalar", "--trials", "5", "--json"],
        vec!["figure", "--rho", "0.2", "--grid", "5", "--json"],
    ];
    for args in commands {
        let out = run(&args);
        assert_eq!(code(&out), 0, "{args:?}");
        assert!(json(&out).is_object());
    }
}
