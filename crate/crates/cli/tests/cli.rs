use std::fs;
use std::process::{Command, Output};

const TRIPLE: &str = r#"{"l1":1,"l2":3,"l3":1,"L":4}"#;
const EQUAL: &str = r#"{"l1":1,"l2":1,"l3":1,"L":1.2}"#;

fn popdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_popdyn"))
        .args(args)
        .env_remove("POPDYN_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Value after `key = ` on its own line.
fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

/// `rho = <value>` on the line starting with `prefix`.
fn rho_on(text: &str, prefix: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(prefix)).unwrap();
    let rest = line.split("rho = ").nth(1).unwrap();
    rest.split(',').next().unwrap().trim().parse().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn classify_double_rocker() {
    let o = popdyn(&["classify", "--linkage", TRIPLE]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(field(&s, "kind"), "ZeroPiDoubleRocker");
    assert_eq!(field(&s, "theorem"), "true");
    assert_eq!(field(&s, "grashof"), "false");
    assert_eq!(field(&s, "T1"), "5");
}

#[test]
fn classify_infeasible_exits_2() {
    let o = popdyn(&["classify", "--linkage", r#"{"l1":1,"l2":3,"l3":1,"L":10}"#]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("L < l1+l2+l3"));
}

#[test]
fn classify_degenerate_warns() {
    let o = popdyn(&["classify", "--linkage", r#"{"l1":1,"l2":1,"l3":1,"L":1}"#]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "kind"), "DegenerateBoundary");
    assert!(stderr(&o).contains("DegenerateBoundary"));
}

#[test]
fn malformed_input_exits_1() {
    assert_eq!(popdyn(&["classify", "--linkage", "{not json"]).status.code(), Some(1));
    assert_eq!(popdyn(&["classify", "--linkage", "/no/such/file.json"]).status.code(), Some(1));
    assert_eq!(popdyn(&["scan", "--bogus"]).status.code(), Some(1));
    assert_eq!(popdyn(&["--help"]).status.code(), Some(0));
}

#[test]
fn equal_lengths_return_after_six_pops() {
    let o = popdyn(&["simulate", "--linkage", EQUAL, "--start-phi", "0.3", "--n", "6"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 7);
    for col in [2, 3] {
        let a: f64 = rows[0][col].parse().unwrap();
        let b: f64 = rows[6][col].parse().unwrap();
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(rows[1][1], "P12");
    assert_eq!(rows[2][1], "P23");
}

#[test]
fn zero_pops_give_one_row() {
    let o = popdyn(&["simulate", "--linkage", TRIPLE, "--start-phi", "1.0", "--n", "0"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], "start");
}

#[test]
fn simulate_writes_csv_and_chain_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("orbit.csv");
    let svg = dir.path().join("chains.svg");
    let o = popdyn(&[
        "simulate",
        "--linkage",
        TRIPLE,
        "--start-theta",
        r#"{"theta1":0,"theta2":1.696124157962962}"#,
        "--n",
        "166",
        "--first",
        "p23",
        "--csv",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&fs::read_to_string(&csv).unwrap());
    assert_eq!(rows.len(), 167);
    assert_eq!(rows[1][1], "P23");
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() < 1e-8));
    let svg = fs::read_to_string(&svg).unwrap();
    assert!(svg.matches("class=\"chain\"").count() >= 2);
    assert!(svg.contains("#000000") && svg.contains("#ff0000"));
    assert!(stdout(&o).contains("166 pops"));
}

#[test]
fn simulate_output_is_byte_stable() {
    let args = ["simulate", "--linkage", TRIPLE, "--start-phi", "0.7", "--n", "500", "--renormalize"];
    assert_eq!(popdyn(&args).stdout, popdyn(&args).stdout);
}

#[test]
fn start_must_be_on_the_curve_and_unique() {
    let off = popdyn(&[
        "simulate",
        "--linkage",
        TRIPLE,
        "--start-theta",
        r#"{"theta1":0.1,"theta2":0.2}"#,
    ]);
    assert_eq!(off.status.code(), Some(1));
    assert!(stderr(&off).contains("do not close"));
    let both = popdyn(&[
        "simulate",
        "--linkage",
        TRIPLE,
        "--start-theta",
        r#"{"theta1":0,"theta2":1.696124157962962}"#,
        "--start-phi",
        "0.3",
    ]);
    assert_eq!(both.status.code(), Some(1));
    assert_eq!(popdyn(&["simulate", "--linkage", TRIPLE]).status.code(), Some(1));
}

#[test]
fn rotation_of_equal_lengths() {
    let o = popdyn(&["rotation", "--linkage", EQUAL, "--n", "30000"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!((rho_on(&s, "orbit") - 1.0 / 3.0).abs() < 1e-6);
    assert!((rho_on(&s, "integral") - 1.0 / 3.0).abs() < 1e-9);
    assert!(s.contains("periodic: q = 3"));
}

#[test]
fn rotation_estimates_agree_without_period() {
    let o = popdyn(&["rotation", "--linkage", TRIPLE]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!((rho_on(&s, "orbit") - rho_on(&s, "integral")).abs() < 1e-6);
    assert!(s.contains("periodic: none with q <= 50"));
}

#[test]
fn rotation_outside_lambda_exits_4() {
    let o = popdyn(&["rotation", "--linkage", r#"{"l1":1,"l2":3,"l3":1,"L":2.5}"#]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("L > l1+l2-l3"));
}

#[test]
fn rotation_writes_gap_history() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("gaps.csv");
    let o = popdyn(&["rotation", "--linkage", TRIPLE, "--n", "1000", "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("n,max_gap"));
    assert_eq!(text.lines().last().unwrap().split(',').next(), Some("1000"));
}

#[test]
fn scan_is_monotone_for_long_floating_bar() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    let o = popdyn(&[
        "scan",
        "--linkage",
        r#"{"l1":1,"l2":3,"l3":1}"#,
        "--grid",
        "3.05:4.95:50",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("monotone decreasing"));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("L,rho,method,error_bound,periodic_q"));
    assert_eq!(csv_rows(&text).len(), 50);
}

#[test]
fn single_point_scan_is_trivially_monotone() {
    let o = popdyn(&["scan", "--linkage", r#"{"l1":3,"l2":1,"l3":3}"#, "--grid", "6:6:1"]);
    assert!(o.status.success());
    assert_eq!(csv_rows(&stdout(&o)).len(), 1);
    assert!(stderr(&o).starts_with("monotone"));
}

#[test]
fn scan_of_equal_lengths_is_skipped() {
    let o = popdyn(&["scan", "--linkage", EQUAL, "--grid", "1.2:2.8:4", "--qmax", "5"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("skipped (theorem conditions not met)"));
    assert!(csv_rows(&stdout(&o)).iter().all(|r| r[4] == "3"));
}

#[test]
fn scan_exit_codes() {
    let bars = r#"{"l1":1,"l2":3,"l3":1}"#;
    let outside = popdyn(&["scan", "--linkage", bars, "--grid", "2:4:3"]);
    assert_eq!(outside.status.code(), Some(4));
    // a loose quadrature tolerance leaves steps inside the error bounds
    let loose = popdyn(&["scan", "--linkage", bars, "--grid", "3.9:4.0:5", "--tol", "1e-2"]);
    assert_eq!(loose.status.code(), Some(5));
    assert!(stderr(&loose).contains("L = 3.9"));
    assert_eq!(popdyn(&["scan", "--linkage", bars, "--grid", "3:4"]).status.code(), Some(1));
}

#[test]
fn scan_is_deterministic_across_thread_counts() {
    let args = ["scan", "--linkage", r#"{"l1":3,"l2":1,"l3":3}"#, "--grid", "5.2:6.8:12"];
    let default = popdyn(&args).stdout;
    let single = Command::new(env!("CARGO_BIN_EXE_popdyn"))
        .args(args)
        .env("POPDYN_THREADS", "1")
        .output()
        .unwrap();
    assert!(single.status.success());
    assert_eq!(single.stdout, default);
    let bad = Command::new(env!("CARGO_BIN_EXE_popdyn"))
        .args(args)
        .env("POPDYN_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn gamma_exports() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("gamma.csv");
    let svg = dir.path().join("gamma.svg");
    let o = popdyn(&[
        "gamma",
        "--linkage",
        r#"{"l1":4,"l2":1,"l3":4,"L":2}"#,
        "--resolution",
        "256",
        "--csv",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let components: usize = field(&stdout(&o), "components").parse().unwrap();
    assert!(components >= 2);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("component_id,theta1,theta2"));
    let ids: std::collections::BTreeSet<String> = csv_rows(&text).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(ids.len(), components);
    let svg = fs::read_to_string(&svg).unwrap();
    assert_eq!(svg.matches("class=\"component\"").count(), components);
    assert_eq!(popdyn(&["gamma", "--linkage", TRIPLE, "--resolution", "7"]).status.code(), Some(1));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    fs::write(
        &path,
        r#"{"linkage":{"l1":1,"l2":1,"l3":1,"L":1.2},"start_phi":0.3,"n":3,"first":"p23"}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let from_file = csv_rows(&stdout(&popdyn(&["simulate", "--linkage", p])));
    assert_eq!(from_file.len(), 4);
    assert_eq!(from_file[1][1], "P23");
    let overridden = csv_rows(&stdout(&popdyn(&["simulate", "--linkage", p, "--n", "6", "--first", "p12"])));
    assert_eq!(overridden.len(), 7);
    assert_eq!(overridden[1][1], "P12");
    let bare = dir.path().join("linkage.json");
    fs::write(&bare, TRIPLE).unwrap();
    let o = popdyn(&["classify", "--linkage", bare.to_str().unwrap()]);
    assert_eq!(field(&stdout(&o), "kind"), "ZeroPiDoubleRocker");
}
