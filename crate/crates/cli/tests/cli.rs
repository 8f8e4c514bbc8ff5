use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.json"))
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vasculink")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("vasculink-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn metrics_on_single_pipe_reports_transit_time() {
    let o = run(&["metrics", &fixture("single_pipe")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mean: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("mean_excess_delay_s,"))
        .unwrap()
        .parse()
        .unwrap();
    // z_Rx / ū with ū = Q / (π r²).
    let u = 1e-7 / (std::f64::consts::PI * 1e-6);
    assert!((mean - 0.1 / u).abs() < 1e-12 * mean, "{mean}");
    assert!(text.contains("multipath_spread_sq_s2,0\n"));
}

#[test]
fn metrics_json_format() {
    let o = run(&["metrics", &fixture("diamond"), "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["path_count"], 2);
    assert!(v["coherence_bandwidth_hz"].as_f64().unwrap() > 0.0);
}

#[test]
fn spectrum_per_path_on_diamond() {
    let o = run(&["spectrum", &fixture("diamond"), "--per-path", "--samples", "64"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(
        header,
        ["f", "re", "im", "mag", "phase_unwrapped", "group_delay", "mag_path1", "mag_path2"]
    );
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    // H(0) = l_Rx / ū_b · χ with χ = 1.
    let u = 1e-7 / (std::f64::consts::PI * 1e-6);
    let gain = 1e-3 / u;
    assert!((first[1] - gain).abs() < 1e-12 * gain);
    assert_eq!(first[2], 0.0);
    assert!((first[6] + first[7] - gain).abs() < 1e-12 * gain);
    assert!((first[6] - 2.0 * first[7]).abs() < 1e-12 * gain);
    assert_eq!(text.lines().count(), 65);
}

#[test]
fn cir_per_path_columns_sum_to_total() {
    let o = run(&["cir", &fixture("three_path"), "--per-path", "--samples", "50", "--t-max", "40"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,h,h_path1,h_path2,h_path3");
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[2] + v[3] + v[4] - v[1]).abs() <= 1e-12 * v[1].max(1e-300));
    }
}

#[test]
fn flow_and_paths_tables() {
    let o = run(&["flow", &fixture("diamond")]);
    let text = stdout(&o);
    assert!(text.starts_with("pipe_id,Q_m3s,u_ms,Deff_m2s\np1,"));
    assert_eq!(text.lines().count(), 5);
    let o = run(&["paths", &fixture("diamond_leak")]);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "path,pipes,gamma,mean_s,variance_s2,theta_s,weight");
    assert!(rows[1].starts_with("1,p1>p2>p4,"));
    assert!(rows[2].starts_with("2,p1>p3>p4,"));
}

#[test]
fn ser_columns_and_determinism() {
    let args = ["ser", &fixture("diamond"), "--n-range", "1e2:1e4:1", "--symbols", "5000", "--seed", "4"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("N,ser,ci_lo,ci_hi,t_s,T_s,psi_mean\n100,"));
    assert_eq!(text.lines().count(), 4);
    let other = run(&["ser", &fixture("diamond"), "--n-range", "1e2:1e4:1", "--symbols", "5000", "--seed", "5"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn validate_writes_histogram_and_manifest() {
    let dir = temp_dir("validate");
    let out = dir.join("v.csv");
    let hist = dir.join("h.csv");
    let o = run(&[
        "validate",
        &fixture("diamond"),
        "--particles",
        "20000",
        "--seed",
        "2",
        "--bins",
        "20",
        "--out",
        out.to_str().unwrap(),
        "--histogram",
        hist.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let record = std::fs::read_to_string(&out).unwrap();
    assert!(record.contains("reach_empirical,1\n"));
    let h = std::fs::read_to_string(&hist).unwrap();
    assert!(h.starts_with("bin_lo,bin_hi,count,expected\n"));
    // 20 inner bins plus two open tails.
    assert_eq!(h.lines().count(), 23);
    let total: u64 = h.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 20_000);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("v.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "validate");
    assert_eq!(manifest["seed"], 2);
    assert_eq!(manifest["parameters"]["particles"], "20000");
    assert_eq!(manifest["network_file_hash"].as_str().unwrap().len(), 64);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["frobnicate"],
        vec!["metrics"],
        vec!["metrics", "x.json", "--bogus"],
        vec!["ser", "x.json", "--n-range", "1e6:1e2:1"],
        vec!["ser", "x.json", "--strategy", "fastest"],
        vec!["cir", "x.json", "--samples", "1"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = stderr(&o);
        assert!(err.starts_with("USAGE: "), "{err}");
        assert_eq!(err.lines().count(), 1, "{err}");
    }
}

#[test]
fn parse_and_model_errors_exit_1() {
    let dir = temp_dir("errors");
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    };
    let single = std::fs::read_to_string(fixture("single_pipe")).unwrap();

    let o = run(&["metrics", dir.join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("PARSE: "));

    let bad = write("bad.json", "{\"diffusion\": 1e-9}");
    let o = run(&["metrics", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("PARSE: "));

    let looped = write("loop.json", &single.replace("\"target\": \"out\"", "\"target\": \"in\""));
    let o = run(&["flow", &looped]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("MODEL: "), "{err}");
    assert_eq!(err.lines().count(), 1);

    // Rx upstream of Tx in the same pipe.
    let upstream = write(
        "upstream.json",
        &single.replace("\"z\": 0.0,", "\"z\": 0.15,"),
    );
    let o = run(&["paths", &upstream]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("MODEL: "), "{}", stderr(&o));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn warnings_go_to_stderr() {
    let dir = temp_dir("warn");
    let single = std::fs::read_to_string(fixture("single_pipe")).unwrap();
    let p = dir.join("long_rx.json");
    std::fs::write(&p, single.replace("\"length\": 0.001", "\"length\": 0.05")).unwrap();
    let o = run(&["metrics", p.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stderr(&o).starts_with("WARNING: rx window"));
    assert!(stdout(&o).starts_with("key,value\n"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn thread_cap_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_vasculink"))
        .args(["metrics", &fixture("diamond")])
        .env("VASCULINK_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
