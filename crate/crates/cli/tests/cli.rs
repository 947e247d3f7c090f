use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn kerrcat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerrcat")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    kerrcat(&all)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn sidecar(dir: &Path, stem: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json"))).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    v.sort();
    v
}

const SHORT_LIFETIME: &str = "name = \"life\"\n[circuit]\nM = 10\nN = 10\n[sweep]\naxis = \"eps2_over_K\"\nmin = 0.0\nmax = 2.0\npoints = 5\n";

#[test]
fn lifetime_table_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let scenario = write(dir.path(), "life.toml", SHORT_LIFETIME);
    let o = run_in(dir.path(), &["lifetime", &scenario, "--set", "circuit.M=2", "--set", "circuit.N=4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("life.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("eps2_over_K,T_alpha_us,lambda_re,M_lv,dim"));
    assert_eq!(lines.count(), 5);
    let side = sidecar(dir.path(), "life");
    assert_eq!(side["command"], "lifetime");
    let kerr = side["series"][0]["derived"]["kerr_over_h_mhz"].as_f64().unwrap();
    assert!((kerr - 7.8125).abs() < 0.01, "{kerr}");
    assert_eq!(side["scenario"]["circuit"]["M"], 2);
}

#[test]
fn other_lifetime_axes_lead_with_the_swept_column() {
    let dir = TempDir::new().unwrap();
    let scenario = write(dir.path(), "life.toml", SHORT_LIFETIME);
    let o = run_in(dir.path(), &["lifetime", &scenario, "--set", "sweep.axis=delta_over_K", "--set", "model.eps2_over_K=2.0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("life.csv")).unwrap();
    assert!(csv.starts_with("delta_over_K,eps2_over_K,T_alpha_us,lambda_re,M_lv,dim\n"), "{csv}");
}

#[test]
fn malformed_range_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let scenario = write(dir.path(), "life.toml", SHORT_LIFETIME);
    let out = dir.path().join("out");
    let o = kerrcat(&["lifetime", &scenario, "--set", "sweep.min=3.0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("malformed"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unknown_key_lists_valid_keys() {
    let dir = TempDir::new().unwrap();
    let scenario = write(dir.path(), "life.toml", SHORT_LIFETIME);
    let o = run_in(dir.path(), &["lifetime", &scenario, "--set", "circuit.EJ4=1.0"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("EJ4") && err.contains("EJ1") && err.contains("delta_phi"), "{err}");
    assert_eq!(files(dir.path()), vec!["life.toml"]);
}

#[test]
fn wrong_command_and_axis_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let scenario = write(dir.path(), "life.toml", &format!("command = \"lifetime\"\n{SHORT_LIFETIME}"));
    assert_eq!(run_in(dir.path(), &["spectrum", &scenario]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["lifetime", &scenario, "--set", "sweep.axis=phase"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["lifetime", &scenario, "--set", "model.dissipators=o5"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["lifetime", &scenario, "--set", "circuit.M=0"]).status.code(), Some(2));
    assert_eq!(files(dir.path()), vec!["life.toml"]);
}

#[test]
fn resource_guard() {
    let dir = TempDir::new().unwrap();
    let scenario = write(dir.path(), "life.toml", SHORT_LIFETIME);
    let o = run_in(dir.path(), &["lifetime", &scenario, "--set", "sweep.points=1000000"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let o = run_in(dir.path(), &["steady", "@fig7", "--set", "numerics.dim=5000"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert_eq!(files(dir.path()), vec!["life.toml"]);
}

#[test]
fn partial_failure_still_writes_results() {
    let dir = TempDir::new().unwrap();
    // Half of the depths lie beyond π/2, where the expansion is undefined.
    let o = run_in(dir.path(), &["lifetime", "@fig12", "--set", "sweep.max=3.0", "--set", "sweep.points=6"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let side = sidecar(dir.path(), "fig12");
    assert_eq!(side["series"][0]["failures"], 3);
    let csv = fs::read_to_string(dir.path().join("fig12_sts.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.contains("NaN")).count(), 3);
}

#[test]
fn presets_are_listed_and_round_trip() {
    let o = kerrcat(&["presets"]);
    assert_eq!(o.status.code(), Some(0));
    let list = String::from_utf8(o.stdout).unwrap();
    assert!(list.lines().any(|l| l == "fig4"));
    for name in list.lines() {
        let o = kerrcat(&["preset", name]);
        assert_eq!(o.status.code(), Some(0));
        let text = String::from_utf8(o.stdout).unwrap();
        let s = kerrcat_cli::scenario::Scenario::parse(&text).unwrap();
        assert_eq!(kerrcat_cli::scenario::Scenario::parse(&s.to_toml()).unwrap(), s, "{name}");
    }
    assert_eq!(kerrcat(&["preset", "nope"]).status.code(), Some(2));
}

#[test]
fn array_size_preset_has_four_arrays() {
    let text = String::from_utf8(kerrcat(&["preset", "fig5"]).stdout).unwrap();
    let s = kerrcat_cli::scenario::Scenario::parse(&text).unwrap();
    let (_, series) = kerrcat_cli::scenario::resolve(text.parse().unwrap(), &[]).unwrap();
    assert_eq!(s.variants.len(), 4);
    let sizes: Vec<(u32, u32)> = series.iter().map(|v| (v.scenario.circuit.m, v.scenario.circuit.n)).collect();
    assert_eq!(sizes, vec![(2, 2), (2, 4), (3, 6), (10, 10)]);
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = TempDir::new().unwrap();
    let scenario = write(dir.path(), "life.toml", SHORT_LIFETIME);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, jobs) in [(&a, "1"), (&b, "2")] {
        let o = kerrcat(&["lifetime", &scenario, "--jobs", jobs, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(fs::read(a.join("life.csv")).unwrap(), fs::read(b.join("life.csv")).unwrap());
    assert_eq!(sidecar(&b, "life")["jobs"], 2);
}

#[test]
fn sidecar_reruns_to_the_same_tables() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["--set", "sweep.points=11", "--set", "model.lambda_over_K=0.05"];
    let mut first = vec!["spectrum", "@fig13", "--out", a.to_str().unwrap()];
    first.extend(args);
    assert_eq!(kerrcat(&first).status.code(), Some(0));
    let side = a.join("fig13.json");
    let o = kerrcat(&["spectrum", side.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["fig13_delta2.csv", "fig13_delta4.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn surface_reports_cat_wells() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["surface", "@fig2a", "--set", "numerics.grid_points=61"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ext = fs::read_to_string(dir.path().join("fig2a_b_extrema.csv")).unwrap();
    assert!(ext.starts_with("x,p,E_over_K,kind\n"));
    assert_eq!(ext.lines().filter(|l| l.ends_with(",1")).count(), 2, "{ext}");
    assert_eq!(fs::read_to_string(dir.path().join("fig2a_a.csv")).unwrap().lines().count(), 61 * 61 + 1);
}

#[test]
fn degeneracies_sit_at_even_detunings() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["degeneracy", "@fig2cd", "--set", "sweep.points=181"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("fig2cd_lambda0.csv")).unwrap();
    let mut centers: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    centers.dedup();
    for (k, c) in centers.iter().enumerate() {
        assert!((c - 2.0 * k as f64).abs() < 1e-6, "{centers:?}");
    }
    assert_eq!(centers.len(), 5);
}
