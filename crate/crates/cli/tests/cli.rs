use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn shifts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shifts")).args(args).env("SHIFTS_THREADS", "2").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn entropy_csv_matches_fibonacci() {
    let gm = data("golden_mean.json");
    let o = shifts(&["entropy", "--spec", &gm, "--window", "5..20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "window_id,size,count,estimate,bound");
    assert_eq!(lines.len(), 17);
    let last: Vec<&str> = lines[16].split(',').collect();
    assert_eq!(last[1], "20");
    assert_eq!(last[2], "17711");
    let est: f64 = last[3].parse().unwrap();
    assert!((est - 17711f64.ln() / 20.0).abs() < 1e-9);
    assert!((est - 0.4891).abs() < 1e-4);
}

#[test]
fn entropy_with_tile_bound() {
    let gm = data("golden_mean.json");
    let t = data("interval10.json");
    let o = shifts(&["entropy", "--spec", &gm, "--tileset", &t, "--window", "100", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let row = &v["report"][0];
    assert!((row["bound"].as_f64().unwrap() - 144f64.ln() / 10.0).abs() < 1e-9);
    assert_eq!(row["dominated"], true);
}

#[test]
fn tile_json_and_svg() {
    let t = data("interval3.json");
    let o = shifts(&["tile", "--tileset", &t, "--window", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["report"]["tiling"]["placements"].as_array().unwrap().len(), 6);
    assert_eq!(v["report"]["errors"], 2);
    assert_eq!(v["report"]["maximal"], true);
    let svg = shifts(&["tile", "--tileset", &t, "--window", "20", "--format", "svg"]);
    assert_eq!(svg.status.code(), Some(0));
    let s = stdout(&svg);
    assert!(s.starts_with("<svg"));
    assert_eq!(s.matches("<rect").count(), 20);
}

#[test]
fn glue_exit_codes() {
    let gm = data("golden_mean.json");
    let two = data("two_constant.json");
    let full = data("full_shift.json");
    assert_eq!(shifts(&["glue", "--spec", &gm, "--r", "1", "--window", "4"]).status.code(), Some(0));
    assert_eq!(shifts(&["glue", "--spec", &full, "--r", "1", "--window", "4"]).status.code(), Some(0));
    let o = shifts(&["glue", "--spec", &two, "--r", "2", "--window", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["report"]["verdict"]["verdict"], "counterexample");
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"alphabet\": [0, 1],\n \"zero\": 0,,}").unwrap();
    let o = shifts(&["entropy", "--spec", bad.to_str().unwrap(), "--window", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2 column 12"), "{}", stderr(&o));

    let gm = data("golden_mean.json");
    let o = shifts(&["approx", "--spec", &gm, "--r", "2", "--eps", "1.5", "--window", "60"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--eps"));
    let o = shifts(&["approx", "--spec", &gm, "--eps", "0.3", "--window", "60"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--r"));
    let o = shifts(&["entropy", "--spec", &gm, "--window", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = shifts(&["tile", "--tileset", &data("interval3.json"), "--window", "20", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_shifts")).args(["verify"]).env("SHIFTS_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn certificate_failure_exits_two_with_report() {
    let gm = data("golden_mean.json");
    let o = shifts(&["chain", "--spec", &gm, "--r", "2", "--eps", "0.01", "--c", "0.3", "--window", "20"]);
    assert_eq!(o.status.code(), Some(2));
    let v = json(&o);
    assert_eq!(v["pass"], false);
    assert!(v["report"]["error"].as_str().unwrap().contains("no certified tile set"));
}

#[test]
fn approx_and_chain() {
    let gm = data("golden_mean.json");
    let o = shifts(&["approx", "--spec", &gm, "--r", "2", "--eps", "0.3", "--window", "60"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["report"]["ball"]["x_count"], 13);
    assert_eq!(v["report"]["ball"]["y_count"], 13);
    assert!(v["report"]["estimate"]["hi"].as_f64().unwrap() < 0.3);

    let full = data("full_shift.json");
    let o = shifts(&["chain", "--spec", &full, "--r", "1", "--eps", "0.15", "--c", "0.5", "--window", "60"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let lo = v["report"]["selected_estimate"]["lo"].as_f64().unwrap();
    let hi = v["report"]["selected_estimate"]["hi"].as_f64().unwrap();
    assert!(lo >= 0.5 - 1e-9 && hi < 0.65, "[{lo}, {hi}]");
}

#[test]
fn spectrum_csv() {
    let r = data("interval10.json");
    let o = shifts(&["spectrum", "--tileset", &r, "--eps", "0.1", "--window", "40", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "level,count,estimate,gap,bound");
    assert_eq!(lines.len(), 12);
    assert!(lines[1].starts_with("0,1,0.0000000000,"));
    assert!(lines[11].starts_with("10,1099511627776,"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let gm = data("golden_mean.json");
    let r = data("interval10.json");
    let runs: [&[&str]; 4] = [
        &["verify", "--seed", "7"],
        &["approx", "--spec", &gm, "--r", "2", "--eps", "0.3", "--window", "40"],
        &["spectrum", "--tileset", &r, "--eps", "0.1", "--window", "30"],
        &["entropy", "--spec", &gm, "--window", "1..30", "--format", "json"],
    ];
    for args in runs {
        let a = shifts(args);
        let b = Command::new(env!("CARGO_BIN_EXE_shifts")).args(args).env("SHIFTS_THREADS", "1").output().unwrap();
        assert_eq!(a.status.code(), Some(0), "{args:?}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn out_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = shifts(&["verify", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["config"]["command"], "verify");
    assert_eq!(v["config"]["formula_version"], "bounds-v1");
    assert!(!dir.path().join("report.json.tmp").exists());
}
