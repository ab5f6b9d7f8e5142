use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaostrack"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

const SHORT_BEC: &[&str] = &[
    "--chi01", "0.01", "--sweep.min", "0.02", "--sweep.max", "0.06", "--sweep.count", "3", "--spectral.samples", "1024",
];

#[test]
fn wannier_table() {
    let o = run(&["wannier", "--v0", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# chaostrack wannier\n"));
    let rows = data_lines(&text);
    assert_eq!(rows[0], "quantity,index,value");
    assert_eq!(rows.len(), 6);
    let chi00: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((1.5..3.0).contains(&chi00));
}

#[test]
fn header_echoes_every_key_and_resolved_chi01() {
    let text = stdout(&run(&["wannier"]));
    for key in ["v0", "chi00", "chi01", "spectral.threshold", "kr.kbar", "separatrix.n_scan", "mle.t_total"] {
        assert!(text.contains(&format!("# {key} = ")), "{key}");
    }
    assert!(!text.contains("# chi01 = auto"));
}

#[test]
fn frequency_map_schema_and_determinism() {
    let mut a_args = vec!["sweep-bec", "--jobs", "1"];
    a_args.extend_from_slice(SHORT_BEC);
    let mut b_args = vec!["sweep-bec", "--jobs", "2"];
    b_args.extend_from_slice(SHORT_BEC);
    let a = run(&a_args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&b_args);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let rows = data_lines(&text);
    assert_eq!(rows[0], "param,omega,rel_amplitude");
    let params: Vec<f64> = rows[1..].iter().map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(params.windows(2).all(|w| w[0] <= w[1]));
    assert!(params.contains(&0.02) && params.contains(&0.06));
    assert!(text.contains("# note: dense windows"));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# short run\ng = 0.25\nsweep.count = 1 # one point\nsweep.min = 0.5\nsweep.max = 0.5\nkr.kicks = 128\n").unwrap();
    let out = dir.path().join("kr.csv");
    let o = run(&[
        "sweep-kr",
        "--config",
        cfg.to_str().unwrap(),
        "--g",
        "0.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# g = 0.3\n"));
    assert!(text.contains("# kr.kicks = 128\n"));
    assert!(data_lines(&text)[1..].iter().all(|r| r.starts_with("0.5,")));
}

#[test]
fn json_mirror() {
    let o = run(&["wannier", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["command"], "wannier");
    assert_eq!(v["columns"], serde_json::json!(["quantity", "index", "value"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["config"]["v0"], "5");
}

#[test]
fn mle_schema() {
    let o = run(&[
        "mle", "--chi01", "0.01", "--sweep.min", "0.1", "--sweep.max", "0.2", "--sweep.count", "2", "--mle.t_total", "6",
        "--mle.transient", "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows = data_lines(&text);
    assert_eq!(rows[0], "g,lambda_tb,lambda_raw");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("0.1,"));
}

#[test]
fn critical_g_schema() {
    let o = run(&[
        "critical-g",
        "--chi01",
        "0.05",
        "--sweep.min",
        "0.25",
        "--sweep.max",
        "0.8",
        "--sweep.count",
        "2",
        "--separatrix.chaos_window",
        "0",
        "--mle.t_total",
        "4",
        "--mle.transient",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows = data_lines(&text);
    assert_eq!(rows[0], "i1_initial,g_star,g_chaos_lo,g_chaos_hi");
    let first: Vec<&str> = rows[1].split(',').collect();
    let g_star: f64 = first[1].parse().unwrap();
    assert!(g_star > 0.1 && g_star < 0.4, "{g_star}");
    // no separatrix crossing for I1 > 0.5 at phi = -pi/2
    assert!(rows[2].starts_with("0.8,NaN,"));
}

#[test]
fn validation_error_record() {
    let o = run(&["wannier", "--chi00", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    let rec: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(rec["error"], "ValidationError");
    assert_eq!(rec["key"], "chi00");
}

#[test]
fn parse_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "g = 0.1\n\nnot a pair\n").unwrap();
    let o = run(&["wannier", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let rec: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(rec["error"], "ParseError");
    assert_eq!(rec["line"], 3);
}

#[test]
fn runtime_error_names_sweep_point() {
    let o = run(&[
        "sweep-kr", "--kr.mode", "quantum", "--kr.ladder", "4", "--kr.kbar", "1", "--kr.fwhm", "1", "--sweep.min", "30",
        "--sweep.max", "30", "--sweep.count", "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let rec: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(rec["parameter"], "K");
    assert_eq!(rec["value"], 30.0);
}

#[test]
fn unknown_command_and_key() {
    let o = run(&["fig9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fig1a"));
    let o = run(&["wannier", "--no.such.key", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_lists_commands() {
    let o = run(&["--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for c in ["fig1a", "fig2", "fig4", "sweep-bec", "critical-g", "wannier"] {
        assert!(text.contains(c), "{c}");
    }
}
