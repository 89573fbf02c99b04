use std::path::PathBuf;
use std::process::{Command, Output};

fn tsgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsgame")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tsgame-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn estimate_presets() {
    let o = tsgame(&["estimate", "--preset", "table1", "--format", "csv"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("quantity,value,unit,source\n"));
    assert!(s.contains("T factories total,52325,atoms,computed"));
    assert!(s.contains("runtime,12200.0,s,computed"));

    let o = tsgame(&["estimate", "--preset", "zoned-baseline", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["runtime_seconds"], 59400.0);
}

#[test]
fn estimate_is_byte_for_byte_reproducible() {
    let a = tsgame(&["estimate", "--preset", "table1"]);
    let b = tsgame(&["estimate", "--preset", "table1"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn estimate_config_and_exit_codes() {
    let ok = scratch("ok.toml", "d = 9\n[workload]\nwidth = 50\ndepth = 1000\nt_count = 10000\n");
    let o = tsgame(&["estimate", "--config", ok.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["logical_qubits"], 50);

    let inf = scratch("inf.toml", "[factories]\nt = 0\n");
    assert_eq!(tsgame(&["estimate", "--config", inf.to_str().unwrap()]).status.code(), Some(2));

    let bad = scratch("bad.toml", "d = 4\n");
    assert_eq!(tsgame(&["estimate", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn timing_sweep_csv() {
    let o = tsgame(&["timing", "--sweep", "3:11"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "d,tau_SE,tau_CX,tau_H_direct,tau_H_aod,tau_r,tau_foldS");
    assert_eq!(lines.len(), 1 + 5);
    assert!(lines[4].starts_with("9,"));
}

#[test]
fn distill_report() {
    let o = tsgame(&["distill", "--code", "rm15", "--gate", "T", "--p", "1e-3"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["analysis"]["leading_coeff"], 35.0);
    assert_eq!(v["analysis"]["leading_power"], 3);
    assert_eq!(v["pipeline"]["buffer_size"], 5);
    assert!(tsgame(&["distill", "--code", "steane7", "--gate", "T"]).status.code() == Some(1));
}

#[test]
fn factory_sweep_and_trace() {
    let trace = scratch("trace.csv", "");
    let mut prev = f64::INFINITY;
    for nmb in ["1", "2", "4", "8"] {
        let o = tsgame(&["factory", "--nmb", nmb, "--trace", trace.to_str().unwrap()]);
        assert!(o.status.success());
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        let t = v["tau_factory"].as_f64().unwrap();
        assert!(t <= prev);
        prev = t;
    }
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("time_us,event,feed,mb_cell\n"));
}

#[test]
fn validate_reports_lines() {
    let good = scratch("good.sched", "grid 3x3\nprep 0 1,1\nh 1,1\nroute 1,1 2,1\nmz 2,1\n");
    let o = tsgame(&["validate", good.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("ok:"));

    let bad = scratch("bad.sched", "grid 3x3\nprep 0 0,0\nprep 0 2,2\ncx 0,0 2,2\n");
    let o = tsgame(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("line 4: R4"), "{}", stdout(&o));
}

#[test]
fn compile_circuit_and_workload() {
    let circ = scratch("c.txt", "qubits 3\nH 0\nCX 0 1\nS 2\nT 1\nMZ 0\n");
    let out = circ.with_file_name("s.json");
    let o = tsgame(&["compile", "--circuit", circ.to_str().unwrap(), "--grid", "4x5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["t_count"], 1);
    assert!(v["program"]["ops"].as_array().unwrap().len() > 5);

    let o = tsgame(&["compile", "--workload", "W=100 tcount=1e8 tperlayer=5"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["cycle_count"], 20_000_000);

    let wide = scratch("wide.txt", "qubits 9\nH 8\n");
    assert_eq!(tsgame(&["compile", "--circuit", wide.to_str().unwrap(), "--grid", "2x2"]).status.code(), Some(1));
}
