use std::fs;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnoise-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn list_names_every_benchmark_and_noise_kind() {
    let out = bench(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["idle", "random", "adder", "qft", "qft_ct", "qaoa", "qaoa_ct"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(name)), "{name}");
    }
    for name in ["pauli", "coherent", "pauli_coherent", "amplitude_damping", "phase_damping"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"benchmark":"idle","noise":"pauli","trials":0}"#).unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["run".into(), "--config".into(), bad.display().to_string()],
        vec!["run".into(), "--config".into(), dir.path().join("missing.json").display().to_string()],
        vec!["run".into(), "--benchmark".into(), "nope".into(), "--noise".into(), "pauli".into()],
        vec!["run".into(), "--benchmark".into(), "qft".into(), "--noise".into(), "pauli".into(), "--rc".into(), "on".into()],
        vec!["run".into(), "--benchmark".into(), "idle".into()],
    ];
    for args in cases {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = bench(&refs);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("config error"), "{args:?}");
    }
}

#[test]
fn reruns_produce_byte_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"benchmark":"random","noise":"coherent","rc":true,"trials":4,"seed":5,
            "levels":[0,2],"depths":{"start":2,"stop":10,"step":4}}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (i, fmt) in ["csv", "csv", "json", "json"].iter().enumerate() {
        let path = dir.path().join(format!("out{i}.{fmt}"));
        let out = bench(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
            "--format",
            fmt,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[2], outputs[3]);
    let csv = String::from_utf8(outputs[0].clone()).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    assert!(csv.starts_with("benchmark,noise,param,depth,rc,metric,mean,stderr,trials,seed\n"));
}

#[test]
fn flags_override_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"benchmark":"idle","noise":"pauli","trials":3,"levels":[1],
        "depths":{"start":4,"stop":4,"step":1}}"#)
        .unwrap();
    let out = bench(&["run", "--config", cfg.to_str().unwrap(), "--trials", "2", "--seed", "11", "--rc", "on"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[4], "true");
    assert_eq!(fields[8], "2");
    assert_eq!(fields[9], "11");
}
