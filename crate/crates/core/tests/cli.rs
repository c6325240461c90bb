use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn mqsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mqsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn sweep_list_override_sets_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let o = mqsim(
        dir.path(),
        &[
            "capacity",
            "sweep",
            "--config",
            &cfg("figure6.cfg"),
            "--set",
            "alpha_min_list=0.05,0.2,0.5,0.9",
            "--set",
            "e_max=100",
            "--out",
            "s.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha_min,rate_opt,rate_mp,gap_pct");
    assert_eq!(lines.len(), 5);
    assert!(lines[3].starts_with("0.5,"));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.csv", "b.csv"] {
        let o = mqsim(
            dir.path(),
            &[
                "quorum",
                "simulate",
                "--config",
                &cfg("paper-closed.cfg"),
                "--seed",
                "7",
                "--out",
                out,
            ],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert!(a.starts_with(b"t,N,A,R_tot,C_tot,S_tot,V_expr,"));
}

#[test]
fn missing_key_is_named_with_config_exit() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("paper-closed.cfg")).unwrap();
    let stripped: String = text
        .lines()
        .filter(|l| !l.starts_with("gamma"))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(dir.path().join("c.cfg"), stripped).unwrap();
    let o = mqsim(dir.path(), &["quorum", "simulate", "--config", "c.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gamma"), "{}", stderr(&o));
}

#[test]
fn shipped_configs_validate() {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            let o = mqsim(dir.path(), &["validate", "--config", path.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
        }
    }
}

#[test]
fn inverted_bounds_are_a_named_violation() {
    let dir = tempfile::tempdir().unwrap();
    let o = mqsim(
        dir.path(),
        &["validate", "--config", &cfg("figure6.cfg"), "--set", "lambda_min=2.0"],
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("lambda_min") && err.contains("lambda_max"), "{err}");
}

#[test]
fn cramped_vessel_is_a_named_violation() {
    let dir = tempfile::tempdir().unwrap();
    let o = mqsim(
        dir.path(),
        &[
            "validate",
            "--config",
            &cfg("paper-closed.cfg"),
            "--set",
            "V_tot=0.0001",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("V_tot"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = mqsim(
        dir.path(),
        &["validate", "--config", &cfg("paper-open.cfg"), "--set", "quorum.gama=3"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gama"), "{}", stderr(&o));
}

#[test]
fn parse_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.cfg"),
        "model = \"capacity\"\nseed = 1\n[capacity\ne_max = 3\n",
    )
    .unwrap();
    let o = mqsim(dir.path(), &["validate", "--config", "bad.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn replay_reproduces_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let o = mqsim(
        dir.path(),
        &[
            "reduced",
            "simulate",
            "--config",
            &cfg("reduced.cfg"),
            "--seed",
            "3",
            "--out",
            "r.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = mqsim(dir.path(), &["replay", "r.csv.manifest.json", "--out", "again.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(dir.path().join("r.csv")).unwrap(),
        std::fs::read(dir.path().join("again.csv")).unwrap()
    );

    let path = dir.path().join("r.csv.manifest.json");
    let mut m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    m["output_digest"] = "0".repeat(64).into();
    std::fs::write(&path, m.to_string()).unwrap();
    let o = mqsim(dir.path(), &["replay", "r.csv.manifest.json", "--out", "third.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn multi_run_output_has_run_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = mqsim(
        dir.path(),
        &[
            "cell",
            "simulate",
            "--config",
            &cfg("cell.cfg"),
            "--runs",
            "3",
            "--horizon",
            "100",
            "--out",
            "c.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert!(text.starts_with("run,"), "{text}");
    assert_eq!(text.lines().count(), 1 + 3 * 11);
}
