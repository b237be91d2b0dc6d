use std::path::Path;
use std::process::Command;

fn casgen(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_casgen")).args(args).output().unwrap()
}

fn data() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/processed.cleveland.data")
        .canonicalize()
        .unwrap()
        .display()
        .to_string()
}

#[test]
fn usage_and_config_errors_exit_1() {
    assert_eq!(casgen(&["run"]).status.code(), Some(1));
    assert_eq!(casgen(&["run", "--config", "/no/such/file.toml"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, format!("methods = [\"C-NB\"]\n[data]\npath = {:?}\n", data())).unwrap();
    assert_eq!(casgen(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    std::fs::write(&cfg, format!("methods = [\"NB\"]\ncolour = 1\n[data]\npath = {:?}\n", data())).unwrap();
    assert_eq!(casgen(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.data");
    std::fs::write(&bad, "1,2,3\n").unwrap();
    assert_eq!(casgen(&["reproduce-paper", "--data", bad.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.data");
    assert_eq!(casgen(&["reproduce-paper", "--data", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn train_then_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, format!("methods = [\"C4.5\"]\n[data]\npath = {:?}\n", data())).unwrap();
    let model = dir.path().join("m.json");
    let out = casgen(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--method",
        "RS-C-RPR",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = casgen(&["inspect-model", model.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("method: RS-C-RPR"), "{text}");
    assert_eq!(casgen(&["inspect-model", cfg.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn markdown_report_with_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        format!(
            "methods = [\"NB\", \"Bg-C4.5\"]\n[data]\npath = {:?}\n[protocol]\nruns = 1\nfolds = 3\n\
             [ensemble]\nn_members = 3\n[report]\nlog_masks = true\n",
            data()
        ),
    )
    .unwrap();
    let report = dir.path().join("r.md");
    let out = casgen(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "markdown",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = std::fs::read_to_string(&report).unwrap();
    assert!(body.contains("| NB |") && body.contains("| Bg-C4.5 |"), "{body}");
    let provenance = std::fs::read_to_string(dir.path().join("r.md.provenance")).unwrap();
    assert!(provenance.contains("config_sha256: "));
    assert!(dir.path().join("r.md.masks.tsv").exists());
}
