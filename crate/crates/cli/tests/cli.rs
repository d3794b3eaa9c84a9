use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nct_core::metrics::{read_metrics, MetricsRecord, REPORT_HEADER};

fn nct(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nct"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn generate(dir: &Path, name: &str, seed: u64) {
    ok(nct(&["generate", "--n", "300", "--seed", &seed.to_string(), "--output", name], dir));
}

fn write_config(dir: &Path, name: &str, method: &str, out: &str) {
    fs::write(
        dir.join(name),
        format!(
            "method = {method}\nlayer_dims = 2,8,8,2\ntotal_epochs = 4\nbatch_size = 32\n\
             dataset_path = noisy.csv\ntest_path = test.csv\noutput_dir = {out}\n\
             probe_hidden_dims = 16\nprobe_num_samples = 200\nprobe_epochs = 3\nprobe_batch_size = 32\n"
        ),
    )
    .unwrap();
}

#[test]
fn zero_rate_corruption_only_appends_footer() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "a.csv", 1);
    let before = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let stdout = ok(nct(&["corrupt", "--input", "a.csv", "--output", "b.csv", "--kind", "sym-incl", "--rate", "0"], dir.path()));
    assert!(stdout.contains("realized noise rate 0.000000"));
    let after = fs::read_to_string(dir.path().join("b.csv")).unwrap();
    let (body, footer) = after.split_at(before.len());
    assert_eq!(body, before);
    assert!(footer.starts_with("# corrupt kind=sym-incl rate=0 seed=0"));
    assert_eq!(footer.lines().count(), 1);
}

#[test]
fn corrupting_twice_is_rejected_but_comments_survive() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "a.csv", 2);
    ok(nct(&["corrupt", "--input", "a.csv", "--kind", "pair", "--rate", "0.3", "--seed", "4"], dir.path()));
    let text = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(text.lines().last().unwrap().starts_with("# corrupt kind=pair rate=0.3 seed=4"));
    let again = nct(&["corrupt", "--input", "a.csv", "--kind", "pair", "--rate", "0.3"], dir.path());
    assert_eq!(again.status.code(), Some(3));
}

#[test]
fn usage_and_config_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nct(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(nct(&["corrupt", "--input", "x.csv", "--kind", "bogus", "--rate", "0.1"], dir.path()).status.code(), Some(1));
    assert_eq!(nct(&["train", "--config", "missing.cfg"], dir.path()).status.code(), Some(2));

    fs::write(dir.path().join("bad.cfg"), "method = nct\nlayer_dims = 2,2\nlearning_rate = 3\n").unwrap();
    let out = nct(&["train", "--config", "bad.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));

    write_config(dir.path(), "nofile.cfg", "nct", "run");
    assert_eq!(nct(&["train", "--config", "nofile.cfg"], dir.path()).status.code(), Some(2));
}

#[test]
fn train_probe_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    generate(root, "clean.csv", 3);
    generate(root, "test.csv", 4);
    ok(nct(&["corrupt", "--input", "clean.csv", "--output", "noisy.csv", "--kind", "sym-excl", "--rate", "0.4"], root));
    fs::create_dir(root.join("runs")).unwrap();
    for method in ["nct", "standard"] {
        let cfg = format!("{method}.cfg");
        write_config(root, &cfg, method, &format!("runs/{method}"));
        ok(nct(&["train", "--config", &cfg], root));
        let run = root.join("runs").join(method);
        assert!(run.join("config.resolved").is_file());
        assert!(run.join("model1.bin").is_file());
        assert_eq!(run.join("model2.bin").is_file(), method == "nct");
        ok(nct(&["probe", "--config", &cfg, "--model", &format!("runs/{method}/model1.bin")], root));

        let records = read_metrics(&run.join("metrics.jsonl")).unwrap();
        assert_eq!(records.iter().filter(|r| matches!(r, MetricsRecord::Epoch(_))).count(), 4);
        assert!(matches!(records[4], MetricsRecord::Summary(_)));
        assert!(matches!(records[5], MetricsRecord::Probe(_)));
    }

    let report = ok(nct(&["report", "--runs", "runs"], root));
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], REPORT_HEADER);
    assert!(lines[1].starts_with("nct,nct,"));
    assert!(lines[2].starts_with("standard,standard,"));
    assert!(!lines[1].ends_with(','), "probe column filled");
}
