use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
[dataset]
pool_size = 120
eval_size = 20
test_size = 100

[acquisition]
method = "epig_bald_topk"
rounds = 2

[model]
hidden = [8]
members = 2
epochs = 3

[experiment]
trials = 2
seed = 9
"#;

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epig-bench"))
        .args(args)
        .env_remove("EPIG_BENCH_THREADS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("c.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn missing_config_exits_1() {
    let out = bench(&["run", "/definitely/not/here.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn invalid_config_exits_1_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "[acquisition]\nacquisition_size = 0\n");
    let out = bench(&["validate-config", &c]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("acquisition.acquisition_size"));
    let c = write_config(dir.path(), "[acquisition]\nbogus = 1\n");
    assert_eq!(bench(&["validate-config", &c]).status.code(), Some(1));
}

#[test]
fn unknown_subcommand_and_bad_threads_exit_1() {
    assert_eq!(bench(&["frobnicate"]).status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_epig-bench"))
        .args(["check-identities", "--instances", "1"])
        .env("EPIG_BENCH_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_config_prints_the_digest() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), TINY);
    let out = bench(&["validate-config", &c]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let digest = epig::config::parse_config_str(TINY).unwrap().digest();
    assert!(text.contains(&digest));
}

#[test]
fn runs_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), TINY);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = bench(&[
        "run",
        &c,
        "--out-dir",
        a.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = bench(&[
        "run",
        &c,
        "--out-dir",
        b.to_str().unwrap(),
        "--threads",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    let names: Vec<&str> = fa.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(
        names,
        [
            "accuracy.svg",
            "config.toml",
            "ood_ratio.svg",
            "rounds.csv",
            "summary.csv"
        ]
    );
    assert_eq!(fa, fb);
}

#[test]
fn trial_and_seed_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), TINY);
    let a = dir.path().join("a");
    let out = bench(&[
        "run",
        &c,
        "--out-dir",
        a.to_str().unwrap(),
        "--trials",
        "1",
        "--seed",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rounds = std::fs::read_to_string(a.join("rounds.csv")).unwrap();
    assert_eq!(rounds.lines().count(), 1 + 3);
    assert!(rounds
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(6) == Some("4")));
}

#[test]
fn ablation_and_toy_map_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), TINY);
    let a = dir.path().join("abl");
    let out = bench(&[
        "ablate-eval",
        &c,
        "--sizes",
        "5,10",
        "--out-dir",
        a.to_str().unwrap(),
        "--trials",
        "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(a.join("ablation.csv").is_file());
    assert!(a.join("eval_5").join("rounds.csv").is_file());
    let m = dir.path().join("map");
    let out = bench(&[
        "toy-map",
        &c,
        "--grid-steps",
        "9",
        "--out-dir",
        m.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(m.join("score_map.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 81);
    assert!(m.join("score_map.svg").is_file());
}

#[test]
fn check_identities_reports_every_suite() {
    let out = bench(&["check-identities", "--instances", "20", "--seed", "0"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    let failed = text.lines().any(|l| l.contains(" FAIL "));
    assert_eq!(out.status.code(), Some(if failed { 3 } else { 0 }));
    for suite in [
        "epig_three_forms",
        "conditioning_inequality",
        "batchbald_submodularity",
        "greedy_bound",
        "batchbald_redundancy",
        "mc_joint_entropy",
    ] {
        let line = text.lines().find(|l| l.starts_with(suite)).unwrap();
        assert!(line.contains(" PASS "), "{line}");
    }
}
