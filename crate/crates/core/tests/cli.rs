use std::path::Path;
use std::process::{Command, Output};

fn privmed(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_privmed"))
        .current_dir(dir)
        .env_remove("PRIVMED_OUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn success_writes_json_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = privmed(dir.path(), &["gen-game", "--kind", "threshold", "--n", "10", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 10);
}

#[test]
fn abort_exits_with_two() {
    // a starved budget makes the noisy threshold swamp every query on some seeds
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out =
        privmed(d, &["gen-game", "--kind", "linear", "--n", "4", "--with-loss", "--seed", "1", "--out", "g.json"]);
    assert_eq!(out.status.code(), Some(0));
    let mut codes = Vec::new();
    for seed in 0..20 {
        let seed = seed.to_string();
        let args = ["presl", "--game", "g.json", "--eps", "0.001", "--alpha", "0.2", "--e1", "0.1", "--seed", &seed];
        let out = privmed(d, &args);
        let code = out.status.code().unwrap();
        if code == 2 {
            let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
            assert_eq!(v["result"]["outcome"], "abort");
        }
        codes.push(code);
    }
    assert!(codes.iter().all(|&c| c == 0 || c == 2), "{codes:?}");
    assert!(codes.contains(&2), "no seed aborted: {codes:?}");
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = privmed(d, &["presl", "--game", "missing.json", "--eps", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    // psummnash needs a one-dimensional game
    privmed(d, &["gen-game", "--kind", "anonymous", "--n", "4", "--m", "3", "--out", "a.json"]);
    let out = privmed(d, &["psummnash", "--game", "a.json", "--eps", "10"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn out_dir_names_file_after_command() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    privmed(d, &["gen-game", "--kind", "threshold", "--n", "50", "--out", "t.json"]);
    let out = Command::new(env!("CARGO_BIN_EXE_privmed"))
        .current_dir(d)
        .env("PRIVMED_OUT_DIR", d)
        .args(["psummnash", "--game", "t.json", "--eps", "10", "--no-noise"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("psummnash.json")).unwrap()).unwrap();
    assert_eq!(v["command"], "psummnash");
    assert_eq!(v["arguments"]["output"]["no_noise"], true);
}

#[test]
fn verify_reads_result_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    privmed(d, &["gen-game", "--kind", "threshold", "--n", "50", "--seed", "3", "--out", "t.json"]);
    privmed(d, &["psummnash", "--game", "t.json", "--eps", "10", "--no-noise", "--out", "r.json"]);
    let out = privmed(d, &["verify", "--game", "t.json", "--profile", "r.json", "--eta", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["is_eta_nash"], true);
    let run: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(v["profile"], run["result"]["outcome"]["profile"]);
}
