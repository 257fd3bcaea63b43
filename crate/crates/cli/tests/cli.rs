use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qlink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlink")).args(args).output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn out_path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(path: &str) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(Result::unwrap).collect()
}

fn column(path: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

const BASIC: &str = r#"
protocol = "epl"
eta = 0.1
n_add = 0.05
p_e = 0.4
attempt_rate_hz = 1e6
trials = 800
seed = 42
"#;

#[test]
fn run_is_reproducible_and_has_a_manifest() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", BASIC);
    let a = out_path(&dir, "a.csv");
    let b = out_path(&dir, "b.csv");
    assert!(qlink(&["run", "--config", &cfg, "--out", &a]).status.success());
    let o = qlink(&["run", "--config", &cfg, "--out", &b, "--threads", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let header = String::from_utf8(ta.clone()).unwrap().lines().next().unwrap().to_string();
    assert_eq!(
        header,
        "protocol,eta,n_add,p_e,attempt_rate_hz,t1_s,t2phi_s,gate_epsilon,trials,heralds,accepted,fidelity_mean,fidelity_sem,ebit_rate_hz,seed"
    );

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(format!("{a}.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 42);
    let digest = &manifest["outputs"][0]["sha256"];
    let expected: String = {
        use sha2::Digest;
        sha2::Sha256::digest(&ta).iter().map(|b| format!("{b:02x}")).collect()
    };
    assert_eq!(digest.as_str().unwrap(), expected);
    assert!(manifest["started_at"].as_str().unwrap().ends_with('Z'));

    // the manifest alone reproduces the output
    let replay = write(&dir, "replay.toml", manifest["config_toml"].as_str().unwrap());
    let c = out_path(&dir, "c.csv");
    assert!(qlink(&["run", "--config", &replay, "--out", &c]).status.success());
    assert_eq!(fs::read(&c).unwrap(), ta);
}

#[test]
fn seed_and_trials_flags_override() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", BASIC);
    let a = out_path(&dir, "a.csv");
    assert!(qlink(&["run", "--config", &cfg, "--out", &a, "--seed", "7", "--trials", "100"]).status.success());
    let r = &rows(&a)[0];
    assert_eq!((&r[8], &r[14]), ("100", "7"));
}

#[test]
fn zero_accept_run_leaves_fidelity_empty() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.toml",
        "protocol = \"one_click\"\neta = 0.0\nn_add = 0.0\ntrials = 5\nmax_trial_attempts = 100\n",
    );
    let a = out_path(&dir, "a.csv");
    let o = qlink(&["run", "--config", &cfg, "--out", &a]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = &rows(&a)[0];
    assert_eq!((&r[10], &r[11], &r[12], &r[13]), ("0", "", "", "0.0"));
}

#[test]
fn json_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", BASIC);
    let a = out_path(&dir, "a.json");
    assert!(qlink(&["run", "--config", &cfg, "--out", &a, "--format", "json"]).status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(v[0]["protocol"], "epl");
    assert_eq!(v[0]["trials"], 800);
    assert!(v[0]["t1_s"].is_null());
    assert!(Path::new(&format!("{a}.manifest.json")).exists());
}

#[test]
fn bad_configs_fail_with_a_useful_message() {
    let dir = TempDir::new().unwrap();
    let a = out_path(&dir, "a.csv");
    for (text, needle) in [
        ("protocol = \"epl\"\nfoo = 1\n", "foo"),
        ("protocol = \"epl\"\neta = 1.5\n", "[0, 1]"),
        ("eta = 0.5\n", "protocol"),
        ("protocol = \"epl\"\npreset = \"s1\"\n", "s1"),
    ] {
        let cfg = write(&dir, "bad.toml", text);
        let o = qlink(&["run", "--config", &cfg, "--out", &a]);
        assert!(!o.status.success());
        assert!(stderr(&o).contains(needle), "{needle}: {}", stderr(&o));
    }
    let cfg = write(&dir, "c.toml", BASIC);
    let unwritable = dir.path().join("missing-dir").join("a.csv");
    let o = qlink(&["run", "--config", &cfg, "--out", unwritable.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn eta_sweep_rates_increase() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "s.toml",
        r#"
protocol = "one_click"
n_add = 0.1
trials = 2000
seed = 3
[sweep]
[[sweep.axis]]
param = "eta"
values = [0.001, 0.01, 0.1, 1.0]
"#,
    );
    let a = out_path(&dir, "s.csv");
    let o = qlink(&["sweep", "--config", &cfg, "--out", &a]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rates: Vec<f64> = column(&a, "ebit_rate_hz").iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(rates.len(), 4);
    assert!(rates.windows(2).all(|w| w[1] >= w[0]), "{rates:?}");
    let seeds = column(&a, "seed");
    assert!(seeds.windows(2).all(|w| w[0] != w[1]));
    // run refuses sweep files
    assert!(!qlink(&["run", "--config", &cfg]).status.success());
}

#[test]
fn sweep_rows_match_single_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "s.toml",
        r#"
protocol = "two_click"
trials = 300
seed = 9
[sweep]
protocols = ["two_click", "epl"]
eta_over_n_add = 10
[[sweep.axis]]
param = "eta"
values = [0.05, 0.2]
"#,
    );
    let a = out_path(&dir, "s.csv");
    assert!(qlink(&["sweep", "--config", &cfg, "--out", &a]).status.success());
    let all = rows(&a);
    assert_eq!(all.len(), 4);
    let last = &all[3];
    assert_eq!((&last[0], &last[1], &last[2]), ("epl", "0.2", "0.02"));
    let single = write(
        &dir,
        "one.toml",
        &format!("protocol = \"epl\"\neta = 0.2\nn_add = 0.02\ntrials = 300\nseed = {}\n", &last[14]),
    );
    let b = out_path(&dir, "one.csv");
    assert!(qlink(&["run", "--config", &single, "--out", &b]).status.success());
    assert_eq!(&rows(&b)[0], last);
}

#[test]
fn optimize_pe_reports_the_optimum() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", "protocol = \"two_click\"\neta = 0.1\nn_add = 0.1\ntrials = 2000\n");
    let o = qlink(&["optimize-pe", "--config", &cfg, "--objective", "rate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stderr(&o);
    let p: f64 = text
        .split("p_e_opt = ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((p - 0.5).abs() <= 1.0 / 22.0, "{p}");
    assert!(!qlink(&["optimize-pe", "--config", &cfg, "--grid", "5"]).status.success());
}

#[test]
fn present_preset_is_near_the_classical_threshold() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "p.toml",
        "preset = \"present\"\nprotocol = \"one_click\"\npe_policy = \"max_fidelity\"\ntrials = 5000\n",
    );
    let a = out_path(&dir, "p.csv");
    let o = qlink(&["run", "--config", &cfg, "--out", &a]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f: f64 = column(&a, "fidelity_mean")[0].parse().unwrap();
    assert!((0.47..=0.56).contains(&f), "fidelity {f} outside [0.47, 0.56]");
}

#[test]
fn presets_listing() {
    let o = qlink(&["presets", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let all = v.as_array().unwrap();
    assert!(all.len() >= 10);
    assert_eq!(all.iter().filter(|p| p["kind"] == "device").count(), 6);
    let text = String::from_utf8(qlink(&["presets"]).stdout).unwrap();
    for name in ["present", "present-no-t1", "s2", "s3", "si-om"] {
        assert!(text.contains(name));
    }
    let csv_out = String::from_utf8(qlink(&["presets", "--format", "csv"]).stdout).unwrap();
    assert!(csv_out.starts_with("name,kind,eta"));
}

#[test]
fn config_command_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "p.toml", "preset = \"s3\"\nprotocol = \"epl\"\nseed = 5\n");
    let first = qlink(&["config", "--config", &cfg]);
    assert!(first.status.success());
    let resolved = write(&dir, "r.toml", &String::from_utf8(first.stdout.clone()).unwrap());
    let second = qlink(&["config", "--config", &resolved]);
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("eta = 0.3") && text.contains("t1_s = 0.01"), "{text}");
}
