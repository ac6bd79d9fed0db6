use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ipsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipsim"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const LLN: &str = "\
[model]
name = lattice_bd
lambda = 1.0
[window]
radii = 4 8
[run]
tau = 1.0
replicates = 50
seed = 7
[statistic]
experiment = lln
";

const COUPLE: &str = "\
[model]
name = lattice_bd
lambda = 1
[window]
radii = 10 20
[run]
tau = 1
replicates = 50
seed = 1
[statistic]
experiment = couple
probes = 0
";

#[test]
fn list_is_sorted_and_names_every_model() {
    let o = ipsim(&["list"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in [
        "exclusion",
        "lattice_bd",
        "multilayer_bd_stick",
        "rsa",
        "voter_I",
        "zero_range",
        "phi5",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
    let models: Vec<&str> = text
        .lines()
        .skip_while(|l| !l.starts_with("models"))
        .skip(1)
        .take_while(|l| !l.is_empty() && l.starts_with(' '))
        .filter(|l| !l.starts_with("    "))
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    let mut sorted = models.clone();
    sorted.sort();
    assert_eq!(models, sorted);
}

#[test]
fn check_prints_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", LLN);
    let o = ipsim(&["check", cfg.to_str().unwrap(), "--seed", "99"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["run"]["seed"], 99);
    assert_eq!(v["statistic"]["functional"]["name"], "moment");
}

#[test]
fn config_errors_exit_one_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let bad = LLN
        .replace("lambda = 1.0", "lambda = -1")
        .replace("seed = 7", "seed = x");
    let cfg = write_config(dir.path(), "bad.cfg", &bad);
    let out = dir.path().join("out");
    let o = ipsim(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("line 9"), "{err}");
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ipsim(&["run"]).status.code(), Some(1));
    assert_eq!(ipsim(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ipsim(&["--help"]).status.code(), Some(0));
}

#[test]
fn lln_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", LLN);
    let out = dir.path().join("out");
    let o = ipsim(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("lln.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("model,functional,window_radius,window_size,tau,replicates,mean,std_err")
    );
    assert_eq!(lines.count(), 2);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "pass");
    assert_eq!(summary["seed"], 7);
}

#[test]
fn coupling_passes_and_injected_fault_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", COUPLE);
    let out = dir.path().join("good");
    let o = ipsim(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(out.join("couple.csv"))
        .unwrap()
        .starts_with("probe_site,hypothesis_met,agreement\n"));

    let out = dir.path().join("bad");
    let o = ipsim(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--inject-coupling-fault",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("coupling_no_violations"));
    assert!(!out.exists());
}

#[test]
fn oracle_runs_on_a_small_window() {
    let dir = tempfile::tempdir().unwrap();
    let text = "\
[model]
name = lattice_bd
lambda = 1
cap = 5
[window]
sites = 0 1
[run]
tau = 0.05
replicates = 20000
seed = 3
[statistic]
experiment = oracle
";
    let cfg = write_config(dir.path(), "o.cfg", text);
    let out = dir.path().join("out");
    let o = ipsim(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("oracle.csv")).unwrap();
    assert!(csv.starts_with("functional,tau,simulated,exact,z\n"));
}

#[test]
fn point_models_run_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    for (i, model) in [
        "name = rsa\nlambda = 1",
        "name = multilayer_bd_stick\nlambda = 1",
        "name = exclusion\nlambda = 1\nepsilon = 0.3\njump_radius = 0.8",
    ]
    .iter()
    .enumerate()
    {
        let text = format!(
            "[model]\n{model}\n[window]\nradii = 5 10\n[run]\ntimes = 0.5 1\nreplicates = 8\nseed = 5\n[statistic]\nexperiment = lln\nfunctional = phi1\n"
        );
        let cfg = write_config(dir.path(), &format!("p{i}.cfg"), &text);
        let out = dir.path().join(format!("out{i}"));
        let o = ipsim(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{model}: {}", stderr(&o));
        assert_eq!(
            fs::read_to_string(out.join("lln.csv"))
                .unwrap()
                .lines()
                .count(),
            5
        );
    }
}

#[test]
fn trace_emits_one_json_object_per_event() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", LLN);
    let o = ipsim(&["trace", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() > 0);
    for line in text.lines() {
        let _: serde_json::Value = serde_json::from_str(line).unwrap();
    }
}
