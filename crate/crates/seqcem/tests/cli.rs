use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SCHEMA: &str = r#"
[[attribute]]
name = "x"
kind = "numeric"

[[attribute]]
name = "c"
kind = "categorical"

[[attribute]]
name = "s"
kind = "categorical"
role = "sensitive"
levels = { one = ["p"], zero = ["u"] }

[[attribute]]
name = "y"
kind = "categorical"
role = "outcome"
levels = { one = ["1"], zero = ["0"] }
"#;

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new(n: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("x,c,s,y\n");
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..n {
            let x = next() % 10;
            let c = ["a", "b", "c"][(next() % 3) as usize];
            let s = next() % 100 < 40;
            let p = 15 + 6 * x + if s { 0 } else { 15 };
            let y = next() % 100 < p;
            text.push_str(&format!("{x},{c},{},{}\n", if s { "p" } else { "u" }, u8::from(y)));
        }
        fs::write(dir.path().join("data.csv"), text).unwrap();
        fs::write(dir.path().join("schema.toml"), SCHEMA).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        self.run_env(args, &[])
    }

    fn run_env(&self, args: &[&str], env: &[(&str, &str)]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_seqcem"));
        cmd.args(args)
            .arg("--data")
            .arg(self.path("data.csv"))
            .arg("--schema")
            .arg(self.path("schema.toml"))
            .env_remove("SEQCEM_OUT");
        for (k, v) in env {
            cmd.env(k, v);
        }
        cmd.output().unwrap()
    }
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn column(path: PathBuf, name: &str) -> Vec<String> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == name).unwrap();
    rdr.records().map(|r| r.unwrap()[idx].to_owned()).collect()
}

#[test]
fn empty_feature_list_is_a_usage_error() {
    let f = Fixture::new(50);
    let out = f.run(&["audit", "--features", "", "--out", f.path("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("features"));
    let out = f.run(&["audit", "--features", "zzz", "--out", f.path("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_and_runtime_exit_codes() {
    let f = Fixture::new(50);
    assert_eq!(f.run(&["audit", "--bogus"]).status.code(), Some(2));
    assert_eq!(f.run(&["simulate", "--out", f.path("o").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(f.run(&["audit", "--workers", "0"]).status.code(), Some(2));
    let missing = Command::new(env!("CARGO_BIN_EXE_seqcem"))
        .args(["audit", "--schema"])
        .arg(f.path("schema.toml"))
        .arg("--data")
        .arg(f.path("absent.csv"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
    let no_data = Command::new(env!("CARGO_BIN_EXE_seqcem")).arg("audit").env_remove("SEQCEM_OUT").output().unwrap();
    assert_eq!(no_data.status.code(), Some(2));
}

#[test]
fn audit_outputs_do_not_depend_on_worker_count() {
    let f = Fixture::new(400);
    let (a, b) = (f.path("w1"), f.path("w3"));
    ok(&f.run(&["audit", "--seed", "9", "--reps", "20", "--k", "5", "--workers", "1", "--out", a.to_str().unwrap()]));
    ok(&f.run(&["audit", "--seed", "9", "--reps", "20", "--k", "5", "--workers", "3", "--out", b.to_str().unwrap()]));
    let (mut da, mut db) = (read_dir(&a), read_dir(&b));
    for name in ["cem_scores.csv", "cem_scores.json", "delta_prime.csv", "delta_prime.json", "parity.json", "parity.csv"] {
        assert!(da.contains_key(name), "{name}");
    }
    let (mut pa, mut pb) = (json(a.join("provenance.json")), json(b.join("provenance.json")));
    pa["config"]["out"] = Value::Null;
    pb["config"]["out"] = Value::Null;
    assert_eq!(pa, pb);
    assert!(pa["config"].get("workers").is_none());
    da.remove("provenance.json");
    db.remove("provenance.json");
    assert_eq!(da, db);
}

#[test]
fn compare_outputs_do_not_depend_on_worker_count() {
    let f = Fixture::new(300);
    let common = ["compare", "--seed", "4", "--reps", "5", "--k", "3", "--scenario-reps", "2", "--grid", "5:0,5:5", "--qd-list", "10,20"];
    let (a, b) = (f.path("w1"), f.path("w2"));
    ok(&f.run(&[&common[..], &["--workers", "1", "--out", a.to_str().unwrap()]].concat()));
    ok(&f.run(&[&common[..], &["--workers", "2", "--out", b.to_str().unwrap()]].concat()));
    for name in ["report.csv", "report.json", "summary.csv", "ratios.svg"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let report = json(a.join("report.json"));
    assert_eq!(report["cells"].as_array().unwrap().len(), 2 * 2 * 2);
}

#[test]
fn injection_flips_the_requested_counts() {
    let f = Fixture::new(500);
    let out = f.path("inj");
    ok(&f.run(&["simulate", "--strategy", "inject", "--v1", "10", "--v2", "10", "--seed", "3", "--out", out.to_str().unwrap()]));
    let before_s = column(f.path("data.csv"), "s");
    let before_y = column(f.path("data.csv"), "y");
    let after_y = column(out.join("scenario.csv"), "y");
    assert_eq!(column(out.join("scenario.csv"), "s"), before_s);
    let count = |g: &str, y: &str| before_s.iter().zip(&before_y).filter(|(s, v)| *s == g && *v == y).count();
    let flips = |g: &str, from: &str| {
        (0..before_y.len()).filter(|&i| before_s[i] == g && before_y[i] == from && after_y[i] != from).count()
    };
    let n1 = before_s.iter().filter(|s| *s == "p").count();
    let n0 = before_s.len() - n1;
    assert_eq!(flips("p", "1"), (0.1 * n1 as f64).round() as usize);
    assert_eq!(flips("u", "0"), (0.1 * n0 as f64).round() as usize);
    assert_eq!(flips("p", "0") + flips("u", "1"), 0);
    assert!(count("p", "1") >= flips("p", "1"));
    let record = json(out.join("scenario.json"));
    assert_eq!(record["flipped_protected"], (0.1 * n1 as f64).round() as u64);
    assert!(out.join("tree.json").exists());
}

#[test]
fn correlated_variable_adds_one_column() {
    let f = Fixture::new(300);
    let out = f.path("z");
    ok(&f.run(&["simulate", "--strategy", "add-z", "--rho", "0.6", "--z-name", "proxy", "--out", out.to_str().unwrap()]));
    let text = fs::read_to_string(out.join("scenario.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x,c,s,y,proxy");
    assert_eq!(text.lines().count(), 301);
    let schema = fs::read_to_string(out.join("scenario.schema.toml")).unwrap();
    assert!(schema.contains("proxy"));
    assert!(!out.join("tree.json").exists());
    let again = f.path("z2");
    let out2 = Command::new(env!("CARGO_BIN_EXE_seqcem"))
        .args(["audit", "--reps", "5", "--k", "3", "--out"])
        .arg(&again)
        .arg("--data")
        .arg(out.join("scenario.csv"))
        .arg("--schema")
        .arg(out.join("scenario.schema.toml"))
        .output()
        .unwrap();
    ok(&out2);
}

#[test]
fn strategy_d_permutes_the_sensitive_column() {
    let f = Fixture::new(300);
    let out = f.path("d");
    ok(&f.run(&["simulate", "--strategy", "d", "--seed", "11", "--out", out.to_str().unwrap()]));
    let before = column(f.path("data.csv"), "s");
    let after = column(out.join("scenario.csv"), "s");
    assert_ne!(before, after);
    let (mut a, mut b) = (before.clone(), after.clone());
    a.sort();
    b.sort();
    assert_eq!(a, b);
    assert_eq!(column(out.join("scenario.csv"), "y"), column(f.path("data.csv"), "y"));
    assert_eq!(column(out.join("scenario.csv"), "x"), column(f.path("data.csv"), "x"));
}

#[test]
fn config_file_env_and_flag_precedence() {
    let f = Fixture::new(200);
    let env_out = f.path("from_env");
    let cfg = f.path("run.toml");
    fs::write(&cfg, format!("seed = 5\nreps = 7\nk = 4\nout = {:?}\n", f.path("from_config").to_str().unwrap())).unwrap();
    let cfg_s = cfg.to_str().unwrap();

    ok(&f.run(&["audit", "--config", cfg_s]));
    let p = json(f.path("from_config").join("provenance.json"));
    assert_eq!((p["config"]["seed"].as_u64(), p["config"]["reps"].as_u64()), (Some(5), Some(7)));

    ok(&f.run_env(&["audit", "--config", cfg_s], &[("SEQCEM_OUT", env_out.to_str().unwrap())]));
    assert!(env_out.join("provenance.json").exists());

    let flag_out = f.path("from_flag");
    ok(&f.run_env(
        &["audit", "--config", cfg_s, "--seed", "6", "--out", flag_out.to_str().unwrap()],
        &[("SEQCEM_OUT", env_out.to_str().unwrap())],
    ));
    let p = json(flag_out.join("provenance.json"));
    assert_eq!((p["config"]["seed"].as_u64(), p["config"]["k"].as_u64()), (Some(6), Some(4)));

    fs::write(f.path("bad.toml"), "sede = 1\n").unwrap();
    assert_eq!(f.run(&["audit", "--config", f.path("bad.toml").to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn provenance_replays_the_run() {
    let f = Fixture::new(250);
    let first = f.path("first");
    ok(&f.run(&["audit", "--seed", "21", "--reps", "12", "--k", "4", "--conditioning", "c", "--out", first.to_str().unwrap()]));
    let second = f.path("second");
    let out = Command::new(env!("CARGO_BIN_EXE_seqcem"))
        .arg("audit")
        .arg("--config")
        .arg(first.join("provenance.json"))
        .arg("--out")
        .arg(&second)
        .output()
        .unwrap();
    ok(&out);
    for name in ["cem_scores.csv", "delta_prime.csv", "parity.csv", "parity.json"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
    let parity = fs::read_to_string(first.join("parity.csv")).unwrap();
    assert_eq!(parity.lines().count(), 2 + 3);
}

#[test]
fn plot_data_writes_figures() {
    let f = Fixture::new(300);
    let out = f.path("plots");
    ok(&f.run(&["plot-data", "--reps", "8", "--k", "4", "--out", out.to_str().unwrap()]));
    for name in ["qq.csv", "scatter.csv", "qq.svg", "scatter.svg", "provenance.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    assert_eq!(fs::read_to_string(out.join("qq.csv")).unwrap().lines().count(), 102);
    assert!(fs::read_to_string(out.join("qq.svg")).unwrap().starts_with("<svg"));
}
