#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub dir: tempfile::TempDir,
}

impl Run {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", self.stdout))
    }

    pub fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }
}

pub fn baseline() -> Value {
    json!({
        "omega": 1.0,
        "coefficients": {
            "b": 1.0, "mu1": 0.1, "mu2": 0.1, "mu3": 0.1,
            "beta1": 0.2, "beta2": 0.2, "gamma1": 0.1, "gamma2": 0.3,
            "alpha1": 0.2, "alpha2": 0.1
        }
    })
}

pub fn seasonal_inflow() -> Value {
    let mut c = baseline();
    c["coefficients"]["b"] = json!({ "form": "fourier", "c0": 1.0, "harmonics": [[0.0, 0.5]] });
    c
}

/// Strictly positive, but the inequality fails where γ₂ dips.
pub fn violating_time_varying() -> Value {
    let mut c = baseline();
    c["coefficients"]["alpha1"] = json!(5.0);
    c["coefficients"]["mu2"] = json!(0.01);
    c["coefficients"]["mu3"] = json!(0.01);
    c["coefficients"]["gamma2"] = json!({ "form": "fourier", "c0": 0.3, "harmonics": [[0.0, 0.25]] });
    c
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_virusperiod")
}

pub fn run_raw(args: &[&str], config: &[u8], envs: &[(&str, &str)]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, config).unwrap();
    let out = dir.path().join("out");
    let mut cmd = Command::new(bin());
    cmd.args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .current_dir(dir.path());
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let o = cmd.output().unwrap();
    Run {
        code: o.status.code().unwrap(),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
        dir,
    }
}

pub fn run(args: &[&str], config: &Value) -> Run {
    run_raw(
        args,
        serde_json::to_string_pretty(config).unwrap().as_bytes(),
        &[],
    )
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

pub fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}
