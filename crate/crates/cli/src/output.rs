use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use virusperiod::{SystemKind, Trajectory};

use crate::config::Variants;
use crate::{CliError, Exit, TOOL, VERSION};

/// Common wrapper of every JSON document the tool emits.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: Option<String>,
    pub variants: Option<Variants>,
    pub exit_code: i32,
    pub status: Exit,
    pub message: Option<String>,
    pub result: Value,
}

impl Envelope {
    pub fn new(command: &'static str, hash: Option<String>, variants: Option<Variants>) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            config_hash: hash,
            variants,
            exit_code: 0,
            status: Exit::Success,
            message: None,
            result: Value::Null,
        }
    }

    pub fn with_status(mut self, exit: Exit, message: Option<String>) -> Self {
        self.exit_code = exit.code();
        self.status = exit;
        self.message = message;
        self
    }

    pub fn with_result<T: Serialize>(mut self, result: &T) -> Self {
        self.result = to_value(result);
        self
    }
}

/// Serializes with non-finite floats mapped to `null`, as JSON requires.
pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::config(format!("cannot write {}: {e}", path.display()))
}

pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))
}

/// Writes `t,S,L,A,x1,x2,x3`, one row per stored step.
pub fn write_trajectory_csv(dir: &Path, name: &str, traj: &Trajectory) -> Result<usize, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join(name);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
    let err = |e: csv::Error| CliError::config(format!("cannot write {}: {e}", path.display()));
    w.write_record(["t", "S", "L", "A", "x1", "x2", "x3"])
        .map_err(err)?;
    for (t, v) in traj.times.iter().zip(&traj.states) {
        let (y, x) = match traj.system {
            SystemKind::Transformed => (v.map(f64::exp), *v),
            SystemKind::Original => (*v, v.map(f64::ln)),
        };
        let row = [*t, y[0], y[1], y[2], x[0], x[1], x[2]];
        w.write_record(row.iter().map(|v| v.to_string())).map_err(err)?;
    }
    w.flush().map_err(|e| io_error(&path, e))?;
    Ok(traj.len())
}
