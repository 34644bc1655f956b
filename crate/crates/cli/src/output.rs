use std::fs;
use std::path::{Path, PathBuf};

use crate::commands::{Artifacts, Command};
use crate::config::Format;
use crate::error::CliError;

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

/// Write `<command>.json` and/or `<command>.csv` into `dir`; returns the
/// paths written.
pub fn write_artifacts(
    command: Command,
    artifacts: &Artifacts,
    dir: &Path,
    format: Format,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    if format.json() {
        let path = dir.join(format!("{}.json", command.name()));
        let mut text = serde_json::to_string_pretty(&artifacts.json).expect("JSON value serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    if format.csv() {
        let path = dir.join(format!("{}.csv", command.name()));
        let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
        w.write_record(&artifacts.table.header).map_err(|e| io(&path, e))?;
        for row in &artifacts.table.rows {
            w.write_record(row).map_err(|e| io(&path, e))?;
        }
        w.flush().map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
