//! Artifact writing shared by the commands.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Config;
use crate::CliError;

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(sprinter_core::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_text(path, &text)
}

pub fn read_text(path: &Path, what: &str) -> Result<String, CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!("{what} {} does not exist", path.display())));
    }
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

pub fn out_path(cfg: &Config, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

/// A report body together with the seed and resolved configuration that produced it.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: &'a str,
    pub seed: u64,
    pub config: &'a Config,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_report<T: Serialize>(cfg: &Config, command: &str, file: &str, body: T) -> Result<PathBuf, CliError> {
    let path = out_path(cfg, file);
    write_json(
        &path,
        &Report {
            command,
            seed: cfg.seed,
            config: cfg,
            body,
        },
    )?;
    Ok(path)
}
