//! Fitness computed by an outside program.

use std::path::Path;
use std::process::Command;

use crate::error::{Error, Result};

/// Replace `{name}` placeholders with paths.
pub fn substitute(template: &str, values: &[(&str, &Path)]) -> String {
    values.iter().fold(template.to_string(), |acc, (name, path)| {
        acc.replace(&format!("{{{name}}}"), &path.to_string_lossy())
    })
}

/// Run a command through `sh -c` and return its standard output.
pub fn run_command(command: &str) -> Result<String> {
    let out = Command::new("sh")
        .arg("-c")
        .arg(command)
        .output()
        .map_err(|e| Error::External(format!("failed to start sh: {e}")))?;
    if !out.status.success() {
        let stderr = String::from_utf8_lossy(&out.stderr);
        return Err(Error::External(format!(
            "`{command}` exited with {}: {}",
            out.status,
            stderr.trim()
        )));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// The scalar on the last non-empty line.
pub fn parse_last_line(stdout: &str) -> Result<f64> {
    let line = stdout
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .ok_or_else(|| Error::External("command printed nothing".into()))?;
    line.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::External(format!("last output line {line:?} is not a number")))
}

/// Run the template with `{decoded}` and `{original}` filled in and read
/// the loss it prints.
pub fn external_fitness(template: &str, decoded_dir: &Path, original_dir: &Path) -> Result<f64> {
    let command = substitute(
        template,
        &[("decoded", decoded_dir), ("original", original_dir)],
    );
    parse_last_line(&run_command(&command)?)
}

/// Call `f`, and once more if the first attempt fails.
pub fn with_retry<T>(f: impl Fn() -> Result<T>) -> Result<T> {
    f().or_else(|err| {
        log::warn!("{err}; retrying once");
        f()
    })
}
