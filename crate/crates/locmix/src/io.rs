//! Data file parsing, metadata headers and atomic output.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use locmix_core::Sample;

use crate::CliError;

/// One observation per line, optional second column weight; `,`, `;` or
/// whitespace separated. `#` lines and blank lines are ignored.
pub fn read_data(path: &str) -> Result<Sample, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read data {path}: {e}")))?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut any_weight = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let bad = |what: &str| {
            CliError::usage(format!("{path}:{}: bad {what}: {line:?}", lineno + 1))
        };
        match fields.as_slice() {
            [x] => {
                points.push(x.parse::<f64>().map_err(|_| bad("observation"))?);
                weights.push(1.0);
            }
            [x, w] => {
                points.push(x.parse::<f64>().map_err(|_| bad("observation"))?);
                weights.push(w.parse::<f64>().map_err(|_| bad("weight"))?);
                any_weight = true;
            }
            _ => return Err(bad("row")),
        }
    }
    let sample = if any_weight {
        Sample::weighted(points, weights)
    } else {
        Sample::new(points)
    };
    sample.map_err(CliError::from_core)
}

/// `#`-prefixed metadata block: version, command and config echo.
pub fn metadata_header(command: &str, config_echo: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("# locmix {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("# command: {command}\n"));
    for line in config_echo.lines() {
        out.push_str(&format!("# config: {line}\n"));
    }
    out
}

/// Write to a temp file in the destination directory, then rename into
/// place. `path = "-"` or absent directories are usage errors.
pub fn write_atomic(path: &str, content: &str) -> Result<(), CliError> {
    let target = Path::new(path);
    let dir = target.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            target.file_name().and_then(|n| n.to_str()).unwrap_or("out")
        )),
        None => Path::new(&format!(".{path}.tmp")).to_path_buf(),
    };
    let fail = |e: std::io::Error| CliError::usage(format!("cannot write {path}: {e}"));
    let mut f = fs::File::create(&tmp).map_err(fail)?;
    f.write_all(content.as_bytes()).map_err(fail)?;
    f.sync_all().map_err(fail)?;
    drop(f);
    fs::rename(&tmp, target).map_err(fail)
}

/// Write to a file when a path is given, stdout otherwise.
pub fn emit(path: Option<&str>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
