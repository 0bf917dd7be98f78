//! Small grammars shared by the subcommands.

use std::path::Path;

use dstft::directions::parse_directions;
use dstft::{Error, Lattice, WindowSpec};

use crate::manifest::CliError;

/// `"1,2.5"` → `[1.0, 2.5]`.
pub fn floats(flag: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("--{flag}: `{}` is not a number", s.trim())))
        })
        .collect()
}

pub fn counts(flag: &str, text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("--{flag}: `{}` is not a count", s.trim())))
        })
        .collect()
}

/// Repeats a single value to `n` entries.
pub fn broadcast(flag: &str, v: Vec<f64>, n: usize) -> Result<Vec<f64>, CliError> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        m if m == n => Ok(v),
        m => Err(CliError::config(format!("--{flag} has {m} entries, expected 1 or {n}"))),
    }
}

/// Semicolon-separated window grammar strings, e.g. `"bump:a=1;hann:a=2"`.
pub fn windows(text: &str) -> Result<Vec<WindowSpec>, CliError> {
    let specs = text
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<WindowSpec>())
        .collect::<Result<Vec<_>, Error>>()?;
    if specs.is_empty() {
        return Err(CliError::config(format!("no windows in `{text}`")));
    }
    Ok(specs)
}

pub fn vectors(text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    Ok(parse_directions(text)?)
}

pub fn unit(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

/// Lattice from `--step`, `--count` and optional `--origin`; without an
/// origin the lattice is centered.
pub fn lattice(
    step: Option<&str>,
    count: Option<&str>,
    origin: Option<&str>,
) -> Result<Lattice, CliError> {
    let (Some(step), Some(count)) = (step, count) else {
        return Err(CliError::config("a lattice needs --step and --count"));
    };
    let count = counts("count", count)?;
    let step = broadcast("step", floats("step", step)?, count.len())?;
    Ok(match origin {
        Some(o) => Lattice::new(broadcast("origin", floats("origin", o)?, count.len())?, step, count)?,
        None => Lattice::centered(step, count)?,
    })
}

pub fn existing(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::io(format!("{}: no such file", path.display())))
    }
}
