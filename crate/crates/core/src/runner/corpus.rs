//! The bundled case files.

use std::time::Instant;

use super::config::{CaseConfig, CaseError};
use super::report::RunReport;
use super::{run_config, RunOptions};

macro_rules! bundled {
    ($($file:literal),* $(,)?) => {
        &[$(($file, include_str!(concat!("../../corpus/", $file)))),*]
    };
}

/// `(file name, contents)` for every bundled case.
pub const BUNDLED: &[(&str, &str)] = bundled![
    "constant.json",
    "cosh.json",
    "exp.json",
    "exp_half_step.json",
    "exp_shifted.json",
    "linear.json",
    "neg_abs.json",
    "poly5.json",
    "quartic_symmetric.json",
    "shifted_square.json",
    "sin_midpoint.json",
    "sin_unmet.json",
    "x2.json",
    "x3.json",
    "x4.json",
];

/// Parses every bundled case, sorted by name.
pub fn bundled_configs() -> Result<Vec<CaseConfig>, (String, CaseError)> {
    let mut out = BUNDLED
        .iter()
        .map(|(file, text)| CaseConfig::from_json(text).map_err(|e| (file.to_string(), e)))
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

/// Runs bundled cases whose name contains `filter` (all when `None`).
pub fn run_corpus(filter: Option<&str>, options: &RunOptions) -> RunReport {
    let start = Instant::now();
    let configs = bundled_configs().unwrap_or_else(|(file, e)| panic!("bundled case {file} is malformed: {e}"));
    let cases = configs.iter().filter(|c| filter.is_none_or(|f| c.name.contains(f))).map(|c| run_config(c, options)).collect();
    RunReport::new(cases, start.elapsed())
}
