//! The `run` command without process concerns: load, validate, check, report.

use std::path::{Path, PathBuf};

use crate::builtin;
use crate::error::CliError;
use crate::manifest::{self, Validated};
use crate::report::Report;
use crate::suites::{run_suite, Suite};

/// Prefix selecting a built-in manifest instead of a file.
pub const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// A file path, or `builtin:NAME`.
    pub manifest: String,
    pub suite: Suite,
    pub jet_order: Option<u32>,
    pub seed: Option<u64>,
    pub tolerances: Vec<(String, f64)>,
}

/// Manifest text from a path or a `builtin:` reference.
pub fn manifest_text(source: &str) -> Result<String, CliError> {
    if let Some(name) = source.strip_prefix(BUILTIN_PREFIX) {
        return builtin::source(name).map(str::to_owned).ok_or_else(|| {
            CliError::Usage(format!(
                "no built-in manifest {name:?}; available: {}",
                builtin::names().collect::<Vec<_>>().join(", ")
            ))
        });
    }
    std::fs::read_to_string(source).map_err(|e| CliError::Io {
        context: format!("cannot read {source}"),
        source: e,
    })
}

/// `NAME=VALUE`.
pub fn parse_tolerance(arg: &str) -> Result<(String, f64), CliError> {
    let (name, value) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--tol expects NAME=VALUE, got {arg:?}")))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("--tol {name}: {value:?} is not a number")))?;
    Ok((name.trim().to_string(), value))
}

/// Parses and validates the manifest, then applies command-line overrides.
pub fn prepare(opts: &RunOptions) -> Result<Validated, CliError> {
    let mut m = manifest::parse(&manifest_text(&opts.manifest)?)?;
    if opts.seed.is_some() {
        m.config.seed = opts.seed;
    }
    let mut v = manifest::validate(m, opts.jet_order)?;
    for (name, value) in &opts.tolerances {
        v.config
            .tolerances
            .set(name, *value)
            .map_err(CliError::Usage)?;
    }
    Ok(v)
}

pub fn execute(opts: &RunOptions) -> Result<Report, CliError> {
    let v = prepare(opts)?;
    let records = run_suite(&v, opts.suite)?;
    Ok(Report::new(
        v.manifest.name.clone(),
        opts.suite.to_string(),
        v.config.seed,
        v.config.jet_order,
        records,
    ))
}

pub fn write_report(report: &Report, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, report.to_json()).map_err(|e| CliError::Io {
        context: format!("cannot write {}", path.display()),
        source: e,
    })
}

/// Default report location when `--out` is absent.
pub fn default_out() -> PathBuf {
    PathBuf::from("report.json")
}
