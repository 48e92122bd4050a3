//! Batch runner for windowed dimension estimates and the property suite.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lpdim::dimension::{
    approximate_units, estimate_dimension, exponent, property_suite, ApproxUnitReport, Bracket, Cell, DimensionEstimate,
    SuiteConfig, SuiteReport,
};
use lpdim::spaces::{fourier_oracle_dim, FourierMode, SubspaceSpec};
use lpdim::widths::DualityMap;
use lpdim::Error;
use serde::{Deserialize, Serialize};

pub mod registry;

pub const CSV_HEADER: &str = "scenario,p,window,epsilon,ldim_lo,ldim_hi,norm_lo,norm_hi";

/// Exit statuses of the binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CAPABILITY: i32 = 3;
    pub const NUMERIC: i32 = 4;
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Lib(Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io(_) => exit::FAILURE,
            CliError::Lib(e) => match e {
                Error::Capability(_) => exit::CAPABILITY,
                Error::Numerical { .. } => exit::NUMERIC,
                Error::Structural(_) | Error::Argument(_) | Error::Precondition(_) | Error::Parse(_) => exit::USAGE,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

mod opt_exponent {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "lpdim::dimension::exponent")] f64);

    pub fn serialize<S: Serializer>(p: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        p.map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

/// Run settings, read from a JSON config and overridden by flags. Unset
/// grid fields fall back to the scenario's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Option<String>,
    /// Inline subspace, used instead of a registry entry.
    #[serde(default)]
    pub spec: Option<SubspaceSpec>,
    #[serde(default, with = "opt_exponent")]
    pub p: Option<f64>,
    #[serde(default)]
    pub windows: Option<Vec<usize>>,
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// JSON output path; stdout when absent.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    /// Check groups for `verify`.
    #[serde(default)]
    pub only: Vec<String>,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub verbose: bool,
}

pub const DEFAULT_SEED: u64 = 42;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: None,
            spec: None,
            p: None,
            windows: None,
            eps: None,
            seed: DEFAULT_SEED,
            out: None,
            csv: None,
            only: Vec::new(),
            jobs: None,
            verbose: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

/// A scenario with its grid fully resolved.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub scenario: String,
    pub spec: SubspaceSpec,
    pub p: f64,
    pub windows: Vec<usize>,
    pub eps: Vec<f64>,
    pub seed: u64,
}

pub fn resolve(config: &RunConfig) -> CliResult<ResolvedRun> {
    let (name, spec, p, windows, eps) = match (&config.spec, &config.scenario) {
        (Some(spec), name) => (
            name.clone().unwrap_or_else(|| spec.kind().to_string()),
            spec.clone(),
            2.0,
            vec![8, 16, 32, 64],
            vec![1.0, 0.5, 0.1],
        ),
        (None, Some(name)) => {
            let s = registry::find(name)
                .ok_or_else(|| CliError::Usage(format!("unknown scenario {name:?}; try `lpdim list`")))?;
            (s.name.to_string(), s.spec, s.p, s.windows, s.eps)
        }
        (None, None) => return Err(CliError::Usage("no scenario given (use --scenario or --config)".into())),
    };
    let run = ResolvedRun {
        scenario: name,
        spec,
        p: config.p.unwrap_or(p),
        windows: config.windows.clone().unwrap_or(windows),
        eps: config.eps.clone().unwrap_or(eps),
        seed: config.seed,
    };
    if run.windows.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("windows must be strictly ascending".into()));
    }
    if run.eps.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(CliError::Usage("ε values must be strictly descending".into()));
    }
    Ok(run)
}

/// JSON summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    #[serde(with = "exponent")]
    pub p: f64,
    pub bracket: Bracket,
    pub grid: Vec<Cell>,
    pub diagnostics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approximate_units: Option<ApproxUnitReport>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub estimate: DimensionEstimate,
    pub summary: RunSummary,
    pub json: String,
    pub csv: String,
}

fn fmt_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        p.to_string()
    }
}

pub fn csv_table(scenario: &str, p: f64, grid: &[Cell]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in grid {
        let _ = writeln!(
            out,
            "{scenario},{},{},{},{},{},{},{}",
            fmt_p(p),
            c.window,
            c.epsilon,
            c.ldim_lo,
            c.ldim_hi,
            c.norm_lo,
            c.norm_hi
        );
    }
    out
}

const ORACLE_SAMPLES: usize = 4096;

fn oracle_for(spec: &SubspaceSpec, p: f64) -> CliResult<Option<f64>> {
    if p != 2.0 {
        return Ok(None);
    }
    Ok(match spec {
        SubspaceSpec::ConvImage(h) if h.group().is_integers() => Some(fourier_oracle_dim(h, FourierMode::Image, ORACLE_SAMPLES)?),
        SubspaceSpec::ConvKernel(h) if h.group().is_integers() => Some(fourier_oracle_dim(h, FourierMode::Kernel, ORACLE_SAMPLES)?),
        _ => None,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let env = std::env::var("LPDIM_JOBS").ok();
    let jobs = match env.as_deref().map(str::trim).filter(|s| !s.is_empty()) {
        Some(s) => Some(s.parse::<usize>().map_err(|_| CliError::Usage(format!("LPDIM_JOBS must be a positive integer, got {s:?}")))?),
        None => jobs,
    };
    match jobs {
        Some(0) => Err(CliError::Usage("job count must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Io(e.to_string()))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Estimates the configured scenario and renders its JSON and CSV outputs.
/// Nothing is written to disk.
pub fn run_estimate(config: &RunConfig) -> CliResult<RunOutput> {
    let run = resolve(config)?;
    let estimate = with_jobs(config.jobs, || estimate_dimension(&run.spec, run.p, &run.windows, &run.eps, run.seed))??;
    let oracle = if run.scenario == "conv_image_fourier_demo" { oracle_for(&run.spec, run.p)? } else { None };
    let units = if run.scenario == "remark91_demo" { Some(approximate_units(10, 100, run.seed)?) } else { None };
    let summary = RunSummary {
        scenario: run.scenario.clone(),
        p: run.p,
        bracket: estimate.bracket,
        grid: estimate.grid.clone(),
        diagnostics: estimate.diagnostics.clone(),
        oracle,
        approximate_units: units,
    };
    Ok(RunOutput {
        json: to_json(&summary),
        csv: csv_table(&run.scenario, run.p, &estimate.grid),
        estimate,
        summary,
    })
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, json: &str) -> CliResult<()> {
    match out {
        Some(path) => write_file(path, json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

/// `run`: writes the CSV and JSON outputs and returns the exit status.
pub fn run(config: &RunConfig) -> CliResult<i32> {
    let output = run_estimate(config)?;
    if let Some(path) = &config.csv {
        write_file(path, &output.csv)?;
    }
    emit(config.out.as_deref(), &output.json)?;
    if config.verbose {
        for d in &output.summary.diagnostics {
            eprintln!("warning: {d}");
        }
    }
    Ok(exit::OK)
}

/// Fault switches for `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    MazurSign,
}

impl std::str::FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Fault::None),
            "mazur-sign" => Ok(Fault::MazurSign),
            _ => Err(format!("unknown fault {s:?} (known: mazur-sign)")),
        }
    }
}

pub fn verify_report(config: &RunConfig, fault: Fault) -> CliResult<SuiteReport> {
    let suite = SuiteConfig {
        only: config.only.clone(),
        duality: match fault {
            Fault::None => DualityMap::Mazur,
            Fault::MazurSign => DualityMap::FaultySign,
        },
        ..SuiteConfig::default()
    };
    Ok(with_jobs(config.jobs, || property_suite(&suite, config.seed))??)
}

pub fn render_report(report: &SuiteReport) -> String {
    to_json(report)
}

/// `verify`: runs the property suite; exit 1 when any check fails.
pub fn verify(config: &RunConfig, fault: Fault) -> CliResult<i32> {
    let report = verify_report(config, fault)?;
    for c in &report.checks {
        if !c.passed || config.verbose {
            eprintln!("{} {}/{}: {}", if c.passed { "ok  " } else { "FAIL" }, c.group, c.name, c.detail);
        }
    }
    emit(config.out.as_deref(), &render_report(&report))?;
    Ok(if report.passed { exit::OK } else { exit::FAILURE })
}

pub fn list_scenarios(json: bool) -> String {
    let list = registry::scenarios();
    if json {
        return to_json(&list);
    }
    let width = list.iter().map(|s| s.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for s in &list {
        let _ = writeln!(out, "{:width$}  p = {:<4} {}", s.name, fmt_p(s.p), s.about);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(name: &str) -> RunConfig {
        RunConfig {
            scenario: Some(name.into()),
            ..RunConfig::default()
        }
    }

    #[test]
    fn full_and_zero_brackets() {
        let mut c = cfg("full");
        c.windows = Some(vec![8, 16]);
        c.eps = Some(vec![1.0, 0.5]);
        let out = run_estimate(&c).unwrap();
        assert_eq!(out.summary.bracket, Bracket { lo: 2.0, hi: 2.0 });
        let out = run_estimate(&cfg("zero")).unwrap();
        assert_eq!(out.summary.bracket, Bracket { lo: 0.0, hi: 0.0 });
    }

    #[test]
    fn unknown_scenario_is_a_usage_error() {
        let e = run_estimate(&cfg("nope")).unwrap_err();
        assert_eq!(e.exit_code(), exit::USAGE);
    }

    #[test]
    fn exit_codes_follow_the_error_kind() {
        assert_eq!(CliError::from(Error::Capability("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(Error::Numerical { iterations: 3, residual: 1.0 }).exit_code(), 4);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
    }

    #[test]
    fn registry_is_complete() {
        let names: Vec<&str> = registry::scenarios().iter().map(|s| s.name).collect();
        for n in [
            "full",
            "zero",
            "conv_kernel",
            "conv_image",
            "cyclic",
            "direct_sum",
            "periodic_infty",
            "ker_periodization",
            "annihilator",
            "reduced",
            "induced",
            "remark91_demo",
        ] {
            assert!(names.contains(&n), "{n} missing");
        }
        assert!(names.len() >= 11);
        let parsed: serde_json::Value = serde_json::from_str(&list_scenarios(true)).unwrap();
        assert_eq!(parsed.as_array().unwrap().len(), names.len());
    }

    #[test]
    fn csv_layout() {
        let mut c = cfg("periodic_infty");
        c.windows = Some(vec![8]);
        c.eps = Some(vec![1.0]);
        let out = run_estimate(&c).unwrap();
        assert_eq!(out.csv, format!("{CSV_HEADER}\nperiodic_infty,inf,8,1,3,3,0.375,0.375\n"));
    }

    #[test]
    fn config_round_trip() {
        let json = r#"{"scenario": "full", "p": "inf", "windows": [4, 8], "seed": 3}"#;
        let c: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.p, Some(f64::INFINITY));
        assert_eq!(c.windows, Some(vec![4, 8]));
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<RunConfig>(r#"{"scenery": "full"}"#).is_err());
    }

    #[test]
    fn inline_spec() {
        let json = r#"{"spec": {"type": "full", "dim": 3}, "p": 1, "windows": [4], "eps": [0.5]}"#;
        let c: RunConfig = serde_json::from_str(json).unwrap();
        let out = run_estimate(&c).unwrap();
        assert_eq!(out.summary.scenario, "full");
        assert_eq!(out.summary.bracket, Bracket { lo: 3.0, hi: 3.0 });
    }

    #[test]
    fn fault_names() {
        assert_eq!("mazur-sign".parse::<Fault>().unwrap(), Fault::MazurSign);
        assert!("other".parse::<Fault>().is_err());
    }
}
