//! Command-line front end for `gcka`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
//! degeneracy (constant representations, zero linear CKA, ...).

pub mod args;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::Parser;
use gcka::exec::{try_map_range, Execution};
use gcka::{
    cka, eccentricity, generate_pair, gram, hsic, summarize, sweep, FeatureMatrix, KernelSpec, MedianConvention,
    RunSummary, SweepConfig, SynthSpec,
};
use thiserror::Error;

use args::{CkaArgs, Cli, Command, GeometryArgs, MatrixFlags, SweepArgs, SynthArgs, SynthFlags};
use report::{
    CkaReport, GeometryOutput, Metadata, OnsetRow, RunGeometry, Source, SweepEcho, SweepReport, SweepRow,
    SCHEMA_VERSION,
};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: gcka::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] gcka::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let core = match self {
            CliError::Usage(_) => return EXIT_USAGE,
            CliError::Io { .. } => return EXIT_DATA,
            CliError::Input { source, .. } | CliError::Core(source) => source,
        };
        if core.is_numerical_degeneracy() {
            EXIT_NUMERICAL
        } else if matches!(core, gcka::Error::InvalidConfig(_)) {
            EXIT_USAGE
        } else {
            EXIT_DATA
        }
    }
}

/// Parse `args`, run, write results to `out` and diagnostics to `err`;
/// returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return 0;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match run(&cli) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command and return what it prints.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    with_threads(cli.threads, || match &cli.command {
        Command::Cka(a) => cmd_cka(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Geometry(a) => cmd_geometry(a),
        Command::Synth(a) => cmd_synth(a),
    })
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    match threads {
        None => f(),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(f),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    match threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        _ => f(),
    }
}

fn read_matrix(path: &Path, header: bool) -> Result<FeatureMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    FeatureMatrix::parse_text(&text, header).map_err(|source| CliError::Input { path: path.into(), source })
}

fn read_pair(x: &Path, y: &Path, header: bool) -> Result<(FeatureMatrix, FeatureMatrix), CliError> {
    let (mx, my) = (read_matrix(x, header)?, read_matrix(y, header)?);
    if mx.n() != my.n() {
        return Err(gcka::Error::DimensionMismatch { left: mx.n(), right: my.n() }.into());
    }
    Ok((mx, my))
}

fn files_source(x: &Path, y: &Path, header: bool) -> Source {
    Source::Files { x: x.display().to_string(), y: y.display().to_string(), header }
}

pub fn resolve_synth(flags: &SynthFlags) -> Result<SynthSpec, CliError> {
    let mut spec = match &flags.synth_config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            SynthSpec::from_kv_str(&text).map_err(|source| CliError::Input { path: path.clone(), source })?
        }
        None => SynthSpec::default(),
    };
    if let Some(v) = flags.seed {
        spec.seed = v;
    }
    if let Some(v) = flags.n {
        spec.n = v;
    }
    if let Some(v) = flags.dx {
        spec.dx = v;
    }
    if let Some(v) = flags.dy {
        spec.dy = v;
    }
    if let Some(v) = flags.coupling {
        spec.coupling = v;
    }
    if let Some(v) = flags.outliers {
        spec.outlier_count = v;
    }
    if let Some(v) = flags.outlier_offset {
        spec.outlier_offset = v;
    }
    if let Some(v) = flags.nonlinearity {
        spec.nonlinearity = v.into();
    }
    spec.validate()?;
    Ok(spec)
}

/// Reject synthetic flags alongside input files.
fn check_no_synth_flags(flags: &SynthFlags) -> Result<(), CliError> {
    let SynthFlags { synth_config, seed, n, dx, dy, coupling, outliers, outlier_offset, nonlinearity } = flags;
    let any = synth_config.is_some()
        || seed.is_some()
        || n.is_some()
        || dx.is_some()
        || dy.is_some()
        || coupling.is_some()
        || outliers.is_some()
        || outlier_offset.is_some()
        || nonlinearity.is_some();
    if any {
        return Err(CliError::Usage("synthetic options cannot be combined with input files".into()));
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn cmd_cka(a: &CkaArgs) -> Result<String, CliError> {
    let (x, y) = read_pair(&a.x, &a.y, a.matrix.header)?;
    let centering = a.centering.resolve();
    let median = a.matrix.median();
    let kx = KernelSpec::new(a.kernel.with_sigma(a.sigma), centering).with_median(median);
    let ky_kernel = a.kernel_y.unwrap_or(a.kernel).with_sigma(a.sigma_y.unwrap_or(a.sigma));
    let ky = KernelSpec::new(ky_kernel, centering).with_median(median);
    let (gk, gl) = (gram(&x, &kx)?, gram(&y, &ky)?);
    let report = CkaReport {
        schema_version: SCHEMA_VERSION,
        metadata: Metadata::new("cka", files_source(&a.x, &a.y, a.matrix.header)),
        cka: cka(&gk, &gl)?,
        hsic: hsic(&gk, &gl)?,
    };
    Ok(if a.json { to_json(&report) } else { report.render() })
}

fn load_inputs(
    x: &Option<PathBuf>,
    y: &Option<PathBuf>,
    synth: &SynthFlags,
    matrix: &MatrixFlags,
) -> Result<(Source, Option<(FeatureMatrix, FeatureMatrix)>), CliError> {
    match (x, y) {
        (Some(x), Some(y)) => {
            check_no_synth_flags(synth)?;
            let pair = read_pair(x, y, matrix.header)?;
            Ok((files_source(x, y, matrix.header), Some(pair)))
        }
        (None, None) => Ok((Source::Synthetic { spec: resolve_synth(synth)? }, None)),
        _ => Err(CliError::Usage("give both X and Y files, or neither".into())),
    }
}

fn cmd_geometry(a: &GeometryArgs) -> Result<String, CliError> {
    let (source, pair) = load_inputs(&a.x, &a.y, &a.synth, &a.matrix)?;
    let (x, y) = match (&source, pair) {
        (_, Some(pair)) => pair,
        (Source::Synthetic { spec }, None) => generate_pair(spec)?,
        (Source::Files { .. }, None) => unreachable!("files are always loaded"),
    };
    let report = GeometryOutput {
        schema_version: SCHEMA_VERSION,
        n: x.n(),
        geometry: eccentricity(&x, &y, a.matrix.median())?,
        metadata: Metadata::new("geometry", source),
    };
    Ok(if a.json { to_json(&report) } else { report.render() })
}

fn cmd_synth(a: &SynthArgs) -> Result<String, CliError> {
    let spec = resolve_synth(&a.synth)?;
    let (x, y) = generate_pair(&spec)?;
    let write = |path: &Path, text: String| {
        std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
    };
    write(&a.out_x, x.to_text())?;
    write(&a.out_y, y.to_text())?;
    if let Some(path) = &a.write_config {
        write(path, spec.to_kv_string())?;
    }
    Ok(format!(
        "wrote {} ({} x {}) and {} ({} x {})\n",
        a.out_x.display(),
        x.n(),
        x.d(),
        a.out_y.display(),
        y.n(),
        y.d()
    ))
}

struct RunOutcome {
    seed: Option<u64>,
    geometry: gcka::GeometryReport,
    result: gcka::SweepResult,
}

fn cmd_sweep(a: &SweepArgs) -> Result<String, CliError> {
    if a.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let (source, pair) = load_inputs(&a.x, &a.y, &a.synth, &a.matrix)?;
    if pair.is_some() && a.runs > 1 {
        return Err(CliError::Usage("--runs > 1 needs a synthetic source".into()));
    }
    let median = a.matrix.median();
    let cfg = SweepConfig {
        log2_sigma_grid: a.grid.0.clone(),
        centering: a.centering.resolve(),
        arrangement: a.arrangement(),
        median,
        tail_points: a.tail_points,
        threshold: a.threshold,
        execution: Execution::default(),
    };
    cfg.validate()?;

    let outcomes = match (&source, pair) {
        (_, Some((x, y))) => vec![sweep_one(&x, &y, &cfg, median, None)?],
        (Source::Synthetic { spec }, None) => try_map_range(Execution::default(), a.runs, |r| {
            let seed = spec.seed.wrapping_add(r as u64);
            let (x, y) = generate_pair(&spec.with_seed(seed))?;
            sweep_one(&x, &y, &cfg, median, Some(seed))
        })?,
        (Source::Files { .. }, None) => unreachable!("files are always loaded"),
    };

    let echo = SweepEcho {
        source,
        runs: a.runs,
        log2_sigma_grid: cfg.log2_sigma_grid.clone(),
        centering: cfg.centering,
        arrangement: cfg.arrangement,
        median,
        threshold: cfg.threshold,
        tail_points: cfg.tail_points,
        quantile_rule: gcka::stats::QUANTILE_RULE.into(),
    };
    let mut metadata = Metadata::new("sweep", echo);
    if a.timestamp {
        metadata.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
    }
    let report = assemble_sweep(metadata, &outcomes)?;
    Ok(if a.json {
        to_json(&report)
    } else if a.csv {
        report.render_csv()
    } else {
        report.render()
    })
}

fn sweep_one(
    x: &FeatureMatrix,
    y: &FeatureMatrix,
    cfg: &SweepConfig,
    median: MedianConvention,
    seed: Option<u64>,
) -> Result<RunOutcome, gcka::Error> {
    let geometry = eccentricity(x, y, median)?;
    let result = sweep(x, y, cfg)?;
    Ok(RunOutcome { seed, geometry, result })
}

fn summary_of(values: impl IntoIterator<Item = f64>) -> Result<Option<RunSummary>, gcka::Error> {
    let v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        Ok(None)
    } else {
        summarize(&v).map(Some)
    }
}

fn assemble_sweep(metadata: Metadata<SweepEcho>, outcomes: &[RunOutcome]) -> Result<SweepReport, gcka::Error> {
    let grid = &metadata.config.log2_sigma_grid;
    let mut sweep_table = Vec::with_capacity(grid.len());
    for (k, &log2_sigma) in grid.iter().enumerate() {
        let points: Vec<_> = outcomes.iter().map(|o| o.result.points[k]).collect();
        let finite: Vec<f64> = points.iter().filter_map(|p| p.log_rel_diff).collect();
        sweep_table.push(SweepRow {
            log2_sigma,
            cka_gaussian: summarize(&points.iter().map(|p| p.cka_gaussian).collect::<Vec<_>>())?,
            cka_linear: summarize(&outcomes.iter().map(|o| o.result.cka_linear).collect::<Vec<_>>())?,
            rel_diff: summarize(&points.iter().map(|p| p.rel_diff).collect::<Vec<_>>())?,
            below_precision_floor: points.len() - finite.len(),
            log_rel_diff: summary_of(finite)?,
        });
    }
    let onset_table: Vec<OnsetRow> = outcomes
        .iter()
        .enumerate()
        .map(|(run, o)| OnsetRow {
            run,
            seed: o.seed,
            onset: o.result.onset,
            tail_slope: o.result.tail_slope,
            cka_linear: o.result.cka_linear,
            r_max: o.result.r_max,
        })
        .collect();
    Ok(SweepReport {
        schema_version: SCHEMA_VERSION,
        geometry: outcomes
            .iter()
            .enumerate()
            .map(|(run, o)| RunGeometry { run, seed: o.seed, geometry: o.geometry })
            .collect(),
        rho: summarize(&outcomes.iter().map(|o| o.geometry.rho).collect::<Vec<_>>())?,
        tail_slope: summary_of(outcomes.iter().filter_map(|o| o.result.tail_slope))?,
        onset_not_reached: onset_table.iter().filter(|o| o.onset.log2_sigma().is_none()).count(),
        sweep_table,
        onset_table,
        metadata,
    })
}
