//! Batch experiments: configuration, sweep expansion, seeding, execution and artifact output.
//!
//! Every run writes its data files plus `manifest.json` listing each file with a content hash.
//! Data files depend only on the configuration and master seed, never on the worker count.

mod config;
pub mod reproduce;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fitting::{
    find_lambda_c, fit_decaying_cosine, fit_loglinear, fit_power_law, select_t_star, CosineFitOptions,
    CrossoverCurve, FitResult, ModelId,
};
use crate::hamiltonian::ModelSpec;
use crate::observables::{
    long_time_average, otoc_exact_trace, otoc_typical, quench_entropy_trajectory, two_time_autocorrelation,
    InitialState, SiteOp, TimeSeries, TraceMode,
};
use crate::pauli::Pauli;
use crate::spectral::{reports_to_csv, sector_ratio_scan};
use crate::star::{star_autocorrelation_series, StarParams};

pub use config::{
    apply_parameter, CQubitChoice, ExperimentConfig, ExperimentKind, InitialKind, Limits, MethodKind, Options,
    Spacing, SweepPoint, TimeGrid, TraceKind, WindowSetting, SWEEP_KEYS,
};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of substream `stream` of `master`: the SplitMix64 output at position `stream + 1` of
/// the sequence started at `master`. Depends only on its arguments, so any schedule of jobs
/// sees the same seeds.
pub fn split_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(GOLDEN_GAMMA.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the job at sweep point `point` with replica label `label`.
pub fn job_seed(master: u64, point: usize, label: u64) -> u64 {
    split_seed(split_seed(master, point as u64), label)
}

/// One output file, held in memory until the run completes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub contents: Vec<u8>,
}

impl Artifact {
    pub fn new(path: impl Into<String>, contents: impl Into<Vec<u8>>) -> Self {
        Self {
            path: path.into(),
            contents: contents.into(),
        }
    }

    fn prefixed(mut self, dir: &str) -> Self {
        if !dir.is_empty() {
            self.path = format!("{dir}/{}", self.path);
        }
        self
    }
}

/// `sha256("blob <len>\0" ‖ data)` in hex, the object id git would assign under SHA-256.
pub fn content_hash(data: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", data.len()).as_bytes());
    h.update(data);
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Index of a run.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub configs: Vec<ExperimentConfig>,
    pub input_hash: String,
    pub master_seed: u64,
    pub workers: usize,
    pub wall_time_seconds: f64,
    /// Differences from the reference sizes, for canned figure recipes.
    pub deviations: Vec<String>,
    pub files: Vec<ManifestEntry>,
}

/// Runtime settings that do not change results.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Outcome of [`run`] or [`reproduce::reproduce`].
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

/// Process exit code for an error: 2 validation, 3 resource cap, 4 numerical, 1 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Parse(_) => 2,
        Error::ResourceCap(_) | Error::Truncation { .. } => 3,
        Error::Numerical { .. } => 4,
        Error::Io(_) => 1,
    }
}

/// Machine-readable error report for stderr.
pub fn error_json(e: &Error) -> String {
    let kind = match e {
        Error::InvalidInput(_) => "invalid_input",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::ResourceCap(_) => "resource_cap",
        Error::Truncation { .. } => "truncation",
        Error::Numerical { .. } => "numerical",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
    };
    let best_residual = match e {
        Error::Numerical { best_residual, .. } => *best_residual,
        _ => None,
    };
    serde_json::json!({
        "error": kind,
        "message": e.to_string(),
        "exit_code": exit_code(e),
        "best_residual": best_residual,
    })
    .to_string()
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ResourceCap(format!("cannot start {workers} worker threads: {e}")))
}

fn resolve_workers(requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Writes `contents` to `dir/rel` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, rel: &str, contents: &[u8]) -> Result<()> {
    let target = dir.join(rel);
    let parent = target.parent().unwrap_or(dir);
    std::fs::create_dir_all(parent)?;
    let name = target
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = parent.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, &target)?;
    Ok(())
}

fn finish(
    command: String,
    configs: Vec<ExperimentConfig>,
    artifacts: Vec<Artifact>,
    deviations: Vec<String>,
    master_seed: u64,
    workers: usize,
    output_dir: PathBuf,
    started: Instant,
) -> Result<RunSummary> {
    let mut files = Vec::with_capacity(artifacts.len());
    for a in &artifacts {
        write_atomic(&output_dir, &a.path, &a.contents)?;
        files.push(ManifestEntry {
            path: a.path.clone(),
            sha256: content_hash(&a.contents),
            bytes: a.contents.len(),
        });
    }
    let echo = serde_json::to_vec(&(&command, &configs, master_seed)).expect("configs serialize");
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        configs,
        input_hash: content_hash(&echo),
        master_seed,
        workers,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        deviations,
        files,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&output_dir, "manifest.json", json.as_bytes())?;
    Ok(RunSummary { output_dir, manifest })
}

/// Runs one experiment and writes its artifacts and manifest.
pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<RunSummary> {
    let started = Instant::now();
    let mut config = config.clone();
    if let Some(seed) = options.seed {
        config.seed = seed;
    }
    config.validate()?;
    let workers = resolve_workers(options.workers.or(config.workers));
    let output_dir = options
        .output_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("ringstar-{}", config.experiment)));
    let artifacts = thread_pool(workers)?.install(|| execute(&config))?;
    let command = format!("experiment {}", config.experiment);
    let seed = config.seed;
    finish(command, vec![config], artifacts, Vec::new(), seed, workers, output_dir, started)
}

/// A unit of work: one sweep point with one replica label.
#[derive(Clone, Debug)]
struct Job {
    point: SweepPoint,
    label: u64,
    seed: u64,
}

impl Job {
    fn stem(&self) -> String {
        format!("p{:03}_s{}", self.point.index, self.label)
    }
}

/// Output of one job.
#[derive(Default)]
struct JobOutput {
    artifacts: Vec<Artifact>,
    summary: Vec<(String, String)>,
    curve: Option<CrossoverCurve>,
}

/// Computes every artifact of `config` in memory, using the current rayon pool.
pub fn execute(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    config.validate()?;
    if config.experiment == ExperimentKind::Fit {
        return run_fit_experiment(config);
    }
    let labels: Vec<u64> = if config.experiment.is_stochastic(&config.options) {
        config.seeds.clone()
    } else {
        vec![config.seeds[0]]
    };
    let jobs: Vec<Job> = config
        .points()?
        .into_iter()
        .flat_map(|point| {
            labels.iter().map(move |&label| Job {
                seed: job_seed(config.seed, point.index, label),
                point: point.clone(),
                label,
            })
        })
        .collect();
    let outputs: Vec<JobOutput> = jobs.par_iter().map(|job| run_job(config, job)).collect::<Result<_>>()?;

    let mut artifacts = vec![Artifact::new("points.csv", points_table(config)?)];
    let mut summary_rows = Vec::new();
    let mut curves = Vec::new();
    for (job, out) in jobs.iter().zip(outputs) {
        artifacts.extend(out.artifacts);
        if !out.summary.is_empty() {
            let mut row = vec![
                ("point".to_string(), job.point.index.to_string()),
                ("seed".to_string(), job.label.to_string()),
                ("job_seed".to_string(), job.seed.to_string()),
            ];
            row.extend(job.point.values.iter().map(|(k, v)| (k.clone(), format!("{v:?}"))));
            row.extend(out.summary);
            summary_rows.push(row);
        }
        curves.extend(out.curve);
    }
    if !summary_rows.is_empty() {
        artifacts.push(Artifact::new("summary.csv", table_csv(&summary_rows)?));
    }
    if config.experiment == ExperimentKind::SpectrumStats {
        // The per-point files concatenated under one header.
        let mut all = String::from(crate::spectral::RatioReport::CSV_HEADER);
        all.push('\n');
        for a in artifacts.iter().filter(|a| a.path.starts_with("ratios_")) {
            let text = String::from_utf8_lossy(&a.contents);
            for line in text.lines().skip(1) {
                all.push_str(line);
                all.push('\n');
            }
        }
        artifacts.push(Artifact::new("ratios.csv", all));
    }
    if config.experiment == ExperimentKind::LambdaCScan {
        let analysis = find_lambda_c(&curves)?;
        let json = serde_json::to_string_pretty(&analysis).expect("analysis serializes");
        artifacts.push(Artifact::new("lambda_c.json", json));
    }
    Ok(artifacts)
}

fn points_table(config: &ExperimentConfig) -> Result<String> {
    let rows: Vec<Vec<(String, String)>> = config
        .points()?
        .iter()
        .map(|p| {
            let s = &p.spec;
            vec![
                ("point".into(), p.index.to_string()),
                ("L".into(), s.l.to_string()),
                ("lambda".into(), format!("{:?}", s.lambda)),
                ("J".into(), format!("{:?}", s.j)),
                ("h".into(), format!("{:?}", s.h)),
                ("g".into(), format!("{:?}", s.g)),
                ("h_c".into(), format!("{:?}", s.h_c)),
                ("g_c".into(), format!("{:?}", s.g_c)),
                ("axis".into(), s.axis.to_string()),
                ("boundary".into(), s.boundary.to_string()),
            ]
        })
        .collect();
    table_csv(&rows)
}

/// CSV from rows of `(column, value)` pairs sharing the same columns.
fn table_csv(rows: &[Vec<(String, String)>]) -> Result<String> {
    let Some(first) = rows.first() else {
        return Ok(String::new());
    };
    let header: Vec<&str> = first.iter().map(|(k, _)| k.as_str()).collect();
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        if row.len() != header.len() || row.iter().zip(&header).any(|((k, _), h)| k != h) {
            return Err(Error::invalid("summary rows have inconsistent columns"));
        }
        let cells: Vec<String> = row.iter().map(|(_, v)| v.replace([',', '\n'], ";")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn param_names(model: ModelId) -> &'static [&'static str] {
    match model {
        ModelId::DecayingCosine => &["a", "epsilon0", "phi", "epsilon1"],
        ModelId::PowerLaw => &["alpha", "beta", "ln_alpha"],
        ModelId::Loglinear => &["c", "d"],
    }
}

/// Applies the configured fit to `series`.
pub fn fit_series(series: &TimeSeries, model: ModelId, options: &Options) -> Result<FitResult> {
    let t = series.times();
    let window = options
        .fit_window
        .map(|[a, b]| (a, b))
        .unwrap_or((t[0], t[t.len() - 1]));
    match model {
        ModelId::DecayingCosine => fit_decaying_cosine(
            series,
            window,
            CosineFitOptions {
                smoothing_width: options.smoothing,
            },
        ),
        ModelId::PowerLaw => fit_power_law(series, window),
        ModelId::Loglinear => fit_loglinear(series, window),
    }
}

/// Fit columns for a summary row; failures become NaN with the reason in `fit_status`.
fn fit_columns(series: &TimeSeries, options: &Options, stem: &str, artifacts: &mut Vec<Artifact>) -> Vec<(String, String)> {
    let Some(model) = options.fit else {
        return Vec::new();
    };
    let names = param_names(model);
    let mut cols = Vec::new();
    match fit_series(series, model, options) {
        Ok(fit) => {
            for n in names {
                cols.push((n.to_string(), format!("{:?}", fit.params[*n])));
                cols.push((format!("stderr_{n}"), format!("{:?}", fit.stderr[*n])));
            }
            cols.push(("residual_rms".into(), format!("{:?}", fit.residual_rms)));
            cols.push(("window_start".into(), format!("{:?}", fit.window.0)));
            cols.push(("window_end".into(), format!("{:?}", fit.window.1)));
            cols.push(("fit_status".into(), "ok".into()));
            artifacts.push(Artifact::new(format!("fit_{stem}.json"), fit.to_json()));
        }
        Err(e) => {
            for n in names {
                cols.push((n.to_string(), "NaN".into()));
                cols.push((format!("stderr_{n}"), "NaN".into()));
            }
            for k in ["residual_rms", "window_start", "window_end"] {
                cols.push((k.into(), "NaN".into()));
            }
            cols.push(("fit_status".into(), e.to_string()));
        }
    }
    cols
}

fn tag(series: TimeSeries, config: &ExperimentConfig, job: &Job) -> TimeSeries {
    series
        .with_spec(&job.point.spec)
        .with_meta("experiment", config.experiment)
        .with_meta("point", job.point.index)
        .with_meta("seed", job.label)
        .with_meta("job_seed", job.seed)
}

fn run_job(config: &ExperimentConfig, job: &Job) -> Result<JobOutput> {
    let o = &config.options;
    let spec = job.point.spec;
    let stem = job.stem();
    let times = config.t_grid.as_ref().map(TimeGrid::points).unwrap_or_default();
    let mut out = JobOutput::default();
    let series = match config.experiment {
        ExperimentKind::QuenchEntropy => {
            let initial = match o.initial {
                InitialKind::PlusY => InitialState::PlusY,
                InitialKind::Haar => InitialState::Haar(job.seed),
            };
            let part = o.bipartition(spec.l);
            Some(quench_entropy_trajectory(&spec, initial, &part, &times, o.method_for(&spec)?)?)
        }
        ExperimentKind::OtocCurve => {
            let v = Options::site_op(&o.v)?;
            let w = Options::site_op(&o.w)?;
            Some(otoc_for(&spec, v, w, &times, o, job.seed)?)
        }
        ExperimentKind::OtocMap => {
            let v = Options::site_op(&o.v)?;
            let axis: Pauli = o.w_axis.parse()?;
            let columns: Vec<TimeSeries> = (0..spec.l)
                .into_par_iter()
                .map(|j| otoc_for(&spec, v, SiteOp::new(j, axis), &times, o, job.seed))
                .collect::<Result<_>>()?;
            let mut csv = String::new();
            let _ = writeln!(csv, "# experiment={}", config.experiment);
            for line in spec.to_config_string().lines() {
                let _ = writeln!(csv, "# {line}");
            }
            let _ = writeln!(csv, "# v={v}\n# w_axis={axis}\n# seed={}\n# job_seed={}", job.label, job.seed);
            csv.push('t');
            for j in 0..spec.l {
                let _ = write!(csv, ",C_{j}");
            }
            csv.push('\n');
            for (k, t) in times.iter().enumerate() {
                let _ = write!(csv, "{t:.16e}");
                for c in &columns {
                    let _ = write!(csv, ",{:.16e}", c.values()[k]);
                }
                csv.push('\n');
            }
            out.artifacts.push(Artifact::new(format!("otoc_map_{stem}.csv"), csv));
            None
        }
        ExperimentKind::Autocorr => {
            let op = Options::site_op(&o.op)?;
            let mode = match o.trace {
                TraceKind::Haar => TraceMode::HaarTypicality {
                    samples: o.samples,
                    seed: job.seed,
                },
                TraceKind::Exact => TraceMode::ExactTrace,
            };
            Some(two_time_autocorrelation(&spec, op, &times, mode, o.method_for(&spec)?)?)
        }
        ExperimentKind::StarOracle => {
            let p = StarParams::new(spec.l, spec.lambda, spec.h_c)?;
            Some(star_autocorrelation_series(&p, &times)?)
        }
        ExperimentKind::SpectrumStats => {
            let scans = sector_ratio_scan(&[spec], o.window.resolve()?)?;
            let reports: Vec<_> = scans.iter().flat_map(|s| s.reports().cloned()).collect();
            out.artifacts.push(Artifact::new(format!("ratios_{stem}.csv"), reports_to_csv(&reports)));
            let pooled = &scans[0].pooled;
            out.summary.push(("n_levels".into(), pooled.n_levels.to_string()));
            out.summary.push(("mean_r".into(), format!("{:?}", pooled.mean_r)));
            None
        }
        ExperimentKind::LambdaCScan => {
            lambda_c_job(config, job, &times, &mut out)?;
            None
        }
        ExperimentKind::Fit => unreachable!("handled before job expansion"),
    };
    if let Some(series) = series {
        let series = tag(series, config, job);
        if let Some(t0) = o.t0 {
            out.summary
                .push(("A_t0".into(), format!("{:?}", long_time_average(&series, t0)?)));
        }
        let mut fit_artifacts = Vec::new();
        let cols = fit_columns(&series, o, &stem, &mut fit_artifacts);
        out.summary.extend(cols);
        out.artifacts.push(Artifact::new(format!("series_{stem}.csv"), series.to_csv()));
        out.artifacts.extend(fit_artifacts);
    }
    Ok(out)
}

fn otoc_for(spec: &ModelSpec, v: SiteOp, w: SiteOp, times: &[f64], o: &Options, seed: u64) -> Result<TimeSeries> {
    match o.trace {
        TraceKind::Haar => otoc_typical(spec, v, w, times, o.samples, seed, o.method_for(spec)?),
        TraceKind::Exact => otoc_exact_trace(spec, v, w, times),
    }
}

/// Entropy at `t` after a `|+y⟩` quench.
fn entropy_at(spec: &ModelSpec, o: &Options, t: f64) -> Result<f64> {
    let part = o.bipartition(spec.l);
    let s = quench_entropy_trajectory(spec, InitialState::PlusY, &part, &[t], o.method_for(spec)?)?;
    Ok(s.values()[0])
}

fn lambda_c_job(config: &ExperimentConfig, job: &Job, times: &[f64], out: &mut JobOutput) -> Result<()> {
    let o = &config.options;
    let spec = job.point.spec;
    let stem = job.stem();
    let reference_spec = ModelSpec { lambda: 0.0, ..spec };
    let part = o.bipartition(spec.l);
    let reference = quench_entropy_trajectory(
        &reference_spec,
        InitialState::PlusY,
        &part,
        times,
        o.method_for(&reference_spec)?,
    )?;
    let t_star = match o.t_star {
        Some(t) => t,
        None => select_t_star(&reference)?,
    };
    let values: Vec<f64> = o
        .lambdas
        .par_iter()
        .map(|&lambda| entropy_at(&ModelSpec { lambda, ..spec }, o, t_star))
        .collect::<Result<_>>()?;
    let reference = tag(reference.with_meta("role", "reference"), config, job);
    out.artifacts
        .push(Artifact::new(format!("reference_{stem}.csv"), reference.to_csv()));
    let mut csv = format!("# L={}\n# h_c={:?}\n# t_star={t_star:?}\nlambda,S\n", spec.l, spec.h_c);
    for (l, s) in o.lambdas.iter().zip(&values) {
        let _ = writeln!(csv, "{l:?},{s:?}");
    }
    out.artifacts.push(Artifact::new(format!("curve_{stem}.csv"), csv));
    out.summary.push(("t_star".into(), format!("{t_star:?}")));
    out.curve = Some(CrossoverCurve {
        l: spec.l,
        h_c: spec.h_c,
        lambdas: o.lambdas.clone(),
        values,
    });
    Ok(())
}

fn run_fit_experiment(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let o = &config.options;
    let path = o.input.as_ref().expect("validated");
    let text = std::fs::read_to_string(path)?;
    let series = TimeSeries::from_csv(&text)?;
    let fit = fit_series(&series, o.fit.expect("validated"), o)?;
    Ok(vec![Artifact::new("fit.json", fit.to_json())])
}

pub(crate) fn prefix_all(artifacts: Vec<Artifact>, dir: &str) -> Vec<Artifact> {
    artifacts.into_iter().map(|a| a.prefixed(dir)).collect()
}

pub(crate) fn finish_reproduce(
    figure: &str,
    configs: Vec<ExperimentConfig>,
    artifacts: Vec<Artifact>,
    deviations: Vec<String>,
    master_seed: u64,
    workers: usize,
    output_dir: PathBuf,
    started: Instant,
) -> Result<RunSummary> {
    finish(
        format!("reproduce {figure}"),
        configs,
        artifacts,
        deviations,
        master_seed,
        workers,
        output_dir,
        started,
    )
}

pub(crate) fn pool_for(workers: usize) -> Result<rayon::ThreadPool> {
    thread_pool(workers)
}

pub(crate) fn workers_for(requested: Option<usize>) -> usize {
    resolve_workers(requested)
}
