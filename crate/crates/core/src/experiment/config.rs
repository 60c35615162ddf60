use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{max_dense_dim, KrylovParams, Method, AUTO_DENSE_DIM};
use crate::error::{Error, Result};
use crate::fitting::ModelId;
use crate::hamiltonian::ModelSpec;
use crate::observables::{BipartitionSpec, CQubitSide, SiteOp};
use crate::spectral::Window;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    QuenchEntropy,
    OtocMap,
    OtocCurve,
    Autocorr,
    StarOracle,
    SpectrumStats,
    Fit,
    LambdaCScan,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::QuenchEntropy => "quench_entropy",
            ExperimentKind::OtocMap => "otoc_map",
            ExperimentKind::OtocCurve => "otoc_curve",
            ExperimentKind::Autocorr => "autocorr",
            ExperimentKind::StarOracle => "star_oracle",
            ExperimentKind::SpectrumStats => "spectrum_stats",
            ExperimentKind::Fit => "fit",
            ExperimentKind::LambdaCScan => "lambda_c_scan",
        }
    }

    /// Whether results depend on the seed.
    pub fn is_stochastic(self, options: &Options) -> bool {
        match self {
            ExperimentKind::QuenchEntropy => options.initial == InitialKind::Haar,
            ExperimentKind::OtocMap | ExperimentKind::OtocCurve | ExperimentKind::Autocorr => {
                options.trace == TraceKind::Haar
            }
            _ => false,
        }
    }

    fn needs_time_grid(self) -> bool {
        !matches!(self, ExperimentKind::SpectrumStats | ExperimentKind::Fit)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n_points: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// First point. Defaults to 0 for linear spacing and `t_max / 1000` for log spacing.
    #[serde(default)]
    pub t_min: Option<f64>,
}

impl TimeGrid {
    pub fn linear(t_max: f64, n_points: usize) -> Self {
        Self {
            t_max,
            n_points,
            spacing: Spacing::Linear,
            t_min: None,
        }
    }

    pub fn log(t_min: f64, t_max: f64, n_points: usize) -> Self {
        Self {
            t_max,
            n_points,
            spacing: Spacing::Log,
            t_min: Some(t_min),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::invalid("t_grid.n_points must be positive"));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::invalid("t_grid.t_max must be positive"));
        }
        let lo = self.start();
        if !(lo.is_finite() && lo >= 0.0 && lo <= self.t_max) {
            return Err(Error::invalid(format!("t_grid.t_min = {lo} outside [0, t_max]")));
        }
        if self.spacing == Spacing::Log && lo <= 0.0 {
            return Err(Error::invalid("log spacing needs t_min > 0"));
        }
        if self.n_points > 1 && lo == self.t_max {
            return Err(Error::invalid("t_grid spans zero time"));
        }
        Ok(())
    }

    fn start(&self) -> f64 {
        match (self.t_min, self.spacing) {
            (Some(t), _) => t,
            (None, Spacing::Linear) => 0.0,
            (None, Spacing::Log) => self.t_max * 1e-3,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.n_points;
        let lo = self.start();
        if n == 1 {
            return vec![self.t_max];
        }
        let mut out: Vec<f64> = (0..n)
            .map(|k| {
                let f = k as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => lo + (self.t_max - lo) * f,
                    Spacing::Log => lo * (self.t_max / lo).powf(f),
                }
            })
            .collect();
        out[n - 1] = self.t_max;
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    #[default]
    Auto,
    Dense,
    Krylov,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    #[default]
    PlusY,
    Haar,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    #[default]
    Haar,
    Exact,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CQubitChoice {
    InA,
    #[default]
    InB,
}

/// `window = "all"` or `window = 100`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSetting {
    Count(usize),
    Name(String),
}

impl Default for WindowSetting {
    fn default() -> Self {
        WindowSetting::Count(100)
    }
}

impl WindowSetting {
    pub fn resolve(&self) -> Result<Window> {
        match self {
            WindowSetting::Count(n) => Ok(Window::Centered(*n)),
            WindowSetting::Name(s) => Window::from_str(s),
        }
    }
}

/// Experiment-specific settings; each experiment reads the subset it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    pub method: MethodKind,
    pub krylov_dim: usize,
    pub krylov_dt: f64,
    pub krylov_tol: f64,
    /// Initial state of a quench.
    pub initial: InitialKind,
    /// Ring sites of subsystem A; the half chain when absent.
    pub subsystem: Option<Vec<usize>>,
    pub cqubit: CQubitChoice,
    /// OTOC operators, e.g. `"Z0"`.
    pub v: String,
    pub w: String,
    /// Axis of `W` swept over every ring site in an OTOC map.
    pub w_axis: String,
    pub samples: usize,
    pub trace: TraceKind,
    /// Autocorrelation operator, e.g. `"X0"`.
    pub op: String,
    /// Long-time-average horizon; needs a grid starting at 0.
    pub t0: Option<f64>,
    pub fit: Option<ModelId>,
    pub fit_window: Option<[f64; 2]>,
    pub smoothing: Option<f64>,
    pub window: WindowSetting,
    /// Input series for the `fit` experiment.
    pub input: Option<PathBuf>,
    /// `λ` grid of a crossover scan.
    pub lambdas: Vec<f64>,
    /// Fixed evaluation time of a crossover scan instead of the half-saturation rule.
    pub t_star: Option<f64>,
}

impl Default for Options {
    fn default() -> Self {
        let k = KrylovParams::default();
        Self {
            method: MethodKind::Auto,
            krylov_dim: k.subspace_dim,
            krylov_dt: k.dt,
            krylov_tol: k.local_tolerance,
            initial: InitialKind::PlusY,
            subsystem: None,
            cqubit: CQubitChoice::InB,
            v: "Z0".into(),
            w: "Z1".into(),
            w_axis: "Z".into(),
            samples: 1,
            trace: TraceKind::Haar,
            op: "X0".into(),
            t0: None,
            fit: None,
            fit_window: None,
            smoothing: None,
            window: WindowSetting::default(),
            input: None,
            lambdas: Vec::new(),
            t_star: None,
        }
    }
}

impl Options {
    pub fn krylov_params(&self) -> Result<KrylovParams> {
        let params = KrylovParams {
            subspace_dim: self.krylov_dim,
            dt: self.krylov_dt,
            local_tolerance: self.krylov_tol,
        };
        params.validate()?;
        Ok(params)
    }

    /// Propagation method for `spec`; `auto` picks dense diagonalization for small spaces.
    pub fn method_for(&self, spec: &ModelSpec) -> Result<Method> {
        let params = self.krylov_params()?;
        Ok(match self.method {
            MethodKind::Auto if spec.dim() <= AUTO_DENSE_DIM.min(max_dense_dim()) => Method::Dense,
            MethodKind::Auto | MethodKind::Krylov => Method::Krylov(params),
            MethodKind::Dense => Method::Dense,
        })
    }

    pub fn bipartition(&self, l: usize) -> BipartitionSpec {
        let cqubit = match self.cqubit {
            CQubitChoice::InA => CQubitSide::InA,
            CQubitChoice::InB => CQubitSide::InB,
        };
        match &self.subsystem {
            Some(sites) => BipartitionSpec::new(sites.clone(), cqubit),
            None => BipartitionSpec {
                cqubit,
                ..BipartitionSpec::half_chain(l)
            },
        }
    }

    pub fn site_op(label: &str) -> Result<SiteOp> {
        label.parse()
    }
}

/// Resource limits enforced before any work starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Limits {
    /// Largest `L + 1` for state-vector work.
    pub max_sites: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_sites: 24 }
    }
}

/// Names accepted in `[sweep]`.
pub const SWEEP_KEYS: [&str; 7] = ["L", "lambda", "J", "h", "g", "h_c", "g_c"];

/// A parsed experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub model: ModelSpec,
    /// Parameter name to value list; the sweep is the Cartesian product in key order.
    #[serde(default)]
    pub sweep: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub t_grid: Option<TimeGrid>,
    /// Master seed.
    #[serde(default)]
    pub seed: u64,
    /// Replica labels for stochastic experiments; each (point, label) pair is one job.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub options: Options,
    #[serde(default)]
    pub limits: Limits,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, model: ModelSpec) -> Self {
        Self {
            experiment,
            model,
            sweep: BTreeMap::new(),
            t_grid: None,
            seed: 0,
            seeds: default_seeds(),
            workers: None,
            output_dir: None,
            options: Options::default(),
            limits: Limits::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; a relative `options.input` is resolved against the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml_str(&text)?;
        if let (Some(input), Some(dir)) = (&config.options.input, path.parent()) {
            if input.is_relative() {
                config.options.input = Some(dir.join(input));
            }
        }
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configs are always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        for (key, values) in &self.sweep {
            if !SWEEP_KEYS.contains(&key.as_str()) {
                return Err(Error::invalid(format!(
                    "unknown sweep parameter {key:?}; expected one of {SWEEP_KEYS:?}"
                )));
            }
            if values.is_empty() {
                return Err(Error::invalid(format!("sweep.{key} is empty")));
            }
            if key == "L" && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
                return Err(Error::invalid("sweep.L values must be positive integers"));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds must not be empty"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers must be positive"));
        }
        match (&self.t_grid, self.experiment.needs_time_grid()) {
            (Some(g), _) => g.validate()?,
            (None, true) => return Err(Error::invalid(format!("{} needs a [t_grid] section", self.experiment))),
            (None, false) => {}
        }
        let o = &self.options;
        o.krylov_params()?;
        if o.samples == 0 {
            return Err(Error::invalid("options.samples must be positive"));
        }
        if let Some([a, b]) = o.fit_window {
            if !(a <= b) {
                return Err(Error::invalid("options.fit_window must be [start, end]"));
            }
        }
        o.window.resolve()?;
        match self.experiment {
            ExperimentKind::OtocCurve => {
                Options::site_op(&o.v)?;
                Options::site_op(&o.w)?;
            }
            ExperimentKind::OtocMap => {
                Options::site_op(&o.v)?;
                crate::pauli::Pauli::from_str(&o.w_axis)?;
            }
            ExperimentKind::Autocorr => {
                Options::site_op(&o.op)?;
            }
            ExperimentKind::Fit => {
                if o.input.is_none() || o.fit.is_none() {
                    return Err(Error::invalid("fit needs options.input and options.fit"));
                }
                if !self.sweep.is_empty() {
                    return Err(Error::invalid("fit does not take a sweep"));
                }
            }
            ExperimentKind::LambdaCScan => {
                if o.lambdas.len() < 8 {
                    return Err(Error::invalid("lambda_c_scan needs at least 8 options.lambdas"));
                }
            }
            ExperimentKind::StarOracle => {
                for spec in self.points()? {
                    let s = spec.spec;
                    if s.j != 0.0 || s.h != 0.0 || s.g != 0.0 || s.g_c != 0.0 {
                        return Err(Error::invalid("star_oracle needs J = h = g = g_c = 0"));
                    }
                }
            }
            _ => {}
        }
        for p in self.points()? {
            p.spec.validate()?;
            if p.spec.n_sites() > self.limits.max_sites && self.experiment != ExperimentKind::StarOracle {
                return Err(Error::ResourceCap(format!(
                    "L + 1 = {} exceeds limits.max_sites = {}",
                    p.spec.n_sites(),
                    self.limits.max_sites
                )));
            }
        }
        Ok(())
    }

    /// Expands the sweep. An empty sweep yields the base model alone.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let mut out = vec![SweepPoint {
            index: 0,
            spec: self.model,
            values: Vec::new(),
        }];
        for (key, values) in &self.sweep {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for p in &out {
                for &v in values {
                    let mut q = p.clone();
                    apply_parameter(&mut q.spec, key, v)?;
                    q.values.push((key.clone(), v));
                    next.push(q);
                }
            }
            out = next;
        }
        for (k, p) in out.iter_mut().enumerate() {
            p.index = k;
        }
        Ok(out)
    }
}

/// One point of the parameter sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub spec: ModelSpec,
    /// Swept parameters and their values at this point.
    pub values: Vec<(String, f64)>,
}

pub fn apply_parameter(spec: &mut ModelSpec, key: &str, v: f64) -> Result<()> {
    match key {
        "L" => spec.l = v as usize,
        "lambda" => spec.lambda = v,
        "J" => spec.j = v,
        "h" => spec.h = v,
        "g" => spec.g = v,
        "h_c" => spec.h_c = v,
        "g_c" => spec.g_c = v,
        other => return Err(Error::invalid(format!("unknown model parameter {other:?}"))),
    }
    Ok(())
}
