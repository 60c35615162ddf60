//! Curve fits used to summarize trajectories: damped oscillations, power laws, logarithmic
//! growth, crossover maxima and half-saturation times.

use std::collections::BTreeMap;

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::TimeSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    /// `a·cos(ε₀t + φ)·e^{−ε₁t}`
    DecayingCosine,
    /// `α·t^β`
    PowerLaw,
    /// `c·ln t + d`
    Loglinear,
}

/// Fitted parameters with standard errors.
///
/// `residual_rms` is always measured on the data scale (not in log space), so fits of
/// different models to the same window are directly comparable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model_id: ModelId,
    pub params: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
    pub residual_rms: f64,
    /// Time range of the samples actually used.
    pub window: (f64, f64),
}

impl FitResult {
    pub fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| Error::invalid(format!("fit has no parameter {name:?}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit results are always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Model value at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let p = |k: &str| self.params.get(k).copied().unwrap_or(f64::NAN);
        match self.model_id {
            ModelId::DecayingCosine => {
                p("a") * (p("epsilon0") * t + p("phi")).cos() * (-p("epsilon1") * t).exp()
            }
            ModelId::PowerLaw => p("alpha") * t.powf(p("beta")),
            ModelId::Loglinear => p("c") * t.ln() + p("d"),
        }
    }
}

fn windowed(series: &TimeSeries, window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = window;
    if !(lo <= hi) {
        return Err(Error::invalid(format!("empty fit window [{lo}, {hi}]")));
    }
    let w = series.window(lo, hi)?;
    Ok((w.times().to_vec(), w.values().to_vec()))
}

/// Options for [`fit_decaying_cosine`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CosineFitOptions {
    /// Width (in time) of a centered moving average applied before fitting. Off by default:
    /// averaging over a full period of the fitted oscillation removes it.
    pub smoothing_width: Option<f64>,
}

/// Centered moving average over `width` in time; the window shrinks near the ends.
pub fn moving_average(times: &[f64], values: &[f64], width: f64) -> Vec<f64> {
    let half = 0.5 * width;
    let mut out = Vec::with_capacity(values.len());
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut sum = 0.0;
    for &t in times {
        while hi < times.len() && times[hi] <= t + half {
            sum += values[hi];
            hi += 1;
        }
        while times[lo] < t - half {
            sum -= values[lo];
            lo += 1;
        }
        out.push(sum / (hi - lo) as f64);
    }
    out
}

/// Dense least-squares problem for a model `f(t; p)` with analytic gradient.
struct CurveProblem<'a> {
    t: &'a [f64],
    y: &'a [f64],
    p: DVector<f64>,
    model: &'a dyn Fn(f64, &[f64], &mut [f64]) -> f64,
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for CurveProblem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.p.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let mut grad = vec![0.0; self.p.len()];
        Some(DVector::from_iterator(
            self.t.len(),
            self.t
                .iter()
                .zip(self.y)
                .map(|(&t, &y)| (self.model)(t, self.p.as_slice(), &mut grad) - y),
        ))
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let n = self.p.len();
        let mut j = DMatrix::zeros(self.t.len(), n);
        let mut grad = vec![0.0; n];
        for (row, &t) in self.t.iter().enumerate() {
            (self.model)(t, self.p.as_slice(), &mut grad);
            for (col, g) in grad.iter().enumerate() {
                j[(row, col)] = *g;
            }
        }
        Some(j)
    }
}

struct LmOutcome {
    params: Vec<f64>,
    stderr: Vec<f64>,
    rss: f64,
}

fn levenberg(
    t: &[f64],
    y: &[f64],
    init: &[f64],
    model: &dyn Fn(f64, &[f64], &mut [f64]) -> f64,
) -> Result<LmOutcome> {
    let problem = CurveProblem {
        t,
        y,
        p: DVector::from_column_slice(init),
        model,
    };
    let (problem, report) = LevenbergMarquardt::new().with_patience(200).minimize(problem);
    let residuals = problem.residuals().expect("residuals are always available");
    let rss = residuals.norm_squared();
    if !report.termination.was_successful() || !rss.is_finite() {
        return Err(Error::Numerical {
            message: format!("least-squares fit did not converge: {:?}", report.termination),
            best_residual: Some((rss / t.len() as f64).sqrt()),
        });
    }
    let params: Vec<f64> = problem.p.iter().copied().collect();
    let stderr = covariance_stderr(&problem.jacobian().expect("jacobian"), rss, t.len());
    Ok(LmOutcome { params, stderr, rss })
}

/// `sqrt(diag(σ² (JᵀJ)⁻¹))` with `σ² = RSS / (n − p)`; NaN where undetermined.
fn covariance_stderr(j: &DMatrix<f64>, rss: f64, n: usize) -> Vec<f64> {
    let p = j.ncols();
    if n <= p {
        return vec![f64::NAN; p];
    }
    let sigma2 = rss / (n - p) as f64;
    match (j.transpose() * j).try_inverse() {
        Some(inv) => (0..p).map(|k| (sigma2 * inv[(k, k)]).max(0.0).sqrt()).collect(),
        None => vec![f64::NAN; p],
    }
}

fn rms(t: &[f64], y: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let ss: f64 = t.iter().zip(y).map(|(&t, &y)| (f(t) - y).powi(2)).sum();
    (ss / t.len() as f64).sqrt()
}

fn named(names: &[&str], values: &[f64]) -> BTreeMap<String, f64> {
    names.iter().map(|n| n.to_string()).zip(values.iter().copied()).collect()
}

/// `Σ_k (y_k − mean) e^{−iω(t_k − t₀)}` at `ω = 2πm / (16(n−1)dt)` for every `m`, when the grid is
/// uniform; `None` otherwise.
fn uniform_spectrum(t: &[f64], y: &[f64], mean: f64) -> Option<Vec<Complex64>> {
    let n = t.len();
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    if t.iter().enumerate().any(|(k, &tk)| (tk - t[0] - k as f64 * dt).abs() > 1e-9 * dt.max(1.0)) {
        return None;
    }
    let len = 16 * (n - 1);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (b, &yk) in buf.iter_mut().zip(y) {
        b.re = yk - mean;
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    Some(buf)
}

/// Dominant angular frequency and its phase from a periodogram scan of `y − mean(y)`.
fn periodogram_peak(t: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = t.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let span = t[n - 1] - t[0];
    let min_dt = t.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let nyquist = std::f64::consts::PI / min_dt;
    let step = std::f64::consts::PI / (8.0 * span);
    let power = |w: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (&tk, &yk) in t.iter().zip(y) {
            let (s, c) = (w * (tk - t[0])).sin_cos();
            re += (yk - mean) * c;
            im -= (yk - mean) * s;
        }
        (re * re + im * im, im.atan2(re))
    };
    let mut best = (0.0, f64::NEG_INFINITY, 0.0);
    if let Some(spectrum) = uniform_spectrum(t, y, mean) {
        // Bin k of a length-16(n−1) transform sits at angular frequency k·step.
        for (k, z) in spectrum.iter().enumerate().skip(1) {
            let w = k as f64 * step;
            if w >= nyquist {
                break;
            }
            if z.norm_sqr() > best.1 {
                best = (w, z.norm_sqr(), z.im.atan2(z.re));
            }
        }
    } else {
        let mut w = step;
        while w < nyquist {
            let (p, phase) = power(w);
            if p > best.1 {
                best = (w, p, phase);
            }
            w += step;
        }
    }
    // Refine by golden-section search on the bracketing interval.
    let (mut a, mut b) = ((best.0 - step).max(step * 0.5), best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if power(c).0 > power(d).0 {
            b = d;
        } else {
            a = c;
        }
    }
    let w = 0.5 * (a + b);
    let (p, phase) = power(w);
    // Phase is relative to t[0]; shift to the t = 0 origin.
    (w, phase - w * t[0], p)
}

/// Least-squares fit of `a·cos(ε₀t + φ)·e^{−ε₁t}` on `window`.
///
/// Returns parameters `a ≥ 0`, `epsilon0 ≥ 0`, `phi ∈ (−π, π]`, `epsilon1 ≥ 0`. If the free fit
/// prefers growth (`ε₁ < 0`), the model is refitted with `ε₁ = 0`.
pub fn fit_decaying_cosine(series: &TimeSeries, window: (f64, f64), options: CosineFitOptions) -> Result<FitResult> {
    let (t, raw) = windowed(series, window)?;
    if t.len() < 8 {
        return Err(Error::invalid("a decaying-cosine fit needs at least 8 samples"));
    }
    let y = match options.smoothing_width {
        Some(w) if w > 0.0 => moving_average(&t, &raw, w),
        Some(w) => return Err(Error::invalid(format!("smoothing width must be positive, got {w}"))),
        None => raw,
    };
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let spread = y.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-12 * (1.0 + mean.abs()) {
        return Err(Error::invalid("constant series: the oscillation frequency is undetermined"));
    }
    let span = t[t.len() - 1] - t[0];
    let (w0, phase0, _) = periodogram_peak(&t, &y);
    let periods = w0 * span / (2.0 * std::f64::consts::PI);
    if periods < 4.0 {
        return Err(Error::invalid(format!(
            "window holds only {periods:.2} periods of the dominant oscillation (need 4)"
        )));
    }
    let a0 = y.iter().map(|v| v.abs()).fold(0.0, f64::max);

    let free = |t: f64, p: &[f64], g: &mut [f64]| {
        let (a, w, phi, e) = (p[0], p[1], p[2], p[3]);
        let env = (-e * t).exp();
        let (s, c) = (w * t + phi).sin_cos();
        g[0] = c * env;
        g[1] = -a * t * s * env;
        g[2] = -a * s * env;
        g[3] = -a * t * c * env;
        a * c * env
    };
    let pinned = |t: f64, p: &[f64], g: &mut [f64]| {
        let (a, w, phi) = (p[0], p[1], p[2]);
        let (s, c) = (w * t + phi).sin_cos();
        g[0] = c;
        g[1] = -a * t * s;
        g[2] = -a * s;
        a * c
    };

    let mut outcome = levenberg(&t, &y, &[a0, w0, phase0, 0.0], &free)?;
    if outcome.params[3] < 0.0 {
        let mut pinned_fit = levenberg(&t, &y, &outcome.params[..3], &pinned)?;
        pinned_fit.params.push(0.0);
        pinned_fit.stderr.push(0.0);
        outcome = pinned_fit;
    }
    let (mut a, mut w, mut phi, e) = (outcome.params[0], outcome.params[1], outcome.params[2], outcome.params[3]);
    if w < 0.0 {
        w = -w;
        phi = -phi;
    }
    if a < 0.0 {
        a = -a;
        phi += std::f64::consts::PI;
    }
    phi = phi.rem_euclid(2.0 * std::f64::consts::PI);
    if phi > std::f64::consts::PI {
        phi -= 2.0 * std::f64::consts::PI;
    }
    let values = [a, w, phi, e];
    let names = ["a", "epsilon0", "phi", "epsilon1"];
    let result = FitResult {
        model_id: ModelId::DecayingCosine,
        params: named(&names, &values),
        stderr: named(&names, &outcome.stderr),
        residual_rms: (outcome.rss / t.len() as f64).sqrt(),
        window: (t[0], t[t.len() - 1]),
    };
    Ok(result)
}

/// Longest contiguous run of indices where `keep` holds.
fn longest_run(len: usize, keep: impl Fn(usize) -> bool) -> (usize, usize) {
    let (mut best, mut start) = ((0, 0), None);
    for k in 0..=len {
        let ok = k < len && keep(k);
        match (ok, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                if k - s > best.1 - best.0 {
                    best = (s, k);
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

fn positive_run(t: &[f64], y: &[f64], need_positive_y: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = longest_run(t.len(), |k| t[k] > 0.0 && (!need_positive_y || y[k] > 0.0));
    if hi - lo < t.len() {
        log::warn!(
            "fit window shrunk to {} of {} samples with positive {}",
            hi - lo,
            t.len(),
            if need_positive_y { "t and value" } else { "t" }
        );
    }
    if hi - lo < 3 {
        return Err(Error::invalid("fewer than 3 usable samples in the fit window"));
    }
    Ok((t[lo..hi].to_vec(), y[lo..hi].to_vec()))
}

/// Ordinary least squares `y = x0 + x1·x`, with standard errors.
fn linear_regression(x: &[f64], y: &[f64]) -> ([f64; 2], [f64; 2]) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let (se_slope, se_intercept) = if x.len() > 2 {
        let s2 = rss / (n - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / n + mx * mx / sxx)).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    ([intercept, slope], [se_intercept, se_slope])
}

/// `value = α·t^β` by linear regression of `ln value` on `ln t`.
///
/// Non-positive samples cannot enter the log; the window shrinks to the longest run of positive
/// samples, and the returned window shows what was used.
pub fn fit_power_law(series: &TimeSeries, window: (f64, f64)) -> Result<FitResult> {
    let (t, y) = windowed(series, window)?;
    let (t, y) = positive_run(&t, &y, true)?;
    let lx: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let ([ln_alpha, beta], [se_ln_alpha, se_beta]) = linear_regression(&lx, &ly);
    let alpha = ln_alpha.exp();
    Ok(FitResult {
        model_id: ModelId::PowerLaw,
        params: named(&["alpha", "beta", "ln_alpha"], &[alpha, beta, ln_alpha]),
        stderr: named(&["alpha", "beta", "ln_alpha"], &[alpha * se_ln_alpha, se_beta, se_ln_alpha]),
        residual_rms: rms(&t, &y, |x| alpha * x.powf(beta)),
        window: (t[0], t[t.len() - 1]),
    })
}

/// Power law fitted by least squares on the data scale, started from [`fit_power_law`].
pub fn fit_power_law_refined(series: &TimeSeries, window: (f64, f64)) -> Result<FitResult> {
    let start = fit_power_law(series, window)?;
    let (t, y) = windowed(series, start.window)?;
    let model = |t: f64, p: &[f64], g: &mut [f64]| {
        let v = t.powf(p[1]);
        g[0] = v;
        g[1] = p[0] * v * t.ln();
        p[0] * v
    };
    let out = levenberg(&t, &y, &[start.param("alpha")?, start.param("beta")?], &model)?;
    let (alpha, beta) = (out.params[0], out.params[1]);
    Ok(FitResult {
        model_id: ModelId::PowerLaw,
        params: named(&["alpha", "beta", "ln_alpha"], &[alpha, beta, alpha.ln()]),
        stderr: named(&["alpha", "beta", "ln_alpha"], &[out.stderr[0], out.stderr[1], out.stderr[0] / alpha]),
        residual_rms: (out.rss / t.len() as f64).sqrt(),
        window: start.window,
    })
}

/// `value = c·ln t + d` by linear regression on `ln t` (samples with `t ≤ 0` are skipped).
pub fn fit_loglinear(series: &TimeSeries, window: (f64, f64)) -> Result<FitResult> {
    let (t, y) = windowed(series, window)?;
    let (t, y) = positive_run(&t, &y, false)?;
    let lx: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ([d, c], [se_d, se_c]) = linear_regression(&lx, &y);
    Ok(FitResult {
        model_id: ModelId::Loglinear,
        params: named(&["c", "d"], &[c, d]),
        stderr: named(&["c", "d"], &[se_c, se_d]),
        residual_rms: rms(&t, &y, |x| c * x.ln() + d),
        window: (t[0], t[t.len() - 1]),
    })
}

/// One `S(t*)` versus `λ` curve at fixed ring size and c-qubit field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverCurve {
    #[serde(rename = "L")]
    pub l: usize,
    pub h_c: f64,
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
}

/// Location of one curve's maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverPoint {
    #[serde(rename = "L")]
    pub l: usize,
    pub h_c: f64,
    /// `None` when the sampled maximum sits on the edge of the grid.
    pub lambda_c: Option<f64>,
    pub at_edge: bool,
}

/// An estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Maxima per curve and the scaling fit `ln λ_c = c + γ ln L + κ ln h_c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverAnalysis {
    pub points: Vec<CrossoverPoint>,
    /// Only fitted when `L` varies across the usable curves.
    pub gamma: Option<Estimate>,
    /// Only fitted when `h_c` varies across the usable curves.
    pub kappa: Option<Estimate>,
    pub intercept: Option<Estimate>,
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curvature = (d2 - d1) / (x[2] - x[0]);
    if curvature == 0.0 {
        return x[1];
    }
    // y = y0 + d1 (x − x0) + curvature (x − x0)(x − x1)
    0.5 * (x[0] + x[1]) - d1 / (2.0 * curvature)
}

/// Finds each curve's interior maximum by quadratic interpolation and fits the size/field scaling.
pub fn find_lambda_c(curves: &[CrossoverCurve]) -> Result<CrossoverAnalysis> {
    if curves.is_empty() {
        return Err(Error::invalid("no curves given"));
    }
    let mut points = Vec::with_capacity(curves.len());
    for c in curves {
        if c.lambdas.len() != c.values.len() {
            return Err(Error::DimensionMismatch {
                expected: c.lambdas.len(),
                found: c.values.len(),
            });
        }
        if c.lambdas.len() < 8 {
            return Err(Error::invalid(format!(
                "curve L = {}, h_c = {} has {} points; at least 8 are needed",
                c.l,
                c.h_c,
                c.lambdas.len()
            )));
        }
        if c.lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("λ values must be strictly increasing"));
        }
        let k = c
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .expect("nonempty");
        let at_edge = k == 0 || k + 1 == c.values.len();
        let lambda_c = (!at_edge).then(|| {
            parabola_vertex(
                [c.lambdas[k - 1], c.lambdas[k], c.lambdas[k + 1]],
                [c.values[k - 1], c.values[k], c.values[k + 1]],
            )
        });
        if at_edge {
            log::warn!("maximum of curve L = {}, h_c = {} lies on the grid edge", c.l, c.h_c);
        }
        points.push(CrossoverPoint {
            l: c.l,
            h_c: c.h_c,
            lambda_c,
            at_edge,
        });
    }

    let usable: Vec<&CrossoverPoint> = points
        .iter()
        .filter(|p| p.lambda_c.is_some_and(|v| v > 0.0) && p.h_c > 0.0)
        .collect();
    let distinct = |f: &dyn Fn(&CrossoverPoint) -> f64| {
        usable.iter().any(|p| (f(p) - f(usable[0])).abs() > 1e-12)
    };
    let (vary_l, vary_h) = if usable.is_empty() {
        (false, false)
    } else {
        (distinct(&|p| p.l as f64), distinct(&|p| p.h_c))
    };
    let mut columns: Vec<Box<dyn Fn(&CrossoverPoint) -> f64>> = vec![Box::new(|_| 1.0)];
    if vary_l {
        columns.push(Box::new(|p| (p.l as f64).ln()));
    }
    if vary_h {
        columns.push(Box::new(|p| p.h_c.ln()));
    }
    let mut analysis = CrossoverAnalysis {
        points: points.clone(),
        gamma: None,
        kappa: None,
        intercept: None,
    };
    if usable.len() < columns.len() || columns.len() == 1 {
        return Ok(analysis);
    }
    let x = DMatrix::from_fn(usable.len(), columns.len(), |r, c| columns[c](usable[r]));
    let y = DVector::from_iterator(usable.len(), usable.iter().map(|p| p.lambda_c.unwrap().ln()));
    let xtx = x.transpose() * &x;
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| Error::numerical("crossover regression is singular"))?;
    let beta = &inv * x.transpose() * &y;
    let resid = &y - &x * &beta;
    let dof = usable.len() as f64 - columns.len() as f64;
    let s2 = if dof > 0.0 { resid.norm_squared() / dof } else { f64::NAN };
    let est = |k: usize| Estimate {
        value: beta[k],
        stderr: (s2 * inv[(k, k)]).sqrt(),
    };
    analysis.intercept = Some(est(0));
    let mut next = 1;
    if vary_l {
        analysis.gamma = Some(est(next));
        next += 1;
    }
    if vary_h {
        analysis.kappa = Some(est(next));
    }
    Ok(analysis)
}

/// Earliest grid time at which the reference entropy reaches half its saturation value.
///
/// Saturation is the mean over the final 10% of samples (at least 3). The series counts as
/// saturated when that mean differs from the mean of the preceding block of equal length by at
/// most 5%; finite-size fluctuations about the plateau are allowed, drift is not.
pub fn select_t_star(reference: &TimeSeries) -> Result<f64> {
    let v = reference.values();
    let n = v.len();
    let tail = (n / 10).max(3);
    if n < 2 * tail {
        return Err(Error::invalid("reference series too short to judge saturation"));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let sat = mean(&v[n - tail..]);
    let before = mean(&v[n - 2 * tail..n - tail]);
    if !(sat > 0.0) || (sat - before).abs() > 0.05 * sat {
        return Err(Error::invalid(format!(
            "reference series is not saturated: block means {before} then {sat}"
        )));
    }
    v.iter()
        .position(|&x| x >= 0.5 * sat)
        .map(|k| reference.times()[k])
        .ok_or_else(|| Error::numerical("no sample reaches half the saturation value"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn synthetic_decaying_cosine() {
        let t = grid(0.0, 30.0, 1500);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 1e-3).unwrap();
        let s = TimeSeries::new(
            t.clone(),
            t.iter().map(|&x| (2.0 * x).cos() * (-0.1 * x).exp() + noise.sample(&mut rng)).collect(),
        )
        .unwrap();
        let fit = fit_decaying_cosine(&s, (0.0, 30.0), CosineFitOptions::default()).unwrap();
        assert!((fit.param("epsilon0").unwrap() - 2.0).abs() < 0.01);
        assert!((fit.param("epsilon1").unwrap() - 0.1).abs() < 0.005);
        assert!((fit.param("a").unwrap() - 1.0).abs() < 0.01);
        assert!(fit.param("phi").unwrap().abs() < 0.01);
        assert!(fit.residual_rms < 2e-3);
    }

    #[test]
    fn undamped_cosine_pins_decay_at_zero() {
        let t = grid(0.0, 40.0, 2000);
        let s = TimeSeries::from_fn(&t, |x| 0.8 * (1.3 * x - 0.4).cos()).unwrap();
        let fit = fit_decaying_cosine(&s, (0.0, 40.0), CosineFitOptions::default()).unwrap();
        assert!((fit.param("epsilon0").unwrap() - 1.3).abs() < 1e-6);
        assert!(fit.param("epsilon1").unwrap() >= 0.0);
        assert!(fit.param("epsilon1").unwrap() < 1e-6);
        assert!((fit.param("phi").unwrap() + 0.4).abs() < 1e-5);
    }

    #[test]
    fn growing_oscillation_refits_with_zero_decay() {
        let t = grid(0.0, 40.0, 2000);
        let s = TimeSeries::from_fn(&t, |x| (1.0 * x).cos() * (0.01 * x).exp()).unwrap();
        let fit = fit_decaying_cosine(&s, (0.0, 40.0), CosineFitOptions::default()).unwrap();
        assert_eq!(fit.param("epsilon1").unwrap(), 0.0);
        assert!((fit.param("epsilon0").unwrap() - 1.0).abs() < 0.01);
    }

    #[test]
    fn degenerate_cosine_inputs_rejected() {
        let t = grid(0.0, 10.0, 200);
        let flat = TimeSeries::from_fn(&t, |_| 0.3).unwrap();
        assert!(matches!(
            fit_decaying_cosine(&flat, (0.0, 10.0), CosineFitOptions::default()),
            Err(Error::InvalidInput(_))
        ));
        let slow = TimeSeries::from_fn(&t, |x| (0.5 * x).cos()).unwrap();
        assert!(fit_decaying_cosine(&slow, (0.0, 10.0), CosineFitOptions::default()).is_err());
    }

    #[test]
    fn smoothing_is_a_centered_average() {
        let t = grid(0.0, 4.0, 5);
        let y = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(moving_average(&t, &y, 2.0), vec![0.5, 1.0, 2.0, 3.0, 3.5]);
        // A full-period average annihilates the oscillation.
        let t = grid(0.0, 20.0, 2001);
        let y: Vec<f64> = t.iter().map(|x| (std::f64::consts::PI * x).cos()).collect();
        let smooth = moving_average(&t, &y, 2.0);
        assert!(smooth[1000].abs() < 1e-2);
    }

    #[test]
    fn synthetic_power_law() {
        let t = grid(0.1, 10.0, 100);
        let s = TimeSeries::from_fn(&t, |x| 0.5 * x.powf(1.7)).unwrap();
        let fit = fit_power_law(&s, (0.1, 10.0)).unwrap();
        assert!((fit.param("alpha").unwrap() - 0.5).abs() < 1e-6);
        assert!((fit.param("beta").unwrap() - 1.7).abs() < 1e-6);
        assert!(fit.residual_rms < 1e-10);
        let refined = fit_power_law_refined(&s, (0.1, 10.0)).unwrap();
        assert!((refined.param("beta").unwrap() - 1.7).abs() < 1e-6);
    }

    #[test]
    fn power_law_window_shrinks_around_zero() {
        let t = grid(1.0, 20.0, 20);
        let y: Vec<f64> = t.iter().map(|&x| if x == 5.0 { 0.0 } else { 2.0 * x * x }).collect();
        let s = TimeSeries::new(t, y).unwrap();
        let fit = fit_power_law(&s, (0.0, 20.0)).unwrap();
        assert_eq!(fit.window, (6.0, 20.0));
        assert!((fit.param("beta").unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn loglinear_beats_power_law_on_log_growth() {
        let t = grid(1.0, 10.0, 200);
        let s = TimeSeries::from_fn(&t, |x| 0.7 * x.ln() + 2.0).unwrap();
        let log_fit = fit_loglinear(&s, (1.0, 10.0)).unwrap();
        assert!((log_fit.param("c").unwrap() - 0.7).abs() < 1e-12);
        assert!((log_fit.param("d").unwrap() - 2.0).abs() < 1e-12);
        let power = fit_power_law_refined(&s, (1.0, 10.0)).unwrap();
        assert!(log_fit.residual_rms < power.residual_rms);
    }

    #[test]
    fn fit_result_json_fields() {
        let t = grid(1.0, 10.0, 20);
        let s = TimeSeries::from_fn(&t, |x| 3.0 * x.powf(0.5)).unwrap();
        let fit = fit_power_law(&s, (1.0, 10.0)).unwrap();
        let json = fit.to_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let keys: Vec<&String> = value.as_object().unwrap().keys().collect();
        assert_eq!(keys, vec!["model_id", "params", "residual_rms", "stderr", "window"]);
        assert_eq!(value["model_id"], "power_law");
        assert_eq!(FitResult::from_json(&json).unwrap(), fit);
    }

    fn synthetic_curve(l: usize, h_c: f64, peak: f64, lambdas: &[f64]) -> CrossoverCurve {
        CrossoverCurve {
            l,
            h_c,
            lambdas: lambdas.to_vec(),
            values: lambdas.iter().map(|x| 2.0 - (x.ln() - peak.ln()).powi(2)).collect(),
        }
    }

    #[test]
    fn crossover_maxima_and_exponents() {
        let lambdas = grid(0.1, 2.0, 20);
        let step = lambdas[1] - lambdas[0];
        let mut curves = Vec::new();
        let (gamma, kappa, c0) = (-0.5, 0.5, 0.2f64);
        for &l in &[9usize, 11, 13] {
            for &h in &[0.8, 1.05, 1.3] {
                let peak = (c0 + gamma * (l as f64).ln() + kappa * f64::ln(h)).exp();
                curves.push(synthetic_curve(l, h, peak, &lambdas));
            }
        }
        let a = find_lambda_c(&curves).unwrap();
        for (p, c) in a.points.iter().zip(&curves) {
            let peak = (c0 + gamma * (c.l as f64).ln() + kappa * c.h_c.ln()).exp();
            assert!((p.lambda_c.unwrap() - peak).abs() < step / 4.0);
        }
        assert!((a.gamma.unwrap().value - gamma).abs() < 0.1);
        assert!((a.kappa.unwrap().value - kappa).abs() < 0.1);
    }

    #[test]
    fn monotone_curve_is_flagged() {
        let lambdas = grid(0.1, 2.0, 10);
        let curves = vec![
            CrossoverCurve {
                l: 9,
                h_c: 1.05,
                lambdas: lambdas.clone(),
                values: lambdas.iter().map(|x| x * 2.0).collect(),
            },
            synthetic_curve(11, 1.05, 0.7, &lambdas),
        ];
        let a = find_lambda_c(&curves).unwrap();
        assert!(a.points[0].at_edge);
        assert_eq!(a.points[0].lambda_c, None);
        assert!(a.gamma.is_none() && a.kappa.is_none());
        assert!(find_lambda_c(&[synthetic_curve(9, 1.0, 0.5, &grid(0.1, 1.0, 5))]).is_err());
    }

    #[test]
    fn t_star_of_tanh_ramp() {
        let t = grid(0.0, 30.0, 301);
        let s = TimeSeries::from_fn(&t, |x| 3.0 * (x / 2.0).tanh()).unwrap();
        let ts = select_t_star(&s).unwrap();
        let exact = 2.0 * 0.5f64.atanh();
        assert!((ts - exact).abs() <= 0.1 + 1e-12);
        let unsaturated = TimeSeries::from_fn(&t, |x| x).unwrap();
        assert!(select_t_star(&unsaturated).is_err());
        // Fluctuations about a plateau are fine.
        let noisy = TimeSeries::from_fn(&t, |x| 3.0 * (x / 2.0).tanh() + 0.3 * (5.0 * x).sin()).unwrap();
        assert!(select_t_star(&noisy).is_ok());
    }
}
