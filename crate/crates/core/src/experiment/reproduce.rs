//! Canned figure recipes at desk-scale sizes.
//!
//! Each recipe is a list of experiment configs plus an optional post-processing step that
//! turns the raw series into fit tables. Size reductions are listed in the manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use super::{
    execute, finish_reproduce, fit_series, pool_for, prefix_all, workers_for, Artifact, ExperimentConfig,
    ExperimentKind, InitialKind, Options, RunOptions, RunSummary, TimeGrid, TraceKind, WindowSetting,
};
use crate::error::{Error, Result};
use crate::fitting::ModelId;
use crate::hamiltonian::{CouplingAxis, ModelSpec};
use crate::observables::{SiteOp, TimeSeries};
use crate::pauli::Pauli;
use crate::star::otoc_early_time_law;

/// Recognized figure ids.
pub const FIGURES: [&str; 10] = [
    "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "figS1", "figS2", "figS3", "figS4",
];

type PostProcess = fn(&[Artifact]) -> Result<Vec<Artifact>>;

/// A figure recipe.
pub struct Recipe {
    pub figure: &'static str,
    /// `(subdirectory, config)` pairs; an empty subdirectory writes at the top level.
    pub configs: Vec<(String, ExperimentConfig)>,
    pub deviations: Vec<String>,
    post: Option<PostProcess>,
}

fn sweep(pairs: &[(&str, &[f64])]) -> BTreeMap<String, Vec<f64>> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect()
}

fn config(kind: ExperimentKind, model: ModelSpec, t_grid: Option<TimeGrid>) -> ExperimentConfig {
    ExperimentConfig {
        t_grid,
        ..ExperimentConfig::new(kind, model)
    }
}

/// Star model: ring couplings and fields off, c-qubit field `h_c`.
fn star(l: usize, lambda: f64, h_c: f64) -> ModelSpec {
    ModelSpec {
        h_c,
        ..ModelSpec::pure_star(l, lambda)
    }
}

/// The recipe behind `figure`.
pub fn recipe(figure: &str) -> Result<Recipe> {
    let r = match figure {
        "fig2" => {
            let mut c = config(
                ExperimentKind::StarOracle,
                star(40, 1.0, 0.5),
                Some(TimeGrid::linear(200.0, 8001)),
            );
            c.sweep = sweep(&[(
                "h_c",
                &[0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 24.0, 32.0, 40.0, 48.0, 64.0, 80.0, 120.0, 160.0],
            )]);
            c.options.t0 = Some(200.0);
            c.options.fit = Some(ModelId::DecayingCosine);
            Recipe {
                figure: "fig2",
                configs: vec![(String::new(), c)],
                deviations: vec!["h_c grid extended to 160 so that h_c/(λL) reaches 4".into()],
                post: Some(post_fig2),
            }
        }
        "fig3" => {
            let mut c = config(
                ExperimentKind::QuenchEntropy,
                ModelSpec::new(11, 0.0),
                Some(TimeGrid::log(0.05, 200.0, 80)),
            );
            c.sweep = sweep(&[("lambda", &[0.0, 0.5, 1.0, 1.5, 2.0, 3.0])]);
            Recipe {
                figure: "fig3",
                configs: vec![(String::new(), c)],
                deviations: vec!["L + 1 = 12 instead of up to 22".into()],
                post: Some(post_growth_fits),
            }
        }
        "fig4" => {
            let mut c = config(
                ExperimentKind::LambdaCScan,
                ModelSpec::new(9, 0.0),
                Some(TimeGrid::linear(40.0, 401)),
            );
            c.sweep = sweep(&[("L", &[9.0, 11.0, 13.0]), ("h_c", &[0.8, 1.05, 1.3])]);
            c.options.lambdas = (0..13).map(|k| 0.5 + 0.25 * k as f64).collect();
            Recipe {
                figure: "fig4",
                configs: vec![(String::new(), c)],
                deviations: vec!["ring sizes L = 9, 11, 13 only; exponents carry strong finite-size drift".into()],
                post: None,
            }
        }
        "fig5" => Recipe {
            figure: "fig5",
            configs: vec![(String::new(), slow_growth_config(&[11.0]))],
            deviations: vec!["L + 1 = 12; one Haar state per curve".into()],
            post: None,
        },
        "fig6" => {
            let mut c = config(
                ExperimentKind::OtocMap,
                ModelSpec::new(9, 0.0),
                Some(TimeGrid::linear(10.0, 51)),
            );
            c.sweep = sweep(&[("lambda", &[0.0, 1.0, 3.0])]);
            c.options.v = "Z0".into();
            c.options.w_axis = "Z".into();
            c.options.trace = TraceKind::Exact;
            Recipe {
                figure: "fig6",
                configs: vec![(String::new(), c)],
                deviations: vec!["L + 1 = 10 with the exact infinite-temperature trace".into()],
                post: None,
            }
        }
        "fig7" => {
            let mut c = config(
                ExperimentKind::QuenchEntropy,
                ModelSpec {
                    axis: CouplingAxis::X,
                    ..ModelSpec::new(11, 0.0)
                },
                Some(TimeGrid::log(0.05, 200.0, 80)),
            );
            c.sweep = sweep(&[("lambda", &[0.0, 1.0, 3.0])]);
            Recipe {
                figure: "fig7",
                configs: vec![(String::new(), c)],
                deviations: vec!["L = 11 instead of 13; single trajectory".into()],
                post: Some(post_growth_fits),
            }
        }
        "figS1" => {
            let mut c = config(
                ExperimentKind::OtocCurve,
                star(6, 1.0, 0.1),
                Some(TimeGrid::log(0.01, 1.0, 40)),
            );
            c.sweep = sweep(&[("h_c", &[0.1, 0.2, 0.4])]);
            c.options.v = "X1".into();
            c.options.w = "X0".into();
            c.options.trace = TraceKind::Exact;
            c.options.fit = Some(ModelId::PowerLaw);
            c.options.fit_window = Some([0.05, 0.3]);
            Recipe {
                figure: "figS1",
                configs: vec![(String::new(), c)],
                deviations: vec![],
                post: Some(post_figs1),
            }
        }
        "figS2" => {
            let mut c = config(
                ExperimentKind::QuenchEntropy,
                star(4, 1.0, 1.05),
                Some(TimeGrid::linear(20.0, 201)),
            );
            c.sweep = sweep(&[("L", &[4.0, 6.0, 8.0, 10.0])]);
            c.options.initial = InitialKind::PlusY;
            Recipe {
                figure: "figS2",
                configs: vec![(String::new(), c)],
                deviations: vec![],
                post: None,
            }
        }
        "figS3" => Recipe {
            figure: "figS3",
            configs: vec![(String::new(), slow_growth_config(&[9.0, 11.0]))],
            deviations: vec!["ring sizes L = 9, 11 only".into()],
            post: None,
        },
        "figS4" => {
            let mut c = config(ExperimentKind::SpectrumStats, ModelSpec::new(11, 0.0), None);
            c.sweep = sweep(&[
                ("lambda", &[0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0]),
                ("g", &[0.0, 0.225, 0.45, 0.9]),
            ]);
            c.options.window = WindowSetting::Count(100);
            Recipe {
                figure: "figS4",
                configs: vec![(String::new(), c)],
                deviations: vec!["L + 1 = 12".into()],
                post: None,
            }
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown figure {other:?}; expected one of {FIGURES:?}"
            )))
        }
    };
    Ok(r)
}

/// `C_zz(|i − j| = 4)` curves with power-law fits over the intermediate window `t ∈ [2, 10]`.
fn slow_growth_config(sizes: &[f64]) -> ExperimentConfig {
    let mut c = config(
        ExperimentKind::OtocCurve,
        ModelSpec::new(11, 1.5),
        Some(TimeGrid::log(0.1, 50.0, 40)),
    );
    c.sweep = sweep(&[("L", sizes), ("lambda", &[1.5, 2.0, 2.5, 3.0])]);
    c.options = Options {
        v: "Z0".into(),
        w: "Z4".into(),
        trace: TraceKind::Haar,
        samples: 1,
        fit: Some(ModelId::PowerLaw),
        fit_window: Some([2.0, 10.0]),
        ..Options::default()
    };
    c
}

/// Runs `figure`'s recipe and writes its artifacts and manifest.
pub fn reproduce(figure: &str, options: &RunOptions) -> Result<RunSummary> {
    let started = Instant::now();
    let recipe = recipe(figure)?;
    let master = options.seed.unwrap_or(0);
    let workers = workers_for(options.workers);
    let output_dir = options
        .output_dir
        .clone()
        .unwrap_or_else(|| format!("ringstar-{figure}").into());
    let configs: Vec<(String, ExperimentConfig)> = recipe
        .configs
        .into_iter()
        .map(|(dir, mut c)| {
            c.seed = master;
            (dir, c)
        })
        .collect();
    let pool = pool_for(workers)?;
    let mut artifacts = Vec::new();
    for (dir, c) in &configs {
        let produced = pool.install(|| execute(c))?;
        artifacts.extend(prefix_all(produced, dir));
    }
    if let Some(post) = recipe.post {
        let extra = post(&artifacts)?;
        artifacts.extend(extra);
    }
    finish_reproduce(
        recipe.figure,
        configs.into_iter().map(|(_, c)| c).collect(),
        artifacts,
        recipe.deviations,
        master,
        workers,
        output_dir,
        started,
    )
}

fn series_artifacts(artifacts: &[Artifact]) -> Result<Vec<TimeSeries>> {
    artifacts
        .iter()
        .filter(|a| a.path.rsplit('/').next().is_some_and(|n| n.starts_with("series_")))
        .map(|a| TimeSeries::from_csv(&String::from_utf8_lossy(&a.contents)))
        .collect()
}

fn meta<'a>(s: &'a TimeSeries, key: &str) -> &'a str {
    s.metadata.get(key).map(String::as_str).unwrap_or("")
}

fn fit_cells(s: &TimeSeries, model: ModelId, window: [f64; 2], keys: &[&str]) -> String {
    let options = Options {
        fit_window: Some(window),
        ..Options::default()
    };
    match fit_series(s, model, &options) {
        Ok(f) => {
            let mut cells: Vec<String> = keys.iter().map(|k| format!("{:?}", f.params[*k])).collect();
            cells.push(format!("{:?}", f.residual_rms));
            cells.join(",")
        }
        Err(_) => vec!["NaN"; keys.len() + 1].join(","),
    }
}

/// Marks the star transition `h_c = λL` next to the per-curve fit summary.
fn post_fig2(artifacts: &[Artifact]) -> Result<Vec<Artifact>> {
    let mut csv = String::from("h_c,lambda,L,h_c_over_lambda_L,regime\n");
    for s in series_artifacts(artifacts)? {
        let h_c: f64 = meta(&s, "h_c").parse().unwrap_or(f64::NAN);
        let lambda: f64 = meta(&s, "lambda").parse().unwrap_or(f64::NAN);
        let l: f64 = meta(&s, "L").parse().unwrap_or(f64::NAN);
        let ratio = h_c / (lambda * l);
        let regime = if ratio < 1.0 { "below" } else { "above" };
        let _ = writeln!(csv, "{h_c:?},{lambda:?},{l},{ratio:?},{regime}");
    }
    Ok(vec![Artifact::new("transition.csv", csv)])
}

/// Power-law fit on the early window and log fit on the decade after the shoulder.
fn post_growth_fits(artifacts: &[Artifact]) -> Result<Vec<Artifact>> {
    let mut csv = String::from(
        "lambda,axis,power_alpha,power_beta,power_rms,log_c,log_d,log_rms,log_power_beta,log_power_rms\n",
    );
    for s in series_artifacts(artifacts)? {
        let early = fit_cells(&s, ModelId::PowerLaw, [1.0, 2.5], &["alpha", "beta"]);
        let log = fit_cells(&s, ModelId::Loglinear, [2.0, 20.0], &["c", "d"]);
        let rival = match crate::fitting::fit_power_law_refined(&s, (2.0, 20.0)) {
            Ok(f) => format!("{:?},{:?}", f.params["beta"], f.residual_rms),
            Err(_) => "NaN,NaN".into(),
        };
        let _ = writeln!(
            csv,
            "{},{},{early},{log},{rival}",
            meta(&s, "lambda"),
            meta(&s, "axis")
        );
    }
    Ok(vec![Artifact::new("growth_fits.csv", csv)])
}

/// Early-time law coefficients next to the fitted exponents.
fn post_figs1(artifacts: &[Artifact]) -> Result<Vec<Artifact>> {
    let mut csv = String::from("h_c,law_exponent,law_coefficient\n");
    for s in series_artifacts(artifacts)? {
        let h_c: f64 = meta(&s, "h_c")
            .parse()
            .map_err(|_| Error::Parse("series lacks h_c metadata".into()))?;
        let law = otoc_early_time_law(&star(6, 1.0, h_c), SiteOp::new(1, Pauli::X), SiteOp::new(0, Pauli::X), 6)?;
        let _ = writeln!(csv, "{h_c:?},{},{:?}", law.exponent, law.coefficient);
    }
    Ok(vec![Artifact::new("early_time_law.csv", csv)])
}
