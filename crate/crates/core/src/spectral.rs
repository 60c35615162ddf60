//! Consecutive level-spacing ratios over symmetry-resolved spectra.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{full_spectrum_with_cap, DEFAULT_MAX_SPECTRUM_DIM};
use crate::error::{Error, Result};
use crate::hamiltonian::{sector_hamiltonian, Boundary, ModelSpec, Parity, SectorBasis};

/// Levels closer than this are treated as one.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Mean ratio of a Poisson (uncorrelated) spectrum, `2 ln 2 − 1`.
pub const POISSON_MEAN_R: f64 = 2.0 * std::f64::consts::LN_2 - 1.0;

/// Large-matrix GOE mean ratio.
pub const GOE_MEAN_R: f64 = 0.5307;

/// Which levels enter the statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    All,
    /// The given number of levels around the middle of the spectrum.
    Centered(usize),
}

impl Default for Window {
    fn default() -> Self {
        Window::Centered(100)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::All => f.write_str("all"),
            Window::Centered(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(Window::All),
            other => other
                .parse()
                .map(Window::Centered)
                .map_err(|_| Error::Parse(format!("window must be \"all\" or a level count, got {other:?}"))),
        }
    }
}

/// Output of [`gap_ratios`].
#[derive(Clone, Debug, PartialEq)]
pub struct GapRatios {
    pub ratios: Vec<f64>,
    /// Levels inside the window after merging.
    pub n_levels: usize,
    /// Number of levels dropped as degenerate with their predecessor.
    pub merged: usize,
}

impl GapRatios {
    pub fn mean(&self) -> f64 {
        self.ratios.iter().sum::<f64>() / self.ratios.len() as f64
    }
}

/// `r_i = min(s_i, s_{i+1}) / max(s_i, s_{i+1})` for consecutive gaps of an ascending spectrum.
///
/// Degenerate levels are merged first, then the window is applied to the merged levels.
pub fn gap_ratios(eigs: &[f64], window: Window) -> Result<GapRatios> {
    if eigs.len() < 3 {
        return Err(Error::invalid(format!("need at least 3 levels, got {}", eigs.len())));
    }
    if eigs.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("levels must be finite"));
    }
    if eigs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("levels must be sorted ascending"));
    }
    let mut levels = Vec::with_capacity(eigs.len());
    let mut merged = 0;
    for &e in eigs {
        match levels.last() {
            Some(&prev) if e - prev < DEGENERACY_TOLERANCE => merged += 1,
            _ => levels.push(e),
        }
    }
    if merged > 0 {
        log::info!("merged {merged} degenerate levels");
    }
    if levels.len() < 3 {
        return Err(Error::invalid(format!(
            "only {} distinct levels remain after merging degeneracies",
            levels.len()
        )));
    }
    let band = match window {
        Window::All => &levels[..],
        Window::Centered(n) if n >= levels.len() => &levels[..],
        Window::Centered(n) if n < 3 => {
            return Err(Error::invalid(format!("window of {n} levels is below the minimum of 3")));
        }
        Window::Centered(n) => {
            let start = (levels.len() - n) / 2;
            &levels[start..start + n]
        }
    };
    let ratios = band
        .windows(3)
        .map(|w| {
            let (a, b) = (w[1] - w[0], w[2] - w[1]);
            a.min(b) / a.max(b)
        })
        .collect();
    Ok(GapRatios {
        ratios,
        n_levels: band.len(),
        merged,
    })
}

/// Mean gap ratio of one sector, or of all sectors pooled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub spec: ModelSpec,
    pub sector_k: i64,
    /// `None` for the pooled report.
    pub sector_parity: Option<Parity>,
    pub n_levels: usize,
    pub window: Window,
    pub mean_r: f64,
    pub merged: usize,
}

impl RatioReport {
    pub const CSV_HEADER: &'static str = "lambda,J,h,g,h_c,g_c,L,sector_k,sector_parity,n_levels,window,mean_r";

    pub fn csv_row(&self) -> String {
        let s = &self.spec;
        let parity = match self.sector_parity {
            Some(Parity::Even) => "+1",
            Some(Parity::Odd) => "-1",
            None => "pooled",
        };
        format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{},{},{},{},{},{:?}",
            s.lambda, s.j, s.h, s.g, s.h_c, s.g_c, s.l, self.sector_k, parity, self.n_levels, self.window, self.mean_r
        )
    }
}

/// Writes reports as CSV with the header line.
pub fn reports_to_csv(reports: &[RatioReport]) -> String {
    let mut out = String::from(RatioReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Per-parity reports at `k = 0` and their pooled mean for one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorScan {
    pub sectors: Vec<RatioReport>,
    pub pooled: RatioReport,
}

impl SectorScan {
    pub fn reports(&self) -> impl Iterator<Item = &RatioReport> {
        self.sectors.iter().chain(std::iter::once(&self.pooled))
    }
}

fn scan_one(spec: &ModelSpec, window: Window, cap: usize) -> Result<SectorScan> {
    spec.validate()?;
    if spec.boundary != Boundary::Periodic {
        return Err(Error::invalid("sector statistics need a periodic ring"));
    }
    let mut sectors = Vec::with_capacity(2);
    let mut pooled: Vec<f64> = Vec::new();
    let (mut levels, mut merged) = (0, 0);
    for parity in [Parity::Even, Parity::Odd] {
        let basis = SectorBasis::new(spec.l, parity)?;
        if basis.dimension() > cap {
            return Err(Error::ResourceCap(format!(
                "sector dimension {} exceeds the dense cap {cap}",
                basis.dimension()
            )));
        }
        if basis.dimension() < 3 {
            log::warn!("sector {parity:?} at L = {} has fewer than 3 levels; skipped", spec.l);
            continue;
        }
        let eigs = full_spectrum_with_cap(&sector_hamiltonian(spec, &basis)?, cap)?;
        let g = gap_ratios(&eigs, window)?;
        levels += g.n_levels;
        merged += g.merged;
        sectors.push(RatioReport {
            spec: spec.clone(),
            sector_k: basis.momentum(),
            sector_parity: Some(parity),
            n_levels: g.n_levels,
            window,
            mean_r: g.mean(),
            merged: g.merged,
        });
        pooled.extend(g.ratios);
    }
    if pooled.is_empty() {
        return Err(Error::invalid(format!("L = {} has no sector with 3 or more levels", spec.l)));
    }
    let pooled = RatioReport {
        spec: spec.clone(),
        sector_k: 0,
        sector_parity: None,
        n_levels: levels,
        window,
        mean_r: pooled.iter().sum::<f64>() / pooled.len() as f64,
        merged,
    };
    Ok(SectorScan { sectors, pooled })
}

/// Gap-ratio statistics of both reflection sectors at zero momentum, for each model in parallel.
pub fn sector_ratio_scan(specs: &[ModelSpec], window: Window) -> Result<Vec<SectorScan>> {
    sector_ratio_scan_with_cap(specs, window, DEFAULT_MAX_SPECTRUM_DIM)
}

pub fn sector_ratio_scan_with_cap(specs: &[ModelSpec], window: Window, cap: usize) -> Result<Vec<SectorScan>> {
    specs.par_iter().map(|s| scan_one(s, window, cap)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1, StandardNormal};

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn picket_fence_and_toy_spectrum() {
        let fence: Vec<f64> = (0..20).map(|k| k as f64 * 0.3).collect();
        assert!(gap_ratios(&fence, Window::All).unwrap().ratios.iter().all(|r| (r - 1.0).abs() < 1e-12));
        let toy = gap_ratios(&[0.0, 1.0, 3.0], Window::All).unwrap();
        assert_eq!(toy.ratios, vec![0.5]);
        assert_eq!(toy.n_levels, 3);
    }

    #[test]
    fn degenerate_levels_merge() {
        let g = gap_ratios(&[0.0, 1.0, 1.0 + 1e-12, 3.0], Window::All).unwrap();
        assert_eq!(g.merged, 1);
        assert_eq!(g.ratios, vec![0.5]);
        assert!(gap_ratios(&[1.0, 1.0, 1.0, 1.0], Window::All).is_err());
        assert!(gap_ratios(&[0.0, 1.0], Window::All).is_err());
        assert!(gap_ratios(&[0.0, 2.0, 1.0], Window::All).is_err());
    }

    #[test]
    fn centered_window_takes_the_middle() {
        let levels: Vec<f64> = (0..10).map(|k| (k * k) as f64).collect();
        let g = gap_ratios(&levels, Window::Centered(4)).unwrap();
        assert_eq!(g.n_levels, 4);
        // Levels 9, 16, 25, 36: gaps 7, 9, 11.
        assert!((g.ratios[0] - 7.0 / 9.0).abs() < 1e-15);
        assert!((g.ratios[1] - 9.0 / 11.0).abs() < 1e-15);
        assert_eq!(gap_ratios(&levels, Window::Centered(100)).unwrap().n_levels, 10);
    }

    #[test]
    fn poisson_mean_from_quadrature_and_sampling() {
        // Ratio of two i.i.d. exponentials folded onto [0, 1] has density 2/(1+r)².
        let quad = simpson(|r| 2.0 * r / (1.0 + r).powi(2), 0.0, 1.0, 2000);
        assert!((quad - POISSON_MEAN_R).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut levels = vec![0.0];
        for _ in 0..100_001 {
            let gap: f64 = Exp1.sample(&mut rng);
            levels.push(levels.last().unwrap() + gap);
        }
        let mean = gap_ratios(&levels, Window::All).unwrap().mean();
        assert!((mean - POISSON_MEAN_R).abs() < 0.003, "{mean}");
    }

    fn goe(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn goe_statistics() {
        // 3×3 surmise: density (27/8)(r + r²)/(1 + r + r²)^{5/2} on [0, ∞), folded onto [0, 1].
        let surmise = simpson(|r| r * 6.75 * (r + r * r) / (1.0 + r + r * r).powf(2.5), 0.0, 1.0, 2000);
        assert!((surmise - (4.0 - 2.0 * 3f64.sqrt())).abs() < 1e-10);
        assert!((surmise - GOE_MEAN_R).abs() < 0.01);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut all, mut mid) = (0.0, 0.0);
        let samples = 10;
        for _ in 0..samples {
            let eigs = full_spectrum_with_cap(&goe(400, &mut rng), 400).unwrap();
            all += gap_ratios(&eigs, Window::All).unwrap().mean();
            mid += gap_ratios(&eigs, Window::Centered(100)).unwrap().mean();
        }
        all /= samples as f64;
        mid /= samples as f64;
        assert!((all - GOE_MEAN_R).abs() < 0.01, "{all}");
        assert!((all - mid).abs() < 0.03, "{all} vs {mid}");
    }

    #[test]
    fn csv_row_layout() {
        let r = RatioReport {
            spec: ModelSpec::default(),
            sector_k: 0,
            sector_parity: Some(Parity::Odd),
            n_levels: 50,
            window: Window::Centered(100),
            mean_r: 0.5,
            merged: 0,
        };
        assert_eq!(r.csv_row(), "1.0,1.0,1.05,0.45,1.05,0.45,8,0,-1,50,100,0.5");
        let csv = reports_to_csv(&[r]);
        assert!(csv.starts_with("lambda,J,h,g,h_c,g_c,L,sector_k,sector_parity,n_levels,window,mean_r\n"));
        assert_eq!("all".parse::<Window>().unwrap(), Window::All);
        assert_eq!("40".parse::<Window>().unwrap(), Window::Centered(40));
    }

    #[test]
    fn scan_reports_both_sectors() {
        let spec = ModelSpec { l: 7, ..ModelSpec::default() };
        let scans = sector_ratio_scan(&[spec.clone()], Window::All).unwrap();
        let scan = &scans[0];
        assert_eq!(scan.sectors.len(), 2);
        let total: usize = scan.sectors.iter().map(|s| s.n_levels).sum();
        assert_eq!(scan.pooled.n_levels, total);
        for r in scan.reports() {
            assert!((0.0..=1.0).contains(&r.mean_r));
        }
        assert!(matches!(
            sector_ratio_scan_with_cap(&[spec], Window::All, 10),
            Err(Error::ResourceCap(_))
        ));
        let open = ModelSpec { boundary: Boundary::Open, ..ModelSpec::default() };
        assert!(sector_ratio_scan(&[open], Window::All).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn invariant_under_affine_maps(seed in 0u64..1000, scale_exp in -3i32..4, shift in -100i32..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut levels = vec![0.0f64];
            for _ in 0..40 {
                // Dyadic gaps keep the affine map exact in floating point.
                let gap = rng.random_range(1..64) as f64 / 16.0;
                levels.push(levels.last().unwrap() + gap);
            }
            let c = 2f64.powi(scale_exp);
            let mapped: Vec<f64> = levels.iter().map(|e| c * e + shift as f64).collect();
            let a = gap_ratios(&levels, Window::All).unwrap();
            let b = gap_ratios(&mapped, Window::All).unwrap();
            prop_assert_eq!(a.ratios, b.ratios);
        }
    }
}
