//! Gap-ratio statistics of the zero-momentum reflection sectors.
//!
//! Usage: `cargo run --release --example level_statistics -- [L]`

use ringstar::hamiltonian::ModelSpec;
use ringstar::spectral::{reports_to_csv, sector_ratio_scan, Window, GOE_MEAN_R, POISSON_MEAN_R};

fn main() -> ringstar::Result<()> {
    let l: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(11);
    let chaotic = ModelSpec { l, ..ModelSpec::default() };
    let integrable = ModelSpec {
        l,
        lambda: 0.0,
        g: 0.0,
        h: 1.0,
        ..ModelSpec::default()
    };
    let scans = sector_ratio_scan(&[chaotic, integrable], Window::default())?;
    let reports: Vec<_> = scans.iter().flat_map(|s| s.reports().cloned()).collect();
    print!("{}", reports_to_csv(&reports));
    println!("# Poisson {POISSON_MEAN_R:.4}, GOE {GOE_MEAN_R:.4}");
    Ok(())
}
