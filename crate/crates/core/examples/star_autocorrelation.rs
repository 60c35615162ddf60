//! Leaf autocorrelation of the star graph from the binomial closed form, with a decaying-cosine
//! fit and the long-time average.
//!
//! Usage: `cargo run --release --example star_autocorrelation -- [L] [h_c]`

use ringstar::fitting::{fit_decaying_cosine, CosineFitOptions};
use ringstar::observables::long_time_average;
use ringstar::star::{star_autocorrelation_series, StarParams};

fn main() -> ringstar::Result<()> {
    let mut args = std::env::args().skip(1);
    let l: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(40);
    let h_c: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1.0);
    let p = StarParams::new(l, 1.0, h_c)?;
    let times: Vec<f64> = (0..=8000).map(|k| k as f64 * 0.025).collect();
    let series = star_autocorrelation_series(&p, &times)?;

    for &t in &[0.0, 0.5, 1.0, 5.0, 50.0, 200.0] {
        let k = (t / 0.025_f64).round() as usize;
        println!("A({t:>5}) = {:+.6}", series.values()[k]);
    }
    println!("A(t0=200) = {:.5}   (1/L = {:.5})", long_time_average(&series, 200.0)?, 1.0 / l as f64);
    match fit_decaying_cosine(&series, (0.0, 20.0), CosineFitOptions::default()) {
        Ok(fit) => println!(
            "fit: epsilon0 = {:.5}, epsilon1 = {:.5}, rms {:.2e}",
            fit.param("epsilon0")?,
            fit.param("epsilon1")?,
            fit.residual_rms
        ),
        Err(e) => println!("fit failed: {e}"),
    }
    Ok(())
}
