//! Krylov propagation checked against full diagonalization on random states.
//!
//! Usage: `cargo run --release --example krylov_vs_dense -- [L] [t]`

use std::time::Instant;

use ringstar::dynamics::{evolve_dense, evolve_krylov_with_report, state_haar, KrylovParams};
use ringstar::hamiltonian::ModelSpec;

fn main() -> ringstar::Result<()> {
    let mut args = std::env::args().skip(1);
    let l: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(9);
    let t: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(20.0);
    let spec = ModelSpec::new(l, 1.0);
    for seed in 0..5 {
        let psi = state_haar(spec.n_sites(), seed)?;
        let clock = Instant::now();
        let exact = evolve_dense(&spec, &psi, t)?;
        let dense_time = clock.elapsed();
        let clock = Instant::now();
        let (approx, report) = evolve_krylov_with_report(&spec, &psi, t, KrylovParams::default())?;
        println!(
            "seed {seed}: error {:.2e}, steps {}, matvecs {}, dense {:.2?}, krylov {:.2?}",
            exact.distance(&approx)?,
            report.steps,
            report.matvecs,
            dense_time,
            clock.elapsed()
        );
    }
    Ok(())
}
