//! Half-chain entanglement growth after a quench from |+y⟩, against the Page value.
//!
//! Usage: `cargo run --release --example quench_entropy -- [L] [lambda]`

use ringstar::dynamics::Method;
use ringstar::fitting::{fit_loglinear, fit_power_law};
use ringstar::hamiltonian::ModelSpec;
use ringstar::observables::{page_value, quench_entropy_trajectory, BipartitionSpec, InitialState};

fn main() -> ringstar::Result<()> {
    let mut args = std::env::args().skip(1);
    let l: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(9);
    let lambda: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1.0);
    let spec = ModelSpec::new(l, lambda);
    let part = BipartitionSpec::half_chain(l);
    let times: Vec<f64> = (0..60).map(|k| 0.05 * (4000.0_f64).powf(k as f64 / 59.0)).collect();
    let s = quench_entropy_trajectory(&spec, InitialState::PlusY, &part, &times, Method::Auto)?;

    print!("{}", s.to_csv());
    let n_a = part.ring_sites_a.len();
    let page = page_value(1 << n_a, 1 << (spec.n_sites() - n_a));
    eprintln!("Page value {page:.4}, last sample {:.4}", s.values()[s.len() - 1]);
    let pl = fit_power_law(&s, (1.0, 10.0))?;
    let ll = fit_loglinear(&s, (1.0, 10.0))?;
    eprintln!(
        "[1, 10]: power law beta = {:.3} (rms {:.3e}), c ln t + d: c = {:.3} (rms {:.3e})",
        pl.param("beta")?,
        pl.residual_rms,
        ll.param("c")?,
        ll.residual_rms
    );
    Ok(())
}
