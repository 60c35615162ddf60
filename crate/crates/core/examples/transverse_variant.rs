//! The transverse ring-star model (X coupling to the c-qubit) against the Z-coupled model.
//!
//! Usage: `cargo run --release --example transverse_variant -- [L]`

use ringstar::dynamics::Method;
use ringstar::hamiltonian::{build_pauli_sum, CouplingAxis, ModelSpec};
use ringstar::observables::{quench_entropy_trajectory, BipartitionSpec, InitialState};

fn main() -> ringstar::Result<()> {
    let l: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(9);
    let part = BipartitionSpec::half_chain(l);
    let times: Vec<f64> = (0..40).map(|k| 0.1 * (1000.0_f64).powf(k as f64 / 39.0)).collect();
    println!("axis,lambda,t,S");
    for axis in [CouplingAxis::Z, CouplingAxis::X] {
        for lambda in [0.0, 1.0, 3.0] {
            let spec = ModelSpec {
                axis,
                ..ModelSpec::new(l, lambda)
            };
            if lambda > 0.0 {
                let star: Vec<String> = build_pauli_sum(&ModelSpec { axis, ..ModelSpec::pure_star(l, lambda) })?
                    .iter()
                    .map(|(p, _)| p.label())
                    .collect();
                eprintln!("{axis} coupling terms: {}", star.join(" "));
            }
            let s = quench_entropy_trajectory(&spec, InitialState::PlusY, &part, &times, Method::Auto)?;
            for (t, v) in s.times().iter().zip(s.values()) {
                println!("{axis},{lambda},{t:.4},{v:.6}");
            }
        }
    }
    Ok(())
}
