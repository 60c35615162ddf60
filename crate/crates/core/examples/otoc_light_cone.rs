//! OTOC light cone C_zz(0, j, t) over the ring, from the exact infinite-temperature trace.
//!
//! Usage: `cargo run --release --example otoc_light_cone -- [L] [lambda]`

use ringstar::hamiltonian::ModelSpec;
use ringstar::observables::{otoc_exact_trace, SiteOp};
use ringstar::pauli::Pauli;

fn main() -> ringstar::Result<()> {
    let mut args = std::env::args().skip(1);
    let l: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);
    let lambda: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1.0);
    let spec = ModelSpec::new(l, lambda);
    let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
    let mut columns = Vec::with_capacity(l);
    for j in 0..l {
        columns.push(otoc_exact_trace(&spec, SiteOp::new(0, Pauli::Z), SiteOp::new(j, Pauli::Z), &times)?);
    }
    let header: Vec<String> = (0..l).map(|j| format!("C_{j}")).collect();
    println!("t,{}", header.join(","));
    for (k, t) in times.iter().enumerate() {
        let row: Vec<String> = columns.iter().map(|c| format!("{:.6}", c.values()[k])).collect();
        println!("{t},{}", row.join(","));
    }
    Ok(())
}
