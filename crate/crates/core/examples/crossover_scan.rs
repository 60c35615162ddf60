//! Entanglement at a fixed time versus λ and the location of its maximum.
//!
//! Usage: `cargo run --release --example crossover_scan -- [L]`

use ringstar::dynamics::Method;
use ringstar::fitting::{find_lambda_c, select_t_star, CrossoverCurve};
use ringstar::hamiltonian::ModelSpec;
use ringstar::observables::{quench_entropy_trajectory, BipartitionSpec, InitialState};

fn main() -> ringstar::Result<()> {
    let l: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(9);
    let part = BipartitionSpec::half_chain(l);
    let times: Vec<f64> = (0..=400).map(|k| k as f64 * 0.1).collect();
    let entropy = |lambda: f64| {
        quench_entropy_trajectory(&ModelSpec::new(l, lambda), InitialState::PlusY, &part, &times, Method::Auto)
    };

    let t_star = select_t_star(&entropy(0.0)?)?;
    let k = times.iter().position(|&t| t >= t_star).unwrap_or(times.len() - 1);
    println!("t* = {t_star}");
    let lambdas: Vec<f64> = (2..=14).map(|k| 0.25 * k as f64).collect();
    let mut values = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let s = entropy(lambda)?.values()[k];
        println!("lambda {lambda:.2}: S(t*) = {s:.4}");
        values.push(s);
    }
    let curve = CrossoverCurve {
        l,
        h_c: 1.05,
        lambdas,
        values,
    };
    let analysis = find_lambda_c(&[curve])?;
    for p in &analysis.points {
        println!("lambda_c = {:?} (at edge: {})", p.lambda_c, p.at_edge);
    }
    Ok(())
}
