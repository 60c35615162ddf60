//! Nested commutators of a ring operator with the Hamiltonian and the early-time OTOC law
//! they imply.
//!
//! Usage: `cargo run --example pauli_bch`

use ringstar::hamiltonian::{build_pauli_sum, ModelSpec};
use ringstar::observables::SiteOp;
use ringstar::pauli::{bch_nested, Pauli, PauliString, PauliSum};
use ringstar::star::otoc_early_time_law;

fn main() -> ringstar::Result<()> {
    let spec = ModelSpec::new(6, 1.0);
    let h = build_pauli_sum(&spec)?;
    println!("H has {} Pauli terms", h.len());

    let a = PauliString::from_label("XYZI")?;
    let b = PauliString::from_label("ZZII")?;
    println!("{a} * {b} = {}   commute: {}", a.multiply(&b)?, a.commutes_with(&b));

    let z0 = PauliSum::from_string(PauliString::single(spec.n_sites(), 0, Pauli::Z)?, 1.0.into());
    for (n, term) in bch_nested(&h, &z0, 4)?.iter().enumerate() {
        println!("order {n}: {:5} terms, norm² {:.4}", term.len(), term.norm_sqr());
    }

    for r in 1..=3 {
        let law = otoc_early_time_law(&spec, SiteOp::new(0, Pauli::Z), SiteOp::new(r, Pauli::Z), 8)?;
        println!("C_zz(r={r}) ~ {:.4e} t^{}", law.coefficient, law.exponent);
    }
    Ok(())
}
