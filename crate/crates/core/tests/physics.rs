use ringstar::dynamics::Method;
use ringstar::fitting::{fit_loglinear, fit_power_law};
use ringstar::hamiltonian::ModelSpec;
use ringstar::observables::{
    otoc_exact_trace, page_value, quench_entropy_trajectory, BipartitionSpec, InitialState, SiteOp,
};
use ringstar::pauli::Pauli;
use ringstar::star::otoc_early_time_law;

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64)).collect()
}

#[test]
fn chain_saturates_near_page_value() {
    let l = 11;
    let part = BipartitionSpec::half_chain(l);
    let times: Vec<f64> = (0..=40).map(|k| 5.0 * k as f64).collect();
    let s = quench_entropy_trajectory(&ModelSpec::new(l, 0.0), InitialState::PlusY, &part, &times, Method::Auto)
        .unwrap();
    let tail = &s.values()[20..];
    let plateau = tail.iter().sum::<f64>() / tail.len() as f64;
    let n_a = part.ring_sites_a.len();
    let page = page_value(1 << n_a, 1 << (l + 1 - n_a));
    assert!((plateau / page - 1.0).abs() < 0.2, "plateau {plateau}, Page {page}");
}

#[test]
fn strong_coupling_growth_is_logarithmic() {
    let l = 11;
    let s = quench_entropy_trajectory(
        &ModelSpec::new(l, 3.0),
        InitialState::PlusY,
        &BipartitionSpec::half_chain(l),
        &logspace(0.05, 200.0, 80),
        Method::Auto,
    )
    .unwrap();
    let fit = fit_loglinear(&s, (2.0, 20.0)).unwrap();
    let c = fit.param("c").unwrap();
    assert!(c > 0.0 && fit.stderr["c"] < 0.25 * c, "c = {c} ± {}", fit.stderr["c"]);
}

// The measured early-time slope and prefactor of C_zz follow the first nonvanishing
// nested commutator.
#[test]
fn early_time_otoc_follows_commutator_order() {
    for (lambda, r) in [(0.0, 1), (0.0, 2), (1.0, 1), (1.0, 2)] {
        let spec = ModelSpec::new(7, lambda);
        let (v, w) = (SiteOp::new(0, Pauli::Z), SiteOp::new(r, Pauli::Z));
        let law = otoc_early_time_law(&spec, v, w, 10).unwrap();
        let times = logspace(0.02, 0.1, 8);
        let c = otoc_exact_trace(&spec, v, w, &times).unwrap();
        let beta = fit_power_law(&c, (0.02, 0.1)).unwrap().param("beta").unwrap();
        assert!(
            (beta - law.exponent as f64).abs() < 0.1,
            "λ = {lambda}, r = {r}: slope {beta}, law t^{}",
            law.exponent
        );
        let ratio = c.values()[0] / law.eval(times[0]);
        assert!((ratio - 1.0).abs() < 0.05, "λ = {lambda}, r = {r}: C/law = {ratio}");
    }
}
