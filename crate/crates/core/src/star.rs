//! Closed forms for the star graph (`J = h = g = g_c = 0`) and early-time OTOC laws.
//!
//! With only `λ Σ Z_i Z_c + h_c X_c`, every leaf magnetization is conserved and the c-qubit
//! precesses in the field `(h_c, λ Z)` set by the total leaf magnetization `Z`. The
//! infinite-temperature autocorrelation of a leaf `X_i` then reduces to a binomial sum over
//! the `L − 1` spectator leaves.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{build_pauli_sum, ModelSpec};
use crate::observables::{SiteOp, TimeSeries};
use crate::pauli::{bch_nested_with_cap, PauliString, PauliSum, DEFAULT_TERM_CAP};

/// Star-graph parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarParams {
    /// Number of leaves.
    pub l: usize,
    pub lambda: f64,
    /// Transverse field on the c-qubit.
    pub h_c: f64,
}

impl StarParams {
    pub fn new(l: usize, lambda: f64, h_c: f64) -> Result<Self> {
        let p = Self { l, lambda, h_c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::invalid("the star needs at least one leaf"));
        }
        if !self.lambda.is_finite() || !self.h_c.is_finite() {
            return Err(Error::invalid("star couplings must be finite"));
        }
        Ok(())
    }

    /// The equivalent ring-star model: all ring couplings and fields switched off.
    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            h_c: self.h_c,
            ..ModelSpec::pure_star(self.l, self.lambda)
        }
    }

    /// `ln(binom(L−1, n) / 2^{L−1})` for `n = 0..L`.
    fn log_weights(&self) -> Vec<f64> {
        let n = self.l - 1;
        let mut out = Vec::with_capacity(n + 1);
        let mut log_c = -(n as f64) * std::f64::consts::LN_2;
        for k in 0..=n {
            out.push(log_c);
            log_c += ((n - k) as f64).ln() - ((k + 1) as f64).ln();
        }
        out
    }
}

/// `(1/2^{L+1}) Tr[X_i(t) X_i]` for a leaf of the star, exactly.
pub fn star_autocorrelation_exact(p: &StarParams, t: f64) -> Result<f64> {
    p.validate()?;
    Ok(star_sum(p, &p.log_weights(), t))
}

fn star_sum(p: &StarParams, log_weights: &[f64], t: f64) -> f64 {
    let spectators = (p.l - 1) as f64;
    let h2 = p.h_c * p.h_c;
    let l2 = p.lambda * p.lambda;
    // sin(ωt)/ω, continuous at ω = 0.
    let sinc = |w: f64| if w == 0.0 { t } else { (w * t).sin() / w };
    let mut total = 0.0;
    let mut weight_sum = 0.0;
    for (n_up, lw) in log_weights.iter().enumerate() {
        let s = 2.0 * n_up as f64 - spectators;
        let (z, zf) = (s + 1.0, s - 1.0);
        let w = (h2 + l2 * z * z).sqrt();
        let wf = (h2 + l2 * zf * zf).sqrt();
        let f = (w * t).cos() * (wf * t).cos() + sinc(w) * sinc(wf) * (h2 + l2 * z * zf);
        let weight = lw.exp();
        total += weight * f;
        weight_sum += weight;
    }
    // The weights sum to one analytically; dividing makes t = 0 exact in floating point.
    total / weight_sum
}

/// [`star_autocorrelation_exact`] on a grid, as a time series.
pub fn star_autocorrelation_series(p: &StarParams, times: &[f64]) -> Result<TimeSeries> {
    p.validate()?;
    let w = p.log_weights();
    let values = times.iter().map(|&t| star_sum(p, &w, t)).collect();
    Ok(TimeSeries::new(times.to_vec(), values)?
        .with_meta("observable", "star_autocorrelation")
        .with_meta("L", p.l)
        .with_meta("lambda", format!("{:?}", p.lambda))
        .with_meta("h_c", format!("{:?}", p.h_c)))
}

/// Same-leaf OTOC `C_xx(i, i, t) = 2 sin²(2λt)`, valid only without a c-qubit field.
pub fn star_otoc_exact(p: &StarParams, t: f64) -> Result<f64> {
    p.validate()?;
    if p.h_c != 0.0 {
        return Err(Error::invalid("the closed-form star OTOC requires h_c = 0"));
    }
    Ok(2.0 * (2.0 * p.lambda * t).sin().powi(2))
}

/// Leading small-`t` behaviour `C(t) ≈ coefficient · t^exponent` of an infinite-temperature OTOC.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EarlyTimeLaw {
    /// Lowest commutator order `m` with `[[H, W]_m, V] ≠ 0`.
    pub order: usize,
    /// `2m`.
    pub exponent: u32,
    pub coefficient: f64,
}

impl EarlyTimeLaw {
    pub fn eval(&self, t: f64) -> f64 {
        self.coefficient * t.powi(self.exponent as i32)
    }

    pub fn series(&self, times: &[f64]) -> Result<TimeSeries> {
        Ok(TimeSeries::from_fn(times, |t| self.eval(t))?
            .with_meta("observable", "otoc_early_time_law")
            .with_meta("exponent", self.exponent)
            .with_meta("coefficient", format!("{:?}", self.coefficient)))
    }
}

/// Early-time OTOC law from the nested-commutator expansion of `W(t)`.
///
/// `[W(t), V] = Σ_n (it)^n/n! [[H, W]_n, V]`, so the first nonvanishing order `m` gives
/// `C(t) ≈ ½ (t^{2m}/(m!)²) Σ |c_k|²` over the Pauli coefficients of `[[H, W]_m, V]`.
pub fn otoc_early_time_law(spec: &ModelSpec, v: SiteOp, w: SiteOp, max_order: usize) -> Result<EarlyTimeLaw> {
    let h = build_pauli_sum(spec)?;
    let n = spec.n_sites();
    let one = Complex64::new(1.0, 0.0);
    let single = |op: SiteOp| -> Result<PauliSum> {
        if op.axis == crate::pauli::Pauli::I {
            return Err(Error::invalid("operator must be a non-identity Pauli"));
        }
        Ok(PauliSum::from_string(PauliString::single(n, op.site, op.axis)?, one))
    };
    let vs = single(v)?;
    let ws = single(w)?;
    let zeroth = ws.commutator(&vs)?;
    if !zeroth.is_empty() {
        return Ok(EarlyTimeLaw {
            order: 0,
            exponent: 0,
            coefficient: 0.5 * zeroth.norm_sqr(),
        });
    }
    let orders = bch_nested_with_cap(&h, &ws, max_order, DEFAULT_TERM_CAP)?;
    let mut factorial = 1.0;
    for (k, nested) in orders.iter().enumerate() {
        let m = k + 1;
        factorial *= m as f64;
        let c = nested.commutator(&vs)?;
        if !c.is_empty() {
            return Ok(EarlyTimeLaw {
                order: m,
                exponent: 2 * m as u32,
                coefficient: 0.5 * c.norm_sqr() / (factorial * factorial),
            });
        }
    }
    Err(Error::numerical(format!(
        "[[H, W]_m, V] vanishes for every m <= {max_order}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Method;
    use crate::observables::{otoc_exact_trace, two_time_autocorrelation, TraceMode};
    use crate::pauli::Pauli;
    use proptest::prelude::*;

    #[test]
    fn zero_field_gives_pure_cosine() {
        for l in [1, 2, 5, 40] {
            let p = StarParams::new(l, 0.7, 0.0).unwrap();
            for t in [0.0, 0.3, 2.0, 17.5] {
                let v = star_autocorrelation_exact(&p, t).unwrap();
                assert!((v - (1.4 * t).cos()).abs() < 1e-12, "L = {l}, t = {t}");
            }
        }
    }

    #[test]
    fn zero_coupling_is_constant() {
        let p = StarParams::new(6, 0.0, 2.3).unwrap();
        for t in [0.0, 1.0, 50.0] {
            assert!((star_autocorrelation_exact(&p, t).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_exact_diagonalization() {
        let p = StarParams::new(4, 1.0, 0.7).unwrap();
        let times = [0.5, 1.0, 2.0];
        let ed = two_time_autocorrelation(&p.model_spec(), SiteOp::new(0, Pauli::X), &times, TraceMode::ExactTrace, Method::Auto)
            .unwrap();
        for (k, &t) in times.iter().enumerate() {
            assert!((star_autocorrelation_exact(&p, t).unwrap() - ed.values()[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn otoc_closed_form() {
        let p = StarParams::new(3, 1.3, 0.0).unwrap();
        let pi = std::f64::consts::PI;
        assert!(star_otoc_exact(&p, pi / (2.0 * 1.3)).unwrap().abs() < 1e-12);
        assert!((star_otoc_exact(&p, pi / (4.0 * 1.3)).unwrap() - 2.0).abs() < 1e-12);
        assert!(star_otoc_exact(&StarParams::new(3, 1.0, 0.1).unwrap(), 1.0).is_err());
        assert!(StarParams::new(0, 1.0, 0.0).is_err());
    }

    #[test]
    fn leaf_to_leaf_law_is_sixth_order() {
        let spec = StarParams::new(4, 1.0, 0.2).unwrap().model_spec();
        let law = otoc_early_time_law(&spec, SiteOp::new(1, Pauli::X), SiteOp::new(0, Pauli::X), 6).unwrap();
        assert_eq!(law.exponent, 6);
        // Third-order path X_0 → Z_c Y_0 → Y_c Y_0 → Z_1 X_c Y_0 (factors 2λ, 2h_c, 2λ), then 2 from [·, X_1].
        let expected = 0.5 * (2.0f64 * 2.0 * 0.2 * 2.0 * 2.0).powi(2) / 36.0;
        assert!((law.coefficient - expected).abs() < 1e-12, "{}", law.coefficient);
        let t = [0.0, 0.02, 0.04];
        let ed = otoc_exact_trace(&spec, SiteOp::new(1, Pauli::X), SiteOp::new(0, Pauli::X), &t).unwrap();
        for (k, &tk) in t.iter().enumerate().skip(1) {
            assert!((ed.values()[k] / law.eval(tk) - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn commuting_without_field() {
        let spec = ModelSpec::pure_star(3, 1.0);
        assert!(otoc_early_time_law(&spec, SiteOp::new(1, Pauli::X), SiteOp::new(0, Pauli::X), 5).is_err());
        let same = otoc_early_time_law(&spec, SiteOp::new(0, Pauli::Z), SiteOp::new(0, Pauli::X), 5).unwrap();
        assert_eq!(same.order, 0);
        assert!((same.coefficient - 2.0).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn unity_at_zero_and_even_in_couplings(l in 1usize..60, lambda in -3.0f64..3.0, h_c in -5.0f64..5.0, t in 0.0f64..50.0) {
            let p = StarParams::new(l, lambda, h_c).unwrap();
            prop_assert_eq!(star_autocorrelation_exact(&p, 0.0).unwrap(), 1.0);
            let v = star_autocorrelation_exact(&p, t).unwrap();
            prop_assert!(v.abs() <= 1.0 + 1e-12);
            let flipped = StarParams::new(l, -lambda, -h_c).unwrap();
            prop_assert!((star_autocorrelation_exact(&flipped, t).unwrap() - v).abs() < 1e-12);
            let half = StarParams::new(l, -lambda, h_c).unwrap();
            prop_assert!((star_autocorrelation_exact(&half, t).unwrap() - v).abs() < 1e-12);
        }
    }
}
