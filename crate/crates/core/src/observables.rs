//! Entanglement entropy, out-of-time-order correlators, autocorrelations and time averages.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::{inner, state_haar, state_plus_y, DensePropagator, Evolver, Method, StateVector};
use crate::error::{Error, Result};
use crate::hamiltonian::ModelSpec;
use crate::pauli::{Pauli, PauliString};

/// Which side of the cut holds the c-qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum CQubitSide {
    InA,
    #[default]
    InB,
}

/// A bipartition of the `L + 1` qubits: ring sites listed in A, the rest of the ring in B.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartitionSpec {
    pub ring_sites_a: Vec<usize>,
    pub cqubit: CQubitSide,
}

impl BipartitionSpec {
    pub fn new(ring_sites_a: Vec<usize>, cqubit: CQubitSide) -> Self {
        Self {
            ring_sites_a,
            cqubit,
        }
    }

    /// Ring sites `0 .. ⌈L/2⌉` in A, c-qubit in B.
    pub fn half_chain(l: usize) -> Self {
        Self::new((0..l.div_ceil(2)).collect(), CQubitSide::InB)
    }

    /// Bitmask of A over the `L + 1` qubits, after validation.
    pub fn mask(&self, l: usize) -> Result<u64> {
        let mut mask = 0u64;
        for &s in &self.ring_sites_a {
            if s >= l {
                return Err(Error::invalid(format!("ring site {s} out of range for L = {l}")));
            }
            if (mask >> s) & 1 == 1 {
                return Err(Error::invalid(format!("ring site {s} listed twice")));
            }
            mask |= 1 << s;
        }
        if self.cqubit == CQubitSide::InA {
            mask |= 1 << l;
        }
        let full = (1u64 << (l + 1)) - 1;
        if mask == 0 || mask == full {
            return Err(Error::invalid("subsystem A must be nonempty and proper"));
        }
        Ok(mask)
    }

    /// The complementary bipartition.
    pub fn complement(&self, l: usize) -> Self {
        let ring: Vec<usize> = (0..l).filter(|s| !self.ring_sites_a.contains(s)).collect();
        let cqubit = match self.cqubit {
            CQubitSide::InA => CQubitSide::InB,
            CQubitSide::InB => CQubitSide::InA,
        };
        Self::new(ring, cqubit)
    }
}

/// Von Neumann entropy (nats) of subsystem A for a pure state.
pub fn entanglement_entropy(psi: &StateVector, part: &BipartitionSpec) -> Result<f64> {
    let n = psi.n_sites();
    if n < 2 {
        return Err(Error::invalid("a bipartition needs at least two qubits"));
    }
    let mask = part.mask(n - 1)?;
    entropy_for_mask(psi.amplitudes(), n, mask)
}

/// Entropy across the cut given by `mask_a` over `n` qubits, via the Schmidt decomposition.
pub fn entropy_for_mask(amps: &[Complex64], n: usize, mask_a: u64) -> Result<f64> {
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    if amps.len() != 1usize << n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            found: amps.len(),
        });
    }
    if mask_a == 0 || mask_a & full == full || mask_a & !full != 0 {
        return Err(Error::invalid("subsystem A must be nonempty and proper"));
    }
    let mask_b = full & !mask_a;
    let (na, nb) = (mask_a.count_ones(), mask_b.count_ones());
    let mut m = DMatrix::<Complex64>::zeros(1 << na, 1 << nb);
    for (s, &amp) in amps.iter().enumerate() {
        let s = s as u64;
        m[(extract_bits(s, mask_a), extract_bits(s, mask_b))] = amp;
    }
    let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let singular = m.singular_values();
    let mut s = 0.0;
    for sv in singular.iter() {
        let p = sv * sv / norm_sqr;
        if p > 1e-12 {
            s -= p * p.ln();
        }
    }
    Ok(s.max(0.0))
}

/// Gathers the bits of `s` selected by `mask` into the low bits of the result.
fn extract_bits(s: u64, mask: u64) -> usize {
    let mut out = 0usize;
    let mut k = 0;
    let mut m = mask;
    while m != 0 {
        let bit = m.trailing_zeros();
        out |= (((s >> bit) & 1) as usize) << k;
        k += 1;
        m &= m - 1;
    }
    out
}

/// Average entropy of an `n_a`-dimensional subsystem of a Haar-random state on `n_a · n_b`
/// dimensions (`n_a ≤ n_b` is enforced by swapping).
pub fn page_value(n_a: usize, n_b: usize) -> f64 {
    let (a, b) = if n_a <= n_b { (n_a, n_b) } else { (n_b, n_a) };
    let harmonic: f64 = (b + 1..=a * b).map(|k| 1.0 / k as f64).sum();
    harmonic - (a as f64 - 1.0) / (2.0 * b as f64)
}

/// Real time series with metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    pub metadata: BTreeMap<String, String>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        check_times(&times)?;
        Ok(Self {
            times,
            values,
            metadata: BTreeMap::new(),
        })
    }

    /// Samples `f` on the grid.
    pub fn from_fn(times: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(times.to_vec(), times.iter().map(|&t| f(t)).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    /// Records every model parameter under its config key.
    pub fn with_spec(mut self, spec: &ModelSpec) -> Self {
        for line in spec.to_config_string().lines() {
            if let Some((k, v)) = line.split_once('=') {
                self.metadata.insert(k.to_string(), v.to_string());
            }
        }
        self
    }

    /// Points with `t_min ≤ t ≤ t_max`.
    pub fn window(&self, t_min: f64, t_max: f64) -> Result<Self> {
        let (times, values): (Vec<f64>, Vec<f64>) = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= t_min && **t <= t_max)
            .map(|(t, v)| (*t, *v))
            .unzip();
        let mut out = Self::new(times, values)?;
        out.metadata = self.metadata.clone();
        Ok(out)
    }

    /// `# key=value` metadata lines, a `t,value` header, then rows at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("t,value\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            let _ = writeln!(out, "{t:.16e},{v:.16e}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line == "t,value" {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let (k, v) = meta.trim().split_once('=').ok_or_else(|| {
                    Error::Parse(format!("line {}: metadata must be key=value", lineno + 1))
                })?;
                metadata.insert(k.to_string(), v.to_string());
                continue;
            }
            let (t, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: expected t,value", lineno + 1)))?;
            let parse = |x: &str| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            times.push(parse(t)?);
            values.push(parse(v)?);
        }
        let mut out = Self::new(times, values)?;
        out.metadata = metadata;
        Ok(out)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("times must be finite"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("times must be strictly increasing"));
    }
    Ok(())
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("time grid is empty"));
    }
    check_times(times)?;
    if times[0] < 0.0 {
        return Err(Error::invalid("time grid must start at t >= 0"));
    }
    Ok(())
}

/// A single-qubit Pauli at a site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SiteOp {
    pub site: usize,
    pub axis: Pauli,
}

impl SiteOp {
    pub fn new(site: usize, axis: Pauli) -> Self {
        Self { site, axis }
    }

    pub(crate) fn string(&self, n_sites: usize) -> Result<PauliString> {
        if self.axis == Pauli::I {
            return Err(Error::invalid("operator must be a non-identity Pauli"));
        }
        PauliString::single(n_sites, self.site, self.axis)
    }
}

impl std::fmt::Display for SiteOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.axis, self.site)
    }
}

impl std::str::FromStr for SiteOp {
    type Err = Error;

    /// Axis letter followed by a site index, e.g. `Z3`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        let axis = chars
            .next()
            .ok_or_else(|| Error::Parse("empty operator label".into()))
            .and_then(Pauli::from_char)?;
        let site = chars
            .as_str()
            .parse()
            .map_err(|_| Error::Parse(format!("operator {s:?} must look like Z3")))?;
        Ok(Self::new(site, axis))
    }
}

fn apply_op(p: &PauliString, psi: &StateVector) -> Result<StateVector> {
    let mut out = vec![Complex64::new(0.0, 0.0); psi.dim()];
    p.apply(psi.amplitudes(), &mut out)?;
    StateVector::from_amplitudes(out)
}

/// OTOC `C(t) = 1 − Re⟨ψ|W(t) V W(t) V|ψ⟩` in a single state.
///
/// Evaluated as `½‖W(t)Vψ − V W(t)ψ‖²`, which equals the expression above for Hermitian
/// unitary `V`, `W` and avoids cancellation at early times. The forward legs `e^{−iHt}Vψ`
/// and `e^{−iHt}ψ` advance incrementally along the grid; the backward leg to time zero has to be
/// recomputed at every grid point.
pub fn otoc(
    spec: &ModelSpec,
    psi0: &StateVector,
    v: SiteOp,
    w: SiteOp,
    times: &[f64],
    method: Method,
) -> Result<TimeSeries> {
    let evolver = Evolver::new(spec, method)?;
    otoc_with(&evolver, spec, psi0, v, w, times)
}

fn otoc_with(
    evolver: &Evolver,
    spec: &ModelSpec,
    psi0: &StateVector,
    v: SiteOp,
    w: SiteOp,
    times: &[f64],
) -> Result<TimeSeries> {
    check_grid(times)?;
    let n = spec.n_sites();
    if psi0.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: psi0.dim(),
        });
    }
    let vs = v.string(n)?;
    let ws = w.string(n)?;
    let mut fwd_v = apply_op(&vs, psi0)?;
    let mut fwd = psi0.clone();
    let mut now = 0.0;
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        evolver.evolve(&mut fwd_v, t - now)?;
        evolver.evolve(&mut fwd, t - now)?;
        now = t;
        // W(t)Vψ = U† W U Vψ and V W(t)ψ = V U† W U ψ.
        let mut a = apply_op(&ws, &fwd_v)?;
        evolver.evolve(&mut a, -t)?;
        let mut b = apply_op(&ws, &fwd)?;
        evolver.evolve(&mut b, -t)?;
        let b = apply_op(&vs, &b)?;
        values.push(0.5 * a.distance(&b)?.powi(2));
    }
    Ok(TimeSeries::new(times.to_vec(), values)?
        .with_spec(spec)
        .with_meta("observable", "otoc")
        .with_meta("v", format!("{}{}", v.axis, v.site))
        .with_meta("w", format!("{}{}", w.axis, w.site)))
}

/// OTOC averaged over `samples` Haar states seeded `seed, seed + 1, …`.
pub fn otoc_typical(
    spec: &ModelSpec,
    v: SiteOp,
    w: SiteOp,
    times: &[f64],
    samples: usize,
    seed: u64,
    method: Method,
) -> Result<TimeSeries> {
    if samples == 0 {
        return Err(Error::invalid("at least one sample is required"));
    }
    let evolver = Evolver::new(spec, method)?;
    let mut acc = vec![0.0; times.len()];
    for k in 0..samples as u64 {
        let psi = state_haar(spec.n_sites(), seed.wrapping_add(k))?;
        let s = otoc_with(&evolver, spec, &psi, v, w, times)?;
        for (a, x) in acc.iter_mut().zip(s.values()) {
            *a += x / samples as f64;
        }
    }
    Ok(TimeSeries::new(times.to_vec(), acc)?
        .with_spec(spec)
        .with_meta("observable", "otoc")
        .with_meta("mode", "haar_typicality")
        .with_meta("samples", samples)
        .with_meta("seed", seed)
        .with_meta("v", format!("{}{}", v.axis, v.site))
        .with_meta("w", format!("{}{}", w.axis, w.site)))
}

/// Operator matrix `Qᵀ P Q` in the energy eigenbasis.
fn eigenbasis_operator(prop: &DensePropagator, p: &PauliString) -> DMatrix<Complex64> {
    let q = prop.eigenvectors();
    let dim = q.nrows();
    // P Q: row t of P Q collects column s of Q with the single nonzero entry P[t, s].
    let mut pq = DMatrix::<Complex64>::zeros(dim, dim);
    for s in 0..dim {
        let (c, t) = p.act_on_basis(s as u64);
        for col in 0..dim {
            pq[(t as usize, col)] = c * q[(s, col)];
        }
    }
    let qc = q.map(|x| Complex64::new(x, 0.0));
    qc.transpose() * pq
}

/// Infinite-temperature OTOC `½‖[W(t), V]‖²_F / D` from a full diagonalization.
pub fn otoc_exact_trace(spec: &ModelSpec, v: SiteOp, w: SiteOp, times: &[f64]) -> Result<TimeSeries> {
    check_grid(times)?;
    let prop = DensePropagator::new(spec)?;
    let n = spec.n_sites();
    let dim = spec.dim();
    let ve = eigenbasis_operator(&prop, &v.string(n)?);
    let we = eigenbasis_operator(&prop, &w.string(n)?);
    let e = prop.energies();
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let phases: Vec<Complex64> = e.iter().map(|&x| Complex64::from_polar(1.0, x * t)).collect();
        let wt = DMatrix::from_fn(dim, dim, |a, b| we[(a, b)] * phases[a] * phases[b].conj());
        let k = &wt * &ve - &ve * &wt;
        values.push(0.5 * k.iter().map(|z| z.norm_sqr()).sum::<f64>() / dim as f64);
    }
    Ok(TimeSeries::new(times.to_vec(), values)?
        .with_spec(spec)
        .with_meta("observable", "otoc")
        .with_meta("mode", "exact_trace")
        .with_meta("v", format!("{}{}", v.axis, v.site))
        .with_meta("w", format!("{}{}", w.axis, w.site)))
}

/// How an infinite-temperature trace is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceMode {
    /// Average over Haar-random states (seeds `seed, seed + 1, …`).
    HaarTypicality { samples: usize, seed: u64 },
    /// Exact sum over the eigenbasis; needs a dense diagonalization.
    ExactTrace,
}

/// `(1/D) Re Tr[σ(t) σ]` for a single-site Pauli `σ`.
pub fn two_time_autocorrelation(
    spec: &ModelSpec,
    op: SiteOp,
    times: &[f64],
    mode: TraceMode,
    method: Method,
) -> Result<TimeSeries> {
    check_grid(times)?;
    let n = spec.n_sites();
    let p = op.string(n)?;
    let values = match mode {
        TraceMode::ExactTrace => {
            let prop = DensePropagator::new(spec)?;
            let m = eigenbasis_operator(&prop, &p);
            let e = prop.energies();
            let dim = spec.dim() as f64;
            let weights: Vec<(f64, f64)> = (0..m.nrows())
                .flat_map(|a| (0..m.ncols()).map(move |b| (a, b)))
                .filter_map(|(a, b)| {
                    let w = m[(a, b)].norm_sqr();
                    (w > 0.0).then_some((w, e[a] - e[b]))
                })
                .collect();
            times
                .iter()
                .map(|&t| weights.iter().map(|(w, de)| w * (de * t).cos()).sum::<f64>() / dim)
                .collect()
        }
        TraceMode::HaarTypicality { samples, seed } => {
            if samples == 0 {
                return Err(Error::invalid("at least one sample is required"));
            }
            let evolver = Evolver::new(spec, method)?;
            let mut acc = vec![0.0; times.len()];
            for k in 0..samples as u64 {
                let psi = state_haar(n, seed.wrapping_add(k))?;
                let series = autocorrelation_in_state(&evolver, &p, &psi, times)?;
                for (a, x) in acc.iter_mut().zip(series) {
                    *a += x / samples as f64;
                }
            }
            acc
        }
    };
    let mut series = TimeSeries::new(times.to_vec(), values)?
        .with_spec(spec)
        .with_meta("observable", "autocorrelation")
        .with_meta("op", format!("{}{}", op.axis, op.site));
    series = match mode {
        TraceMode::ExactTrace => series.with_meta("mode", "exact_trace"),
        TraceMode::HaarTypicality { samples, seed } => series
            .with_meta("mode", "haar_typicality")
            .with_meta("samples", samples)
            .with_meta("seed", seed),
    };
    Ok(series)
}

/// `Re⟨ψ(t)|σ|χ(t)⟩` with `χ = e^{−iHt}σψ`: both vectors advance incrementally.
fn autocorrelation_in_state(
    evolver: &Evolver,
    p: &PauliString,
    psi: &StateVector,
    times: &[f64],
) -> Result<Vec<f64>> {
    let mut a = psi.clone();
    let mut b = apply_op(p, psi)?;
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        evolver.evolve(&mut a, t - now)?;
        evolver.evolve(&mut b, t - now)?;
        now = t;
        let pb = apply_op(p, &b)?;
        out.push(inner(a.amplitudes(), pb.amplitudes()).re);
    }
    Ok(out)
}

/// `(1/t₀) ∫₀^{t₀} |f(t)| dt` by the trapezoid rule, interpolating linearly at `t₀`.
pub fn long_time_average(series: &TimeSeries, t0: f64) -> Result<f64> {
    let (t, v) = (series.times(), series.values());
    if t.len() < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    if t[0] != 0.0 {
        return Err(Error::invalid("series must start at t = 0"));
    }
    if !(t0 > 0.0 && t0 <= t[t.len() - 1]) {
        return Err(Error::invalid(format!(
            "t0 = {t0} outside (0, {}]",
            t[t.len() - 1]
        )));
    }
    let mut integral = 0.0;
    for k in 1..t.len() {
        let (ta, tb) = (t[k - 1], t[k]);
        if ta >= t0 {
            break;
        }
        let (fa, fb) = (v[k - 1].abs(), v[k].abs());
        if tb <= t0 {
            integral += 0.5 * (fa + fb) * (tb - ta);
        } else {
            let f0 = v[k - 1] + (v[k] - v[k - 1]) * (t0 - ta) / (tb - ta);
            integral += 0.5 * (fa + f0.abs()) * (t0 - ta);
        }
    }
    Ok(integral / t0)
}

/// Initial state of a quench.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    PlusY,
    Haar(u64),
}

impl InitialState {
    pub fn prepare(&self, n_sites: usize) -> Result<StateVector> {
        match *self {
            InitialState::PlusY => state_plus_y(n_sites),
            InitialState::Haar(seed) => state_haar(n_sites, seed),
        }
    }
}

/// Entanglement entropy along `e^{−iHt}ψ₀` on a grid starting at `t ≥ 0`.
pub fn quench_entropy_trajectory(
    spec: &ModelSpec,
    initial: InitialState,
    part: &BipartitionSpec,
    times: &[f64],
    method: Method,
) -> Result<TimeSeries> {
    check_grid(times)?;
    let mask = part.mask(spec.l)?;
    let n = spec.n_sites();
    let evolver = Evolver::new(spec, method)?;
    let mut psi = initial.prepare(n)?;
    let mut now = 0.0;
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        evolver.evolve(&mut psi, t - now)?;
        now = t;
        values.push(entropy_for_mask(psi.amplitudes(), n, mask)?);
    }
    let initial_label = match initial {
        InitialState::PlusY => "plus_y".to_string(),
        InitialState::Haar(seed) => format!("haar:{seed}"),
    };
    let sites: Vec<String> = part.ring_sites_a.iter().map(|s| s.to_string()).collect();
    Ok(TimeSeries::new(times.to_vec(), values)?
        .with_spec(spec)
        .with_meta("observable", "entanglement_entropy")
        .with_meta("initial", initial_label)
        .with_meta("ring_sites_a", sites.join(" "))
        .with_meta(
            "cqubit",
            match part.cqubit {
                CQubitSide::InA => "A",
                CQubitSide::InB => "B",
            },
        ))
}
