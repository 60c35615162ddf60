//! State vectors, exact propagation by diagonalization, and Krylov (Lanczos) time evolution.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, ModelSpec};

/// Environment variable overriding the largest Hilbert-space dimension diagonalized densely.
pub const DENSE_DIM_ENV: &str = "RINGSTAR_MAX_DENSE_DIM";

/// Default dense cap: `L + 1 = 12` qubits.
pub const DEFAULT_MAX_DENSE_DIM: usize = 1 << 12;

/// Default cap on the size of a matrix passed to [`full_spectrum`].
pub const DEFAULT_MAX_SPECTRUM_DIM: usize = 5000;

/// Relative norm drift tolerated before a state is renormalized.
pub const NORM_DRIFT_TOLERANCE: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Amplitudes of an `n`-qubit pure state. Bit `b` of the index is qubit `b`, with 0 ↔ `z = +1`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Wraps raw amplitudes; the length must be `2^n` with `n ≥ 1`. No normalization is applied.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 || !amps.len().is_power_of_two() {
            return Err(Error::invalid(format!(
                "state length {} is not 2^n with n >= 1",
                amps.len()
            )));
        }
        Ok(Self { amps })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_sites: usize, index: usize) -> Result<Self> {
        check_sites(n_sites)?;
        let dim = 1usize << n_sites;
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn n_sites(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::numerical("cannot normalize a zero or non-finite state"));
        }
        let inv = n.recip();
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(inner(&self.amps, &other.amps))
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Checkpoint: little-endian `u64` dimension, then interleaved `(re, im)` `f64` pairs.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.dim() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * self.dim());
        for a in &self.amps {
            buf.extend_from_slice(&a.re.to_le_bytes());
            buf.extend_from_slice(&a.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 8];
        r.read_exact(&mut header)?;
        let dim = u64::from_le_bytes(header);
        if dim < 2 || !dim.is_power_of_two() || dim > (1 << 40) {
            return Err(Error::Parse(format!("bad checkpoint dimension {dim}")));
        }
        let mut buf = vec![0u8; 16 * dim as usize];
        r.read_exact(&mut buf)?;
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Parse("trailing bytes after checkpoint".into()));
        }
        let f = |chunk: &[u8]| f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        let amps = buf
            .chunks_exact(16)
            .map(|c| Complex64::new(f(&c[..8]), f(&c[8..])))
            .collect();
        Self::from_amplitudes(amps)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_checkpoint(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_checkpoint(std::io::BufReader::new(file))
    }
}

fn check_sites(n_sites: usize) -> Result<()> {
    if n_sites == 0 || n_sites > 40 {
        return Err(Error::invalid(format!("qubit count {n_sites} outside 1..=40")));
    }
    Ok(())
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Product state with every qubit in `(|0⟩ + i|1⟩)/√2`.
pub fn state_plus_y(n_sites: usize) -> Result<StateVector> {
    check_sites(n_sites)?;
    let dim = 1usize << n_sites;
    let scale = (dim as f64).sqrt().recip();
    let phases = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    let amps = (0..dim)
        .map(|s| phases[(s.count_ones() % 4) as usize] * scale)
        .collect();
    StateVector::from_amplitudes(amps)
}

/// Haar-random state: i.i.d. complex Gaussian amplitudes, normalized. Deterministic per seed.
pub fn state_haar(n_sites: usize, seed: u64) -> Result<StateVector> {
    check_sites(n_sites)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1usize << n_sites)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let mut psi = StateVector::from_amplitudes(amps)?;
    psi.normalize()?;
    Ok(psi)
}

/// Dense cap from [`DENSE_DIM_ENV`], falling back to [`DEFAULT_MAX_DENSE_DIM`].
pub fn max_dense_dim() -> usize {
    std::env::var(DENSE_DIM_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_DENSE_DIM)
}

/// Ascending eigenvalues of a real symmetric matrix.
pub fn full_spectrum(matrix: &DMatrix<f64>) -> Result<Vec<f64>> {
    full_spectrum_with_cap(matrix, DEFAULT_MAX_SPECTRUM_DIM)
}

pub fn full_spectrum_with_cap(matrix: &DMatrix<f64>, cap: usize) -> Result<Vec<f64>> {
    check_symmetric(matrix, cap)?;
    if matrix.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut e: Vec<f64> = SymmetricEigen::new(matrix.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors as columns.
pub fn eigh(matrix: &DMatrix<f64>, cap: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_symmetric(matrix, cap)?;
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(matrix.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

fn check_symmetric(matrix: &DMatrix<f64>, cap: usize) -> Result<()> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: matrix.ncols(),
        });
    }
    if n > cap {
        return Err(Error::ResourceCap(format!(
            "matrix dimension {n} exceeds the dense cap {cap}"
        )));
    }
    let scale = matrix.amax().max(1.0);
    if (matrix - matrix.transpose()).amax() > 1e-12 * scale {
        return Err(Error::invalid("matrix is not symmetric"));
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    Ok(())
}

/// Exact propagator `e^{−iHt}` from a full eigendecomposition of the real Hamiltonian.
#[derive(Clone, Debug)]
pub struct DensePropagator {
    energies: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl DensePropagator {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        Self::with_cap(spec, max_dense_dim())
    }

    pub fn with_cap(spec: &ModelSpec, cap: usize) -> Result<Self> {
        spec.validate()?;
        if spec.dim() > cap {
            return Err(Error::ResourceCap(format!(
                "dense propagation of dimension {} exceeds the cap {cap} (set {DENSE_DIM_ENV})",
                spec.dim()
            )));
        }
        let h = Hamiltonian::new(spec)?;
        Self::from_matrix(&h.dense(), cap)
    }

    pub fn from_matrix(matrix: &DMatrix<f64>, cap: usize) -> Result<Self> {
        let (values, vectors) = eigh(matrix, cap)?;
        Ok(Self {
            energies: DVector::from_vec(values),
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Ascending eigenvalues.
    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// Eigenvectors as columns, matching [`energies`](Self::energies).
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Components `Vᵀψ` in the eigenbasis.
    pub fn to_eigenbasis(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let (re, im) = split(psi);
        let cr = self.vectors.tr_mul(&re);
        let ci = self.vectors.tr_mul(&im);
        cr.iter().zip(ci.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect()
    }

    pub fn from_eigenbasis(&self, c: &[Complex64]) -> Vec<Complex64> {
        let (re, im) = split(c);
        let pr = &self.vectors * re;
        let pi = &self.vectors * im;
        pr.iter().zip(pi.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect()
    }

    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        let mut c = self.to_eigenbasis(psi.amplitudes());
        for (ck, &e) in c.iter_mut().zip(self.energies.iter()) {
            *ck *= Complex64::from_polar(1.0, -e * t);
        }
        StateVector::from_amplitudes(self.from_eigenbasis(&c))
    }
}

fn split(v: &[Complex64]) -> (DVector<f64>, DVector<f64>) {
    (
        DVector::from_iterator(v.len(), v.iter().map(|z| z.re)),
        DVector::from_iterator(v.len(), v.iter().map(|z| z.im)),
    )
}

/// `e^{−iHt}ψ` by full diagonalization; limited by [`max_dense_dim`].
pub fn evolve_dense(spec: &ModelSpec, psi: &StateVector, t: f64) -> Result<StateVector> {
    DensePropagator::new(spec)?.evolve(psi, t)
}

/// Krylov propagation settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovParams {
    /// Maximum Krylov subspace dimension per step.
    pub subspace_dim: usize,
    /// Nominal step length in units of `1/J`.
    pub dt: f64,
    /// Error budget per nominal step.
    pub local_tolerance: f64,
}

impl Default for KrylovParams {
    fn default() -> Self {
        Self {
            subspace_dim: 30,
            dt: 0.05,
            local_tolerance: 1e-10,
        }
    }
}

impl KrylovParams {
    pub fn validate(&self) -> Result<()> {
        if self.subspace_dim < 2 {
            return Err(Error::invalid("Krylov subspace dimension must be at least 2"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("Krylov step must be positive and finite"));
        }
        if !(self.local_tolerance > 0.0) {
            return Err(Error::invalid("Krylov tolerance must be positive"));
        }
        Ok(())
    }
}

/// Bookkeeping from one or more Krylov propagations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KrylovReport {
    pub steps: usize,
    pub matvecs: usize,
    pub halvings: usize,
    pub reorthogonalizations: usize,
    pub renormalizations: usize,
    /// Sum of the per-step a posteriori error estimates.
    pub error_estimate: f64,
}

impl KrylovReport {
    pub fn merge(&mut self, other: &KrylovReport) {
        self.steps += other.steps;
        self.matvecs += other.matvecs;
        self.halvings += other.halvings;
        self.reorthogonalizations += other.reorthogonalizations;
        self.renormalizations += other.renormalizations;
        self.error_estimate += other.error_estimate;
    }
}

/// Lanczos propagator with reusable work vectors.
///
/// Each step builds a Krylov basis from the current state, exponentiates the tridiagonal
/// projection, and checks the a posteriori error `‖ψ‖·β_k·|[e^{−iτT}e₁]_k|`. A breach
/// shrinks the step (only the small exponential is recomputed).
pub struct KrylovPropagator<'a> {
    h: &'a Hamiltonian,
    params: KrylovParams,
    basis: Vec<Vec<Complex64>>,
    work: Vec<Complex64>,
    report: KrylovReport,
}

struct Tridiagonal {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Tridiagonal {
    /// `e^{−iτT}e₁` for the leading `k × k` block.
    fn exp_first_column(&self, k: usize, tau: f64) -> Vec<Complex64> {
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = self.alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = self.beta[i + 1];
                t[(i + 1, i)] = self.beta[i + 1];
            }
        }
        let eig = SymmetricEigen::new(t);
        let q = &eig.eigenvectors;
        let weights: Vec<Complex64> = (0..k)
            .map(|j| q[(0, j)] * Complex64::from_polar(1.0, -tau * eig.eigenvalues[j]))
            .collect();
        (0..k)
            .map(|i| (0..k).map(|j| q[(i, j)] * weights[j]).sum())
            .collect()
    }
}

impl<'a> KrylovPropagator<'a> {
    pub fn new(h: &'a Hamiltonian, params: KrylovParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            h,
            params,
            basis: Vec::new(),
            work: vec![ZERO; h.dim()],
            report: KrylovReport::default(),
        })
    }

    pub fn params(&self) -> &KrylovParams {
        &self.params
    }

    /// Totals since construction (or the last [`take_report`](Self::take_report)).
    pub fn report(&self) -> &KrylovReport {
        &self.report
    }

    pub fn take_report(&mut self) -> KrylovReport {
        std::mem::take(&mut self.report)
    }

    /// Evolves `psi` in place by `t` (negative `t` runs backward).
    pub fn evolve(&mut self, psi: &mut StateVector, t: f64) -> Result<()> {
        if psi.dim() != self.h.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.h.dim(),
                found: psi.dim(),
            });
        }
        if !t.is_finite() {
            return Err(Error::invalid("evolution time must be finite"));
        }
        let dt = self.params.dt;
        let mut remaining = t.abs();
        let sign = t.signum();
        let negligible = 1e-13 * t.abs().max(dt);
        while remaining > negligible {
            // Avoid a sliver of a final step from accumulated rounding.
            let tau = if remaining <= dt * (1.0 + 1e-12) { remaining } else { dt };
            let done = self.step(psi.amplitudes_mut(), sign * tau)?;
            remaining -= done.abs();
        }
        Ok(())
    }

    /// Advances by at most `tau`; returns the time actually covered.
    fn step(&mut self, psi: &mut [Complex64], tau: f64) -> Result<f64> {
        let beta0 = norm(psi);
        if beta0 == 0.0 {
            return Ok(tau);
        }
        let m = self.params.subspace_dim.min(psi.len());
        // Below ~1e-14 relative the estimate is rounding noise and cannot be reduced further.
        let budget = |tau: f64| {
            (self.params.local_tolerance * tau.abs() / self.params.dt).max(1e-14 * beta0)
        };
        let dim = psi.len();
        while self.basis.len() < m + 1 {
            self.basis.push(vec![ZERO; dim]);
        }
        let inv = beta0.recip();
        for (b, p) in self.basis[0].iter_mut().zip(psi.iter()) {
            *b = p * inv;
        }

        let mut tri = Tridiagonal {
            alpha: Vec::with_capacity(m),
            beta: vec![0.0],
        };
        let mut k = 0;
        let mut exact = false;
        let mut coeffs = Vec::new();
        let mut err = f64::INFINITY;
        let tiny = 1e-12 * (1.0 + self.h.operator().diagonal().iter().map(|d| d.norm()).fold(0.0, f64::max));
        while k < m {
            self.h.apply_into(&self.basis[k], &mut self.work)?;
            self.report.matvecs += 1;
            let alpha = inner(&self.basis[k], &self.work).re;
            let beta_prev = tri.beta[k];
            {
                let (lo, hi) = self.basis.split_at(k);
                let vk = &hi[0];
                let vprev = if k > 0 { Some(&lo[k - 1]) } else { None };
                for (i, w) in self.work.iter_mut().enumerate() {
                    *w -= alpha * vk[i];
                    if let Some(vp) = vprev {
                        *w -= beta_prev * vp[i];
                    }
                }
            }
            tri.alpha.push(alpha);
            k += 1;

            // Monitor orthogonality against the first vector; restore it fully when lost.
            if k >= 2 {
                let overlap = inner(&self.basis[0], &self.work).norm() / norm(&self.work).max(f64::MIN_POSITIVE);
                if overlap > 1e-8 {
                    for _ in 0..2 {
                        for j in 0..k {
                            let c = inner(&self.basis[j], &self.work);
                            for (w, v) in self.work.iter_mut().zip(&self.basis[j]) {
                                *w -= c * v;
                            }
                        }
                    }
                    self.report.reorthogonalizations += 1;
                }
            }

            let beta = norm(&self.work);
            tri.beta.push(beta);
            coeffs = tri.exp_first_column(k, tau);
            if beta <= tiny {
                // Invariant subspace reached: the projection is exact.
                exact = true;
                err = 0.0;
                break;
            }
            err = beta0 * beta * coeffs[k - 1].norm();
            if err <= budget(tau) {
                break;
            }
            if k < m {
                let inv = beta.recip();
                let (w, next) = (&self.work, &mut self.basis[k]);
                for (n, x) in next.iter_mut().zip(w) {
                    *n = x * inv;
                }
            }
        }

        let mut tau_used = tau;
        if !exact && err > budget(tau_used) {
            let beta = tri.beta[k];
            while err > budget(tau_used) {
                tau_used *= 0.5;
                self.report.halvings += 1;
                if tau_used.abs() < 1e-10 * self.params.dt {
                    return Err(Error::Numerical {
                        message: "Krylov step shrank below 1e-10·dt without meeting the error budget".into(),
                        best_residual: Some(err),
                    });
                }
                coeffs = tri.exp_first_column(k, tau_used);
                err = beta0 * beta * coeffs[k - 1].norm();
            }
        }

        for p in psi.iter_mut() {
            *p = ZERO;
        }
        for (j, c) in coeffs.iter().enumerate() {
            let c = c * beta0;
            for (p, v) in psi.iter_mut().zip(&self.basis[j]) {
                *p += c * v;
            }
        }
        let drift = (norm(psi) - beta0).abs() / beta0;
        if drift > NORM_DRIFT_TOLERANCE {
            let scale = beta0 / norm(psi);
            psi.iter_mut().for_each(|p| *p *= scale);
            self.report.renormalizations += 1;
            log::warn!("Krylov step renormalized the state (relative norm drift {drift:.3e})");
        }
        self.report.steps += 1;
        self.report.error_estimate += err;
        Ok(tau_used)
    }
}

/// `e^{−iHt}ψ` by Krylov propagation.
pub fn evolve_krylov(
    spec: &ModelSpec,
    psi: &StateVector,
    t: f64,
    params: KrylovParams,
) -> Result<StateVector> {
    Ok(evolve_krylov_with_report(spec, psi, t, params)?.0)
}

pub fn evolve_krylov_with_report(
    spec: &ModelSpec,
    psi: &StateVector,
    t: f64,
    params: KrylovParams,
) -> Result<(StateVector, KrylovReport)> {
    let h = Hamiltonian::new(spec)?;
    let mut prop = KrylovPropagator::new(&h, params)?;
    let mut out = psi.clone();
    prop.evolve(&mut out, t)?;
    if prop.report().reorthogonalizations > 0 {
        log::info!(
            "Krylov propagation needed {} re-orthogonalizations",
            prop.report().reorthogonalizations
        );
    }
    Ok((out, prop.take_report()))
}

/// Largest dimension [`Method::Auto`] propagates densely (`L + 1 = 10`).
pub const AUTO_DENSE_DIM: usize = 1 << 10;

/// Propagation method for observables built on repeated evolution.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Method {
    /// Dense up to [`AUTO_DENSE_DIM`], Krylov with default parameters above.
    #[default]
    Auto,
    Dense,
    Krylov(KrylovParams),
}

/// A propagator chosen by [`Method`].
#[derive(Clone, Debug)]
pub enum Evolver {
    Dense(Box<DensePropagator>),
    Krylov {
        hamiltonian: Box<Hamiltonian>,
        params: KrylovParams,
    },
}

impl Evolver {
    pub fn new(spec: &ModelSpec, method: Method) -> Result<Self> {
        spec.validate()?;
        let method = match method {
            Method::Auto if spec.dim() <= AUTO_DENSE_DIM.min(max_dense_dim()) => Method::Dense,
            Method::Auto => Method::Krylov(KrylovParams::default()),
            m => m,
        };
        match method {
            Method::Dense => Ok(Evolver::Dense(Box::new(DensePropagator::new(spec)?))),
            Method::Krylov(params) => {
                params.validate()?;
                Ok(Evolver::Krylov {
                    hamiltonian: Box::new(Hamiltonian::new(spec)?),
                    params,
                })
            }
            Method::Auto => unreachable!(),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, Evolver::Dense(_))
    }

    /// Evolves `psi` in place by `t`.
    pub fn evolve(&self, psi: &mut StateVector, t: f64) -> Result<KrylovReport> {
        match self {
            Evolver::Dense(d) => {
                *psi = d.evolve(psi, t)?;
                Ok(KrylovReport::default())
            }
            Evolver::Krylov { hamiltonian, params } => {
                let mut prop = KrylovPropagator::new(hamiltonian, *params)?;
                prop.evolve(psi, t)?;
                Ok(prop.take_report())
            }
        }
    }
}
