//! The ring-star Ising Hamiltonian
//!
//! ```text
//! H = Σ_i [ λ A_i A_c − J Z_i Z_{i+1} + h X_i + g Z_i ] + h_c X_c + g_c Z_c
//! ```
//!
//! with `A = Z` (the default c-qubit coupling) or `A = X` (the transverse variant).
//! Ring spins are sites `0..L`, the c-qubit is site `L`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::StateVector;
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliOperator, PauliString, PauliSum, MAX_SITES};

/// Pauli axis of the ring-to-c-qubit coupling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum CouplingAxis {
    #[default]
    Z,
    X,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

impl fmt::Display for CouplingAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingAxis::Z => "Z",
            CouplingAxis::X => "X",
        })
    }
}

impl FromStr for CouplingAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Z" | "z" => Ok(CouplingAxis::Z),
            "X" | "x" => Ok(CouplingAxis::X),
            other => Err(Error::Parse(format!("unknown coupling axis {other:?}"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "periodic" => Ok(Boundary::Periodic),
            "open" => Ok(Boundary::Open),
            other => Err(Error::Parse(format!("unknown boundary {other:?}"))),
        }
    }
}

/// Model parameters. Energies are in units of `J` by convention.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    /// Ring size.
    #[serde(rename = "L")]
    pub l: usize,
    pub lambda: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub h: f64,
    pub g: f64,
    pub h_c: f64,
    pub g_c: f64,
    pub axis: CouplingAxis,
    pub boundary: Boundary,
}

impl Default for ModelSpec {
    /// `L = 8, λ = 1` with `J = 1, h = h_c = 1.05, g = g_c = 0.45`.
    fn default() -> Self {
        Self {
            l: 8,
            lambda: 1.0,
            j: 1.0,
            h: 1.05,
            g: 0.45,
            h_c: 1.05,
            g_c: 0.45,
            axis: CouplingAxis::Z,
            boundary: Boundary::Periodic,
        }
    }
}

const CONFIG_KEYS: [&str; 9] = ["L", "lambda", "J", "h", "g", "h_c", "g_c", "axis", "boundary"];

impl ModelSpec {
    /// Default couplings with the given ring size and c-qubit coupling.
    pub fn new(l: usize, lambda: f64) -> Self {
        Self {
            l,
            lambda,
            ..Self::default()
        }
    }

    /// All couplings zero.
    pub fn zero(l: usize) -> Self {
        Self {
            l,
            lambda: 0.0,
            j: 0.0,
            h: 0.0,
            g: 0.0,
            h_c: 0.0,
            g_c: 0.0,
            axis: CouplingAxis::Z,
            boundary: Boundary::Periodic,
        }
    }

    /// Pure star coupling `λ Σ Z_i Z_c` with every other term off.
    pub fn pure_star(l: usize, lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::zero(l)
        }
    }

    /// Total qubit count `L + 1`.
    pub fn n_sites(&self) -> usize {
        self.l + 1
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites()
    }

    pub fn cqubit(&self) -> usize {
        self.l
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::invalid("ring size L must be at least 1"));
        }
        if self.l + 1 > MAX_SITES {
            return Err(Error::invalid(format!(
                "L + 1 = {} exceeds the {MAX_SITES}-site limit",
                self.l + 1
            )));
        }
        let couplings = [
            ("lambda", self.lambda),
            ("J", self.j),
            ("h", self.h),
            ("g", self.g),
            ("h_c", self.h_c),
            ("g_c", self.g_c),
        ];
        for (name, v) in couplings {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Ring bonds `(i, i+1)` with duplicates merged, paired with their multiplicity.
    fn bonds(&self) -> Vec<(usize, usize, f64)> {
        let l = self.l;
        let n_bonds = match self.boundary {
            Boundary::Periodic => l,
            Boundary::Open => l.saturating_sub(1),
        };
        let mut merged: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..n_bonds {
            let (a, b) = (i, (i + 1) % l);
            if a == b {
                // A one-site ring bonds to itself: Z_0 Z_0 is a constant.
                continue;
            }
            let key = (a.min(b), a.max(b));
            match merged.iter_mut().find(|(p, q, _)| (*p, *q) == key) {
                Some(entry) => entry.2 += 1.0,
                None => merged.push((key.0, key.1, 1.0)),
            }
        }
        merged
    }

    /// Flat `key=value` lines using the documented keys; floats round-trip exactly.
    pub fn to_config_string(&self) -> String {
        format!(
            "L={}\nlambda={:?}\nJ={:?}\nh={:?}\ng={:?}\nh_c={:?}\ng_c={:?}\naxis={}\nboundary={}\n",
            self.l, self.lambda, self.j, self.h, self.g, self.h_c, self.g_c, self.axis, self.boundary
        )
    }

    /// Parses `key=value` lines. Missing keys take defaults; unknown or repeated keys are errors.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !CONFIG_KEYS.contains(&key) {
                return Err(Error::Parse(format!("line {}: unknown key {key:?}", lineno + 1)));
            }
            if seen.contains(&key) {
                return Err(Error::Parse(format!("line {}: repeated key {key:?}", lineno + 1)));
            }
            seen.push(key);
            let float = |v: &str| {
                v.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {key}: {e}", lineno + 1)))
            };
            match key {
                "L" => {
                    spec.l = value
                        .parse()
                        .map_err(|e| Error::Parse(format!("line {}: L: {e}", lineno + 1)))?
                }
                "lambda" => spec.lambda = float(value)?,
                "J" => spec.j = float(value)?,
                "h" => spec.h = float(value)?,
                "g" => spec.g = float(value)?,
                "h_c" => spec.h_c = float(value)?,
                "g_c" => spec.g_c = float(value)?,
                "axis" => spec.axis = value.parse()?,
                "boundary" => spec.boundary = value.parse()?,
                _ => unreachable!(),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// `H` as a [`PauliSum`]; zero-coefficient terms are omitted.
pub fn build_pauli_sum(spec: &ModelSpec) -> Result<PauliSum> {
    spec.validate()?;
    let n = spec.n_sites();
    let c = spec.cqubit();
    let mut sum = PauliSum::new(n)?;
    let mut add = |ops: &[(usize, Pauli)], coeff: f64| -> Result<()> {
        if coeff != 0.0 {
            sum.add_term(PauliString::from_sites(n, ops)?, Complex64::new(coeff, 0.0))?;
        }
        Ok(())
    };
    let a = match spec.axis {
        CouplingAxis::Z => Pauli::Z,
        CouplingAxis::X => Pauli::X,
    };
    for i in 0..spec.l {
        add(&[(i, a), (c, a)], spec.lambda)?;
    }
    for (p, q, mult) in spec.bonds() {
        add(&[(p, Pauli::Z), (q, Pauli::Z)], -spec.j * mult)?;
    }
    for i in 0..spec.l {
        add(&[(i, Pauli::X)], spec.h)?;
        add(&[(i, Pauli::Z)], spec.g)?;
    }
    add(&[(c, Pauli::X)], spec.h_c)?;
    add(&[(c, Pauli::Z)], spec.g_c)?;
    Ok(sum)
}

/// A compiled Hamiltonian: the Pauli sum plus a matrix-free operator for matvecs.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    spec: ModelSpec,
    sum: PauliSum,
    op: PauliOperator,
}

impl Hamiltonian {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let sum = build_pauli_sum(spec)?;
        let op = PauliOperator::new(&sum);
        Ok(Self {
            spec: *spec,
            sum,
            op,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn pauli_sum(&self) -> &PauliSum {
        &self.sum
    }

    pub fn operator(&self) -> &PauliOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        self.op.apply_into(psi, out)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        StateVector::from_amplitudes(self.op.apply(psi.amplitudes())?)
    }

    /// `⟨ψ|H|ψ⟩` (real since `H` is Hermitian).
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        let hpsi = self.op.apply(psi.amplitudes())?;
        Ok(psi
            .amplitudes()
            .iter()
            .zip(&hpsi)
            .map(|(a, b)| (a.conj() * b).re)
            .sum())
    }

    /// Dense matrix in the computational basis. Every term is built from `X` and `Z`, so it is real.
    pub fn dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for s in 0..dim {
            for (t, c) in self.op.column(s as u64) {
                m[(t as usize, s)] += c.re;
            }
        }
        m
    }
}

/// `H·ψ` without forming a matrix.
pub fn apply_hamiltonian(spec: &ModelSpec, psi: &StateVector) -> Result<StateVector> {
    let h = Hamiltonian::new(spec)?;
    if psi.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi.dim(),
        });
    }
    h.apply(psi)
}

/// Translate ring configuration `s` by one site (`i → i+1 mod L`).
pub fn translate_ring(s: u64, l: usize) -> u64 {
    let mask = (1u64 << l) - 1;
    ((s << 1) | (s >> (l - 1))) & mask
}

/// Reflect ring configuration `s` (`i → (L − i) mod L`).
pub fn reflect_ring(s: u64, l: usize) -> u64 {
    let mut out = 0;
    for i in 0..l {
        if (s >> i) & 1 == 1 {
            out |= 1 << ((l - i) % l);
        }
    }
    out
}

/// Reflection parity of a sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> i8 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    pub fn from_sign(sign: i32) -> Result<Self> {
        match sign {
            1 => Ok(Parity::Even),
            -1 => Ok(Parity::Odd),
            other => Err(Error::invalid(format!("parity must be ±1, got {other}"))),
        }
    }
}

/// Basis of the zero-momentum ring states with fixed reflection parity.
///
/// Each basis state is a normalized superposition of ring configurations; the c-qubit is
/// tensored on without reduction, so sector index `2m + c` pairs ring state `m` with c-qubit bit `c`.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    l: usize,
    parity: Parity,
    states: Vec<Vec<(u64, f64)>>,
    lookup: HashMap<u64, (usize, f64)>,
}

impl SectorBasis {
    pub fn new(l: usize, parity: Parity) -> Result<Self> {
        if l == 0 || l + 1 > 32 {
            return Err(Error::invalid(format!("ring size {l} outside 1..=31")));
        }
        let n_configs = 1u64 << l;
        let mut orbit_rep = vec![u64::MAX; n_configs as usize];
        let mut orbits: Vec<Vec<u64>> = Vec::new();
        for s in 0..n_configs {
            if orbit_rep[s as usize] != u64::MAX {
                continue;
            }
            // Unvisited configurations are met in increasing order, so `s` is the orbit minimum.
            let mut orbit = vec![s];
            let mut t = translate_ring(s, l);
            while t != s {
                orbit.push(t);
                t = translate_ring(t, l);
            }
            for &o in &orbit {
                orbit_rep[o as usize] = s;
            }
            orbit.sort_unstable();
            orbits.push(orbit);
        }

        let mut states = Vec::new();
        for orbit in &orbits {
            let rep = orbit[0];
            let mirror = orbit_rep[reflect_ring(rep, l) as usize];
            let norm = (orbit.len() as f64).sqrt().recip();
            if mirror == rep {
                if parity == Parity::Even {
                    states.push(orbit.iter().map(|&s| (s, norm)).collect());
                }
            } else if rep < mirror {
                let sign = parity.sign() as f64;
                let partner = &orbits[orbits.partition_point(|o| o[0] < mirror)];
                let w = norm * std::f64::consts::FRAC_1_SQRT_2;
                let mut state: Vec<(u64, f64)> = orbit.iter().map(|&s| (s, w)).collect();
                state.extend(partner.iter().map(|&s| (s, sign * w)));
                states.push(state);
            }
        }

        let mut lookup = HashMap::new();
        for (m, state) in states.iter().enumerate() {
            for &(s, a) in state {
                lookup.insert(s, (m, a));
            }
        }
        Ok(Self {
            l,
            parity,
            states,
            lookup,
        })
    }

    pub fn ring_size(&self) -> usize {
        self.l
    }

    /// Only the zero-momentum sector is built.
    pub fn momentum(&self) -> i64 {
        0
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Number of ring states, before the c-qubit doubling.
    pub fn ring_dimension(&self) -> usize {
        self.states.len()
    }

    /// Sector dimension including the c-qubit.
    pub fn dimension(&self) -> usize {
        2 * self.states.len()
    }

    /// Representative (orbit minimum) of each ring state.
    pub fn representatives(&self) -> Vec<u64> {
        self.states
            .iter()
            .map(|st| st.iter().map(|&(s, _)| s).min().unwrap_or(0))
            .collect()
    }

    /// Ring state `m` as `(configuration, amplitude)` pairs.
    pub fn ring_state(&self, m: usize) -> &[(u64, f64)] {
        &self.states[m]
    }

    /// Columns are the sector basis vectors embedded in the full `2^(L+1)` space.
    pub fn isometry(&self) -> DMatrix<f64> {
        let full = 1usize << (self.l + 1);
        let mut v = DMatrix::zeros(full, self.dimension());
        for (m, state) in self.states.iter().enumerate() {
            for c in 0..2u64 {
                for &(s, a) in state {
                    v[((s | (c << self.l)) as usize, 2 * m + c as usize)] = a;
                }
            }
        }
        v
    }
}

/// Dense sector block `⟨a|H|b⟩` over a [`SectorBasis`].
pub fn sector_hamiltonian(spec: &ModelSpec, basis: &SectorBasis) -> Result<DMatrix<f64>> {
    if spec.boundary != Boundary::Periodic {
        return Err(Error::invalid("symmetry sectors need a periodic ring"));
    }
    if spec.l != basis.l {
        return Err(Error::invalid(format!(
            "basis built for L = {}, spec has L = {}",
            basis.l, spec.l
        )));
    }
    let h = Hamiltonian::new(spec)?;
    let l = spec.l;
    let ring_mask = (1u64 << l) - 1;
    let dim = basis.dimension();
    let mut out = DMatrix::zeros(dim, dim);
    let mut image: HashMap<u64, f64> = HashMap::new();
    for (m, state) in basis.states.iter().enumerate() {
        for c in 0..2u64 {
            image.clear();
            for &(s, a) in state {
                for (t, coeff) in h.operator().column(s | (c << l)) {
                    *image.entry(t).or_insert(0.0) += a * coeff.re;
                }
            }
            let col = 2 * m + c as usize;
            for (&t, &v) in &image {
                if let Some(&(row, a)) = basis.lookup.get(&(t & ring_mask)) {
                    out[(2 * row + (t >> l) as usize, col)] += a * v;
                }
            }
        }
    }
    Ok(out)
}
