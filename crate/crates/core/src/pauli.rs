//! Phase-tracked algebra of multi-qubit Pauli operators in symplectic bitmask form.
//!
//! A [`PauliString`] is `i^phase · P_0 ⊗ P_1 ⊗ … ⊗ P_{n-1}` where each `P_k` is one of the
//! Hermitian matrices `I, X, Y, Z` selected by bit `k` of `x_mask` and `z_mask`:
//!
//! | x | z | site operator |
//! |---|---|---------------|
//! | 0 | 0 | I             |
//! | 1 | 0 | X             |
//! | 0 | 1 | Z             |
//! | 1 | 1 | Y = i·X·Z     |
//!
//! With this convention a string is Hermitian exactly when `phase ∈ {0, 2}`.
//! Operators use σ normalization (eigenvalues ±1), not spin-½ `S = σ/2`.
//!
//! A [`PauliSum`] keys its terms by the phase-free masks and folds the phase into the
//! complex coefficient.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest site count a bitmask string can hold.
pub const MAX_SITES: usize = 64;

/// Default magnitude below which [`PauliSum`] coefficients are dropped.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-14;

/// Default term-count cap for nested commutator expansions.
pub const DEFAULT_TERM_CAP: usize = 1_000_000;

const I_POWERS: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// `i^k` for any integer `k`.
#[inline]
pub fn i_pow(k: u32) -> Complex64 {
    I_POWERS[(k & 3) as usize]
}

/// Single-site Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::Parse(format!("not a Pauli label: {other:?}"))),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl std::str::FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Pauli::from_char(c.to_ascii_uppercase()),
            _ => Err(Error::Parse(format!("not a Pauli label: {s:?}"))),
        }
    }
}

/// A tensor product of single-site Paulis with a phase in `{+1, +i, -1, -i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_sites: usize,
    x_mask: u64,
    z_mask: u64,
    phase: u8,
}

fn site_mask(n_sites: usize) -> u64 {
    if n_sites == MAX_SITES {
        u64::MAX
    } else {
        (1u64 << n_sites) - 1
    }
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Result<Self> {
        Self::from_masks(n_sites, 0, 0, 0)
    }

    /// Builds `i^phase · Π P_k` from raw masks. Bits at or above `n_sites` are rejected.
    pub fn from_masks(n_sites: usize, x_mask: u64, z_mask: u64, phase: u8) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::invalid(format!(
                "site count {n_sites} outside 1..={MAX_SITES}"
            )));
        }
        let allowed = site_mask(n_sites);
        if (x_mask | z_mask) & !allowed != 0 {
            return Err(Error::invalid("mask has bits beyond the site count"));
        }
        Ok(Self {
            n_sites,
            x_mask,
            z_mask,
            phase: phase & 3,
        })
    }

    /// A single Pauli on `site`, identity elsewhere.
    pub fn single(n_sites: usize, site: usize, pauli: Pauli) -> Result<Self> {
        if site >= n_sites {
            return Err(Error::invalid(format!(
                "site {site} out of range for {n_sites} sites"
            )));
        }
        let (x, z) = pauli.bits();
        Self::from_masks(n_sites, (x as u64) << site, (z as u64) << site, 0)
    }

    /// Builds a string from `(site, pauli)` pairs. Repeated sites multiply in order.
    pub fn from_sites(n_sites: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut out = Self::identity(n_sites)?;
        for &(site, p) in ops {
            out = out.multiply(&Self::single(n_sites, site, p)?)?;
        }
        Ok(out)
    }

    /// Parses a phase-free label such as `"IXZY"` (character `k` acts on site `k`).
    pub fn from_label(label: &str) -> Result<Self> {
        let n = label.chars().count();
        let mut x = 0u64;
        let mut z = 0u64;
        for (k, c) in label.chars().enumerate() {
            let (xb, zb) = Pauli::from_char(c)?.bits();
            x |= (xb as u64) << k;
            z |= (zb as u64) << k;
        }
        Self::from_masks(n, x, z, 0)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    /// Phase as a power of `i` (0..4).
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn phase_factor(&self) -> Complex64 {
        i_pow(self.phase as u32)
    }

    /// Same masks with phase +1.
    pub fn without_phase(&self) -> Self {
        Self { phase: 0, ..*self }
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0 && self.phase == 0
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    pub fn support(&self) -> u64 {
        self.x_mask | self.z_mask
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    pub fn acts_on(&self, site: usize) -> bool {
        site < self.n_sites && (self.support() >> site) & 1 == 1
    }

    pub fn site(&self, site: usize) -> Pauli {
        Pauli::from_bits((self.x_mask >> site) & 1 == 1, (self.z_mask >> site) & 1 == 1)
    }

    pub fn label(&self) -> String {
        (0..self.n_sites).map(|k| self.site(k).as_char()).collect()
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones())
            % 2
            == 0
    }

    fn check_sites(&self, other: &Self) -> Result<()> {
        if self.n_sites != other.n_sites {
            return Err(Error::invalid(format!(
                "site counts differ: {} vs {}",
                self.n_sites, other.n_sites
            )));
        }
        Ok(())
    }

    /// Exact operator product `self · other`, including the accumulated phase.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_sites(other)?;
        Ok(self.mul_unchecked(other))
    }

    // Each site operator is i^{xz} X^x Z^z; moving Z^{z1} past X^{x2} costs (-1)^{z1·x2}.
    #[inline]
    fn mul_unchecked(&self, other: &Self) -> Self {
        let x = self.x_mask ^ other.x_mask;
        let z = self.z_mask ^ other.z_mask;
        let exp = self.phase as u32
            + other.phase as u32
            + (self.x_mask & self.z_mask).count_ones()
            + (other.x_mask & other.z_mask).count_ones()
            + 2 * (self.z_mask & other.x_mask).count_ones()
            + 3 * (x & z).count_ones();
        Self {
            n_sites: self.n_sites,
            x_mask: x,
            z_mask: z,
            phase: (exp & 3) as u8,
        }
    }

    /// Amplitude and target of `self |basis⟩`: returns `(coefficient, basis ⊕ x_mask)`.
    ///
    /// Basis index bit `k` is the `z` eigenvalue of site `k` (0 ↔ +1, 1 ↔ −1).
    #[inline]
    pub fn act_on_basis(&self, basis: u64) -> (Complex64, u64) {
        let sign = 2 * (self.z_mask & basis).count_ones();
        let k = self.phase as u32 + (self.x_mask & self.z_mask).count_ones() + sign;
        (i_pow(k), basis ^ self.x_mask)
    }

    /// `out = self · input` on a state vector of dimension `2^n_sites`.
    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let dim = 1usize << self.n_sites;
        if input.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: input.len(),
            });
        }
        if out.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: out.len(),
            });
        }
        for (s, amp) in input.iter().enumerate() {
            let (c, t) = self.act_on_basis(s as u64);
            out[t as usize] = c * amp;
        }
        Ok(())
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_sites;
        let mut m = DMatrix::zeros(dim, dim);
        for s in 0..dim {
            let (c, t) = self.act_on_basis(s as u64);
            m[(t as usize, s)] = c;
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["", "i·", "-", "-i·"][self.phase as usize];
        write!(f, "{prefix}{}", self.label())
    }
}

/// A linear combination of Pauli strings with complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_sites: usize,
    terms: BTreeMap<(u64, u64), Complex64>,
    prune_threshold: f64,
}

impl PauliSum {
    pub fn new(n_sites: usize) -> Result<Self> {
        Self::with_threshold(n_sites, DEFAULT_PRUNE_THRESHOLD)
    }

    pub fn with_threshold(n_sites: usize, prune_threshold: f64) -> Result<Self> {
        PauliString::identity(n_sites)?;
        if !(prune_threshold >= 0.0) {
            return Err(Error::invalid("prune threshold must be non-negative"));
        }
        Ok(Self {
            n_sites,
            terms: BTreeMap::new(),
            prune_threshold,
        })
    }

    pub fn from_string(p: PauliString, coeff: Complex64) -> Self {
        let mut s = Self {
            n_sites: p.n_sites,
            terms: BTreeMap::new(),
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
        };
        s.add_term(p, coeff).expect("site counts match by construction");
        s
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn prune_threshold(&self) -> f64 {
        self.prune_threshold
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `coeff · p`, folding the string's phase into the coefficient.
    pub fn add_term(&mut self, p: PauliString, coeff: Complex64) -> Result<()> {
        if p.n_sites != self.n_sites {
            return Err(Error::invalid(format!(
                "site counts differ: {} vs {}",
                p.n_sites, self.n_sites
            )));
        }
        let c = coeff * p.phase_factor();
        let key = (p.x_mask, p.z_mask);
        let entry = self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() <= self.prune_threshold {
            self.terms.remove(&key);
        }
        Ok(())
    }

    /// Coefficient of the phase-free string with these masks (zero if absent).
    pub fn coefficient(&self, p: &PauliString) -> Complex64 {
        self.terms
            .get(&(p.x_mask, p.z_mask))
            .map(|c| c / p.phase_factor())
            .unwrap_or_default()
    }

    /// Terms as `(phase-free string, coefficient)` in a stable order.
    pub fn iter(&self) -> impl Iterator<Item = (PauliString, Complex64)> + '_ {
        self.terms.iter().map(move |(&(x, z), &c)| {
            (
                PauliString {
                    n_sites: self.n_sites,
                    x_mask: x,
                    z_mask: z,
                    phase: 0,
                },
                c,
            )
        })
    }

    fn check_sites(&self, other: &Self) -> Result<()> {
        if self.n_sites != other.n_sites {
            return Err(Error::invalid(format!(
                "site counts differ: {} vs {}",
                self.n_sites, other.n_sites
            )));
        }
        Ok(())
    }

    fn from_accumulator(
        n_sites: usize,
        prune_threshold: f64,
        acc: HashMap<(u64, u64), Complex64>,
    ) -> Self {
        let terms = acc
            .into_iter()
            .filter(|(_, c)| c.norm() > prune_threshold)
            .collect();
        Self {
            n_sites,
            terms,
            prune_threshold,
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(&k, &c)| (k, c * factor))
            .filter(|(_, c)| c.norm() > self.prune_threshold)
            .collect();
        Self {
            terms,
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_sites(other)?;
        let mut out = self.clone();
        for (p, c) in other.iter() {
            out.add_term(p, c)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Operator product `self · other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_sites(other)?;
        let mut acc: HashMap<(u64, u64), Complex64> = HashMap::new();
        for (pa, ca) in self.iter() {
            for (pb, cb) in other.iter() {
                let p = pa.mul_unchecked(&pb);
                *acc.entry((p.x_mask, p.z_mask)).or_default() += ca * cb * p.phase_factor();
            }
        }
        Ok(Self::from_accumulator(
            self.n_sites,
            self.prune_threshold.max(other.prune_threshold),
            acc,
        ))
    }

    /// `[self, other] = self·other − other·self`.
    ///
    /// Commuting string pairs contribute nothing; anticommuting pairs contribute `2·a·b`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_sites(other)?;
        let mut acc: HashMap<(u64, u64), Complex64> = HashMap::new();
        for (pa, ca) in self.iter() {
            for (pb, cb) in other.iter() {
                if pa.commutes_with(&pb) {
                    continue;
                }
                let p = pa.mul_unchecked(&pb);
                *acc.entry((p.x_mask, p.z_mask)).or_default() +=
                    2.0 * ca * cb * p.phase_factor();
            }
        }
        Ok(Self::from_accumulator(
            self.n_sites,
            self.prune_threshold.max(other.prune_threshold),
            acc,
        ))
    }

    pub fn adjoint(&self) -> Self {
        let terms = self.terms.iter().map(|(&k, c)| (k, c.conj())).collect();
        Self {
            terms,
            ..self.clone()
        }
    }

    /// True when every coefficient is real to within `tol` (the strings themselves are Hermitian).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// Sum of `|c|²` over terms that act nontrivially on `site`.
    pub fn support_weight(&self, site: usize) -> Result<f64> {
        if site >= self.n_sites {
            return Err(Error::invalid(format!(
                "site {site} out of range for {} sites",
                self.n_sites
            )));
        }
        Ok(self
            .terms
            .iter()
            .filter(|(&(x, z), _)| ((x | z) >> site) & 1 == 1)
            .map(|(_, c)| c.norm_sqr())
            .sum())
    }

    /// Hilbert–Schmidt norm squared per dimension, `Σ |c|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    /// Largest coefficient magnitude (0 for an empty sum).
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_sites;
        let mut m = DMatrix::zeros(dim, dim);
        for (p, c) in self.iter() {
            for s in 0..dim {
                let (a, t) = p.act_on_basis(s as u64);
                m[(t as usize, s)] += c * a;
            }
        }
        m
    }

    /// One term per line: `<coeff_re> <coeff_im> <label>`. Floats use shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, c) in self.iter() {
            out.push_str(&format!("{:?} {:?} {}\n", c.re, c.im, p.label()));
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output. Blank lines and `#` comments are skipped.
    pub fn from_text(text: &str, n_sites: usize) -> Result<Self> {
        let mut sum = Self::new(n_sites)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "line {}: expected `<re> <im> <label>`",
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let c = Complex64::new(parse(fields[0])?, parse(fields[1])?);
            let p = PauliString::from_label(fields[2])?;
            if p.n_sites != n_sites {
                return Err(Error::Parse(format!(
                    "line {}: label has {} sites, expected {n_sites}",
                    lineno + 1,
                    p.n_sites
                )));
            }
            // Insert verbatim so the round trip is exact (no re-accumulation).
            sum.terms.insert((p.x_mask, p.z_mask), c);
        }
        Ok(sum)
    }
}

/// Nested commutators `[h, op]_1 … [h, op]_order` with `[A, B]_m = [A, [A, B]_{m−1}]`.
pub fn bch_nested(h: &PauliSum, op: &PauliSum, order: usize) -> Result<Vec<PauliSum>> {
    bch_nested_with_cap(h, op, order, DEFAULT_TERM_CAP)
}

/// As [`bch_nested`] with an explicit term-count cap; exceeding it is an error, never a silent cut.
pub fn bch_nested_with_cap(
    h: &PauliSum,
    op: &PauliSum,
    order: usize,
    term_cap: usize,
) -> Result<Vec<PauliSum>> {
    if order == 0 {
        return Err(Error::invalid("commutator order must be at least 1"));
    }
    let mut out = Vec::with_capacity(order);
    let mut current = op.clone();
    for m in 1..=order {
        current = h.commutator(&current)?;
        if current.len() > term_cap {
            return Err(Error::Truncation {
                order_reached: m,
                terms: current.len(),
                cap: term_cap,
            });
        }
        out.push(current.clone());
    }
    Ok(out)
}

/// Matrix-free application of a [`PauliSum`] to state vectors.
///
/// Terms are grouped by their X mask: the diagonal (X-free) part is tabulated once and
/// every other group is applied as a gather `out[t] += c·sign(t⊕x)·ψ[t⊕x]`.
#[derive(Clone, Debug)]
pub struct PauliOperator {
    n_sites: usize,
    diagonal: Vec<Complex64>,
    flips: Vec<(u64, Vec<(u64, Complex64)>)>,
}

impl PauliOperator {
    pub fn new(sum: &PauliSum) -> Self {
        let n = sum.n_sites();
        let dim = 1usize << n;
        let mut diagonal = vec![Complex64::new(0.0, 0.0); dim];
        let mut groups: BTreeMap<u64, Vec<(u64, Complex64)>> = BTreeMap::new();
        for (p, c) in sum.iter() {
            if p.x_mask == 0 {
                for (s, d) in diagonal.iter_mut().enumerate() {
                    let odd = (p.z_mask & s as u64).count_ones() & 1 == 1;
                    if odd {
                        *d -= c;
                    } else {
                        *d += c;
                    }
                }
            } else {
                // Fold i^{popcount(x&z)} from the Y convention into the coefficient.
                let c = c * i_pow((p.x_mask & p.z_mask).count_ones());
                groups.entry(p.x_mask).or_default().push((p.z_mask, c));
            }
        }
        Self {
            n_sites: n,
            diagonal,
            flips: groups.into_iter().collect(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[Complex64] {
        &self.diagonal
    }

    /// `out = H · input`.
    pub fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let dim = self.dim();
        if input.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: input.len(),
            });
        }
        if out.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: out.len(),
            });
        }
        use rayon::prelude::*;
        const CHUNK: usize = 1 << 12;
        out.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(chunk, block)| {
                let base = chunk * CHUNK;
                for (k, o) in block.iter_mut().enumerate() {
                    let t = base + k;
                    let mut acc = self.diagonal[t] * input[t];
                    for (x, zs) in &self.flips {
                        let s = t as u64 ^ x;
                        let amp = input[s as usize];
                        for &(z, c) in zs {
                            if (z & s).count_ones() & 1 == 1 {
                                acc -= c * amp;
                            } else {
                                acc += c * amp;
                            }
                        }
                    }
                    *o = acc;
                }
            });
        Ok(())
    }

    pub fn apply(&self, input: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(input, &mut out)?;
        Ok(out)
    }

    /// Nonzero entries of column `s`: `H|s⟩ = Σ coeff |target⟩`.
    pub fn column(&self, s: u64) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        let diag = std::iter::once((s, self.diagonal[s as usize]));
        let off = self.flips.iter().map(move |(x, zs)| {
            // Gather form: entry (t, s) with t = s ⊕ x carries sign(z·s).
            let c: Complex64 = zs
                .iter()
                .map(|&(z, c)| if (z & s).count_ones() & 1 == 1 { -c } else { c })
                .sum();
            (s ^ x, c)
        });
        diag.chain(off)
    }
}
