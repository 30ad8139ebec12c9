//! Composite Hilbert-space bookkeeping and sparse operator algebra.
//!
//! The registers are fixed by the physical setup: two optical modes (a1, a2),
//! two mechanical modes (b1, b2), each truncated at `n_max` excitations, and a
//! register of three-level V-type atoms. Basis kets are ordered
//! `|n_a1, n_a2; n_b1, n_b2; atom_0, atom_1, ...>` with `n_a1` the most
//! significant digit and the last atom the least significant, so indexing is
//! plain mixed-radix arithmetic and needs no stored tables.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;

/// Levels of a three-level V-type atom. `L1` and `L2` are the two upper
/// levels, `L3` the common lower level; the ordering `L1 < L2 < L3` is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomLevel {
    L1,
    L2,
    L3,
}

impl AtomLevel {
    pub const ALL: [AtomLevel; 3] = [AtomLevel::L1, AtomLevel::L2, AtomLevel::L3];

    pub fn index(self) -> usize {
        match self {
            AtomLevel::L1 => 0,
            AtomLevel::L2 => 1,
            AtomLevel::L3 => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }
}

impl fmt::Display for AtomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

/// The four bosonic modes: optical a1, a2 and mechanical b1, b2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BosonMode {
    A1,
    A2,
    B1,
    B2,
}

impl BosonMode {
    pub const ALL: [BosonMode; 4] = [BosonMode::A1, BosonMode::A2, BosonMode::B1, BosonMode::B2];

    pub fn index(self) -> usize {
        match self {
            BosonMode::A1 => 0,
            BosonMode::A2 => 1,
            BosonMode::B1 => 2,
            BosonMode::B2 => 3,
        }
    }
}

/// One composite basis ket: four bosonic occupations plus one level per atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisKet {
    /// Occupations in mode order a1, a2, b1, b2.
    pub modes: [u32; 4],
    pub atoms: Vec<AtomLevel>,
}

impl BasisKet {
    pub fn new(modes: [u32; 4], atoms: Vec<AtomLevel>) -> Self {
        Self { modes, atoms }
    }

    /// All modes in vacuum, atoms as given.
    pub fn vacuum(atoms: Vec<AtomLevel>) -> Self {
        Self::new([0; 4], atoms)
    }

    pub fn occupation(&self, mode: BosonMode) -> u32 {
        self.modes[mode.index()]
    }

    pub fn total_excitation(&self) -> u32 {
        self.modes.iter().sum()
    }
}

impl fmt::Display for BasisKet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "|{},{};{},{};",
            self.modes[0], self.modes[1], self.modes[2], self.modes[3]
        )?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ">")
    }
}

/// Default cap on the enumerated basis dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 1 << 22;

/// An enumerated composite basis: four bosonic modes truncated at `n_max`
/// plus `atom_count` three-level atoms. Indexing is bijective and
/// deterministic (see the module docs for the digit ordering).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisRegistry {
    n_max: u32,
    atom_count: usize,
    dim: usize,
}

impl BasisRegistry {
    pub fn new(n_max: u32, atom_count: usize) -> Result<Self> {
        Self::with_cap(n_max, atom_count, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(n_max: u32, atom_count: usize, cap: usize) -> Result<Self> {
        if atom_count == 0 {
            return Err(Error::NoAtoms);
        }
        let per_mode = n_max as u128 + 1;
        let mut dim: u128 = per_mode.pow(4);
        for _ in 0..atom_count {
            dim = dim.saturating_mul(3);
        }
        if dim > cap as u128 {
            return Err(Error::DimensionCap { dim, cap });
        }
        Ok(Self {
            n_max,
            atom_count,
            dim: dim as usize,
        })
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dense index of a ket. Errors if an occupation exceeds the truncation
    /// or the atom register has the wrong length.
    pub fn index_of(&self, ket: &BasisKet) -> Result<usize> {
        if ket.atoms.len() != self.atom_count {
            return Err(Error::AtomCountMismatch {
                got: ket.atoms.len(),
                expected: self.atom_count,
            });
        }
        let base = self.n_max as usize + 1;
        let mut idx = 0usize;
        for &n in &ket.modes {
            if n > self.n_max {
                return Err(Error::OccupationOutOfRange {
                    occupation: n,
                    n_max: self.n_max,
                });
            }
            idx = idx * base + n as usize;
        }
        for &a in &ket.atoms {
            idx = idx * 3 + a.index();
        }
        Ok(idx)
    }

    /// Ket at a dense index. Panics if `index >= dim`.
    pub fn ket_at(&self, index: usize) -> BasisKet {
        assert!(index < self.dim, "basis index {index} out of range");
        let mut rest = index;
        let mut atoms = vec![AtomLevel::L3; self.atom_count];
        for slot in atoms.iter_mut().rev() {
            *slot = AtomLevel::from_index(rest % 3).unwrap();
            rest /= 3;
        }
        let base = self.n_max as usize + 1;
        let mut modes = [0u32; 4];
        for slot in modes.iter_mut().rev() {
            *slot = (rest % base) as u32;
            rest /= base;
        }
        BasisKet::new(modes, atoms)
    }

    pub fn kets(&self) -> impl Iterator<Item = BasisKet> + '_ {
        (0..self.dim).map(|i| self.ket_at(i))
    }
}

/// A pure state over a [`BasisRegistry`], stored densely.
#[derive(Debug, Clone)]
pub struct StateVector {
    registry: BasisRegistry,
    amplitudes: Array1<C64>,
}

impl StateVector {
    pub fn zero(registry: BasisRegistry) -> Self {
        Self {
            amplitudes: Array1::zeros(registry.dim()),
            registry,
        }
    }

    /// The basis state `|ket>`.
    pub fn basis_state(registry: BasisRegistry, ket: &BasisKet) -> Result<Self> {
        let idx = registry.index_of(ket)?;
        let mut s = Self::zero(registry);
        s.amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(registry: BasisRegistry, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != registry.dim() {
            return Err(Error::AmplitudeLength {
                expected: registry.dim(),
                got: amplitudes.len(),
            });
        }
        Ok(Self {
            registry,
            amplitudes,
        })
    }

    pub fn registry(&self) -> &BasisRegistry {
        &self.registry
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, ket: &BasisKet) -> Result<C64> {
        Ok(self.amplitudes[self.registry.index_of(ket)?])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            registry: self.registry,
            amplitudes: self.amplitudes.mapv(|a| a / n),
        })
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.registry != other.registry {
            return Err(Error::RegistryMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Cap on the dimension for which a non-diagonal matrix exponential is
/// materialized densely.
pub const DENSE_EXPONENTIAL_CAP: usize = 1024;

/// A sparse complex operator over a [`BasisRegistry`].
///
/// Entries are kept in a `BTreeMap` keyed `(row, col)` so iteration order,
/// and therefore every accumulated floating-point sum, is reproducible
/// run to run. Exact zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    registry: BasisRegistry,
    entries: BTreeMap<(usize, usize), C64>,
}

impl OperatorMatrix {
    pub fn zero(registry: BasisRegistry) -> Self {
        Self {
            registry,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(registry: BasisRegistry) -> Self {
        let entries = (0..registry.dim())
            .map(|i| ((i, i), C64::new(1.0, 0.0)))
            .collect();
        Self { registry, entries }
    }

    /// Annihilation operator for one bosonic mode: `a|n> = sqrt(n) |n-1>`,
    /// with the top of the truncation mapping to zero under `a^dag`.
    pub fn annihilation(registry: BasisRegistry, mode: BosonMode) -> Self {
        let mut entries = BTreeMap::new();
        for col in 0..registry.dim() {
            let ket = registry.ket_at(col);
            let n = ket.occupation(mode);
            if n == 0 {
                continue;
            }
            let mut lowered = ket.clone();
            lowered.modes[mode.index()] = n - 1;
            let row = registry.index_of(&lowered).expect("lowered ket in range");
            entries.insert((row, col), C64::new(f64::from(n).sqrt(), 0.0));
        }
        Self { registry, entries }
    }

    pub fn creation(registry: BasisRegistry, mode: BosonMode) -> Self {
        Self::annihilation(registry, mode).adjoint()
    }

    /// The diagonal number operator `a^dag a` for one mode.
    pub fn number(registry: BasisRegistry, mode: BosonMode) -> Self {
        let mut entries = BTreeMap::new();
        for i in 0..registry.dim() {
            let n = registry.ket_at(i).occupation(mode);
            if n > 0 {
                entries.insert((i, i), C64::new(f64::from(n), 0.0));
            }
        }
        Self { registry, entries }
    }

    /// Atomic transition operator `|l><m|` acting on the indexed atom,
    /// identity on everything else.
    pub fn transition(
        registry: BasisRegistry,
        atom_index: usize,
        l: AtomLevel,
        m: AtomLevel,
    ) -> Result<Self> {
        if atom_index >= registry.atom_count() {
            return Err(Error::AtomIndex {
                index: atom_index,
                count: registry.atom_count(),
            });
        }
        let mut entries = BTreeMap::new();
        for col in 0..registry.dim() {
            let ket = registry.ket_at(col);
            if ket.atoms[atom_index] != m {
                continue;
            }
            let mut flipped = ket.clone();
            flipped.atoms[atom_index] = l;
            let row = registry.index_of(&flipped).expect("flipped ket in range");
            entries.insert((row, col), C64::new(1.0, 0.0));
        }
        Ok(Self { registry, entries })
    }

    pub fn registry(&self) -> &BasisRegistry {
        &self.registry
    }

    pub fn dim(&self) -> usize {
        self.registry.dim()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries
            .get(&(row, col))
            .copied()
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.entries.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    fn insert(&mut self, row: usize, col: usize, value: C64) {
        if value != C64::new(0.0, 0.0) {
            self.entries.insert((row, col), value);
        }
    }

    fn check_registry(&self, other: &Self) -> Result<()> {
        if self.registry != other.registry {
            return Err(Error::RegistryMismatch);
        }
        Ok(())
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_registry(other)?;
        let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (&(i, k), &va) in &self.entries {
            for (&(_, j), &vb) in other.entries.range((k, 0)..=(k, usize::MAX)) {
                *acc.entry((i, j)).or_insert(C64::new(0.0, 0.0)) += va * vb;
            }
        }
        acc.retain(|_, v| *v != C64::new(0.0, 0.0));
        Ok(Self {
            registry: self.registry,
            entries: acc,
        })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(&(r, c), &v)| ((c, r), v.conj()))
            .collect();
        Self {
            registry: self.registry,
            entries,
        }
    }

    /// `[self, other] = self*other - other*self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_registry(other)?;
        let mut out = self.clone();
        for (&(r, c), &v) in &other.entries {
            let slot = out.entries.entry((r, c)).or_insert(C64::new(0.0, 0.0));
            *slot += v;
            if *slot == C64::new(0.0, 0.0) {
                out.entries.remove(&(r, c));
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = Self::zero(self.registry);
        for (&(r, c), &v) in &self.entries {
            out.insert(r, c, v * factor);
        }
        out
    }

    /// Matrix-vector product on a state.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if self.registry != *state.registry() {
            return Err(Error::RegistryMismatch);
        }
        let mut out = Array1::<C64>::zeros(self.dim());
        for (&(r, c), &v) in &self.entries {
            out[r] += v * state.amplitudes()[c];
        }
        StateVector::from_amplitudes(self.registry, out)
    }

    /// One column of the operator, as `(row, value)` pairs in row order.
    pub fn column(&self, col: usize) -> Vec<(usize, C64)> {
        self.entries
            .iter()
            .filter(|(&(_, c), _)| c == col)
            .map(|(&(r, _), &v)| (r, v))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |A - A^dag|` over the support.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut res = 0.0f64;
        for (&(r, c), &v) in &self.entries {
            res = res.max((v - self.entry(c, r).conj()).norm());
        }
        res
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.keys().all(|&(r, c)| r == c)
    }

    pub fn is_finite(&self) -> bool {
        self.entries
            .values()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.dim(), self.dim()));
        for (&(r, c), &v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    pub fn from_dense(registry: BasisRegistry, dense: &Array2<C64>) -> Self {
        let mut out = Self::zero(registry);
        for ((r, c), &v) in dense.indexed_iter() {
            out.insert(r, c, v);
        }
        out
    }

    /// `exp(self * t)`.
    ///
    /// Diagonal operators are exponentiated entrywise (exact); anything else
    /// goes through the dense Pade route, which is capped at
    /// [`DENSE_EXPONENTIAL_CAP`] to keep accidental large-dimension calls
    /// from exhausting memory.
    pub fn matrix_exponential(&self, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::NonFiniteTime);
        }
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        if self.is_diagonal() {
            let mut out = Self::zero(self.registry);
            for i in 0..self.dim() {
                out.insert(i, i, (self.entry(i, i) * t).exp());
            }
            return Ok(out);
        }
        if self.dim() > DENSE_EXPONENTIAL_CAP {
            return Err(Error::DenseExponentialTooLarge {
                dim: self.dim(),
                cap: DENSE_EXPONENTIAL_CAP,
            });
        }
        let dense = self.to_dense() * C64::new(t, 0.0);
        Ok(Self::from_dense(self.registry, &linalg::expm(&dense)))
    }
}
