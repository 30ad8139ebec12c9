//! Projective post-selection on the subspace and the two entanglement
//! metrics derived from the surviving two-atom state.
//!
//! "Entropy" here is the linear entropy `1 - Tr(rho^2)` of either residual
//! atom's reduced state, which for a two-component state caps at 1/2. It is
//! not the von Neumann entropy.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::evolution::{AmplitudeVector, SubspaceBasis11, SUBSPACE_DIM};
use crate::fock::AtomLevel;

/// A projective measurement outcome: fixed occupations for a subset of the
/// bosonic modes (`None` leaves a mode unconstrained) plus fixed levels for
/// one atom pair. The remaining (residual) atom pair is left untouched.
///
/// The tracked heralding outcomes constrain all four modes to vacuum even
/// though the second mode pair never leaves it on this subspace; that keeps
/// the projector well defined on larger registries. The equivalence with
/// the projector that names only the first mode pair is asserted by a test,
/// not assumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectorSpec {
    pub mode_occupations: [Option<u32>; 4],
    /// Indices of the measured atoms within the four-atom register.
    pub measured_atoms: (usize, usize),
    /// Required levels of the measured atoms, in index order.
    pub levels: (AtomLevel, AtomLevel),
}

impl ProjectorSpec {
    pub fn new(
        mode_occupations: [Option<u32>; 4],
        measured_atoms: (usize, usize),
        levels: (AtomLevel, AtomLevel),
    ) -> Result<Self> {
        if measured_atoms.0 == measured_atoms.1 || measured_atoms.0 >= 4 || measured_atoms.1 >= 4 {
            return Err(Error::BadMeasuredPair { count: 4 });
        }
        Ok(Self {
            mode_occupations,
            measured_atoms,
            levels,
        })
    }

    /// All modes in vacuum, measured pair = the interacting (middle) atoms.
    pub fn vacuum_outcome(levels: (AtomLevel, AtomLevel)) -> Self {
        Self {
            mode_occupations: [Some(0); 4],
            measured_atoms: (1, 2),
            levels,
        }
    }

    /// The heralding outcome `(L3, L1)` on the measured pair.
    pub fn outcome_31() -> Self {
        Self::vacuum_outcome((AtomLevel::L3, AtomLevel::L1))
    }

    /// The alternate heralding outcome `(L1, L3)`.
    pub fn outcome_13() -> Self {
        Self::vacuum_outcome((AtomLevel::L1, AtomLevel::L3))
    }

    fn matches(&self, ket: &crate::fock::BasisKet) -> bool {
        self.mode_occupations
            .iter()
            .zip(&ket.modes)
            .all(|(want, &have)| want.is_none_or(|n| n == have))
            && ket.atoms[self.measured_atoms.0] == self.levels.0
            && ket.atoms[self.measured_atoms.1] == self.levels.1
    }
}

/// Amplitudes of a two-atom state over `{|13>, |31>}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoAtomState {
    pub c13: C64,
    pub c31: C64,
}

impl TwoAtomState {
    pub fn new(c13: C64, c31: C64) -> Self {
        Self { c13, c31 }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c13.norm_sqr() + self.c31.norm_sqr()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            c13: self.c13 / n,
            c31: self.c31 / n,
        })
    }
}

/// Linear entropy of either reduced single-atom state:
/// `E = 1 - (|c13|^4 + |c31|^4) / (|c13|^2 + |c31|^2)^2`, in `[0, 1/2]`.
pub fn linear_entropy(state: &TwoAtomState) -> Result<f64> {
    let p13 = state.c13.norm_sqr();
    let p31 = state.c31.norm_sqr();
    let total = p13 + p31;
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(1.0 - (p13 * p13 + p31 * p31) / (total * total))
}

/// Success probability of the heralding outcome: the squared norm of the
/// unnormalized post-selected state.
pub fn success_probability(state: &TwoAtomState) -> f64 {
    state.norm_sqr()
}

/// Result of a post-selection.
#[derive(Debug, Clone)]
pub struct PostSelection {
    /// Probability of the heralding outcome.
    pub probability: f64,
    /// Surviving amplitudes before normalization, keyed to the residual
    /// pair in register order.
    pub raw: TwoAtomState,
    /// Normalized residual state; `None` flags a zero-probability outcome
    /// so sweeps over times where the probability vanishes do not abort.
    pub residual: Option<TwoAtomState>,
}

/// Apply a projector to a subspace state and relabel the surviving
/// amplitudes onto the unmeasured atom pair.
///
/// A spec matching no basis ket at all is an error, as distinct from a spec
/// that matches kets whose amplitudes happen to vanish.
pub fn post_select(
    state: &AmplitudeVector,
    basis: &SubspaceBasis11,
    spec: &ProjectorSpec,
) -> Result<PostSelection> {
    let residual_atoms: Vec<usize> = (0..4)
        .filter(|i| *i != spec.measured_atoms.0 && *i != spec.measured_atoms.1)
        .collect();

    let mut c13 = C64::new(0.0, 0.0);
    let mut c31 = C64::new(0.0, 0.0);
    let mut matched = false;
    for k in 0..SUBSPACE_DIM {
        let ket = basis.ket(k);
        if !spec.matches(ket) {
            continue;
        }
        matched = true;
        let pair = (ket.atoms[residual_atoms[0]], ket.atoms[residual_atoms[1]]);
        let amp = state.get(k);
        match pair {
            (AtomLevel::L1, AtomLevel::L3) => c13 += amp,
            (AtomLevel::L3, AtomLevel::L1) => c31 += amp,
            _ => {
                if amp.norm() > 0.0 {
                    return Err(Error::ResidualOutsideTwoAtomSpan);
                }
            }
        }
    }
    if !matched {
        return Err(Error::ProjectorMatchesNothing);
    }

    let raw = TwoAtomState::new(c13, c31);
    let probability = raw.norm_sqr();
    let residual = if probability == 0.0 {
        None
    } else {
        Some(raw.normalized()?)
    };
    Ok(PostSelection {
        probability,
        raw,
        residual,
    })
}

/// Probabilities of the complete family of measurement outcomes on the
/// measured subsystems (all mode occupations and measured-pair levels that
/// occur in the subspace basis). The probabilities sum to the squared norm
/// of the state.
pub fn outcome_probabilities(
    state: &AmplitudeVector,
    basis: &SubspaceBasis11,
) -> Vec<(ProjectorSpec, f64)> {
    let measured = basis.measured_pair();
    let mut sectors: BTreeMap<([u32; 4], (AtomLevel, AtomLevel)), f64> = BTreeMap::new();
    for k in 0..SUBSPACE_DIM {
        let ket = basis.ket(k);
        let key = (ket.modes, (ket.atoms[measured.0], ket.atoms[measured.1]));
        *sectors.entry(key).or_insert(0.0) += state.get(k).norm_sqr();
    }
    sectors
        .into_iter()
        .map(|((modes, levels), p)| {
            (
                ProjectorSpec {
                    mode_occupations: modes.map(Some),
                    measured_atoms: measured,
                    levels,
                },
                p,
            )
        })
        .collect()
}

/// One time sample of the entropy/success-probability pair.
///
/// The entropy is undefined exactly when the outcome probability vanishes;
/// that is represented, never a NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub time: f64,
    pub entropy: Option<f64>,
    pub probability: f64,
}

impl MetricSample {
    /// Build a sample, clamping float dust at the range edges and rejecting
    /// genuine range violations.
    pub fn new(time: f64, entropy: Option<f64>, probability: f64) -> Result<Self> {
        let entropy = entropy
            .map(|e| clamp_metric("entropy", e, 0.0, 0.5))
            .transpose()?;
        let probability = clamp_metric("probability", probability, 0.0, 1.0)?;
        Ok(Self {
            time,
            entropy,
            probability,
        })
    }

    /// Metrics of a heralding outcome on a subspace state.
    pub fn from_outcome(
        time: f64,
        state: &AmplitudeVector,
        basis: &SubspaceBasis11,
        spec: &ProjectorSpec,
    ) -> Result<Self> {
        let selection = post_select(state, basis, spec)?;
        let entropy = match &selection.residual {
            Some(residual) => Some(linear_entropy(residual)?),
            None => None,
        };
        Self::new(time, entropy, selection.probability)
    }
}

const METRIC_SLACK: f64 = 1e-9;

fn clamp_metric(quantity: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(lo - METRIC_SLACK..=hi + METRIC_SLACK).contains(&value) {
        return Err(Error::MetricRange {
            quantity,
            value,
            lo,
            hi,
        });
    }
    Ok(value.clamp(lo, hi))
}
