//! Hamiltonian construction for one optomechanical cavity hosting two
//! three-level V-type atoms.
//!
//! Three routes are provided and cross-checked against each other:
//!
//! * the full lab-frame pair `H0 + H1` (needs bare frequencies),
//! * its interaction picture, written as a single harmonic
//!   `h e^{-i w_M t} + h^dag e^{+i w_M t}` under the resonance conditions,
//! * the time-averaged second-order effective Hamiltonian, either built
//!   term by term ([`build_effective_hamiltonian`]) or generated from the
//!   harmonic decomposition as `(1/w_mn)[h_m^dag, h_n]` restricted to
//!   secular pairs ([`james_effective`]).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{AtomLevel, BasisRegistry, BosonMode, OperatorMatrix};

/// Residual allowed on the protocol-mode parameter identifications and on
/// the resonance conditions.
pub const PROTOCOL_TOL: f64 = 1e-12;

/// Bare (lab-frame) frequencies: three atomic levels, two optical modes,
/// two mechanical modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BareFrequencies {
    /// Level frequencies of L1, L2, L3.
    pub atomic: [f64; 3],
    /// Optical mode frequencies of a1, a2.
    pub optical: [f64; 2],
    /// Mechanical mode frequencies of b1, b2.
    pub mechanical: [f64; 2],
}

impl BareFrequencies {
    /// A resonance-satisfying assignment for a given mechanical frequency.
    ///
    /// Only the constraints matter, not the absolute scale; this picks the
    /// lower level at zero and well-separated optical frequencies.
    pub fn protocol_default(omega_m: f64) -> Self {
        let optical = [10.0 * omega_m, 12.0 * omega_m];
        Self {
            atomic: [optical[0] + omega_m, optical[1] + omega_m, 0.0],
            optical,
            mechanical: [omega_m, omega_m],
        }
    }

    /// Largest violation of the resonance conditions
    /// `w1~ - w3~ - W1 = w_M = w2~ - w3~ - W2` and `w_b1 = w_b2 = w_M`.
    pub fn resonance_residual(&self, omega_m: f64) -> f64 {
        let r1 = (self.atomic[0] - self.atomic[2] - self.optical[0] - omega_m).abs();
        let r2 = (self.atomic[1] - self.atomic[2] - self.optical[1] - omega_m).abs();
        let r3 = (self.mechanical[0] - omega_m).abs();
        let r4 = (self.mechanical[1] - omega_m).abs();
        r1.max(r2).max(r3).max(r4)
    }
}

/// Couplings and frequencies, all in units of the primary atom-field
/// coupling (`lambda1 = 1` by convention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParameters {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda1_prime: f64,
    pub lambda2_prime: f64,
    pub g: f64,
    pub g_prime: f64,
    pub omega_m: f64,
    pub bare: Option<BareFrequencies>,
}

impl ProtocolParameters {
    /// Protocol-mode parameters: `lambda1 = lambda2 = 1`, primed couplings
    /// equal to unprimed, `G' = G`.
    pub fn protocol(omega_m: f64, g: f64) -> Result<Self> {
        let p = Self {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda1_prime: 1.0,
            lambda2_prime: 1.0,
            g,
            g_prime: g,
            omega_m,
            bare: None,
        };
        p.validate_protocol_mode()?;
        Ok(p)
    }

    /// Replace the secondary coupling (primed copy kept equal).
    pub fn with_lambda2(mut self, lambda2: f64) -> Self {
        self.lambda2 = lambda2;
        self.lambda2_prime = lambda2;
        self
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self.g_prime = g;
        self
    }

    pub fn with_omega_m(mut self, omega_m: f64) -> Result<Self> {
        self.omega_m = omega_m;
        if let Some(b) = self.bare {
            // keep a consistent default assignment when one was attached
            if b == BareFrequencies::protocol_default(b.mechanical[0]) {
                self.bare = Some(BareFrequencies::protocol_default(omega_m));
            }
        }
        self.validate_protocol_mode()?;
        Ok(self)
    }

    pub fn with_bare(mut self, bare: BareFrequencies) -> Self {
        self.bare = Some(bare);
        self
    }

    pub fn with_default_bare(mut self) -> Self {
        self.bare = Some(BareFrequencies::protocol_default(self.omega_m));
        self
    }

    /// Check the protocol-mode identifications and, when bare frequencies
    /// are attached, the resonance conditions.
    pub fn validate_protocol_mode(&self) -> Result<()> {
        for v in [
            self.lambda1,
            self.lambda2,
            self.lambda1_prime,
            self.lambda2_prime,
            self.g,
            self.g_prime,
            self.omega_m,
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        if self.omega_m <= 0.0 {
            return Err(Error::NonPositiveOmegaM {
                omega_m: self.omega_m,
            });
        }
        let checks: [(&'static str, f64); 3] = [
            (
                "lambda_1 = lambda_1'",
                (self.lambda1 - self.lambda1_prime).abs(),
            ),
            (
                "lambda_2 = lambda_2'",
                (self.lambda2 - self.lambda2_prime).abs(),
            ),
            ("G = G'", (self.g - self.g_prime).abs()),
        ];
        for (constraint, residual) in checks {
            if residual > PROTOCOL_TOL {
                return Err(Error::ProtocolModeViolation {
                    constraint,
                    residual,
                });
            }
        }
        if let Some(bare) = &self.bare {
            let residual = bare.resonance_residual(self.omega_m);
            if residual > PROTOCOL_TOL {
                return Err(Error::ResonanceViolated { residual });
            }
        }
        Ok(())
    }
}

/// Free part and interaction part of the lab-frame Hamiltonian.
#[derive(Debug, Clone)]
pub struct HamiltonianPair {
    pub h0: OperatorMatrix,
    pub h1: OperatorMatrix,
}

/// One harmonic `h exp(-i w t) + h^dag exp(+i w t)` of an interaction-picture
/// Hamiltonian. The stored operator is the `exp(-i w t)` part.
#[derive(Debug, Clone)]
pub struct HarmonicTerm {
    pub operator: OperatorMatrix,
    pub frequency: f64,
}

fn sigma(
    registry: BasisRegistry,
    atom: usize,
    l: AtomLevel,
    m: AtomLevel,
) -> Result<OperatorMatrix> {
    OperatorMatrix::transition(registry, atom, l, m)
}

fn check_pair(registry: BasisRegistry, atoms: (usize, usize)) -> Result<()> {
    let count = registry.atom_count();
    if atoms.0 == atoms.1 || atoms.0 >= count || atoms.1 >= count {
        return Err(Error::BadMeasuredPair { count });
    }
    Ok(())
}

/// The full Hamiltonian for two interacting atoms in one cavity.
///
/// `H0` carries the bare atomic, optical and mechanical frequencies; `H1`
/// carries the dipole couplings of both atoms plus the radiation-pressure
/// couplings `-G n_a1 (b1 + b1^dag) - G' n_a2 (b2 + b2^dag)`.
pub fn build_full_hamiltonian(
    params: &ProtocolParameters,
    registry: BasisRegistry,
    interacting_atoms: (usize, usize),
) -> Result<HamiltonianPair> {
    check_pair(registry, interacting_atoms)?;
    let bare = params.bare.ok_or(Error::MissingBareFrequencies)?;
    let re = |x: f64| C64::new(x, 0.0);

    let mut h0 = OperatorMatrix::zero(registry);
    for atom in [interacting_atoms.0, interacting_atoms.1] {
        for (i, level) in AtomLevel::ALL.iter().enumerate() {
            h0 = h0.add(&sigma(registry, atom, *level, *level)?.scale(re(bare.atomic[i])))?;
        }
    }
    for (mode, w) in [
        (BosonMode::A1, bare.optical[0]),
        (BosonMode::A2, bare.optical[1]),
    ] {
        h0 = h0.add(&OperatorMatrix::number(registry, mode).scale(re(w)))?;
    }
    for (mode, w) in [
        (BosonMode::B1, bare.mechanical[0]),
        (BosonMode::B2, bare.mechanical[1]),
    ] {
        h0 = h0.add(&OperatorMatrix::number(registry, mode).scale(re(w)))?;
    }

    let a1 = OperatorMatrix::annihilation(registry, BosonMode::A1);
    let a2 = OperatorMatrix::annihilation(registry, BosonMode::A2);
    let b1 = OperatorMatrix::annihilation(registry, BosonMode::B1);
    let b2 = OperatorMatrix::annihilation(registry, BosonMode::B2);

    let mut h1 = OperatorMatrix::zero(registry);
    let dipole = |h1: OperatorMatrix,
                  lam: f64,
                  field: &OperatorMatrix,
                  atom,
                  upper|
     -> Result<OperatorMatrix> {
        let down = field.compose(&sigma(registry, atom, upper, AtomLevel::L3)?)?;
        h1.add(&down.add(&down.adjoint())?.scale(re(lam)))
    };
    h1 = dipole(h1, params.lambda1, &a1, interacting_atoms.0, AtomLevel::L1)?;
    h1 = dipole(h1, params.lambda2, &a2, interacting_atoms.0, AtomLevel::L2)?;
    h1 = dipole(
        h1,
        params.lambda1_prime,
        &a1,
        interacting_atoms.1,
        AtomLevel::L1,
    )?;
    h1 = dipole(
        h1,
        params.lambda2_prime,
        &a2,
        interacting_atoms.1,
        AtomLevel::L2,
    )?;

    let n1 = OperatorMatrix::number(registry, BosonMode::A1);
    let n2 = OperatorMatrix::number(registry, BosonMode::A2);
    h1 = h1.add(&n1.compose(&b1.add(&b1.adjoint())?)?.scale(re(-params.g)))?;
    h1 = h1.add(
        &n2.compose(&b2.add(&b2.adjoint())?)?
            .scale(re(-params.g_prime)),
    )?;

    Ok(HamiltonianPair { h0, h1 })
}

/// The single-harmonic decomposition of the interaction picture under the
/// resonance conditions: one term at frequency `w_M` whose `exp(+i w_M t)`
/// operator is
/// `lambda1 (a1 s13 + a1 s13') + lambda2 (a2 s23 + a2 s23') - G (n_a1 b1^dag + n_a2 b2^dag)`.
pub fn harmonic_decomposition(
    params: &ProtocolParameters,
    registry: BasisRegistry,
    interacting_atoms: (usize, usize),
) -> Result<Vec<HarmonicTerm>> {
    params.validate_protocol_mode()?;
    check_pair(registry, interacting_atoms)?;
    let re = |x: f64| C64::new(x, 0.0);

    let a1 = OperatorMatrix::annihilation(registry, BosonMode::A1);
    let a2 = OperatorMatrix::annihilation(registry, BosonMode::A2);
    let b1 = OperatorMatrix::annihilation(registry, BosonMode::B1);
    let b2 = OperatorMatrix::annihilation(registry, BosonMode::B2);
    let n1 = OperatorMatrix::number(registry, BosonMode::A1);
    let n2 = OperatorMatrix::number(registry, BosonMode::A2);

    let mut bracket = OperatorMatrix::zero(registry);
    for atom in [interacting_atoms.0, interacting_atoms.1] {
        bracket = bracket.add(
            &a1.compose(&sigma(registry, atom, AtomLevel::L1, AtomLevel::L3)?)?
                .scale(re(params.lambda1)),
        )?;
        bracket = bracket.add(
            &a2.compose(&sigma(registry, atom, AtomLevel::L2, AtomLevel::L3)?)?
                .scale(re(params.lambda2)),
        )?;
    }
    bracket = bracket.add(&n1.compose(&b1.adjoint())?.scale(re(-params.g)))?;
    bracket = bracket.add(&n2.compose(&b2.adjoint())?.scale(re(-params.g_prime)))?;

    Ok(vec![HarmonicTerm {
        operator: bracket.adjoint(),
        frequency: params.omega_m,
    }])
}

/// Result of [`interaction_picture_check`].
#[derive(Debug, Clone)]
pub struct InteractionPictureReport {
    /// `(t, max |conjugated - reconstructed|)` per sample.
    pub samples: Vec<(f64, f64)>,
    pub max_deviation: f64,
}

/// Compare `exp(i H0 t) H1 exp(-i H0 t)` against the phase-assigned harmonic
/// reconstruction at each sampled time. Report-only: a detuned `H0` shows up
/// as a large deviation, not an error.
pub fn interaction_picture_check(
    pair: &HamiltonianPair,
    terms: &[HarmonicTerm],
    t_samples: &[f64],
) -> Result<InteractionPictureReport> {
    let mut samples = Vec::with_capacity(t_samples.len());
    let mut max_deviation = 0.0f64;
    let generator = pair.h0.scale(C64::new(0.0, 1.0));
    for &t in t_samples {
        let u = generator.matrix_exponential(t)?;
        let conjugated = u.compose(&pair.h1)?.compose(&u.adjoint())?;

        let mut recon = OperatorMatrix::zero(*pair.h0.registry());
        for term in terms {
            let phase = C64::new(0.0, -term.frequency * t).exp();
            recon = recon.add(&term.operator.scale(phase))?;
            recon = recon.add(&term.operator.adjoint().scale(phase.conj()))?;
        }

        let dev = conjugated.sub(&recon)?.max_abs();
        max_deviation = max_deviation.max(dev);
        samples.push((t, dev));
    }
    Ok(InteractionPictureReport {
        samples,
        max_deviation,
    })
}

/// Time-averaged second-order effective Hamiltonian from a harmonic
/// decomposition: `sum_{m,n} (1/w_mn) [h_m^dag, h_n]` restricted to secular
/// pairs `w_m = w_n`, with `w_mn` the harmonic average of the two
/// frequencies.
pub fn james_effective(terms: &[HarmonicTerm]) -> Result<OperatorMatrix> {
    for term in terms {
        if !term.frequency.is_finite() || term.frequency <= 0.0 {
            return Err(Error::NonPositiveFrequency {
                frequency: term.frequency,
            });
        }
    }
    let registry = match terms.first() {
        Some(t) => *t.operator.registry(),
        None => return Err(Error::EmptySweep),
    };
    let mut h = OperatorMatrix::zero(registry);
    for tm in terms {
        for tn in terms {
            let secular =
                (tm.frequency - tn.frequency).abs() <= 1e-12 * tm.frequency.max(tn.frequency);
            if !secular {
                continue;
            }
            let w_mn = 2.0 / (1.0 / tm.frequency + 1.0 / tn.frequency);
            let comm = tm.operator.adjoint().commutator(&tn.operator)?;
            h = h.add(&comm.scale(C64::new(1.0 / w_mn, 0.0)))?;
        }
    }
    Ok(h)
}

/// The named terms of the effective Hamiltonian, direct construction.
///
/// Mode-1 terms carry `G`, mode-2 terms `G'` (equal in protocol mode, where
/// the familiar single-coupling form is recovered).
pub fn effective_terms(
    params: &ProtocolParameters,
    registry: BasisRegistry,
    interacting_atoms: (usize, usize),
) -> Result<Vec<(&'static str, OperatorMatrix)>> {
    params.validate_protocol_mode()?;
    check_pair(registry, interacting_atoms)?;
    let re = |x: f64| C64::new(x, 0.0);
    let w = params.omega_m;
    let (at_a, at_b) = interacting_atoms;

    let a1 = OperatorMatrix::annihilation(registry, BosonMode::A1);
    let a2 = OperatorMatrix::annihilation(registry, BosonMode::A2);
    let b1 = OperatorMatrix::annihilation(registry, BosonMode::B1);
    let b2 = OperatorMatrix::annihilation(registry, BosonMode::B2);
    let n1 = OperatorMatrix::number(registry, BosonMode::A1);
    let n2 = OperatorMatrix::number(registry, BosonMode::A2);

    let mut terms: Vec<(&'static str, OperatorMatrix)> = Vec::new();

    // Stark shifts: (lambda_i^2 / w) [s_ii + n_ai (s_ii - s_33)] per atom.
    for (name, lam, upper, n_op) in [
        ("stark_1", params.lambda1, AtomLevel::L1, &n1),
        ("stark_2", params.lambda2, AtomLevel::L2, &n2),
    ] {
        let mut term = OperatorMatrix::zero(registry);
        for atom in [at_a, at_b] {
            let s_uu = sigma(registry, atom, upper, upper)?;
            let s_33 = sigma(registry, atom, AtomLevel::L3, AtomLevel::L3)?;
            term = term.add(&s_uu)?;
            term = term.add(&n_op.compose(&s_uu.sub(&s_33)?)?)?;
        }
        terms.push((name, term.scale(re(lam * lam / w))));
    }

    // Excitation exchange between the two atoms.
    for (name, lam, upper) in [
        ("exchange_1", params.lambda1, AtomLevel::L1),
        ("exchange_2", params.lambda2, AtomLevel::L2),
    ] {
        let fwd = sigma(registry, at_a, upper, AtomLevel::L3)?.compose(&sigma(
            registry,
            at_b,
            AtomLevel::L3,
            upper,
        )?)?;
        let term = fwd.add(&fwd.adjoint())?;
        terms.push((name, term.scale(re(lam * lam / w))));
    }

    // Photon-number Kerr terms, one per optical mode.
    terms.push((
        "kerr_1",
        n1.compose(&n1)?.scale(re(-params.g * params.g / w)),
    ));
    terms.push((
        "kerr_2",
        n2.compose(&n2)?
            .scale(re(-params.g_prime * params.g_prime / w)),
    ));

    // Cross-mode exchange a1 a2^dag s_12 + h.c. on each atom.
    {
        let mut term = OperatorMatrix::zero(registry);
        for atom in [at_a, at_b] {
            let fwd = a1.compose(&a2.adjoint())?.compose(&sigma(
                registry,
                atom,
                AtomLevel::L1,
                AtomLevel::L2,
            )?)?;
            term = term.add(&fwd.add(&fwd.adjoint())?)?;
        }
        terms.push((
            "cross_mode",
            term.scale(re(params.lambda1 * params.lambda2 / w)),
        ));
    }

    // Optomechanical sidebands -(G lambda_i / w)(a_i b_i s_i3 + h.c.).
    for (name, g, lam, a_op, b_op, upper) in [
        (
            "sideband_1",
            params.g,
            params.lambda1,
            &a1,
            &b1,
            AtomLevel::L1,
        ),
        (
            "sideband_2",
            params.g_prime,
            params.lambda2,
            &a2,
            &b2,
            AtomLevel::L2,
        ),
    ] {
        let mut term = OperatorMatrix::zero(registry);
        for atom in [at_a, at_b] {
            let fwd = a_op
                .compose(b_op)?
                .compose(&sigma(registry, atom, upper, AtomLevel::L3)?)?;
            term = term.add(&fwd.add(&fwd.adjoint())?)?;
        }
        terms.push((name, term.scale(re(-g * lam / w))));
    }

    Ok(terms)
}

/// Direct term-by-term construction of the effective Hamiltonian for one
/// interacting atom pair. The same form serves both interaction stages.
pub fn build_effective_hamiltonian(
    params: &ProtocolParameters,
    registry: BasisRegistry,
    interacting_atoms: (usize, usize),
) -> Result<OperatorMatrix> {
    let mut h = OperatorMatrix::zero(registry);
    for (_, term) in effective_terms(params, registry, interacting_atoms)? {
        h = h.add(&term)?;
    }
    Ok(h)
}

/// Result of [`verify_effective`].
#[derive(Debug, Clone)]
pub struct EffectiveVerifyReport {
    /// Largest `|james - direct|` over interior rows and columns.
    pub max_deviation: f64,
    /// Number of interior basis states compared.
    pub interior_states: usize,
    pub no_interior_states: bool,
    /// Largest interior deviation restricted to each direct term's support.
    pub term_deviations: Vec<(&'static str, f64)>,
}

/// Compare the commutator-generated effective Hamiltonian with the direct
/// construction, elementwise, on interior states only (total bosonic
/// excitation at most `n_max - interior_margin`), so truncation-edge
/// artifacts of the commutator route are excluded.
///
/// A margin of `n_max` (or more) leaves nothing to compare and is flagged.
pub fn verify_effective(
    params: &ProtocolParameters,
    registry: BasisRegistry,
    interacting_atoms: (usize, usize),
    interior_margin: u32,
) -> Result<EffectiveVerifyReport> {
    let terms = harmonic_decomposition(params, registry, interacting_atoms)?;
    let james = james_effective(&terms)?;
    let direct = build_effective_hamiltonian(params, registry, interacting_atoms)?;
    let named = effective_terms(params, registry, interacting_atoms)?;

    if interior_margin >= registry.n_max() {
        return Ok(EffectiveVerifyReport {
            max_deviation: 0.0,
            interior_states: 0,
            no_interior_states: true,
            term_deviations: Vec::new(),
        });
    }
    let budget = registry.n_max() - interior_margin;
    let interior: Vec<bool> = (0..registry.dim())
        .map(|i| registry.ket_at(i).total_excitation() <= budget)
        .collect();
    let interior_states = interior.iter().filter(|&&b| b).count();

    let delta = james.sub(&direct)?;
    let mut max_deviation = 0.0f64;
    for (r, c, v) in delta.entries() {
        if interior[r] && interior[c] {
            max_deviation = max_deviation.max(v.norm());
        }
    }

    let term_deviations = named
        .iter()
        .map(|(name, term)| {
            let mut dev = 0.0f64;
            for (r, c, _) in term.entries() {
                if interior[r] && interior[c] {
                    dev = dev.max(delta.entry(r, c).norm());
                }
            }
            (*name, dev)
        })
        .collect();

    Ok(EffectiveVerifyReport {
        max_deviation,
        interior_states,
        no_interior_states: false,
        term_deviations,
    })
}
