//! State-vector simulation of a quantum repeater built from three identical
//! optomechanical cavities.
//!
//! Eight three-level V-type atoms start as four adjacent Bell-like pairs.
//! Two cavity interactions entangle the atom blocks (1-4) and (5-8) with
//! their optical and mechanical modes; projective measurements on the inner
//! pairs herald entangled (1,4) and (5,8) pairs. A final interaction between
//! atoms 4 and 5 plus one more measurement leaves the never-interacting far
//! atoms (1,8) entangled. The library covers the whole pipeline:
//!
//! * [`fock`] - truncated Fock x atomic basis bookkeeping and sparse
//!   operators;
//! * [`hamiltonian`] - the cavity Hamiltonian, its interaction picture, and
//!   the second-order effective Hamiltonian by two independent routes;
//! * [`evolution`] - the closed 11-ket subspace, its 11x11 generator (again
//!   by two routes), matrix-exponential propagation, and an adaptive
//!   Runge-Kutta oracle;
//! * [`measurement`] - projective post-selection, linear entropy, and
//!   success probability;
//! * [`protocol`] - the two-stage orchestration, branch bookkeeping, and
//!   parameter sweeps.
//!
//! All couplings are expressed in units of the primary atom-field coupling
//! and all times are dimensionless.
//!
//! # Example
//!
//! Evolve stage 1 and read off the heralded pair's entanglement:
//!
//! ```
//! use omcrep_core::{
//!     build_s_matrix, evolve, linear_entropy, post_select, AmplitudeVector,
//!     ProjectorSpec, ProtocolParameters, SubspaceBasis11,
//! };
//!
//! let params = ProtocolParameters::protocol(0.5, 2.0)?;
//! let s = build_s_matrix(&params)?;
//! let x = evolve(&s, &AmplitudeVector::stage1_initial(), 0.8)?;
//!
//! let (_, basis) = SubspaceBasis11::standard()?;
//! let outcome = post_select(&x, &basis, &ProjectorSpec::outcome_31())?;
//! let residual = outcome.residual.expect("nonzero probability");
//! let entropy = linear_entropy(&residual)?;
//! assert!(outcome.probability > 0.0 && entropy <= 0.5);
//! # Ok::<(), omcrep_core::Error>(())
//! ```

pub mod error;
pub mod evolution;
pub mod fock;
pub mod hamiltonian;
pub mod linalg;
pub mod measurement;
pub mod protocol;

pub use error::{Error, Result};
pub use evolution::{
    build_s_matrix, evolve, integrate_oracle, subspace_generator, AmplitudeVector, GeneratorMatrix,
    Propagator, SubspaceBasis11, SUBSPACE_DIM,
};
pub use fock::{AtomLevel, BasisKet, BasisRegistry, BosonMode, OperatorMatrix, StateVector};
pub use hamiltonian::{
    build_effective_hamiltonian, build_full_hamiltonian, harmonic_decomposition,
    interaction_picture_check, james_effective, verify_effective, BareFrequencies, HamiltonianPair,
    HarmonicTerm, ProtocolParameters,
};
pub use measurement::{
    linear_entropy, post_select, success_probability, MetricSample, PostSelection, ProjectorSpec,
    TwoAtomState,
};
pub use protocol::{
    branch_coefficients, run_protocol, stage1, stage2, sweep, BranchCoefficients, BranchId,
    ProtocolResult, Stage1Trace, Stage2Trace, SweepParameter,
};

/// The complex scalar used throughout.
pub type Complex = num_complex::Complex64;
