use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("basis dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: u128, cap: usize },

    #[error("registry must hold at least one atom")]
    NoAtoms,

    #[error("atom index {index} out of range for {count} atoms")]
    AtomIndex { index: usize, count: usize },

    #[error("occupation {occupation} exceeds the registry truncation n_max = {n_max}")]
    OccupationOutOfRange { occupation: u32, n_max: u32 },

    #[error("ket has {got} atoms, registry expects {expected}")]
    AtomCountMismatch { got: usize, expected: usize },

    #[error("operands live on different basis registries")]
    RegistryMismatch,

    #[error(
        "matrix exponential of a non-diagonal operator is limited to dimension {cap}, got {dim}"
    )]
    DenseExponentialTooLarge { dim: usize, cap: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("time argument is not finite")]
    NonFiniteTime,

    #[error("linear solve hit a (near-)singular pivot")]
    SingularMatrix,

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("state is not normalized: ||psi|| = {norm}")]
    NotNormalized { norm: f64 },

    #[error("bare frequencies are required for this operation but were not supplied")]
    MissingBareFrequencies,

    #[error("mechanical frequency must be positive, got {omega_m}")]
    NonPositiveOmegaM { omega_m: f64 },

    #[error("protocol mode requires {constraint}, violated by {residual:e}")]
    ProtocolModeViolation {
        constraint: &'static str,
        residual: f64,
    },

    #[error("resonance conditions violated: max residual {residual:e}")]
    ResonanceViolated { residual: f64 },

    #[error("harmonic frequency must be positive, got {frequency}")]
    NonPositiveFrequency { frequency: f64 },

    #[error("generator must be {dim}x{dim}, got {rows}x{cols}")]
    GeneratorShape {
        dim: usize,
        rows: usize,
        cols: usize,
    },

    #[error("generator is not anti-Hermitian: max |S + S^dag| = {residual:e}")]
    NotAntiHermitian { residual: f64 },

    #[error("subspace requires a registry with {expected} atoms and n_max >= {n_max_min}")]
    SubspaceRegistry { expected: usize, n_max_min: u32 },

    #[error("subspace is not closed: image of ket {ket_index} ({ket}) leaks with amplitude {residual:e}")]
    ClosureViolation {
        ket_index: usize,
        ket: String,
        residual: f64,
    },

    #[error("amplitude vector must have length {expected}, got {got}")]
    AmplitudeLength { expected: usize, got: usize },

    #[error("integration tolerance {tol:e} outside the supported range [{min:e}, {max:e}]")]
    ToleranceOutOfRange { tol: f64, min: f64, max: f64 },

    #[error("adaptive step size underflowed at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("projector matches no basis ket")]
    ProjectorMatchesNothing,

    #[error("post-selection residual has support outside the two-atom {{|13>, |31>}} span")]
    ResidualOutsideTwoAtomSpan,

    #[error("measured atom indices must be two distinct indices below {count}")]
    BadMeasuredPair { count: usize },

    #[error("stage-1 outcome has zero probability; branch coefficients undefined")]
    ZeroProbability,

    #[error("{quantity} = {value} outside [{lo}, {hi}]")]
    MetricRange {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("time grid must be finite and strictly ascending")]
    BadTimeGrid,

    #[error("sweep value list is empty")]
    EmptySweep,
}

pub type Result<T> = std::result::Result<T, Error>;
