//! Shared fixtures for the criterion benchmarks.

use omcrep_core::ProtocolParameters;

/// The figure-family default parameter point.
pub fn default_params() -> ProtocolParameters {
    ProtocolParameters::protocol(0.5, 2.0).expect("valid parameters")
}
