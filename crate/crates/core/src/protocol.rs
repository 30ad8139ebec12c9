//! The full two-swap repeater protocol.
//!
//! Stage 1 evolves two independent four-atom blocks (identical dynamics, so
//! one trace serves both) and post-selects the interacting pair of each
//! block at a common handoff time `t`; the two block outcomes are treated as
//! independent post-selections at that shared time. Stage 2 re-enters the
//! same closed subspace with the middle pair relabeled to the freshly
//! interacting atoms, evolves under the identical generator, and
//! post-selects again, leaving the outermost pair. All times are
//! dimensionless (`lambda1 * t`).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::evolution::{
    build_s_matrix, AmplitudeVector, Propagator, SubspaceBasis11, SUBSPACE_DIM,
};
use crate::fock::AtomLevel;
use crate::hamiltonian::ProtocolParameters;
use crate::measurement::{post_select, MetricSample, ProjectorSpec};

use AtomLevel::{L1, L3};

/// Which stage-1 outcome pair seeds stage 2: the first label is the outcome
/// on the block holding the lower-numbered atoms, the second on the other
/// block. Outcome one heralds the measured pair in `(L3, L1)`, outcome two
/// in `(L1, L3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchId {
    OneOne,
    TwoTwo,
    OneTwo,
    TwoOne,
}

impl BranchId {
    pub const ALL: [BranchId; 4] = [
        BranchId::OneOne,
        BranchId::TwoTwo,
        BranchId::OneTwo,
        BranchId::TwoOne,
    ];

    /// 1-based branch number.
    pub fn number(self) -> u8 {
        match self {
            BranchId::OneOne => 1,
            BranchId::TwoTwo => 2,
            BranchId::OneTwo => 3,
            BranchId::TwoOne => 4,
        }
    }
}

/// The four complex weights of the stage-2 initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchCoefficients {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub lambda: C64,
}

impl BranchCoefficients {
    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr()
            + self.beta.norm_sqr()
            + self.gamma.norm_sqr()
            + self.lambda.norm_sqr()
    }
}

/// Compose the stage-2 initial weights from the complex stage-1 amplitudes
/// `a2`, `a10` (phases included: stage-2 interference depends on them).
pub fn branch_coefficients(id: BranchId, a2: C64, a10: C64) -> Result<BranchCoefficients> {
    let p = a2.norm_sqr() + a10.norm_sqr();
    if p == 0.0 {
        return Err(Error::ZeroProbability);
    }
    let aa = a2 * a2 / p;
    let bb = a2 * a10 / p;
    let cc = a10 * a10 / p;
    let coeffs = match id {
        BranchId::OneOne => BranchCoefficients {
            alpha: aa,
            beta: bb,
            gamma: bb,
            lambda: cc,
        },
        BranchId::TwoTwo => BranchCoefficients {
            alpha: cc,
            beta: bb,
            gamma: bb,
            lambda: aa,
        },
        BranchId::OneTwo => BranchCoefficients {
            alpha: bb,
            beta: aa,
            gamma: cc,
            lambda: bb,
        },
        BranchId::TwoOne => BranchCoefficients {
            alpha: bb,
            beta: cc,
            gamma: aa,
            lambda: bb,
        },
    };
    Ok(coeffs)
}

/// Stage-1 evolution results on a time grid.
#[derive(Debug, Clone)]
pub struct Stage1Trace {
    pub times: Vec<f64>,
    pub amplitudes: Vec<AmplitudeVector>,
    /// Metrics of the heralding outcome `(L3, L1)`.
    pub metrics: Vec<MetricSample>,
}

/// Stage-2 evolution results on a grid, with both final outcomes.
#[derive(Debug, Clone)]
pub struct Stage2Trace {
    pub times: Vec<f64>,
    pub amplitudes: Vec<AmplitudeVector>,
    /// Metrics of the `(L3, L1)` outcome: entropy and probability of the
    /// surviving outer pair.
    pub outcome_31: Vec<MetricSample>,
    /// Metrics of the `(L1, L3)` outcome (the primed family).
    pub outcome_13: Vec<MetricSample>,
}

/// One branch actually run through stage 2.
#[derive(Debug, Clone)]
pub struct BranchRun {
    pub id: BranchId,
    pub coefficients: BranchCoefficients,
    pub trace: Stage2Trace,
}

/// Stage-1 state of affairs at the handoff time.
#[derive(Debug, Clone)]
pub struct Handoff {
    pub time: f64,
    pub a2: C64,
    pub a10: C64,
    pub metric: MetricSample,
}

/// Everything the protocol produces for one parameter point.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub params: ProtocolParameters,
    pub stage1: Stage1Trace,
    pub handoff: Handoff,
    /// `None` when the stage-1 outcome probability vanishes at the handoff
    /// time, leaving every branch undefined there.
    pub branches: Option<Vec<BranchRun>>,
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty()
        || times.iter().any(|t| !t.is_finite())
        || times.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::BadTimeGrid);
    }
    Ok(())
}

/// Evolve the stage-1 initial state over a grid and extract the heralding
/// metrics at each time.
pub fn stage1(params: &ProtocolParameters, t_grid: &[f64]) -> Result<Stage1Trace> {
    check_grid(t_grid)?;
    params.validate_protocol_mode()?;
    let s = build_s_matrix(params)?;
    let (_, basis) = SubspaceBasis11::standard()?;
    let propagator = Propagator::new(&s);
    let x0 = AmplitudeVector::stage1_initial();
    let spec = ProjectorSpec::outcome_31();

    let mut amplitudes = Vec::with_capacity(t_grid.len());
    let mut metrics = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let x = propagator.apply(t, &x0);
        metrics.push(MetricSample::from_outcome(t, &x, &basis, &spec)?);
        amplitudes.push(x);
    }
    Ok(Stage1Trace {
        times: t_grid.to_vec(),
        amplitudes,
        metrics,
    })
}

/// Stage-2 initial amplitudes: the four weights placed on the vacuum kets
/// whose atom patterns are `(13;31)`, `(13;13)`, `(31;13)` and `(31;31)`.
fn stage2_initial(basis: &SubspaceBasis11, coeffs: &BranchCoefficients) -> Result<AmplitudeVector> {
    let slots = [
        (coeffs.beta, [L1, L3, L3, L1]),
        (coeffs.alpha, [L1, L3, L1, L3]),
        (coeffs.gamma, [L3, L1, L1, L3]),
        (coeffs.lambda, [L3, L1, L3, L1]),
    ];
    let mut v = ndarray::Array1::<C64>::zeros(SUBSPACE_DIM);
    for (weight, atoms) in slots {
        let k = basis
            .find([0; 4], atoms)
            .expect("vacuum pattern kets are part of the subspace");
        v[k] = weight;
    }
    AmplitudeVector::new(v)
}

/// Evolve one branch through stage 2 and extract both final outcomes at
/// each grid time.
pub fn stage2(
    params: &ProtocolParameters,
    coeffs: &BranchCoefficients,
    tau_grid: &[f64],
) -> Result<Stage2Trace> {
    check_grid(tau_grid)?;
    params.validate_protocol_mode()?;
    let s = build_s_matrix(params)?;
    let (_, basis) = SubspaceBasis11::standard()?;
    let y0 = stage2_initial(&basis, coeffs)?;
    let norm = y0.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm });
    }
    let propagator = Propagator::new(&s);
    stage2_on_propagator(&propagator, &basis, &y0, tau_grid)
}

fn stage2_on_propagator(
    propagator: &Propagator,
    basis: &SubspaceBasis11,
    y0: &AmplitudeVector,
    tau_grid: &[f64],
) -> Result<Stage2Trace> {
    let spec_31 = ProjectorSpec::outcome_31();
    let spec_13 = ProjectorSpec::outcome_13();
    let mut amplitudes = Vec::with_capacity(tau_grid.len());
    let mut outcome_31 = Vec::with_capacity(tau_grid.len());
    let mut outcome_13 = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        let y = propagator.apply(tau, y0);
        outcome_31.push(MetricSample::from_outcome(tau, &y, basis, &spec_31)?);
        outcome_13.push(MetricSample::from_outcome(tau, &y, basis, &spec_13)?);
        amplitudes.push(y);
    }
    Ok(Stage2Trace {
        times: tau_grid.to_vec(),
        amplitudes,
        outcome_31,
        outcome_13,
    })
}

/// Run the whole protocol: stage 1 up to the handoff time `t`, then all four
/// branches through stage 2 over `tau_grid`.
///
/// The stage-1 trace spans `[0, t]` with as many points as the tau grid.
pub fn run_protocol(
    params: &ProtocolParameters,
    t: f64,
    tau_grid: &[f64],
) -> Result<ProtocolResult> {
    check_grid(tau_grid)?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::BadTimeGrid);
    }
    let stage1_grid = if t == 0.0 {
        vec![0.0]
    } else {
        linspace(0.0, t, tau_grid.len().max(2))
    };
    let stage1 = stage1(params, &stage1_grid)?;

    let x_t = stage1.amplitudes.last().expect("grid is nonempty").clone();
    let (_, basis) = SubspaceBasis11::standard()?;
    let selection = post_select(&x_t, &basis, &ProjectorSpec::outcome_31())?;
    let handoff = Handoff {
        time: t,
        a2: selection.raw.c13,
        a10: selection.raw.c31,
        metric: *stage1.metrics.last().expect("grid is nonempty"),
    };

    let branches = if selection.probability == 0.0 {
        None
    } else {
        let s = build_s_matrix(params)?;
        let propagator = Propagator::new(&s);
        let mut runs = Vec::with_capacity(4);
        for id in BranchId::ALL {
            let coefficients = branch_coefficients(id, handoff.a2, handoff.a10)?;
            let y0 = stage2_initial(&basis, &coefficients)?;
            let trace = stage2_on_propagator(&propagator, &basis, &y0, tau_grid)?;
            runs.push(BranchRun {
                id,
                coefficients,
                trace,
            });
        }
        Some(runs)
    };

    Ok(ProtocolResult {
        params: *params,
        stage1,
        handoff,
        branches,
    })
}

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    OmegaM,
    G,
    HandoffTime,
}

/// Run the protocol once per value, order preserving.
pub fn sweep(
    base: &ProtocolParameters,
    vary: SweepParameter,
    values: &[f64],
    t: f64,
    tau_grid: &[f64],
) -> Result<Vec<ProtocolResult>> {
    if values.is_empty() {
        return Err(Error::EmptySweep);
    }
    let mut out = Vec::with_capacity(values.len());
    for &value in values {
        let result = match vary {
            SweepParameter::OmegaM => {
                let params = base.with_omega_m(value)?;
                run_protocol(&params, t, tau_grid)?
            }
            SweepParameter::G => {
                let params = base.with_g(value);
                params.validate_protocol_mode()?;
                run_protocol(&params, t, tau_grid)?
            }
            SweepParameter::HandoffTime => run_protocol(base, value, tau_grid)?,
        };
        out.push(result);
    }
    Ok(out)
}

/// Uniform grid including both endpoints.
pub fn linspace(start: f64, end: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2, "linspace needs at least two points");
    let step = (end - start) / (points - 1) as f64;
    (0..points)
        .map(|k| {
            if k == points - 1 {
                end
            } else {
                start + step * k as f64
            }
        })
        .collect()
}

/// First time the entropy trace drops below `threshold` after its first
/// local maximum. `None` when the trace has no local maximum or never
/// returns below the threshold. Undefined (zero-probability) samples never
/// count as a return.
pub fn first_recurrence_time(metrics: &[MetricSample], threshold: f64) -> Option<f64> {
    let e = |m: &MetricSample| m.entropy.unwrap_or(f64::NAN);
    let mut first_max = None;
    for k in 1..metrics.len().saturating_sub(1) {
        if e(&metrics[k]) >= e(&metrics[k - 1]) && e(&metrics[k]) > e(&metrics[k + 1]) {
            first_max = Some(k);
            break;
        }
    }
    let start = first_max?;
    metrics[start..]
        .iter()
        .find(|m| m.entropy.is_some_and(|v| v < threshold))
        .map(|m| m.time)
}

/// A contiguous run of grid samples with entropy below a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeathWindow {
    pub start: f64,
    /// Length measured as the union of grid cells anchored at each
    /// below-threshold sample.
    pub length: f64,
    /// Whether the entropy later exceeds the revival level.
    pub revives: bool,
}

/// Locate entanglement sudden-death windows: runs where the entropy sits
/// below `below` (after first having risen above it), together with whether
/// a revival above `revival` follows.
pub fn sudden_death_windows(
    metrics: &[MetricSample],
    below: f64,
    revival: f64,
) -> Vec<DeathWindow> {
    let n = metrics.len();
    let e = |k: usize| metrics[k].entropy.unwrap_or(f64::NAN);
    let mut windows = Vec::new();
    let mut k = 0;
    // skip the leading region where the entropy has not yet risen
    while k < n && (e(k).is_nan() || e(k) < below) {
        k += 1;
    }
    while k < n {
        if e(k) < below {
            let start = k;
            while k < n && e(k) < below {
                k += 1;
            }
            let end_time = if k < n {
                metrics[k].time
            } else {
                metrics[n - 1].time
            };
            let revives = (k..n).any(|j| e(j) > revival);
            windows.push(DeathWindow {
                start: metrics[start].time,
                length: end_time - metrics[start].time,
                revives,
            });
        } else {
            k += 1;
        }
    }
    windows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::evolve;
    use proptest::prelude::*;

    fn protocol(omega_m: f64, g: f64) -> ProtocolParameters {
        ProtocolParameters::protocol(omega_m, g).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn branch_one_with_vanishing_a10() {
        let coeffs = branch_coefficients(BranchId::OneOne, c(0.3, 0.4), c(0.0, 0.0)).unwrap();
        assert!((coeffs.alpha.norm() - 1.0).abs() < 1e-14);
        assert_eq!(coeffs.beta, c(0.0, 0.0));
        assert_eq!(coeffs.gamma, c(0.0, 0.0));
        assert_eq!(coeffs.lambda, c(0.0, 0.0));
    }

    #[test]
    fn branch_three_balanced_moduli() {
        let a = c(0.5, 0.0);
        let b = c(0.0, 0.5);
        let coeffs = branch_coefficients(BranchId::OneTwo, a, b).unwrap();
        for v in [coeffs.alpha, coeffs.beta, coeffs.gamma, coeffs.lambda] {
            assert!((v.norm() - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn branch_formulas_for_all_four_cases() {
        let a2 = c(0.4, 0.3);
        let a10 = c(-0.2, 0.5);
        let p = a2.norm_sqr() + a10.norm_sqr();
        let aa = a2 * a2 / p;
        let bb = a2 * a10 / p;
        let cc = a10 * a10 / p;
        let cases = [
            (BranchId::OneOne, (aa, bb, bb, cc)),
            (BranchId::TwoTwo, (cc, bb, bb, aa)),
            (BranchId::OneTwo, (bb, aa, cc, bb)),
            (BranchId::TwoOne, (bb, cc, aa, bb)),
        ];
        for (id, (alpha, beta, gamma, lambda)) in cases {
            let coeffs = branch_coefficients(id, a2, a10).unwrap();
            assert_eq!(coeffs.alpha, alpha, "{id:?} alpha");
            assert_eq!(coeffs.beta, beta, "{id:?} beta");
            assert_eq!(coeffs.gamma, gamma, "{id:?} gamma");
            assert_eq!(coeffs.lambda, lambda, "{id:?} lambda");
        }
    }

    #[test]
    fn cross_branches_degenerate_where_a10_vanishes() {
        // With G = 0 the tenth amplitude is (e^{-2 i t / omega} - 1)/4 and
        // vanishes at t = pi * omega * k; there branches 3 and 4 lose their
        // alpha and lambda weights entirely.
        let omega = 0.5;
        let p = protocol(omega, 0.0);
        let s = build_s_matrix(&p).unwrap();
        let t = std::f64::consts::PI * omega;
        let x = evolve(&s, &AmplitudeVector::stage1_initial(), t).unwrap();
        let (a2, a10) = (x.get(1), x.get(9));
        assert!(a10.norm() <= 1e-12, "|a10| = {:e}", a10.norm());
        for id in [BranchId::OneTwo, BranchId::TwoOne] {
            let coeffs = branch_coefficients(id, a2, a10).unwrap();
            assert!(coeffs.alpha.norm() <= 1e-12);
            assert!(coeffs.lambda.norm() <= 1e-12);
        }
    }

    #[test]
    fn branch_rejects_zero_probability() {
        assert!(matches!(
            branch_coefficients(BranchId::OneOne, c(0.0, 0.0), c(0.0, 0.0)),
            Err(Error::ZeroProbability)
        ));
    }

    #[test]
    fn stage1_initial_metrics() {
        let p = protocol(0.5, 2.0);
        let trace = stage1(&p, &[0.0, 0.1]).unwrap();
        let first = &trace.metrics[0];
        assert_eq!(first.entropy, Some(0.0));
        assert!((first.probability - 0.25).abs() < 1e-14);
    }

    #[test]
    fn stage1_keeps_first_amplitude_constant() {
        let p = protocol(0.5, 2.0);
        let grid = linspace(0.0, 20.0, 101);
        let trace = stage1(&p, &grid).unwrap();
        for x in &trace.amplitudes {
            assert_eq!(x.get(0), c(0.5, 0.0));
        }
    }

    #[test]
    fn stage1_rejects_bad_grid() {
        let p = protocol(0.5, 2.0);
        assert!(matches!(stage1(&p, &[]), Err(Error::BadTimeGrid)));
        assert!(matches!(stage1(&p, &[0.0, 0.0]), Err(Error::BadTimeGrid)));
        assert!(matches!(
            stage1(&p, &[0.0, f64::INFINITY]),
            Err(Error::BadTimeGrid)
        ));
    }

    #[test]
    fn stage2_at_zero_matches_branch_weights() {
        let p = protocol(0.5, 1.0);
        let t = 0.8;
        let s = build_s_matrix(&p).unwrap();
        let x = evolve(&s, &AmplitudeVector::stage1_initial(), t).unwrap();
        let (a2, a10) = (x.get(1), x.get(9));
        let coeffs = branch_coefficients(BranchId::OneOne, a2, a10).unwrap();
        let trace = stage2(&p, &coeffs, &[0.0, 0.4]).unwrap();

        let at0 = &trace.outcome_31[0];
        assert_eq!(at0.entropy, Some(0.0)); // B10(0) = 0
        assert!((at0.probability - coeffs.alpha.norm_sqr()).abs() < 1e-14);

        let at0p = &trace.outcome_13[0];
        assert_eq!(at0p.entropy, Some(0.0)); // B3(0) = 0
        assert!((at0p.probability - coeffs.lambda.norm_sqr()).abs() < 1e-14);
    }

    #[test]
    fn branch_equalities_on_a_grid() {
        // Outcome identities: E1 = E'2, E2 = E'1, E3 = E4 = E'3 = E'4,
        // same for the probabilities.
        let p = protocol(0.5, 1.0);
        let tau = linspace(0.0, 10.0, 101);
        let result = run_protocol(&p, 0.8, &tau).unwrap();
        let runs = result.branches.unwrap();
        let by_id = |id: BranchId| runs.iter().find(|r| r.id == id).unwrap();
        let b1 = by_id(BranchId::OneOne);
        let b2 = by_id(BranchId::TwoTwo);
        let b3 = by_id(BranchId::OneTwo);
        let b4 = by_id(BranchId::TwoOne);

        for k in 0..tau.len() {
            let pairs = [
                (&b1.trace.outcome_31[k], &b2.trace.outcome_13[k]),
                (&b2.trace.outcome_31[k], &b1.trace.outcome_13[k]),
                (&b3.trace.outcome_31[k], &b4.trace.outcome_31[k]),
                (&b3.trace.outcome_31[k], &b3.trace.outcome_13[k]),
                (&b3.trace.outcome_31[k], &b4.trace.outcome_13[k]),
            ];
            for (x, y) in pairs {
                assert!((x.probability - y.probability).abs() <= 1e-10);
                match (x.entropy, y.entropy) {
                    (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-10),
                    (None, None) => {}
                    _ => panic!("mismatched undefined entropies at k = {k}"),
                }
            }
        }
    }

    #[test]
    fn degenerate_branch_reduces_to_basis_restart() {
        // Branch one with a10 = 0 starts from the pure (13;13) ket, i.e.
        // the subspace unit vector e2; its dynamics must equal stage-1
        // dynamics restarted from that vector.
        let p = protocol(0.5, 2.0);
        let coeffs = branch_coefficients(BranchId::OneOne, c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let tau = linspace(0.0, 5.0, 41);
        let trace = stage2(&p, &coeffs, &tau).unwrap();

        let s = build_s_matrix(&p).unwrap();
        let e2 = AmplitudeVector::basis(1);
        for (k, &t) in tau.iter().enumerate() {
            let direct = evolve(&s, &e2, t).unwrap();
            assert!(trace.amplitudes[k].max_abs_diff(&direct) <= 1e-12);
        }
    }

    #[test]
    fn protocol_probabilities_are_complete() {
        let (_, basis) = SubspaceBasis11::standard().unwrap();
        let p = protocol(0.5, 1.0);
        let tau = linspace(0.0, 8.0, 33);
        let result = run_protocol(&p, 0.8, &tau).unwrap();
        for run in result.branches.unwrap() {
            for y in &run.trace.amplitudes {
                let total: f64 = crate::measurement::outcome_probabilities(y, &basis)
                    .iter()
                    .map(|(_, prob)| prob)
                    .sum();
                assert!((total - 1.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn sweep_singleton_matches_run_protocol() {
        let p = protocol(0.5, 2.0);
        let tau = linspace(0.0, 2.0, 11);
        let single = run_protocol(&p, 0.8, &tau).unwrap();
        let swept = sweep(&p, SweepParameter::OmegaM, &[0.5], 0.8, &tau).unwrap();
        assert_eq!(swept.len(), 1);
        let a = &single.stage1.metrics;
        let b = &swept[0].stage1.metrics;
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.probability, y.probability);
            assert_eq!(x.entropy, y.entropy);
        }
    }

    #[test]
    fn sweep_rejects_empty_values() {
        let p = protocol(0.5, 2.0);
        assert!(matches!(
            sweep(&p, SweepParameter::G, &[], 0.8, &[0.0, 1.0]),
            Err(Error::EmptySweep)
        ));
    }

    #[test]
    fn recurrence_and_death_window_helpers() {
        let mk = |t: f64, e: f64| MetricSample::new(t, Some(e), 0.2).unwrap();
        let metrics = vec![
            mk(0.0, 0.0),
            mk(0.1, 0.2),
            mk(0.2, 0.4), // first local max
            mk(0.3, 0.2),
            mk(0.4, 0.0005), // below threshold
            mk(0.5, 0.0004),
            mk(0.6, 0.3), // revival
        ];
        assert_eq!(first_recurrence_time(&metrics, 1e-3), Some(0.4));
        let windows = sudden_death_windows(&metrics, 1e-3, 0.1);
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].start, 0.4);
        assert!((windows[0].length - 0.2).abs() < 1e-12);
        assert!(windows[0].revives);

        let rising = vec![mk(0.0, 0.0), mk(0.1, 0.1), mk(0.2, 0.2)];
        assert_eq!(first_recurrence_time(&rising, 1e-3), None);
    }

    proptest! {
        #[test]
        fn branch_coefficients_are_normalized(
            re2 in -1.0f64..1.0, im2 in -1.0f64..1.0,
            re10 in -1.0f64..1.0, im10 in -1.0f64..1.0,
        ) {
            let a2 = c(re2, im2);
            let a10 = c(re10, im10);
            prop_assume!(a2.norm_sqr() + a10.norm_sqr() > 1e-9);
            for id in BranchId::ALL {
                let coeffs = branch_coefficients(id, a2, a10).unwrap();
                prop_assert!((coeffs.norm_sqr() - 1.0).abs() <= 1e-10);
            }
        }
    }
}
