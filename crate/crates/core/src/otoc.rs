//! OTOC moment evaluation.
//!
//! With C = U^dag B U M, the moments <0|C^{2k}|0> are computed through the
//! measurement identity <0|C^{2k}|0> = <psi|M|psi> with psi = C^k|0>, valid
//! because M is Z-type (so M|0> = |0> and M^2 = 1) and U^dag B U is
//! Hermitian. The direct path (2k applications plus an overlap with |0>) is
//! kept as a cross-check, and the same identity evaluates the maximally
//! mixed moment Tr(C^{2k})/2^n one basis state at a time.

use crate::ensemble::Circuit;
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::rng::Xoshiro256StarStar;
use crate::statevector::{Direction, StateVector};

#[derive(Clone, Debug)]
pub struct CorrelatorSpec<'c> {
    pub circuit: &'c Circuit,
    pub butterfly: PauliString,
    pub measurement: PauliString,
    pub k: usize,
}

impl<'c> CorrelatorSpec<'c> {
    pub fn new(
        circuit: &'c Circuit,
        butterfly: PauliString,
        measurement: PauliString,
        k: usize,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidSpec(
                "k must be >= 1 (k = 0 is trivially 1)".into(),
            ));
        }
        if butterfly.is_empty() {
            return Err(Error::InvalidSpec("butterfly operator is empty".into()));
        }
        if measurement.is_empty() {
            return Err(Error::InvalidSpec("measurement operator is empty".into()));
        }
        if !measurement.is_z_type() {
            return Err(Error::InvalidSpec(
                "measurement operator must be Z-type".into(),
            ));
        }
        let n = circuit.n_qubits();
        butterfly.check_in_range(n)?;
        measurement.check_in_range(n)?;
        Ok(Self {
            circuit,
            butterfly,
            measurement,
            k,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.circuit.n_qubits()
    }
}

/// state <- U^dag B U M |state>.
pub fn apply_correlator(state: &mut StateVector, spec: &CorrelatorSpec<'_>) -> Result<()> {
    if state.n_qubits() != spec.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} qubits, circuit {}",
            state.n_qubits(),
            spec.n_qubits()
        )));
    }
    state.apply_pauli_string(&spec.measurement)?;
    state.apply_circuit(spec.circuit, Direction::Forward)?;
    state.apply_pauli_string(&spec.butterfly)?;
    state.apply_circuit(spec.circuit, Direction::Inverse)?;
    Ok(())
}

fn check_real_in_range(value: f64) -> Result<f64> {
    if value.abs() > 1.0 + 1e-9 {
        return Err(Error::InvalidSpec(format!(
            "moment {value} falls outside [-1, 1]"
        )));
    }
    Ok(value.clamp(-1.0, 1.0))
}

/// <0|C^{2k}|0> via the measurement identity: k applications of C, then
/// <psi|M|psi>.
pub fn otoc_moment(spec: &CorrelatorSpec<'_>) -> Result<f64> {
    let mut psi = StateVector::zero_state(spec.n_qubits())?;
    for _ in 0..spec.k {
        apply_correlator(&mut psi, spec)?;
    }
    check_real_in_range(psi.pauli_expectation(&spec.measurement)?)
}

/// <0|C^{2k}|0> by 2k applications of C and an overlap with |0>; cross-check
/// path for `otoc_moment`.
pub fn otoc_moment_direct(spec: &CorrelatorSpec<'_>) -> Result<num_complex::Complex64> {
    let zero = StateVector::zero_state(spec.n_qubits())?;
    let mut psi = zero.clone();
    for _ in 0..2 * spec.k {
        apply_correlator(&mut psi, spec)?;
    }
    zero.inner_product(&psi)
}

/// Time-ordered correlator <0|U^dag B U M|0>; complex in general.
pub fn time_ordered_correlator(
    circuit: &Circuit,
    butterfly: &PauliString,
    measurement: &PauliString,
) -> Result<num_complex::Complex64> {
    let n = circuit.n_qubits();
    butterfly.check_in_range(n)?;
    measurement.check_in_range(n)?;
    let zero = StateVector::zero_state(n)?;
    let mut psi = zero.clone();
    psi.apply_pauli_string(measurement)?;
    psi.apply_circuit(circuit, Direction::Forward)?;
    psi.apply_pauli_string(butterfly)?;
    psi.apply_circuit(circuit, Direction::Inverse)?;
    zero.inner_product(&psi)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub shots: u64,
    pub target_epsilon: Option<f64>,
}

/// Worst-case repetition count for additive error epsilon: ceil(1/eps^2).
pub fn shots_for_epsilon(epsilon: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok((1.0 / (epsilon * epsilon)).ceil() as u64)
}

/// Emulates the quantum estimator: measure the single Z-site of M on
/// psi = C^k|0>, `shots` times. Outcomes are Bernoulli draws from the exact
/// probability p = (1 + <psi|Z|psi>)/2.
pub fn shot_estimate(
    spec: &CorrelatorSpec<'_>,
    shots: u64,
    rng: &mut Xoshiro256StarStar,
) -> Result<ShotEstimate> {
    if shots == 0 {
        return Err(Error::InvalidSpec("shots must be >= 1".into()));
    }
    if spec.measurement.len() != 1 {
        return Err(Error::Unsupported(
            "shot estimator measures a single qubit; multi-site M is exact-path only".into(),
        ));
    }
    debug_assert!(spec.measurement.is_z_type());
    let mut psi = StateVector::zero_state(spec.n_qubits())?;
    for _ in 0..spec.k {
        apply_correlator(&mut psi, spec)?;
    }
    let z = check_real_in_range(psi.pauli_expectation(&spec.measurement)?)?;
    let p = ((1.0 + z) / 2.0).clamp(0.0, 1.0);
    let mut ones = 0u64;
    for _ in 0..shots {
        if rng.next_bernoulli(p) {
            ones += 1;
        }
    }
    let p_hat = ones as f64 / shots as f64;
    Ok(ShotEstimate {
        estimate: 2.0 * p_hat - 1.0,
        stderr: 2.0 * (p_hat * (1.0 - p_hat) / shots as f64).sqrt(),
        shots,
        target_epsilon: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceMethod {
    Exact,
    Stochastic { samples: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixedMoment {
    pub value: f64,
    pub stderr: Option<f64>,
}

/// Diagonal element <x|C^{2k}|x> = m_x <psi_x|M|psi_x> with psi_x = C^k|x>
/// and m_x the Z-eigenvalue of M on |x>.
fn diagonal_element(spec: &CorrelatorSpec<'_>, basis: u64) -> Result<f64> {
    let mut psi = StateVector::basis_state(spec.n_qubits(), basis)?;
    for _ in 0..spec.k {
        apply_correlator(&mut psi, spec)?;
    }
    let m_x = spec.measurement.z_eigenvalue(basis)?;
    check_real_in_range(m_x * psi.pauli_expectation(&spec.measurement)?)
}

/// Tr(C^{2k})/2^n: exact full-basis sum (n <= 14) or a uniform basis-state
/// sample average with its standard error.
pub fn mixed_state_moment(
    spec: &CorrelatorSpec<'_>,
    method: TraceMethod,
    rng: &mut Xoshiro256StarStar,
) -> Result<MixedMoment> {
    let n = spec.n_qubits();
    match method {
        TraceMethod::Exact => {
            if n > 14 {
                return Err(Error::Unsupported(format!(
                    "exact trace is capped at 14 qubits, got {n}"
                )));
            }
            let dim = 1u64 << n;
            let mut sum = 0.0;
            for x in 0..dim {
                sum += diagonal_element(spec, x)?;
            }
            Ok(MixedMoment {
                value: sum / dim as f64,
                stderr: None,
            })
        }
        TraceMethod::Stochastic { samples } => {
            if samples == 0 {
                return Err(Error::InvalidSpec("samples must be >= 1".into()));
            }
            let mut values = Vec::with_capacity(samples);
            for _ in 0..samples {
                let x = rng.next_bits(n as u32);
                values.push(diagonal_element(spec, x)?);
            }
            let mean = values.iter().sum::<f64>() / samples as f64;
            let stderr = if samples > 1 {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / (samples - 1) as f64;
                (var / samples as f64).sqrt()
            } else {
                0.0
            };
            Ok(MixedMoment {
                value: mean,
                stderr: Some(stderr),
            })
        }
    }
}
